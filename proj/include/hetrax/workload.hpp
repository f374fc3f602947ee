#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetrax/platform.hpp"

namespace hetrax {

enum class BlockKind { EncoderDecoder, EncoderOnly, DecoderOnly };
enum class AttentionKind { MHA, MQA };
enum class LayerTopology { Sequential, ParallelAttention };

std::string to_string(BlockKind v);
std::string to_string(AttentionKind v);
std::string to_string(LayerTopology v);
BlockKind block_kind_from_string(const std::string& s);
AttentionKind attention_kind_from_string(const std::string& s);
LayerTopology layer_topology_from_string(const std::string& s);

/// Transformer hyperparameters. `ff_dim` defaults to 4 * d_model when zero.
struct ModelConfig {
    std::string name = "custom";
    std::int64_t num_layers = 1;
    std::int64_t d_model = 0;
    std::int64_t num_heads = 1;
    std::int64_t head_dim = 0;
    std::int64_t ff_dim = 0;
    std::int64_t seq_len = 0;
    BlockKind block_kind = BlockKind::EncoderOnly;
    AttentionKind attention = AttentionKind::MHA;
    LayerTopology topology = LayerTopology::Sequential;
    int precision_bits = 16;

    void validate() const;
    std::int64_t bytes_per_value() const { return precision_bits / 8; }
    /// Blocks carrying an FF network (encoder-decoder doubles the stack).
    std::int64_t ff_blocks() const;
    /// Attention blocks, counting decoder cross-attention.
    std::int64_t attention_blocks() const;
};

/// Named models: bert-tiny, bert-base, bert-large, bart-base, bart-large.
std::vector<ModelConfig> model_zoo(std::int64_t seq_len = 512);
ModelConfig zoo_model(const std::string& name, std::int64_t seq_len = 512);

struct ElementwiseCosts {
    std::int64_t softmax_ops_per_element = 5;    ///< max-subtract, exp, sum, divide, scale
    std::int64_t layernorm_ops_per_element = 8;
};

// ===========================================================================
// Kernel graph
// ===========================================================================

enum class KernelClass { EMBED, MHA1, MHA2, MHA3, MHA4, LNORM1, FF1, FF2, LNORM2 };
enum class Projection { None, Q, K, V };

std::string to_string(KernelClass v);
std::string to_string(Projection v);
bool is_gemm_class(KernelClass v);

struct GemmDims {
    std::int64_t m = 0;
    std::int64_t k = 0;
    std::int64_t p = 0;
};

struct KernelOp {
    int id = 0;
    KernelClass kind = KernelClass::EMBED;
    int layer = 0;
    std::optional<int> head;  ///< absent for whole-layer ops and MQA shared K/V
    Projection projection = Projection::None;
    bool cross_attention = false;
    std::optional<GemmDims> gemm;
    std::int64_t elementwise_count = 0;
    std::int64_t flops = 0;  ///< 2mkp for GEMM ops, elementwise count otherwise
    std::int64_t input_bytes = 0;
    std::int64_t output_bytes = 0;
    std::int64_t weight_bytes = 0;
    std::vector<int> deps;

    std::string label() const;
    std::int64_t gemm_flops() const { return gemm ? 2 * gemm->m * gemm->k * gemm->p : 0; }
};

struct AttentionBlockOps {
    bool cross = false;
    std::vector<int> mha1;  ///< per-head Q,K,V (MQA: per-head Q plus shared K,V)
    std::vector<int> mha2;  ///< one per head
    std::vector<int> mha3;  ///< one per head
    int mha4 = -1;
    int lnorm1 = -1;
};

struct LayerOps {
    std::vector<AttentionBlockOps> attention;  ///< 1, or 2 for decoder layers with cross-attention
    int ff1 = -1;
    int ff2 = -1;
    int lnorm2 = -1;
    bool decoder = false;
};

struct KernelGraph {
    ModelConfig model;
    std::vector<KernelOp> ops;  ///< ops[i].id == i, topologically ordered
    int embed = -1;
    std::vector<LayerOps> layers;

    std::int64_t total_gemm_flops() const;
    std::int64_t total_elementwise() const;
    std::int64_t class_flops(KernelClass kind) const;
};

KernelGraph build_kernel_graph(const ModelConfig& model, const ElementwiseCosts& costs = {});

/// GEMM FLOPs of FF1+FF2 over all GEMM FLOPs.
double ff_gemm_fraction(const KernelGraph& graph);

/// Analytic GEMM FLOP totals.
struct ClosedFormFlops {
    std::int64_t mha_per_block = 0;  ///< MHA-1..4 of one attention block
    std::int64_t ff_per_block = 0;   ///< FF-1 + FF-2 of one FF block
    std::int64_t total = 0;
};
ClosedFormFlops closed_form_flops(const ModelConfig& model);

// ===========================================================================
// ReRAM rewrite accounting
// ===========================================================================

enum class RewritePolicy { AttentionOnReram, FfOnReram };
std::string to_string(RewritePolicy v);

struct RewriteReport {
    RewritePolicy policy = RewritePolicy::AttentionOnReram;
    std::int64_t cells_per_entry = 0;
    std::int64_t cells_per_crossbar = 0;
    std::int64_t tier_cells = 0;
    /// Per-cell counting model: individual cell programming events per inference.
    std::int64_t cell_writes = 0;
    /// Crossbar-granularity counting model: ceil(cell writes / cells per crossbar).
    std::int64_t crossbar_writes = 0;
    double writes_per_cell = 0.0;
    double lifetime_inferences = 0.0;
    bool depends_on_seq_len = false;
};

RewriteReport reram_rewrite_report(const ModelConfig& model, const ReramParams& crossbar, int reram_cores,
                                   RewritePolicy policy);

}  // namespace hetrax
