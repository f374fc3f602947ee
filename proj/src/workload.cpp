#include "hetrax/workload.hpp"

#include <algorithm>

#include "hetrax/common.hpp"

namespace hetrax {

std::string to_string(BlockKind v) {
    switch (v) {
        case BlockKind::EncoderDecoder: return "encoder-decoder";
        case BlockKind::EncoderOnly: return "encoder-only";
        case BlockKind::DecoderOnly: return "decoder-only";
    }
    return "?";
}

std::string to_string(AttentionKind v) {
    return v == AttentionKind::MHA ? "mha" : "mqa";
}

std::string to_string(LayerTopology v) {
    return v == LayerTopology::Sequential ? "sequential" : "parallel-attention";
}

BlockKind block_kind_from_string(const std::string& s) {
    if (s == "encoder-decoder") return BlockKind::EncoderDecoder;
    if (s == "encoder-only") return BlockKind::EncoderOnly;
    if (s == "decoder-only") return BlockKind::DecoderOnly;
    throw Error("unknown block kind '" + s + "'");
}

AttentionKind attention_kind_from_string(const std::string& s) {
    if (s == "mha" || s == "MHA") return AttentionKind::MHA;
    if (s == "mqa" || s == "MQA") return AttentionKind::MQA;
    throw Error("unknown attention kind '" + s + "'");
}

LayerTopology layer_topology_from_string(const std::string& s) {
    if (s == "sequential") return LayerTopology::Sequential;
    if (s == "parallel-attention" || s == "parallel") return LayerTopology::ParallelAttention;
    throw Error("unknown layer topology '" + s + "'");
}

std::string to_string(KernelClass v) {
    switch (v) {
        case KernelClass::EMBED: return "EMBED";
        case KernelClass::MHA1: return "MHA1";
        case KernelClass::MHA2: return "MHA2";
        case KernelClass::MHA3: return "MHA3";
        case KernelClass::MHA4: return "MHA4";
        case KernelClass::LNORM1: return "LNORM1";
        case KernelClass::FF1: return "FF1";
        case KernelClass::FF2: return "FF2";
        case KernelClass::LNORM2: return "LNORM2";
    }
    return "?";
}

std::string to_string(Projection v) {
    switch (v) {
        case Projection::None: return "";
        case Projection::Q: return "Q";
        case Projection::K: return "K";
        case Projection::V: return "V";
    }
    return "?";
}

bool is_gemm_class(KernelClass v) {
    switch (v) {
        case KernelClass::MHA1:
        case KernelClass::MHA2:
        case KernelClass::MHA3:
        case KernelClass::MHA4:
        case KernelClass::FF1:
        case KernelClass::FF2:
            return true;
        default:
            return false;
    }
}

std::string to_string(RewritePolicy v) {
    return v == RewritePolicy::AttentionOnReram ? "attention-on-reram" : "ff-on-reram";
}

// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
    const std::string who = "model '" + name + "'";
    if (num_layers < 0) throw Error(who + ": num_layers must be >= 0");
    if (seq_len < 1) throw Error(who + ": seq_len must be >= 1");
    if (d_model < 1) throw Error(who + ": d_model must be >= 1");
    if (num_heads < 1) throw Error(who + ": num_heads must be >= 1");
    if (ff_dim < 1) throw Error(who + ": ff_dim must be >= 1");
    if (d_model % num_heads != 0) {
        throw Error(who + ": d_model " + std::to_string(d_model) + " not divisible by num_heads " +
                    std::to_string(num_heads));
    }
    if (head_dim * num_heads != d_model) {
        throw Error(who + ": d_model must equal num_heads * head_dim");
    }
    if (precision_bits != 8 && precision_bits != 16 && precision_bits != 32) {
        throw Error(who + ": precision_bits must be 8, 16 or 32");
    }
}

std::int64_t ModelConfig::ff_blocks() const {
    return block_kind == BlockKind::EncoderDecoder ? 2 * num_layers : num_layers;
}

std::int64_t ModelConfig::attention_blocks() const {
    return block_kind == BlockKind::EncoderDecoder ? 3 * num_layers : num_layers;
}

namespace {

ModelConfig make_model(std::string name, std::int64_t layers, std::int64_t d, std::int64_t h, std::int64_t ff,
                       BlockKind kind, std::int64_t n) {
    ModelConfig m;
    m.name = std::move(name);
    m.num_layers = layers;
    m.d_model = d;
    m.num_heads = h;
    m.head_dim = d / h;
    m.ff_dim = ff;
    m.seq_len = n;
    m.block_kind = kind;
    return m;
}

}  // namespace

std::vector<ModelConfig> model_zoo(std::int64_t seq_len) {
    return {
        make_model("bert-tiny", 2, 128, 2, 512, BlockKind::EncoderOnly, seq_len),
        make_model("bert-base", 12, 768, 12, 3072, BlockKind::EncoderOnly, seq_len),
        make_model("bert-large", 24, 1024, 16, 4096, BlockKind::EncoderOnly, seq_len),
        make_model("bart-base", 6, 768, 12, 3072, BlockKind::EncoderDecoder, seq_len),
        make_model("bart-large", 12, 1024, 16, 4096, BlockKind::EncoderDecoder, seq_len),
    };
}

ModelConfig zoo_model(const std::string& name, std::int64_t seq_len) {
    for (auto& m : model_zoo(seq_len)) {
        if (m.name == name) return m;
    }
    throw Error("unknown model '" + name + "'");
}

// ===========================================================================
// Graph construction
// ===========================================================================

std::string KernelOp::label() const {
    if (kind == KernelClass::EMBED) return "EMBED";
    std::string s = "L" + std::to_string(layer) + (cross_attention ? ".x" : "") + "." + to_string(kind);
    if (head) {
        s += ".h" + std::to_string(*head);
    } else if (projection != Projection::None) {
        s += ".shared";
    }
    if (projection != Projection::None) s += "." + to_string(projection);
    return s;
}

std::int64_t KernelGraph::total_gemm_flops() const {
    std::int64_t total = 0;
    for (const auto& op : ops) total += op.gemm_flops();
    return total;
}

std::int64_t KernelGraph::total_elementwise() const {
    std::int64_t total = 0;
    for (const auto& op : ops) total += op.elementwise_count;
    return total;
}

std::int64_t KernelGraph::class_flops(KernelClass kind) const {
    std::int64_t total = 0;
    for (const auto& op : ops) {
        if (op.kind == kind) total += op.flops;
    }
    return total;
}

namespace {

class GraphBuilder {
public:
    GraphBuilder(const ModelConfig& m, const ElementwiseCosts& c) : m_(m), c_(c), B_(m.bytes_per_value()) {
        g_.model = m;
    }

    KernelGraph build() {
        const auto n = m_.seq_len;
        const auto d = m_.d_model;
        const std::int64_t stacks = m_.block_kind == BlockKind::EncoderDecoder ? 2 : 1;
        if (m_.num_layers == 0) return std::move(g_);

        KernelOp embed;
        embed.kind = KernelClass::EMBED;
        embed.input_bytes = n * d * B_;
        embed.output_bytes = n * d * B_;
        g_.embed = push(std::move(embed));

        int prev = g_.embed;
        int encoder_out = -1;
        int layer = 0;
        for (std::int64_t stack = 0; stack < stacks; ++stack) {
            const bool decoder = stack == 1;
            if (decoder) {
                encoder_out = prev;
                prev = g_.embed;
            }
            for (std::int64_t l = 0; l < m_.num_layers; ++l, ++layer) {
                LayerOps lo;
                lo.decoder = decoder;
                lo.attention.push_back(attention_block(layer, prev, prev, false));
                if (decoder) {
                    lo.attention.push_back(attention_block(layer, lo.attention.back().lnorm1, encoder_out, true));
                }
                const int attn_out = lo.attention.back().lnorm1;
                const bool parallel = m_.topology == LayerTopology::ParallelAttention;

                KernelOp ff1;
                ff1.kind = KernelClass::FF1;
                ff1.layer = layer;
                ff1.gemm = GemmDims{n, d, m_.ff_dim};
                ff1.input_bytes = n * d * B_;
                ff1.weight_bytes = d * m_.ff_dim * B_;
                ff1.output_bytes = n * m_.ff_dim * B_;
                ff1.deps = {parallel ? prev : attn_out};
                lo.ff1 = push(std::move(ff1));

                KernelOp ff2;
                ff2.kind = KernelClass::FF2;
                ff2.layer = layer;
                ff2.gemm = GemmDims{n, m_.ff_dim, d};
                ff2.input_bytes = n * m_.ff_dim * B_;
                ff2.weight_bytes = m_.ff_dim * d * B_;
                ff2.output_bytes = n * d * B_;
                ff2.deps = {lo.ff1};
                lo.ff2 = push(std::move(ff2));

                KernelOp ln2 = layernorm(KernelClass::LNORM2, layer);
                ln2.deps = {lo.ff2};
                if (parallel) ln2.deps.push_back(attn_out);
                lo.lnorm2 = push(std::move(ln2));

                prev = lo.lnorm2;
                g_.layers.push_back(std::move(lo));
            }
        }
        return std::move(g_);
    }

private:
    int push(KernelOp op) {
        op.id = static_cast<int>(g_.ops.size());
        if (op.gemm) op.flops = op.gemm_flops();
        else op.flops = op.elementwise_count;
        g_.ops.push_back(std::move(op));
        return g_.ops.back().id;
    }

    KernelOp layernorm(KernelClass kind, int layer) const {
        KernelOp op;
        op.kind = kind;
        op.layer = layer;
        op.elementwise_count = c_.layernorm_ops_per_element * m_.seq_len * m_.d_model;
        op.input_bytes = m_.seq_len * m_.d_model * B_;
        op.output_bytes = m_.seq_len * m_.d_model * B_;
        return op;
    }

    int projection(int layer, std::optional<int> head, Projection p, bool cross, int src) {
        const auto n = m_.seq_len;
        const auto d = m_.d_model;
        const auto dk = m_.head_dim;
        KernelOp op;
        op.kind = KernelClass::MHA1;
        op.layer = layer;
        op.head = head;
        op.projection = p;
        op.cross_attention = cross;
        op.gemm = GemmDims{n, d, dk};
        op.input_bytes = n * d * B_;
        op.weight_bytes = d * dk * B_;
        op.output_bytes = n * dk * B_;
        op.deps = {src};
        return push(std::move(op));
    }

    AttentionBlockOps attention_block(int layer, int q_src, int kv_src, bool cross) {
        const auto n = m_.seq_len;
        const auto d = m_.d_model;
        const auto dk = m_.head_dim;
        const auto h = m_.num_heads;
        AttentionBlockOps blk;
        blk.cross = cross;

        std::vector<int> q(h), k(h), v(h);
        int k_shared = -1;
        int v_shared = -1;
        if (m_.attention == AttentionKind::MQA) {
            k_shared = projection(layer, std::nullopt, Projection::K, cross, kv_src);
            v_shared = projection(layer, std::nullopt, Projection::V, cross, kv_src);
            blk.mha1.push_back(k_shared);
            blk.mha1.push_back(v_shared);
        }
        for (int i = 0; i < h; ++i) {
            q[i] = projection(layer, i, Projection::Q, cross, q_src);
            blk.mha1.push_back(q[i]);
            if (m_.attention == AttentionKind::MHA) {
                k[i] = projection(layer, i, Projection::K, cross, kv_src);
                v[i] = projection(layer, i, Projection::V, cross, kv_src);
                blk.mha1.push_back(k[i]);
                blk.mha1.push_back(v[i]);
            } else {
                k[i] = k_shared;
                v[i] = v_shared;
            }
        }
        for (int i = 0; i < h; ++i) {
            KernelOp s;
            s.kind = KernelClass::MHA2;
            s.layer = layer;
            s.head = i;
            s.cross_attention = cross;
            s.gemm = GemmDims{n, dk, n};
            s.elementwise_count = c_.softmax_ops_per_element * n * n;
            s.input_bytes = 2 * n * dk * B_;
            s.output_bytes = n * n * B_;
            s.deps = {q[i], k[i]};
            blk.mha2.push_back(push(std::move(s)));
        }
        for (int i = 0; i < h; ++i) {
            KernelOp o;
            o.kind = KernelClass::MHA3;
            o.layer = layer;
            o.head = i;
            o.cross_attention = cross;
            o.gemm = GemmDims{n, n, dk};
            o.input_bytes = n * n * B_ + n * dk * B_;
            o.output_bytes = n * dk * B_;
            o.deps = {blk.mha2[i], v[i]};
            blk.mha3.push_back(push(std::move(o)));
        }
        KernelOp out;
        out.kind = KernelClass::MHA4;
        out.layer = layer;
        out.cross_attention = cross;
        out.gemm = GemmDims{n, d, d};
        out.input_bytes = n * d * B_;
        out.weight_bytes = d * d * B_;
        out.output_bytes = n * d * B_;
        out.deps = blk.mha3;
        blk.mha4 = push(std::move(out));

        KernelOp ln = layernorm(KernelClass::LNORM1, layer);
        ln.cross_attention = cross;
        ln.deps = {blk.mha4};
        blk.lnorm1 = push(std::move(ln));
        return blk;
    }

    const ModelConfig& m_;
    const ElementwiseCosts& c_;
    const std::int64_t B_;
    KernelGraph g_;
};

}  // namespace

KernelGraph build_kernel_graph(const ModelConfig& model, const ElementwiseCosts& costs) {
    model.validate();
    return GraphBuilder(model, costs).build();
}

double ff_gemm_fraction(const KernelGraph& graph) {
    std::int64_t ff = 0;
    std::int64_t total = 0;
    for (const auto& op : graph.ops) {
        total += op.gemm_flops();
        if (op.kind == KernelClass::FF1 || op.kind == KernelClass::FF2) ff += op.gemm_flops();
    }
    return total > 0 ? static_cast<double>(ff) / static_cast<double>(total) : 0.0;
}

ClosedFormFlops closed_form_flops(const ModelConfig& m) {
    const auto n = m.seq_len;
    const auto d = m.d_model;
    const auto h = m.num_heads;
    const auto dk = m.head_dim;
    const std::int64_t projections = m.attention == AttentionKind::MHA ? 3 * h : h + 2;
    ClosedFormFlops f;
    f.mha_per_block = projections * 2 * n * d * dk  // MHA-1
                      + 2 * (2 * h * n * n * dk)    // MHA-2 and MHA-3
                      + 2 * n * d * d;              // MHA-4
    f.ff_per_block = 2 * (2 * n * d * m.ff_dim);
    f.total = m.attention_blocks() * f.mha_per_block + m.ff_blocks() * f.ff_per_block;
    return f;
}

// ===========================================================================
// Rewrite accounting
// ===========================================================================

RewriteReport reram_rewrite_report(const ModelConfig& model, const ReramParams& crossbar, int reram_cores,
                                   RewritePolicy policy) {
    model.validate();
    if (crossbar.bits_per_cell <= 0 || crossbar.cell_capacity() <= 0) {
        throw Error("rewrite report: invalid crossbar specification");
    }
    if (crossbar.bits_per_cell > model.precision_bits) {
        throw Error("rewrite report: bits_per_cell (" + std::to_string(crossbar.bits_per_cell) +
                    ") exceeds precision_bits (" + std::to_string(model.precision_bits) + ")");
    }
    if (reram_cores < 1) throw Error("rewrite report: need at least one ReRAM core");

    RewriteReport r;
    r.policy = policy;
    r.cells_per_entry = (model.precision_bits + crossbar.bits_per_cell - 1) / crossbar.bits_per_cell;
    r.cells_per_crossbar = crossbar.cells_per_crossbar();
    r.tier_cells = crossbar.cell_capacity() * reram_cores;

    std::int64_t values = 0;
    if (policy == RewritePolicy::AttentionOnReram) {
        // dynamic K and V operands must be programmed before every score / context product
        const std::int64_t kv_heads = model.attention == AttentionKind::MHA ? model.num_heads : 1;
        values = model.attention_blocks() * kv_heads * 2 * model.seq_len * model.head_dim;
        r.depends_on_seq_len = true;
    } else {
        values = model.ff_blocks() * 2 * model.d_model * model.ff_dim;
        r.depends_on_seq_len = false;
    }
    r.cell_writes = values * r.cells_per_entry;
    r.crossbar_writes = (r.cell_writes + r.cells_per_crossbar - 1) / r.cells_per_crossbar;
    r.writes_per_cell = static_cast<double>(r.cell_writes) / static_cast<double>(r.tier_cells);
    r.lifetime_inferences = r.writes_per_cell > 0 ? crossbar.endurance / r.writes_per_cell : 0.0;
    return r;
}

}  // namespace hetrax
