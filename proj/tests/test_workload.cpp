#include <catch_amalgamated.hpp>

#include <map>
#include <random>

#include "hetrax/common.hpp"
#include "hetrax/platform.hpp"
#include "hetrax/workload.hpp"

using namespace hetrax;

namespace {

ModelConfig small(std::int64_t L, std::int64_t d, std::int64_t h, std::int64_t ff, std::int64_t n) {
    ModelConfig m;
    m.num_layers = L;
    m.d_model = d;
    m.num_heads = h;
    m.head_dim = d / h;
    m.ff_dim = ff;
    m.seq_len = n;
    return m;
}

std::int64_t gemm_sum(const KernelGraph& g, std::initializer_list<KernelClass> kinds) {
    std::int64_t s = 0;
    for (const auto& op : g.ops) {
        for (auto k : kinds) {
            if (op.kind == k && op.gemm) s += 2 * op.gemm->m * op.gemm->k * op.gemm->p;
        }
    }
    return s;
}

std::map<KernelClass, int> census(const KernelGraph& g, int layer) {
    std::map<KernelClass, int> c;
    for (const auto& op : g.ops) {
        if (op.kind != KernelClass::EMBED && op.layer == layer) ++c[op.kind];
    }
    return c;
}

}  // namespace

TEST_CASE("unit sequence FF1 flops") {
    const auto g = build_kernel_graph(small(1, 2, 1, 8, 1));
    CHECK(g.ops[g.layers[0].ff1].flops == 32);
    CHECK(g.ops[g.layers[0].ff1].gemm_flops() == 2 * 1 * 2 * 8);
}

TEST_CASE("BERT-Large per-layer closed forms") {
    const auto m = zoo_model("bert-large", 1024);
    CHECK(m.num_layers == 24);
    CHECK(m.d_model == 1024);
    CHECK(m.num_heads == 16);
    CHECK(m.head_dim == 64);
    CHECK(m.ff_dim == 4096);
    const auto g = build_kernel_graph(m);
    const std::int64_t n = 1024, d = 1024;
    const std::int64_t ff = gemm_sum(g, {KernelClass::FF1, KernelClass::FF2}) / 24;
    const std::int64_t mha =
        gemm_sum(g, {KernelClass::MHA1, KernelClass::MHA2, KernelClass::MHA3, KernelClass::MHA4}) / 24;
    CHECK(ff == 16 * n * d * d);
    CHECK(mha == 8 * n * d * d + 4 * n * n * d);
    const auto cf = closed_form_flops(m);
    CHECK(cf.ff_per_block == ff);
    CHECK(cf.mha_per_block == mha);
    CHECK(cf.total == g.total_gemm_flops());
}

TEST_CASE("MQA shares one K and V projection") {
    auto m = zoo_model("bert-large", 1024);
    m.attention = AttentionKind::MQA;
    const auto g = build_kernel_graph(m);
    const std::int64_t n = 1024, d = 1024, h = 16, dk = 64;
    std::int64_t weight_gemm = 0;
    int shared = 0;
    for (const auto& op : g.ops) {
        if (op.kind == KernelClass::MHA1 && op.layer == 0) {
            weight_gemm += op.gemm_flops();
            if (!op.head) ++shared;
        }
    }
    CHECK(weight_gemm == (h + 2) * 2 * n * d * dk);
    CHECK(shared == 2);
    auto mha = zoo_model("bert-large", 1024);
    std::int64_t mha_weight = 0;
    for (const auto& op : build_kernel_graph(mha).ops) {
        if (op.kind == KernelClass::MHA1 && op.layer == 0) mha_weight += op.gemm_flops();
    }
    CHECK(mha_weight == 3 * h * 2 * n * d * dk);
}

TEST_CASE("op multiplicity per layer") {
    const auto m = small(2, 16, 4, 64, 8);
    const auto c = census(build_kernel_graph(m), 1);
    CHECK(c.at(KernelClass::MHA1) == 12);
    CHECK(c.at(KernelClass::MHA2) == 4);
    CHECK(c.at(KernelClass::MHA3) == 4);
    CHECK(c.at(KernelClass::MHA4) == 1);
    CHECK(c.at(KernelClass::LNORM1) == 1);
    CHECK(c.at(KernelClass::FF1) == 1);
    CHECK(c.at(KernelClass::FF2) == 1);
    CHECK(c.at(KernelClass::LNORM2) == 1);
    auto q = m;
    q.attention = AttentionKind::MQA;
    CHECK(census(build_kernel_graph(q), 1).at(KernelClass::MHA1) == 4 + 2);
}

TEST_CASE("elementwise and byte annotations") {
    const auto m = small(1, 16, 2, 64, 8);
    const auto g = build_kernel_graph(m);
    const std::int64_t n = 8, d = 16;
    for (const auto& op : g.ops) {
        switch (op.kind) {
            case KernelClass::MHA2:
                CHECK(op.elementwise_count == 5 * n * n);
                CHECK(op.weight_bytes == 0);
                break;
            case KernelClass::MHA3:
                CHECK(op.weight_bytes == 0);
                break;
            case KernelClass::LNORM1:
            case KernelClass::LNORM2:
                CHECK(op.elementwise_count == 8 * n * d);
                CHECK(op.flops == 8 * n * d);
                break;
            case KernelClass::MHA1:
            case KernelClass::MHA4:
            case KernelClass::FF1:
            case KernelClass::FF2:
                CHECK(op.weight_bytes > 0);
                CHECK(op.flops == op.gemm_flops());
                break;
            case KernelClass::EMBED:
                CHECK(op.flops == 0);
                CHECK(op.output_bytes == n * d * 2);
                break;
        }
    }
    CHECK(g.ops.front().kind == KernelClass::EMBED);
}

TEST_CASE("deps form a DAG in Table order") {
    for (auto topo : {LayerTopology::Sequential, LayerTopology::ParallelAttention}) {
        for (auto block : {BlockKind::EncoderOnly, BlockKind::EncoderDecoder, BlockKind::DecoderOnly}) {
            auto m = small(3, 16, 4, 64, 8);
            m.topology = topo;
            m.block_kind = block;
            const auto g = build_kernel_graph(m);
            for (const auto& op : g.ops) {
                for (int d : op.deps) CHECK(d < op.id);
            }
            for (const auto& L : g.layers) {
                const auto& ff1 = g.ops[L.ff1];
                for (const auto& blk : L.attention) {
                    for (int h2 : blk.mha2)
                        for (int d : g.ops[h2].deps) CHECK(g.ops[d].kind == KernelClass::MHA1);
                    for (int h3 : blk.mha3) {
                        bool from_mha2 = false;
                        for (int d : g.ops[h3].deps) from_mha2 |= g.ops[d].kind == KernelClass::MHA2;
                        CHECK(from_mha2);
                    }
                }
                if (topo == LayerTopology::ParallelAttention) {
                    // no FF op of layer l depends on any MHA op of layer l
                    for (int id : {L.ff1, L.ff2}) {
                        for (int d : g.ops[id].deps) {
                            const auto& dep = g.ops[d];
                            const bool mha = dep.kind == KernelClass::MHA1 || dep.kind == KernelClass::MHA2 ||
                                             dep.kind == KernelClass::MHA3 || dep.kind == KernelClass::MHA4;
                            CHECK_FALSE((mha && dep.layer == ff1.layer));
                        }
                    }
                } else {
                    REQUIRE(ff1.deps.size() == 1);
                    CHECK(g.ops[ff1.deps[0]].kind == KernelClass::LNORM1);
                }
            }
        }
    }
}

TEST_CASE("encoder-decoder doubles the block count and adds cross-attention") {
    auto enc = small(4, 16, 2, 64, 8);
    auto ed = enc;
    ed.block_kind = BlockKind::EncoderDecoder;
    CHECK(ed.ff_blocks() == 2 * enc.ff_blocks());
    CHECK(ed.attention_blocks() == enc.attention_blocks() * 3);
    const auto g = build_kernel_graph(ed);
    int cross = 0;
    for (const auto& L : g.layers) {
        if (L.decoder) {
            REQUIRE(L.attention.size() == 2);
            CHECK(L.attention[1].cross);
            ++cross;
        }
    }
    CHECK(cross == 4);
}

TEST_CASE("FF fraction closed form and limit") {
    const auto m = zoo_model("bert-large", 128);
    CHECK(ff_gemm_fraction(build_kernel_graph(m)) == Catch::Approx(16384.0 / (24576 + 512)).epsilon(1e-12));
    CHECK(ff_gemm_fraction(build_kernel_graph(m)) == Catch::Approx(0.6531).margin(1e-4));

    const auto t = small(1, 4, 1, 16, 4);
    std::int64_t ff = 0, all = 0;
    for (const auto& op : build_kernel_graph(t).ops) {
        if (!op.gemm) continue;
        const std::int64_t f = 2 * op.gemm->m * op.gemm->k * op.gemm->p;
        all += f;
        if (op.kind == KernelClass::FF1 || op.kind == KernelClass::FF2) ff += f;
    }
    CHECK(ff_gemm_fraction(build_kernel_graph(t)) == static_cast<double>(ff) / all);
    CHECK(ff_gemm_fraction(build_kernel_graph(t)) == 16.0 * 4 / (24 * 4 + 4 * 4));

    auto tiny = zoo_model("bert-base", 1);
    CHECK(ff_gemm_fraction(build_kernel_graph(tiny)) == Catch::Approx(2.0 / 3.0).margin(1e-3));
}

TEST_CASE("FF fraction decreases with sequence length") {
    for (const char* name : {"bert-tiny", "bert-base", "bart-base"}) {
        double prev = 2.0;
        for (std::int64_t n : {1, 8, 64, 256, 1024, 4096}) {
            const double f = ff_gemm_fraction(build_kernel_graph(zoo_model(name, n)));
            CHECK(f < prev);
            prev = f;
        }
    }
}

TEST_CASE("MQA flops never exceed MHA flops") {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 200; ++i) {
        const std::int64_t h = 1 + gen() % 8;
        auto m = small(1 + gen() % 3, h * (1 + gen() % 8), h, 8 * (1 + gen() % 8), 1 + gen() % 32);
        m.block_kind = static_cast<BlockKind>(gen() % 3);
        auto q = m;
        q.attention = AttentionKind::MQA;
        const auto a = build_kernel_graph(m).total_gemm_flops();
        const auto b = build_kernel_graph(q).total_gemm_flops();
        if (h == 1) {
            CHECK(a == b);
        } else {
            CHECK(b < a);
        }
    }
}

TEST_CASE("doubling n scales attention scores by four and FF by two") {
    for (const char* name : {"bert-tiny", "bert-base", "bart-large"}) {
        const auto g1 = build_kernel_graph(zoo_model(name, 128));
        const auto g2 = build_kernel_graph(zoo_model(name, 256));
        CHECK(gemm_sum(g2, {KernelClass::MHA2, KernelClass::MHA3}) ==
              4 * gemm_sum(g1, {KernelClass::MHA2, KernelClass::MHA3}));
        CHECK(gemm_sum(g2, {KernelClass::FF1, KernelClass::FF2}) == 2 * gemm_sum(g1, {KernelClass::FF1, KernelClass::FF2}));
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(build_kernel_graph(small(1, 0, 1, 8, 4)), Error);
    CHECK_THROWS_AS(build_kernel_graph(small(1, 8, 1, 0, 4)), Error);
    CHECK_THROWS_AS(build_kernel_graph(small(1, 8, 1, 8, 0)), Error);
    auto m = small(1, 10, 3, 8, 4);
    m.head_dim = 3;
    CHECK_THROWS_AS(m.validate(), Error);
    auto p = small(1, 8, 2, 8, 4);
    p.precision_bits = 12;
    CHECK_THROWS_AS(p.validate(), Error);
    CHECK_THROWS_AS(zoo_model("gpt-9"), Error);
    auto zero = small(0, 8, 2, 8, 4);
    CHECK(build_kernel_graph(zero).ops.empty());
}

TEST_CASE("zoo models") {
    const auto zoo = model_zoo(512);
    REQUIRE(zoo.size() == 5);
    CHECK(zoo_model("bert-base").d_model == 768);
    CHECK(zoo_model("bert-base").num_heads == 12);
    CHECK(zoo_model("bert-tiny").num_layers == 2);
    CHECK(zoo_model("bart-large").block_kind == BlockKind::EncoderDecoder);
    for (const auto& m : zoo) CHECK_NOTHROW(m.validate());
}

TEST_CASE("rewrite report") {
    const Platform p = default_platform();
    const auto& rp = p.spec(CoreKind::RERAM).reram();
    const auto r = reram_rewrite_report(zoo_model("bert-large", 1024), rp, 16, RewritePolicy::AttentionOnReram);
    CHECK(r.crossbar_writes >= 12000);
    CHECK(r.crossbar_writes <= 200000);
    CHECK(r.depends_on_seq_len);
    // K and V of every head in every block, 8 cells per 16-bit value
    const std::int64_t cells = 24LL * 16 * 2 * 1024 * 64 * 8;
    CHECK(r.cell_writes == cells);
    CHECK(r.crossbar_writes == (cells + 16383) / 16384);
    CHECK(r.lifetime_inferences == Catch::Approx(rp.endurance / r.writes_per_cell));

    ReramParams unit = rp;
    unit.endurance = 1e6;
    const auto one = reram_rewrite_report(zoo_model("bert-base", 1), unit, 1 << 20, RewritePolicy::AttentionOnReram);
    if (one.writes_per_cell == 1.0) CHECK(one.lifetime_inferences == 1e6);

    const auto f1 = reram_rewrite_report(zoo_model("bert-large", 128), rp, 16, RewritePolicy::FfOnReram);
    const auto f2 = reram_rewrite_report(zoo_model("bert-large", 2048), rp, 16, RewritePolicy::FfOnReram);
    CHECK(f1.writes_per_cell == f2.writes_per_cell);
    CHECK_FALSE(f1.depends_on_seq_len);

    ReramParams wide = rp;
    wide.bits_per_cell = 32;
    CHECK_THROWS_AS(reram_rewrite_report(zoo_model("bert-base"), wide, 16, RewritePolicy::FfOnReram), Error);
}
