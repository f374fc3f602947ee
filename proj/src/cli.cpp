#include "hetrax/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hetrax/common.hpp"
#include "hetrax/noc.hpp"
#include "hetrax/perf.hpp"

namespace fs = std::filesystem;

namespace hetrax {

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Tracks a run directory; the manifest is rewritten after every state change
/// so an interrupted run is visibly marked "running" or "failed".
class Run {
public:
    Run(fs::path dir, std::string command, std::string config_text, std::uint64_t seed) : dir_(std::move(dir)) {
        m_.command = std::move(command);
        m_.config_digest = hex64(fnv1a64(config_text));
        m_.seed = seed;
        m_.tool_version = std::string(kToolVersion);
        m_.started = utc_now();
        fs::create_directories(dir_);
        write_manifest();
    }

    void write(const std::string& rel, const std::string& text) {
        write_text(dir_ / rel, text);
        m_.outputs.push_back(rel);
    }

    void ok() {
        m_.status = "ok";
        m_.finished = utc_now();
        write_manifest();
    }

    void failed(const std::string& msg) {
        m_.status = "failed";
        m_.error = msg;
        m_.finished = utc_now();
        write_manifest();
    }

private:
    void write_manifest() { write_text(dir_ / "manifest.json", manifest_to_json(m_).dump(2) + "\n"); }

    fs::path dir_;
    RunManifest m_;
};

int fail(std::ostream& err, const std::string& msg) {
    err << "error: " << msg << "\n";
    return 1;
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

json manifest_to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["config_digest"] = m.config_digest;
    j["seed"] = m.seed;
    j["tool_version"] = m.tool_version;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["status"] = m.status;
    if (!m.error.empty()) j["error"] = m.error;
    j["outputs"] = m.outputs;
    return j;
}

ModelConfig resolve_model(const ModelOptions& opts) {
    ModelConfig m;
    if (!opts.config_path.empty()) {
        m = model_from_json(load_json(opts.config_path));
        if (opts.seq_len > 0) m.seq_len = opts.seq_len;
    } else {
        m = zoo_model(opts.name, opts.seq_len > 0 ? opts.seq_len : 512);
    }
    if (!opts.attention.empty()) m.attention = attention_kind_from_string(opts.attention);
    if (!opts.topology.empty()) m.topology = layer_topology_from_string(opts.topology);
    if (opts.precision_bits > 0) m.precision_bits = opts.precision_bits;
    m.validate();
    return m;
}

Platform resolve_platform(const std::string& path) {
    if (path.empty()) return default_platform();
    return platform_from_json(load_json(path));
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("HETRAX_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw Error(std::string("HETRAX_SEED is not an unsigned integer: '") + env + "'");
        return v;
    }
    return 1;
}

// ===========================================================================
// workload
// ===========================================================================

int cmd_workload(const WorkloadOptions& opts, std::ostream& out, std::ostream& err) {
    ModelConfig model;
    Platform platform;
    try {
        model = resolve_model(opts.model);
        platform = resolve_platform(opts.platform_path);
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }
    const auto graph = build_kernel_graph(model);
    const auto cf = closed_form_flops(model);
    const int reram_cores = platform.inventory()[CoreKind::RERAM];

    json summary;
    summary["model"] = model_to_json(model);
    summary["ops"] = graph.ops.size();
    summary["gemm_flops"] = graph.total_gemm_flops();
    summary["elementwise_ops"] = graph.total_elementwise();
    summary["closed_form_flops"] = {{"mha_per_block", cf.mha_per_block}, {"ff_per_block", cf.ff_per_block},
                                    {"total", cf.total}};
    summary["class_flops"] = json::object();
    std::int64_t weight_bytes[2] = {0, 0};  // attention, ff
    for (const auto& op : graph.ops) {
        const bool ff = op.kind == KernelClass::FF1 || op.kind == KernelClass::FF2;
        weight_bytes[ff ? 1 : 0] += op.weight_bytes;
    }
    for (auto k : {KernelClass::EMBED, KernelClass::MHA1, KernelClass::MHA2, KernelClass::MHA3, KernelClass::MHA4,
                   KernelClass::LNORM1, KernelClass::FF1, KernelClass::FF2, KernelClass::LNORM2}) {
        summary["class_flops"][to_string(k)] = graph.class_flops(k);
    }
    summary["attention_weight_bytes"] = weight_bytes[0];
    summary["ff_weight_bytes"] = weight_bytes[1];
    const double frac = ff_gemm_fraction(graph);
    summary["ff_gemm_fraction"] = frac;
    const ReramParams& rp = platform.spec(CoreKind::RERAM).reram();
    const auto attn = reram_rewrite_report(model, rp, reram_cores, RewritePolicy::AttentionOnReram);
    const auto ffr = reram_rewrite_report(model, rp, reram_cores, RewritePolicy::FfOnReram);
    summary["rewrite"] = {rewrite_to_json(attn), rewrite_to_json(ffr)};

    out << "model " << model.name << " seq " << model.seq_len << " attention " << to_string(model.attention)
        << " topology " << to_string(model.topology) << "\n";
    out << "  kernels " << graph.ops.size() << ", GEMM FLOPs " << graph.total_gemm_flops() << "\n";
    out << "  attention weight bytes " << weight_bytes[0] << ", FF weight bytes " << weight_bytes[1] << "\n";
    out << "  ff_gemm_fraction " << fixed(frac, 4) << "\n";
    out << "  rewrite, attention on ReRAM: " << attn.crossbar_writes << " crossbar writes per inference, "
        << fixed(attn.writes_per_cell, 4) << " writes/cell, lifetime " << fixed(attn.lifetime_inferences, 4)
        << " inferences\n";
    out << "  rewrite, FF on ReRAM: " << ffr.crossbar_writes << " crossbar writes, " << fixed(ffr.writes_per_cell, 4)
        << " writes/cell, lifetime " << fixed(ffr.lifetime_inferences, 4) << " inferences\n";

    if (opts.out_dir.empty()) return 0;
    const std::string config_text = model_to_json(model).dump() + platform_to_json(platform).dump();
    Run run(opts.out_dir, "workload", config_text, 0);
    try {
        run.write("kernel_graph.json", graph_to_json(graph).dump(1) + "\n");
        run.write("summary.json", summary.dump(2) + "\n");
        std::string csv = csv_version_line() + "\nid,label,kind,layer,flops,input_bytes,output_bytes,weight_bytes\n";
        for (const auto& op : graph.ops) {
            csv += std::to_string(op.id) + "," + op.label() + "," + to_string(op.kind) + "," +
                   std::to_string(op.layer) + "," + std::to_string(op.flops) + "," + std::to_string(op.input_bytes) +
                   "," + std::to_string(op.output_bytes) + "," + std::to_string(op.weight_bytes) + "\n";
        }
        run.write("kernels.csv", csv);
        run.ok();
    } catch (const std::exception& e) {
        run.failed(e.what());
        return fail(err, e.what());
    }
    return 0;
}

// ===========================================================================
// optimize
// ===========================================================================

int cmd_optimize(const OptimizeOptions& opts, std::ostream& out, std::ostream& err) {
    ModelConfig model;
    Platform platform;
    try {
        model = resolve_model(opts.model);
        platform = resolve_platform(opts.platform_path);
        opts.search.validate();
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }
    // jobs only changes wall time, so it stays out of the digest
    SearchConfig digest_cfg = opts.search;
    digest_cfg.jobs = 1;
    const std::string config_text = platform_to_json(platform).dump() + model_to_json(model).dump() +
                                    digest_cfg.describe() + " form=" + to_string(opts.form);
    Run run(opts.out_dir, "optimize", config_text, opts.search.seed);
    try {
        run.write("platform.json", platform_to_json(platform).dump(2) + "\n");
        run.write("model.json", model_to_json(model).dump(2) + "\n");
        Evaluator evaluator(platform, model, opts.form);
        const auto result = moo_search(evaluator, opts.search);
        if (result.archive.empty()) throw Error("search produced an empty archive");

        run.write("pareto.csv", pareto_csv(result.archive));
        const auto entries = result.archive.sorted();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            std::ostringstream name;
            name << "placements/" << std::setw(3) << std::setfill('0') << i << "_" << entries[i].digest << ".json";
            run.write(name.str(), placement_to_json(platform, entries[i].placement).dump(2) + "\n");
        }
        std::string hv = csv_version_line() + "\nepoch,hypervolume\n";
        for (std::size_t e = 0; e < result.hv_trace.size(); ++e) {
            hv += std::to_string(e) + "," + format_double(result.hv_trace[e]) + "\n";
        }
        run.write("hypervolume.csv", hv);
        std::string log;
        for (const auto& line : result.log) log += line + "\n";
        run.write("search.log", log);
        for (const auto& line : result.log) {
            if (line.rfind("trajectory aborted", 0) == 0) err << "warning: " << line << "\n";
        }

        out << "archive " << entries.size() << " entries, " << result.evaluations << " placements evaluated, "
            << "final hypervolume " << fixed(result.hv_trace.back(), 6) << "\n";
        const ArchiveEntry* best = nullptr;
        std::size_t best_index = 0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!entries[i].eval.feasible) continue;
            if (!best || entries[i].eval.perf.edp < best->eval.perf.edp) {
                best = &entries[i];
                best_index = i;
            }
        }
        if (best) {
            const auto& e = best->eval;
            out << "best EDP (feasible): #" << best_index << " " << best->digest << " EDP " << fixed(e.perf.edp, 6)
                << " J*s, latency " << fixed(e.perf.latency, 6) << " s, energy " << fixed(e.perf.energy, 6)
                << " J, peak " << fixed(e.peak_temp_c, 4) << " C, ReRAM level " << e.reram_level << "\n";
        } else {
            out << "no entry meets the DRAM temperature limit\n";
        }
        run.ok();
    } catch (const std::exception& e) {
        run.failed(e.what());
        return fail(err, e.what());
    }
    return 0;
}

// ===========================================================================
// evaluate
// ===========================================================================

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
    ModelConfig model;
    Platform platform;
    Placement placement;
    try {
        model = resolve_model(opts.model);
        platform = resolve_platform(opts.platform_path);
        placement = placement_from_json(platform, load_json(opts.placement_path));
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }
    const auto violations = validate_placement(platform, placement);
    if (!violations.empty()) {
        err << "error: invalid placement (" << violations.size() << " violations)\n";
        for (const auto& v : violations) err << "  " << v.category << ": " << v.detail << "\n";
        return 1;
    }
    const std::string config_text = platform_to_json(platform).dump() + model_to_json(model).dump() +
                                    placement_to_json(platform, placement).dump() + " form=" + to_string(opts.form);
    Run run(opts.out_dir, "evaluate", config_text, 0);
    try {
        Evaluator evaluator(platform, model, opts.form);
        const auto d = evaluator.detail(placement);
        const Placement canon = canonical_placement(platform, placement);

        json report;
        report["evaluation"] = evaluation_to_json(d.eval);
        report["thermal"] = {{"form", to_string(opts.form)},       {"objective", d.thermal.objective},
                             {"max_rise_k", d.thermal.max_rise},   {"max_lateral_delta_k", d.thermal.max_delta},
                             {"peak_c", d.thermal.peak_celsius},   {"reram_tier_c", d.thermal.reram_tier_celsius},
                             {"lateral_delta_k", d.thermal.delta}, {"degenerate", d.thermal.degenerate}};
        json cores = json::array();
        for (const auto& c : d.noise.cores) {
            cores.push_back({{"core", c.core},
                             {"temp_c", c.temp_c},
                             {"temp_k", c.temp_k},
                             {"sigma_s", c.sigma},
                             {"flip_probability", c.flip_probability},
                             {"log10_flip_probability", c.log10_flip_probability},
                             {"verdict", to_string(accuracy_proxy(c.flip_probability, platform.noise.flip_threshold).verdict)}});
        }
        report["noise"] = {{"objective_s", d.noise.objective},
                           {"hottest_core", d.noise.hottest_core},
                           {"level_spacing_s", d.noise.proxy.level_spacing},
                           {"flip_probability", d.noise.proxy.flip_probability},
                           {"log10_flip_probability", d.noise.proxy.log10_flip_probability},
                           {"verdict", to_string(d.noise.proxy.verdict)},
                           {"reading", d.noise.proxy.mapping},
                           {"cores", cores}};
        if (!d.noise.warning.empty()) report["noise"]["warning"] = d.noise.warning;
        report["schedule"] = {{"makespan_s", d.schedule.makespan},
                              {"serial_makespan_s", d.schedule.serial_makespan},
                              {"stall_s", d.schedule.stall},
                              {"weight_load_time_s", d.schedule.weight_load_time},
                              {"peak_power_w", d.schedule.peak_power_w},
                              {"phases", d.schedule.phases.size()}};
        const auto mesh = mesh_reference(platform, canon);
        report["mesh_reference"] = {{"link_count", mesh.link_count},
                                    {"mean_radix", mean_router_radix(mesh.radix_histogram)}};
        run.write("report.json", report.dump(2) + "\n");

        std::string tm = csv_version_line() + "\ntier,level,x,y,core,kind,temp_c\n";
        const auto levels = tier_levels(canon);
        const auto kinds = platform.core_kinds();
        std::vector<int> by_slot(platform.slot_count(), -1);
        for (int c = 0; c < platform.core_count(); ++c) by_slot[canon.core_slot[c]] = c;
        for (int slot = 0; slot < platform.slot_count(); ++slot) {
            const int c = by_slot[slot];
            if (c < 0) continue;
            const auto ref = slot_ref(platform, slot);
            tm += platform.tiers[ref.tier].name + "," + std::to_string(levels[ref.tier]) + "," + std::to_string(ref.x) +
                  "," + std::to_string(ref.y) + "," + std::to_string(c) + "," + to_string(kinds[c]) + "," +
                  format_double(d.thermal.core_celsius[c]) + "\n";
        }
        run.write("thermal_map.csv", tm);

        std::string rx = csv_version_line() + "\nports,routers,mesh_routers\n";
        const auto hist = router_radix_histogram(platform, canon);
        std::map<int, std::pair<int, int>> merged;
        for (const auto& [p, n] : hist) merged[p].first = n;
        for (const auto& [p, n] : mesh.radix_histogram) merged[p].second = n;
        for (const auto& [p, n] : merged) {
            rx += std::to_string(p) + "," + std::to_string(n.first) + "," + std::to_string(n.second) + "\n";
        }
        run.write("radix.csv", rx);

        std::string lk = csv_version_line() + "\nlink,a,b,vertical,bytes,utilization\n";
        for (std::size_t i = 0; i < canon.links.size(); ++i) {
            const auto& l = canon.links[i];
            lk += std::to_string(i) + "," + std::to_string(l.a) + "," + std::to_string(l.b) + "," + (is_vertical(platform, l) ? "1" : "0") +
                  "," + format_double(d.link_bytes[i]) + "," + format_double(d.utilization[i]) + "\n";
        }
        run.write("links.csv", lk);

        std::string tr = csv_version_line() + "\nsrc,dst,bytes,phase\n";
        auto endpoint = [](int c) { return c == kDram ? std::string("DRAM") : std::to_string(c); };
        for (const auto& f : d.traffic.flows) {
            tr += endpoint(f.src) + "," + endpoint(f.dst) + "," + std::to_string(f.bytes) + "," + to_string(f.phase) +
                  "\n";
        }
        run.write("traffic.csv", tr);

        ArchiveEntry entry{d.eval.digest, d.eval.objectives(ObjectiveSet::PTN), canon, d.eval, "evaluate"};
        run.write("evaluation.csv", csv_version_line() + "\n" + pareto_csv_header() + "\n" + pareto_csv_row(0, entry) +
                                        "\n");

        const auto& e = d.eval;
        out << "placement " << e.digest << "\n";
        out << "  mu " << format_double(e.util.mu) << " sigma " << format_double(e.util.sigma) << " thermal "
            << format_double(e.thermal_obj) << " noise " << format_double(e.noise_obj) << "\n";
        out << "  peak " << fixed(e.peak_temp_c, 4) << " C, ReRAM " << fixed(e.reram_temp_c, 4) << " C at level "
            << e.reram_level << ", links " << e.link_count << " (mesh " << mesh.link_count << ")\n";
        out << "  latency " << fixed(e.perf.latency, 6) << " s, energy " << fixed(e.perf.energy, 6) << " J, EDP "
            << fixed(e.perf.edp, 6) << " J*s, DRAM " << (e.feasible ? "feasible" : "infeasible") << "\n";
        run.ok();
    } catch (const std::exception& e) {
        run.failed(e.what());
        return fail(err, e.what());
    }
    return 0;
}

// ===========================================================================
// baseline
// ===========================================================================

int cmd_baseline(const BaselineOptions& opts, std::ostream& out, std::ostream& err) {
    for (auto [name, v] : {std::pair{"--units", opts.units}, std::pair{"--unit-power", opts.unit_power_w},
                           std::pair{"--die-area", opts.die_area_mm2}, std::pair{"--banks", opts.banks},
                           std::pair{"--gpu-density", opts.gpu_density}}) {
        if (!(v > 0.0)) return fail(err, std::string(name) + " must be positive");
    }
    const double area = opts.die_area_mm2 / opts.banks;
    double density = 0.0;
    try {
        density = power_density(opts.units, opts.unit_power_w, area);
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }
    const double ratio = density / opts.gpu_density;
    json report;
    report["units"] = opts.units;
    report["unit_power_w"] = opts.unit_power_w;
    report["area_per_bank_mm2"] = area;
    report["power_density_w_per_mm2"] = density;
    report["gpu_density_w_per_mm2"] = opts.gpu_density;
    report["ratio_vs_gpu"] = ratio;
    out << "power density " << fixed(density, 4) << " W/mm^2 (" << fixed(ratio, 3) << "x the reference GPU at "
        << opts.gpu_density << " W/mm^2)\n";
    if (opts.temp_c) {
        const auto f = dram_thermal_check(*opts.temp_c);
        report["temp_c"] = *opts.temp_c;
        report["dram_verdict"] = to_string(f);
        out << "DRAM at " << *opts.temp_c << " C: " << to_string(f) << " (limit " << kDramMaxCelsius << " C)\n";
    }
    if (!opts.out_dir.empty()) {
        std::ostringstream cfg;
        cfg << report.dump();
        Run run(opts.out_dir, "baseline", cfg.str(), 0);
        try {
            run.write("baseline.json", report.dump(2) + "\n");
            run.ok();
        } catch (const std::exception& e) {
            run.failed(e.what());
            return fail(err, e.what());
        }
    }
    return 0;
}

// ===========================================================================
// argument parsing
// ===========================================================================

namespace {

void add_model_flags(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--model", m.name, "named model: bert-tiny, bert-base, bert-large, bart-base, bart-large")
        ->capture_default_str();
    cmd->add_option("--config", m.config_path, "model JSON file (overrides --model)");
    cmd->add_option("--seq", m.seq_len, "sequence length (default 512 for named models)");
    cmd->add_option("--attention", m.attention, "mha or mqa");
    cmd->add_option("--topology", m.topology, "sequential or parallel");
    cmd->add_option("--precision", m.precision_bits, "bits per value: 8, 16 or 32");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"hetrax-dse: design-space exploration for 3D heterogeneous transformer accelerators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    WorkloadOptions w;
    auto* wc = app.add_subcommand("workload", "kernel graph, FLOP summary and ReRAM rewrite report");
    add_model_flags(wc, w.model);
    wc->add_option("--platform", w.platform_path, "platform JSON (default platform if omitted)");
    wc->add_option("--out", w.out_dir, "run directory");

    OptimizeOptions o;
    std::optional<std::uint64_t> seed;
    std::string objectives = "ptn", guidance = "off", form = "product";
    int jobs = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    auto* oc = app.add_subcommand("optimize", "multi-objective placement search");
    add_model_flags(oc, o.model);
    oc->add_option("--platform", o.platform_path, "platform JSON");
    oc->add_option("--objectives", objectives, "pt or ptn")->capture_default_str();
    oc->add_option("--epochs", o.search.epochs)->capture_default_str();
    oc->add_option("--perturbations", o.search.perturbations)->capture_default_str();
    oc->add_option("--max-steps", o.search.max_steps, "accepted moves per trajectory")->capture_default_str();
    oc->add_option("--seed", seed, "search seed (falls back to HETRAX_SEED, then 1)");
    oc->add_option("--guidance", guidance, "off or learned")->capture_default_str();
    oc->add_option("--thermal-form", form, "product or peak")->capture_default_str();
    oc->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    oc->add_option("--out", o.out_dir, "run directory")->capture_default_str();

    EvaluateOptions e;
    std::string eform = "product";
    auto* ec = app.add_subcommand("evaluate", "full report for one placement");
    add_model_flags(ec, e.model);
    ec->add_option("--platform", e.platform_path, "platform JSON");
    ec->add_option("--placement", e.placement_path, "placement JSON")->required();
    ec->add_option("--thermal-form", eform, "product or peak")->capture_default_str();
    ec->add_option("--out", e.out_dir, "run directory")->capture_default_str();

    BaselineOptions b;
    double temp = 0.0;
    auto* bc = app.add_subcommand("baseline", "power density and DRAM temperature check for a PIM baseline");
    bc->add_option("--units", b.units, "compute units per bank")->capture_default_str();
    bc->add_option("--unit-power", b.unit_power_w, "W per unit")->capture_default_str();
    bc->add_option("--die-area", b.die_area_mm2, "die area, mm^2")->capture_default_str();
    bc->add_option("--banks", b.banks, "banks sharing the die")->capture_default_str();
    auto* temp_opt = bc->add_option("--temp", temp, "DRAM temperature to check, C");
    bc->add_option("--gpu-density", b.gpu_density, "reference GPU density, W/mm^2")->capture_default_str();
    bc->add_option("--out", b.out_dir, "run directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        return app.exit(pe, out, err);
    }

    try {
        if (*wc) return cmd_workload(w, out, err);
        if (*oc) {
            o.search.seed = resolve_seed(seed);
            o.search.objectives = objective_set_from_string(objectives);
            o.search.guidance = guidance_from_string(guidance);
            o.search.jobs = std::max(1, jobs);
            o.form = thermal_form_from_string(form);
            return cmd_optimize(o, out, err);
        }
        if (*ec) {
            e.form = thermal_form_from_string(eform);
            return cmd_evaluate(e, out, err);
        }
        if (*bc) {
            if (temp_opt->count() > 0) b.temp_c = temp;
            return cmd_baseline(b, out, err);
        }
    } catch (const std::exception& ex) {
        return fail(err, ex.what());
    }
    return 1;
}

}  // namespace hetrax
