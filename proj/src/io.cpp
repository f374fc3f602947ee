#include "hetrax/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hetrax/common.hpp"

namespace hetrax {

std::string csv_version_line() {
    return "# hetrax-dse v" + std::string(kToolVersion);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "at line L, column C" in what()
        throw Error(source + ": JSON parse error: " + e.what());
    }
}

json load_json(const std::filesystem::path& path) {
    return parse_json(read_text(path), path.string());
}

namespace {

/// Field reader that remembers what it consumed so leftovers can be rejected.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw Error(where_ + ": expected a JSON object");
    }

    const json* find(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <class T>
    void opt(const char* key, T& out) {
        if (const json* v = find(key)) out = as<T>(*v, key);
    }

    template <class T>
    T req(const char* key) {
        const json* v = find(key);
        if (!v) throw Error(where_ + ": missing field '" + key + "'");
        return as<T>(*v, key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw Error(where_ + ": unknown field '" + it.key() + "'");
        }
    }

    const std::string& where() const { return where_; }

private:
    template <class T>
    T as(const json& v, const char* key) const {
        const std::string at = where_ + "." + key;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw Error(at + ": expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw Error(at + ": expected an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw Error(at + ": expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw Error(at + ": expected a string");
        }
        try {
            return v.get<T>();
        } catch (const json::exception& e) {
            throw Error(at + ": " + e.what());
        }
    }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

std::string planar_name(PlanarLinks p) {
    return p == PlanarLinks::Searchable ? "searchable" : "fixed-chain";
}

PlanarLinks planar_from_string(const std::string& s) {
    if (s == "searchable") return PlanarLinks::Searchable;
    if (s == "fixed-chain") return PlanarLinks::FixedChain;
    throw Error("unknown planar link mode '" + s + "' (expected searchable or fixed-chain)");
}

json core_to_json(const CoreSpec& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["area_mm2"] = c.area_mm2;
    j["active_power_w"] = c.active_power_w;
    j["idle_power_w"] = c.idle_power_w;
    j["frequency_hz"] = c.frequency_hz;
    switch (c.kind) {
        case CoreKind::SM:
            j["peak_flops"] = c.sm().peak_flops;
            j["tensor_cores"] = c.sm().tensor_cores;
            break;
        case CoreKind::MC:
            j["cache_bytes"] = c.mc().cache_bytes;
            break;
        case CoreKind::RERAM: {
            const auto& r = c.reram();
            j["tiles"] = r.tiles;
            j["crossbars_per_tile"] = r.crossbars_per_tile;
            j["crossbar_rows"] = r.crossbar_rows;
            j["crossbar_cols"] = r.crossbar_cols;
            j["bits_per_cell"] = r.bits_per_cell;
            j["adc_bits"] = r.adc_bits;
            j["row_write_time_s"] = r.row_write_time_s;
            j["endurance"] = r.endurance;
            break;
        }
    }
    return j;
}

CoreSpec core_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    CoreSpec c;
    c.kind = core_kind_from_string(f.req<std::string>("kind"));
    c.area_mm2 = f.req<double>("area_mm2");
    c.active_power_w = f.req<double>("active_power_w");
    c.idle_power_w = f.req<double>("idle_power_w");
    c.frequency_hz = f.req<double>("frequency_hz");
    switch (c.kind) {
        case CoreKind::SM: {
            SmParams s;
            s.peak_flops = f.req<double>("peak_flops");
            s.tensor_cores = f.req<int>("tensor_cores");
            c.details = s;
            break;
        }
        case CoreKind::MC: {
            McParams m;
            m.cache_bytes = f.req<std::int64_t>("cache_bytes");
            c.details = m;
            break;
        }
        case CoreKind::RERAM: {
            ReramParams r;
            r.tiles = f.req<int>("tiles");
            r.crossbars_per_tile = f.req<int>("crossbars_per_tile");
            r.crossbar_rows = f.req<int>("crossbar_rows");
            r.crossbar_cols = f.req<int>("crossbar_cols");
            r.bits_per_cell = f.req<int>("bits_per_cell");
            r.adc_bits = f.req<int>("adc_bits");
            r.row_write_time_s = f.req<double>("row_write_time_s");
            r.endurance = f.req<double>("endurance");
            c.details = r;
            break;
        }
    }
    f.finish();
    return c;
}

}  // namespace

json platform_to_json(const Platform& p) {
    json j;
    j["name"] = p.name;
    j["tier_width_mm"] = p.tier_width_mm;
    j["tier_height_mm"] = p.tier_height_mm;
    j["link_capacity"] = p.link_capacity;
    j["dram_bandwidth"] = p.dram_bandwidth;
    j["cores"] = json::array();
    for (const auto& c : p.core_specs) j["cores"].push_back(core_to_json(c));
    j["tiers"] = json::array();
    for (const auto& t : p.tiers) {
        json tj;
        tj["name"] = t.name;
        tj["grid_x"] = t.grid_x;
        tj["grid_y"] = t.grid_y;
        tj["allowed_kinds"] = json::array();
        for (auto k : t.allowed_kinds) tj["allowed_kinds"].push_back(to_string(k));
        tj["population"] = json::object();
        for (const auto& [k, n] : t.population) tj["population"][to_string(k)] = n;
        tj["planar"] = planar_name(t.planar);
        j["tiers"].push_back(tj);
    }
    j["thermal"] = {{"r_layer", p.thermal.r_layer}, {"r_base", p.thermal.r_base}, {"ambient_c", p.thermal.ambient_c}};
    j["tsv"] = {{"diameter_um", p.tsv.diameter_um},
                {"height_um", p.tsv.height_um},
                {"capacitance_f", p.tsv.capacitance_f},
                {"resistance_ohm", p.tsv.resistance_ohm}};
    j["energy"] = {{"planar_j_per_byte", p.energy.planar_j_per_byte}, {"tsv_voltage_v", p.energy.tsv_voltage_v}};
    j["perf"] = {{"sm_utilization", p.perf.sm_utilization},
                 {"scalar_rate_divisor", p.perf.scalar_rate_divisor},
                 {"write_parallel_per_tile", p.perf.write_parallel_per_tile},
                 {"dram_latency_s", p.perf.dram_latency_s}};
    j["noise"] = {{"g_min_s", p.noise.g_min_s},
                  {"g_max_s", p.noise.g_max_s},
                  {"read_voltage_v", p.noise.read_voltage_v},
                  {"flip_threshold", p.noise.flip_threshold}};
    return j;
}

Platform platform_from_json(const json& j) {
    Fields f(j, "platform");
    Platform p;
    p.name = f.req<std::string>("name");
    f.opt("tier_width_mm", p.tier_width_mm);
    f.opt("tier_height_mm", p.tier_height_mm);
    p.link_capacity = f.req<double>("link_capacity");
    p.dram_bandwidth = f.req<double>("dram_bandwidth");

    const json* cores = f.find("cores");
    if (!cores || !cores->is_array()) throw Error("platform: 'cores' must be an array");
    for (std::size_t i = 0; i < cores->size(); ++i) {
        p.core_specs.push_back(core_from_json((*cores)[i], "platform.cores[" + std::to_string(i) + "]"));
    }

    const json* tiers = f.find("tiers");
    if (!tiers || !tiers->is_array()) throw Error("platform: 'tiers' must be an array");
    for (std::size_t i = 0; i < tiers->size(); ++i) {
        Fields tf((*tiers)[i], "platform.tiers[" + std::to_string(i) + "]");
        TierSpec t;
        t.name = tf.req<std::string>("name");
        t.grid_x = tf.req<int>("grid_x");
        t.grid_y = tf.req<int>("grid_y");
        for (const auto& k : tf.req<std::vector<std::string>>("allowed_kinds")) {
            t.allowed_kinds.push_back(core_kind_from_string(k));
        }
        const json* pop = tf.find("population");
        if (!pop || !pop->is_object()) throw Error(tf.where() + ": 'population' must be an object");
        for (auto it = pop->begin(); it != pop->end(); ++it) {
            if (!it.value().is_number_integer()) throw Error(tf.where() + ".population: counts must be integers");
            t.population[core_kind_from_string(it.key())] = it.value().get<int>();
        }
        std::string planar = "searchable";
        tf.opt("planar", planar);
        t.planar = planar_from_string(planar);
        tf.finish();
        p.tiers.push_back(t);
    }

    if (const json* th = f.find("thermal")) {
        Fields tf(*th, "platform.thermal");
        p.thermal.r_layer = tf.req<std::vector<double>>("r_layer");
        p.thermal.r_base = tf.req<double>("r_base");
        tf.opt("ambient_c", p.thermal.ambient_c);
        tf.finish();
    }
    if (const json* ts = f.find("tsv")) {
        Fields tf(*ts, "platform.tsv");
        tf.opt("diameter_um", p.tsv.diameter_um);
        tf.opt("height_um", p.tsv.height_um);
        tf.opt("capacitance_f", p.tsv.capacitance_f);
        tf.opt("resistance_ohm", p.tsv.resistance_ohm);
        tf.finish();
    }
    if (const json* en = f.find("energy")) {
        Fields ef(*en, "platform.energy");
        ef.opt("planar_j_per_byte", p.energy.planar_j_per_byte);
        ef.opt("tsv_voltage_v", p.energy.tsv_voltage_v);
        ef.finish();
    }
    if (const json* pf = f.find("perf")) {
        Fields ff(*pf, "platform.perf");
        ff.opt("sm_utilization", p.perf.sm_utilization);
        ff.opt("scalar_rate_divisor", p.perf.scalar_rate_divisor);
        ff.opt("write_parallel_per_tile", p.perf.write_parallel_per_tile);
        ff.opt("dram_latency_s", p.perf.dram_latency_s);
        ff.finish();
    }
    if (const json* nz = f.find("noise")) {
        Fields nf(*nz, "platform.noise");
        nf.opt("g_min_s", p.noise.g_min_s);
        nf.opt("g_max_s", p.noise.g_max_s);
        nf.opt("read_voltage_v", p.noise.read_voltage_v);
        nf.opt("flip_threshold", p.noise.flip_threshold);
        nf.finish();
    }
    f.finish();
    p.validate();
    return p;
}

json model_to_json(const ModelConfig& m) {
    json j;
    j["name"] = m.name;
    j["num_layers"] = m.num_layers;
    j["d_model"] = m.d_model;
    j["num_heads"] = m.num_heads;
    j["head_dim"] = m.head_dim;
    j["ff_dim"] = m.ff_dim;
    j["seq_len"] = m.seq_len;
    j["block_kind"] = to_string(m.block_kind);
    j["attention"] = to_string(m.attention);
    j["topology"] = to_string(m.topology);
    j["precision_bits"] = m.precision_bits;
    return j;
}

ModelConfig model_from_json(const json& j) {
    Fields f(j, "model");
    ModelConfig m;
    f.opt("name", m.name);
    m.num_layers = f.req<std::int64_t>("num_layers");
    m.d_model = f.req<std::int64_t>("d_model");
    m.num_heads = f.req<std::int64_t>("num_heads");
    m.head_dim = m.d_model / std::max<std::int64_t>(m.num_heads, 1);
    f.opt("head_dim", m.head_dim);
    m.ff_dim = f.req<std::int64_t>("ff_dim");
    m.seq_len = f.req<std::int64_t>("seq_len");
    if (f.find("block_kind")) m.block_kind = block_kind_from_string(f.req<std::string>("block_kind"));
    if (f.find("attention")) m.attention = attention_kind_from_string(f.req<std::string>("attention"));
    if (f.find("topology")) m.topology = layer_topology_from_string(f.req<std::string>("topology"));
    f.opt("precision_bits", m.precision_bits);
    f.finish();
    m.validate();
    return m;
}

json placement_to_json(const Platform& platform, const Placement& placement) {
    json j;
    j["platform"] = platform.name;
    j["digest"] = placement_digest(platform, placement);
    j["tier_order"] = placement.tier_order;
    j["core_slot"] = placement.core_slot;
    j["links"] = json::array();
    for (const auto& l : placement.links) j["links"].push_back({l.a, l.b});
    return j;
}

Placement placement_from_json(const Platform& platform, const json& j) {
    Fields f(j, "placement");
    Placement p;
    std::string platform_name;
    f.opt("platform", platform_name);
    if (!platform_name.empty() && platform_name != platform.name) {
        throw Error("placement was made for platform '" + platform_name + "', not '" + platform.name + "'");
    }
    p.tier_order = f.req<std::vector<int>>("tier_order");
    p.core_slot = f.req<std::vector<int>>("core_slot");
    const json* links = f.find("links");
    if (!links || !links->is_array()) throw Error("placement: 'links' must be an array");
    for (const auto& l : *links) {
        if (!l.is_array() || l.size() != 2 || !l[0].is_number_integer() || !l[1].is_number_integer()) {
            throw Error("placement: every link must be a pair of slot indices");
        }
        p.links.push_back(make_link(l[0].get<int>(), l[1].get<int>()));
    }
    std::sort(p.links.begin(), p.links.end());
    std::string digest;
    f.opt("digest", digest);
    f.finish();
    if (!digest.empty() && p.tier_order.size() == static_cast<std::size_t>(platform.tier_count()) &&
        p.core_slot.size() == static_cast<std::size_t>(platform.core_count())) {
        const std::string actual = placement_digest(platform, p);
        if (actual != digest) throw Error("placement digest mismatch: file says " + digest + ", content is " + actual);
    }
    return p;
}

json graph_to_json(const KernelGraph& g) {
    json j;
    j["model"] = model_to_json(g.model);
    j["ops"] = json::array();
    for (const auto& op : g.ops) {
        json o;
        o["id"] = op.id;
        o["label"] = op.label();
        o["kind"] = to_string(op.kind);
        o["layer"] = op.layer;
        if (op.head) o["head"] = *op.head;
        if (op.projection != Projection::None) o["projection"] = to_string(op.projection);
        if (op.cross_attention) o["cross_attention"] = true;
        if (op.gemm) o["gemm"] = {op.gemm->m, op.gemm->k, op.gemm->p};
        o["elementwise"] = op.elementwise_count;
        o["flops"] = op.flops;
        o["input_bytes"] = op.input_bytes;
        o["output_bytes"] = op.output_bytes;
        o["weight_bytes"] = op.weight_bytes;
        o["deps"] = op.deps;
        j["ops"].push_back(o);
    }
    return j;
}

json rewrite_to_json(const RewriteReport& r) {
    return {{"policy", to_string(r.policy)},
            {"cells_per_entry", r.cells_per_entry},
            {"cells_per_crossbar", r.cells_per_crossbar},
            {"tier_cells", r.tier_cells},
            {"cell_writes", r.cell_writes},
            {"crossbar_writes", r.crossbar_writes},
            {"writes_per_cell", r.writes_per_cell},
            {"lifetime_inferences", r.lifetime_inferences},
            {"depends_on_seq_len", r.depends_on_seq_len}};
}

json evaluation_to_json(const Evaluation& e) {
    json j;
    j["digest"] = e.digest;
    j["objectives"] = {{"mu", format_double(e.util.mu)},
                       {"sigma", format_double(e.util.sigma)},
                       {"thermal", format_double(e.thermal_obj)},
                       {"noise", format_double(e.noise_obj)}};
    j["peak_temp_c"] = e.peak_temp_c;
    j["reram_temp_c"] = e.reram_temp_c;
    j["reram_level"] = e.reram_level;
    j["reram_log10_flip"] = e.reram_log10_flip;
    j["link_count"] = e.link_count;
    j["mean_radix"] = e.mean_radix;
    j["level_power_w"] = e.level_power;
    j["perf"] = {{"latency_s", e.perf.latency},   {"energy_j", e.perf.energy}, {"core_energy_j", e.perf.core_energy},
                 {"link_energy_j", e.perf.link_energy}, {"edp", e.perf.edp},      {"stall_s", e.perf.stall}};
    j["perf"]["class_latency_s"] = json::object();
    for (const auto& [k, v] : e.perf.class_latency) j["perf"]["class_latency_s"][k] = v;
    j["dram_feasible"] = e.feasible;
    return j;
}

// ===========================================================================
// CSV
// ===========================================================================

namespace {

const char* const kParetoColumns =
    "index,digest,origin,mu,sigma,thermal,noise,peak_temp_c,reram_temp_c,reram_level,reram_log10_flip,"
    "link_count,mean_radix,latency_s,energy_j,edp,feasible";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string pareto_csv_header() {
    return kParetoColumns;
}

std::string pareto_csv_row(std::size_t index, const ArchiveEntry& entry) {
    const Evaluation& e = entry.eval;
    std::ostringstream os;
    os << index << ',' << entry.digest << ',' << entry.origin << ',' << format_double(e.util.mu) << ','
       << format_double(e.util.sigma) << ',' << format_double(e.thermal_obj) << ',' << format_double(e.noise_obj)
       << ',' << format_double(e.peak_temp_c) << ',' << format_double(e.reram_temp_c) << ',' << e.reram_level << ','
       << format_double(e.reram_log10_flip) << ',' << e.link_count << ',' << format_double(e.mean_radix) << ','
       << format_double(e.perf.latency) << ',' << format_double(e.perf.energy) << ',' << format_double(e.perf.edp)
       << ',' << (e.feasible ? 1 : 0);
    return os.str();
}

std::string pareto_csv(const ParetoArchive& archive) {
    std::string out = csv_version_line() + "\n" + pareto_csv_header() + "\n";
    const auto entries = archive.sorted();
    for (std::size_t i = 0; i < entries.size(); ++i) out += pareto_csv_row(i, entries[i]) + "\n";
    return out;
}

std::vector<ParetoRow> parse_pareto_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# hetrax-dse v", 0) != 0) {
        throw Error("pareto csv: missing '# hetrax-dse v<version>' line");
    }
    if (line != csv_version_line()) throw Error("pareto csv: written by " + line.substr(2) + ", expected v" +
                                                std::string(kToolVersion));
    if (!std::getline(in, line) || line != pareto_csv_header()) throw Error("pareto csv: unexpected header");
    const std::size_t columns = split_csv(pareto_csv_header()).size();
    std::vector<ParetoRow> rows;
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != columns) {
            throw Error("pareto csv line " + std::to_string(lineno) + ": " + std::to_string(cells.size()) +
                        " columns, expected " + std::to_string(columns));
        }
        ParetoRow r;
        r.index = std::stoul(cells[0]);
        r.digest = cells[1];
        r.origin = cells[2];
        r.cells.assign(cells.begin() + 3, cells.end());
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace hetrax
