#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "hetrax/cli.hpp"
#include "hetrax/common.hpp"
#include "hetrax/io.hpp"

using namespace hetrax;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("hetrax-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "hetrax-dse");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Outcome o;
    o.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

fs::path tiny_platform_file(const fs::path& dir) {
    const fs::path path = dir / "tiny.json";
    write_text(path, platform_to_json(tiny_platform()).dump(2));
    return path;
}

}  // namespace

TEST_CASE("platform JSON round trip") {
    for (const auto& p : {default_platform(), tiny_platform()}) {
        const json j = platform_to_json(p);
        const Platform back = platform_from_json(j);
        CHECK(platform_to_json(back).dump() == j.dump());
        CHECK(back.core_count() == p.core_count());
        CHECK(back.core_kinds() == p.core_kinds());
        CHECK(back.thermal.r_layer == p.thermal.r_layer);
    }
}

TEST_CASE("model and placement JSON round trip") {
    for (const auto& m : model_zoo(256)) {
        const auto back = model_from_json(model_to_json(m));
        CHECK(model_to_json(back).dump() == model_to_json(m).dump());
    }
    const Platform p = default_platform();
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Placement pl = random_placement(p, s);
        const Placement back = placement_from_json(p, placement_to_json(p, pl));
        CHECK(back.tier_order == pl.tier_order);
        CHECK(back.core_slot == pl.core_slot);
        CHECK(back.links == pl.links);
    }
}

TEST_CASE("malformed inputs are rejected") {
    auto j = platform_to_json(default_platform());
    j["bogus"] = 1;
    CHECK_THROWS_WITH(platform_from_json(j), Catch::Matchers::ContainsSubstring("bogus"));

    auto m = model_to_json(zoo_model("bert-base"));
    m["d_model"] = "wide";
    CHECK_THROWS_AS(model_from_json(m), Error);

    try {
        parse_json("{\n  \"a\": 1,\n  oops\n}", "broken.json");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("broken.json") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }

    const Platform p = default_platform();
    auto pl = placement_to_json(p, mesh_placement(p));
    pl["digest"] = "0000000000000000";
    CHECK_THROWS_WITH(placement_from_json(p, pl), Catch::Matchers::ContainsSubstring("digest"));
    auto other = placement_to_json(p, mesh_placement(p));
    other["platform"] = "elsewhere";
    CHECK_THROWS_AS(placement_from_json(p, other), Error);
    CHECK_THROWS_AS(load_json("/nonexistent/hetrax.json"), Error);
}

TEST_CASE("pareto CSV round trip") {
    const Platform p = tiny_platform();
    Evaluator ev(p, zoo_model("bert-tiny", 128));
    const auto archive = brute_force_pareto(ev, ObjectiveSet::PTN);
    const std::string text = pareto_csv(archive);
    CHECK(text.rfind(csv_version_line(), 0) == 0);
    const auto rows = parse_pareto_csv(text);
    const auto sorted = archive.sorted();
    REQUIRE(rows.size() == sorted.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].index == i);
        CHECK(rows[i].digest == sorted[i].digest);
        CHECK(rows[i].origin == "enum");
        CHECK(std::stod(rows[i].cells[0]) == sorted[i].objectives[0]);
        CHECK(std::stod(rows[i].cells[3]) == sorted[i].objectives[3]);
    }
    CHECK_THROWS_AS(parse_pareto_csv("index,digest\n"), Error);
}

TEST_CASE("seed resolution") {
    ::unsetenv("HETRAX_SEED");
    CHECK(resolve_seed(std::nullopt) == 1);
    CHECK(resolve_seed(9) == 9);
    ::setenv("HETRAX_SEED", "42", 1);
    CHECK(resolve_seed(std::nullopt) == 42);
    CHECK(resolve_seed(7) == 7);
    ::setenv("HETRAX_SEED", "forty", 1);
    CHECK_THROWS_AS(resolve_seed(std::nullopt), Error);
    ::unsetenv("HETRAX_SEED");
}

TEST_CASE("workload command") {
    const auto dir = scratch("workload");
    const auto o = run({"workload", "--model", "bert-base", "--seq", "256", "--out", dir.string()});
    CHECK(o.code == 0);
    CHECK(o.out.find("bert-base") != std::string::npos);
    CHECK(fs::exists(dir / "kernel_graph.json"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "kernels.csv"));
    CHECK(load_json(dir / "summary.json").contains("model"));

    CHECK(run({"workload", "--model", "nope"}).code == 1);
    CHECK(run({"workload", "--model", "bert-base", "--precision", "12"}).code == 1);
    CHECK(run({"frobnicate"}).code != 0);
}

TEST_CASE("baseline command") {
    auto o = run({"baseline"});
    CHECK(o.code == 0);
    CHECK(o.out.find("7.55") != std::string::npos);
    o = run({"baseline", "--temp", "120"});
    CHECK(o.out.find("infeasible") != std::string::npos);
    o = run({"baseline", "--temp", "90"});
    CHECK(o.out.find("infeasible") == std::string::npos);
    CHECK(run({"baseline", "--die-area", "0"}).code == 1);
}

TEST_CASE("optimize then evaluate") {
    const auto dir = scratch("optimize");
    const auto plat = tiny_platform_file(dir);
    const auto run_dir = dir / "run";
    const auto o = run({"optimize", "--platform", plat.string(), "--model", "bert-tiny", "--seq", "128", "--epochs",
                        "5", "--seed", "4", "--jobs", "2", "--out", run_dir.string()});
    REQUIRE(o.code == 0);
    for (const char* f : {"manifest.json", "platform.json", "model.json", "pareto.csv", "hypervolume.csv",
                          "search.log"}) {
        CHECK(fs::exists(run_dir / f));
    }
    const json manifest = load_json(run_dir / "manifest.json");
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["seed"] == 4);
    CHECK(manifest["tool_version"] == kToolVersion);

    const auto rows = parse_pareto_csv(read_text(run_dir / "pareto.csv"));
    REQUIRE_FALSE(rows.empty());
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(run_dir / "placements")) files += e.is_regular_file();
    CHECK(files == rows.size());

    // same run with one job is byte-identical
    const auto again = dir / "again";
    REQUIRE(run({"optimize", "--platform", plat.string(), "--model", "bert-tiny", "--seq", "128", "--epochs", "5",
                 "--seed", "4", "--jobs", "1", "--out", again.string()})
                .code == 0);
    CHECK(read_text(again / "pareto.csv") == read_text(run_dir / "pareto.csv"));
    CHECK(load_json(again / "manifest.json")["config_digest"] == manifest["config_digest"]);

    // evaluating a saved placement reproduces its row
    const auto& row = rows.front();
    fs::path placement;
    for (const auto& e : fs::directory_iterator(run_dir / "placements")) {
        if (e.path().filename().string().find(row.digest) != std::string::npos) placement = e.path();
    }
    REQUIRE_FALSE(placement.empty());
    const auto eval_dir = dir / "eval";
    const auto ev = run({"evaluate", "--platform", (run_dir / "platform.json").string(), "--config",
                         (run_dir / "model.json").string(), "--placement", placement.string(), "--out",
                         eval_dir.string()});
    REQUIRE(ev.code == 0);
    const auto eval_rows = parse_pareto_csv(read_text(eval_dir / "evaluation.csv"));
    REQUIRE(eval_rows.size() == 1);
    CHECK(eval_rows[0].digest == row.digest);
    CHECK(eval_rows[0].cells == row.cells);
    for (const char* f : {"report.json", "thermal_map.csv", "radix.csv", "links.csv", "traffic.csv"}) {
        CHECK(fs::exists(eval_dir / f));
    }

    // a corrupted placement fails validation with exit code 1
    json broken = load_json(placement);
    broken["core_slot"][0] = broken["core_slot"][1];
    broken.erase("digest");
    write_text(dir / "broken.json", broken.dump());
    const auto bad = run({"evaluate", "--platform", (run_dir / "platform.json").string(), "--placement",
                          (dir / "broken.json").string(), "--out", (dir / "bad").string()});
    CHECK(bad.code == 1);
    CHECK_FALSE(bad.err.empty());
}

TEST_CASE("optimize records failures in the manifest") {
    const auto dir = scratch("failed");
    const auto o = run({"optimize", "--model", "bert-base", "--epochs", "0", "--out", (dir / "run").string()});
    CHECK(o.code != 0);
}
