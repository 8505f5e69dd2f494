#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "cpca/error.hpp"
#include "cpca/frame_io.hpp"
#include "cpca/serialization.hpp"

using namespace cpca;
namespace fs = std::filesystem;

namespace
{

int run(std::vector<std::string> args)
{
    args.insert(args.begin(), "cpca");
    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    return cli::run_main(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string &name)
{
    const fs::path dir = fs::temp_directory_path() / "cpca_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

bool throws_code(const std::function<void()> &fn, ErrorCode code)
{
    try {
        fn();
    } catch (const Error &e) {
        return e.code() == code;
    }
    return false;
}

} // namespace

TEST_CASE("presets parse and build")
{
    const TimeGrid grid(1.5e-6, 64);
    for (const char *name : {"phi1", "phi2", "phi3", "phi4", "phi5", "phi6"}) {
        CHECK(is_preset(name));
        const BuiltState b = build_state(preset_config(name), grid);
        CHECK_FALSE(b.state.carriers().empty());
        // configs survive a JSON round trip
        const StateConfig again = parse_state_config(state_config_json(preset_config(name)));
        CHECK(state_config_json(again) == state_config_json(preset_config(name)));
    }
    CHECK_FALSE(is_preset("phi7"));
}

TEST_CASE("state config validation is strict")
{
    CHECK(throws_code([] { parse_state_config(Json::array()); }, ErrorCode::config));
    CHECK(throws_code([] { parse_state_config({{"constructor", "fock"}, {"extra", 1}}); },
                      ErrorCode::config));
    CHECK(throws_code([] { parse_state_config({{"constructor", "nope"}}); }, ErrorCode::config));
    CHECK(throws_code([] { parse_state_config({{"constructor", "fock"}, {"params", Json::object()}}); },
                      ErrorCode::config));
    // constructor preconditions surface as config errors before any simulation
    const StateConfig bad = parse_state_config(
        {{"constructor", "single_photon_qubit"}, {"params", {{"p1", 1.0}, {"p2", 1.0}}}});
    CHECK(throws_code([&] { build_state(bad, TimeGrid(1.5e-6, 64)); }, ErrorCode::config));
}

TEST_CASE("complex JSON forms")
{
    CHECK(complex_from_json(Json::array({1.0, -2.0}), "z") == Complex(1.0, -2.0));
    CHECK(complex_from_json(Json(0.5), "z") == Complex(0.5, 0.0));
    CHECK(throws_code([] { complex_from_json(Json("x"), "z"); }, ErrorCode::config));
}

TEST_CASE("tmf csv round trip")
{
    const TimeGrid grid(1.5e-6, 64);
    const TimeBinPair tb = timebin_pair(grid);
    const fs::path p = fresh_dir("tmf") / "w1.csv";
    write_tmf_csv(p, tb.w1);
    const Tmf back = read_tmf_csv(p, grid);
    CHECK((back.amp() - tb.w1.amp()).norm() == 0.0);
    CHECK(throws_code([&] { read_tmf_csv(p, TimeGrid(1.5e-6, 32)); }, ErrorCode::grid_mismatch));
}

TEST_CASE("simulate writes the documented file size and a manifest")
{
    const fs::path dir = fresh_dir("size");
    const fs::path out = dir / "phi1.bin";
    REQUIRE(run({"simulate", "--state", "phi1", "--frames", "500", "--seed", "3", "--out",
                 out.string()}) == 0);
    CHECK(fs::file_size(out) == 8 + 16 + 500 * 64 * 16);
    const Json m = read_json(sidecar_path(out));
    CHECK(m["seed"] == 3);
    CHECK(m["frames"] == 500);
    CHECK(m["tool_version"] == kToolVersion);
    CHECK(m["outputs"][0]["sha256"] == sha256_file(out));
}

TEST_CASE("paper-scale grid flags are accepted")
{
    const fs::path dir = fresh_dir("paper");
    CHECK(run({"simulate", "--state", "phi2", "-T", "1.5e-6", "-M", "1500", "--frames", "20",
               "--out", (dir / "f.bin").string()}) == 0);
    CHECK(fs::file_size(dir / "f.bin") == 8 + 16 + 20 * 1500 * 16);
}

TEST_CASE("exit codes")
{
    const fs::path dir = fresh_dir("codes");
    CHECK(run({"simulate", "--state", "phi9", "--out", (dir / "x.bin").string()}) == 2);
    CHECK(run({"simulate", "--state", "phi1", "--bogus", "--out", (dir / "x.bin").string()}) == 2);
    CHECK(run({"simulate", "--state", "phi1", "--filters", "on", "--lowpass", "1e9", "--out",
               (dir / "x.bin").string()}) == 2);
    CHECK(run({}) == 2);

    {
        std::ofstream junk(dir / "junk.bin", std::ios::binary);
        junk << "not a frame file at all, definitely not";
    }
    CHECK(run({"analyze", "--frames", (dir / "junk.bin").string(), "--out",
               (dir / "a.json").string()}) == 3);
    CHECK(run({"analyze", "--frames", (dir / "none.bin").string(), "--out",
               (dir / "a.json").string()}) == 3);

    // single photon: one principal mode, decompose2 refuses
    REQUIRE(run({"simulate", "--state", "phi1", "--frames", "2000", "--out",
                 (dir / "phi1.bin").string()}) == 0);
    CHECK(run({"decompose2", "--frames", (dir / "phi1.bin").string(), "--out",
               (dir / "d.json").string()}) == 3);
    CHECK(run({"decompose2", "--oracle", "phi1", "--out", (dir / "d.json").string()}) == 3);
    CHECK(run({"decompose2", "--out", (dir / "d.json").string()}) == 2);
}

TEST_CASE("analyze and report on vacuum")
{
    const fs::path dir = fresh_dir("vacuum");
    const fs::path cfg = dir / "vac.json";
    write_json(cfg, {{"constructor", "vacuum"}});
    REQUIRE(run({"simulate", "--state", cfg.string(), "--frames", "4000", "--out",
                 (dir / "v.bin").string()}) == 0);
    REQUIRE(run({"analyze", "--frames", (dir / "v.bin").string(), "--out",
                 (dir / "a.json").string()}) == 0);
    const Json a = read_json(dir / "a.json");
    CHECK(a["modes_reported"] == 50);
    CHECK(a["modes_above_vacuum"] == 0);
    const double lo = a["vacuum_band"]["nbar_lower"];
    const double hi = a["vacuum_band"]["nbar_upper"];
    for (std::size_t k = 0; k < 50; ++k) {
        const double n = a["nbar"][k];
        const double se = a["nbar_se"][k];
        CHECK(n >= lo - 3 * se);
        CHECK(n <= hi + 3 * se);
    }
    REQUIRE(run({"report", "--decomposition", (dir / "a.json").string(), "--out",
                 (dir / "rep").string()}) == 0);
    const Json r = read_json(dir / "rep" / "report.json");
    for (const auto &f : r["manifest"]["outputs"]) {
        CHECK(fs::exists(dir / "rep" / f["path"].get<std::string>()));
    }
    // flat spectrum: every listed eigenvalue inside the vacuum band
    std::ifstream spec(dir / "rep" / "spectrum.csv");
    std::string line;
    std::getline(spec, line);
    int rows = 0;
    while (std::getline(spec, line)) {
        const double lam = std::stod(line.substr(line.find(',') + 1));
        CHECK(lam - 1.0 <= hi + 0.05);
        CHECK(lam - 1.0 >= lo - 0.05);
        ++rows;
    }
    CHECK(rows == 50);
}

TEST_CASE("oracle decompose2 and report")
{
    const fs::path dir = fresh_dir("oracle");
    REQUIRE(run({"decompose2", "--oracle", "phi5", "--out", (dir / "d5.json").string()}) == 0);
    const Json d = read_json(dir / "d5.json");
    CHECK(d["branch"] == "degenerate");
    REQUIRE(run({"report", "--decomposition", (dir / "d5.json").string(), "--out",
                 (dir / "rep").string()}) == 0);
    const Json r = read_json(dir / "rep" / "report.json");
    // each eigenmode of phi5 holds 0 or 2 photons with equal weight
    const double p0 = r["modes"][0]["p"][0];
    const double p2 = r["modes"][0]["p"][2];
    CHECK(p0 == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(p2 == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("pipeline output is byte-identical across runs")
{
    auto pipeline = [](const fs::path &dir) {
        REQUIRE(run({"simulate", "--state", "phi5", "--frames", "3000", "--seed",
                     "11", "--out", (dir / "f.bin").string()}) == 0);
        REQUIRE(run({"analyze", "--frames", (dir / "f.bin").string(), "--modes", "4", "--out",
                     (dir / "a.json").string()}) == 0);
        REQUIRE(run({"decompose2", "--frames", (dir / "f.bin").string(), "--out",
                     (dir / "d.json").string()}) == 0);
    };
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    // same relative names in both runs so the JSON paths match
    const fs::path cwd = fs::current_path();
    fs::current_path(a);
    pipeline(".");
    fs::current_path(b);
    pipeline(".");
    fs::current_path(cwd);
    for (const auto &entry : fs::directory_iterator(a)) {
        const fs::path other = b / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK_MESSAGE(slurp(entry.path()) == slurp(other), entry.path().filename().string());
    }
}
