#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ct3s/experiment.hpp"
#include "ct3s/io.hpp"

using namespace ct3s;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "ct3s_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

RunConfig small_cfg() {
    RunConfig cfg;
    cfg.rate = 64.0;
    cfg.sigma = 0.15;
    cfg.eta_max = 32.0;
    cfg.lambda_min = -4.0;
    cfg.lambda_max = 4.0;
    cfg.lambda_step = 0.5;
    cfg.t_stride = 2;
    cfg.sep.expected_components = 1;
    cfg.sep.rho = 0.15;
    cfg.sep.delta = 0.5;
    cfg.sep.box_eta = 0.5;
    cfg.sep.box_lambda = 0.5;
    cfg.eval_interval = {1.0, 3.0};
    return cfg;
}

SignalModel tone4() {
    SignalModel m;
    m.t_span = {0.0, 4.0};
    m.components.push_back(make_lfm(1.0, 10.0, 0.0, m.t_span));
    return m;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CT3S_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("separation pipeline is deterministic") {
    const auto cfg = small_cfg();
    const auto m = tone4();
    const auto a = run_separation(cfg, m);
    const auto b = run_separation(cfg, m);
    REQUIRE(a.ridge.traces.size() == b.ridge.traces.size());
    for (std::size_t k = 0; k < a.ridge.traces.size(); ++k)
        for (std::size_t i = 0; i < a.ridge.traces[k].size(); ++i) {
            CHECK(a.ridge.traces[k][i].eta == b.ridge.traces[k][i].eta);
            CHECK(a.ridge.traces[k][i].lambda == b.ridge.traces[k][i].lambda);
            CHECK(a.ridge.traces[k][i].q == b.ridge.traces[k][i].q);
            CHECK(a.ridge.traces[k][i].flag == b.ridge.traces[k][i].flag);
        }
}

TEST_CASE("summary metrics equal values recomputed from the exported CSVs") {
    const auto cfg = small_cfg();
    const auto m = tone4();
    const auto r = run_separation(cfg, m);
    const auto d = fresh_dir("summary_check");
    write_ridge_csv((d / "ridge.csv").string(), r.ridge);

    // recompute max IF error from the CSV
    std::ifstream f(d / "ridge.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "component,t,eta_hat,lambda_hat,q_re,q_im,flag");
    double max_err = 0.0;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        std::getline(ss, tok, ',');
        const double t = std::stod(tok);
        std::getline(ss, tok, ',');
        const double eta = std::stod(tok);
        if (t >= 1.0 && t <= 3.0) max_err = std::max(max_err, std::abs(eta - 10.0));
    }
    REQUIRE(r.metrics.size() == 1);
    CHECK(max_err == Catch::Approx(r.metrics[0].max_if_error).margin(1e-12));
}

TEST_CASE("absolute threshold above the signal level fails softly") {
    auto cfg = small_cfg();
    cfg.sep.threshold_is_fraction = false;
    cfg.sep.threshold = 99.0;
    const auto r = run_separation(cfg, tone4());
    CHECK(r.status == RunStatus::soft_failure);
    CHECK(r.summary["status"] == "soft_failure");
}

TEST_CASE("trend convention pins component 0 at the origin") {
    auto cfg = small_cfg();
    cfg.sep.expect_trend = true;
    SignalModel m = tone4();
    m.components.insert(m.components.begin(), make_trend(2.0));
    const auto r = run_separation(cfg, m);
    REQUIRE(r.status == RunStatus::ok);
    REQUIRE(r.ridge.traces.size() == 2);
    for (const auto& e : r.ridge.traces[0]) {
        CHECK(e.eta == 0.0);
        CHECK(e.lambda == 0.0);
        if (!e.boundary) CHECK(std::abs(e.q - cplx(2.0, 0.0)) < 2e-3);
    }
}

TEST_CASE("cube binary round trip") {
    const auto m = tone4();
    const auto sig = sample(m, 64.0);
    auto grid = make_cube_grid(sig, 16.0, -2.0, 2.0, 1.0, [](double) { return 0.15; }, 64);
    const auto cube = chirplet_cube(sig, grid, {}, 1);
    const auto d = fresh_dir("cube_io");
    write_cube((d / "cube.bin").string(), cube, 0.15);
    const auto back = read_cube((d / "cube.bin").string());
    REQUIRE(back.values.size() == cube.values.size());
    for (std::size_t i = 0; i < cube.values.size(); ++i) CHECK(back.values[i] == cube.values[i]);
    CHECK(back.header["sigma"] == 0.15);
    CHECK(back.header["nfft"] == grid.nfft);
}

TEST_CASE("retrieve reads the cube at the ridge and keeps flags") {
    const auto cfg = small_cfg();
    const auto m = tone4();
    const auto r = run_separation(cfg, m);
    const auto sig = sample(m, cfg.rate);
    auto grid = make_cube_grid(sig, cfg.eta_max, cfg.lambda_min, cfg.lambda_max,
                               cfg.lambda_step, [](double) { return 0.15; }, cfg.t_stride);
    const auto cube = chirplet_cube(sig, grid, {}, 1);
    const auto comps = retrieve(cube, r.ridge);
    REQUIRE(comps.size() == 1);
    for (std::size_t i = 0; i < comps[0].t.size(); ++i) {
        CHECK(comps[0].amplitude_estimate[i] == std::abs(comps[0].samples[i]));
        CHECK(comps[0].flags[i] == r.ridge.traces[0][i].flag);
        if (r.ridge.traces[0][i].flag == ridge_clean)
            CHECK(std::abs(comps[0].samples[i] - r.ridge.traces[0][i].q) < 1e-12);
    }
}

TEST_CASE("cli synth writes the sampled signal") {
    const auto d = fresh_dir("cli_synth");
    REQUIRE(run_cli("synth --preset two-lfm --out " + d.string()) == 0);
    std::ifstream f(d / "signal.csv");
    REQUIRE(f);
    std::string line;
    std::getline(f, line);
    CHECK(line == "t,re,im");
    std::size_t rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 1025);
    CHECK(fs::exists(d / "ground_truth.csv"));
}

TEST_CASE("cli synth radar row count") {
    const auto d = fresh_dir("cli_synth_radar");
    REQUIRE(run_cli("synth --preset radar --out " + d.string()) == 0);
    std::ifstream f(d / "signal.csv");
    std::string line;
    std::getline(f, line);
    std::size_t rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 2049);
}

TEST_CASE("cli custom model synthesis matches the closed form") {
    const auto d = fresh_dir("cli_custom");
    SignalModel m = tone4();
    {
        std::ofstream f(d / "model.json");
        f << model_to_json(m).dump();
    }
    REQUIRE(run_cli("synth --model " + (d / "model.json").string() +
                    " --rate 64 --eta-max 32 --lambda-range -4 4 --lambda-step 0.5 --out " +
                    d.string()) == 0);
    std::ifstream f(d / "signal.csv");
    std::string line;
    std::getline(f, line);
    std::getline(f, line);  // t = 0: re = cos(0) = 1
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    std::getline(ss, tok, ',');
    CHECK(std::stod(tok) == Catch::Approx(1.0));
}

TEST_CASE("cli error paths use exit code 2") {
    CHECK(run_cli("synth --preset unknown-preset --out /tmp/ct3s_x") == 2);
    CHECK(run_cli("separate --rate 64 --out /tmp/ct3s_x") == 2);  // no model, no preset
    CHECK(run_cli("definitely-not-a-subcommand") == 2);
}

TEST_CASE("cli separate on a small model produces the full output set") {
    const auto d = fresh_dir("cli_sep");
    SignalModel m = tone4();
    {
        std::ofstream f(d / "model.json");
        f << model_to_json(m).dump();
    }
    const std::string base = "--model " + (d / "model.json").string() +
                             " --rate 64 --sigma 0.15 --eta-max 32 --lambda-range -4 4 "
                             "--lambda-step 0.5 --k 1 --t-stride 2 --eval-interval 1 3 --out " +
                             d.string();
    REQUIRE(run_cli("separate " + base) == 0);
    CHECK(fs::exists(d / "ridge.csv"));
    CHECK(fs::exists(d / "component_0.csv"));
    CHECK(fs::exists(d / "summary.json"));
    const json summary = json::parse(slurp(d / "summary.json"));
    CHECK(summary["status"] == "ok");
    CHECK(summary["components"][0]["max_if_error"].get<double>() < 1.0);
}

TEST_CASE("cli config file with flag overrides") {
    const auto d = fresh_dir("cli_config");
    {
        std::ofstream f(d / "cfg.json");
        f << json{{"preset", "two-lfm"}, {"t_stride", 64}, {"out", d.string()}}.dump();
    }
    REQUIRE(run_cli("ridges --config " + (d / "cfg.json").string()) == 0);
    CHECK(fs::exists(d / "ridge.csv"));
}

TEST_CASE("cli pft and admissibility reports") {
    CHECK(run_cli("pft --eta 0.3 --lambda 0.7") == 0);
    CHECK(run_cli("admissibility --grid-max 2 --grid-step 0.1") == 0);
}

TEST_CASE("cli transform writes the cube and an optional slice") {
    const auto d = fresh_dir("cli_transform");
    SignalModel m = tone4();
    {
        std::ofstream f(d / "model.json");
        f << model_to_json(m).dump();
    }
    REQUIRE(run_cli("transform --model " + (d / "model.json").string() +
                    " --rate 64 --eta-max 16 --lambda-range -2 2 --lambda-step 1 "
                    "--t-stride 32 --slice-t 2.0 --out " +
                    d.string()) == 0);
    REQUIRE(fs::exists(d / "cube.bin"));
    REQUIRE(fs::exists(d / "slice.csv"));
    const auto cube = read_cube((d / "cube.bin").string());
    CHECK(cube.header["lambda"]["count"] == 5);

    std::ifstream f(d / "slice.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "eta,lambda,re,im,abs");
}

TEST_CASE("cli bounds with observed cross-reference") {
    const auto d = fresh_dir("cli_bounds");
    SignalModel m = tone4();
    {
        std::ofstream f(d / "model.json");
        f << model_to_json(m).dump();
    }
    const std::string base = "--model " + (d / "model.json").string() +
                             " --rate 64 --sigma 0.15 --eta-max 32 --lambda-range -4 4 "
                             "--lambda-step 0.5 --k 1 --t-stride 8 --eval-interval 1 3 --out " +
                             d.string();
    REQUIRE(run_cli("separate " + base) == 0);
    REQUIRE(run_cli("bounds " + base + " --ridge-csv " + (d / "ridge.csv").string()) == 0);
    const json out = json::parse(slurp(d / "bounds.json"));
    REQUIRE(out.contains("observed"));
    // a lone exact tone has Res = 0: bd1 is valid everywhere and the observed
    // IF error is dominated at every compared point
    CHECK(out["observed"]["points_with_valid_bounds"].get<int>() > 0);
    CHECK(out["observed"]["if_error_within_bd1"] == out["observed"]["points_with_valid_bounds"]);
    CHECK(fs::exists(d / "bounds.csv"));
}
