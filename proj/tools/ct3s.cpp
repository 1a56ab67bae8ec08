#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ct3s/experiment.hpp"
#include "ct3s/io.hpp"

namespace fs = std::filesystem;
using namespace ct3s;

namespace {

struct CliValues {
    std::string config_path;
    std::string preset;
    std::string model_path;
    double rate = 0.0;
    double sigma = 0.0;
    double eta_max = 0.0;
    std::vector<double> lambda_range;
    double lambda_step = 0.0;
    double threshold_frac = 0.0;
    double rho = 0.0;
    double delta = 0.0;
    int k = 0;
    std::vector<double> eval_interval;
    std::string out_dir;
    int t_stride = 0;
    int threads = 0;
};

void add_run_flags(CLI::App* cmd, CliValues& v) {
    cmd->add_option("--config", v.config_path, "JSON config file; flags override it");
    cmd->add_option("--preset", v.preset, "experiment preset: two-lfm | radar");
    cmd->add_option("--model", v.model_path, "model definition JSON");
    cmd->add_option("--rate", v.rate, "sample rate, Hz");
    cmd->add_option("--sigma", v.sigma, "window width, seconds");
    cmd->add_option("--eta-max", v.eta_max, "frequency axis upper end, Hz");
    cmd->add_option("--lambda-range", v.lambda_range, "chirp-rate axis, Hz/s")
        ->expected(2);
    cmd->add_option("--lambda-step", v.lambda_step, "chirp-rate step, Hz/s");
    cmd->add_option("--threshold-frac", v.threshold_frac, "threshold as fraction of slice max");
    cmd->add_option("--rho", v.rho, "metric weight rho, seconds");
    cmd->add_option("--delta", v.delta, "cluster cutoff Delta, Hz");
    cmd->add_option("--k", v.k, "expected component count");
    cmd->add_option("--eval-interval", v.eval_interval, "evaluation interval, seconds")
        ->expected(2);
    cmd->add_option("--out", v.out_dir, "output directory");
    cmd->add_option("--t-stride", v.t_stride, "t-axis stride in samples");
    cmd->add_option("--threads", v.threads, "worker threads");
}

RunConfig resolve_config(const CLI::App* cmd, const CliValues& v) {
    json jc = json::object();
    if (!v.config_path.empty()) {
        std::ifstream f(v.config_path);
        if (!f) throw std::invalid_argument("cannot open config: " + v.config_path);
        f >> jc;
    }
    std::string preset = jc.value("preset", std::string());
    if (cmd->count("--preset")) preset = v.preset;

    RunConfig c;
    if (!preset.empty()) c = make_preset(preset);

    auto set_d = [&](const char* flag, const char* key, double& dst, double cli_val) {
        if (cmd->count(flag))
            dst = cli_val;
        else if (jc.contains(key))
            dst = jc[key].get<double>();
    };
    auto set_i = [&](const char* flag, const char* key, int& dst, int cli_val) {
        if (cmd->count(flag))
            dst = cli_val;
        else if (jc.contains(key))
            dst = jc[key].get<int>();
    };
    if (cmd->count("--model"))
        c.model_path = v.model_path;
    else if (jc.contains("model"))
        c.model_path = jc["model"].get<std::string>();
    set_d("--rate", "rate", c.rate, v.rate);
    set_d("--sigma", "sigma", c.sigma, v.sigma);
    set_d("--eta-max", "eta_max", c.eta_max, v.eta_max);
    if (cmd->count("--lambda-range")) {
        c.lambda_min = v.lambda_range[0];
        c.lambda_max = v.lambda_range[1];
    } else if (jc.contains("lambda_range")) {
        c.lambda_min = jc["lambda_range"][0].get<double>();
        c.lambda_max = jc["lambda_range"][1].get<double>();
    }
    set_d("--lambda-step", "lambda_step", c.lambda_step, v.lambda_step);
    set_d("--threshold-frac", "threshold_frac", c.sep.threshold, v.threshold_frac);
    set_d("--rho", "rho", c.sep.rho, v.rho);
    set_d("--delta", "delta", c.sep.delta, v.delta);
    set_i("--k", "k", c.sep.expected_components, v.k);
    if (cmd->count("--eval-interval")) {
        c.eval_interval = {v.eval_interval[0], v.eval_interval[1]};
    } else if (jc.contains("eval_interval")) {
        c.eval_interval = {jc["eval_interval"][0].get<double>(),
                           jc["eval_interval"][1].get<double>()};
    }
    if (cmd->count("--out"))
        c.out_dir = v.out_dir;
    else if (jc.contains("out"))
        c.out_dir = jc["out"].get<std::string>();
    set_i("--t-stride", "t_stride", c.t_stride, v.t_stride);
    set_i("--threads", "threads", c.n_threads, v.threads);
    if (jc.contains("box_eta")) c.sep.box_eta = jc["box_eta"].get<double>();
    if (jc.contains("box_lambda")) c.sep.box_lambda = jc["box_lambda"].get<double>();
    if (jc.contains("fit_window")) c.sep.fit_window = jc["fit_window"].get<double>();
    if (jc.contains("overlap_tol_eta")) c.sep.overlap_tol_eta = jc["overlap_tol_eta"].get<double>();
    if (jc.contains("overlap_tol_lambda"))
        c.sep.overlap_tol_lambda = jc["overlap_tol_lambda"].get<double>();

    if (!(c.rate > 0.0) || !(c.eta_max > 0.0) || !(c.lambda_step > 0.0) ||
        !(c.lambda_max > c.lambda_min))
        throw std::invalid_argument("incomplete run configuration (rate/eta/lambda grids)");
    if (c.preset.empty() && c.model_path.empty())
        throw std::invalid_argument("either --preset or --model is required");
    // custom model runs default the eval interval to the full span
    if (c.eval_interval.hi <= c.eval_interval.lo) {
        const SignalModel m = config_model(c);
        c.eval_interval = m.t_span;
    }
    return c;
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty() && dir != ".") fs::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

int write_separation_outputs(const RunConfig& cfg, const SeparationResult& r,
                             bool components_too) {
    ensure_dir(cfg.out_dir);
    write_ridge_csv(join(cfg.out_dir, "ridge.csv"), r.ridge);
    if (components_too) {
        for (const auto& c : r.components) {
            std::vector<RecoveredComponent> one{c};
            write_components_csv(
                join(cfg.out_dir, "component_" + std::to_string(c.component_index) + ".csv"),
                one);
        }
        std::ofstream f(join(cfg.out_dir, "summary.json"));
        f << r.summary.dump(2) << '\n';
    }
    return static_cast<int>(r.status);
}

int cmd_synth(const RunConfig& cfg) {
    const SignalModel m = config_model(cfg);
    const SampledSignal sig = sample(m, cfg.rate);
    ensure_dir(cfg.out_dir);
    write_signal_csv(join(cfg.out_dir, "signal.csv"), sig);
    write_ground_truth_csv(join(cfg.out_dir, "ground_truth.csv"), m, sig);
    std::cout << "wrote " << sig.samples.size() << " samples to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_transform(const RunConfig& cfg, std::optional<double> slice_t) {
    const SignalModel m = config_model(cfg);
    const SampledSignal sig = sample(m, cfg.rate);
    const double sg = cfg.sigma;
    CubeGrid grid = make_cube_grid(sig, cfg.eta_max, cfg.lambda_min, cfg.lambda_max,
                                   cfg.lambda_step, [sg](double) { return sg; }, cfg.t_stride,
                                   cfg.window.truncation_radius);
    const std::size_t bytes = grid.t_axis.size() * static_cast<std::size_t>(grid.eta.count) *
                              static_cast<std::size_t>(grid.lambda.count) * 16;
    if (bytes > (2ull << 30))
        throw std::invalid_argument("cube would exceed 2 GiB; raise --t-stride or shrink grids");
    const TransformCube cube = chirplet_cube(sig, grid, cfg.window, cfg.n_threads);
    ensure_dir(cfg.out_dir);
    write_cube(join(cfg.out_dir, "cube.bin"), cube, cfg.sigma);
    if (slice_t) {
        int best = 0;
        for (std::size_t i = 0; i < grid.t_axis.size(); ++i)
            if (std::abs(grid.t_axis[i] - *slice_t) <
                std::abs(grid.t_axis[static_cast<std::size_t>(best)] - *slice_t))
                best = static_cast<int>(i);
        write_slice_csv(join(cfg.out_dir, "slice.csv"), cube, best);
    }
    std::cout << "wrote cube " << grid.t_axis.size() << " x " << grid.eta.count << " x "
              << grid.lambda.count << " to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_separate(const RunConfig& cfg, bool ridges_only) {
    const SeparationResult r = run_separation(cfg);
    const int rc = write_separation_outputs(cfg, r, !ridges_only);
    std::cout << r.summary.dump(2) << '\n';
    return rc;
}

int cmd_bounds(const RunConfig& cfg, const std::string& ridge_csv) {
    const SignalModel m = config_model(cfg);
    const SampledSignal sig = sample(m, cfg.rate);
    std::vector<double> t_axis;
    for (std::size_t n = 0; n < sig.samples.size(); n += static_cast<std::size_t>(cfg.t_stride))
        t_axis.push_back(sig.t_at(n));
    const auto reports = run_bounds(cfg, m, t_axis, std::nullopt);
    if (reports.empty()) throw std::invalid_argument("eval interval excludes every grid point");
    ensure_dir(cfg.out_dir);
    write_bound_curves_csv(join(cfg.out_dir, "bounds.csv"), reports);
    json arr = json::array();
    int pass = 0;
    for (const auto& r : reports) {
        arr.push_back(bound_report_to_json(r));
        if (r.hypotheses.overall) ++pass;
    }
    json out{{"reports", arr}, {"hypotheses_pass_count", pass}};
    if (!ridge_csv.empty()) {
        // cross-reference observed ridge errors against the per-t bounds
        const RidgeSet ridge = read_ridge_csv(ridge_csv);
        const auto comps = to_components(ridge);
        const auto metrics = detail::evaluate_against_model(m, ridge, comps, cfg.eval_interval,
                                                            cfg.lambda_step);
        BoundParams bp{cfg.sigma, cfg.sep.delta, cfg.sep.rho};
        const int half = static_cast<int>(std::floor(cfg.window.truncation_radius * cfg.sigma *
                                                     sig.sample_rate));
        const double de = sig.sample_rate / next_pow2(4 * (2 * half + 1));
        int dominated = 0, compared = 0;
        for (const auto& mm : metrics) {
            for (const auto& e : ridge.traces[static_cast<std::size_t>(mm.tracked_index)]) {
                if (!cfg.eval_interval.contains(e.t)) continue;
                const auto bc = BoundContext::from_model(m, e.t, bp);
                const auto l = static_cast<std::size_t>(mm.model_index);
                const auto b1 = bd1(bc, l);
                if (!b1.valid) continue;
                ++compared;
                const auto& mc = m.components[l];
                if (std::abs(e.eta - mc.phase_d1(e.t)) <= b1.value + de + 1e-12) ++dominated;
            }
        }
        out["observed"] = {{"ridge_csv", ridge_csv},
                           {"points_with_valid_bounds", compared},
                           {"if_error_within_bd1", dominated}};
    }
    std::ofstream f(join(cfg.out_dir, "bounds.json"));
    f << out.dump(2) << '\n';
    std::cout << "bound reports: " << reports.size() << ", hypotheses pass at " << pass
              << " of them\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chirplet-transform signal separation (CT3S): synthesis, transform, "
                 "ridge extraction, recovery and error-bound reports"};
    app.require_subcommand(1);
    CliValues v;

    auto* synth = app.add_subcommand("synth", "sample a model to CSV plus ground truth");
    auto* transform = app.add_subcommand("transform", "materialize a transform cube");
    auto* ridges = app.add_subcommand("ridges", "extract ridge traces only");
    auto* separate = app.add_subcommand("separate", "full pipeline: ridges plus recovery");
    auto* bounds = app.add_subcommand("bounds", "per-t error-bound reports");
    for (auto* c : {synth, transform, ridges, separate, bounds}) add_run_flags(c, v);
    double slice_t = 0.0;
    transform->add_option("--slice-t", slice_t, "also export the nearest t plane as CSV");
    std::string ridge_csv;
    bounds->add_option("--ridge-csv", ridge_csv,
                       "cross-reference observed ridge errors from a separate run");

    auto* pft_cmd = app.add_subcommand("pft", "polynomial Fourier transform of the window");
    double pft_eta = 0.0, pft_lambda = 0.0;
    pft_cmd->add_option("--eta", pft_eta)->required();
    pft_cmd->add_option("--lambda", pft_lambda)->required();

    auto* adm = app.add_subcommand("admissibility", "admissibility checks for the Gaussian window");
    double adm_b = admissibility_b0(), adm_max = 5.0, adm_step = 0.01;
    adm->add_option("--b", adm_b, "envelope level offset");
    adm->add_option("--grid-max", adm_max);
    adm->add_option("--grid-step", adm_step);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (pft_cmd->parsed()) {
            WindowSpec w;
            const cplx c = pft_closed(pft_eta, pft_lambda);
            const cplx n = pft_numeric(w, pft_eta, pft_lambda);
            json out{{"eta", pft_eta},
                     {"lambda", pft_lambda},
                     {"closed", {c.real(), c.imag()}},
                     {"numeric", {n.real(), n.imag()}},
                     {"envelope", pft_envelope(pft_eta, pft_lambda)}};
            std::cout << out.dump(2) << '\n';
            return 0;
        }
        if (adm->parsed()) {
            const auto rep = check_admissibility(WindowSpec{}, adm_b, adm_max, adm_max, adm_step);
            json out{{"b", adm_b},
                     {"decay_constant", rep.decay_constant},
                     {"points_checked", rep.points_checked},
                     {"decay_ok", rep.decay_ok},
                     {"symmetry_ok", rep.symmetry_ok},
                     {"envelope_ok", rep.envelope_ok},
                     {"pass", rep.pass()}};
            std::cout << out.dump(2) << '\n';
            return rep.pass() ? 0 : 3;
        }
        const CLI::App* active = app.get_subcommands().front();
        const RunConfig cfg = resolve_config(active, v);
        if (synth->parsed()) return cmd_synth(cfg);
        if (transform->parsed())
            return cmd_transform(cfg, transform->count("--slice-t")
                                          ? std::optional<double>(slice_t)
                                          : std::nullopt);
        if (ridges->parsed()) return cmd_separate(cfg, true);
        if (separate->parsed()) return cmd_separate(cfg, false);
        if (bounds->parsed()) return cmd_bounds(cfg, ridge_csv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
