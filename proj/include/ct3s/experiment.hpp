#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ct3s/bounds.hpp"
#include "ct3s/io.hpp"
#include "ct3s/ridge.hpp"
#include "ct3s/signal_model.hpp"
#include "ct3s/transform.hpp"

namespace ct3s {

struct RunConfig {
    std::string preset;      // "two-lfm" | "radar" | "" (custom model)
    std::string model_path;  // JSON model when no preset
    double rate = 0.0;
    double sigma = 0.15;
    double eta_max = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double lambda_step = 0.0;
    int t_stride = 1;
    SeparationParams sep;
    Interval eval_interval;
    std::string out_dir = ".";
    WindowSpec window;
    int n_threads = 2;
};

inline SignalModel two_lfm_model() {
    SignalModel m;
    m.t_span = {0.0, 8.0};
    m.components.push_back(make_lfm(1.0, 42.0, -4.0, m.t_span));
    m.components.push_back(make_lfm(1.0, 10.0, 4.0, m.t_span));
    return m;
}

inline SignalModel radar_model() {
    SignalModel m;
    m.t_span = {0.0, 1.0};
    const double depth = 30.0 / kPi;
    m.components.push_back(make_sfm(1.0, 250.0, depth, 3.0, m.t_span));
    m.components.push_back(make_sfm(1.0, 250.0, -depth, 3.0, m.t_span));
    m.components.push_back(make_lfm(1.0, 250.0, 0.0, m.t_span));
    return m;
}

// Preset parameter sets. Rates, spans and sigma come from the experiments;
// grids, thresholds and tracker windows are the documented defaults for the
// values the experiments leave open.
inline RunConfig make_preset(const std::string& name) {
    RunConfig c;
    c.preset = name;
    if (name == "two-lfm") {
        c.rate = 128.0;
        c.sigma = 0.15;
        c.eta_max = 64.0;
        c.lambda_min = -10.0;
        c.lambda_max = 10.0;
        c.lambda_step = 0.25;
        c.t_stride = 1;
        c.sep.threshold = 0.3;
        c.sep.rho = 0.15;
        c.sep.delta = 0.5;
        c.sep.expected_components = 2;
        c.sep.box_eta = 0.25;
        c.sep.box_lambda = 0.25;
        c.sep.fit_window = 0.5;
        c.sep.overlap_tol_eta = 0.13;
        c.sep.overlap_tol_lambda = 0.13;
        c.eval_interval = {1.0, 7.0};
    } else if (name == "radar") {
        c.rate = 2048.0;
        c.sigma = 0.15;
        c.eta_max = 512.0;
        c.lambda_min = -4000.0;
        c.lambda_max = 4000.0;
        c.lambda_step = 40.0;
        c.t_stride = 4;
        c.sep.threshold = 0.4;  // 0.3 shatters the plane into dozens of clusters
        c.sep.rho = 0.15;
        c.sep.delta = 20.0;
        c.sep.expected_components = 3;
        c.sep.box_eta = 4.0;
        c.sep.box_lambda = 160.0;
        c.sep.fit_window = 0.016;
        c.sep.overlap_tol_eta = 2.0;
        c.sep.overlap_tol_lambda = 80.0;
        c.eval_interval = {0.3, 0.7};
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    return c;
}

inline SignalModel config_model(const RunConfig& c) {
    if (c.preset == "two-lfm") return two_lfm_model();
    if (c.preset == "radar") return radar_model();
    if (!c.model_path.empty()) return load_model(c.model_path);
    throw std::invalid_argument("no preset and no model file given");
}

enum class RunStatus : int { ok = 0, invalid_config = 2, soft_failure = 3 };

struct ComponentMetrics {
    int tracked_index = -1;
    int model_index = -1;
    double max_if_error = 0.0;
    double max_cr_error = 0.0;
    double rel_l2_all = 0.0;
    double rel_l2_clean = 0.0;
    int n_eval = 0;
    int n_flagged = 0;
    bool sign_pattern_ok = false;
};

struct SeparationResult {
    RunStatus status = RunStatus::ok;
    CubeGrid grid;
    RidgeSet ridge;
    std::vector<RecoveredComponent> components;
    std::vector<int> cluster_counts;        // per slice position
    std::vector<std::uint8_t> boundary;     // per slice position
    std::vector<double> slice_max;          // per slice position, max |Q|
    int empty_threshold_slices = 0;
    std::vector<ComponentMetrics> metrics;  // tracked -> model, bijective
    json summary;
};

inline double clipped_window_mass(double t, const Interval& span, double sigma) {
    auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    return phi((span.lo - t) / sigma) + phi((t - span.hi) / sigma);
}

namespace detail {

inline std::vector<ComponentMetrics> evaluate_against_model(
    const SignalModel& model, const RidgeSet& ridge,
    const std::vector<RecoveredComponent>& comps, const Interval& eval, double lambda_step) {
    std::vector<ComponentMetrics> out;
    const std::size_t kt = ridge.traces.size();
    if (kt == 0 || model.components.size() != kt) return out;

    // mean IF distance of every (tracked, model) pair over the eval interval
    std::vector<std::vector<double>> cost(kt, std::vector<double>(kt, 0.0));
    for (std::size_t a = 0; a < kt; ++a) {
        std::size_t n = 0;
        for (const auto& e : ridge.traces[a]) {
            if (!eval.contains(e.t)) continue;
            ++n;
            for (std::size_t b = 0; b < kt; ++b)
                cost[a][b] += std::abs(e.eta - model.components[b].phase_d1(e.t));
        }
        if (n)
            for (auto& cb : cost[a]) cb /= static_cast<double>(n);
    }
    std::vector<std::size_t> perm(kt);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    std::sort(perm.begin(), perm.end());
    do {
        double c = 0.0;
        for (std::size_t a = 0; a < kt; ++a) c += cost[a][perm[a]];
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    for (std::size_t a = 0; a < kt; ++a) {
        const auto& mc = model.components[best[a]];
        ComponentMetrics m;
        m.tracked_index = static_cast<int>(a);
        m.model_index = static_cast<int>(best[a]);
        m.sign_pattern_ok = true;
        double num_all = 0.0, num_clean = 0.0, den_all = 0.0, den_clean = 0.0;
        for (std::size_t pos = 0; pos < ridge.traces[a].size(); ++pos) {
            const auto& e = ridge.traces[a][pos];
            if (!eval.contains(e.t)) continue;
            ++m.n_eval;
            const double gt_if = mc.phase_d1(e.t);
            const double gt_cr = mc.phase_d2(e.t);
            m.max_if_error = std::max(m.max_if_error, std::abs(e.eta - gt_if));
            m.max_cr_error = std::max(m.max_cr_error, std::abs(e.lambda - gt_cr));
            if (std::abs(gt_cr) > 2.0 * lambda_step) {
                if ((e.lambda > 0) != (gt_cr > 0)) m.sign_pattern_ok = false;
            } else if (std::abs(e.lambda - gt_cr) > 2.0 * lambda_step) {
                m.sign_pattern_ok = false;
            }
            const cplx truth = mc.value(e.t);
            const cplx got = comps[a].samples[pos];
            const double e2 = std::norm(got - truth);
            const double d2 = std::norm(truth);
            num_all += e2;
            den_all += d2;
            if (e.flag == ridge_clean) {
                num_clean += e2;
                den_clean += d2;
            } else {
                ++m.n_flagged;
            }
        }
        m.rel_l2_all = den_all > 0 ? std::sqrt(num_all / den_all) : 0.0;
        m.rel_l2_clean = den_clean > 0 ? std::sqrt(num_clean / den_clean) : 0.0;
        out.push_back(m);
    }
    return out;
}

}  // namespace detail

// Runs Algorithm 1 end to end over the configured grid, streaming slices:
// threshold -> cluster -> per-cluster argmax feed the tracker, which runs
// forward and backward from its seed slice; flagged entries are filled and
// read back by direct quadrature.
inline SeparationResult run_separation(const RunConfig& cfg, const SignalModel& model) {
    SeparationResult res;
    SeparationParams sep = cfg.sep;
    sep.validate();

    const SampledSignal sig = sample(model, cfg.rate);
    const double sigma = cfg.sigma;
    CubeGrid grid = make_cube_grid(sig, cfg.eta_max, cfg.lambda_min, cfg.lambda_max,
                                   cfg.lambda_step, [sigma](double) { return sigma; },
                                   cfg.t_stride, cfg.window.truncation_radius);
    SliceEngine engine(sig, grid, cfg.window, cfg.n_threads);
    res.grid = engine.grid();
    const std::size_t n_slices = res.grid.t_axis.size();
    res.cluster_counts.assign(n_slices, -1);
    res.boundary.assign(n_slices, 0);
    res.slice_max.assign(n_slices, 0.0);

    const int k_moving = sep.expected_components;
    RidgeTracker tracker(sep, res.grid.eta, res.grid.lambda, sigma);
    tracker.set_slice_count(n_slices);

    Slice s;
    auto process = [&](int pos, bool seeding) {
        engine.compute(pos, s);
        res.boundary[static_cast<std::size_t>(pos)] = s.boundary ? 1 : 0;
        res.slice_max[static_cast<std::size_t>(pos)] = s.max_mag;
        const ThresholdSet th = threshold_set(s, sep);
        if (th.empty()) ++res.empty_threshold_slices;
        const auto cl = cluster(th.points, res.grid.eta, res.grid.lambda, sep);
        res.cluster_counts[static_cast<std::size_t>(pos)] = static_cast<int>(cl.size());
        if (seeding) {
            const auto maxima = argmax_per_cluster(s, res.grid.eta, res.grid.lambda, cl);
            return tracker.try_seed(s, maxima);
        }
        tracker.step(s, th);
        return true;
    };

    // seed scan over slices with near-complete window support
    std::vector<int> eligible;
    for (std::size_t pos = 0; pos < n_slices; ++pos)
        if (clipped_window_mass(res.grid.t_axis[pos], model.t_span, sigma) <= sep.seed_clip_mass)
            eligible.push_back(static_cast<int>(pos));
    if (eligible.empty())  // short spans: fall back to every slice
        for (std::size_t pos = 0; pos < n_slices; ++pos) eligible.push_back(static_cast<int>(pos));
    for (int pos : eligible)
        if (process(pos, true)) break;

    if (!tracker.seeded()) {
        res.status = RunStatus::soft_failure;
        res.ridge.t_axis = res.grid.t_axis;
        res.ridge.traces.assign(static_cast<std::size_t>(k_moving),
                                std::vector<RidgeEntry>(n_slices));
        for (auto& tr : res.ridge.traces)
            for (std::size_t pos = 0; pos < n_slices; ++pos) {
                tr[pos].t = res.grid.t_axis[pos];
                tr[pos].flag = ridge_gap;
            }
        res.components = to_components(res.ridge);
        res.summary = json{{"status", "soft_failure"},
                           {"reason", "tracker never seeded"},
                           {"empty_threshold_slices", res.empty_threshold_slices}};
        return res;
    }

    const int seed = tracker.seed_pos();
    tracker.begin_pass();
    for (int pos = seed + 1; pos < static_cast<int>(n_slices); ++pos) process(pos, false);
    tracker.begin_pass();
    for (int pos = seed - 1; pos >= 0; --pos) process(pos, false);

    res.ridge = tracker.finalize(res.grid.t_axis, [&](double t, double e, double l) {
        return engine.direct_point(t, e, l);
    });
    for (std::size_t k = 0; k < res.ridge.traces.size(); ++k)
        for (std::size_t pos = 0; pos < n_slices; ++pos)
            res.ridge.traces[k][pos].boundary = res.boundary[pos] != 0;

    // trend convention: a pinned (0, 0) trace in front when a trend is expected
    if (sep.expect_trend) {
        std::vector<RidgeEntry> trend(n_slices);
        for (std::size_t pos = 0; pos < n_slices; ++pos) {
            RidgeEntry e;
            e.t = res.grid.t_axis[pos];
            e.eta = 0.0;
            e.lambda = res.grid.lambda.at(res.grid.lambda.nearest(0.0));
            e.q = engine.direct_point(e.t, 0.0, 0.0);
            e.flag = ridge_clean;
            e.boundary = res.boundary[pos] != 0;
            trend[pos] = e;
        }
        res.ridge.traces.insert(res.ridge.traces.begin(), std::move(trend));
    }

    res.components = to_components(res.ridge);
    res.metrics = detail::evaluate_against_model(model, res.ridge, res.components,
                                                 cfg.eval_interval, res.grid.lambda.step);

    json mj = json::array();
    for (const auto& m : res.metrics)
        mj.push_back({{"tracked", m.tracked_index},
                      {"model_component", m.model_index},
                      {"max_if_error", m.max_if_error},
                      {"max_chirp_rate_error", m.max_cr_error},
                      {"rel_l2_all", m.rel_l2_all},
                      {"rel_l2_clean", m.rel_l2_clean},
                      {"eval_points", m.n_eval},
                      {"flagged_points", m.n_flagged},
                      {"lambda_sign_pattern_ok", m.sign_pattern_ok}});
    int n3 = 0;
    for (int c : res.cluster_counts)
        if (c == k_moving + (sep.expect_trend ? 1 : 0)) ++n3;
    res.summary = json{{"status", "ok"},
                       {"preset", cfg.preset},
                       {"seed_slice", seed},
                       {"seed_t", res.grid.t_axis[static_cast<std::size_t>(seed)]},
                       {"eval_interval", {cfg.eval_interval.lo, cfg.eval_interval.hi}},
                       {"eta_step", res.grid.eta.step},
                       {"lambda_step", res.grid.lambda.step},
                       {"nfft", res.grid.nfft},
                       {"slices", n_slices},
                       {"slices_with_expected_cluster_count", n3},
                       {"empty_threshold_slices", res.empty_threshold_slices},
                       {"components", mj}};
    if (res.empty_threshold_slices == static_cast<int>(n_slices))
        res.status = RunStatus::soft_failure;
    return res;
}

inline SeparationResult run_separation(const RunConfig& cfg) {
    return run_separation(cfg, config_model(cfg));
}

// Per-t bound reports on the ridge time grid, restricted to the eval interval.
inline std::vector<BoundReport> run_bounds(const RunConfig& cfg, const SignalModel& model,
                                           const std::vector<double>& t_axis,
                                           std::optional<double> resolved_threshold) {
    BoundParams bp{cfg.sigma, cfg.sep.delta, cfg.sep.rho};
    std::vector<BoundReport> out;
    for (double t : t_axis) {
        if (!cfg.eval_interval.contains(t)) continue;
        out.push_back(bound_report(model, t, bp, resolved_threshold));
    }
    return out;
}

}  // namespace ct3s
