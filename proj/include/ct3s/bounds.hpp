#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ct3s/signal_model.hpp"
#include "ct3s/window.hpp"

namespace ct3s {

inline double moment_i1() {
    static const double v = moment(1);
    return v;
}
inline double moment_i2() {
    static const double v = moment(2);
    return v;
}
inline double moment_i3() {
    static const double v = moment(3);
    return v;
}

struct BoundParams {
    double sigma = 0.15;  // seconds
    double delta = 0.5;   // Hz
    double rho = 0.15;    // seconds
};

// Per-t context: signal-class constants and the ground-truth state of every
// component. mu and M are recomputed from the amplitudes on access.
struct BoundContext {
    double epsilon1 = 0.0;  // 1/s
    double epsilon3 = 0.0;  // Hz/s^2
    double sigma = 0.0;
    double delta = 0.0;
    double rho = 0.0;
    std::vector<double> amplitudes;
    std::vector<double> if_values;   // phi'_k, Hz
    std::vector<double> cr_values;   // phi''_k, Hz/s

    double mu() const {
        double m = amplitudes.empty() ? 0.0 : amplitudes[0];
        for (double a : amplitudes) m = std::min(m, a);
        return m;
    }
    double total() const {
        double s = 0.0;
        for (double a : amplitudes) s += a;
        return s;
    }

    void validate() const {
        if (epsilon1 < 0.0 || epsilon3 < 0.0)
            throw std::invalid_argument("BoundContext: epsilons must be nonnegative");
        if (!(sigma > 0.0) || !(delta > 0.0) || !(rho > 0.0))
            throw std::invalid_argument("BoundContext: sigma, delta, rho must be positive");
        if (amplitudes.empty() || amplitudes.size() != if_values.size() ||
            amplitudes.size() != cr_values.size())
            throw std::invalid_argument("BoundContext: inconsistent component arrays");
    }

    static BoundContext from_model(const SignalModel& m, double t, const BoundParams& p) {
        BoundContext c;
        c.sigma = p.sigma;
        c.delta = p.delta;
        c.rho = p.rho;
        for (const auto& comp : m.components) {
            c.amplitudes.push_back(comp.amplitude(t));
            c.if_values.push_back(comp.phase_d1(t));
            c.cr_values.push_back(comp.phase_d2(t));
            c.epsilon1 = std::max(c.epsilon1, comp.amplitude_lipschitz_rel);
            if (!comp.is_trend) c.epsilon3 = std::max(c.epsilon3, comp.phase_d3_sup);
        }
        c.validate();
        return c;
    }
};

// Pi(t) = eps1 I1 sigma + (pi/3) eps3 I3 sigma^3, the LFM local-model error.
inline double pi_bound(const BoundContext& c) {
    return c.epsilon1 * moment_i1() * c.sigma +
           (kPi / 3.0) * c.epsilon3 * moment_i3() * c.sigma * c.sigma * c.sigma;
}

// Generic off-box envelope bound Upsilon = L / (sqrt(sigma) min(sqrt(sigma),1) sqrt(delta)),
// L = max(2^{1/4}, sqrt(rho)) / sqrt(pi).
inline double upsilon(const BoundContext& c) {
    const double L = std::max(std::pow(2.0, 0.25), std::sqrt(c.rho)) / std::sqrt(kPi);
    const double rs = std::sqrt(c.sigma);
    return L / (rs * std::min(rs, 1.0) * std::sqrt(c.delta));
}

// Pairwise bound Upsilon_{l,k}: the refined envelope evaluated at the IF and
// chirp-rate gaps when the h-monotonicity condition holds, otherwise the
// generic Upsilon.
inline double upsilon_pair(const BoundContext& c, std::size_t l, std::size_t k) {
    if (l == k) throw std::invalid_argument("upsilon_pair: l == k");
    const double up = upsilon(c);
    const double gap_if = std::abs(c.if_values[l] - c.if_values[k]);
    const double gap_cr = std::abs(c.cr_values[l] - c.cr_values[k]);
    if (!(gap_if > c.delta)) return up;
    const double s2 = c.sigma * c.sigma;
    const double u = 4.0 * kPi * kPi * s2 * s2 * (gap_cr + c.delta / c.rho) *
                     (gap_cr + c.delta / c.rho);
    const double c0 = kTwoPiSq * s2 * (gap_if - c.delta) * (gap_if - c.delta);
    if (!(1.0 + u <= 4.0 * c0)) return up;  // h increasing requires 1+u <= 4 c0
    const double refined = std::pow(1.0 + u, -0.25) * std::exp(-c0 / (1.0 + u));
    return std::min(up, refined);
}

// Res_l(t) = M Pi + sum_{k != l} A_k Upsilon_{l,k}.
inline std::vector<double> res_bound(const BoundContext& c) {
    c.validate();
    const double mpi = c.total() * pi_bound(c);
    std::vector<double> out(c.amplitudes.size(), 0.0);
    for (std::size_t l = 0; l < out.size(); ++l) {
        double acc = mpi;
        for (std::size_t k = 0; k < out.size(); ++k)
            if (k != l) acc += c.amplitudes[k] * upsilon_pair(c, l, k);
        out[l] = acc;
    }
    return out;
}

// A bound that only exists while the residual smallness condition
// 2 Res_l / A_l <= 1 - e^{-1/4} holds.
struct BoundValue {
    bool valid = false;
    double value = 0.0;
};

inline bool bound_applicable(double res, double amplitude) {
    return 2.0 * res / amplitude <= admissibility_b0() + 1e-15;
}

// Bd1 = beta^{-1}(1 - 2 Res/A) / sigma (Hz).
inline BoundValue bd1(const BoundContext& c, std::size_t l) {
    const double res = res_bound(c)[l];
    if (!bound_applicable(res, c.amplitudes[l])) return {};
    const double xi = 1.0 - 2.0 * res / c.amplitudes[l];
    return {true, beta_inv(xi) / c.sigma};
}

// Bd2 = gamma^{-1}(1 - 2 Res/A) / sigma^2 (Hz/s).
inline BoundValue bd2(const BoundContext& c, std::size_t l) {
    const double res = res_bound(c)[l];
    if (!bound_applicable(res, c.amplitudes[l])) return {};
    const double xi = 1.0 - 2.0 * res / c.amplitudes[l];
    return {true, gamma_inv(xi) / (c.sigma * c.sigma)};
}

// Recovery bound, closed form: Res + 2 e^{1/8} I1 sqrt(Res A) +
// I2 A / (2 xi^2) sqrt(1 - xi^4), xi = 1 - 2 Res/A.
inline BoundValue bd3(const BoundContext& c, std::size_t l) {
    const double res = res_bound(c)[l];
    const double a = c.amplitudes[l];
    if (!bound_applicable(res, a)) return {};
    const double xi = 1.0 - 2.0 * res / a;
    const double tail = (xi < 1.0)
                            ? moment_i2() * a / (2.0 * xi * xi) *
                                  std::sqrt(std::max(0.0, 1.0 - xi * xi * xi * xi))
                            : 0.0;
    return {true, res + 2.0 * std::exp(0.125) * moment_i1() * std::sqrt(res * a) + tail};
}

// Recovery bound assembled from its moment/envelope pieces:
// Res + 2 pi I1 A beta^{-1}(xi) + pi I2 A gamma^{-1}(xi).
inline BoundValue bd3_exact(const BoundContext& c, std::size_t l) {
    const double res = res_bound(c)[l];
    const double a = c.amplitudes[l];
    if (!bound_applicable(res, a)) return {};
    const double xi = 1.0 - 2.0 * res / a;
    return {true, res + 2.0 * kPi * moment_i1() * a * beta_inv(xi) +
                      kPi * moment_i2() * a * gamma_inv(xi)};
}

struct HypothesisCheck {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // >= 0 iff pass
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    bool overall = false;

    const HypothesisCheck& operator[](const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw std::out_of_range("HypothesisReport: unknown check " + name);
    }
};

// Evaluates the certificate hypotheses at one t with margins. The
// threshold window check runs only when a resolved absolute threshold is
// supplied (it depends on the data-side threshold choice).
inline HypothesisReport check_hypotheses(const SignalModel& m, double t, const BoundParams& p,
                                         std::optional<double> resolved_threshold = std::nullopt) {
    const BoundContext c = BoundContext::from_model(m, t, p);
    HypothesisReport rep;

    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < c.amplitudes.size(); ++a)
        for (std::size_t b = a + 1; b < c.amplitudes.size(); ++b)
            sep = std::min(sep, std::abs(c.if_values[a] - c.if_values[b]) +
                                    c.rho * std::abs(c.cr_values[a] - c.cr_values[b]));
    if (c.amplitudes.size() < 2) sep = std::numeric_limits<double>::infinity();
    rep.checks.push_back({"separation", sep >= 2.0 * c.delta, sep - 2.0 * c.delta});

    const double head = c.total() * (upsilon(c) + pi_bound(c));
    const double m24 = c.mu() - 2.0 * head;
    rep.checks.push_back({"interference_margin", m24 >= 0.0, m24});

    if (resolved_threshold) {
        const double lo = head, hi = c.mu() - head;
        const double margin = std::min(*resolved_threshold - lo, hi - *resolved_threshold);
        rep.checks.push_back({"threshold_window", margin >= 0.0, margin});
    }

    const auto res = res_bound(c);
    double worst = 0.0;
    for (std::size_t l = 0; l < res.size(); ++l)
        worst = std::max(worst, 2.0 * res[l] / c.amplitudes[l]);
    rep.checks.push_back({"residual_smallness", worst <= admissibility_b0(),
                          admissibility_b0() - worst});

    rep.overall = true;
    for (const auto& ch : rep.checks) rep.overall = rep.overall && ch.pass;
    return rep;
}

struct BoundReport {
    double t = 0.0;
    double pi = 0.0;
    double upsilon_generic = 0.0;
    std::vector<std::vector<double>> upsilon_pairs;  // [l][k], diagonal 0
    std::vector<double> res;
    std::vector<BoundValue> bd1v, bd2v, bd3v;
    HypothesisReport hypotheses;
};

inline BoundReport bound_report(const SignalModel& m, double t, const BoundParams& p,
                                std::optional<double> resolved_threshold = std::nullopt) {
    const BoundContext c = BoundContext::from_model(m, t, p);
    BoundReport r;
    r.t = t;
    r.pi = pi_bound(c);
    r.upsilon_generic = upsilon(c);
    const std::size_t n = c.amplitudes.size();
    r.upsilon_pairs.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = 0; k < n; ++k)
            if (k != l) r.upsilon_pairs[l][k] = upsilon_pair(c, l, k);
    r.res = res_bound(c);
    for (std::size_t l = 0; l < n; ++l) {
        r.bd1v.push_back(bd1(c, l));
        r.bd2v.push_back(bd2(c, l));
        r.bd3v.push_back(bd3(c, l));
    }
    r.hypotheses = check_hypotheses(m, t, p, resolved_threshold);
    return r;
}

}  // namespace ct3s
