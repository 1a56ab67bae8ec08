#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ct3s/quadrature.hpp"

namespace ct3s {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPiSq = 2.0 * kPi * kPi;

// Unit-width Gaussian window, g(t) = (2*pi)^(-1/2) exp(-t^2/2).
inline double gauss(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * kPi); }

enum class WindowKind : std::uint8_t { gaussian };

// Discretization used by the numeric transforms of the window. The truncation
// radius is in multiples of the unit width; residual Gaussian mass beyond 6 is
// below 2e-9, negligible against the 1e-6 acceptance of the numeric PFT.
struct WindowSpec {
    WindowKind kind = WindowKind::gaussian;
    double truncation_radius = 6.0;
    double quadrature_step = 1.0 / 256.0;
};

// Polynomial Fourier transform (order 2) of the Gaussian window,
//   g~(eta, lambda) = (1 + i 2 pi lambda)^(-1/2) exp(-2 pi^2 eta^2 / (1 + i 2 pi lambda)),
// principal square-root branch (Re(1 + i 2 pi lambda) > 0, so no cut is hit).
inline cplx pft_closed(double eta, double lambda) {
    const cplx z(1.0, 2.0 * kPi * lambda);
    return std::exp(-kTwoPiSq * eta * eta / z) / std::sqrt(z);
}

// |g~(eta, lambda)| = f(|eta|, |lambda|) with
//   f(a, b) = (1 + 4 pi^2 b^2)^(-1/4) exp(-2 pi^2 a^2 / (1 + 4 pi^2 b^2)).
inline double pft_envelope(double eta, double lambda) {
    const double u = 1.0 + 4.0 * kPi * kPi * lambda * lambda;
    return std::exp(-kTwoPiSq * eta * eta / u) / std::pow(u, 0.25);
}

// Trapezoidal quadrature of the PFT integral over the truncated support.
inline cplx pft_numeric(const WindowSpec& w, double eta, double lambda) {
    const double R = w.truncation_radius;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * R / w.quadrature_step));
    return trapezoid_c(
        [&](double tau) {
            const double phase = -2.0 * kPi * eta * tau - kPi * lambda * tau * tau;
            return gauss(tau) * cplx(std::cos(phase), std::sin(phase));
        },
        -R, R, n + (n % 2));
}

// Absolute moment I_n = integral |g(t) t^n| dt. Uses its own wide truncation:
// the t^n weight pushes tail mass above the window's transform-level radius,
// and the contract here is 1e-9 agreement with the closed forms.
inline double moment(int n) {
    if (n < 1) throw std::invalid_argument("moment: n must be >= 1");
    const double R = 10.0;
    const auto steps = static_cast<std::size_t>(R * 4096);
    return 2.0 * simpson([n](double t) { return gauss(t) * std::pow(t, n); }, 0.0, R, steps);
}

// Decreasing per-axis envelopes of the Gaussian PFT modulus and their inverses.
inline double beta(double eta) {
    if (eta < 0.0) throw std::invalid_argument("beta: negative argument");
    return std::exp(-kTwoPiSq * eta * eta);
}

inline double gamma_env(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("gamma_env: negative argument");
    return std::pow(1.0 + 4.0 * kPi * kPi * lambda * lambda, -0.25);
}

inline double beta_inv(double xi) {
    if (!(xi > 0.0) || xi > 1.0) throw std::invalid_argument("beta_inv: xi outside (0, 1]");
    return std::sqrt(-std::log(xi)) / (kPi * std::sqrt(2.0));
}

inline double gamma_inv(double xi) {
    if (!(xi > 0.0) || xi > 1.0) throw std::invalid_argument("gamma_inv: xi outside (0, 1]");
    const double x4 = xi * xi * xi * xi;
    return std::sqrt(1.0 - x4) / (2.0 * kPi * xi * xi);
}

// Largest level offset at which the envelope implication is certified.
inline double admissibility_b0() { return 1.0 - std::exp(-0.25); }

struct AdmissibilityCounterexample {
    char condition = ' ';  // 'a', 'b' or 'c'
    double eta = 0.0;
    double lambda = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct AdmissibilityReport {
    bool decay_ok = true;      // (a) |g~| <= C / sqrt(|eta|+|lambda|)
    bool symmetry_ok = true;   // (b) |g~| depends on (|eta|, |lambda|) only
    bool envelope_ok = true;   // (c) f >= 1-b implies beta >= 1-b and gamma >= 1-b
    double decay_constant = 0.0;
    std::size_t points_checked = 0;
    std::vector<AdmissibilityCounterexample> counterexamples;

    bool pass() const { return decay_ok && symmetry_ok && envelope_ok; }
};

// Checks window admissibility on a uniform [0, eta_max] x [0, lambda_max] grid.
// Condition (a) uses C = 2^(1/4) pi^(-1/2); symmetry is sampled at the four
// sign combinations with a 1e-12 tolerance.
template <typename Pft>
AdmissibilityReport check_admissibility_fn(Pft&& pft, double b, double eta_max,
                                           double lambda_max, double step) {
    if (b < 0.0 || b > admissibility_b0())
        throw std::invalid_argument("check_admissibility: b outside [0, 1 - e^{-1/4}]");
    AdmissibilityReport rep;
    rep.decay_constant = std::pow(2.0, 0.25) / std::sqrt(kPi);
    const auto ne = static_cast<std::size_t>(std::llround(eta_max / step));
    const auto nl = static_cast<std::size_t>(std::llround(lambda_max / step));
    const double level = 1.0 - b;
    for (std::size_t i = 0; i <= ne; ++i) {
        const double eta = static_cast<double>(i) * step;
        for (std::size_t j = 0; j <= nl; ++j) {
            const double lambda = static_cast<double>(j) * step;
            const double mag = std::abs(pft(eta, lambda));
            ++rep.points_checked;
            if (eta + lambda > 0.0) {
                const double bound = rep.decay_constant / std::sqrt(eta + lambda);
                if (mag > bound) {
                    rep.decay_ok = false;
                    rep.counterexamples.push_back({'a', eta, lambda, mag, bound});
                }
            }
            if (mag >= level) {
                if (beta(eta) < level || gamma_env(lambda) < level) {
                    rep.envelope_ok = false;
                    rep.counterexamples.push_back(
                        {'c', eta, lambda, mag, std::min(beta(eta), gamma_env(lambda))});
                }
            }
            const double m2 = std::abs(pft(-eta, lambda));
            const double m3 = std::abs(pft(eta, -lambda));
            const double m4 = std::abs(pft(-eta, -lambda));
            if (std::abs(m2 - mag) > 1e-12 || std::abs(m3 - mag) > 1e-12 ||
                std::abs(m4 - mag) > 1e-12) {
                rep.symmetry_ok = false;
                rep.counterexamples.push_back({'b', eta, lambda, mag, std::max({m2, m3, m4})});
            }
            if (rep.counterexamples.size() > 32) return rep;
        }
    }
    return rep;
}

inline AdmissibilityReport check_admissibility(const WindowSpec&, double b, double eta_max = 5.0,
                                               double lambda_max = 5.0, double step = 0.01) {
    return check_admissibility_fn([](double e, double l) { return pft_closed(e, l); }, b,
                                  eta_max, lambda_max, step);
}

}  // namespace ct3s
