#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ct3s/window.hpp"

namespace ct3s {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double t) const { return t >= lo - 1e-12 && t <= hi + 1e-12; }
    double length() const { return hi - lo; }
};

// One AM-FM component A(t) e^{i 2 pi phi(t)}. Phase and its derivatives are
// kept as closed-form callables; phase_d3_sup bounds |phi'''| on the span and
// amplitude_lipschitz_rel is the relative Lipschitz constant of A (the eps_1
// this component satisfies). A trend is a component with phase identically 0.
struct ComponentSpec {
    std::function<double(double)> amplitude;
    std::function<double(double)> phase;     // cycles
    std::function<double(double)> phase_d1;  // Hz
    std::function<double(double)> phase_d2;  // Hz/s
    double phase_d3_sup = 0.0;               // Hz/s^2
    double amplitude_lipschitz_rel = 0.0;    // 1/s
    bool is_trend = false;

    // serialization metadata
    std::string kind;                 // "lfm" | "sfm" | "trend"
    std::vector<double> params;       // kind-specific

    cplx value(double t) const {
        const double ph = 2.0 * kPi * phase(t);
        return amplitude(t) * cplx(std::cos(ph), std::sin(ph));
    }
};

struct SignalModel {
    std::vector<ComponentSpec> components;
    Interval t_span;

    std::size_t size() const { return components.size(); }
};

struct SampledSignal {
    std::vector<cplx> samples;
    double sample_rate = 0.0;  // Hz
    double t_start = 0.0;      // seconds

    double t_at(std::size_t n) const { return t_start + static_cast<double>(n) / sample_rate; }
};

// Linear chirp A e^{i 2 pi (c t + r t^2 / 2)}.
inline ComponentSpec make_lfm(double amplitude, double c, double r, Interval span) {
    if (!(amplitude > 0.0)) throw std::invalid_argument("make_lfm: amplitude must be positive");
    ComponentSpec s;
    s.amplitude = [amplitude](double) { return amplitude; };
    s.phase = [c, r](double t) { return c * t + 0.5 * r * t * t; };
    s.phase_d1 = [c, r](double t) { return c + r * t; };
    s.phase_d2 = [r](double) { return r; };
    s.phase_d3_sup = 0.0;
    s.kind = "lfm";
    s.params = {amplitude, c, r};
    (void)span;
    return s;
}

// Sinusoidal FM with phase f0 t - depth sin(2 pi fm t). Negative depth flips
// the modulation sign (the radar pair uses both signs).
inline ComponentSpec make_sfm(double amplitude, double f0, double depth, double mod_freq,
                              Interval span) {
    if (!(amplitude > 0.0)) throw std::invalid_argument("make_sfm: amplitude must be positive");
    if (!(mod_freq > 0.0)) throw std::invalid_argument("make_sfm: mod_freq must be positive");
    const double w = 2.0 * kPi * mod_freq;
    ComponentSpec s;
    s.amplitude = [amplitude](double) { return amplitude; };
    s.phase = [f0, depth, w](double t) { return f0 * t - depth * std::sin(w * t); };
    s.phase_d1 = [f0, depth, w](double t) { return f0 - w * depth * std::cos(w * t); };
    s.phase_d2 = [depth, w](double t) { return w * w * depth * std::sin(w * t); };
    s.phase_d3_sup = w * w * w * std::abs(depth);
    s.kind = "sfm";
    s.params = {amplitude, f0, depth, mod_freq};
    (void)span;
    return s;
}

inline ComponentSpec make_trend(double amplitude) {
    if (!(amplitude > 0.0)) throw std::invalid_argument("make_trend: amplitude must be positive");
    ComponentSpec s;
    s.amplitude = [amplitude](double) { return amplitude; };
    s.phase = [](double) { return 0.0; };
    s.phase_d1 = [](double) { return 0.0; };
    s.phase_d2 = [](double) { return 0.0; };
    s.is_trend = true;
    s.kind = "trend";
    s.params = {amplitude};
    return s;
}

inline cplx evaluate(const SignalModel& m, double t) {
    if (!m.t_span.contains(t)) throw std::domain_error("evaluate: t outside model span");
    cplx acc(0.0, 0.0);
    for (const auto& c : m.components) acc += c.value(t);
    return acc;
}

inline SampledSignal sample(const SignalModel& m, double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("sample: rate must be positive");
    const auto n = static_cast<std::size_t>(std::floor(m.t_span.length() * rate + 1e-9)) + 1;
    SampledSignal sig;
    sig.sample_rate = rate;
    sig.t_start = m.t_span.lo;
    sig.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        sig.samples.push_back(evaluate(m, m.t_span.lo + static_cast<double>(i) / rate));
    return sig;
}

struct GroundTruth {
    double amplitude = 0.0;
    double if_hz = 0.0;        // phi'
    double chirp_rate = 0.0;   // phi''
};

inline std::vector<GroundTruth> ground_truth(const SignalModel& m, double t) {
    if (!m.t_span.contains(t)) throw std::domain_error("ground_truth: t outside model span");
    std::vector<GroundTruth> out;
    out.reserve(m.size());
    for (const auto& c : m.components)
        out.push_back({c.amplitude(t), c.phase_d1(t), c.phase_d2(t)});
    return out;
}

}  // namespace ct3s
