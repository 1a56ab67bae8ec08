#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ct3s/fft.hpp"
#include "ct3s/signal_model.hpp"
#include "ct3s/window.hpp"

namespace ct3s {

struct AxisSpec {
    double start = 0.0;
    double step = 0.0;
    int count = 0;

    double at(int i) const { return start + step * static_cast<double>(i); }
    int nearest(double v) const {
        const int i = static_cast<int>(std::llround((v - start) / step));
        return std::clamp(i, 0, count - 1);
    }
    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = at(i);
        return v;
    }
};

// (t, eta, lambda) grid of the transform. The eta axis is tied to DFT bins,
// eta step = sample_rate / nfft with nfft the next power of two >= 4x the
// window sample count, so the per-slice evaluation is one zero-padded FFT.
struct CubeGrid {
    std::vector<int> t_index;   // sample indices of the t axis
    std::vector<double> t_axis; // seconds
    AxisSpec eta;               // Hz; start aligned to bin 0
    AxisSpec lambda;            // Hz/s
    int nfft = 0;
    std::function<double(double)> sigma;  // seconds, evaluated per t
};

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline CubeGrid make_cube_grid(const SampledSignal& sig, double eta_max, double lambda_min,
                               double lambda_max, double lambda_step,
                               std::function<double(double)> sigma, int t_stride = 1,
                               double truncation_radius = 6.0) {
    if (sig.samples.size() < 2) throw std::invalid_argument("make_cube_grid: too few samples");
    if (t_stride < 1) throw std::invalid_argument("make_cube_grid: bad stride");
    CubeGrid g;
    g.sigma = std::move(sigma);
    double sigma_max = 0.0;
    for (std::size_t n = 0; n < sig.samples.size(); n += static_cast<std::size_t>(t_stride)) {
        g.t_index.push_back(static_cast<int>(n));
        const double t = sig.t_at(n);
        g.t_axis.push_back(t);
        sigma_max = std::max(sigma_max, g.sigma(t));
    }
    if (!(sigma_max > 0.0)) throw std::invalid_argument("make_cube_grid: sigma must be positive");
    const int half = static_cast<int>(std::floor(truncation_radius * sigma_max * sig.sample_rate));
    const int nwin = 2 * half + 1;
    g.nfft = next_pow2(4 * nwin);
    g.eta.start = 0.0;
    g.eta.step = sig.sample_rate / static_cast<double>(g.nfft);
    g.eta.count = static_cast<int>(std::floor(eta_max / g.eta.step)) + 1;
    g.lambda.start = lambda_min;
    g.lambda.step = lambda_step;
    g.lambda.count = static_cast<int>(std::llround((lambda_max - lambda_min) / lambda_step)) + 1;
    if (g.eta.count < 2 || g.lambda.count < 2)
        throw std::invalid_argument("make_cube_grid: axes need at least two points");
    return g;
}

// One (eta, lambda) plane of the transform at a fixed t. Values are stored
// eta-major: q[je * n_lambda + jl].
struct Slice {
    int pos = 0;        // index into grid.t_axis
    double t = 0.0;
    bool boundary = false;
    int n_eta = 0;
    int n_lambda = 0;
    std::vector<cplx> q;
    std::vector<double> mag;
    double max_mag = 0.0;

    cplx at(int je, int jl) const { return q[static_cast<std::size_t>(je) * n_lambda + jl]; }
    double mag_at(int je, int jl) const {
        return mag[static_cast<std::size_t>(je) * n_lambda + jl];
    }
};

struct TransformCube {
    CubeGrid grid;
    std::vector<cplx> values;            // row-major (t, eta, lambda)
    std::vector<std::uint8_t> boundary_flags;  // per t

    cplx at(int it, int je, int jl) const {
        return values[(static_cast<std::size_t>(it) * grid.eta.count + je) * grid.lambda.count +
                      jl];
    }
};

// Read-only view of one t plane of a materialized cube.
struct CubeSliceView {
    const cplx* data = nullptr;
    int n_eta = 0;
    int n_lambda = 0;
    cplx at(int je, int jl) const { return data[static_cast<std::size_t>(je) * n_lambda + jl]; }
};

inline CubeSliceView slice(const TransformCube& cube, int t_index) {
    if (t_index < 0 || t_index >= static_cast<int>(cube.grid.t_axis.size()))
        throw std::out_of_range("slice: t index out of range");
    CubeSliceView v;
    v.n_eta = cube.grid.eta.count;
    v.n_lambda = cube.grid.lambda.count;
    v.data = cube.values.data() +
             static_cast<std::size_t>(t_index) * v.n_eta * v.n_lambda;
    return v;
}

// Computes transform slices: for each (t, lambda) the windowed, chirp-rotated
// segment goes through one zero-padded FFT; bins 0..n_eta-1 are kept. The
// window is truncated at the signal edge when support is incomplete and the
// slice is flagged as boundary. Quadrature is trapezoidal on the signal grid.
class SliceEngine {
  public:
    SliceEngine(const SampledSignal& sig, CubeGrid grid, WindowSpec window = {},
                int n_threads = 2)
        : sig_(sig), grid_(std::move(grid)), window_(window),
          n_threads_(std::max(1, n_threads)) {
        for (int i = 0; i < n_threads_; ++i)
            plans_.push_back(std::make_unique<FftPlan>(grid_.nfft));
    }

    const CubeGrid& grid() const { return grid_; }
    const SampledSignal& signal() const { return sig_; }

    void compute(int pos, Slice& out) const {
        const int n0 = grid_.t_index[static_cast<std::size_t>(pos)];
        const double t = grid_.t_axis[static_cast<std::size_t>(pos)];
        const double sigma = grid_.sigma(t);
        const double fs = sig_.sample_rate;
        const int half = static_cast<int>(std::floor(window_.truncation_radius * sigma * fs));
        const int lo = std::max(0, n0 - half);
        const int hi = std::min(static_cast<int>(sig_.samples.size()) - 1, n0 + half);

        out.pos = pos;
        out.t = t;
        out.boundary = (lo > n0 - half) || (hi < n0 + half);
        out.n_eta = grid_.eta.count;
        out.n_lambda = grid_.lambda.count;
        out.q.assign(static_cast<std::size_t>(out.n_eta) * out.n_lambda, cplx(0.0, 0.0));
        out.mag.assign(out.q.size(), 0.0);

        // windowed segment, trapezoid weights at the actual support ends
        const int nseg = hi - lo + 1;
        seg_.resize(static_cast<std::size_t>(nseg));
        for (int m = lo; m <= hi; ++m) {
            const double tau = static_cast<double>(m - n0) / fs;
            double w = gauss(tau / sigma) / sigma / fs;
            if (m == lo || m == hi) w *= 0.5;
            seg_[static_cast<std::size_t>(m - lo)] = sig_.samples[static_cast<std::size_t>(m)] * w;
        }

        auto run_rows = [&](int tid, int jl_begin, int jl_end) {
            FftPlan& plan = *plans_[static_cast<std::size_t>(tid)];
            cplx* in = plan.in();
            const cplx* fft_out = plan.out();
            const int nfft = grid_.nfft;
            for (int jl = jl_begin; jl < jl_end; ++jl) {
                const double lambda = grid_.lambda.at(jl);
                std::fill(in, in + nfft, cplx(0.0, 0.0));
                for (int m = lo; m <= hi; ++m) {
                    const double tau = static_cast<double>(m - n0) / fs;
                    const double phase = -kPi * lambda * tau * tau;
                    const int bin = ((m - n0) % nfft + nfft) % nfft;
                    in[bin] = seg_[static_cast<std::size_t>(m - lo)] *
                              cplx(std::cos(phase), std::sin(phase));
                }
                plan.execute();
                for (int je = 0; je < out.n_eta; ++je)
                    out.q[static_cast<std::size_t>(je) * out.n_lambda + jl] = fft_out[je];
            }
        };

        if (n_threads_ > 1 && out.n_lambda >= 2 * n_threads_) {
            std::vector<std::thread> workers;
            const int chunk = (out.n_lambda + n_threads_ - 1) / n_threads_;
            for (int tid = 0; tid < n_threads_; ++tid) {
                const int b = tid * chunk;
                const int e = std::min(out.n_lambda, b + chunk);
                if (b >= e) break;
                workers.emplace_back(run_rows, tid, b, e);
            }
            for (auto& w : workers) w.join();
        } else {
            run_rows(0, 0, out.n_lambda);
        }

        double mx = 0.0;
        for (std::size_t i = 0; i < out.q.size(); ++i) {
            out.mag[i] = std::abs(out.q[i]);
            mx = std::max(mx, out.mag[i]);
        }
        out.max_mag = mx;
    }

    // Same integral as compute() for one (eta, lambda), summed directly.
    cplx direct_point(double t, double eta, double lambda) const {
        const double fs = sig_.sample_rate;
        const int n0 = static_cast<int>(std::llround((t - sig_.t_start) * fs));
        const double sigma = grid_.sigma(t);
        const int half = static_cast<int>(std::floor(window_.truncation_radius * sigma * fs));
        const int lo = std::max(0, n0 - half);
        const int hi = std::min(static_cast<int>(sig_.samples.size()) - 1, n0 + half);
        cplx acc(0.0, 0.0);
        for (int m = lo; m <= hi; ++m) {
            const double tau = static_cast<double>(m - n0) / fs;
            double w = gauss(tau / sigma) / sigma / fs;
            if (m == lo || m == hi) w *= 0.5;
            const double phase = -2.0 * kPi * eta * tau - kPi * lambda * tau * tau;
            acc += sig_.samples[static_cast<std::size_t>(m)] * w *
                   cplx(std::cos(phase), std::sin(phase));
        }
        return acc;
    }

  private:
    const SampledSignal& sig_;
    CubeGrid grid_;
    WindowSpec window_;
    int n_threads_;
    std::vector<std::unique_ptr<FftPlan>> plans_;
    mutable std::vector<cplx> seg_;
};

inline TransformCube chirplet_cube(const SampledSignal& sig, const CubeGrid& grid,
                                   WindowSpec window = {}, int n_threads = 2) {
    SliceEngine engine(sig, grid, window, 1);
    TransformCube cube;
    cube.grid = engine.grid();
    const std::size_t nt = cube.grid.t_axis.size();
    const std::size_t plane = static_cast<std::size_t>(cube.grid.eta.count) *
                              cube.grid.lambda.count;
    cube.values.assign(nt * plane, cplx(0.0, 0.0));
    cube.boundary_flags.assign(nt, 0);

    auto worker = [&](int tid, int stride) {
        SliceEngine local(sig, grid, window, 1);
        Slice s;
        for (std::size_t it = static_cast<std::size_t>(tid); it < nt;
             it += static_cast<std::size_t>(stride)) {
            local.compute(static_cast<int>(it), s);
            std::copy(s.q.begin(), s.q.end(), cube.values.begin() + it * plane);
            cube.boundary_flags[it] = s.boundary ? 1 : 0;
        }
    };
    const int nw = std::max(1, n_threads);
    if (nw == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> ws;
        for (int i = 0; i < nw; ++i) ws.emplace_back(worker, i, nw);
        for (auto& w : ws) w.join();
    }
    return cube;
}

// Short-time Fourier transform V_x(t, eta): the lambda = 0 plane of the same
// machinery. Returns a (t, eta) matrix row-major in t.
struct StftMatrix {
    std::vector<double> t_axis;
    AxisSpec eta;
    std::vector<cplx> values;
    cplx at(int it, int je) const {
        return values[static_cast<std::size_t>(it) * eta.count + je];
    }
};

inline StftMatrix stft(const SampledSignal& sig, double eta_max,
                       std::function<double(double)> sigma, int t_stride = 1,
                       WindowSpec window = {}) {
    CubeGrid g;
    double sigma_max = 0.0;
    for (std::size_t n = 0; n < sig.samples.size(); n += static_cast<std::size_t>(t_stride)) {
        g.t_index.push_back(static_cast<int>(n));
        g.t_axis.push_back(sig.t_at(n));
        sigma_max = std::max(sigma_max, sigma(sig.t_at(n)));
    }
    g.sigma = std::move(sigma);
    const int half = static_cast<int>(std::floor(window.truncation_radius * sigma_max *
                                                 sig.sample_rate));
    g.nfft = next_pow2(4 * (2 * half + 1));
    g.eta.start = 0.0;
    g.eta.step = sig.sample_rate / static_cast<double>(g.nfft);
    g.eta.count = static_cast<int>(std::floor(eta_max / g.eta.step)) + 1;
    g.lambda = {0.0, 1.0, 1};  // single lambda = 0 row
    SliceEngine engine(sig, g, window, 1);
    StftMatrix m;
    m.t_axis = g.t_axis;
    m.eta = g.eta;
    m.values.resize(g.t_axis.size() * static_cast<std::size_t>(g.eta.count));
    Slice s;
    for (std::size_t it = 0; it < g.t_axis.size(); ++it) {
        engine.compute(static_cast<int>(it), s);
        for (int je = 0; je < g.eta.count; ++je)
            m.values[it * g.eta.count + je] = s.at(je, 0);
    }
    return m;
}

// Closed-form model transform P_x(t, eta, lambda) under the local
// linear-chirp approximation; the test oracle
// for the numeric cube.
inline cplx p_oracle(const SignalModel& model, double t, double eta, double lambda,
                     double sigma) {
    if (!model.t_span.contains(t)) throw std::domain_error("p_oracle: t outside span");
    cplx acc(0.0, 0.0);
    for (const auto& c : model.components) {
        const cplx xk = c.value(t);
        acc += xk * pft_closed(sigma * (eta - c.phase_d1(t)),
                               sigma * sigma * (lambda - c.phase_d2(t)));
    }
    return acc;
}

}  // namespace ct3s
