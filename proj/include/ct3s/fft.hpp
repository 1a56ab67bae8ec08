#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <stdexcept>

namespace ct3s {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Forward c2c FFTW plan with owned, aligned buffers. Plan creation is guarded
// by a global mutex (the FFTW planner is not thread safe); execution on the
// plan's own buffers is safe from the owning thread.
class FftPlan {
  public:
    explicit FftPlan(int n) : n_(n) {
        if (n <= 0) throw std::invalid_argument("FftPlan: size must be positive");
        in_ = fftw_alloc_complex(static_cast<std::size_t>(n));
        out_ = fftw_alloc_complex(static_cast<std::size_t>(n));
        if (!in_ || !out_) throw std::bad_alloc();
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_1d(n, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
        if (!plan_) throw std::runtime_error("FftPlan: planner failed");
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    FftPlan(FftPlan&& o) noexcept : n_(o.n_), in_(o.in_), out_(o.out_), plan_(o.plan_) {
        o.in_ = nullptr;
        o.out_ = nullptr;
        o.plan_ = nullptr;
    }

    ~FftPlan() {
        if (plan_) {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
        if (in_) fftw_free(in_);
        if (out_) fftw_free(out_);
    }

    int size() const { return n_; }

    std::complex<double>* in() { return reinterpret_cast<std::complex<double>*>(in_); }
    const std::complex<double>* out() const {
        return reinterpret_cast<const std::complex<double>*>(out_);
    }

    void execute() { fftw_execute(plan_); }

  private:
    int n_ = 0;
    fftw_complex* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

}  // namespace ct3s
