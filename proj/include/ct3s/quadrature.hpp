#pragma once

#include <cmath>
#include <complex>
#include <cstddef>

namespace ct3s {

// Composite trapezoidal rule on [a, b] with n intervals.
template <typename F>
double trapezoid(F&& f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double acc = 0.5 * (f(a) + f(b));
    for (std::size_t j = 1; j < n; ++j) acc += f(a + h * static_cast<double>(j));
    return acc * h;
}

template <typename F>
std::complex<double> trapezoid_c(F&& f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    std::complex<double> acc = 0.5 * (f(a) + f(b));
    for (std::size_t j = 1; j < n; ++j) acc += f(a + h * static_cast<double>(j));
    return acc * h;
}

// Composite Simpson rule on [a, b]; n is rounded up to the next even count.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t n) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double acc = f(a) + f(b);
    for (std::size_t j = 1; j < n; ++j)
        acc += f(a + h * static_cast<double>(j)) * ((j % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace ct3s
