// quadrature.hpp: Adaptive Simpson integration and piecewise-linear Fourier (Filon) sums

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <sstream>
#include <type_traits>
#include <vector>

#include "qdcoh/error.hpp"

namespace qdcoh::quad {

struct Tolerance {
    double rel{1e-9};
    int max_depth{40};
};

namespace detail {

template <class F, class T>
struct Simpson {
    F& f;
    double abs_tol;
    int max_depth;
    double worst_err{0.0};
    bool failed{false};
    std::size_t evaluations{0};
    static constexpr std::size_t max_evaluations = 4'000'000;

    T recurse(double a, double b, T fa, T fm, T fb, T whole, double tol, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const T flm = f(lm);
        const T frm = f(rm);
        evaluations += 2;
        const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const T delta = left + right - whole;
        using std::abs;
        const double err = abs(delta) / 15.0;
        // Below ~eps relative the estimate is roundoff, not truncation error.
        const bool roundoff = err <= 1e-15 * abs(left + right);
        if (err <= tol || roundoff || depth >= max_depth || evaluations > max_evaluations) {
            if (err > tol && !roundoff) {
                failed = true;
                worst_err = std::max(worst_err, err);
            }
            return left + right + delta / 15.0;
        }
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
               recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
};

} // namespace detail

// Adaptive Simpson with Richardson correction over [a,b], pre-split into `panels`
// equal pieces (needed for oscillatory integrands so the first pass cannot alias to zero).
// The error target is rel * `scale`, where scale defaults to the integral of |f| estimated
// on the initial panels.
template <class T = double, class F>
T adaptive_simpson(F&& f, double a, double b, Tolerance tol = {}, std::size_t panels = 8,
                   double scale = -1.0) {
    if (panels == 0) panels = 1;
    if (!(b > a)) return T{};
    const double h = (b - a) / static_cast<double>(panels);
    std::vector<T> fx(2 * panels + 1);
    for (std::size_t i = 0; i <= 2 * panels; ++i) fx[i] = f(a + 0.5 * h * static_cast<double>(i));
    if (scale < 0.0) {
        using std::abs;
        scale = 0.0;
        for (std::size_t i = 0; i < panels; ++i)
            scale += h / 6.0 * (abs(fx[2 * i]) + 4.0 * abs(fx[2 * i + 1]) + abs(fx[2 * i + 2]));
    }
    const double abs_tol = tol.rel * std::max(scale, 1e-300);
    detail::Simpson<std::remove_reference_t<F>, T> s{f, abs_tol, tol.max_depth};
    T total{};
    const double per_panel = abs_tol / static_cast<double>(panels);
    for (std::size_t i = 0; i < panels; ++i) {
        const double lo = a + h * static_cast<double>(i);
        const double hi = lo + h;
        const T whole = h / 6.0 * (fx[2 * i] + 4.0 * fx[2 * i + 1] + fx[2 * i + 2]);
        total += s.recurse(lo, hi, fx[2 * i], fx[2 * i + 1], fx[2 * i + 2], whole, per_panel, 0);
    }
    if (s.failed) {
        std::ostringstream os;
        os << "adaptive Simpson did not converge on [" << a << ", " << b
           << "]: achieved error estimate " << s.worst_err << " vs target " << per_panel;
        throw NumericalError(os.str());
    }
    return total;
}

// Trapezoid rule on a (possibly non-uniform) grid.
template <class T>
T trapezoid(std::span<const double> x, std::span<const T> y) {
    T acc{};
    for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return acc;
}

// Integral over [x0,x1] of the linear interpolant between (x0,y0),(x1,y1) times exp(i*w*x),
// evaluated exactly.
inline std::complex<double> filon_segment(double x0, double x1, std::complex<double> y0,
                                          std::complex<double> y1, double w) {
    const double h = x1 - x0;
    const double th = w * h;
    const std::complex<double> e0 = std::polar(1.0, w * x0);
    if (std::abs(th) < 1e-3) {
        // Series in i*th to avoid cancellation.
        const std::complex<double> it(0.0, th);
        const std::complex<double> a = 0.5 + it / 6.0 + it * it / 24.0 + it * it * it / 120.0;
        const std::complex<double> b = 0.5 + it / 3.0 + it * it / 8.0 + it * it * it / 30.0;
        // int_0^1 (1-s) e^{i th s} ds = a, int_0^1 s e^{i th s} ds = b
        return h * e0 * (y0 * a + y1 * b);
    }
    const std::complex<double> i(0.0, 1.0);
    const std::complex<double> eth = std::polar(1.0, th);
    const std::complex<double> ib = (eth - 1.0) / (i * th);  // int_0^1 e^{i th s} ds
    const std::complex<double> s1 = (eth - ib) / (i * th);   // int_0^1 s e^{i th s} ds
    return h * e0 * (y0 * (ib - s1) + y1 * s1);
}

// int_{x.front()}^{x.back()} y(x) exp(i w x) dx for the piecewise-linear interpolant of y.
inline std::complex<double> filon(std::span<const double> x,
                                  std::span<const std::complex<double>> y, double w) {
    std::complex<double> acc{};
    for (std::size_t k = 1; k < x.size(); ++k)
        acc += filon_segment(x[k - 1], x[k], y[k - 1], y[k], w);
    return acc;
}

} // namespace qdcoh::quad
