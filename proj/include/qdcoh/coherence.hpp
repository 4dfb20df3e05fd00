// coherence.hpp: Experiment-facing coherence algebra: fringe contrast, plateau amplitudes,
// coherent fraction and its inversion, dephasing split, HOM visibility, spectral tuning.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qdcoh/error.hpp"
#include "qdcoh/units.hpp"

namespace qdcoh::coherence {

// ---------------------------------------------------------------------------------------
// Fringe contrast

struct FringeContrast {
    double visibility{0.0};
    double standard_error{0.0};
    std::size_t extrema{0};
};

namespace detail {

inline std::vector<double> median3(std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        double a = x[i - 1], b = x[i], c = x[i + 1];
        out[i] = std::max(std::min(a, b), std::min(std::max(a, b), c));
    }
    return out;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

// Least-squares parabola through (x[i], y[i]) for i in [lo, hi]; returns the vertex value
// when the vertex lies inside the window and the curvature has the expected sign.
inline std::optional<double> parabola_vertex(std::span<const double> x, std::span<const double> y,
                                             std::size_t lo, std::size_t hi, bool maximum) {
    const double x0 = x[(lo + hi) / 2];
    double s[5] = {0, 0, 0, 0, 0}, t[3] = {0, 0, 0};
    for (std::size_t i = lo; i <= hi; ++i) {
        const double d = x[i] - x0;
        double p = 1.0;
        for (int k = 0; k < 5; ++k) {
            s[k] += p;
            if (k < 3) t[k] += p * y[i];
            p *= d;
        }
    }
    // Normal equations for y = a + b d + c d^2, solved by Cramer's rule.
    const double m[3][3] = {{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}};
    auto det3 = [](const double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    const double d = det3(m);
    if (std::abs(d) < 1e-300) return std::nullopt;
    double coef[3];
    for (int col = 0; col < 3; ++col) {
        double r[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r[i][j] = j == col ? t[i] : m[i][j];
        coef[col] = det3(r) / d;
    }
    const double a = coef[0], b = coef[1], c = coef[2];
    if (maximum ? c >= 0.0 : c <= 0.0) return std::nullopt;
    const double xv = -b / (2.0 * c);
    if (xv < x[lo] - x0 || xv > x[hi] - x0) return std::nullopt;
    return a + b * xv + c * xv * xv;
}

} // namespace detail

// Contrast of a phase scan. Extrema are found on a 3-point median-smoothed copy with a
// hysteresis threshold of twice the MAD noise estimate, then refined by a local parabola
// on the raw samples. Each adjacent max/min pair gives one contrast; the mean is reported.
inline FringeContrast fringe_contrast(std::span<const double> phase, std::span<const double> intensity) {
    if (phase.size() != intensity.size()) throw ValidationError("fringe_contrast: column lengths differ");
    for (double i : intensity)
        if (!(i >= 0.0)) throw ValidationError("fringe_contrast: negative or non-finite intensity");
    const std::size_t n = intensity.size();
    if (n < 5) throw ValidationError("fringe_contrast: too few samples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return phase[a] < phase[b]; });
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = phase[order[i]];
        y[i] = intensity[order[i]];
    }

    const auto smooth = detail::median3(y);
    // Noise from the second difference, which removes a smooth fringe to O(h^2).
    std::vector<double> resid(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) resid[i - 1] = std::abs(y[i] - 0.5 * (y[i - 1] + y[i + 1]));
    const double noise = 1.4826 * detail::median(resid) / std::sqrt(1.5);
    const auto [lo_it, hi_it] = std::minmax_element(smooth.begin(), smooth.end());
    const double span = *hi_it - *lo_it;
    const double threshold = std::max(2.0 * noise, 1e-9 * *hi_it);
    if (span <= threshold) return {};

    // Hysteresis walk: an extremum is confirmed once the signal retreats by `threshold`.
    struct Extremum {
        std::size_t index;
        bool maximum;
    };
    std::vector<Extremum> ext;
    std::size_t cand = 0;
    int dir = 0;  // +1 looking for a maximum, -1 for a minimum
    for (std::size_t i = 1; i < n; ++i) {
        if (dir == 0) {
            if (smooth[i] - smooth[cand] > threshold) dir = 1;
            else if (smooth[cand] - smooth[i] > threshold) dir = -1;
            if (dir == 0 && std::abs(smooth[i] - smooth[0]) > std::abs(smooth[cand] - smooth[0])) cand = i;
            if (dir != 0) cand = i;
            continue;
        }
        if (dir > 0) {
            if (smooth[i] > smooth[cand]) cand = i;
            else if (smooth[cand] - smooth[i] > threshold) {
                ext.push_back({cand, true});
                cand = i;
                dir = -1;
            }
        } else {
            if (smooth[i] < smooth[cand]) cand = i;
            else if (smooth[i] - smooth[cand] > threshold) {
                ext.push_back({cand, false});
                cand = i;
                dir = 1;
            }
        }
    }
    // Pairs whose swing is far below the typical fringe swing are noise wiggles; drop the
    // pair and keep the more extreme of the same-type neighbours.
    while (ext.size() >= 4) {
        std::vector<double> swing(ext.size() - 1);
        for (std::size_t k = 0; k + 1 < ext.size(); ++k)
            swing[k] = std::abs(smooth[ext[k + 1].index] - smooth[ext[k].index]);
        const std::size_t k = static_cast<std::size_t>(std::min_element(swing.begin(), swing.end()) - swing.begin());
        if (swing[k] >= 0.5 * detail::median(swing)) break;
        auto more_extreme = [&](std::size_t a, std::size_t b) {
            return ext[a].maximum == (smooth[ext[a].index] >= smooth[ext[b].index]) ? a : b;
        };
        if (k == 0) {
            ext.erase(ext.begin(), ext.begin() + 2);
        } else if (k + 2 == ext.size()) {
            ext.erase(ext.end() - 2, ext.end());
        } else {
            ext[k - 1] = ext[more_extreme(k - 1, k + 1)];
            ext[k + 2] = ext[more_extreme(k + 2, k)];
            ext.erase(ext.begin() + static_cast<std::ptrdiff_t>(k), ext.begin() + static_cast<std::ptrdiff_t>(k + 2));
        }
    }
    if (ext.size() < 3) {
        std::ostringstream os;
        os << "fringe_contrast: only " << ext.size() << " extrema resolved, need >= 3";
        throw ValidationError(os.str());
    }

    // Refinement window: half the mean extremum spacing, at least two samples either side.
    const double spacing = static_cast<double>(ext.back().index - ext.front().index) /
                           static_cast<double>(ext.size() - 1);
    const auto half = static_cast<std::size_t>(std::max(2.0, std::round(spacing / 4.0)));
    std::vector<double> level(ext.size());
    for (std::size_t k = 0; k < ext.size(); ++k) {
        const std::size_t i = ext[k].index;
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        const auto v = hi - lo >= 2 ? detail::parabola_vertex(x, y, lo, hi, ext[k].maximum) : std::nullopt;
        level[k] = v.value_or(smooth[i]);
    }

    std::vector<double> contrasts;
    for (std::size_t k = 1; k < ext.size(); ++k) {
        const double a = level[k - 1], b = level[k];
        const double imax = std::max(a, b), imin = std::max(0.0, std::min(a, b));
        if (imax + imin > 0.0) contrasts.push_back((imax - imin) / (imax + imin));
    }
    const double m = std::accumulate(contrasts.begin(), contrasts.end(), 0.0) / static_cast<double>(contrasts.size());
    double var = 0.0;
    for (double c : contrasts) var += (c - m) * (c - m);
    const double k = static_cast<double>(contrasts.size());
    const double se = contrasts.size() > 1 ? std::sqrt(var / (k - 1.0) / k) : 0.0;
    return {m, se, ext.size()};
}

struct InterferogramPoint {
    double tau;
    double visibility;
    double standard_error;
};

// Groups (tau, phase, intensity) records by tau and extracts one contrast per delay.
inline std::vector<InterferogramPoint> analyze_interferogram(std::span<const double> tau,
                                                             std::span<const double> phase,
                                                             std::span<const double> intensity) {
    if (tau.size() != phase.size() || tau.size() != intensity.size())
        throw ValidationError("analyze_interferogram: column lengths differ");
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        auto& g = groups[tau[i]];
        g.first.push_back(phase[i]);
        g.second.push_back(intensity[i]);
    }
    std::vector<InterferogramPoint> out;
    for (const auto& [t, g] : groups) {
        try {
            const auto c = fringe_contrast(g.first, g.second);
            out.push_back({t, c.visibility, c.standard_error});
        } catch (const ValidationError& e) {
            std::ostringstream os;
            os << "tau = " << t << " ps: " << e.what();
            throw ValidationError(os.str());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Plateau analysis

struct Window {
    double lo;  // ps
    double hi;  // ps
};

struct PlateauWindows {
    Window total{0.1, 0.5};
    Window zpl{5.0, 10.0};
    Window coherent{200.0, 1000.0};
};

struct PlateauAmplitudes {
    double a_psb{0.0};
    double a_inc{0.0};
    double a_coh{0.0};
    double f_zpl{0.0};
    double mean_total{0.0};
    double mean_zpl{0.0};
    double mean_coherent{0.0};
    PlateauWindows windows{};
};

// Time-weighted mean of the piecewise-linear trace over [w.lo, w.hi].
inline double window_mean(std::span<const double> tau, std::span<const double> v, Window w) {
    if (tau.size() != v.size() || tau.size() < 2) throw ValidationError("window_mean: bad trace");
    if (tau.front() > w.lo || tau.back() < w.hi) {
        std::ostringstream os;
        os << "plateau window [" << w.lo << ", " << w.hi << "] ps not covered by data ["
           << tau.front() << ", " << tau.back() << "] ps";
        throw ValidationError(os.str());
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < tau.size(); ++i) {
        const double a = std::max(w.lo, tau[i - 1]), b = std::min(w.hi, tau[i]);
        if (b <= a) continue;
        const double h = tau[i] - tau[i - 1];
        auto at = [&](double t) { return v[i - 1] + (v[i] - v[i - 1]) * (t - tau[i - 1]) / h; };
        acc += 0.5 * (at(a) + at(b)) * (b - a);
    }
    return acc / (w.hi - w.lo);
}

// With `t2` set, the incoherent amplitude is divided by the window mean of exp(-tau/T2).
inline PlateauAmplitudes plateau_zpl_fraction(std::span<const double> tau, std::span<const double> v,
                                              PlateauWindows windows = {},
                                              std::optional<double> t2 = std::nullopt) {
    PlateauAmplitudes p;
    p.windows = windows;
    p.mean_total = window_mean(tau, v, windows.total);
    p.mean_zpl = window_mean(tau, v, windows.zpl);
    p.mean_coherent = window_mean(tau, v, windows.coherent);
    require(p.mean_total > 0.0, "plateau_zpl_fraction: zero signal in the first window");
    const double norm = p.mean_total;
    p.a_coh = std::max(0.0, p.mean_coherent / norm);
    double inc = std::max(0.0, (p.mean_zpl - p.mean_coherent) / norm);
    if (t2) {
        require(*t2 > 0.0, "plateau_zpl_fraction: T2 must be > 0");
        const Window w = windows.zpl;
        const double decay = *t2 * (std::exp(-w.lo / *t2) - std::exp(-w.hi / *t2)) / (w.hi - w.lo);
        inc /= decay;
    }
    p.a_inc = inc;
    p.a_psb = std::max(0.0, 1.0 - p.a_inc - p.a_coh);
    p.f_zpl = std::min(1.0, p.a_inc + p.a_coh);
    return p;
}

// Single exponential plus fixed plateau, fitted log-linearly over [w.lo, w.hi].
struct ExponentialSegment {
    double amplitude{0.0};
    double time_constant{0.0};  // ps
};

inline ExponentialSegment fit_exponential_segment(std::span<const double> tau, std::span<const double> v,
                                                  Window w, double plateau) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] < w.lo || tau[i] > w.hi) continue;
        const double d = v[i] - plateau;
        if (!(d > 0.0)) throw NumericalError("fit_exponential_segment: trace at or below the plateau");
        const double y = std::log(d);
        sx += tau[i];
        sy += y;
        sxx += tau[i] * tau[i];
        sxy += tau[i] * y;
        ++n;
    }
    if (n < 3) throw ValidationError("fit_exponential_segment: fewer than 3 samples in window");
    const double dn = static_cast<double>(n);
    const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / dn;
    if (!(slope < 0.0)) throw NumericalError("fit_exponential_segment: segment does not decay");
    return {std::exp(icpt), -1.0 / slope};
}

// ---------------------------------------------------------------------------------------
// Coherence algebra

// F_coh = (T2/2T1) / (1 + Omega_R^2 T1 T2).
inline double coherent_fraction(double t2_over_2t1, double t1, double omega_r) {
    require(t2_over_2t1 > 0.0 && t2_over_2t1 <= 1.0 + 1e-12, "coherent_fraction: T2/2T1 must lie in (0,1]");
    require(t1 > 0.0 && omega_r >= 0.0, "coherent_fraction: T1 > 0 and Omega_R >= 0 required");
    const double t2 = 2.0 * t1 * t2_over_2t1;
    return t2_over_2t1 / (1.0 + omega_r * omega_r * t1 * t2);
}

// Inverse of coherent_fraction: T2/2T1 = F / (1 - 2 Omega_R^2 T1^2 F).
inline double t2_ratio_from_coherent_fraction(double f_coh, double t1, double omega_r) {
    require(f_coh >= 0.0 && t1 > 0.0 && omega_r >= 0.0, "t2_ratio_from_coherent_fraction: invalid input");
    const double den = 1.0 - 2.0 * omega_r * omega_r * t1 * t1 * f_coh;
    if (!(den > 0.0)) {
        std::ostringstream os;
        os << "t2_ratio_from_coherent_fraction: 1 - 2 Omega_R^2 T1^2 F_coh = " << den << " <= 0";
        throw ValidationError(os.str());
    }
    return f_coh / den;
}

struct DephasingSplit {
    double inverse_t2_star{0.0};  // ps^-1, 1/T2* from 1/T2 = 1/(2 T1) + 1/T2*
    double lindblad_gamma{0.0};   // ps^-1, 2/T2*, coefficient of (gamma/2) L[sigma^dag sigma]
    bool clamped{false};
    std::string warning;
};

inline DephasingSplit dephasing_decomposition(double t2_over_2t1, double t1) {
    require(t2_over_2t1 > 0.0 && t1 > 0.0, "dephasing_decomposition: T2/2T1 and T1 must be > 0");
    DephasingSplit d;
    if (t2_over_2t1 > 1.0) {
        d.clamped = true;
        std::ostringstream os;
        os << "T2/2T1 = " << t2_over_2t1 << " > 1; pure dephasing clamped to 0";
        d.warning = os.str();
        return d;
    }
    const double t2 = 2.0 * t1 * t2_over_2t1;
    d.inverse_t2_star = std::max(0.0, 1.0 / t2 - 0.5 / t1);
    d.lindblad_gamma = 2.0 * d.inverse_t2_star;
    return d;
}

// V = B^4 T2/2T1, or T2/2T1 when the sideband is filtered out.
inline double hom_visibility(double b_squared, double t2_over_2t1, bool psb_filtered = false) {
    require(b_squared >= 0.0 && b_squared <= 1.0, "hom_visibility: B^2 must lie in [0,1]");
    require(t2_over_2t1 >= 0.0 && t2_over_2t1 <= 1.0 + 1e-12, "hom_visibility: T2/2T1 must lie in [0,1]");
    return psb_filtered ? t2_over_2t1 : b_squared * b_squared * t2_over_2t1;
}

// Bose-Einstein redshift -S E (coth(E / 2 k_B T) - 1), meV.
inline double redshift_model(double kelvin, double s, double e_ph) {
    require(e_ph > 0.0, "redshift_model: phonon energy must be > 0");
    require(kelvin >= 0.0, "redshift_model: temperature must be >= 0");
    if (kelvin == 0.0) return 0.0;
    const double x = e_ph / (2.0 * units::kB * kelvin);
    // coth(x) - 1 = 2 / (exp(2x) - 1)
    return -s * e_ph * 2.0 / std::expm1(2.0 * x);
}

struct StarkCoefficients {
    double c0{0.0};  // meV
    double c1{0.0};  // meV / V
    double c2{0.0};  // meV / V^2
};

inline double stark_model(double bias, const StarkCoefficients& c) {
    return c.c0 + bias * (c.c1 + bias * c.c2);
}

} // namespace qdcoh::coherence
