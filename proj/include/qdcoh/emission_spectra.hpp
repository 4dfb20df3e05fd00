// emission_spectra.hpp: Optical and phonon-sideband channels of g1, cavity-filtered
// spectra, partial powers, and the filtered correlation seen behind the cavity.
//
// Conventions: S(omega) = Re int_0^inf g1(tau) exp(-i omega tau) dtau, omega measured from
// the laser. The stored filter is H(omega) / (8 pi g^2) = kappa / ((omega - delta)^2 + kappa^2/4),
// so H(delta) = 4 / kappa; with the cavity disabled H == 1.
//
// Every partial power is available by two routes. The frequency route integrates
// H(omega) S(omega) on a composite omega grid. The time route uses
// int H S domega = 2 pi Re int_0^inf K(tau)^* g1(tau) dtau with K(s) = exp(-kappa|s|/2 + i delta s),
// the inverse transform of H, and needs no omega grid at all.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "qdcoh/error.hpp"
#include "qdcoh/phonon.hpp"
#include "qdcoh/polaron_dynamics.hpp"
#include "qdcoh/quadrature.hpp"
#include "qdcoh/scenario.hpp"

namespace qdcoh::spectra {

using cplx = std::complex<double>;
using dynamics::CorrelationTrace;
using dynamics::ExponentialMode;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kAliasing = 1e-6;      // |g1_inc(tau_end)| / g1(0) ceiling
inline constexpr double kClamp = 1e-9;         // relative size of negative values zeroed in output
inline constexpr double kOuterOmega = 1e4;     // ps^-1, far edge of the unfiltered omega grid

inline double cavity_filter(double omega, const EmitterCavityScenario& s) {
    if (!s.cavity_filter) return 1.0;
    require(s.kappa > 0.0, "cavity_filter: kappa must be > 0");
    const double d = omega - s.cavity_detuning;
    return s.kappa / (d * d + 0.25 * s.kappa * s.kappa);
}

// consistent: g1_psb = (G/B^2 - 1) g1_opt, whose unfiltered ZPL fraction is exactly B^2.
// literal:    g1_psb = (G - B^2) g1_opt.
enum class SidebandForm { consistent, literal };

inline std::vector<cplx> sideband_g1(std::span<const cplx> g1_opt, std::span<const cplx> phi, double b,
                                     SidebandForm form = SidebandForm::consistent) {
    if (g1_opt.size() != phi.size()) throw ValidationError("sideband_g1: tau grids differ in length");
    require(b > 0.0 && b <= 1.0, "sideband_g1: B must lie in (0,1]");
    const double scale = form == SidebandForm::consistent ? 1.0 : b * b;
    std::vector<cplx> out(g1_opt.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * (std::exp(phi[i]) - 1.0) * g1_opt[i];
    return out;
}

// Raw (unnormalised) channels on a common tau grid.
struct EmissionChannels {
    std::vector<double> tau;
    std::vector<cplx> g1_inc;
    std::vector<cplx> g1_psb;
    cplx g1_coh{0.0, 0.0};
    double g1_opt0{0.0};
    double b{1.0};
    double nu_c{1.0};           // ps^-1, sets the sideband omega range
    double zpl_halfwidth{0.0};  // ps^-1, 1/T2 of the zero-phonon line

    double g1_total0() const { return g1_opt0 + g1_psb.front().real(); }
};

inline EmissionChannels make_channels(const CorrelationTrace& opt, const phonon::PhononPropagatorTrace& phi,
                                      double nu_c, double zpl_halfwidth,
                                      SidebandForm form = SidebandForm::consistent) {
    if (opt.tau != phi.tau) throw ValidationError("make_channels: g1 and phi use different tau grids");
    require(!opt.tau.empty() && opt.tau.front() == 0.0, "make_channels: tau grid must start at 0");
    require(zpl_halfwidth > 0.0, "make_channels: ZPL half-width must be > 0");
    EmissionChannels c;
    c.tau = opt.tau;
    c.g1_inc = opt.g1_inc;
    c.g1_psb = sideband_g1(opt.g1_opt, phi.phi, opt.b, form);
    c.g1_coh = opt.g1_coh;
    c.g1_opt0 = opt.norm();
    c.b = opt.b;
    c.nu_c = nu_c;
    c.zpl_halfwidth = zpl_halfwidth;
    return c;
}

inline void check_aliasing(const EmissionChannels& c) {
    const double g0 = std::max(c.g1_total0(), 1e-300);
    const double tail = std::abs(c.g1_inc.back());
    if (tail > kAliasing * g0) {
        std::ostringstream os;
        os << "compute_spectrum: |g1_inc(" << c.tau.back() << " ps)| / g1(0) = " << tail / g0
           << " exceeds " << kAliasing << "; extend the tau grid";
        throw ValidationError(os.str());
    }
}

namespace detail {

inline void append_uniform(std::vector<double>& w, double centre, double half, double step) {
    const auto n = static_cast<long>(std::ceil(half / step));
    for (long i = -n; i <= n; ++i) w.push_back(centre + step * static_cast<double>(i));
}

// Slope at tau = 0 of the piecewise-linear interpolant; sets its 1/omega^2 spectral tail.
inline double slope_at_origin(std::span<const double> tau, std::span<const cplx> g) {
    return ((g[1] - g[0]) / (tau[1] - tau[0])).real();
}

} // namespace detail

// Union of a ZPL grid (1/T2 / 20 over +-50/T2), a cavity grid (kappa/50 over +-5 kappa),
// a sideband grid (nu_c/80 over +-10 nu_c) and log-spaced outer points.
inline std::vector<double> default_omega_grid(const EmissionChannels& c, const EmitterCavityScenario& s) {
    std::vector<double> w;
    const double g2 = c.zpl_halfwidth;
    detail::append_uniform(w, 0.0, 50.0 * g2, g2 / 20.0);
    if (s.cavity_filter) detail::append_uniform(w, s.cavity_detuning, 5.0 * s.kappa, s.kappa / 50.0);
    const double wide = 10.0 * std::max(c.nu_c, s.cavity_filter ? s.kappa : 0.0);
    detail::append_uniform(w, 0.0, wide, c.nu_c / 80.0);
    const double top = std::max(kOuterOmega, 2.0 * wide);
    const int per_decade = 20;
    const auto n = static_cast<int>(std::ceil(std::log10(top / wide) * per_decade));
    for (int i = 1; i <= n; ++i) {
        const double x = wide * std::pow(top / wide, static_cast<double>(i) / n);
        w.push_back(x);
        w.push_back(-x);
    }
    std::sort(w.begin(), w.end());
    const double eps = 1e-9 * std::max(g2, 1e-12);
    w.erase(std::unique(w.begin(), w.end(), [eps](double a, double b) { return std::abs(a - b) < eps; }),
            w.end());
    return w;
}

struct SpectrumTrace {
    std::vector<double> omega;   // ps^-1 relative to the laser
    std::vector<double> inc;     // ps, incoherent ZPL part (raw transform)
    std::vector<double> psb;     // ps, sideband part (raw transform)
    std::vector<double> values;  // ps, inc + psb, tiny negatives clamped to zero
    double coherent_weight{0.0}; // weight of the delta at omega = 0 (pi g1_coh, times H(0) if filtered)
    bool filtered{false};
    std::size_t negative_excursions{0};  // samples below -kClamp * max left unclamped
};

inline SpectrumTrace compute_spectrum(const EmissionChannels& c, const EmitterCavityScenario& s,
                                      std::span<const double> omega, bool filtered) {
    check_aliasing(c);
    SpectrumTrace out;
    out.omega.assign(omega.begin(), omega.end());
    out.filtered = filtered;
    out.inc.resize(omega.size());
    out.psb.resize(omega.size());
    out.values.resize(omega.size());

    // The sideband channel is negligible once phi has decayed; trim it to save work.
    const double g0 = std::max(c.g1_total0(), 1e-300);
    std::size_t n_psb = c.tau.size();
    while (n_psb > 2 && std::abs(c.g1_psb[n_psb - 1]) < 1e-15 * g0) --n_psb;
    const std::span<const double> tau(c.tau);
    const std::span<const double> tau_psb = tau.first(n_psb);
    const std::span<const cplx> psb = std::span<const cplx>(c.g1_psb).first(n_psb);

    for (std::size_t k = 0; k < omega.size(); ++k) {
        const double h = filtered ? cavity_filter(omega[k], s) : 1.0;
        out.inc[k] = h * quad::filon(tau, c.g1_inc, -omega[k]).real();
        out.psb[k] = h * quad::filon(tau_psb, psb, -omega[k]).real();
    }
    double peak = 0.0;
    for (std::size_t k = 0; k < omega.size(); ++k) peak = std::max(peak, out.inc[k] + out.psb[k]);
    for (std::size_t k = 0; k < omega.size(); ++k) {
        double v = out.inc[k] + out.psb[k];
        if (v < 0.0) {
            if (v >= -kClamp * peak)
                v = 0.0;
            else
                ++out.negative_excursions;
        }
        out.values[k] = v;
    }
    out.coherent_weight = kPi * c.g1_coh.real() * (filtered ? cavity_filter(0.0, s) : 1.0);
    return out;
}

struct PartialPowers {
    double p_coh{0.0};
    double p_inc{0.0};
    double p_opt{0.0};
    double p_psb{0.0};
    double p_tot{0.0};
};

struct FilteredFractions {
    PartialPowers powers;
    double f_zpl{0.0};
    double f_coh{0.0};
};

inline FilteredFractions fractions_from_powers(PartialPowers p) {
    p.p_opt = p.p_coh + p.p_inc;
    p.p_tot = p.p_opt + p.p_psb;
    FilteredFractions f;
    f.powers = p;
    f.f_zpl = p.p_tot > 0.0 ? p.p_opt / p.p_tot : 0.0;
    f.f_coh = p.p_opt > 0.0 ? p.p_coh / p.p_opt : 0.0;
    return f;
}

// Frequency route. `gain` multiplies H (the 8 pi g^2 scale) and must cancel in every fraction.
inline FilteredFractions filtered_fractions(const EmissionChannels& c, const EmitterCavityScenario& s,
                                            std::span<const double> omega, double gain = 1.0) {
    require(gain > 0.0, "filtered_fractions: gain must be > 0");
    require(omega.size() > 2, "filtered_fractions: omega grid too small");
    const double need = 10.0 * std::max(c.nu_c, s.cavity_filter ? s.kappa : 0.0);
    if (omega.front() > -need || omega.back() < need) {
        std::ostringstream os;
        os << "filtered_fractions: omega grid [" << omega.front() << ", " << omega.back()
           << "] ps^-1 does not cover +-" << need << " ps^-1";
        throw ValidationError(os.str());
    }
    const bool filtered = s.cavity_filter;
    const auto spec = compute_spectrum(c, s, omega, filtered);
    PartialPowers p;
    p.p_inc = gain * quad::trapezoid<double>(omega, spec.inc);
    p.p_psb = gain * quad::trapezoid<double>(omega, spec.psb);
    p.p_coh = gain * spec.coherent_weight;
    if (!filtered) {
        // Beyond +-W the transform of the interpolant falls as -Re g'(0)/omega^2.
        const double w = std::min(-omega.front(), omega.back());
        p.p_inc += gain * -2.0 * detail::slope_at_origin(c.tau, c.g1_inc) / w;
        p.p_psb += gain * -2.0 * detail::slope_at_origin(c.tau, c.g1_psb) / w;
    }
    return fractions_from_powers(p);
}

inline FilteredFractions filtered_fractions(const EmissionChannels& c, const EmitterCavityScenario& s) {
    const auto omega = default_omega_grid(c, s);
    return filtered_fractions(c, s, omega);
}

// Time route, from the exponential modes of g1_opt and the phonon propagator. Independent of
// both the tau and omega grids.
inline FilteredFractions time_domain_fractions(const dynamics::OpticalCorrelation& opt,
                                               const phonon::PhononPropagator& prop,
                                               const EmitterCavityScenario& s,
                                               quad::Tolerance tol = {1e-10, 40},
                                               SidebandForm form = SidebandForm::consistent) {
    if (opt.modes().empty())
        throw NumericalError("time_domain_fractions: generator is not diagonalisable");
    const double b = opt.b();
    const double psb_scale = form == SidebandForm::consistent ? 1.0 : b * b;
    PartialPowers p;
    if (!s.cavity_filter) {
        p.p_coh = kPi * opt.coherent().real();
        p.p_inc = kPi * opt(0.0).real() - p.p_coh;
        p.p_psb = kPi * psb_scale * (std::exp(prop.phi_zero()) - 1.0) * opt(0.0).real();
        return fractions_from_powers(p);
    }
    const cplx sk(0.5 * s.kappa, s.cavity_detuning);
    cplx opt_power = 0.0;
    for (const auto& m : opt.modes()) opt_power += m.weight / (sk - m.rate);
    p.p_coh = 2.0 * kPi * (opt.coherent() / sk).real();
    p.p_inc = 2.0 * kPi * opt_power.real() - p.p_coh;

    // phi is below 1e-10 well before 60 ps for any bath this model targets.
    const double horizon = 60.0;
    if (std::abs(prop(horizon)) > 1e-12)
        throw NumericalError("time_domain_fractions: phonon propagator not decayed at 60 ps");
    auto f = [&](double tau) { return (std::exp(prop(tau)) - 1.0) * opt(tau) * std::exp(-sk * tau); };
    const double scale = std::abs(f(0.0)) / std::max(prop.environment().nu_c, 1e-12);
    const cplx psb = quad::adaptive_simpson<cplx>(f, 0.0, horizon, tol, 120, scale);
    p.p_psb = 2.0 * kPi * psb_scale * psb.real();
    return fractions_from_powers(p);
}

// Lagrange-cubic table of phi on a uniform grid; phi is taken as zero past the table.
class PhiTable {
public:
    PhiTable(const phonon::PhononPropagator& prop, double step = 0.01, double horizon = 40.0)
        : step_(step) {
        const auto n = static_cast<std::size_t>(std::ceil(horizon / step)) + 1;
        values_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) values_.push_back(prop(static_cast<double>(i) * step));
        if (std::abs(values_.back()) > 1e-10) {
            std::ostringstream os;
            os << "PhiTable: |phi(" << horizon << " ps)| = " << std::abs(values_.back()) << " not negligible";
            throw NumericalError(os.str());
        }
    }

    cplx operator()(double tau) const {
        const double x = tau / step_;
        const auto n = values_.size();
        if (x >= static_cast<double>(n - 1)) return {0.0, 0.0};
        auto i = static_cast<std::size_t>(x);
        i = std::clamp<std::size_t>(i, 1, n - 3);
        const double t = x - static_cast<double>(i);
        const cplx& y0 = values_[i - 1];
        const cplx& y1 = values_[i];
        const cplx& y2 = values_[i + 1];
        const cplx& y3 = values_[i + 2];
        return y0 * (-t * (t - 1.0) * (t - 2.0) / 6.0) + y1 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0) +
               y2 * (-(t + 1.0) * t * (t - 2.0) / 2.0) + y3 * ((t + 1.0) * t * (t - 1.0) / 6.0);
    }

    double horizon() const { return step_ * static_cast<double>(values_.size() - 1); }

private:
    double step_;
    std::vector<cplx> values_;
};

// Total g1 as seen after the cavity: g_f(tau) = int K(s) g(tau - s) ds with g(-t) = g(t)^*.
// g_f(0) equals P_tot / pi of the time route.
class FilteredCorrelation {
public:
    FilteredCorrelation(dynamics::OpticalCorrelation opt, const phonon::PhononPropagator& prop,
                        const EmitterCavityScenario& s, SidebandForm form = SidebandForm::consistent)
        : opt_(std::move(opt)), phi_(prop), s_(s) {
        if (opt_.modes().empty())
            throw NumericalError("FilteredCorrelation: generator is not diagonalisable");
        const double b = opt_.b();
        psb_scale_ = form == SidebandForm::consistent ? 1.0 : b * b;
    }

    // Unfiltered total g1 at tau >= 0.
    cplx total(double tau) const {
        const cplx o = optical(tau);
        return o + psb_scale_ * (std::exp(phi_(tau)) - 1.0) * o;
    }

    cplx operator()(double tau) const {
        if (!s_.cavity_filter) return total(tau);
        require(tau >= 0.0, "FilteredCorrelation: tau must be >= 0");
        const double k2 = 0.5 * s_.kappa;
        const double reach = 40.0 / k2;  // exp(-40) kernel cut
        auto full = [&](double u) { return u >= 0.0 ? total(u) : std::conj(total(-u)); };
        auto kernel = [&](double u) {
            const double s = tau - u;
            return std::exp(-k2 * std::abs(s)) * std::polar(1.0, s_.cavity_detuning * s);
        };
        auto f = [&](double u) { return kernel(u) * full(u); };
        const quad::Tolerance tol{1e-9, 40};
        const double scale = std::abs(total(0.0)) / k2;
        auto piece = [&](double a, double b) {
            if (!(b > a)) return cplx{};
            const auto panels = static_cast<std::size_t>(std::clamp(std::ceil((b - a) * 4.0), 8.0, 400.0));
            return quad::adaptive_simpson<cplx>(f, a, b, tol, panels, scale);
        };
        // Split at the kernel cusp (u = tau) and at the conjugation point (u = 0).
        cplx acc = piece(std::max(-reach, tau - reach), std::min(0.0, tau));
        acc += piece(std::max(0.0, tau - reach), tau);
        acc += piece(tau, tau + reach);
        return acc;
    }

    const dynamics::OpticalCorrelation& optical_correlation() const noexcept { return opt_; }

private:
    cplx optical(double tau) const {
        cplx acc = 0.0;
        for (const auto& m : opt_.modes()) acc += m.weight * std::exp(m.rate * tau);
        return acc;
    }

    dynamics::OpticalCorrelation opt_;
    PhiTable phi_;
    EmitterCavityScenario s_;
    double psb_scale_{1.0};
};

// v(tau) = (1 - epsilon) |g1(tau)| / g1(0).
inline std::vector<double> visibility_trace(std::span<const cplx> g1, double epsilon) {
    require(epsilon >= 0.0 && epsilon < 1.0, "visibility_trace: epsilon must lie in [0,1)");
    require(!g1.empty(), "visibility_trace: empty trace");
    const double g0 = std::abs(g1.front());
    std::vector<double> v(g1.size(), 0.0);
    if (g0 == 0.0) return v;
    for (std::size_t i = 0; i < g1.size(); ++i) v[i] = (1.0 - epsilon) * std::abs(g1[i]) / g0;
    return v;
}

} // namespace qdcoh::spectra
