// phonon.hpp: Acoustic-phonon bath: spectral density, Franck-Condon factor, polaron-frame
// propagator phi(tau), sideband correlation, dressed-state scattering rates and the
// virtual-phonon pure-dephasing rate.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "qdcoh/error.hpp"
#include "qdcoh/quadrature.hpp"
#include "qdcoh/scenario.hpp"
#include "qdcoh/units.hpp"

namespace qdcoh::phonon {

using cplx = std::complex<double>;

// Integration cut-offs in units of nu_c. The Gaussian factor is < 1e-27 at 8 nu_c; the
// nu^10 dephasing integrand peaks at sqrt(5) nu_c and needs the wider window.
inline constexpr double kPropagatorCutoff = 8.0;
inline constexpr double kDephasingCutoff = 10.0;
inline constexpr double kSmallNu = 1e-6;         // ps^-1, below this use the nu -> 0 limit
inline constexpr double kRateHorizon = 50.0;     // ps
inline constexpr double kRateRemainder = 1e-12;  // bound on |Lambda| at the horizon

struct PhononPropagatorTrace {
    std::vector<double> tau;  // ps
    std::vector<cplx> phi;
};

struct PolaronRates {
    double gamma0_x{0.0};  // ps, real parts of the integrals (scaled by (Omega/2)^2 later)
    double gammac_y{0.0};
    double gammas_y{0.0};
    double eta{0.0};       // ps^-1, dressed-state splitting
};

inline double spectral_density(double nu, const PhononEnvironment& env) {
    if (nu < 0.0) throw ValidationError("spectral_density: nu must be >= 0");
    return env.alpha * nu * nu * nu * std::exp(-nu * nu / (env.nu_c * env.nu_c));
}

namespace detail {

// nu * coth(nu / (2 w)) with w = k_B T / hbar; finite as nu -> 0 (limit 2w).
inline double nu_coth(double nu, double w) {
    if (w <= 0.0) return nu;
    const double x = nu / (2.0 * w);
    if (nu < kSmallNu || x < 1e-6) return 2.0 * w * (1.0 + x * x / 3.0);
    if (x > 20.0) return nu;
    return nu / std::tanh(x);
}

// coth^2(x) - 1 = 1/sinh^2(x), overflow-safe.
inline double csch2(double x) {
    if (x > 20.0) {
        const double e = std::exp(-2.0 * x);
        return 4.0 * e / ((1.0 - e) * (1.0 - e));
    }
    const double s = std::sinh(x);
    return 1.0 / (s * s);
}

} // namespace detail

inline double franck_condon_factor(const PhononEnvironment& env, quad::Tolerance tol = {}) {
    env.validate();
    if (env.alpha == 0.0) return 1.0;
    const double w = units::thermal_rate(env.temperature);
    const double nc2 = env.nu_c * env.nu_c;
    auto f = [&](double nu) {
        return env.alpha * std::exp(-nu * nu / nc2) * detail::nu_coth(nu, w);
    };
    const double integral = quad::adaptive_simpson(f, 0.0, kPropagatorCutoff * env.nu_c, tol, 16);
    return std::exp(-0.5 * integral);
}

// Evaluates phi(tau) for one bath; caches B and phi(0) for tolerance scaling.
class PhononPropagator {
public:
    explicit PhononPropagator(const PhononEnvironment& env, quad::Tolerance tol = {})
        : env_(env), tol_(tol), w_(units::thermal_rate(env.temperature)) {
        env_.validate();
        b_ = franck_condon_factor(env_, tol_);
        phi0_ = -2.0 * std::log(b_);
    }

    const PhononEnvironment& environment() const noexcept { return env_; }
    double franck_condon() const noexcept { return b_; }
    double phi_zero() const noexcept { return phi0_; }

    // Uniform-node trapezoid in nu for T > 0, adaptive Simpson otherwise. The integrand is
    // even and analytic in nu, so by Poisson summation the trapezoid error is phi evaluated at
    // the alias times 2 pi k / dnu -+ tau; the node spacing keeps those past the decay horizon.
    cplx operator()(double tau) const {
        if (env_.alpha == 0.0 || env_.temperature == 0.0) return evaluate(tau, tol_);
        return evaluate_spectral(tau);
    }

    // Lag beyond which |phi| is negligible: Gaussian decay on 1/nu_c and thermal decay at the
    // rate 2 pi k_B T / hbar set by the poles of coth.
    double decay_horizon() const noexcept {
        return std::max(30.0 / env_.nu_c, 40.0 / (2.0 * std::numbers::pi * w_));
    }

    cplx evaluate_spectral(double tau) const {
        if (tau < 0.0) throw ValidationError("phonon_propagator: tau must be >= 0");
        if (env_.alpha == 0.0) return {0.0, 0.0};
        const double nc2 = env_.nu_c * env_.nu_c;
        const double numax = kPropagatorCutoff * env_.nu_c;
        const double dnu_max = 2.0 * std::numbers::pi / (tau + 2.0 * decay_horizon());
        const auto n = static_cast<std::size_t>(std::ceil(numax / dnu_max));
        const double dnu = numax / static_cast<double>(n);
        double re = 0.5 * env_.alpha * detail::nu_coth(0.0, w_);
        double im = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            const double nu = dnu * static_cast<double>(k);
            const double g = env_.alpha * std::exp(-nu * nu / nc2) * (k == n ? 0.5 : 1.0);
            re += g * detail::nu_coth(nu, w_) * std::cos(nu * tau);
            im -= g * nu * std::sin(nu * tau);
        }
        return {re * dnu, im * dnu};
    }

    cplx evaluate(double tau, quad::Tolerance tol) const {
        if (tau < 0.0) throw ValidationError("phonon_propagator: tau must be >= 0");
        if (env_.alpha == 0.0) return {0.0, 0.0};
        const double nc2 = env_.nu_c * env_.nu_c;
        const double numax = kPropagatorCutoff * env_.nu_c;
        auto f = [&](double nu) {
            const double g = env_.alpha * std::exp(-nu * nu / nc2);
            return cplx(g * detail::nu_coth(nu, w_) * std::cos(nu * tau),
                        -g * nu * std::sin(nu * tau));
        };
        const auto panels = static_cast<std::size_t>(std::max(16.0, std::ceil(numax * tau / 3.0)));
        try {
            return quad::adaptive_simpson<cplx>(f, 0.0, numax, tol, panels, phi0_);
        } catch (const NumericalError& e) {
            std::ostringstream os;
            os << "phonon_propagator failed at tau = " << tau << " ps: " << e.what();
            throw NumericalError(os.str());
        }
    }

private:
    PhononEnvironment env_;
    quad::Tolerance tol_;
    double w_;
    double b_{1.0};
    double phi0_{0.0};
};

inline PhononPropagatorTrace phonon_propagator(std::span<const double> tau_grid,
                                               const PhononEnvironment& env,
                                               quad::Tolerance tol = {}) {
    const PhononPropagator prop(env, tol);
    PhononPropagatorTrace out;
    out.tau.assign(tau_grid.begin(), tau_grid.end());
    out.phi.reserve(tau_grid.size());
    for (double t : tau_grid) out.phi.push_back(prop(t));
    return out;
}

// G(tau) = B^2 exp(phi(tau)).
inline std::vector<cplx> sideband_correlation(const PhononPropagatorTrace& trace, double b) {
    std::vector<cplx> g;
    g.reserve(trace.phi.size());
    for (const auto& p : trace.phi) g.push_back(b * b * std::exp(p));
    return g;
}

namespace detail {

struct RateTriple {
    cplx xx, yc, ys;
    RateTriple& operator+=(const RateTriple& o) {
        xx += o.xx; yc += o.yc; ys += o.ys;
        return *this;
    }
    friend RateTriple operator+(RateTriple a, const RateTriple& b) { return a += b; }
    friend RateTriple operator-(const RateTriple& a, const RateTriple& b) {
        return {a.xx - b.xx, a.yc - b.yc, a.ys - b.ys};
    }
    friend RateTriple operator*(double s, const RateTriple& a) { return {s * a.xx, s * a.yc, s * a.ys}; }
    friend RateTriple operator*(const RateTriple& a, double s) { return s * a; }
    friend RateTriple operator/(const RateTriple& a, double s) { return (1.0 / s) * a; }
    friend double abs(const RateTriple& a) {
        return std::max({std::abs(a.xx), std::abs(a.yc), std::abs(a.ys)});
    }
};

} // namespace detail

// Lambda_xx = B^2 (e^phi + e^-phi - 2), Lambda_yy = B^2 (e^phi - e^-phi).
inline std::pair<cplx, cplx> polaron_correlations(cplx phi, double b) {
    const cplx ep = std::exp(phi);
    const cplx em = std::exp(-phi);
    return {b * b * (ep + em - 2.0), b * b * (ep - em)};
}

inline PolaronRates polaron_rates(const PhononPropagator& prop, double eta, quad::Tolerance tol = {}) {
    if (!(eta >= 0.0)) throw ValidationError("polaron_rates: eta must be >= 0");
    PolaronRates r;
    r.eta = eta;
    if (prop.environment().alpha == 0.0) return r;
    const double b = prop.franck_condon();

    // The bound must not be swamped by quadrature noise in phi, so evaluate it tightly.
    auto tail = polaron_correlations(prop.evaluate(kRateHorizon, {1e-14, 50}), b);
    const double remainder = std::max(std::abs(tail.first), std::abs(tail.second));
    if (remainder > kRateRemainder) {
        std::ostringstream os;
        os << "polaron_rates: |Lambda(" << kRateHorizon << " ps)| = " << remainder
           << " exceeds truncation bound " << kRateRemainder;
        throw NumericalError(os.str());
    }

    auto f = [&](double tau) {
        const auto [lxx, lyy] = polaron_correlations(prop(tau), b);
        return detail::RateTriple{lxx, lyy * std::cos(eta * tau), lyy * std::sin(eta * tau)};
    };
    const auto integral = quad::adaptive_simpson<detail::RateTriple>(f, 0.0, kRateHorizon, tol, 64);
    r.gamma0_x = integral.xx.real();
    r.gammac_y = integral.yc.real();
    r.gammas_y = integral.ys.real();
    return r;
}

inline PolaronRates polaron_rates(const PhononEnvironment& env, double eta, quad::Tolerance tol = {}) {
    return polaron_rates(PhononPropagator(env, tol), eta, tol);
}

// gamma(T)/mu: the thermal integral without the virtual-process prefactor, in ps^-1 / ps^2.
inline double dephasing_shape(const PhononEnvironment& env, quad::Tolerance tol = {}) {
    env.validate();
    if (env.temperature == 0.0 || env.alpha == 0.0) return 0.0;
    const double w = units::thermal_rate(env.temperature);
    const double nc2 = env.nu_c * env.nu_c;
    auto f = [&](double nu) {
        if (nu <= 0.0) return 0.0;
        const double nu2 = nu * nu;
        const double nu10 = nu2 * nu2 * nu2 * nu2 * nu2;
        return nu10 * std::exp(-nu2 / nc2) * detail::csch2(nu / (2.0 * w));
    };
    const double integral = quad::adaptive_simpson(f, 0.0, kDephasingCutoff * env.nu_c, tol, 32);
    return env.alpha / (4.0 * nc2 * nc2) * integral;
}

// Thermal pure-dephasing rate 1/T2* from virtual phonon scattering.
inline double virtual_dephasing_rate(const PhononEnvironment& env, quad::Tolerance tol = {}) {
    return env.mu * dephasing_shape(env, tol);
}

// Geometric grid from tau_start to tau_end with the given density, prefixed by tau = 0.
inline std::vector<double> default_tau_grid(double tau_end = 1000.0, int per_decade = 60,
                                            double tau_start = 1e-3) {
    require(tau_end > tau_start && tau_start > 0.0 && per_decade > 0, "invalid tau grid");
    const double decades = std::log10(tau_end / tau_start);
    const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade));
    std::vector<double> grid{0.0};
    grid.reserve(n + 2);
    for (std::size_t i = 0; i <= n; ++i)
        grid.push_back(tau_start * std::pow(10.0, decades * static_cast<double>(i) / static_cast<double>(n)));
    grid.back() = tau_end;
    return grid;
}

} // namespace qdcoh::phonon
