// scenario.hpp: Configuration records for the phonon bath and the emitter-cavity device

#pragma once

#include <cmath>
#include <string>

#include "qdcoh/error.hpp"
#include "qdcoh/units.hpp"

namespace qdcoh {

struct PhononEnvironment {
    double alpha{0.0446};     // ps^2, linear coupling strength
    double nu_c{1.35};        // ps^-1, cut-off
    double mu{0.0};           // ps^2, virtual-process prefactor
    double temperature{4.0};  // K

    void validate() const {
        require(std::isfinite(alpha) && alpha >= 0.0, "phonon: alpha must be >= 0");
        require(std::isfinite(nu_c) && nu_c > 0.0, "phonon: nu_c must be > 0");
        require(std::isfinite(mu) && mu >= 0.0, "phonon: mu must be >= 0");
        require(std::isfinite(temperature) && temperature >= 0.0,
                "phonon: temperature must be >= 0");
    }

    PhononEnvironment at(double kelvin) const {
        PhononEnvironment e = *this;
        e.temperature = kelvin;
        return e;
    }
};

struct EmitterCavityScenario {
    double gamma0{1.0 / 984.7};     // ps^-1, bulk radiative rate
    double purcell{43.0};           // F_P
    double kappa{units::energy_to_rate(2.51)};  // ps^-1, cavity FWHM entering the filter
    double cavity_detuning{0.0};    // ps^-1, omega_C - omega_X
    double rabi{units::ueV_to_rate(5.11)};  // ps^-1, phonon-renormalised Rabi frequency Omega_R
    double laser_detuning{0.0};     // ps^-1 (nonzero is experimental)
    double epsilon{0.05};           // interferometer imperfection
    double nonthermal_dephasing{0.0};  // ps^-1, constant additive 1/T2* offset
    bool cavity_filter{true};       // false: H(omega) == const (no cavity)

    void validate() const {
        require(std::isfinite(gamma0) && gamma0 > 0.0, "emitter: gamma0 must be > 0");
        require(std::isfinite(purcell) && purcell >= 1.0, "cavity: purcell must be >= 1");
        require(std::isfinite(kappa) && kappa > 0.0, "cavity: kappa must be > 0");
        require(std::isfinite(cavity_detuning), "cavity: detuning must be finite");
        require(std::isfinite(rabi) && rabi >= 0.0, "drive: Rabi frequency must be >= 0");
        require(std::isfinite(laser_detuning), "drive: laser detuning must be finite");
        require(epsilon >= 0.0 && epsilon < 1.0, "interferometer: epsilon must lie in [0,1)");
        require(std::isfinite(nonthermal_dephasing) && nonthermal_dephasing >= 0.0,
                "emitter: nonthermal dephasing must be >= 0");
    }
};

struct EmitterCavityRates {
    double gamma;  // ps^-1, enhanced emission rate F_P * gamma0
    double t1;     // ps
    double g;      // ps^-1, light-matter coupling implied by Gamma = 4 g^2 / kappa
};

inline EmitterCavityRates derive_emitter_cavity_rates(const EmitterCavityScenario& s) {
    s.validate();
    const double gamma = s.purcell * s.gamma0;
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ValidationError("derived emission rate must be positive");
    return {gamma, 1.0 / gamma, std::sqrt(gamma * s.kappa / 4.0)};
}

} // namespace qdcoh
