// model.hpp: One (temperature, device) point of the full model: phonon quantities,
// generator, optical correlation, emission channels and filtered fractions.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qdcoh/emission_spectra.hpp"
#include "qdcoh/phonon.hpp"
#include "qdcoh/polaron_dynamics.hpp"
#include "qdcoh/scenario.hpp"

namespace qdcoh {

struct ModelOptions {
    dynamics::GeneratorOptions generator{};
    spectra::SidebandForm sideband{spectra::SidebandForm::consistent};
    quad::Tolerance tolerance{};
    int per_decade{240};  // tau grid density; 60 is the fast profile
};

struct ModelPoint {
    PhononEnvironment env;
    EmitterCavityScenario scenario;
    double b{1.0};
    phonon::PolaronRates rates{};
    double virtual_dephasing{0.0};  // ps^-1, thermal 1/T2*
    double pure_dephasing{0.0};     // ps^-1, thermal + constant offset
    double t1{0.0};                 // ps
    double t2{0.0};                 // ps, 1/T2 = 1/(2 T1) + 1/T2*
    dynamics::Generator generator;

    double t2_over_2t1() const { return t2 / (2.0 * t1); }
    double lindblad_dephasing() const { return 2.0 * pure_dephasing; }
};

inline ModelPoint build_model(const PhononEnvironment& env, const EmitterCavityScenario& scenario,
                              const ModelOptions& opts = {}) {
    env.validate();
    scenario.validate();
    ModelPoint m;
    m.env = env;
    m.scenario = scenario;
    const phonon::PhononPropagator prop(env, opts.tolerance);
    m.b = prop.franck_condon();
    m.rates = env.alpha > 0.0 ? phonon::polaron_rates(prop, scenario.rabi, opts.tolerance) : phonon::PolaronRates{};
    m.virtual_dephasing = phonon::virtual_dephasing_rate(env, opts.tolerance);
    m.pure_dephasing = m.virtual_dephasing + scenario.nonthermal_dephasing;
    m.t1 = derive_emitter_cavity_rates(scenario).t1;
    m.t2 = 1.0 / (0.5 / m.t1 + m.pure_dephasing);
    m.generator = dynamics::build_generator(scenario, m.b, m.rates, m.lindblad_dephasing(), opts.generator);
    return m;
}

// Long enough that every decaying mode of the generator has fallen by e^-18.
inline double required_horizon(const dynamics::Generator& gen) {
    const dynamics::Propagator p(gen.total());
    double slowest = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double r = -p.eigenvalues()(k).real();
        if (r > 1e-12) slowest = slowest == 0.0 ? r : std::min(slowest, r);
    }
    return slowest > 0.0 ? std::max(1000.0, 18.0 / slowest) : 1000.0;
}

inline std::vector<double> model_tau_grid(const ModelPoint& m, int per_decade = 60) {
    return phonon::default_tau_grid(required_horizon(m.generator), per_decade);
}

struct ModelRun {
    ModelPoint point;
    dynamics::CorrelationTrace optical;
    phonon::PhononPropagatorTrace phi;
    spectra::EmissionChannels channels;
    spectra::FilteredFractions fractions;
};

inline ModelRun run_model(const PhononEnvironment& env, const EmitterCavityScenario& scenario,
                          const ModelOptions& opts = {}) {
    ModelRun r;
    r.point = build_model(env, scenario, opts);
    const auto grid = model_tau_grid(r.point, opts.per_decade);
    r.optical = dynamics::g1_optical(r.point.generator, grid, r.point.b);
    r.phi = phonon::phonon_propagator(grid, env, opts.tolerance);
    r.channels = spectra::make_channels(r.optical, r.phi, env.nu_c, 0.5 / r.point.t1 + r.point.pure_dephasing,
                                        opts.sideband);
    r.fractions = spectra::filtered_fractions(r.channels, scenario);
    return r;
}

// Cavity-filtered total g1 of a model point sampled at `taus`.
inline std::vector<spectra::cplx> filtered_g1(const ModelPoint& m, std::span<const double> taus,
                                              const ModelOptions& opts = {}) {
    const phonon::PhononPropagator prop(m.env, opts.tolerance);
    const spectra::FilteredCorrelation fc(dynamics::OpticalCorrelation(m.generator, m.b), prop, m.scenario,
                                          opts.sideband);
    std::vector<spectra::cplx> out;
    out.reserve(taus.size());
    for (double t : taus) out.push_back(fc(t));
    return out;
}

} // namespace qdcoh
