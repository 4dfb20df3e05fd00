// fixtures.hpp: The sample device used across the tests: bath parameters from the fit to
// the measured dephasing data and the cavity/emitter values of the shipped scenario file.

#pragma once

#include "qdcoh/scenario.hpp"
#include "qdcoh/units.hpp"

namespace fixture {

inline constexpr double kMu = 2.585e-4;          // ps^2
inline constexpr double kOffset = 6.19e-4;       // ps^-1, constant 1/T2* offset

inline qdcoh::PhononEnvironment bath(double kelvin) {
    return qdcoh::PhononEnvironment{0.0446, 1.35, kMu, kelvin};
}

inline qdcoh::EmitterCavityScenario device() {
    qdcoh::EmitterCavityScenario s;
    s.nonthermal_dephasing = kOffset;
    return s;
}

} // namespace fixture
