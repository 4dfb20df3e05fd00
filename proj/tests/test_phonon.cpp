#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qdcoh/phonon.hpp"

using namespace qdcoh;
using namespace qdcoh::phonon;

namespace {

PhononEnvironment paper_env(double kelvin) {
    return PhononEnvironment{0.0446, 1.35, 0.005293, kelvin};
}

} // namespace

TEST(SpectralDensity, Values) {
    const auto env = paper_env(4.0);
    EXPECT_EQ(spectral_density(0.0, env), 0.0);
    EXPECT_NEAR(spectral_density(1.35, env), 0.0446 * std::pow(1.35, 3) * std::exp(-1.0), 1e-15);
    EXPECT_NEAR(spectral_density(1.35, env), 0.04037, 5e-6);
    EXPECT_THROW(spectral_density(-0.1, env), ValidationError);
}

TEST(SpectralDensity, PeakAtSqrtThreeHalvesCutoff) {
    const auto env = paper_env(4.0);
    double best = 0.0, arg = 0.0;
    for (double nu = 0.0; nu < 5.0; nu += 1e-5) {
        const double j = spectral_density(nu, env);
        if (j > best) { best = j; arg = nu; }
    }
    EXPECT_NEAR(arg, std::sqrt(1.5) * 1.35, 2e-5);
}

TEST(FranckCondon, NoCouplingIsUnity) {
    auto env = paper_env(30.0);
    env.alpha = 0.0;
    EXPECT_EQ(franck_condon_factor(env), 1.0);
}

TEST(FranckCondon, ZeroTemperatureClosedForm) {
    EXPECT_NEAR(franck_condon_factor(paper_env(0.0)), std::exp(-0.0446 * 1.35 * 1.35 / 4.0), 1e-12);
    EXPECT_NEAR(franck_condon_factor(paper_env(0.0)), 0.979884, 5e-7);
}

TEST(FranckCondon, MatchesHighPrecisionValues) {
    // 30-digit reference quadrature
    EXPECT_NEAR(franck_condon_factor(paper_env(4.0)), 0.965867159052612, 1e-10);
    EXPECT_NEAR(franck_condon_factor(paper_env(30.0)), 0.810094197596483, 1e-10);
    EXPECT_NEAR(franck_condon_factor(paper_env(30.0)), oracle::franck_condon(0.0446, 1.35, 30.0), 1e-9);
    EXPECT_LT(franck_condon_factor(paper_env(30.0)), franck_condon_factor(paper_env(4.0)));
    EXPECT_LT(franck_condon_factor(paper_env(4.0)), franck_condon_factor(paper_env(0.0)));
}

TEST(FranckCondon, DecreasesWithTemperatureAndCoupling) {
    for (double alpha : {0.01, 0.0446, 0.1}) {
        for (double t = 0.0; t <= 60.0; t += 5.0) {
            PhononEnvironment env{alpha, 1.35, 0.0, t};
            const double b = franck_condon_factor(env);
            EXPECT_GT(b, 0.0);
            EXPECT_LE(b, 1.0);
            const double h = 1e-3;
            EXPECT_LT(franck_condon_factor(env.at(t + h)) - b, 0.0);
            PhononEnvironment stronger = env;
            stronger.alpha += 1e-4;
            EXPECT_LT(franck_condon_factor(stronger) - b, 0.0);
        }
    }
}

TEST(Propagator, ZeroLagIsRealAndMatchesFranckCondon) {
    for (double t : {0.0, 4.0, 15.0, 30.0}) {
        const PhononPropagator prop(paper_env(t));
        const auto p0 = prop(0.0);
        EXPECT_EQ(p0.imag(), 0.0);
        EXPECT_NEAR(p0.real(), -2.0 * std::log(prop.franck_condon()), 1e-8);
    }
    EXPECT_NEAR(PhononPropagator(paper_env(4.0))(0.0).real(), 0.0694579414691289, 1e-10);
}

TEST(Propagator, MatchesReferenceAt30K) {
    const PhononPropagator prop(paper_env(30.0));
    const double scale = prop.phi_zero();
    EXPECT_NEAR(std::abs(prop(0.5) - std::complex<double>(0.375445663241168, -0.0216946305019681)), 0.0, 1e-9 * scale);
    EXPECT_NEAR(std::abs(prop(2.0) - std::complex<double>(0.0668636570169157, -0.0157173531594189)), 0.0, 1e-9 * scale);
    EXPECT_NEAR(std::abs(prop(5.0) - std::complex<double>(4.21991296489513e-6, -2.74748626886027e-6)), 0.0, 1e-9 * scale);
    for (double tau : {0.1, 1.0, 3.0, 7.0})
        EXPECT_NEAR(std::abs(prop(tau) - oracle::phi(0.0446, 1.35, 30.0, tau)), 0.0, 1e-9);
}

TEST(Propagator, SpectralNodesMatchAdaptive) {
    for (double t : {0.3, 4.0, 30.0, 100.0}) {
        const PhononPropagator prop(paper_env(t));
        for (double tau : {0.0, 0.4, 2.5, 9.0, 30.0, 300.0})
            EXPECT_LT(std::abs(prop.evaluate_spectral(tau) - prop.evaluate(tau, {1e-12, 50})), 1e-12 * prop.phi_zero())
                << t << " K, tau " << tau;
    }
}

TEST(Propagator, NoCouplingVanishes) {
    auto env = paper_env(30.0);
    env.alpha = 0.0;
    const auto trace = phonon_propagator(default_tau_grid(), env);
    for (const auto& p : trace.phi) EXPECT_EQ(p, std::complex<double>(0.0, 0.0));
}

TEST(Propagator, DecaysAtLongLag) {
    const PhononPropagator prop(paper_env(30.0));
    EXPECT_LT(std::abs(prop(20.0)), 1e-6);
    const PhononPropagator cold(paper_env(4.0));
    EXPECT_LT(std::abs(cold(20.0)), 1e-6);
    const auto grid = default_tau_grid();
    const auto trace = phonon_propagator(grid, paper_env(30.0));
    EXPECT_LT(std::abs(trace.phi.back()), 1e-10);
    EXPECT_THROW(prop(-1.0), ValidationError);
}

TEST(Propagator, HalvingToleranceIsConverged) {
    const PhononPropagator coarse(paper_env(15.0), {1e-9});
    const PhononPropagator fine(paper_env(15.0), {1e-11});
    for (double tau : {0.0, 0.3, 1.7, 4.0, 12.0})
        EXPECT_LT(std::abs(coarse(tau) - fine(tau)), 1e-8 * coarse.phi_zero());
}

TEST(SidebandCorrelation, LimitsAndBound) {
    const auto env = paper_env(30.0);
    const auto grid = default_tau_grid();
    const auto trace = phonon_propagator(grid, env);
    const double b = franck_condon_factor(env);
    const auto g = sideband_correlation(trace, b);
    EXPECT_NEAR(std::abs(g.front() - 1.0), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(g.back() - b * b), 0.0, 1e-12);
    for (const auto& v : g) EXPECT_LE(std::abs(v), 1.0 + 1e-9);
    // Decays from 1 to B^2 within ~5 ps.
    const PhononPropagator prop(env);
    EXPECT_LT(std::abs(b * b * std::exp(prop(5.0)) - b * b), 1e-4);
    EXPECT_GT(std::abs(b * b * std::exp(prop(0.5)) - b * b), 0.1);
}

TEST(PolaronRates, NoCouplingAllZero) {
    auto env = paper_env(4.0);
    env.alpha = 0.0;
    const auto r = polaron_rates(env, 7.764e-3);
    EXPECT_EQ(r.gamma0_x, 0.0);
    EXPECT_EQ(r.gammac_y, 0.0);
    EXPECT_EQ(r.gammas_y, 0.0);
}

TEST(PolaronRates, ZeroSplittingHasNoSineRate) {
    EXPECT_EQ(polaron_rates(paper_env(4.0), 0.0).gammas_y, 0.0);
}

TEST(PolaronRates, MatchFineGridOracle) {
    const double eta = 7.764e-3;
    const auto env = paper_env(4.0);
    const auto r = polaron_rates(env, eta);
    const double b = oracle::franck_condon(0.0446, 1.35, 4.0);
    // Fine uniform tau grid; phi from the fixed-grid oracle at every node.
    const int n = 8000;
    const double h = 50.0 / n;
    std::vector<std::complex<double>> lxx(n + 1), lyy(n + 1);
    for (int i = 0; i <= n; ++i) {
        const auto p = oracle::phi(0.0446, 1.35, 4.0, i * h, 3000);
        lxx[i] = b * b * (std::exp(p) + std::exp(-p) - 2.0);
        lyy[i] = b * b * (std::exp(p) - std::exp(-p));
    }
    auto integrate = [&](auto&& weight, const std::vector<std::complex<double>>& y) {
        std::complex<double> acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double c = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += c * weight(i * h) * y[i];
        }
        return (acc * (h / 3.0)).real();
    };
    const double g0 = integrate([](double) { return 1.0; }, lxx);
    const double gc = integrate([&](double t) { return std::cos(eta * t); }, lyy);
    const double gs = integrate([&](double t) { return std::sin(eta * t); }, lyy);
    EXPECT_NEAR(r.gamma0_x, g0, 1e-6 * std::abs(g0));
    EXPECT_NEAR(r.gammac_y, gc, 1e-6 * std::abs(gc));
    EXPECT_NEAR(r.gammas_y, gs, 1e-6 * std::abs(gs));
    EXPECT_NE(r.gamma0_x, 0.0);
}

TEST(PolaronRates, TruncationFailureIsReported) {
    // At T = 0 the real part of phi only decays as 1/tau^2.
    EXPECT_THROW(polaron_rates(paper_env(0.0), 0.01), NumericalError);
}

TEST(VirtualDephasing, VanishesAtZeroTemperature) {
    EXPECT_EQ(virtual_dephasing_rate(paper_env(0.0)), 0.0);
    EXPECT_LT(virtual_dephasing_rate(paper_env(0.5)), 1e-7 * virtual_dephasing_rate(paper_env(4.0)));
}

TEST(VirtualDephasing, MonotoneInTemperature) {
    const double g4 = virtual_dephasing_rate(paper_env(4.0));
    const double g15 = virtual_dephasing_rate(paper_env(15.0));
    const double g30 = virtual_dephasing_rate(paper_env(30.0));
    EXPECT_GT(g4, 0.0);
    EXPECT_GT(g15, g4);
    EXPECT_GT(g30, g15);
    double prev = 0.0;
    for (double t = 1.0; t <= 60.0; t += 1.0) {
        const double g = virtual_dephasing_rate(paper_env(t));
        EXPECT_GT(g, prev);
        prev = g;
    }
}

TEST(VirtualDephasing, MatchesReferenceQuadrature) {
    // 30-digit reference with the printed prefactor mu = 0.005293 ps^2
    EXPECT_NEAR(virtual_dephasing_rate(paper_env(25.0)), 0.061930965902881, 1e-9 * 0.0619);
    EXPECT_NEAR(virtual_dephasing_rate(paper_env(4.0)), 0.000296974518548347, 1e-9 * 2.97e-4);
    EXPECT_NEAR(virtual_dephasing_rate(paper_env(30.0)), oracle::dephasing(0.0446, 1.35, 0.005293, 30.0),
                1e-9 * 0.0909);
    // Orientation: h * gamma at 25 K is ~256 ueV with this prefactor, not the
    // 11.8 ueV quoted alongside it; the prefactor is re-fitted for simulations.
    EXPECT_GT(units::rate_to_h_ueV(virtual_dephasing_rate(paper_env(25.0))), 11.8);
}

TEST(VirtualDephasing, LinearInPrefactor) {
    auto env = paper_env(20.0);
    const double one = virtual_dephasing_rate(env);
    env.mu *= 2.0;
    EXPECT_EQ(virtual_dephasing_rate(env), 2.0 * one);
}

TEST(Quadrature, HalvingToleranceIsConverged) {
    for (double t : {4.0, 30.0}) {
        const auto env = paper_env(t);
        const double b1 = franck_condon_factor(env, {1e-9});
        const double b2 = franck_condon_factor(env, {5e-10});
        EXPECT_LT(std::abs(b1 - b2), 1e-8 * b1);
        const double g1 = virtual_dephasing_rate(env, {1e-9});
        const double g2 = virtual_dephasing_rate(env, {5e-10});
        EXPECT_LT(std::abs(g1 - g2), 1e-8 * g1);
    }
}

TEST(TauGrid, GeometricWithZero) {
    const auto g = default_tau_grid();
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_DOUBLE_EQ(g[1], 1e-3);
    EXPECT_DOUBLE_EQ(g.back(), 1000.0);
    EXPECT_EQ(g.size(), 2u + 360u);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}
