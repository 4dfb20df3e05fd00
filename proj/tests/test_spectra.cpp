#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "qdcoh/emission_spectra.hpp"
#include "qdcoh/model.hpp"

using namespace qdcoh;
using namespace qdcoh::spectra;
using cd = std::complex<double>;

namespace {

constexpr double pi = std::numbers::pi;

// Channels holding only an exponentially decaying incoherent part.
EmissionChannels exponential_channels(double t2, double tau_end) {
    EmissionChannels c;
    c.tau = phonon::default_tau_grid(tau_end, 240);
    for (double t : c.tau) {
        c.g1_inc.push_back(std::exp(-t / t2));
        c.g1_psb.push_back(0.0);
    }
    c.g1_opt0 = 1.0;
    c.nu_c = 1.35;
    c.zpl_halfwidth = 1.0 / t2;
    return c;
}

struct Point {
    ModelRun run;
    phonon::PhononPropagator prop;
    dynamics::OpticalCorrelation optical;
};

Point simulate(double kelvin, EmitterCavityScenario s = fixture::device(), ModelOptions o = {}) {
    auto run = run_model(fixture::bath(kelvin), s, o);
    phonon::PhononPropagator prop(fixture::bath(kelvin));
    dynamics::OpticalCorrelation optical(run.point.generator, run.point.b);
    return {std::move(run), std::move(prop), std::move(optical)};
}

} // namespace

TEST(CavityFilter, LorentzianShape) {
    auto s = fixture::device();
    s.cavity_detuning = 0.2;
    const double peak = cavity_filter(0.2, s);
    EXPECT_NEAR(peak, 4.0 / s.kappa, 1e-14);
    EXPECT_NEAR(cavity_filter(0.2 + 0.5 * s.kappa, s) / peak, 0.5, 1e-14);
    EXPECT_NEAR(cavity_filter(0.2 - 0.5 * s.kappa, s) / peak, 0.5, 1e-14);
    EXPECT_LT(cavity_filter(0.0, s), peak);
}

TEST(CavityFilter, HalfWidthForNarrowLinewidth) {
    auto s = fixture::device();
    s.kappa = units::energy_to_rate(1.255);
    EXPECT_NEAR(0.5 * s.kappa, 0.9534, 1e-4);
    EXPECT_NEAR(cavity_filter(0.5 * s.kappa, s) / cavity_filter(0.0, s), 0.5, 1e-14);
}

TEST(CavityFilter, FlatLimits) {
    auto s = fixture::device();
    s.kappa = 1e8;
    EXPECT_NEAR(cavity_filter(10.0, s) / cavity_filter(0.0, s), 1.0, 1e-12);
    s.cavity_filter = false;
    EXPECT_EQ(cavity_filter(3.0, s), 1.0);
}

TEST(Sideband, IdentitiesAtZeroLag) {
    const auto p = simulate(30.0, fixture::device(), {.per_decade = 60});
    const auto& c = p.run.channels;
    const double b2 = p.run.point.b * p.run.point.b;
    // phi(0) and B come from independent quadratures that agree to ~1e-10.
    EXPECT_NEAR(c.g1_psb.front().real(), (1.0 / b2 - 1.0) * c.g1_opt0, 1e-9 * c.g1_opt0);
    EXPECT_NEAR(c.g1_total0(), c.g1_opt0 / b2, 1e-9 * c.g1_opt0);
    EXPECT_LT(std::abs(c.g1_psb.back()), 1e-14);
}

TEST(Sideband, LiteralFormIsScaledByFranckCondon) {
    const std::vector<cd> opt{0.8, cd(0.5, 0.1)};
    const std::vector<cd> phi{0.3, cd(0.1, -0.02)};
    const auto a = sideband_g1(opt, phi, 0.9);
    const auto b = sideband_g1(opt, phi, 0.9, SidebandForm::literal);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(b[i] - 0.81 * a[i]), 0.0, 1e-15);
    EXPECT_THROW(sideband_g1(opt, std::vector<cd>{0.1}, 0.9), ValidationError);
}

TEST(Sideband, VanishesWithoutCoupling) {
    auto env = fixture::bath(30.0);
    env.alpha = 0.0;
    const auto run = run_model(env, fixture::device());
    for (const auto& v : run.channels.g1_psb) EXPECT_EQ(v, cd(0.0, 0.0));
    EXPECT_NEAR(run.fractions.f_zpl, 1.0, 1e-12);
}

TEST(Spectrum, ExponentialGivesLorentzian) {
    const double t2 = 40.0;
    const auto c = exponential_channels(t2, 40.0 * t2);
    auto s = fixture::device();
    const std::vector<double> omega{-0.2, -0.05, -0.025, 0.0, 0.01, 0.025, 0.1, 1.0};
    const auto spec = compute_spectrum(c, s, omega, false);
    for (std::size_t k = 0; k < omega.size(); ++k) {
        const double exact = t2 / (1.0 + omega[k] * omega[k] * t2 * t2);
        EXPECT_NEAR(spec.values[k], exact, 1e-4 * t2) << "omega " << omega[k];
    }
    // HWHM 1/T2.
    EXPECT_NEAR(spec.values[5] / spec.values[3], 0.5, 1e-4);
    EXPECT_EQ(spec.coherent_weight, 0.0);
}

TEST(Spectrum, ParsevalForExponential) {
    const double t2 = 40.0;
    const auto c = exponential_channels(t2, 40.0 * t2);
    auto s = fixture::device();
    s.cavity_filter = false;
    const auto f = filtered_fractions(c, s);
    EXPECT_NEAR(f.powers.p_inc, pi, 1e-4 * pi);
}

TEST(Spectrum, AliasingIsRefused) {
    const auto c = exponential_channels(40.0, 200.0);
    EXPECT_THROW(compute_spectrum(c, fixture::device(), std::vector<double>{0.0}, false), ValidationError);
}

TEST(Spectrum, CoherentPartIsAnalyticDelta) {
    const auto p = simulate(4.0, fixture::device(), {.per_decade = 60});
    const auto s = fixture::device();
    const std::vector<double> omega{0.0};
    const auto raw = compute_spectrum(p.run.channels, s, omega, false);
    const auto filt = compute_spectrum(p.run.channels, s, omega, true);
    EXPECT_NEAR(raw.coherent_weight, pi * p.run.channels.g1_coh.real(), 1e-15);
    EXPECT_NEAR(filt.coherent_weight, raw.coherent_weight * 4.0 / s.kappa, 1e-15);
    EXPECT_TRUE(filt.filtered);
}

TEST(Spectrum, SidebandAsymmetryShrinksWithTemperature) {
    // Phonon emission lies on the red side (omega < 0) with this transform convention.
    auto asym = [](double kelvin) {
        const auto p = simulate(kelvin, fixture::device(), {.per_decade = 60});
        std::vector<double> omega;
        for (double w = 0.05; w <= 8.0; w += 0.01) omega.push_back(w);
        const auto c = p.run.channels;
        std::vector<double> neg(omega.rbegin(), omega.rend());
        for (auto& w : neg) w = -w;
        const auto plus = compute_spectrum(c, fixture::device(), omega, false);
        const auto minus = compute_spectrum(c, fixture::device(), neg, false);
        double wp = 0.0, wm = 0.0;
        for (std::size_t k = 0; k < omega.size(); ++k) {
            wp += plus.psb[k];
            wm += minus.psb[k];
        }
        return wm / wp;
    };
    const double cold = asym(4.0);
    const double hot = asym(30.0);
    EXPECT_GT(cold, 1.5);
    EXPECT_GT(hot, 1.0);
    EXPECT_LT(hot, cold);
    EXPECT_LT(hot, 1.5);
}

TEST(Spectrum, SmallNegativesClamped) {
    const auto p = simulate(30.0, fixture::device(), {.per_decade = 60});
    const auto s = fixture::device();
    const auto omega = default_omega_grid(p.run.channels, s);
    const auto spec = compute_spectrum(p.run.channels, s, omega, true);
    EXPECT_EQ(spec.negative_excursions, 0u);
    for (double v : spec.values) EXPECT_GE(v, 0.0);
}

TEST(Fractions, PowersAreConsistent) {
    const auto p = simulate(15.0, fixture::device(), {.per_decade = 60});
    const auto& w = p.run.fractions.powers;
    EXPECT_NEAR(w.p_opt, w.p_coh + w.p_inc, 1e-15);
    EXPECT_NEAR(w.p_tot, w.p_opt + w.p_psb, 1e-15);
    for (double v : {w.p_coh, w.p_inc, w.p_psb}) EXPECT_GE(v, 0.0);
}

TEST(Fractions, InvariantUnderCouplingScale) {
    const auto p = simulate(30.0);
    const auto s = fixture::device();
    const auto omega = default_omega_grid(p.run.channels, s);
    const auto g1 = filtered_fractions(p.run.channels, s, omega, 1.0);
    const auto g2 = filtered_fractions(p.run.channels, s, omega, 4.0);
    EXPECT_NEAR(g1.f_zpl, g2.f_zpl, 1e-14);
    EXPECT_NEAR(g1.f_coh, g2.f_coh, 1e-14);
    EXPECT_NEAR(g2.powers.p_tot, 4.0 * g1.powers.p_tot, 1e-14);
}

TEST(Fractions, FrequencyAndTimeRoutesAgree) {
    for (double t : {4.0, 30.0}) {
        for (bool filter : {true, false}) {
            auto s = fixture::device();
            s.cavity_filter = filter;
            const auto p = simulate(t, s);
            const auto td = time_domain_fractions(p.optical, p.prop, s);
            EXPECT_NEAR(p.run.fractions.f_zpl, td.f_zpl, 1e-4) << t << " K, filter " << filter;
            EXPECT_NEAR(p.run.fractions.f_coh, td.f_coh, 1e-4) << t << " K, filter " << filter;
        }
    }
}

TEST(Fractions, UnfilteredEqualsFranckCondon) {
    for (double t : {4.0, 12.0, 20.0, 30.0}) {
        auto s = fixture::device();
        s.cavity_filter = false;
        const auto p = simulate(t, s);
        const double b2 = p.run.point.b * p.run.point.b;
        EXPECT_NEAR(p.run.fractions.f_zpl, b2, 1e-4) << t << " K";
        EXPECT_NEAR(time_domain_fractions(p.optical, p.prop, s).f_zpl, b2, 1e-12) << t << " K";
    }
}

TEST(Fractions, FilterRemovesSidebandPreferentially) {
    for (double t = 4.0; t <= 30.0; t += 2.0) {
        const auto p = simulate(t, fixture::device(), {.per_decade = 60});
        EXPECT_GE(p.run.fractions.f_zpl, p.run.point.b * p.run.point.b) << t << " K";
    }
}

TEST(Fractions, NarrowerCavityRaisesZplFraction) {
    auto narrow = fixture::device();
    narrow.kappa /= 5.0;
    const double base = simulate(30.0).run.fractions.f_zpl;
    const double better = simulate(30.0, narrow).run.fractions.f_zpl;
    EXPECT_GT(better, base);
    EXPECT_GT(better - base, 0.1);
}

TEST(Fractions, SampleDeviceZplFraction) {
    EXPECT_NEAR(simulate(4.0).run.fractions.f_zpl, 0.94, 0.03);
    EXPECT_NEAR(simulate(30.0).run.fractions.f_zpl, 0.71, 0.03);
}

TEST(Fractions, CoverageIsChecked) {
    const auto p = simulate(4.0, fixture::device(), {.per_decade = 60});
    const std::vector<double> narrow{-1.0, 0.0, 1.0};
    EXPECT_THROW(filtered_fractions(p.run.channels, fixture::device(), narrow), ValidationError);
}

TEST(FilteredCorrelation, ZeroLagIsTotalPower) {
    const auto p = simulate(30.0);
    const auto s = fixture::device();
    const FilteredCorrelation fc(p.optical, p.prop, s);
    const auto td = time_domain_fractions(p.optical, p.prop, s);
    EXPECT_NEAR(pi * fc(0.0).real(), td.powers.p_tot, 1e-7 * td.powers.p_tot);
    EXPECT_NEAR(fc(0.0).imag(), 0.0, 1e-9 * td.powers.p_tot);
    // Long-lag plateau: coherent part passed through the filter peak.
    EXPECT_NEAR(std::abs(fc(900.0)), std::abs(p.optical.coherent()) * 4.0 / s.kappa, 1e-6 * td.powers.p_tot);
}

TEST(FilteredCorrelation, NoCavityIsUnfilteredTotal) {
    auto s = fixture::device();
    s.cavity_filter = false;
    const auto p = simulate(30.0, s);
    const FilteredCorrelation fc(p.optical, p.prop, s);
    for (double t : {0.0, 0.7, 3.0, 50.0}) {
        const cd expect = p.optical(t) * std::exp(p.prop(t));
        EXPECT_NEAR(std::abs(fc(t) - expect), 0.0, 1e-9 * std::abs(expect)) << t;
    }
}

TEST(PhiTable, InterpolatesPropagator) {
    const phonon::PhononPropagator prop(fixture::bath(30.0));
    const PhiTable table(prop);
    for (double t : {0.0, 0.013, 0.5, 1.237, 4.0, 11.1})
        EXPECT_NEAR(std::abs(table(t) - prop(t)), 0.0, 1e-8 * prop.phi_zero()) << t;
    EXPECT_EQ(table(100.0), cd(0.0, 0.0));
}

TEST(Visibility, Limits) {
    const std::vector<cd> coherent(5, cd(0.3, 0.0));
    for (double v : visibility_trace(coherent, 0.0)) EXPECT_DOUBLE_EQ(v, 1.0);
    const std::vector<cd> decaying{2.0, 1.0, 0.5};
    const auto v = visibility_trace(decaying, 0.05);
    EXPECT_DOUBLE_EQ(v.front(), 0.95);
    EXPECT_DOUBLE_EQ(v.back(), 0.95 * 0.25);
    EXPECT_THROW(visibility_trace(decaying, 1.0), ValidationError);
}
