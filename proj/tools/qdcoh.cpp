// Command-line front end for simulation, sweeps, fits and figure-data export.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdcoh/cli_io.hpp"
#include "qdcoh/coherence.hpp"
#include "qdcoh/fitting.hpp"
#include "qdcoh/model.hpp"

namespace fs = std::filesystem;
using namespace qdcoh;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Globals {
    std::string scenario = std::string(QDCOH_DATA_DIR) + "/default_scenario.ini";
    std::string out;
    std::string profile = "exact";
    unsigned threads = io::default_threads();
};

fs::path output_dir(const Globals& g) {
    if (!g.out.empty()) return g.out;
    if (const char* env = std::getenv("QDCOH_OUT_DIR"); env && *env) return env;
    return "qdcoh_out";
}

std::string kelvin_label(double t) { return io::fmt(t, 6); }

void print_fit(const std::string& title, const fit::FitResult& r) {
    std::cout << title << "\n";
    for (std::size_t i = 0; i < r.values.size(); ++i)
        std::cout << "  " << r.names[i] << " = " << io::fmt(r.values[i], 8) << " +- " << io::fmt(r.std_errors[i], 3)
                  << (r.units[i].empty() ? "" : " " + r.units[i]) << "\n";
    std::cout << "  rss = " << io::fmt(r.rss, 6) << ", points = " << r.points << ", iterations = " << r.iterations
              << ", converged = " << (r.converged ? "yes" : "no") << "\n";
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

void write_fit(const fs::path& path, const fit::FitResult& r) {
    std::ostringstream os;
    os << "parameter,value,std_error,unit\n";
    for (std::size_t i = 0; i < r.values.size(); ++i)
        os << r.names[i] << "," << io::fmt(r.values[i], 17) << "," << io::fmt(r.std_errors[i], 17) << "," << r.units[i]
           << "\n";
    io::write_text(path, os.str());
    std::cout << "wrote " << path.string() << "\n";
}

std::vector<double> parse_temps(const std::string& text) {
    std::vector<double> out;
    for (const auto& t : io::split(text, ',')) {
        const double k = io::parse_number(t, "--temps");
        if (!(k >= 0.0)) throw ValidationError("--temps: temperatures must be >= 0");
        out.push_back(k);
    }
    return out;
}

ModelRun run_point(const io::ScenarioSet& set, double kelvin, io::Variant v, const ModelOptions& opts) {
    PhononEnvironment env = set.env;
    env.temperature = kelvin;
    return run_model(env, io::apply_variant(set.device, v), opts);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photon coherence of a cavity-coupled quantum dot with a polaron master equation"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--scenario", g.scenario, "Scenario file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory (default $QDCOH_OUT_DIR or ./qdcoh_out)");
    app.add_option("--tolerance-profile", g.profile, "Numerical profile")->check(CLI::IsMember({"fast", "exact"}));
    app.add_option("--threads", g.threads, "Worker threads for sweeps")->check(CLI::Range(1u, 256u));
    app.set_version_flag("--version", QDCOH_VERSION);

    // simulate g1 | spectrum
    auto* sim = app.add_subcommand("simulate", "Simulate one temperature point")->fallthrough();
    sim->require_subcommand(1);
    double sim_temp = 4.0;
    std::string sim_variant = "as-measured";
    bool sim_unfiltered = false;
    auto* sim_g1 = sim->add_subcommand("g1", "Filtered first-order correlation and fringe visibility")->fallthrough();
    auto* sim_spec = sim->add_subcommand("spectrum", "Emission spectrum (ZPL and sideband)")->fallthrough();
    for (auto* s : {sim_g1, sim_spec}) {
        s->add_option("--temp", sim_temp, "Temperature in K")->required()->check(CLI::NonNegativeNumber);
        s->add_option("--variant", sim_variant, "Device variant");
    }
    sim_spec->add_flag("--unfiltered", sim_unfiltered, "Spectrum before the cavity filter");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Temperature sweep to a summary CSV")->fallthrough();
    std::vector<std::string> sweep_variants;
    std::string sweep_temps;
    sweep->add_option("--variant", sweep_variants, "Variant(s); default from the scenario file");
    sweep->add_option("--temps", sweep_temps, "Comma-separated temperatures in K");

    // fit <kind>
    auto* fitc = app.add_subcommand("fit", "Parameter extraction from CSV data")->fallthrough();
    fitc->require_subcommand(1);
    std::string fit_data;
    double fit_temp = 30.0, fit_eps = -1.0, fit_redshift = 0.0, fit_ref_bias = 0.0, fit_target_ueV = 5.11;
    bool have_redshift = false;
    auto* fit_phonon = fitc->add_subcommand("phonon", "alpha and nu_c from short-time v(tau): tau_ps,v[,sigma]");
    auto* fit_deph = fitc->add_subcommand("dephasing", "mu and offset from temperature_K,rate_per_ps[,sigma]");
    auto* fit_red = fitc->add_subcommand("redshift", "S and E_ph from temperature_K,shift_meV[,sigma_meV]");
    auto* fit_stark = fitc->add_subcommand("stark", "Quadratic Stark shift from bias_V,energy_meV");
    auto* fit_rabi = fitc->add_subcommand("rabi", "Rabi calibration from sqrt_power,splitting_ueV");
    for (auto* s : {fit_phonon, fit_deph, fit_red, fit_stark, fit_rabi}) {
        s->fallthrough();
        s->add_option("--data", fit_data, "Input CSV")->required()->check(CLI::ExistingFile);
    }
    fit_phonon->add_option("--temp", fit_temp, "Temperature of the trace in K")->check(CLI::PositiveNumber);
    fit_phonon->add_option("--epsilon", fit_eps, "Interferometer loss (default from the scenario)");
    fit_stark->add_option("--redshift-meV", fit_redshift, "Thermal shift to compensate (negative = red)")
        ->each([&](const std::string&) { have_redshift = true; });
    fit_stark->add_option("--reference-bias", fit_ref_bias, "Operating bias in V at base temperature");
    fit_rabi->add_option("--target-ueV", fit_target_ueV, "Target hbar Omega_R in ueV");

    // analyze interferogram
    auto* analyze = app.add_subcommand("analyze", "Analysis of measured data")->fallthrough();
    analyze->require_subcommand(1);
    std::string an_data;
    double an_t2 = 0.0;
    auto* an_int = analyze->add_subcommand("interferogram", "Fringe contrast per delay: tau_ps,phase_rad,intensity")
                       ->fallthrough();
    an_int->add_option("--data", an_data, "Input CSV")->required()->check(CLI::ExistingFile);
    an_int->add_option("--t2", an_t2, "T2 in ps for the decay-corrected plateau estimate");

    // report
    auto* report = app.add_subcommand("report", "Full figure-data set for the scenario")->fallthrough();
    std::string report_temps;
    report->add_option("--temps", report_temps, "Comma-separated temperatures in K");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        const fs::path out = output_dir(g);
        const auto opts = io::tolerance_profile(g.profile);

        if (sim->parsed()) {
            const auto set = io::parse_scenario(g.scenario);
            const auto v = io::parse_variant(sim_variant);
            const auto run = run_point(set, sim_temp, v, opts);
            const std::string tag = "T" + kelvin_label(sim_temp) + "_" + io::to_string(v);
            if (sim_g1->parsed()) {
                const auto g1 = io::simulate_g1(run, opts);
                const auto path = out / ("g1_" + tag + ".csv");
                io::write_text(path, io::g1_csv(g1));
                std::cout << "wrote " << path.string() << "\n";
            } else {
                const bool filtered = !sim_unfiltered && run.point.scenario.cavity_filter;
                const auto omega = spectra::default_omega_grid(run.channels, run.point.scenario);
                const auto s = spectra::compute_spectrum(run.channels, run.point.scenario, omega, filtered);
                const auto path = out / ("spectrum_" + tag + ".csv");
                io::write_text(path, io::spectrum_csv(s));
                std::cout << "wrote " << path.string() << "\n";
            }
            std::cout << "B2 = " << io::fmt(run.point.b * run.point.b, 6) << ", F_ZPL = " << io::fmt(run.fractions.f_zpl, 6)
                      << ", F_coh = " << io::fmt(run.fractions.f_coh, 6)
                      << ", T2/2T1 = " << io::fmt(run.point.t2_over_2t1(), 6) << "\n";
        } else if (sweep->parsed()) {
            const auto set = io::parse_scenario(g.scenario);
            std::vector<io::Variant> variants;
            for (const auto& v : sweep_variants) variants.push_back(io::parse_variant(v));
            if (variants.empty()) variants = set.variants;
            const auto temps = sweep_temps.empty() ? set.temperatures : parse_temps(sweep_temps);
            const auto result = io::run_temperature_sweep(set, temps, variants, g.profile, g.threads);
            io::write_text(out / "sweep_summary.csv", io::summary_csv(result.rows));
            io::write_text(out / "provenance.txt", io::provenance(set, result));
            std::cout << io::summary_csv(result.rows) << "wrote " << (out / "sweep_summary.csv").string() << "\n";
        } else if (fitc->parsed()) {
            const auto t = io::read_csv(fit_data);
            auto sigma = [&](const std::string& name) {
                return t.has(name) ? t.column(name) : std::vector<double>{};
            };
            if (fit_phonon->parsed()) {
                double eps = fit_eps;
                if (eps < 0.0) eps = io::parse_scenario(g.scenario).device.epsilon;
                const auto f = fit::fit_phonon_params(t.column("tau_ps"), t.column("v"), fit_temp, eps, sigma("sigma"));
                print_fit("phonon parameters at " + io::fmt(fit_temp) + " K", f.fit);
                write_fit(out / "fit_phonon.csv", f.fit);
            } else if (fit_deph->parsed()) {
                const auto set = io::parse_scenario(g.scenario);
                const auto f = fit::fit_dephasing_prefactor(t.column("temperature_K"), t.column("rate_per_ps"), set.env,
                                                            sigma("sigma"));
                print_fit("virtual dephasing prefactor", f.fit);
                std::cout << "  offset = " << io::fmt(units::rate_to_ueV(f.offset), 4) << " ueV (hbar), "
                          << io::fmt(units::rate_to_h_ueV(f.offset), 4) << " ueV (h)\n";
                write_fit(out / "fit_dephasing.csv", f.fit);
            } else if (fit_red->parsed()) {
                const auto f = fit::fit_redshift(t.column("temperature_K"), t.column("shift_meV"), sigma("sigma_meV"));
                print_fit("thermal redshift", f.fit);
                write_fit(out / "fit_redshift.csv", f.fit);
            } else if (fit_stark->parsed()) {
                const auto f = fit::fit_stark_shift(t.column("bias_V"), t.column("energy_meV"));
                print_fit("quadratic Stark shift", f.fit);
                std::cout << "  tuning range = " << io::fmt(f.tuning_range(), 6) << " meV over [" << io::fmt(f.bias_min)
                          << ", " << io::fmt(f.bias_max) << "] V\n";
                if (have_redshift) {
                    const auto p = fit::plan_compensation(f, fit_redshift, fit_ref_bias);
                    std::cout << "  compensation: bias = " << io::fmt(p.bias, 8) << " V, shift = " << io::fmt(p.shift, 8)
                              << " meV\n";
                    if (!p.warning.empty()) std::cerr << "warning: " << p.warning << "\n";
                }
                write_fit(out / "fit_stark.csv", f.fit);
            } else if (fit_rabi->parsed()) {
                std::vector<double> omega;
                for (double s : t.column("splitting_ueV")) omega.push_back(units::ueV_to_rate(s));
                const auto c = fit::calibrate_rabi(t.column("sqrt_power"), omega);
                print_fit("Rabi calibration (Omega_R = slope * sqrt(P))", c.fit);
                if (c.poor_fit) std::cerr << "warning: " << c.warning << "\n";
                const double target = units::ueV_to_rate(fit_target_ueV);
                std::cout << "  power for hbar Omega_R = " << io::fmt(fit_target_ueV) << " ueV: "
                          << io::fmt(c.power_for(target), 8) << " (power units of the data)\n";
                write_fit(out / "fit_rabi.csv", c.fit);
            }
        } else if (analyze->parsed()) {
            const auto t = io::read_csv(an_data);
            const auto pts =
                coherence::analyze_interferogram(t.column("tau_ps"), t.column("phase_rad"), t.column("intensity"));
            std::ostringstream os;
            os << "tau_ps,v,std_error\n";
            std::vector<double> tau, v;
            for (const auto& p : pts) {
                os << io::fmt(p.tau) << "," << io::fmt(p.visibility) << "," << io::fmt(p.standard_error) << "\n";
                tau.push_back(p.tau);
                v.push_back(p.visibility);
            }
            const auto path = out / "interferogram_contrast.csv";
            io::write_text(path, os.str());
            std::cout << "wrote " << path.string() << " (" << pts.size() << " delays)\n";
            const auto plateau = coherence::plateau_zpl_fraction(
                tau, v, {}, an_t2 > 0.0 ? std::optional<double>(an_t2) : std::nullopt);
            std::cout << "A_psb = " << io::fmt(plateau.a_psb, 4) << ", A_inc = " << io::fmt(plateau.a_inc, 4)
                      << ", A_coh = " << io::fmt(plateau.a_coh, 4) << ", F_ZPL = " << io::fmt(plateau.f_zpl, 4) << "\n";
        } else if (report->parsed()) {
            const auto set = io::parse_scenario(g.scenario);
            const auto temps = report_temps.empty() ? set.temperatures : parse_temps(report_temps);
            const auto result = io::run_temperature_sweep(set, temps, io::all_variants(), g.profile, g.threads);
            io::write_text(out / "sweep_summary.csv", io::summary_csv(result.rows));
            io::write_text(out / "fig4_comparison.csv", io::comparison_csv(result.rows));
            io::write_text(out / "provenance.txt", io::provenance(set, result));

            const double base = temps.empty() ? 4.0 : *std::min_element(temps.begin(), temps.end());
            const auto base_run = run_point(set, base, io::Variant::as_measured, opts);
            const auto omega = spectra::default_omega_grid(base_run.channels, base_run.point.scenario);
            const auto spec = spectra::compute_spectrum(base_run.channels, base_run.point.scenario, omega, false);
            io::write_text(out / "fig1b_spectrum.csv", io::spectrum_csv(spec));
            for (double k : temps) {
                const auto run = run_point(set, k, io::Variant::as_measured, opts);
                io::write_text(out / ("fig3_g1_T" + kelvin_label(k) + ".csv"), io::g1_csv(io::simulate_g1(run, opts)));
            }
            std::cout << io::summary_csv(result.rows) << "wrote report to " << out.string() << "\n";
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
