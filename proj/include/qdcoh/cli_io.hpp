// cli_io.hpp: Scenario files, temperature sweeps, CSV ingestion and figure-data export.

#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qdcoh/coherence.hpp"
#include "qdcoh/emission_spectra.hpp"
#include "qdcoh/error.hpp"
#include "qdcoh/model.hpp"
#include "qdcoh/scenario.hpp"
#include "qdcoh/units.hpp"

namespace qdcoh::io {

// ---------------------------------------------------------------------------------------
// Formatting

inline std::string fmt(double v, int digits = 10) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_number(const std::string& text, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ValidationError(where + ": '" + text + "' is not a number");
    }
    if (used != text.size() || !std::isfinite(v)) throw ValidationError(where + ": '" + text + "' is not a number");
    return v;
}

// ---------------------------------------------------------------------------------------
// Sweep variants

enum class Variant { as_measured, thermal_only, no_purcell, purcell_200 };

inline const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v{Variant::as_measured, Variant::thermal_only, Variant::no_purcell,
                                        Variant::purcell_200};
    return v;
}

inline std::string to_string(Variant v) {
    switch (v) {
    case Variant::as_measured: return "as-measured";
    case Variant::thermal_only: return "thermal-only";
    case Variant::no_purcell: return "no-purcell";
    case Variant::purcell_200: return "purcell-200";
    }
    return "unknown";
}

inline Variant parse_variant(const std::string& name) {
    for (auto v : all_variants())
        if (to_string(v) == name) return v;
    throw ValidationError("unknown variant '" + name + "' (expected as-measured, thermal-only, no-purcell or purcell-200)");
}

inline constexpr double kOptimisedPurcell = 200.0;

// Device seen by one variant. The two extrapolations keep the phonon and emitter
// parameters and drop the non-thermal offset; purcell-200 narrows the cavity as
// kappa' = kappa F_P / 200 at fixed coupling.
inline EmitterCavityScenario apply_variant(EmitterCavityScenario s, Variant v) {
    switch (v) {
    case Variant::as_measured: break;
    case Variant::thermal_only: s.nonthermal_dephasing = 0.0; break;
    case Variant::no_purcell:
        s.nonthermal_dephasing = 0.0;
        s.purcell = 1.0;
        s.cavity_filter = false;
        break;
    case Variant::purcell_200:
        s.nonthermal_dephasing = 0.0;
        s.kappa *= s.purcell / kOptimisedPurcell;
        s.purcell = kOptimisedPurcell;
        break;
    }
    return s;
}

// ---------------------------------------------------------------------------------------
// Scenario file

struct ScenarioSet {
    PhononEnvironment env;  // temperature is set per sweep point
    EmitterCavityScenario device;
    std::vector<double> temperatures;  // K
    std::vector<Variant> variants;
    std::string source;                // path or "<string>"

    // Canonical text of every parsed value; the scenario hash is taken over this.
    std::string canonical() const {
        std::ostringstream os;
        os << "alpha_ps2=" << fmt(env.alpha, 17) << "\nnu_c_per_ps=" << fmt(env.nu_c, 17)
           << "\nmu_ps2=" << fmt(env.mu, 17) << "\ngamma0_per_ps=" << fmt(device.gamma0, 17)
           << "\npurcell=" << fmt(device.purcell, 17) << "\nkappa_per_ps=" << fmt(device.kappa, 17)
           << "\ncavity_detuning_per_ps=" << fmt(device.cavity_detuning, 17)
           << "\nrabi_per_ps=" << fmt(device.rabi, 17) << "\nlaser_detuning_per_ps=" << fmt(device.laser_detuning, 17)
           << "\nepsilon=" << fmt(device.epsilon, 17)
           << "\nnonthermal_dephasing_per_ps=" << fmt(device.nonthermal_dephasing, 17) << "\ntemperatures_K=";
        for (std::size_t i = 0; i < temperatures.size(); ++i) os << (i ? "," : "") << fmt(temperatures[i], 17);
        os << "\nvariants=";
        for (std::size_t i = 0; i < variants.size(); ++i) os << (i ? "," : "") << to_string(variants[i]);
        os << "\n";
        return os.str();
    }

    std::string hash() const {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

namespace detail {

struct Entry {
    std::string value;
    int line;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

// One accepted key: a name with a unit suffix and the conversion to internal units.
struct KeySpec {
    std::string key;
    std::function<double(double)> to_internal;
};

inline const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> k{
        {"phonon", {"alpha_ps2", "nu_c_per_ps", "nu_c_meV", "mu_ps2"}},
        {"emitter", {"t1_ps", "gamma0_per_ps", "nonthermal_dephasing_per_ps", "nonthermal_dephasing_ueV"}},
        {"cavity", {"kappa_meV_full", "kappa_per_ps_full", "detuning_ueV", "purcell"}},
        {"drive", {"rabi_energy_ueV", "laser_detuning_ueV"}},
        {"interferometer", {"epsilon"}},
        {"sweep", {"temperatures_K", "variants"}},
    };
    return k;
}

inline std::string where(const std::string& source, const std::string& section, const std::string& key, int line) {
    std::ostringstream os;
    os << source << ":" << line << ": [" << section << "] " << key;
    return os.str();
}

} // namespace detail

inline ScenarioSet parse_scenario_text(const std::string& text, const std::string& source = "<string>") {
    detail::Sections sec;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError(source + ":" + std::to_string(lineno) + ": malformed section header");
            current = trim(line.substr(1, line.size() - 2));
            if (!detail::known_keys().contains(current))
                throw ValidationError(source + ":" + std::to_string(lineno) + ": unknown section [" + current + "]");
            if (sec.contains(current))
                throw ValidationError(source + ":" + std::to_string(lineno) + ": duplicate section [" + current + "]");
            sec[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(source + ":" + std::to_string(lineno) + ": expected key = value");
        if (current.empty())
            throw ValidationError(source + ":" + std::to_string(lineno) + ": key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& allowed = detail::known_keys().at(current);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            std::ostringstream os;
            os << detail::where(source, current, key, lineno) << ": unknown key or unit suffix (accepted:";
            for (const auto& a : allowed) os << " " << a;
            os << ")";
            throw ValidationError(os.str());
        }
        if (sec[current].contains(key))
            throw ValidationError(detail::where(source, current, key, lineno) + ": duplicate key");
        if (value.empty()) throw ValidationError(detail::where(source, current, key, lineno) + ": empty value");
        sec[current][key] = {value, lineno};
    }

    for (const auto& [name, keys] : detail::known_keys())
        if (!sec.contains(name)) throw ValidationError(source + ": missing section [" + name + "]");

    // Exactly one of the alternatives must be present; returns the internal-unit value.
    auto pick = [&](const std::string& section, const std::vector<detail::KeySpec>& alts,
                    std::optional<double> fallback = std::nullopt) -> double {
        const auto& s = sec.at(section);
        const detail::KeySpec* found = nullptr;
        for (const auto& a : alts) {
            if (!s.contains(a.key)) continue;
            if (found)
                throw ValidationError(detail::where(source, section, a.key, s.at(a.key).line) + ": conflicts with " +
                                      found->key);
            found = &a;
        }
        if (!found) {
            if (fallback) return *fallback;
            std::string names;
            for (const auto& a : alts) names += (names.empty() ? "" : " or ") + a.key;
            throw ValidationError(source + ": [" + section + "] missing required key " + names);
        }
        const auto& e = s.at(found->key);
        return found->to_internal(parse_number(e.value, detail::where(source, section, found->key, e.line)));
    };
    auto line_of = [&](const std::string& section, const std::string& key) {
        const auto& s = sec.at(section);
        return s.contains(key) ? s.at(key).line : 0;
    };
    auto check = [&](bool ok, const std::string& section, const std::string& key, const std::string& msg) {
        if (!ok) throw ValidationError(detail::where(source, section, key, line_of(section, key)) + ": " + msg);
    };
    const auto id = [](double x) { return x; };

    ScenarioSet out;
    out.source = source;
    out.env.alpha = pick("phonon", {{"alpha_ps2", id}});
    check(out.env.alpha >= 0.0, "phonon", "alpha_ps2", "must be >= 0");
    out.env.nu_c = pick("phonon", {{"nu_c_per_ps", id}, {"nu_c_meV", units::energy_to_rate}});
    check(out.env.nu_c > 0.0, "phonon", "nu_c", "must be > 0");
    out.env.mu = pick("phonon", {{"mu_ps2", id}});
    check(out.env.mu >= 0.0, "phonon", "mu_ps2", "must be >= 0");
    out.env.temperature = 0.0;

    auto& d = out.device;
    d.purcell = pick("cavity", {{"purcell", id}});
    check(d.purcell >= 1.0, "cavity", "purcell", "must be >= 1");
    d.kappa = pick("cavity", {{"kappa_meV_full", units::energy_to_rate}, {"kappa_per_ps_full", id}});
    check(d.kappa > 0.0, "cavity", "kappa", "must be > 0");
    d.cavity_detuning = pick("cavity", {{"detuning_ueV", units::ueV_to_rate}}, 0.0);

    const double t1_or_gamma0 = pick("emitter", {{"t1_ps", [&](double t1) { return 1.0 / (t1 * d.purcell); }},
                                                 {"gamma0_per_ps", id}});
    check(t1_or_gamma0 > 0.0 && std::isfinite(t1_or_gamma0), "emitter", "t1_ps/gamma0_per_ps", "must be > 0");
    d.gamma0 = t1_or_gamma0;
    d.nonthermal_dephasing = pick("emitter", {{"nonthermal_dephasing_per_ps", id},
                                              {"nonthermal_dephasing_ueV", units::ueV_to_rate}}, 0.0);
    check(d.nonthermal_dephasing >= 0.0, "emitter", "nonthermal_dephasing", "must be >= 0");

    d.rabi = pick("drive", {{"rabi_energy_ueV", units::ueV_to_rate}});
    check(d.rabi >= 0.0, "drive", "rabi_energy_ueV", "must be >= 0");
    d.laser_detuning = pick("drive", {{"laser_detuning_ueV", units::ueV_to_rate}}, 0.0);
    d.epsilon = pick("interferometer", {{"epsilon", id}});
    check(d.epsilon >= 0.0 && d.epsilon < 1.0, "interferometer", "epsilon", "must lie in [0,1)");

    const auto& sw = sec.at("sweep");
    if (!sw.contains("temperatures_K")) throw ValidationError(source + ": [sweep] missing required key temperatures_K");
    {
        const auto& e = sw.at("temperatures_K");
        const auto w = detail::where(source, "sweep", "temperatures_K", e.line);
        for (const auto& t : split(e.value, ',')) {
            const double k = parse_number(t, w);
            if (!(k >= 0.0)) throw ValidationError(w + ": temperatures must be >= 0");
            out.temperatures.push_back(k);
        }
        std::sort(out.temperatures.begin(), out.temperatures.end());
        out.temperatures.erase(std::unique(out.temperatures.begin(), out.temperatures.end()), out.temperatures.end());
    }
    if (sw.contains("variants")) {
        const auto& e = sw.at("variants");
        for (const auto& v : split(e.value, ',')) {
            try {
                out.variants.push_back(parse_variant(v));
            } catch (const ValidationError& err) {
                throw ValidationError(detail::where(source, "sweep", "variants", e.line) + ": " + err.what());
            }
        }
    } else {
        out.variants = {Variant::as_measured};
    }
    out.device.validate();
    out.env.validate();
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ValidationError("cannot read " + p.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

inline ScenarioSet parse_scenario(const std::filesystem::path& path) {
    return parse_scenario_text(read_file(path), path.string());
}

// ---------------------------------------------------------------------------------------
// Tolerance profiles

inline ModelOptions tolerance_profile(const std::string& name) {
    ModelOptions o;
    if (name == "fast") {
        o.per_decade = 60;
        o.tolerance = {1e-9, 40};
    } else if (name == "exact") {
        o.per_decade = 240;
        o.tolerance = {1e-10, 40};
    } else {
        throw ValidationError("unknown tolerance profile '" + name + "' (expected fast or exact)");
    }
    return o;
}

// ---------------------------------------------------------------------------------------
// Temperature sweep

struct SweepRow {
    double temperature{0.0};
    Variant variant{Variant::as_measured};
    double b2{0.0};
    double f_zpl{0.0};
    double f_coh{0.0};
    double t2_over_2t1{0.0};
    double pure_dephasing{0.0};  // ps^-1, 1/T2*
    double hom_v{0.0};
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string scenario_hash;
    std::string profile;
    ModelOptions options;
};

inline SweepRow summarise(const ModelRun& run, double kelvin, Variant v) {
    SweepRow r;
    r.temperature = kelvin;
    r.variant = v;
    r.b2 = run.point.b * run.point.b;
    r.f_zpl = run.fractions.f_zpl;
    r.f_coh = run.fractions.f_coh;
    r.t2_over_2t1 = run.point.t2_over_2t1();
    r.pure_dephasing = run.point.pure_dephasing;
    r.hom_v = coherence::hom_visibility(std::min(1.0, r.f_zpl), std::min(1.0, r.t2_over_2t1));
    return r;
}

inline unsigned default_threads() {
    return std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
}

// Runs every (temperature, variant) pair on a small worker pool. Rows come back sorted by
// temperature and then by the order of `variants`, independent of scheduling.
inline SweepResult run_temperature_sweep(const ScenarioSet& set, std::vector<double> temperatures,
                                         const std::vector<Variant>& variants, const std::string& profile = "exact",
                                         unsigned threads = default_threads()) {
    std::sort(temperatures.begin(), temperatures.end());
    temperatures.erase(std::unique(temperatures.begin(), temperatures.end()), temperatures.end());
    SweepResult result;
    result.scenario_hash = set.hash();
    result.profile = profile;
    result.options = tolerance_profile(profile);

    struct Job {
        double kelvin;
        Variant variant;
        std::size_t order;
    };
    std::vector<Job> jobs;
    for (double t : temperatures)
        for (std::size_t k = 0; k < variants.size(); ++k) jobs.push_back({t, variants[k], k});
    std::vector<SweepRow> rows(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const auto& j = jobs[i];
            try {
                const auto device = apply_variant(set.device, j.variant);
                const auto run = run_model(set.env.at(j.kelvin), device, result.options);
                rows[i] = summarise(run, j.kelvin, j.variant);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i]) continue;
        const std::string ctx = "T = " + fmt(jobs[i].kelvin) + " K, variant " + to_string(jobs[i].variant) + ": ";
        try {
            std::rethrow_exception(errors[i]);
        } catch (const ValidationError& e) {
            throw ValidationError(ctx + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError(ctx + e.what());
        } catch (const std::exception& e) {
            throw NumericalError(ctx + e.what());
        }
    }
    result.rows = std::move(rows);
    return result;
}

inline SweepResult run_temperature_sweep(const ScenarioSet& set, const std::string& profile = "exact",
                                         unsigned threads = default_threads()) {
    return run_temperature_sweep(set, set.temperatures, set.variants, profile, threads);
}

// ---------------------------------------------------------------------------------------
// Export

inline constexpr const char* kSummaryHeader =
    "temperature_K,variant,B2,F_ZPL,F_coh,T2_over_2T1,pure_dephasing_per_ps,hom_V";

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + path.string());
    return f;
}

inline void close_output(std::ofstream& f, const std::filesystem::path& path) {
    f.close();
    if (!f) throw ValidationError("error while writing " + path.string());
}

inline std::string summary_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << kSummaryHeader << "\n";
    for (const auto& r : rows)
        os << fmt(r.temperature) << "," << to_string(r.variant) << "," << fmt(r.b2) << "," << fmt(r.f_zpl) << ","
           << fmt(r.f_coh) << "," << fmt(r.t2_over_2t1) << "," << fmt(r.pure_dephasing) << "," << fmt(r.hom_v)
           << "\n";
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    auto f = open_output(path);
    f << text;
    close_output(f, path);
}

inline std::string provenance(const ScenarioSet& set, const SweepResult& r) {
    std::ostringstream os;
    os << "qdcoh_version=" << QDCOH_VERSION << "\n"
       << "scenario=" << set.source << "\n"
       << "scenario_hash=" << r.scenario_hash << "\n"
       << "tolerance_profile=" << r.profile << "\n"
       << "tau_points_per_decade=" << r.options.per_decade << "\n"
       << "quadrature_rel_tol=" << fmt(r.options.tolerance.rel) << "\n"
       << "sideband_form=" << (r.options.sideband == spectra::SidebandForm::consistent ? "consistent" : "literal")
       << "\n"
       << "assumption=purcell-200 narrows the cavity as kappa' = kappa * F_P / 200 at fixed coupling\n"
       << "assumption=no-purcell and purcell-200 drop the non-thermal dephasing offset\n"
       << "assumption=kappa_meV_full is the full cavity linewidth entering the Lorentzian filter\n"
       << set.canonical();
    return os.str();
}

// Long-format comparison with the curve names of the four model lines.
inline std::string comparison_csv(const std::vector<SweepRow>& rows) {
    auto curve = [](Variant v) {
        switch (v) {
        case Variant::as_measured: return "measured-params";
        case Variant::thermal_only: return "no-nonthermal";
        case Variant::no_purcell: return "no-purcell";
        case Variant::purcell_200: return "purcell-200";
        }
        return "unknown";
    };
    std::ostringstream os;
    os << "temperature_K,curve,F_ZPL,T2_over_2T1\n";
    for (auto v : all_variants())
        for (const auto& r : rows)
            if (r.variant == v)
                os << fmt(r.temperature) << "," << curve(v) << "," << fmt(r.f_zpl) << "," << fmt(r.t2_over_2t1) << "\n";
    return os.str();
}

inline std::string spectrum_csv(const spectra::SpectrumTrace& s) {
    std::ostringstream os;
    os << "# filtered=" << (s.filtered ? 1 : 0) << " coherent_weight=" << fmt(s.coherent_weight)
       << " (delta at omega = 0, not sampled)\n";
    os << "omega_per_ps,detuning_meV,S_inc,S_psb,S_total\n";
    for (std::size_t i = 0; i < s.omega.size(); ++i)
        os << fmt(s.omega[i]) << "," << fmt(units::rate_to_energy(s.omega[i])) << "," << fmt(s.inc[i]) << ","
           << fmt(s.psb[i]) << "," << fmt(s.values[i]) << "\n";
    return os.str();
}

// Delay grid for g1 exports: zero plus a geometric grid to 1 ns.
inline std::vector<double> export_tau_grid(int per_decade = 40) {
    auto tau = phonon::default_tau_grid(1000.0, per_decade);
    if (tau.front() != 0.0) tau.insert(tau.begin(), 0.0);
    return tau;
}

struct G1Export {
    std::vector<double> tau;
    std::vector<spectra::cplx> filtered;
    std::vector<double> visibility;
};

inline G1Export simulate_g1(const ModelRun& run, const ModelOptions& opts, int per_decade = 40) {
    G1Export g;
    g.tau = export_tau_grid(per_decade);
    g.filtered = filtered_g1(run.point, g.tau, opts);
    g.visibility = spectra::visibility_trace(g.filtered, run.point.scenario.epsilon);
    return g;
}

inline std::string g1_csv(const G1Export& g) {
    std::ostringstream os;
    os << "tau_ps,g1_filtered_re,g1_filtered_im,v\n";
    for (std::size_t i = 0; i < g.tau.size(); ++i)
        os << fmt(g.tau[i]) << "," << fmt(g.filtered[i].real()) << "," << fmt(g.filtered[i].imag()) << ","
           << fmt(g.visibility[i]) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------------------
// CSV ingestion

struct Table {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    bool has(const std::string& name) const {
        return std::find(header.begin(), header.end(), name) != header.end();
    }
    const std::vector<double>& column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            std::string cols;
            for (const auto& h : header) cols += (cols.empty() ? "" : ", ") + h;
            throw ValidationError(source + ": missing column '" + name + "' (found: " + cols + ")");
        }
        return columns[static_cast<std::size_t>(it - header.begin())];
    }
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Comma-separated numeric table with one header line; '#' starts a comment.
inline Table parse_csv_text(const std::string& text, const std::string& source = "<string>") {
    Table t;
    t.source = source;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (t.header.empty()) {
            t.header = cells;
            t.columns.resize(cells.size());
            continue;
        }
        if (cells.size() != t.header.size()) {
            std::ostringstream os;
            os << source << ":" << lineno << ": expected " << t.header.size() << " fields, found " << cells.size();
            throw ValidationError(os.str());
        }
        for (std::size_t c = 0; c < cells.size(); ++c)
            t.columns[c].push_back(
                parse_number(cells[c], source + ":" + std::to_string(lineno) + ": column " + t.header[c]));
    }
    if (t.header.empty()) throw ValidationError(source + ": empty file");
    return t;
}

inline Table read_csv(const std::filesystem::path& path) { return parse_csv_text(read_file(path), path.string()); }

} // namespace qdcoh::io
