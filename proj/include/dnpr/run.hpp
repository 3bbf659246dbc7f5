#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dnpr/config.hpp"
#include "dnpr/constants.hpp"
#include "dnpr/dynamics.hpp"
#include "dnpr/geometry.hpp"
#include "dnpr/lz_model.hpp"
#include "dnpr/spectra.hpp"
#include "dnpr/table.hpp"
#include "dnpr/version.hpp"

namespace dnpr {

// --------------------------------------------------------------------------
// Scalar physics helpers exposed through the thermal experiment
// --------------------------------------------------------------------------

// Spin-1/2 thermal polarization tanh(h gamma B / 2 kB T); gamma cyclic in
// MHz/T.
inline double thermal_polarization(double field_T, double temperature_K,
                                   double gamma_MHz_per_T) {
    if (field_T < 0.0) throw ConfigError("thermal_polarization: negative field");
    if (!(temperature_K > 0.0))
        throw ConfigError("thermal_polarization: temperature must be positive");
    const double x = constants::kPlanck * std::abs(gamma_MHz_per_T) * 1e6 *
                     field_T /
                     (2.0 * constants::kBoltzmann * temperature_K);
    return std::tanh(x);
}

struct EnhancementReport {
    double epsilon = 0.0;
    double fill_fraction = 1.0;
    double t_dnp_s = 1.0;
    double t_thermal_s = 1.0;
    double thermal_polarization = 0.0;
    double local_polarization = 0.0;
    double sensitivity_gain = 0.0;
};

inline EnhancementReport enhancement_report(double epsilon, double fill_fraction,
                                            double t_dnp_s, double t_thermal_s,
                                            double p_thermal) {
    if (!(epsilon > 0.0) || !(t_dnp_s > 0.0) || !(t_thermal_s > 0.0))
        throw ConfigError("enhancement_report: inputs must be positive");
    if (!(fill_fraction > 0.0) || fill_fraction > 1.0)
        throw ConfigError("enhancement_report: fill_fraction must be in (0, 1]");
    EnhancementReport r;
    r.epsilon = epsilon;
    r.fill_fraction = fill_fraction;
    r.t_dnp_s = t_dnp_s;
    r.t_thermal_s = t_thermal_s;
    r.thermal_polarization = p_thermal;
    r.local_polarization = epsilon * p_thermal / fill_fraction;
    r.sensitivity_gain = epsilon * std::sqrt(t_thermal_s / t_dnp_s);
    return r;
}

// --------------------------------------------------------------------------
// Result envelope
// --------------------------------------------------------------------------

struct ResultEnvelope {
    json config_echo;
    std::string config_hash;
    std::string version = kVersion;
    double wall_time_ms = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, Table>> tables;  // name -> payload
    json data;                                          // non-tabular results
};

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

// --------------------------------------------------------------------------
// Experiment implementations
// --------------------------------------------------------------------------

namespace detail {

inline void run_levels(const RunConfig& cfg, ResultEnvelope& env) {
    const auto spec = cfg.system.build();
    const auto dia = level_diagram(spec, {cfg.b_min_mT, cfg.b_max_mT}, cfg.n_points);
    Table t;
    t.columns.push_back("B_mT");
    for (int l = 0; l < dia.energies_MHz.cols(); ++l)
        t.columns.push_back("level_" + std::to_string(l) + "_MHz");
    for (size_t i = 0; i < dia.fields_mT.size(); ++i) {
        std::vector<double> row;
        row.push_back(dia.fields_mT[i]);
        for (int l = 0; l < dia.energies_MHz.cols(); ++l)
            row.push_back(dia.energies_MHz(i, l));
        t.rows.push_back(std::move(row));
    }
    env.tables.emplace_back("levels", std::move(t));
}

inline void run_crossings(const RunConfig& cfg, ResultEnvelope& env) {
    const auto spec = cfg.system.build();
    CrossingScanOptions opt;
    opt.coarse_step_mT = cfg.coarse_step_mT;
    opt.level_pairs = cfg.level_pairs;
    const auto report = find_crossings(spec, {cfg.b_min_mT, cfg.b_max_mT}, opt);
    Table t;
    t.columns = {"B_c_mT", "gap_MHz", "level_lo", "level_hi"};
    for (const auto& e : report.entries)
        t.add_row({e.b_mT, e.gap_MHz, static_cast<double>(e.level_lo),
                   static_cast<double>(e.level_hi)});
    env.tables.emplace_back("crossings", std::move(t));
    if (const auto d1 = report.delta1())
        env.data["delta1_MHz"] = d1->gap_MHz;
    if (const auto d0 = report.delta0())
        env.data["delta0_MHz"] = d0->gap_MHz;
    if (report.entries.empty())
        env.warnings.push_back("no avoided crossings found in the scanned range");
}

inline void run_matching_field(const RunConfig& cfg, ResultEnvelope& env) {
    Table t;
    t.columns = {"theta_deg", "B_m_mT"};
    for (double theta = cfg.theta_min_deg; theta <= cfg.theta_max_deg + 1e-9;
         theta += cfg.theta_step_deg)
        t.add_row({theta, matching_field(theta)});
    env.tables.emplace_back("matching_field", std::move(t));
}

inline void run_sweep(const RunConfig& cfg, ResultEnvelope& env) {
    const auto spec = cfg.system.build();
    const auto result = single_sweep_polarization(spec, cfg.sweep, cfg.direction,
                                                  cfg.step, true);
    Table t;
    t.columns = {"t_ms", "B_mT", "P_carbon"};
    for (const auto& s : result.trajectory) t.add_row({s.t_ms, s.b_mT, s.value});
    env.tables.emplace_back("sweep", std::move(t));
    env.data["final_polarization"] = result.polarization;
}

inline void run_rate_scan(const RunConfig& cfg, ResultEnvelope& env) {
    const auto spec = cfg.system.build();
    RateScanOptions opt;
    opt.window = cfg.sweep;
    opt.ctrl = cfg.step;
    opt.jitter_n = cfg.jitter_n;
    opt.jitter_span_us = cfg.jitter_span_us;
    const auto table = rate_scan(spec, cfg.rates_mT_per_ms, cfg.direction, opt);
    Table t;
    t.columns = {"rate_mT_per_ms", "P"};
    for (const auto& [r, p] : table) t.add_row({r, p});
    env.tables.emplace_back("rate_scan", std::move(t));
}

inline void run_fraction_scan(const RunConfig& cfg, ResultEnvelope& env) {
    ProtocolSpec protocol;
    protocol.system = cfg.system.build();
    protocol.sweep = cfg.sweep;
    if (cfg.pulse_gated)
        protocol.pump.pulse_gate_t1_ms =
            std::max(cfg.sweep.t_lh_ms, cfg.sweep.t_hl_ms);
    protocol.t_p_ms = cfg.t_p_ms;
    protocol.t1n_ms = cfg.t1n_ms;
    protocol.p_sat = cfg.p_sat;
    protocol.injection_scale = cfg.injection_scale;

    // the sweep member carries the cycle period; fractions redistribute it
    std::vector<FractionScanPoint> points;
    const double t_c = cfg.sweep.cycle_period_ms();
    ProtocolSpec scan_protocol = protocol;
    std::vector<double> fractions = cfg.fractions;
    std::sort(fractions.begin(), fractions.end());
    // fraction_scan validates the embedded sweep; keep timings consistent
    scan_protocol.sweep.t_lh_ms = 0.5 * t_c;
    scan_protocol.sweep.t_hl_ms = 0.5 * t_c;
    points = fraction_scan(scan_protocol, fractions, cfg.step, cfg.jitter_n);

    Table t;
    t.columns = {"fraction_t_LH_over_t_c", "p_LH", "p_HL", "P_final"};
    for (const auto& p : points)
        t.add_row({p.fraction, p.p_lh, p.p_hl, p.polarization});
    env.tables.emplace_back("fraction_scan", std::move(t));
}

inline void run_dnp_spectrum(const RunConfig& cfg, ResultEnvelope& env) {
    const auto spec = cfg.system.build();
    std::vector<double> fields;
    for (double b = cfg.b_min_mT; b <= cfg.b_max_mT + 1e-12;
         b += cfg.spectrum_step_mT)
        fields.push_back(b);
    const auto table = dnp_spectrum(spec, fields, cfg.pump_cycles, cfg.tau_evol_us);
    Table t;
    t.columns = {"B0_mT", "P"};
    for (const auto& [b, p] : table) t.add_row({b, p});
    env.tables.emplace_back("dnp_spectrum", std::move(t));
}

inline void run_range_scan(const RunConfig& cfg, ResultEnvelope& env) {
    const auto spec = cfg.system.build();
    const auto table =
        sweep_range_scan(spec, cfg.b_start_mT, cfg.ranges_mT, cfg.direction,
                         cfg.t_slow_ms, cfg.t_fast_ms, cfg.range_cycles, cfg.step);
    Table t;
    t.columns = {"deltaB_mT", "P"};
    for (const auto& [db, p] : table) t.add_row({db, p});
    env.tables.emplace_back("range_scan", std::move(t));
}

inline void run_geometry(const RunConfig& cfg, ResultEnvelope& env) {
    DefectEnsembleSpec ensemble = cfg.ensemble;
    ensemble.seed = cfg.seed;
    if (cfg.geometry_kind == "nn-stats" || cfg.geometry_kind == "coupling-stats") {
        const auto stats = nn_distance_stats(ensemble, cfg.n_samples);
        Table t;
        t.columns = {"bin_lo_nm", "bin_hi_nm", "density"};
        for (size_t b = 0; b < stats.histogram.density.size(); ++b)
            t.add_row({stats.histogram.lo + b * stats.histogram.bin_width,
                       stats.histogram.lo + (b + 1) * stats.histogram.bin_width,
                       stats.histogram.density[b]});
        env.tables.emplace_back("distance_histogram", std::move(t));
        env.data["mean_d_nm"] = stats.mean_nm;
        env.data["stderr_nm"] = stats.stderr_nm;
        env.data["poisson_mean_d_nm"] = poisson_nn_mean_nm(ensemble.p1_density());
        if (cfg.geometry_kind == "coupling-stats") {
            const auto cs = coupling_stats(ensemble, cfg.n_samples);
            Table ct;
            ct.columns = {"log10_J_lo_MHz", "log10_J_hi_MHz", "density"};
            for (size_t b = 0; b < cs.log10_histogram.density.size(); ++b)
                ct.add_row(
                    {cs.log10_histogram.lo + b * cs.log10_histogram.bin_width,
                     cs.log10_histogram.lo +
                         (b + 1) * cs.log10_histogram.bin_width,
                     cs.log10_histogram.density[b]});
            env.tables.emplace_back("coupling_histogram", std::move(ct));
            env.data["mean_J_MHz"] = cs.mean_MHz;
            env.data["median_J_MHz"] = cs.median_MHz;
        }
    } else if (cfg.geometry_kind == "clusters") {
        const auto dist =
            cluster_distribution(ensemble, cfg.cluster_rule, cfg.n_realizations);
        Table t;
        t.columns = {"n", "probability"};
        for (size_t n = 0; n < dist.pmf.size(); ++n)
            if (n >= 2 || dist.pmf[n] > 0.0)
                t.add_row({static_cast<double>(n), dist.pmf[n]});
        env.tables.emplace_back("cluster_pmf", std::move(t));
        env.data["first_moment"] = dist.first_moment;
    } else {  // distance-curve
        const auto curve = mean_distance_vs_concentration(
            cfg.ppm_list, cfg.p1_to_nv_ratio, cfg.n_samples, cfg.seed);
        Table t;
        t.columns = {"ppm", "mean_d_nm", "stderr_nm"};
        for (const auto& p : curve) t.add_row({p.ppm, p.mean_d_nm, p.stderr_nm});
        env.tables.emplace_back("distance_curve", std::move(t));
    }
}

inline RateCurve load_rate_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("fit: cannot open input CSV: " + path);
    RateCurve data;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (first) {
            first = false;
            // header row allowed
            try {
                std::stod(cells.at(0));
            } catch (...) {
                continue;
            }
        }
        if (cells.size() < 2)
            throw ConfigError("fit: input CSV needs rate,amplitude[,sigma]");
        data.rates_mT_per_ms.push_back(std::stod(cells[0]));
        data.values.push_back(std::stod(cells[1]));
        if (cells.size() >= 3) data.sigmas.push_back(std::stod(cells[2]));
    }
    if (!data.sigmas.empty() && data.sigmas.size() != data.values.size())
        throw ConfigError("fit: sigma column must be present on every row");
    return data;
}

inline void run_fit(const RunConfig& cfg, ResultEnvelope& env) {
    RateCurve data = cfg.fit_input_path.empty()
                         ? cfg.fit_data
                         : load_rate_curve_csv(cfg.fit_input_path);
    data.check();
    const auto result = fit(data, cfg.fit_init, cfg.multistart);
    Table t;
    t.columns = {"rate_mT_per_ms", "amplitude", "model", "residual"};
    for (size_t i = 0; i < data.values.size(); ++i) {
        const double model = eval(result.params, data.rates_mT_per_ms[i]);
        t.add_row({data.rates_mT_per_ms[i], data.values[i], model,
                   model - data.values[i]});
    }
    env.tables.emplace_back("fit", std::move(t));
    env.data["params"] = {{"delta0_kHz", result.params.delta0_kHz},
                          {"delta1_kHz", result.params.delta1_kHz},
                          {"k_kHz2", result.params.k_kHz2},
                          {"p_m", result.params.p_m}};
    env.data["rms"] = result.rms;
    env.data["converged"] = result.converged;
    env.data["iterations"] = result.iterations;
    env.data["best_start"] = result.best_start;
    env.data["argmax_rate_mT_per_ms"] = argmax_rate(result.params);
    if (!result.converged)
        env.warnings.push_back("fit did not converge; best-so-far reported");
}

inline void run_thermal(const RunConfig& cfg, ResultEnvelope& env) {
    const double p = thermal_polarization(cfg.field_T, cfg.temperature_K,
                                          cfg.gamma_MHz_per_T);
    Table t;
    t.columns = {"B_T", "temperature_K", "gamma_MHz_per_T", "P_thermal"};
    t.add_row({cfg.field_T, cfg.temperature_K, cfg.gamma_MHz_per_T, p});
    env.tables.emplace_back("thermal", std::move(t));
    env.data["thermal_polarization"] = p;
    if (cfg.enh_epsilon) {
        const auto rep =
            enhancement_report(*cfg.enh_epsilon, cfg.enh_fill_fraction,
                               cfg.enh_t_dnp_s, cfg.enh_t_thermal_s, p);
        env.data["enhancement"] = {
            {"epsilon", rep.epsilon},
            {"fill_fraction", rep.fill_fraction},
            {"t_dnp_s", rep.t_dnp_s},
            {"t_thermal_s", rep.t_thermal_s},
            {"local_polarization", rep.local_polarization},
            {"sensitivity_gain", rep.sensitivity_gain}};
        Table et;
        et.columns = {"epsilon", "fill_fraction", "t_dnp_s", "t_thermal_s",
                      "local_polarization", "sensitivity_gain"};
        et.add_row({rep.epsilon, rep.fill_fraction, rep.t_dnp_s, rep.t_thermal_s,
                    rep.local_polarization, rep.sensitivity_gain});
        env.tables.emplace_back("enhancement", std::move(et));
    }
}

} // namespace detail

// --------------------------------------------------------------------------
// Dispatch
// --------------------------------------------------------------------------

inline ResultEnvelope run(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    if (!cfg.seed_was_set) {
        cfg.seed = std::random_device{}();
        cfg.seed_was_set = true;
    }
    ResultEnvelope env;
    const auto t0 = std::chrono::steady_clock::now();
    env.config_echo = cfg.to_json();
    env.config_hash = hash_hex(fnv1a(cfg.canonical_text()));
    env.seed = cfg.seed;

    switch (cfg.kind) {
        case ExperimentKind::Levels: detail::run_levels(cfg, env); break;
        case ExperimentKind::Crossings: detail::run_crossings(cfg, env); break;
        case ExperimentKind::MatchingField:
            detail::run_matching_field(cfg, env);
            break;
        case ExperimentKind::Sweep: detail::run_sweep(cfg, env); break;
        case ExperimentKind::RateScan: detail::run_rate_scan(cfg, env); break;
        case ExperimentKind::FractionScan:
            detail::run_fraction_scan(cfg, env);
            break;
        case ExperimentKind::DnpSpectrum:
            detail::run_dnp_spectrum(cfg, env);
            break;
        case ExperimentKind::RangeScan: detail::run_range_scan(cfg, env); break;
        case ExperimentKind::Geometry: detail::run_geometry(cfg, env); break;
        case ExperimentKind::Fit: detail::run_fit(cfg, env); break;
        case ExperimentKind::Thermal: detail::run_thermal(cfg, env); break;
    }
    env.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    return env;
}

// --------------------------------------------------------------------------
// Output emission
// --------------------------------------------------------------------------

inline json envelope_metadata(const ResultEnvelope& env) {
    json meta;
    meta["config"] = env.config_echo;
    meta["config_hash"] = env.config_hash;
    meta["tool_version"] = env.version;
    meta["wall_time_ms"] = env.wall_time_ms;
    meta["seed"] = env.seed;
    meta["warnings"] = env.warnings;
    if (!env.data.is_null()) meta["results"] = env.data;
    return meta;
}

// Writes the payload (CSV per table or one JSON envelope) plus a JSON
// metadata sidecar.  Returns the list of files written.
inline std::vector<std::string> emit(const ResultEnvelope& env,
                                     const std::string& output_path,
                                     const std::string& format) {
    namespace fs = std::filesystem;
    std::vector<std::string> written;
    const fs::path out(output_path);
    if (format == "json") {
        json j = envelope_metadata(env);
        for (const auto& [name, table] : env.tables) {
            json jt;
            jt["columns"] = table.columns;
            jt["rows"] = table.rows;
            j["tables"][name] = jt;
        }
        write_file_atomic(out, j.dump(2) + "\n");
        written.push_back(out.string());
        return written;
    }
    const fs::path dir = out.parent_path();
    const std::string stem = out.stem().string();
    const std::string ext =
        out.extension().empty() ? ".csv" : out.extension().string();
    for (size_t i = 0; i < env.tables.size(); ++i) {
        const auto& [name, table] = env.tables[i];
        fs::path path =
            env.tables.size() == 1 ? out : dir / (stem + "_" + name + ext);
        write_file_atomic(path, to_csv(table));
        written.push_back(path.string());
    }
    const fs::path meta_path = dir / (stem + ".meta.json");
    write_file_atomic(meta_path, envelope_metadata(env).dump(2) + "\n");
    written.push_back(meta_path.string());
    return written;
}

// --------------------------------------------------------------------------
// Bundled study configurations
// --------------------------------------------------------------------------

inline const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names = {
        "fig1c", "fig1e", "fig1f", "fig3b", "fig3c-fit",
        "fig3d", "fig4c", "fig4e", "fig5d"};
    return names;
}

// Canonical configs behind each named study; several studies expand to more
// than one run (suffixes keep the outputs apart).
inline std::vector<std::pair<std::string, RunConfig>> figure_configs(
    const std::string& name, std::uint64_t seed = 424242) {
    std::vector<std::pair<std::string, RunConfig>> out;
    auto base = [&](ExperimentKind kind) {
        RunConfig cfg;
        cfg.kind = kind;
        cfg.seed = seed;
        cfg.seed_was_set = true;
        return cfg;
    };

    if (name == "fig1c") {
        RunConfig hist = base(ExperimentKind::Geometry);
        hist.geometry_kind = "coupling-stats";
        hist.ensemble.p1_ppm = 50.0;
        hist.ensemble.nv_ppm = 10.0;
        hist.n_samples = 20000;
        out.emplace_back("hist", hist);
        RunConfig curve = base(ExperimentKind::Geometry);
        curve.geometry_kind = "distance-curve";
        curve.ppm_list = {1, 2, 5, 10, 20, 50, 100, 200};
        curve.n_samples = 4000;
        out.emplace_back("curve", curve);
    } else if (name == "fig1e") {
        for (const char* dir : {"up", "down"}) {
            RunConfig cfg = base(ExperimentKind::Sweep);
            cfg.sweep.b_center_mT = 51.2;
            cfg.sweep.delta_b_mT = 2.0;
            cfg.sweep.t_lh_ms = cfg.sweep.delta_b_mT / 0.26;
            cfg.sweep.t_hl_ms = cfg.sweep.t_lh_ms;
            cfg.direction = dir == std::string("up") ? SweepDirection::Up
                                                     : SweepDirection::Down;
            out.emplace_back(dir, cfg);
        }
    } else if (name == "fig1f") {
        for (const double ppm : {10.0, 50.0, 200.0}) {
            RunConfig cfg = base(ExperimentKind::Geometry);
            cfg.geometry_kind = "clusters";
            cfg.ensemble.p1_ppm = ppm;
            cfg.ensemble.nv_ppm = ppm / 5.0;
            cfg.n_realizations = 4000;
            out.emplace_back("p1_" + std::to_string(static_cast<int>(ppm)) + "ppm",
                             cfg);
        }
    } else if (name == "fig3b") {
        RunConfig cfg = base(ExperimentKind::FractionScan);
        cfg.sweep.b_center_mT = 51.2;
        cfg.sweep.delta_b_mT = 6.0;
        cfg.sweep.t_lh_ms = 0.5 * 20.3;
        cfg.sweep.t_hl_ms = 0.5 * 20.3;
        cfg.t_p_ms = 10000.0;
        cfg.t1n_ms = 5000.0;
        cfg.fractions.clear();
        for (int k = 1; k <= 10; ++k)
            cfg.fractions.push_back(static_cast<double>(k) / 11.0);
        out.emplace_back("", cfg);
    } else if (name == "fig3c-fit") {
        RunConfig cfg = base(ExperimentKind::Fit);
        const LZParams canonical;  // 250 kHz, 30 kHz, 15 kHz^2, +13
        for (int i = 0; i < 24; ++i) {
            const double r = 0.02 * std::pow(2.5 / 0.02, i / 23.0);
            cfg.fit_data.rates_mT_per_ms.push_back(r);
            cfg.fit_data.values.push_back(eval(canonical, r));
        }
        cfg.format = "json";
        out.emplace_back("", cfg);
    } else if (name == "fig3d") {
        for (const double dc : {0.4, 1.0, 2.0}) {
            RunConfig cfg = base(ExperimentKind::RateScan);
            cfg.system.trio.d_nv_p1_MHz = 1.0;
            cfg.system.trio.d_nv_c_MHz = dc;
            cfg.sweep.b_center_mT = 51.2;
            cfg.sweep.delta_b_mT = 1.0;
            for (int i = 0; i <= 21; ++i)
                cfg.rates_mT_per_ms.push_back(0.2 *
                                              std::pow(100.0, i / 21.0));
            out.emplace_back("hf" + std::to_string(dc).substr(0, 3), cfg);
        }
    } else if (name == "fig4c") {
        RunConfig cfg = base(ExperimentKind::DnpSpectrum);
        cfg.system.preset = "nv_p1_n14_c13";
        cfg.b_min_mT = 46.0;
        cfg.b_max_mT = 56.0;
        cfg.spectrum_step_mT = 0.01;
        cfg.pump_cycles = 200;
        cfg.tau_evol_us = 10.0;
        out.emplace_back("", cfg);
    } else if (name == "fig4e") {
        for (const char* dir : {"up", "down"}) {
            RunConfig cfg = base(ExperimentKind::RangeScan);
            cfg.system.preset = "nv_p1_n14_c13";
            cfg.direction = dir == std::string("up") ? SweepDirection::Up
                                                     : SweepDirection::Down;
            cfg.b_start_mT = cfg.direction == SweepDirection::Up ? 46.0 : 56.0;
            cfg.ranges_mT = {0, 1.25, 2.5, 3.75, 5, 6.25, 7.5, 8.75, 10};
            cfg.t_slow_ms = 18.45;
            cfg.t_fast_ms = 1.85;
            cfg.range_cycles = 40;
            cfg.step.eps_step = 4e-4;
            out.emplace_back(dir, cfg);
        }
    } else if (name == "fig5d") {
        RunConfig cfg = base(ExperimentKind::MatchingField);
        cfg.theta_min_deg = 0.0;
        cfg.theta_max_deg = 40.0;
        cfg.theta_step_deg = 1.0;
        out.emplace_back("", cfg);
    } else {
        std::string valid;
        for (const auto& n : figure_names()) valid += n + " ";
        throw ConfigError("figure: unknown name '" + name + "' (valid: " + valid +
                          ")");
    }
    return out;
}

// Runs a bundled study and writes its outputs under out_dir.
inline std::vector<std::string> figure_command(const std::string& name,
                                               const std::string& out_dir,
                                               std::uint64_t seed = 424242) {
    std::vector<std::string> written;
    for (auto& [suffix, cfg] : figure_configs(name, seed)) {
        const std::string file =
            name + (suffix.empty() ? "" : "_" + suffix) +
            (cfg.format == "json" ? ".json" : ".csv");
        cfg.output = (std::filesystem::path(out_dir) / file).string();
        const auto env = run(cfg);
        auto files = emit(env, cfg.output, cfg.format);
        written.insert(written.end(), files.begin(), files.end());
    }
    return written;
}

} // namespace dnpr
