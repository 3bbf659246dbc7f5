#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnpr/dynamics.hpp"
#include "dnpr/errors.hpp"
#include "dnpr/geometry.hpp"
#include "dnpr/lz_model.hpp"
#include "dnpr/spin_system.hpp"

namespace dnpr {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// --------------------------------------------------------------------------
// Strict reader: every key must be consumed; unknown keys are rejected with
// their path and the nearest valid key.
// --------------------------------------------------------------------------

namespace detail {

inline int levenshtein(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace detail

class StrictReader {
public:
    StrictReader(const json& node, std::string path)
        : node_(node), path_(std::move(path)) {
        if (!node_.is_object())
            throw ConfigError(path_ + ": expected an object");
    }

    ~StrictReader() noexcept(false) {
        if (std::uncaught_exceptions() == 0) finish();
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        known_.insert(key);
        return node_.contains(key);
    }

    template <typename T>
    T require(const std::string& key) {
        known_.insert(key);
        seen_.insert(key);
        if (!node_.contains(key))
            throw ConfigError(path_ + ": missing required key '" + key + "'");
        return get<T>(key);
    }

    template <typename T>
    T value(const std::string& key, T fallback) {
        known_.insert(key);
        seen_.insert(key);
        if (!node_.contains(key)) return fallback;
        return get<T>(key);
    }

    template <typename T>
    std::optional<T> optional(const std::string& key) {
        known_.insert(key);
        seen_.insert(key);
        if (!node_.contains(key)) return std::nullopt;
        return get<T>(key);
    }

    const json& raw(const std::string& key) {
        known_.insert(key);
        seen_.insert(key);
        if (!node_.contains(key))
            throw ConfigError(path_ + ": missing required key '" + key + "'");
        return node_.at(key);
    }

    // Marks a key as recognised without reading it (for alternatives).
    void accept(const std::string& key) {
        known_.insert(key);
        seen_.insert(key);
    }

    void finish() {
        if (finished_) return;
        finished_ = true;
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (seen_.count(it.key())) continue;
            std::string best;
            int best_d = 1 << 20;
            for (const auto& k : known_) {
                const int d = detail::levenshtein(it.key(), k);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            std::string msg = path_ + ": unknown key '" + it.key() + "'";
            if (!best.empty()) msg += " (nearest valid key: '" + best + "')";
            throw ConfigError(msg);
        }
    }

    const std::string& path() const { return path_; }

private:
    template <typename T>
    T get(const std::string& key) {
        try {
            return node_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong value type");
        }
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
    std::set<std::string> known_;
    bool finished_ = false;
};

// --------------------------------------------------------------------------
// Experiment kinds
// --------------------------------------------------------------------------

enum class ExperimentKind {
    Levels,
    Crossings,
    MatchingField,
    Sweep,
    RateScan,
    FractionScan,
    DnpSpectrum,
    RangeScan,
    Geometry,
    Fit,
    Thermal,
};

inline const std::vector<std::pair<std::string, ExperimentKind>>&
experiment_names() {
    static const std::vector<std::pair<std::string, ExperimentKind>> names = {
        {"levels", ExperimentKind::Levels},
        {"crossings", ExperimentKind::Crossings},
        {"matching-field", ExperimentKind::MatchingField},
        {"sweep", ExperimentKind::Sweep},
        {"rate-scan", ExperimentKind::RateScan},
        {"fraction-scan", ExperimentKind::FractionScan},
        {"dnp-spectrum", ExperimentKind::DnpSpectrum},
        {"range-scan", ExperimentKind::RangeScan},
        {"geometry", ExperimentKind::Geometry},
        {"fit", ExperimentKind::Fit},
        {"thermal", ExperimentKind::Thermal},
    };
    return names;
}

inline std::string to_string(ExperimentKind kind) {
    for (const auto& [name, k] : experiment_names())
        if (k == kind) return name;
    return "?";
}

inline ExperimentKind experiment_from_string(const std::string& name) {
    for (const auto& [n, k] : experiment_names())
        if (n == name) return k;
    std::string valid;
    for (const auto& [n, k] : experiment_names()) valid += n + " ";
    throw ConfigError("experiment: unknown kind '" + name + "' (valid: " + valid +
                      ")");
}

// --------------------------------------------------------------------------
// Section configs
// --------------------------------------------------------------------------

struct SystemConfig {
    std::string preset = "nv_p1_c13";
    TrioOptions trio;
    QuartetOptions quartet;
    json custom;  // explicit species/couplings, kept verbatim

    SpinSystemSpec build() const;
    json to_json() const;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    ExperimentKind kind = ExperimentKind::Levels;
    std::uint64_t seed = 0;
    bool seed_was_set = false;
    std::string output;
    std::string format = "csv";

    SystemConfig system;
    StepControl step;

    // levels / crossings
    double b_min_mT = 50.8;
    double b_max_mT = 51.6;
    int n_points = 201;
    double coarse_step_mT = 0.005;
    std::vector<std::pair<int, int>> level_pairs;

    // matching-field
    double theta_min_deg = 0.0;
    double theta_max_deg = 40.0;
    double theta_step_deg = 1.0;

    // sweep / rate scan / fraction scan
    FieldSweepSpec sweep;
    SweepDirection direction = SweepDirection::Up;
    std::vector<double> rates_mT_per_ms;
    int jitter_n = 10;
    double jitter_span_us = 120.0;
    std::vector<double> fractions;
    double t_p_ms = 10000.0;
    std::optional<double> t1n_ms = 5000.0;
    double p_sat = 1.0;
    bool pulse_gated = false;
    double injection_scale = 1.0;

    // dnp spectrum
    double spectrum_step_mT = 0.01;
    int pump_cycles = 200;
    double tau_evol_us = 10.0;

    // range scan
    double b_start_mT = 46.0;
    std::vector<double> ranges_mT;
    double t_slow_ms = 18.45;
    double t_fast_ms = 1.85;
    int range_cycles = 40;

    // geometry
    std::string geometry_kind = "nn-stats";
    DefectEnsembleSpec ensemble;
    long n_samples = 10000;
    long n_realizations = 2000;
    ClusterRule cluster_rule;
    std::vector<double> ppm_list;
    double p1_to_nv_ratio = 5.0;

    // fit
    RateCurve fit_data;
    std::string fit_input_path;
    std::optional<LZParams> fit_init;
    int multistart = 24;

    // thermal
    double field_T = 9.0;
    double temperature_K = 300.0;
    double gamma_MHz_per_T = 10.708;
    std::optional<double> enh_epsilon;
    double enh_fill_fraction = 0.02;
    double enh_t_dnp_s = 15.0;
    double enh_t_thermal_s = 1800.0;

    json to_json() const;
    std::string canonical_text() const { return to_json().dump(2); }
};

// --------------------------------------------------------------------------
// System section
// --------------------------------------------------------------------------

inline SpinSystemSpec build_custom_system(const json& node);

inline SpinSystemSpec SystemConfig::build() const {
    if (preset == "nv_p1_c13") return make_trio(trio);
    if (preset == "nv_p1_n14_c13") {
        QuartetOptions q = quartet;
        q.trio = trio;
        return make_quartet(q);
    }
    if (preset == "nv") return make_lone_nv(trio.theta_deg);
    if (preset == "p1") return make_lone_p1(trio.theta_deg);
    if (preset == "custom") return build_custom_system(custom);
    throw ConfigError("system.preset: unknown preset '" + preset +
                      "' (valid: nv_p1_c13 nv_p1_n14_c13 nv p1 custom)");
}

inline json SystemConfig::to_json() const {
    json j;
    j["preset"] = preset;
    if (preset == "custom") {
        j["custom"] = custom;
        return j;
    }
    j["theta_deg"] = trio.theta_deg;
    j["phi_deg"] = trio.phi_deg;
    if (preset == "nv_p1_c13" || preset == "nv_p1_n14_c13") {
        j["d_nv_p1_MHz"] = trio.d_nv_p1_MHz;
        j["d_nv_c_MHz"] = trio.d_nv_c_MHz;
        j["nv_p1_polar_deg"] = trio.nv_p1_polar_deg;
        j["nv_c_polar_deg"] = trio.nv_c_polar_deg;
    }
    if (preset == "nv_p1_n14_c13") {
        j["a_par_MHz"] = quartet.a_par_MHz;
        j["a_perp_MHz"] = quartet.a_perp_MHz;
    }
    return j;
}

inline SpinSystemSpec build_custom_system(const json& node) {
    StrictReader r(node, "system.custom");
    SpinSystemSpec spec;
    spec.theta_deg = r.value<double>("theta_deg", 0.0);
    spec.phi_deg = r.value<double>("phi_deg", 0.0);
    const json species = r.raw("species");
    if (!species.is_array() || species.empty())
        throw ConfigError("system.custom.species: expected a non-empty array");
    for (size_t i = 0; i < species.size(); ++i) {
        StrictReader sr(species[i],
                        "system.custom.species[" + std::to_string(i) + "]");
        SpinSpecies sp;
        sp.label = sr.value<std::string>("label", "spin" + std::to_string(i));
        sp.s = sr.require<double>("s");
        sp.gamma = sr.require<double>("gamma_MHz_per_mT");
        sp.zero_field = sr.value<double>("zero_field_MHz", 0.0);
        if (sr.has("axis")) {
            const auto v = sr.raw("axis").get<std::vector<double>>();
            if (v.size() != 3)
                throw ConfigError(sr.path() + ".axis: expected 3 components");
            sp.axis = Vector3(v[0], v[1], v[2]);
        }
        sr.finish();
        spec.species.push_back(sp);
    }
    if (node.contains("couplings")) {
        const json couplings = r.raw("couplings");
        for (size_t i = 0; i < couplings.size(); ++i) {
            StrictReader cr(couplings[i],
                            "system.custom.couplings[" + std::to_string(i) + "]");
            CouplingSpec c;
            c.site_i = cr.require<int>("site_i");
            c.site_j = cr.require<int>("site_j");
            if (cr.has("tensor_MHz")) {
                const auto v = cr.raw("tensor_MHz").get<std::vector<double>>();
                if (v.size() != 9)
                    throw ConfigError(cr.path() +
                                      ".tensor_MHz: expected 9 row-major entries");
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) c.tensor(a, b) = v[3 * a + b];
            } else if (cr.has("scalar_MHz")) {
                const double d = cr.raw("scalar_MHz").get<double>();
                const double polar = cr.value<double>("polar_deg", 45.0);
                const double azimuth = cr.value<double>("azimuth_deg", 0.0);
                c.tensor = scalar_coupling_tensor(d, polar, azimuth);
            } else {
                throw ConfigError(cr.path() + ": need tensor_MHz or scalar_MHz");
            }
            cr.finish();
            spec.couplings.push_back(c);
        }
    } else {
        r.accept("couplings");
    }
    r.finish();
    validate(spec);
    return spec;
}

inline SystemConfig parse_system(const json& node) {
    StrictReader r(node, "system");
    SystemConfig cfg;
    cfg.preset = r.value<std::string>("preset", "nv_p1_c13");
    if (cfg.preset == "custom") {
        cfg.custom = r.raw("custom");
        r.finish();
        cfg.build();  // validates
        return cfg;
    }
    cfg.trio.theta_deg = r.value<double>("theta_deg", 0.0);
    cfg.trio.phi_deg = r.value<double>("phi_deg", 0.0);
    cfg.trio.d_nv_p1_MHz = r.value<double>("d_nv_p1_MHz", 0.5);
    cfg.trio.d_nv_c_MHz = r.value<double>("d_nv_c_MHz", 0.92);
    cfg.trio.nv_p1_polar_deg =
        r.value<double>("nv_p1_polar_deg", kDefaultNvP1PolarDeg);
    cfg.trio.nv_c_polar_deg =
        r.value<double>("nv_c_polar_deg", kDefaultNvC13PolarDeg);
    cfg.quartet.a_par_MHz =
        r.value<double>("a_par_MHz", constants::kP1N14AParMHz);
    cfg.quartet.a_perp_MHz =
        r.value<double>("a_perp_MHz", constants::kP1N14APerpMHz);
    r.finish();
    if (cfg.trio.theta_deg < 0.0 || cfg.trio.theta_deg > 90.0)
        throw ConfigError("system.theta_deg: value " +
                          std::to_string(cfg.trio.theta_deg) +
                          " outside [0, 90] degrees");
    cfg.build();
    return cfg;
}

// --------------------------------------------------------------------------
// Full config parse
// --------------------------------------------------------------------------

inline std::pair<int, int> line_column_of(const std::string& text,
                                          size_t byte_offset) {
    int line = 1, col = 1;
    for (size_t i = 0; i < std::min(byte_offset, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column_of(text, e.byte);
        throw ConfigError("config parse error at line " + std::to_string(line) +
                          ", column " + std::to_string(col) + ": " + e.what());
    }

    StrictReader r(root, "config");
    RunConfig cfg;
    cfg.schema_version = r.require<int>("schema_version");
    if (cfg.schema_version != kSchemaVersion)
        throw ConfigError("schema_version: expected " +
                          std::to_string(kSchemaVersion) + ", got " +
                          std::to_string(cfg.schema_version));
    cfg.kind = experiment_from_string(r.require<std::string>("experiment"));
    if (const auto seed = r.optional<std::uint64_t>("seed")) {
        cfg.seed = *seed;
        cfg.seed_was_set = true;
    }
    cfg.output = r.value<std::string>("output", "");
    cfg.format = r.value<std::string>("format", "csv");
    if (cfg.format != "csv" && cfg.format != "json")
        throw ConfigError("format: expected 'csv' or 'json'");

    if (r.has("system")) cfg.system = parse_system(r.raw("system"));

    if (r.has("step")) {
        StrictReader sr(r.raw("step"), "step");
        cfg.step.eps_step = sr.value<double>("eps_step", cfg.step.eps_step);
        cfg.step.max_phase_rad =
            sr.value<double>("max_phase_rad", cfg.step.max_phase_rad);
        cfg.step.min_dt_ms = sr.value<double>("min_dt_ms", cfg.step.min_dt_ms);
        sr.finish();
        if (!(cfg.step.eps_step > 0.0))
            throw ConfigError("step.eps_step: must be positive");
    }

    const std::string section = to_string(cfg.kind);
    switch (cfg.kind) {
        case ExperimentKind::Levels:
        case ExperimentKind::Crossings: {
            StrictReader s(r.raw(section), section);
            cfg.b_min_mT = s.value<double>("b_min_mT", cfg.b_min_mT);
            cfg.b_max_mT = s.value<double>("b_max_mT", cfg.b_max_mT);
            if (cfg.kind == ExperimentKind::Levels)
                cfg.n_points = s.value<int>("n_points", cfg.n_points);
            else {
                cfg.coarse_step_mT =
                    s.value<double>("coarse_step_mT", cfg.coarse_step_mT);
                if (s.has("level_pairs")) {
                    for (const auto& p : s.raw("level_pairs")) {
                        const auto v = p.get<std::vector<int>>();
                        if (v.size() != 2)
                            throw ConfigError(
                                "crossings.level_pairs: entries are [lo, hi]");
                        cfg.level_pairs.emplace_back(v[0], v[1]);
                    }
                }
            }
            s.finish();
            if (!(cfg.b_max_mT > cfg.b_min_mT))
                throw ConfigError(section + ": b_max_mT must exceed b_min_mT");
            break;
        }
        case ExperimentKind::MatchingField: {
            StrictReader s(r.raw(section), section);
            cfg.theta_min_deg = s.value<double>("theta_min_deg", 0.0);
            cfg.theta_max_deg = s.value<double>("theta_max_deg", 40.0);
            cfg.theta_step_deg = s.value<double>("theta_step_deg", 1.0);
            s.finish();
            if (cfg.theta_min_deg < 0.0 || cfg.theta_max_deg > 50.0 ||
                cfg.theta_max_deg < cfg.theta_min_deg)
                throw ConfigError(
                    "matching-field: theta range must lie inside [0, 50] degrees");
            if (!(cfg.theta_step_deg > 0.0))
                throw ConfigError("matching-field.theta_step_deg: must be positive");
            break;
        }
        case ExperimentKind::Sweep:
        case ExperimentKind::RateScan:
        case ExperimentKind::FractionScan:
        case ExperimentKind::RangeScan: {
            if (r.has(section)) {
                StrictReader s(r.raw(section), section);
                cfg.sweep.b_center_mT =
                    s.value<double>("b_center_mT", cfg.sweep.b_center_mT);
                cfg.sweep.delta_b_mT =
                    s.value<double>("delta_b_mT", cfg.sweep.delta_b_mT);
                cfg.sweep.t_lh_ms = s.value<double>("t_lh_ms", cfg.sweep.t_lh_ms);
                cfg.sweep.t_hl_ms = s.value<double>("t_hl_ms", cfg.sweep.t_hl_ms);
                const std::string dir = s.value<std::string>("direction", "up");
                if (dir != "up" && dir != "down")
                    throw ConfigError(section + ".direction: expected up or down");
                cfg.direction =
                    dir == "up" ? SweepDirection::Up : SweepDirection::Down;
                if (cfg.kind == ExperimentKind::RateScan) {
                    if (s.has("rates_mT_per_ms"))
                        cfg.rates_mT_per_ms =
                            s.raw("rates_mT_per_ms").get<std::vector<double>>();
                    else {
                        const double lo = s.value<double>("rate_min_mT_per_ms", 0.2);
                        const double hi = s.value<double>("rate_max_mT_per_ms", 20.0);
                        const int n = s.value<int>("n_rates", 22);
                        if (!(hi > lo) || lo <= 0.0 || n < 2)
                            throw ConfigError("rate-scan: invalid rate grid");
                        for (int i = 0; i < n; ++i)
                            cfg.rates_mT_per_ms.push_back(
                                lo * std::pow(hi / lo,
                                              static_cast<double>(i) / (n - 1)));
                    }
                    cfg.jitter_n = s.value<int>("jitter_n", cfg.jitter_n);
                    cfg.jitter_span_us =
                        s.value<double>("jitter_span_us", cfg.jitter_span_us);
                }
                if (cfg.kind == ExperimentKind::FractionScan) {
                    if (s.has("fractions"))
                        cfg.fractions = s.raw("fractions").get<std::vector<double>>();
                    cfg.t_p_ms = s.value<double>("t_p_ms", cfg.t_p_ms);
                    if (s.has("t1n_ms")) cfg.t1n_ms = s.raw("t1n_ms").get<double>();
                    cfg.p_sat = s.value<double>("p_sat", cfg.p_sat);
                    cfg.pulse_gated = s.value<bool>("pulse_gated", false);
                    cfg.injection_scale =
                        s.value<double>("injection_scale", cfg.injection_scale);
                }
                if (cfg.kind == ExperimentKind::RangeScan) {
                    cfg.b_start_mT = s.value<double>("b_start_mT", cfg.b_start_mT);
                    if (s.has("ranges_mT"))
                        cfg.ranges_mT = s.raw("ranges_mT").get<std::vector<double>>();
                    cfg.t_slow_ms = s.value<double>("t_slow_ms", cfg.t_slow_ms);
                    cfg.t_fast_ms = s.value<double>("t_fast_ms", cfg.t_fast_ms);
                    cfg.range_cycles = s.value<int>("n_cycles", cfg.range_cycles);
                }
                s.finish();
            }
            if (cfg.fractions.empty())
                for (int k = 1; k <= 10; ++k)
                    cfg.fractions.push_back(static_cast<double>(k) / 11.0);
            if (cfg.ranges_mT.empty())
                for (int k = 0; k <= 10; ++k) cfg.ranges_mT.push_back(k * 1.0);
            break;
        }
        case ExperimentKind::DnpSpectrum: {
            StrictReader s(r.raw(section), section);
            cfg.b_min_mT = s.value<double>("b_min_mT", 46.0);
            cfg.b_max_mT = s.value<double>("b_max_mT", 56.0);
            cfg.spectrum_step_mT = s.value<double>("step_mT", cfg.spectrum_step_mT);
            cfg.pump_cycles = s.value<int>("pump_cycles", cfg.pump_cycles);
            cfg.tau_evol_us = s.value<double>("tau_evol_us", cfg.tau_evol_us);
            s.finish();
            if (!(cfg.b_max_mT > cfg.b_min_mT) || !(cfg.spectrum_step_mT > 0.0))
                throw ConfigError("dnp-spectrum: invalid field grid");
            break;
        }
        case ExperimentKind::Geometry: {
            StrictReader s(r.raw(section), section);
            cfg.geometry_kind = s.value<std::string>("kind", "nn-stats");
            cfg.ensemble.p1_ppm = s.value<double>("p1_ppm", 50.0);
            cfg.ensemble.nv_ppm = s.value<double>("nv_ppm", 10.0);
            cfg.ensemble.box_edge_nm = s.value<double>("box_edge_nm", 0.0);
            const std::string placement =
                s.value<std::string>("placement", "continuum");
            if (placement == "continuum")
                cfg.ensemble.placement = Placement::Continuum;
            else if (placement == "lattice")
                cfg.ensemble.placement = Placement::Lattice;
            else
                throw ConfigError("geometry.placement: continuum or lattice");
            cfg.n_samples = s.value<long>("n_samples", cfg.n_samples);
            cfg.n_realizations = s.value<long>("n_realizations", cfg.n_realizations);
            cfg.cluster_rule.threshold_fraction =
                s.value<double>("threshold_fraction", 0.5);
            cfg.cluster_rule.nv_p1_pairs_only =
                s.value<bool>("nv_p1_pairs_only", false);
            if (s.has("ppm_list"))
                cfg.ppm_list = s.raw("ppm_list").get<std::vector<double>>();
            cfg.p1_to_nv_ratio = s.value<double>("p1_to_nv_ratio", 5.0);
            s.finish();
            const std::set<std::string> kinds = {"nn-stats", "coupling-stats",
                                                 "clusters", "distance-curve"};
            if (!kinds.count(cfg.geometry_kind))
                throw ConfigError(
                    "geometry.kind: expected nn-stats, coupling-stats, clusters "
                    "or distance-curve");
            if (cfg.ppm_list.empty()) cfg.ppm_list = {1, 2, 5, 10, 20, 50, 100, 200};
            break;
        }
        case ExperimentKind::Fit: {
            StrictReader s(r.raw(section), section);
            if (s.has("input_csv")) {
                cfg.fit_input_path = s.raw("input_csv").get<std::string>();
            } else {
                cfg.fit_data.rates_mT_per_ms =
                    s.require<std::vector<double>>("rates_mT_per_ms");
                cfg.fit_data.values = s.require<std::vector<double>>("amplitudes");
                if (s.has("sigmas"))
                    cfg.fit_data.sigmas = s.raw("sigmas").get<std::vector<double>>();
            }
            cfg.multistart = s.value<int>("multistart", cfg.multistart);
            if (s.has("init")) {
                StrictReader ir(s.raw("init"), "fit.init");
                LZParams p;
                p.delta0_kHz = ir.require<double>("delta0_kHz");
                p.delta1_kHz = ir.require<double>("delta1_kHz");
                p.k_kHz2 = ir.require<double>("k_kHz2");
                p.p_m = ir.require<double>("p_m");
                ir.finish();
                validate(p);
                cfg.fit_init = p;
            }
            s.finish();
            if (cfg.fit_input_path.empty()) cfg.fit_data.check();
            break;
        }
        case ExperimentKind::Thermal: {
            StrictReader s(r.raw(section), section);
            cfg.field_T = s.value<double>("field_T", cfg.field_T);
            cfg.temperature_K = s.value<double>("temperature_K", cfg.temperature_K);
            cfg.gamma_MHz_per_T =
                s.value<double>("gamma_MHz_per_T", cfg.gamma_MHz_per_T);
            if (s.has("enhancement")) {
                StrictReader er(s.raw("enhancement"), "thermal.enhancement");
                cfg.enh_epsilon = er.require<double>("epsilon");
                cfg.enh_fill_fraction = er.value<double>("fill_fraction", 0.02);
                cfg.enh_t_dnp_s = er.value<double>("t_dnp_s", 15.0);
                cfg.enh_t_thermal_s = er.value<double>("t_thermal_s", 1800.0);
                er.finish();
                if (!(cfg.enh_fill_fraction > 0.0) || cfg.enh_fill_fraction > 1.0)
                    throw ConfigError(
                        "thermal.enhancement.fill_fraction: must be in (0, 1]");
            }
            s.finish();
            if (cfg.field_T < 0.0 || !(cfg.temperature_K > 0.0))
                throw ConfigError("thermal: field must be >= 0 and temperature > 0");
            break;
        }
    }
    r.finish();
    return cfg;
}

// --------------------------------------------------------------------------
// Canonical serialisation (echo) -- parse(canonical_text()) == *this
// --------------------------------------------------------------------------

inline json RunConfig::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["experiment"] = dnpr::to_string(kind);
    if (seed_was_set) j["seed"] = seed;
    if (!output.empty()) j["output"] = output;
    j["format"] = format;
    j["system"] = system.to_json();
    j["step"] = {{"eps_step", step.eps_step},
                 {"max_phase_rad", step.max_phase_rad},
                 {"min_dt_ms", step.min_dt_ms}};

    json s;
    switch (kind) {
        case ExperimentKind::Levels:
            s = {{"b_min_mT", b_min_mT}, {"b_max_mT", b_max_mT},
                 {"n_points", n_points}};
            break;
        case ExperimentKind::Crossings: {
            s = {{"b_min_mT", b_min_mT},
                 {"b_max_mT", b_max_mT},
                 {"coarse_step_mT", coarse_step_mT}};
            if (!level_pairs.empty()) {
                json pairs = json::array();
                for (const auto& [lo, hi] : level_pairs)
                    pairs.push_back(json::array({lo, hi}));
                s["level_pairs"] = pairs;
            }
            break;
        }
        case ExperimentKind::MatchingField:
            s = {{"theta_min_deg", theta_min_deg},
                 {"theta_max_deg", theta_max_deg},
                 {"theta_step_deg", theta_step_deg}};
            break;
        case ExperimentKind::Sweep:
        case ExperimentKind::RateScan:
        case ExperimentKind::FractionScan:
        case ExperimentKind::RangeScan: {
            s = {{"b_center_mT", sweep.b_center_mT},
                 {"delta_b_mT", sweep.delta_b_mT},
                 {"t_lh_ms", sweep.t_lh_ms},
                 {"t_hl_ms", sweep.t_hl_ms},
                 {"direction",
                  direction == SweepDirection::Up ? "up" : "down"}};
            if (kind == ExperimentKind::RateScan) {
                s["rates_mT_per_ms"] = rates_mT_per_ms;
                s["jitter_n"] = jitter_n;
                s["jitter_span_us"] = jitter_span_us;
            }
            if (kind == ExperimentKind::FractionScan) {
                s["fractions"] = fractions;
                s["t_p_ms"] = t_p_ms;
                if (t1n_ms) s["t1n_ms"] = *t1n_ms;
                s["p_sat"] = p_sat;
                s["pulse_gated"] = pulse_gated;
                s["injection_scale"] = injection_scale;
            }
            if (kind == ExperimentKind::RangeScan) {
                s["b_start_mT"] = b_start_mT;
                s["ranges_mT"] = ranges_mT;
                s["t_slow_ms"] = t_slow_ms;
                s["t_fast_ms"] = t_fast_ms;
                s["n_cycles"] = range_cycles;
            }
            break;
        }
        case ExperimentKind::DnpSpectrum:
            s = {{"b_min_mT", b_min_mT},
                 {"b_max_mT", b_max_mT},
                 {"step_mT", spectrum_step_mT},
                 {"pump_cycles", pump_cycles},
                 {"tau_evol_us", tau_evol_us}};
            break;
        case ExperimentKind::Geometry: {
            s = {{"kind", geometry_kind},
                 {"p1_ppm", ensemble.p1_ppm},
                 {"nv_ppm", ensemble.nv_ppm},
                 {"placement", ensemble.placement == Placement::Continuum
                                   ? "continuum"
                                   : "lattice"},
                 {"n_samples", n_samples},
                 {"n_realizations", n_realizations},
                 {"threshold_fraction", cluster_rule.threshold_fraction},
                 {"nv_p1_pairs_only", cluster_rule.nv_p1_pairs_only},
                 {"ppm_list", ppm_list},
                 {"p1_to_nv_ratio", p1_to_nv_ratio}};
            if (ensemble.box_edge_nm > 0.0) s["box_edge_nm"] = ensemble.box_edge_nm;
            break;
        }
        case ExperimentKind::Fit: {
            if (!fit_input_path.empty()) {
                s["input_csv"] = fit_input_path;
            } else {
                s["rates_mT_per_ms"] = fit_data.rates_mT_per_ms;
                s["amplitudes"] = fit_data.values;
                if (!fit_data.sigmas.empty()) s["sigmas"] = fit_data.sigmas;
            }
            s["multistart"] = multistart;
            if (fit_init)
                s["init"] = {{"delta0_kHz", fit_init->delta0_kHz},
                             {"delta1_kHz", fit_init->delta1_kHz},
                             {"k_kHz2", fit_init->k_kHz2},
                             {"p_m", fit_init->p_m}};
            break;
        }
        case ExperimentKind::Thermal: {
            s = {{"field_T", field_T},
                 {"temperature_K", temperature_K},
                 {"gamma_MHz_per_T", gamma_MHz_per_T}};
            if (enh_epsilon)
                s["enhancement"] = {{"epsilon", *enh_epsilon},
                                    {"fill_fraction", enh_fill_fraction},
                                    {"t_dnp_s", enh_t_dnp_s},
                                    {"t_thermal_s", enh_t_thermal_s}};
            break;
        }
    }
    j[dnpr::to_string(kind)] = s;
    return j;
}

// FNV-1a over the canonical config bytes.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace dnpr
