#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dnpr/constants.hpp"
#include "dnpr/errors.hpp"
#include "dnpr/linalg.hpp"
#include "dnpr/parallel.hpp"
#include "dnpr/rng.hpp"

namespace dnpr {

enum class Placement { Continuum, Lattice };

// Monte Carlo defect ensemble in a periodic cube.  The box edge is either
// given directly or derived from target_nv_count and the NV density.
struct DefectEnsembleSpec {
    double p1_ppm = 50.0;
    double nv_ppm = 10.0;
    double box_edge_nm = 0.0;  // 0: derive from target_nv_count
    long target_nv_count = 2000;
    Placement placement = Placement::Continuum;
    std::uint64_t seed = 1;

    double p1_density() const { return constants::ppm_to_density_per_nm3(p1_ppm); }
    double nv_density() const { return constants::ppm_to_density_per_nm3(nv_ppm); }

    double edge() const {
        if (box_edge_nm > 0.0) return box_edge_nm;
        return std::cbrt(static_cast<double>(target_nv_count) / nv_density());
    }
};

inline void validate(const DefectEnsembleSpec& spec) {
    if (!(spec.p1_ppm > 0.0) || !(spec.nv_ppm > 0.0))
        throw ConfigError("defect ensemble: ppm values must be positive");
    const double edge = spec.edge();
    const double expected =
        (spec.p1_density() + spec.nv_density()) * edge * edge * edge;
    if (expected < 2.0)
        throw ConfigError("defect ensemble: box too small for at least 2 defects");
    if (expected > 2e6)
        throw ConfigError("defect ensemble: expected defect count above 2e6");
}

struct DefectSample {
    std::vector<Vector3> nv_positions;
    std::vector<Vector3> p1_positions;
    double box_edge_nm = 0.0;
};

// Minimum-image displacement in the periodic cube.
inline double min_image_distance(const Vector3& a, const Vector3& b, double edge) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        double d = std::abs(a[k] - b[k]);
        if (d > 0.5 * edge) d = edge - d;
        d2 += d * d;
    }
    return std::sqrt(d2);
}

// Poisson counts, uniform placement; deterministic for a given seed.  The
// lattice option snaps positions to the cubic grid matching the diamond
// carbon number density.
inline DefectSample sample_ensemble(const DefectEnsembleSpec& spec,
                                    std::uint64_t seed) {
    validate(spec);
    const double edge = spec.edge();
    const double volume = edge * edge * edge;
    std::mt19937_64 rng(splitmix64(seed));

    DefectSample out;
    out.box_edge_nm = edge;
    const long n_nv = poisson(rng, spec.nv_density() * volume);
    const long n_p1 = poisson(rng, spec.p1_density() * volume);
    const double pitch = std::cbrt(1.0 / constants::kCarbonDensityPerNm3);

    auto draw = [&](std::vector<Vector3>& dst, long n) {
        dst.reserve(n);
        for (long i = 0; i < n; ++i) {
            Vector3 r(uniform(rng, 0.0, edge), uniform(rng, 0.0, edge),
                      uniform(rng, 0.0, edge));
            if (spec.placement == Placement::Lattice)
                for (int k = 0; k < 3; ++k)
                    r[k] = std::min(std::floor(r[k] / pitch) * pitch, edge);
            dst.push_back(r);
        }
    };
    draw(out.nv_positions, n_nv);
    draw(out.p1_positions, n_p1);
    return out;
}

// --------------------------------------------------------------------------
// Nearest-neighbour and coupling statistics
// --------------------------------------------------------------------------

struct Histogram {
    double bin_width = 0.0;
    double lo = 0.0;
    std::vector<double> density;  // normalised so sum(density)*bin_width = 1

    double hi() const { return lo + bin_width * static_cast<double>(density.size()); }
};

struct DistanceStats {
    std::vector<double> distances_nm;  // NV -> nearest P1
    double mean_nm = 0.0;
    double stderr_nm = 0.0;
    Histogram histogram;
};

inline Histogram make_histogram(const std::vector<double>& xs, double bin_width) {
    Histogram h;
    h.bin_width = bin_width;
    h.lo = 0.0;
    if (xs.empty()) return h;
    const double max_x = *std::max_element(xs.begin(), xs.end());
    const int n_bins = static_cast<int>(std::ceil(max_x / bin_width)) + 1;
    h.density.assign(n_bins, 0.0);
    for (double x : xs) {
        const int b = std::min(n_bins - 1, static_cast<int>(x / bin_width));
        h.density[b] += 1.0;
    }
    const double norm = bin_width * static_cast<double>(xs.size());
    for (double& d : h.density) d /= norm;
    return h;
}

// Distance from each NV to its nearest P1 under the minimum-image metric.
inline DistanceStats nn_distance_stats(const DefectEnsembleSpec& spec,
                                       long n_samples,
                                       double bin_width_nm = 0.2) {
    if (n_samples < 1000)
        throw ConfigError("nn_distance_stats: need at least 1e3 NV samples");
    if (bin_width_nm > 0.2)
        throw ConfigError("nn_distance_stats: bin width must be <= 0.2 nm");

    DefectEnsembleSpec sized = spec;
    if (sized.box_edge_nm <= 0.0) sized.target_nv_count = n_samples;

    DistanceStats out;
    out.distances_nm.reserve(n_samples);
    std::uint64_t realization = 0;
    while (static_cast<long>(out.distances_nm.size()) < n_samples) {
        const auto sample =
            sample_ensemble(sized, derive_seed(spec.seed, realization++));
        if (sample.p1_positions.empty()) continue;
        for (const auto& nv : sample.nv_positions) {
            double best = 1e300;
            for (const auto& p1 : sample.p1_positions)
                best = std::min(best,
                                min_image_distance(nv, p1, sample.box_edge_nm));
            out.distances_nm.push_back(best);
            if (static_cast<long>(out.distances_nm.size()) >= n_samples) break;
        }
    }

    const double n = static_cast<double>(out.distances_nm.size());
    const double sum = std::accumulate(out.distances_nm.begin(),
                                       out.distances_nm.end(), 0.0);
    out.mean_nm = sum / n;
    double var = 0.0;
    for (double d : out.distances_nm) var += (d - out.mean_nm) * (d - out.mean_nm);
    out.stderr_nm = std::sqrt(var / (n * (n - 1.0)));
    out.histogram = make_histogram(out.distances_nm, bin_width_nm);
    return out;
}

// Closed-form mean nearest-neighbour distance of a Poisson process,
// Gamma(4/3) (4 pi rho / 3)^(-1/3).
inline double poisson_nn_mean_nm(double density_per_nm3) {
    return std::tgamma(4.0 / 3.0) *
           std::pow(4.0 * kPi * density_per_nm3 / 3.0, -1.0 / 3.0);
}

inline double poisson_nn_cdf(double d_nm, double density_per_nm3) {
    return 1.0 - std::exp(-4.0 * kPi * density_per_nm3 * d_nm * d_nm * d_nm / 3.0);
}

struct CouplingStats {
    double mean_MHz = 0.0;
    double median_MHz = 0.0;
    Histogram log10_histogram;  // over log10(|J| / MHz)
};

// |J| = C_ee / r^3 at the nearest-P1 distances (angular factor dropped for
// the magnitude statistic).
inline CouplingStats coupling_stats(const DefectEnsembleSpec& spec,
                                    long n_samples) {
    const auto dist = nn_distance_stats(spec, n_samples);
    const double cee = std::abs(constants::kCee);
    std::vector<double> j;
    j.reserve(dist.distances_nm.size());
    for (double d : dist.distances_nm) j.push_back(cee / (d * d * d));

    CouplingStats out;
    out.mean_MHz = std::accumulate(j.begin(), j.end(), 0.0) /
                   static_cast<double>(j.size());
    std::vector<double> sorted = j;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                     sorted.end());
    out.median_MHz = sorted[sorted.size() / 2];

    std::vector<double> logs;
    logs.reserve(j.size());
    double min_log = 1e300;
    for (double v : j) {
        logs.push_back(std::log10(v));
        min_log = std::min(min_log, logs.back());
    }
    for (double& v : logs) v -= min_log;
    out.log10_histogram = make_histogram(logs, 0.1);
    out.log10_histogram.lo = min_log;
    return out;
}

// --------------------------------------------------------------------------
// Cluster-size distribution
// --------------------------------------------------------------------------

struct ClusterRule {
    double threshold_fraction = 0.5;  // |J_d|/2 rule
    bool nv_p1_pairs_only = false;    // count only NV-P1 pair energies
};

inline void validate(const ClusterRule& rule) {
    if (!(rule.threshold_fraction > 0.0) || rule.threshold_fraction > 1.0)
        throw ConfigError("cluster rule: threshold fraction must be in (0, 1]");
}

struct ClusterDistribution {
    std::vector<double> pmf;  // pmf[n] for n = 0.., mass at n >= 2
    double first_moment = 0.0;
    long realizations = 0;
};

namespace detail {

struct Electron {
    Vector3 pos;
    bool is_nv;
};

// Grow one cluster: seed with the centre-most NV and its strongest-coupled
// P1 (coupling magnitude J_d, fixed at seeding), then add any electron spin
// coupled to a current member above threshold_fraction * J_d.
inline int cluster_size_once(const DefectSample& sample, const ClusterRule& rule) {
    const double edge = sample.box_edge_nm;
    std::vector<Electron> spins;
    spins.reserve(sample.nv_positions.size() + sample.p1_positions.size());
    for (const auto& r : sample.nv_positions) spins.push_back({r, true});
    for (const auto& r : sample.p1_positions) spins.push_back({r, false});

    // centre-most NV: stable against count fluctuations, away from wrap seams
    const Vector3 centre(edge / 2, edge / 2, edge / 2);
    int seed_nv = -1;
    double best_d = 1e300;
    for (int i = 0; i < static_cast<int>(spins.size()); ++i) {
        if (!spins[i].is_nv) continue;
        const double d = (spins[i].pos - centre).norm();
        if (d < best_d) {
            best_d = d;
            seed_nv = i;
        }
    }
    if (seed_nv < 0) return 0;

    auto coupling = [&](int i, int j) {
        const double r = min_image_distance(spins[i].pos, spins[j].pos, edge);
        const double r_eff = std::max(r, 0.15);  // lattice-spacing floor
        return std::abs(constants::kCee) / (r_eff * r_eff * r_eff);
    };

    int seed_p1 = -1;
    double j_d = -1.0;
    for (int i = 0; i < static_cast<int>(spins.size()); ++i) {
        if (spins[i].is_nv) continue;
        const double c = coupling(seed_nv, i);
        if (c > j_d) {
            j_d = c;
            seed_p1 = i;
        }
    }
    if (seed_p1 < 0) return 0;

    const double threshold = rule.threshold_fraction * j_d;
    std::vector<bool> in_cluster(spins.size(), false);
    in_cluster[seed_nv] = in_cluster[seed_p1] = true;
    std::vector<int> frontier = {seed_nv, seed_p1};
    int size = 2;
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int member : frontier) {
            for (int cand = 0; cand < static_cast<int>(spins.size()); ++cand) {
                if (in_cluster[cand]) continue;
                if (rule.nv_p1_pairs_only &&
                    spins[cand].is_nv == spins[member].is_nv)
                    continue;
                if (coupling(member, cand) > threshold) {
                    in_cluster[cand] = true;
                    next.push_back(cand);
                    ++size;
                }
            }
        }
        frontier.swap(next);
    }
    return size;
}

} // namespace detail

// Cluster-size pmf over independent realizations; per-realization seeds are
// derived from (master seed, index), so aggregation is order-independent.
inline ClusterDistribution cluster_distribution(const DefectEnsembleSpec& spec,
                                                const ClusterRule& rule,
                                                long n_realizations) {
    validate(rule);
    if (n_realizations < 1000)
        throw ConfigError("cluster_distribution: need at least 1e3 realizations");
    DefectEnsembleSpec sized = spec;
    if (sized.box_edge_nm <= 0.0)
        sized.box_edge_nm =
            std::cbrt(300.0 / (sized.p1_density() + sized.nv_density()));

    std::vector<int> sizes(n_realizations, 0);
    parallel_for(static_cast<int>(n_realizations), [&](int i) {
        std::uint64_t attempt = 0;
        for (;;) {
            const auto sample = sample_ensemble(
                sized, derive_seed(spec.seed, (attempt++ << 32) | static_cast<std::uint64_t>(i)));
            if (sample.nv_positions.empty() || sample.p1_positions.empty())
                continue;
            sizes[i] = detail::cluster_size_once(sample, rule);
            return;
        }
    });

    const int max_n = *std::max_element(sizes.begin(), sizes.end());
    ClusterDistribution out;
    out.pmf.assign(max_n + 1, 0.0);
    for (int s : sizes) out.pmf[s] += 1.0;
    for (double& p : out.pmf) p /= static_cast<double>(n_realizations);
    for (int n = 0; n <= max_n; ++n) out.first_moment += n * out.pmf[n];
    out.realizations = n_realizations;
    return out;
}

// --------------------------------------------------------------------------
// Mean distance versus concentration
// --------------------------------------------------------------------------

struct ConcentrationPoint {
    double ppm = 0.0;
    double mean_d_nm = 0.0;
    double stderr_nm = 0.0;
};

inline std::vector<ConcentrationPoint> mean_distance_vs_concentration(
    const std::vector<double>& p1_ppm_list, double p1_to_nv_ratio = 5.0,
    long n_samples = 2000, std::uint64_t seed = 1) {
    if (p1_ppm_list.empty())
        throw ConfigError("mean_distance_vs_concentration: empty ppm list");
    for (size_t i = 0; i < p1_ppm_list.size(); ++i) {
        if (!(p1_ppm_list[i] > 0.0))
            throw ConfigError("mean_distance_vs_concentration: ppm must be positive");
        if (i > 0 && !(p1_ppm_list[i] > p1_ppm_list[i - 1]))
            throw ConfigError("mean_distance_vs_concentration: ppm must ascend");
    }
    std::vector<ConcentrationPoint> out(p1_ppm_list.size());
    parallel_for(static_cast<int>(p1_ppm_list.size()), [&](int i) {
        DefectEnsembleSpec spec;
        spec.p1_ppm = p1_ppm_list[i];
        spec.nv_ppm = p1_ppm_list[i] / p1_to_nv_ratio;
        spec.seed = derive_seed(seed, i);
        spec.target_nv_count = n_samples;
        const auto stats = nn_distance_stats(spec, n_samples);
        out[i] = {p1_ppm_list[i], stats.mean_nm, stats.stderr_nm};
    });
    return out;
}

} // namespace dnpr
