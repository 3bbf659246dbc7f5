#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "dnpr/linalg.hpp"
#include "dnpr/numerics.hpp"
#include "dnpr/parallel.hpp"
#include "dnpr/spin_system.hpp"

namespace dnpr {

// --------------------------------------------------------------------------
// Eigenstructure
// --------------------------------------------------------------------------

struct EigenSystem {
    RealVector values;  // ascending, MHz
    Matrix vectors;     // columns, orthonormal, phase-fixed
};

// Dense Hermitian eigensolve with a deterministic phase convention: each
// vector is rotated so its first non-negligible component is real-positive.
inline EigenSystem eigenlevels(const HermitianOperator& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h.entries);
    if (solver.info() != Eigen::Success)
        throw ContractViolation("eigenlevels: eigensolver failed to converge");
    EigenSystem out{solver.eigenvalues(), solver.eigenvectors()};
    for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) {
        const double col_max = out.vectors.col(c).cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < out.vectors.rows(); ++r) {
            const complexd v = out.vectors(r, c);
            if (std::abs(v) > 1e-9 * col_max) {
                out.vectors.col(c) *= std::conj(v) / std::abs(v);
                break;
            }
        }
    }
    return out;
}

inline RealVector eigenvalues_only(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw ContractViolation("eigenvalues: eigensolver failed to converge");
    return solver.eigenvalues();
}

// --------------------------------------------------------------------------
// Level diagrams
// --------------------------------------------------------------------------

struct LevelDiagram {
    std::vector<double> fields_mT;
    Eigen::MatrixXd energies_MHz;      // [field x level], ascending per row
    std::vector<Matrix> vectors;       // per field, optional (empty if not kept)
};

inline LevelDiagram level_diagram(const HamiltonianParts& parts,
                                  std::pair<double, double> b_range, int n_points,
                                  bool keep_vectors = false) {
    if (n_points < 2) throw ConfigError("level_diagram: need at least 2 field points");
    if (!(b_range.second > b_range.first))
        throw ConfigError("level_diagram: empty field range");
    const int d = static_cast<int>(parts.h0.rows());

    LevelDiagram out;
    out.fields_mT.resize(n_points);
    out.energies_MHz.resize(n_points, d);
    if (keep_vectors) out.vectors.resize(n_points);
    const double db = (b_range.second - b_range.first) / (n_points - 1);
    for (int i = 0; i < n_points; ++i)
        out.fields_mT[i] = b_range.first + i * db;

    parallel_for(n_points, [&](int i) {
        const Matrix h = parts.at(out.fields_mT[i]);
        if (keep_vectors) {
            const EigenSystem es = eigenlevels(HermitianOperator(h));
            out.energies_MHz.row(i) = es.values.transpose();
            out.vectors[i] = es.vectors;
        } else {
            out.energies_MHz.row(i) = eigenvalues_only(h).transpose();
        }
    });
    return out;
}

inline LevelDiagram level_diagram(const SpinSystemSpec& spec,
                                  std::pair<double, double> b_range, int n_points,
                                  bool keep_vectors = false) {
    return level_diagram(hamiltonian_parts(spec), b_range, n_points, keep_vectors);
}

// Branch continuation through near-degeneracies: for each consecutive field
// pair, assign branch b at step i+1 to the sorted level with maximal
// |<v_i | v_{i+1}>|.  Returns, per field, the sorted-level index carrying
// each branch.  Requires a diagram built with keep_vectors.
inline std::vector<std::vector<int>> track_branches(const LevelDiagram& dia) {
    if (dia.vectors.empty())
        throw ConfigError("track_branches: diagram has no eigenvectors");
    const int n = static_cast<int>(dia.fields_mT.size());
    const int d = static_cast<int>(dia.energies_MHz.cols());
    std::vector<std::vector<int>> branch_to_level(n, std::vector<int>(d));
    for (int b = 0; b < d; ++b) branch_to_level[0][b] = b;
    for (int i = 1; i < n; ++i) {
        const Matrix overlap = dia.vectors[i - 1].adjoint() * dia.vectors[i];
        std::vector<bool> taken(d, false);
        for (int b = 0; b < d; ++b) {
            const int prev = branch_to_level[i - 1][b];
            int best = -1;
            double best_ov = -1.0;
            for (int l = 0; l < d; ++l) {
                if (taken[l]) continue;
                const double ov = std::abs(overlap(prev, l));
                if (ov > best_ov) {
                    best_ov = ov;
                    best = l;
                }
            }
            branch_to_level[i][b] = best;
            taken[best] = true;
        }
    }
    return branch_to_level;
}

// --------------------------------------------------------------------------
// Avoided-crossing detection
// --------------------------------------------------------------------------

struct CrossingEntry {
    double b_mT = 0.0;
    double gap_MHz = 0.0;
    int level_lo = 0;
    int level_hi = 0;
};

struct CrossingReport {
    std::vector<CrossingEntry> entries;

    // Smallest gap in the report (the inner-branch crossing in the
    // avoided-crossing window) and the smallest among the other level pairs.
    std::optional<CrossingEntry> delta1() const {
        std::optional<CrossingEntry> best;
        for (const auto& e : entries)
            if (!best || e.gap_MHz < best->gap_MHz) best = e;
        return best;
    }
    std::optional<CrossingEntry> delta0() const {
        const auto d1 = delta1();
        if (!d1) return std::nullopt;
        std::optional<CrossingEntry> best;
        for (const auto& e : entries) {
            if (e.level_lo == d1->level_lo && e.level_hi == d1->level_hi) continue;
            if (!best || e.gap_MHz < best->gap_MHz) best = e;
        }
        return best;
    }
};

struct CrossingScanOptions {
    double coarse_step_mT = 0.005;           // must be <= 0.01
    double refine_tol_mT = 1e-4;
    std::vector<std::pair<int, int>> level_pairs;  // empty: all adjacent pairs
};

// Local minima of pairwise sorted-eigenvalue gaps over a field range,
// refined by bracketed golden-section minimisation.
inline CrossingReport find_crossings(const HamiltonianParts& parts,
                                     std::pair<double, double> b_range,
                                     const CrossingScanOptions& opt = {}) {
    if (opt.coarse_step_mT > 0.01 + 1e-15)
        throw ConfigError("find_crossings: coarse scan step must be <= 0.01 mT");
    if (!(b_range.second > b_range.first))
        throw ConfigError("find_crossings: empty field range");
    const int d = static_cast<int>(parts.h0.rows());

    std::vector<std::pair<int, int>> pairs = opt.level_pairs;
    if (pairs.empty())
        for (int k = 0; k + 1 < d; ++k) pairs.emplace_back(k, k + 1);
    for (const auto& [lo, hi] : pairs)
        if (lo < 0 || hi >= d || lo >= hi)
            throw ConfigError("find_crossings: invalid level pair");

    const int n =
        std::max(3, static_cast<int>(std::ceil((b_range.second - b_range.first) /
                                               opt.coarse_step_mT)) +
                        1);
    std::vector<double> fields(n);
    const double db = (b_range.second - b_range.first) / (n - 1);
    for (int i = 0; i < n; ++i) fields[i] = b_range.first + i * db;

    Eigen::MatrixXd energies(n, d);
    parallel_for(n, [&](int i) {
        energies.row(i) = eigenvalues_only(parts.at(fields[i])).transpose();
    });

    auto gap_at = [&](int lo, int hi, double b) {
        const RealVector ev = eigenvalues_only(parts.at(b));
        return ev[hi] - ev[lo];
    };

    CrossingReport report;
    for (const auto& [lo, hi] : pairs) {
        for (int i = 1; i + 1 < n; ++i) {
            const double gm = energies(i, hi) - energies(i, lo);
            const double gl = energies(i - 1, hi) - energies(i - 1, lo);
            const double gr = energies(i + 1, hi) - energies(i + 1, lo);
            if (gm < gl && gm <= gr) {
                const double b_min = golden_section_min(
                    [&](double b) { return gap_at(lo, hi, b); }, fields[i - 1],
                    fields[i + 1], opt.refine_tol_mT);
                report.entries.push_back({b_min, gap_at(lo, hi, b_min), lo, hi});
            }
        }
    }
    std::sort(report.entries.begin(), report.entries.end(),
              [](const CrossingEntry& a, const CrossingEntry& b) {
                  if (a.b_mT != b.b_mT) return a.b_mT < b.b_mT;
                  return a.level_lo < b.level_lo;
              });
    return report;
}

inline CrossingReport find_crossings(const SpinSystemSpec& spec,
                                     std::pair<double, double> b_range,
                                     const CrossingScanOptions& opt = {}) {
    return find_crossings(hamiltonian_parts(spec), b_range, opt);
}

// --------------------------------------------------------------------------
// Matching field
// --------------------------------------------------------------------------

struct MatchingFieldOptions {
    double b_min_mT = 1.0;
    double b_max_mT = 250.0;
    double tol_mT = 1e-3;
    std::optional<SpinSystemSpec> nv_override;  // defaults to the bare NV
};

// Field where the NV |0> <-> |-1> transition energy equals the bare P1
// Zeeman splitting |gamma_e| B.  The two lowest NV branches are the ones
// adiabatically connected to |0> and |-1> below the high-field crossover.
inline double matching_field(double theta_deg, const MatchingFieldOptions& opt = {}) {
    if (theta_deg < 0.0 || theta_deg > 50.0)
        throw ConfigError("matching_field: theta outside [0, 50] degrees");
    SpinSystemSpec nv =
        opt.nv_override ? *opt.nv_override : make_lone_nv(theta_deg);
    nv.theta_deg = theta_deg;
    const auto parts = hamiltonian_parts(nv);
    const double abs_gamma_e = std::abs(constants::kGammaElectron);

    auto f = [&](double b) {
        const RealVector ev = eigenvalues_only(parts.at(b));
        return (ev[1] - ev[0]) - abs_gamma_e * b;
    };
    if (f(opt.b_min_mT) * f(opt.b_max_mT) > 0.0)
        throw NoMatchingField("matching_field: no sign change on [" +
                              std::to_string(opt.b_min_mT) + ", " +
                              std::to_string(opt.b_max_mT) + "] mT");
    return bisect_root(f, opt.b_min_mT, opt.b_max_mT, opt.tol_mT);
}

} // namespace dnpr
