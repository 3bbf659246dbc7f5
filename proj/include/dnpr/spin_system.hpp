#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dnpr/constants.hpp"
#include "dnpr/errors.hpp"
#include "dnpr/linalg.hpp"

namespace dnpr {

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

// --------------------------------------------------------------------------
// Domain types
// --------------------------------------------------------------------------

// One spin site.  gamma is the signed cyclic gyromagnetic ratio in MHz/mT
// (negative for electrons); the Zeeman term enters as -gamma B (Bhat . S),
// so the NV |m_s=-1> branch descends with B.  zero_field adds
// D_zf (axis . S)^2 in the species frame.
struct SpinSpecies {
    std::string label;
    double s = 0.5;                    // 1/2 or 1
    double gamma = 0.0;                // MHz / mT, signed
    double zero_field = 0.0;           // MHz
    Vector3 axis = Vector3(0, 0, 1);   // species frame axis for axial terms

    int dim() const { return static_cast<int>(std::lround(2.0 * s + 1.0)); }
};

// Bilinear coupling S_i . A . S_j between two sites, MHz.
struct CouplingSpec {
    int site_i = 0;
    int site_j = 0;
    Matrix3 tensor = Matrix3::Zero();
};

struct SpinSystemSpec {
    std::vector<SpinSpecies> species;
    std::vector<CouplingSpec> couplings;
    double theta_deg = 0.0;  // polar angle between B and the NV axis
    double phi_deg = 0.0;

    int dim() const {
        int d = 1;
        for (const auto& sp : species) d *= sp.dim();
        return d;
    }

    Vector3 field_direction() const {
        const double th = deg_to_rad(theta_deg);
        const double ph = deg_to_rad(phi_deg);
        return Vector3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                       std::cos(th));
    }
};

inline void validate(const SpinSystemSpec& spec) {
    if (spec.species.empty())
        throw ConfigError("spin system: species list is empty");
    for (const auto& sp : spec.species) {
        if (sp.s != 0.5 && sp.s != 1.0)
            throw ConfigError("spin system: unsupported spin quantum number for '" +
                              sp.label + "' (expected 1/2 or 1)");
        if (!std::isfinite(sp.gamma))
            throw ConfigError("spin system: non-finite gamma for '" + sp.label + "'");
        if (sp.axis.norm() == 0.0)
            throw ConfigError("spin system: zero axis for '" + sp.label + "'");
    }
    if (spec.dim() > 256)
        throw ConfigError("spin system: Hilbert dimension " +
                          std::to_string(spec.dim()) + " exceeds the 256 limit");
    if (spec.theta_deg < 0.0 || spec.theta_deg > 90.0)
        throw ConfigError("spin system: theta " + std::to_string(spec.theta_deg) +
                          " outside [0, 90] degrees");
    const int n = static_cast<int>(spec.species.size());
    for (const auto& c : spec.couplings) {
        if (c.site_i == c.site_j || c.site_i < 0 || c.site_j < 0 || c.site_i >= n ||
            c.site_j >= n)
            throw ConfigError("spin system: coupling site indices invalid");
        if (!c.tensor.allFinite())
            throw ConfigError("spin system: coupling tensor has non-finite entries");
    }
}

// --------------------------------------------------------------------------
// Spin operators
// --------------------------------------------------------------------------

struct SpinOperators {
    Matrix sx, sy, sz;
};

// Standard angular-momentum matrices for s = 1/2 or 1.
inline SpinOperators spin_operators(double s) {
    const complexd i(0.0, 1.0);
    SpinOperators ops;
    if (s == 0.5) {
        ops.sx = Matrix::Zero(2, 2);
        ops.sx << 0.0, 0.5, 0.5, 0.0;
        ops.sy = Matrix::Zero(2, 2);
        ops.sy << 0.0, -0.5 * i, 0.5 * i, 0.0;
        ops.sz = Matrix::Zero(2, 2);
        ops.sz << 0.5, 0.0, 0.0, -0.5;
    } else if (s == 1.0) {
        const double r = 1.0 / std::sqrt(2.0);
        ops.sx = Matrix::Zero(3, 3);
        ops.sx << 0, r, 0, r, 0, r, 0, r, 0;
        ops.sy = Matrix::Zero(3, 3);
        ops.sy << 0.0 * i, -r * i, 0.0 * i, r * i, 0.0 * i, -r * i, 0.0 * i, r * i,
            0.0 * i;
        ops.sz = Matrix::Zero(3, 3);
        ops.sz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
    } else {
        throw ConfigError("spin_operators: unsupported spin quantum number");
    }
    return ops;
}

// Embed a single-site operator into the product space (identity elsewhere).
inline Matrix embed(const Matrix& op, int site, const std::vector<int>& dims) {
    if (site < 0 || site >= static_cast<int>(dims.size()))
        throw ConfigError("embed: site index out of range");
    if (op.rows() != dims[site] || op.cols() != dims[site])
        throw ConfigError("embed: operator dimension does not match site dimension");
    Matrix out = Matrix::Identity(1, 1);
    for (int k = 0; k < static_cast<int>(dims.size()); ++k) {
        if (k == site)
            out = kron(out, op);
        else
            out = kron(out, Matrix::Identity(dims[k], dims[k]));
    }
    return out;
}

// Embedded (Sx, Sy, Sz) for every site of a spec, in site order.
inline std::vector<SpinOperators> site_operators(const SpinSystemSpec& spec) {
    std::vector<int> dims;
    dims.reserve(spec.species.size());
    for (const auto& sp : spec.species) dims.push_back(sp.dim());
    std::vector<SpinOperators> out;
    out.reserve(spec.species.size());
    for (int k = 0; k < static_cast<int>(spec.species.size()); ++k) {
        const SpinOperators local = spin_operators(spec.species[k].s);
        out.push_back({embed(local.sx, k, dims), embed(local.sy, k, dims),
                       embed(local.sz, k, dims)});
    }
    return out;
}

// --------------------------------------------------------------------------
// Coupling tensors
// --------------------------------------------------------------------------

// Point-dipole tensor T = (C12 / r^3)(1 - 3 n n^T) in MHz for a pair
// displacement in nm.  C12 carries the signed product of the gyromagnetic
// ratios; for two electrons |C| = 52.04 MHz nm^3.
inline Matrix3 dipolar_tensor(const Vector3& r_nm, double gamma1_MHz_per_mT,
                              double gamma2_MHz_per_mT) {
    const double r = r_nm.norm();
    if (r <= 0.15)
        throw DegenerateGeometry("dipolar_tensor: pair distance below 0.15 nm");
    const Vector3 n = r_nm / r;
    const double c12 =
        constants::dipole_prefactor_MHz_nm3(gamma1_MHz_per_mT, gamma2_MHz_per_mT);
    return (c12 / (r * r * r)) * (Matrix3::Identity() - 3.0 * n * n.transpose());
}

// Preset: expand a quoted scalar coupling D into a point-dipole tensor with
// the pair axis at (polar, azimuth) in the NV frame, scaled so |T_zz| = D.
// Undefined at the magic angle where T_zz vanishes.
inline Matrix3 scalar_coupling_tensor(double d_MHz, double polar_deg,
                                      double azimuth_deg = 0.0) {
    const double th = deg_to_rad(polar_deg);
    const double ph = deg_to_rad(azimuth_deg);
    const Vector3 n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                    std::cos(th));
    const double zz = 1.0 - 3.0 * n.z() * n.z();
    if (std::abs(zz) < 1e-6)
        throw DegenerateGeometry(
            "scalar_coupling_tensor: zz element vanishes at the magic angle");
    const double scale = d_MHz / std::abs(zz);
    return scale * (Matrix3::Identity() - 3.0 * n * n.transpose());
}

// Axial tensor a_perp (1 - n n^T) + a_par n n^T about a unit axis.
inline Matrix3 axial_tensor(double a_perp_MHz, double a_par_MHz,
                            const Vector3& axis = Vector3(0, 0, 1)) {
    const Vector3 n = axis.normalized();
    return a_perp_MHz * (Matrix3::Identity() - n * n.transpose()) +
           a_par_MHz * n * n.transpose();
}

// --------------------------------------------------------------------------
// Hamiltonian assembly
// --------------------------------------------------------------------------

// Affine decomposition H(B) = h0 + B * hb, both in MHz (hb in MHz/mT).
struct HamiltonianParts {
    Matrix h0;
    Matrix hb;

    Matrix at(double b_mT) const { return h0 + b_mT * hb; }
};

inline HamiltonianParts hamiltonian_parts(const SpinSystemSpec& spec) {
    validate(spec);
    const auto ops = site_operators(spec);
    const int d = spec.dim();
    const Vector3 bhat = spec.field_direction();

    Matrix h0 = Matrix::Zero(d, d);
    Matrix hb = Matrix::Zero(d, d);

    for (int k = 0; k < static_cast<int>(spec.species.size()); ++k) {
        const auto& sp = spec.species[k];
        if (sp.zero_field != 0.0) {
            const Vector3 n = sp.axis.normalized();
            const Matrix sn =
                n.x() * ops[k].sx + n.y() * ops[k].sy + n.z() * ops[k].sz;
            h0 += sp.zero_field * sn * sn;
        }
        const Matrix sb =
            bhat.x() * ops[k].sx + bhat.y() * ops[k].sy + bhat.z() * ops[k].sz;
        hb += -sp.gamma * sb;
    }

    for (const auto& c : spec.couplings) {
        const std::array<const Matrix*, 3> si = {&ops[c.site_i].sx, &ops[c.site_i].sy,
                                                 &ops[c.site_i].sz};
        const std::array<const Matrix*, 3> sj = {&ops[c.site_j].sx, &ops[c.site_j].sy,
                                                 &ops[c.site_j].sz};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (c.tensor(a, b) != 0.0) h0 += c.tensor(a, b) * (*si[a]) * (*sj[b]);
    }

    return {std::move(h0), std::move(hb)};
}

inline HermitianOperator build_hamiltonian(const SpinSystemSpec& spec, double b_mT) {
    if (b_mT < 0.0) throw ConfigError("build_hamiltonian: negative field magnitude");
    const auto parts = hamiltonian_parts(spec);
    Matrix h = parts.at(b_mT);
    h = 0.5 * (h + Matrix(h.adjoint()));  // scrub rounding asymmetry
    return HermitianOperator(std::move(h));
}

// --------------------------------------------------------------------------
// Species and cluster presets
// --------------------------------------------------------------------------

inline SpinSpecies nv_species() {
    return {"NV", 1.0, constants::kGammaElectron, constants::kNvZeroFieldMHz};
}

inline SpinSpecies p1_species() {
    return {"P1", 0.5, constants::kGammaElectron, 0.0};
}

inline SpinSpecies c13_species() { return {"13C", 0.5, constants::kGammaC13, 0.0}; }

inline SpinSpecies n14_species(const std::string& label = "14N") {
    return {label, 1.0, constants::kGammaN14, 0.0};
}

// Default pair-axis polar angles for the scalar-coupling presets.  These
// place the sweep-relevant gaps in the tens-to-hundreds of kHz decade for
// the quoted couplings, so mT/ms sweeps straddle the partly non-adiabatic
// regime.
inline constexpr double kDefaultNvP1PolarDeg = 26.0;
inline constexpr double kDefaultNvC13PolarDeg = 70.0;

struct TrioOptions {
    double d_nv_p1_MHz = 0.5;
    double d_nv_c_MHz = 0.92;
    double nv_p1_polar_deg = kDefaultNvP1PolarDeg;
    double nv_c_polar_deg = kDefaultNvC13PolarDeg;
    double theta_deg = 0.0;
    double phi_deg = 0.0;
};

// NV - P1 - 13C cluster (dim 12); carbon bound to the NV.
inline SpinSystemSpec make_trio(const TrioOptions& opt = {}) {
    SpinSystemSpec spec;
    spec.species = {nv_species(), p1_species(), c13_species()};
    spec.couplings = {
        {0, 1, scalar_coupling_tensor(opt.d_nv_p1_MHz, opt.nv_p1_polar_deg)},
        {0, 2, scalar_coupling_tensor(opt.d_nv_c_MHz, opt.nv_c_polar_deg)}};
    spec.theta_deg = opt.theta_deg;
    spec.phi_deg = opt.phi_deg;
    return spec;
}

struct QuartetOptions {
    TrioOptions trio;
    double a_par_MHz = constants::kP1N14AParMHz;
    double a_perp_MHz = constants::kP1N14APerpMHz;
    Vector3 p1_n14_axis = Vector3(0, 0, 1);
};

// NV - P1 - 14N(P1) - 13C cluster (dim 36).
inline SpinSystemSpec make_quartet(const QuartetOptions& opt = {}) {
    SpinSystemSpec spec;
    spec.species = {nv_species(), p1_species(), n14_species("14N(P1)"),
                    c13_species()};
    spec.couplings = {
        {0, 1, scalar_coupling_tensor(opt.trio.d_nv_p1_MHz, opt.trio.nv_p1_polar_deg)},
        {0, 3, scalar_coupling_tensor(opt.trio.d_nv_c_MHz, opt.trio.nv_c_polar_deg)},
        {1, 2, axial_tensor(opt.a_perp_MHz, opt.a_par_MHz, opt.p1_n14_axis)}};
    spec.theta_deg = opt.trio.theta_deg;
    spec.phi_deg = opt.trio.phi_deg;
    return spec;
}

inline SpinSystemSpec make_lone_nv(double theta_deg = 0.0) {
    SpinSystemSpec spec;
    spec.species = {nv_species()};
    spec.theta_deg = theta_deg;
    return spec;
}

inline SpinSystemSpec make_lone_p1(double theta_deg = 0.0) {
    SpinSystemSpec spec;
    spec.species = {p1_species()};
    spec.theta_deg = theta_deg;
    return spec;
}

} // namespace dnpr
