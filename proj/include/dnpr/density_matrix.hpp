#pragma once

#include <cmath>
#include <vector>

#include "dnpr/linalg.hpp"
#include "dnpr/spectra.hpp"
#include "dnpr/spin_system.hpp"

namespace dnpr {

// Dimensionless state carrier.  Contract: Hermitian to 1e-9, unit trace to
// 1e-9, eigenvalues >= -1e-9.
struct DensityMatrix {
    Matrix rho;

    Eigen::Index dim() const { return rho.rows(); }

    double trace_defect() const { return std::abs(rho.trace().real() - 1.0); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(rho, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }

    void check_valid(double tol = 1e-9) const {
        if (hermiticity_defect(rho) > tol)
            throw ContractViolation("density matrix: Hermiticity defect");
        if (trace_defect() > tol)
            throw ContractViolation("density matrix: trace deviates from 1");
        if (min_eigenvalue() < -tol)
            throw ContractViolation("density matrix: negative eigenvalue");
    }

    double purity() const { return (rho * rho).trace().real(); }
};

namespace detail {

inline std::vector<int> site_dims(const SpinSystemSpec& spec) {
    std::vector<int> dims;
    dims.reserve(spec.species.size());
    for (const auto& sp : spec.species) dims.push_back(sp.dim());
    return dims;
}

// Splits a product-space index into (site index, complement index) for a
// fixed site; complement indices keep the original site order.
struct SiteIndexer {
    int d_site = 1;
    int d_pre = 1;   // product of dims before the site
    int d_post = 1;  // product of dims after the site

    SiteIndexer(const std::vector<int>& dims, int site) {
        d_site = dims[site];
        for (int k = 0; k < site; ++k) d_pre *= dims[k];
        for (int k = site + 1; k < static_cast<int>(dims.size()); ++k)
            d_post *= dims[k];
    }

    int global(int pre, int s, int post) const {
        return (pre * d_site + s) * d_post + post;
    }
};

} // namespace detail

// Reduced state with one site traced out (complement keeps site order).
inline Matrix trace_out_site(const Matrix& rho, int site,
                             const std::vector<int>& dims) {
    const detail::SiteIndexer ix(dims, site);
    const int d_rest = ix.d_pre * ix.d_post;
    Matrix out = Matrix::Zero(d_rest, d_rest);
    for (int ap = 0; ap < ix.d_pre; ++ap)
        for (int bp = 0; bp < ix.d_pre; ++bp)
            for (int aq = 0; aq < ix.d_post; ++aq)
                for (int bq = 0; bq < ix.d_post; ++bq) {
                    complexd acc(0.0, 0.0);
                    for (int s = 0; s < ix.d_site; ++s)
                        acc += rho(ix.global(ap, s, aq), ix.global(bp, s, bq));
                    out(ap * ix.d_post + aq, bp * ix.d_post + bq) = acc;
                }
    return out;
}

// rho' = (site state) (x) Tr_site(rho), with the site slot re-inserted in place.
inline Matrix replace_site_state(const Matrix& rho, int site,
                                 const std::vector<int>& dims,
                                 const Matrix& site_state) {
    const detail::SiteIndexer ix(dims, site);
    if (site_state.rows() != ix.d_site)
        throw ConfigError("replace_site_state: site state dimension mismatch");
    const Matrix rest = trace_out_site(rho, site, dims);
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (int ap = 0; ap < ix.d_pre; ++ap)
        for (int bp = 0; bp < ix.d_pre; ++bp)
            for (int aq = 0; aq < ix.d_post; ++aq)
                for (int bq = 0; bq < ix.d_post; ++bq) {
                    const complexd r =
                        rest(ap * ix.d_post + aq, bp * ix.d_post + bq);
                    if (r == complexd(0.0, 0.0)) continue;
                    for (int sa = 0; sa < ix.d_site; ++sa)
                        for (int sb = 0; sb < ix.d_site; ++sb)
                            out(ix.global(ap, sa, aq), ix.global(bp, sb, bq)) +=
                                site_state(sa, sb) * r;
                }
    return out;
}

// Optical NV repolarisation: rho' = |0><0|_NV (x) Tr_NV(rho).  Requires the
// site to be a spin-1 electron; |m_s = 0> is the middle basis state.
inline DensityMatrix optical_reset(const DensityMatrix& state,
                                   const SpinSystemSpec& spec, int nv_site = 0) {
    if (nv_site < 0 || nv_site >= static_cast<int>(spec.species.size()))
        throw ConfigError("optical_reset: site index out of range");
    if (spec.species[nv_site].s != 1.0)
        throw ConfigError("optical_reset: reset site is not a spin-1 electron");
    const auto dims = detail::site_dims(spec);
    Matrix p0 = Matrix::Zero(3, 3);
    p0(1, 1) = 1.0;
    return {replace_site_state(state.rho, nv_site, dims, p0)};
}

// Initial protocol state: NV pumped into |0>, every other spin maximally
// mixed.
inline DensityMatrix pumped_initial_state(const SpinSystemSpec& spec,
                                          int nv_site = 0) {
    if (spec.species[nv_site].s != 1.0)
        throw ConfigError("pumped_initial_state: pump site is not spin-1");
    const auto dims = detail::site_dims(spec);
    Matrix rho = Matrix::Identity(1, 1);
    for (int k = 0; k < static_cast<int>(dims.size()); ++k) {
        if (k == nv_site) {
            Matrix p0 = Matrix::Zero(3, 3);
            p0(1, 1) = 1.0;
            rho = kron(rho, p0);
        } else {
            rho = kron(rho, Matrix::Identity(dims[k], dims[k]) /
                                static_cast<double>(dims[k]));
        }
    }
    return {std::move(rho)};
}

// <2 I_z> of a spin-1/2 site, quantised along the applied field direction.
inline double spin_half_polarization(const DensityMatrix& state,
                                     const SpinSystemSpec& spec, int site) {
    if (site < 0 || site >= static_cast<int>(spec.species.size()))
        throw ConfigError("spin_half_polarization: site index out of range");
    if (spec.species[site].s != 0.5)
        throw ConfigError("spin_half_polarization: site is not spin-1/2");
    const auto dims = detail::site_dims(spec);
    const Vector3 bhat = spec.field_direction();
    const auto local = spin_operators(0.5);
    const Matrix iz_local =
        bhat.x() * local.sx + bhat.y() * local.sy + bhat.z() * local.sz;
    const Matrix iz = embed(iz_local, site, dims);
    return 2.0 * (state.rho * iz).trace().real();
}

// Default carbon site: the last spin-1/2 with a nuclear-scale gamma.
inline int find_carbon_site(const SpinSystemSpec& spec) {
    for (int k = static_cast<int>(spec.species.size()) - 1; k >= 0; --k)
        if (spec.species[k].s == 0.5 && std::abs(spec.species[k].gamma) < 1.0)
            return k;
    throw ConfigError("find_carbon_site: no nuclear spin-1/2 site in the system");
}

inline double carbon_polarization(const DensityMatrix& state,
                                  const SpinSystemSpec& spec, int carbon_site = -1) {
    if (carbon_site < 0) carbon_site = find_carbon_site(spec);
    return spin_half_polarization(state, spec, carbon_site);
}

} // namespace dnpr
