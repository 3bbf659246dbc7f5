#pragma once

#include <Eigen/Dense>
#include <complex>

#include "dnpr/errors.hpp"

namespace dnpr {

using complexd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;

// Largest absolute entry; zero for empty matrices.
inline double max_abs(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const Matrix& m) {
    return max_abs(m - m.adjoint());
}

inline bool is_hermitian(const Matrix& m, double rel_tol = 1e-9) {
    const double scale = max_abs(m);
    return hermiticity_defect(m) <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

// Kronecker product, row-major convention: (A ⊗ B)(i_a*rB+i_b, j_a*cB+j_b).
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Dense complex matrix carrying energies in MHz.  Hermitian by contract:
// ||H - H^dag||_max <= 1e-9 ||H||_max.
struct HermitianOperator {
    Matrix entries;

    HermitianOperator() = default;
    explicit HermitianOperator(Matrix m) : entries(std::move(m)) {
        if (entries.rows() != entries.cols())
            throw ContractViolation("HermitianOperator: matrix not square");
        if (!is_hermitian(entries))
            throw ContractViolation("HermitianOperator: Hermiticity defect exceeds 1e-9");
    }

    Eigen::Index dim() const { return entries.rows(); }
};

} // namespace dnpr
