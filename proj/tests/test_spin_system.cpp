#include <catch2/catch_amalgamated.hpp>

#include "dnpr/spectra.hpp"
#include "dnpr/spin_system.hpp"

using namespace dnpr;
using Catch::Approx;

namespace {

double commutator_defect(const Matrix& a, const Matrix& b, const Matrix& c) {
    const complexd i(0.0, 1.0);
    return max_abs(a * b - b * a - i * c);
}

} // namespace

TEST_CASE("spin operators: defining representations") {
    const auto half = spin_operators(0.5);
    CHECK(half.sz(0, 0).real() == Approx(0.5));
    CHECK(half.sz(1, 1).real() == Approx(-0.5));
    CHECK(max_abs(half.sz - half.sz.adjoint()) == 0.0);

    const auto one = spin_operators(1.0);
    CHECK(one.sz(0, 0).real() == Approx(1.0));
    CHECK(one.sz(1, 1).real() == Approx(0.0));
    CHECK(one.sz(2, 2).real() == Approx(-1.0));
    CHECK(one.sx(0, 1).real() == Approx(1.0 / std::sqrt(2.0)));
    CHECK(one.sx(1, 2).real() == Approx(1.0 / std::sqrt(2.0)));

    CHECK_THROWS_AS(spin_operators(1.5), ConfigError);
}

TEST_CASE("spin operators: angular momentum algebra") {
    for (const double s : {0.5, 1.0}) {
        const auto ops = spin_operators(s);
        CHECK(commutator_defect(ops.sx, ops.sy, ops.sz) < 1e-12);
        CHECK(commutator_defect(ops.sy, ops.sz, ops.sx) < 1e-12);
        CHECK(commutator_defect(ops.sz, ops.sx, ops.sy) < 1e-12);
        // Casimir s(s+1) on the identity
        const Matrix s2 = ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz;
        CHECK(max_abs(s2 - s * (s + 1.0) * Matrix::Identity(s2.rows(), s2.cols())) <
              1e-12);
    }
}

TEST_CASE("embed: identity, trace factorisation, disjoint supports") {
    const std::vector<int> dims = {3, 2, 2};
    const Matrix id3 = Matrix::Identity(3, 3);
    CHECK(max_abs(embed(id3, 0, dims) - Matrix::Identity(12, 12)) == 0.0);

    const auto one = spin_operators(1.0);
    const auto half = spin_operators(0.5);
    const Matrix a = embed(one.sz + 2.0 * one.sx, 0, dims);
    CHECK(a.trace().real() ==
          Approx((one.sz + 2.0 * one.sx).trace().real() * 4.0).margin(1e-12));

    const Matrix b = embed(half.sy, 1, dims);
    CHECK(max_abs(a * b - b * a) < 1e-12);

    CHECK_THROWS_AS(embed(id3, 1, dims), ConfigError);
    CHECK_THROWS_AS(embed(id3, 5, dims), ConfigError);
}

TEST_CASE("dipolar tensor: electron pair values") {
    const double ge = constants::kGammaElectron;

    const Matrix3 t1 = dipolar_tensor(Vector3(0, 0, 1), ge, ge);
    CHECK(t1(2, 2) == Approx(-104.08).margin(0.05));
    CHECK(t1(0, 0) == Approx(52.04).margin(0.03));
    CHECK(t1(1, 1) == Approx(52.04).margin(0.03));
    CHECK(std::abs(t1.trace()) <= 1e-9 * t1.cwiseAbs().maxCoeff());

    const Matrix3 t48 = dipolar_tensor(Vector3(0, 0, 4.8), ge, ge);
    CHECK(std::abs(t48(2, 2)) == Approx(0.94).margin(0.01));

    // arbitrary orientation stays traceless
    const Matrix3 t = dipolar_tensor(Vector3(1.3, -0.4, 2.2), ge, constants::kGammaC13);
    CHECK(std::abs(t.trace()) <= 1e-9 * t.cwiseAbs().maxCoeff());

    CHECK_THROWS_AS(dipolar_tensor(Vector3(0, 0, 0.1), ge, ge), DegenerateGeometry);
}

TEST_CASE("scalar coupling preset: zz magnitude and magic angle") {
    const Matrix3 t = scalar_coupling_tensor(0.5, 45.0);
    CHECK(std::abs(t(2, 2)) == Approx(0.5).margin(1e-12));
    CHECK(std::abs(t.trace()) < 1e-12);

    const Matrix3 t70 = scalar_coupling_tensor(0.92, 70.0);
    CHECK(std::abs(t70(2, 2)) == Approx(0.92).margin(1e-12));

    CHECK_THROWS_AS(scalar_coupling_tensor(1.0, 54.7356), DegenerateGeometry);
}

TEST_CASE("hamiltonian: lone NV at theta=0 is exactly diagonal") {
    const auto spec = make_lone_nv(0.0);
    const double b = 30.0;
    const auto h = build_hamiltonian(spec, b);
    const double ge = std::abs(constants::kGammaElectron);
    const double delta = constants::kNvZeroFieldMHz;

    // product basis |+1>, |0>, |-1>
    CHECK(h.entries(0, 0).real() == Approx(delta + ge * b).margin(1e-9));
    CHECK(h.entries(1, 1).real() == Approx(0.0).margin(1e-9));
    CHECK(h.entries(2, 2).real() == Approx(delta - ge * b).margin(1e-9));
    CHECK(max_abs(h.entries - Matrix(h.entries.diagonal().asDiagonal())) < 1e-12);
}

TEST_CASE("hamiltonian: lone P1 splitting") {
    const auto spec = make_lone_p1(0.0);
    const double b = 51.21;
    const auto ev = eigenlevels(build_hamiltonian(spec, b)).values;
    const double split = ev[1] - ev[0];
    CHECK(split == Approx(std::abs(constants::kGammaElectron) * b).margin(1e-9));
    CHECK(split == Approx(1435.2).margin(0.2));
}

TEST_CASE("hamiltonian: entries affine in B") {
    const auto spec = make_trio({.theta_deg = 13.0});
    const double b1 = 40.0, b2 = 47.0, b3 = 61.0;
    const Matrix h1 = build_hamiltonian(spec, b1).entries;
    const Matrix h2 = build_hamiltonian(spec, b2).entries;
    const Matrix h3 = build_hamiltonian(spec, b3).entries;
    const Matrix lhs = h3 - h1;
    const Matrix rhs = ((b3 - b1) / (b2 - b1)) * (h2 - h1);
    CHECK(max_abs(lhs - rhs) <= 1e-9 * max_abs(h3));
}

TEST_CASE("hamiltonian: theta=0 with couplings zeroed is diagonal") {
    auto spec = make_trio();
    spec.couplings.clear();
    const Matrix h = build_hamiltonian(spec, 51.2).entries;
    CHECK(max_abs(h - Matrix(h.diagonal().asDiagonal())) < 1e-12);
}

TEST_CASE("hamiltonian: tilting the field equals counter-tilting the NV frame") {
    const double theta = 25.0;
    const auto tilted_field = make_lone_nv(theta);

    SpinSystemSpec tilted_frame;
    SpinSpecies nv = nv_species();
    nv.axis = Vector3(-std::sin(deg_to_rad(theta)), 0.0, std::cos(deg_to_rad(theta)));
    tilted_frame.species = {nv};
    tilted_frame.theta_deg = 0.0;

    for (const double b : {10.0, 51.2, 80.0}) {
        const auto ev_a = eigenlevels(build_hamiltonian(tilted_field, b)).values;
        const auto ev_b = eigenlevels(build_hamiltonian(tilted_frame, b)).values;
        CHECK((ev_a - ev_b).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("hamiltonian: validation failures") {
    auto spec = make_trio();
    spec.theta_deg = 95.0;
    CHECK_THROWS_AS(build_hamiltonian(spec, 51.2), ConfigError);

    spec = make_trio();
    CHECK_THROWS_AS(build_hamiltonian(spec, -1.0), ConfigError);

    spec = make_trio();
    spec.couplings[0].site_j = 7;
    CHECK_THROWS_AS(build_hamiltonian(spec, 51.2), ConfigError);

    // dimension cap: five spin-1 sites exceed 256
    SpinSystemSpec big;
    for (int k = 0; k < 6; ++k) big.species.push_back(n14_species());
    CHECK_THROWS_AS(build_hamiltonian(big, 1.0), ConfigError);
}

TEST_CASE("hamiltonian: reproducible bit for bit") {
    const auto spec = make_quartet();
    const Matrix h1 = build_hamiltonian(spec, 51.23).entries;
    const Matrix h2 = build_hamiltonian(spec, 51.23).entries;
    CHECK(h1 == h2);
}
