#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dnpr/spectra.hpp"

using namespace dnpr;
using Catch::Approx;

namespace {

// Two-level ramp: H(B) = [[k (B - bc), c], [c, -k (B - bc)]].
HamiltonianParts two_level_ramp(double c, double k, double bc) {
    HamiltonianParts parts;
    parts.h0 = Matrix::Zero(2, 2);
    parts.h0 << -k * bc, c, c, k * bc;
    parts.hb = Matrix::Zero(2, 2);
    parts.hb << k, 0, 0, -k;
    return parts;
}

} // namespace

TEST_CASE("eigenlevels: diagonal and analytic 2x2") {
    Matrix d = Matrix::Zero(3, 3);
    d(0, 0) = 5.0;
    d(1, 1) = -2.0;
    d(2, 2) = 1.0;
    const auto es = eigenlevels(HermitianOperator(d));
    CHECK(es.values[0] == Approx(-2.0));
    CHECK(es.values[1] == Approx(1.0));
    CHECK(es.values[2] == Approx(5.0));

    Matrix t = Matrix::Zero(2, 2);
    t << 0.0, 0.1, 0.1, 0.0;
    const auto es2 = eigenlevels(HermitianOperator(t));
    CHECK(es2.values[1] - es2.values[0] == Approx(0.2).margin(1e-12));
}

TEST_CASE("eigenlevels: reconstruction and orthonormality") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix a(9, 9);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) a(i, j) = complexd(gauss(rng), gauss(rng));
    Matrix h = 0.5 * (a + Matrix(a.adjoint()));

    const auto es = eigenlevels(HermitianOperator(h));
    const Matrix recon =
        es.vectors * es.values.asDiagonal() * es.vectors.adjoint();
    CHECK(max_abs(recon - h) <= 1e-9 * max_abs(h));
    CHECK(max_abs(Matrix(es.vectors.adjoint() * es.vectors) -
                  Matrix::Identity(9, 9)) < 1e-9);

    // deterministic phase convention: repeated solves agree exactly
    const auto es2 = eigenlevels(HermitianOperator(h));
    CHECK(es.vectors == es2.vectors);
}

TEST_CASE("eigenlevels: rejects non-Hermitian input") {
    Matrix h(2, 2);
    h << 0.0, 1.0, 2.0, 0.0;
    CHECK_THROWS_AS(HermitianOperator(h), ContractViolation);
}

TEST_CASE("level diagram: lone NV stays gapped, rows sorted") {
    const auto dia = level_diagram(make_lone_nv(0.0), {40.0, 60.0}, 51);
    REQUIRE(dia.energies_MHz.rows() == 51);
    REQUIRE(dia.energies_MHz.cols() == 3);
    double min_gap = 1e300;
    for (int i = 0; i < 51; ++i) {
        CHECK(dia.energies_MHz(i, 0) <= dia.energies_MHz(i, 1));
        CHECK(dia.energies_MHz(i, 1) <= dia.energies_MHz(i, 2));
        min_gap = std::min(min_gap, dia.energies_MHz(i, 1) - dia.energies_MHz(i, 0));
    }
    CHECK(min_gap > 100.0);

    CHECK_THROWS_AS(level_diagram(make_lone_nv(0.0), {40.0, 60.0}, 1), ConfigError);
    CHECK_THROWS_AS(level_diagram(make_lone_nv(0.0), {60.0, 40.0}, 10), ConfigError);
}

TEST_CASE("level diagram: sorted-eigenvalue continuity") {
    const auto spec = make_trio();
    const auto dia = level_diagram(spec, {51.0, 51.4}, 101);  // 0.004 mT steps
    const double db = dia.fields_mT[1] - dia.fields_mT[0];
    const double bound = 10.0 * std::abs(constants::kGammaElectron) * db;
    for (int i = 1; i < 101; ++i)
        for (int l = 0; l < dia.energies_MHz.cols(); ++l)
            CHECK(std::abs(dia.energies_MHz(i, l) - dia.energies_MHz(i - 1, l)) <=
                  bound);
}

TEST_CASE("find_crossings: two-level ramp gap equals 2c") {
    for (const double c : {0.01, 0.1, 1.0}) {
        const auto parts = two_level_ramp(c, 10.0, 51.0);
        const auto report = find_crossings(parts, {50.0, 52.0});
        REQUIRE(report.entries.size() == 1);
        CHECK(report.entries[0].gap_MHz == Approx(2.0 * c).epsilon(0.01));
        CHECK(report.entries[0].b_mT == Approx(51.0).margin(2e-4));
    }
}

TEST_CASE("find_crossings: empty report when nothing crosses") {
    const auto report = find_crossings(make_lone_nv(0.0), {45.0, 50.0});
    CHECK(report.entries.empty());
}

TEST_CASE("find_crossings: trio avoided-crossing window") {
    const auto spec = make_trio();
    CrossingScanOptions opt;
    opt.level_pairs = {{2, 3}, {3, 4}, {4, 5}};
    const auto report = find_crossings(spec, {51.0, 51.42}, opt);
    REQUIRE(!report.entries.empty());

    const auto d1 = report.delta1();
    const auto d0 = report.delta0();
    REQUIRE(d1.has_value());
    REQUIRE(d0.has_value());
    CHECK(d1->gap_MHz < d0->gap_MHz);
    // both gaps within the 10 kHz - 1 MHz decade
    CHECK(d1->gap_MHz > 0.01);
    CHECK(d0->gap_MHz < 1.0);
    // inner pair carries the smaller gap
    CHECK(d1->level_lo == 3);
    CHECK(d1->level_hi == 4);
}

TEST_CASE("find_crossings: outer gap grows with the electron coupling") {
    CrossingScanOptions opt;
    opt.level_pairs = {{2, 3}, {3, 4}, {4, 5}};
    const auto r1 = find_crossings(make_trio(), {51.0, 51.42}, opt);
    const auto r2 =
        find_crossings(make_trio({.d_nv_p1_MHz = 1.0}), {51.0, 51.42}, opt);
    REQUIRE(r1.delta0().has_value());
    REQUIRE(r2.delta0().has_value());
    CHECK(r2.delta0()->gap_MHz > r1.delta0()->gap_MHz);
}

TEST_CASE("find_crossings: deterministic report") {
    const auto spec = make_trio();
    const auto a = find_crossings(spec, {51.1, 51.3});
    const auto b = find_crossings(spec, {51.1, 51.3});
    REQUIRE(a.entries.size() == b.entries.size());
    for (size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].b_mT == b.entries[i].b_mT);
        CHECK(a.entries[i].gap_MHz == b.entries[i].gap_MHz);
    }
}

TEST_CASE("matching field: closed form at theta=0") {
    const double bm = matching_field(0.0);
    const double expected =
        constants::kNvZeroFieldMHz / (2.0 * std::abs(constants::kGammaElectron));
    CHECK(bm == Approx(expected).margin(1.5e-3));
    CHECK(bm == Approx(51.21).margin(0.05));
}

TEST_CASE("matching field: grows with misalignment, bounded sweep range") {
    const double b0 = matching_field(0.0);
    const double b13 = matching_field(13.0);
    CHECK(b13 > b0);

    double prev = b0;
    for (double theta = 5.0; theta <= 40.0; theta += 5.0) {
        const double bm = matching_field(theta);
        CHECK(bm >= prev - 1e-6);
        prev = bm;
    }
    CHECK(matching_field(25.0) - b0 <= 10.0);
}

TEST_CASE("matching field: error paths") {
    CHECK_THROWS_AS(matching_field(60.0), ConfigError);
    MatchingFieldOptions opt;
    opt.b_min_mT = 1.0;
    opt.b_max_mT = 10.0;  // no crossing this low
    CHECK_THROWS_AS(matching_field(0.0, opt), NoMatchingField);
}

TEST_CASE("branch tracking: labels persist through the trio crossings") {
    const auto dia = level_diagram(make_trio(), {51.15, 51.25}, 81, true);
    const auto branches = track_branches(dia);
    REQUIRE(branches.size() == dia.fields_mT.size());
    // permutation at every field
    for (const auto& row : branches) {
        std::vector<int> seen(row.size(), 0);
        for (int l : row) seen.at(l)++;
        for (int cnt : seen) CHECK(cnt == 1);
    }
}
