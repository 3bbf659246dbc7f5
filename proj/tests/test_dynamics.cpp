#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dnpr/dynamics.hpp"

using namespace dnpr;
using Catch::Approx;

namespace {

// Two-level ramp H(B) = [[k(B-bc), c], [c, -k(B-bc)]].
HamiltonianParts two_level_ramp(double c, double k, double bc) {
    HamiltonianParts parts;
    parts.h0 = Matrix::Zero(2, 2);
    parts.h0 << -k * bc, c, c, k * bc;
    parts.hb = Matrix::Zero(2, 2);
    parts.hb << k, 0, 0, -k;
    return parts;
}

} // namespace

TEST_CASE("propagate: stationary state under a constant Hamiltonian") {
    const auto spec = make_trio();
    const auto parts = hamiltonian_parts(spec);
    const auto es = eigenlevels(build_hamiltonian(spec, 51.2));

    // diagonal in the eigenbasis -> invariant
    Vector weights(spec.dim());
    for (int k = 0; k < spec.dim(); ++k) weights[k] = (k + 1.0);
    weights /= weights.sum().real();
    DensityMatrix rho{es.vectors * weights.asDiagonal() * es.vectors.adjoint()};
    const Matrix before = rho.rho;
    propagate(rho, parts, {{51.2, 51.2, 0.5}});
    CHECK(max_abs(rho.rho - before) < 1e-9);
    rho.check_valid();
}

TEST_CASE("propagate: two-level sweep matches the analytic jump probability") {
    // P_diabatic = exp(-2 pi^2 c^2 / (k Bdot)), Bdot in mT/us
    const double k = 1.0;
    const double c = 0.1;
    for (const double p_target : {0.05, 0.2, 0.5, 0.8, 0.95}) {
        const double gamma = -std::log(p_target);
        const double bdot = 2.0 * kPi * kPi * c * c / (gamma * k);
        const double w = 400.0 * c / k;
        DensityMatrix rho{Matrix::Zero(2, 2)};
        rho.rho(0, 0) = 1.0;
        propagate(rho, two_level_ramp(c, k, 0.0), {{-w, w, 2.0 * w / bdot * 1e-3}});
        const double p_sim = rho.rho(0, 0).real();
        INFO("target " << p_target << " simulated " << p_sim);
        CHECK(p_sim == Approx(p_target).epsilon(0.02));
        rho.check_valid();
    }
}

TEST_CASE("propagate: unitarity preserves purity through a sweep") {
    const auto spec = make_trio();
    const auto parts = hamiltonian_parts(spec);
    Vector psi = Vector::Zero(spec.dim());
    psi[4] = std::sqrt(0.5);
    psi[5] = std::sqrt(0.5);
    DensityMatrix rho{psi * psi.adjoint()};
    propagate(rho, parts, {{51.0, 51.4, 1.0}});
    CHECK(rho.purity() == Approx(1.0).margin(1e-8));
    CHECK(rho.trace_defect() < 1e-9);
    CHECK(rho.min_eigenvalue() > -1e-9);
}

TEST_CASE("propagate: step controller underflow raises StiffnessError") {
    StepControl ctrl;
    ctrl.min_dt_ms = 10.0;  // force the floor above any feasible step
    DensityMatrix rho{Matrix::Identity(2, 2) * 0.5};
    CHECK_THROWS_AS(
        propagate(rho, two_level_ramp(0.1, 1.0, 0.0), {{-1.0, 1.0, 1.0}}, ctrl),
        StiffnessError);
}

TEST_CASE("propagate: phase cap shortens steps when enabled") {
    const auto parts = two_level_ramp(0.1, 1.0, 0.0);
    StepControl capped;
    capped.max_phase_rad = 0.1;
    const FieldSegment seg{-1.0, 1.0, 1.0};
    CHECK(detail::segment_steps(parts, seg, capped) >
          detail::segment_steps(parts, seg, StepControl{}));
}

TEST_CASE("optical reset: projector properties") {
    const auto spec = make_trio();
    DensityMatrix mixed{Matrix::Identity(12, 12) / 12.0};

    const auto reset1 = optical_reset(mixed, spec);
    reset1.check_valid();
    const auto reset2 = optical_reset(reset1, spec);
    CHECK(max_abs(reset1.rho - reset2.rho) < 1e-12);

    // NV marginal is |0><0|
    const auto dims = std::vector<int>{3, 2, 2};
    Matrix nv_marginal = Matrix::Zero(3, 3);
    {
        // trace out P1 then carbon
        Matrix tmp = trace_out_site(reset1.rho, 2, dims);
        nv_marginal = trace_out_site(tmp, 1, {3, 2});
    }
    CHECK(nv_marginal(1, 1).real() == Approx(1.0).margin(1e-12));
    CHECK(std::abs(nv_marginal(0, 0)) < 1e-12);
    CHECK(std::abs(nv_marginal(2, 2)) < 1e-12);

    // carbon polarization is untouched by the reset
    Vector psi = Vector::Zero(12);
    psi[0] = 1.0;  // |+1, +1/2, up>
    DensityMatrix pure{psi * psi.adjoint()};
    const double before = carbon_polarization(pure, spec);
    const double after = carbon_polarization(optical_reset(pure, spec), spec);
    CHECK(after == Approx(before).margin(1e-12));

    CHECK_THROWS_AS(optical_reset(mixed, spec, 1), ConfigError);
}

TEST_CASE("carbon polarization: pure and mixed references") {
    const auto spec = make_trio();
    Vector psi = Vector::Zero(12);
    psi[4] = 1.0;  // NV |0>, P1 +1/2, carbon up (basis order +1/2 first)
    DensityMatrix up{psi * psi.adjoint()};
    CHECK(carbon_polarization(up, spec) == Approx(1.0).margin(1e-12));

    DensityMatrix mixed{Matrix::Identity(12, 12) / 12.0};
    CHECK(carbon_polarization(mixed, spec) == Approx(0.0).margin(1e-12));

    CHECK_THROWS_AS(carbon_polarization(mixed, spec, 0), ConfigError);
    CHECK_THROWS_AS(spin_half_polarization(mixed, spec, 9), ConfigError);
}

TEST_CASE("pumped initial state: NV in |0>, rest maximally mixed") {
    const auto spec = make_quartet();
    const auto rho = pumped_initial_state(spec);
    rho.check_valid();
    CHECK(carbon_polarization(rho, spec) == Approx(0.0).margin(1e-12));
    CHECK(rho.purity() == Approx(1.0 / 12.0).margin(1e-12));  // 1 x (1/12 mixed)
}

TEST_CASE("single sweep: window without crossings leaves the carbon flat") {
    const auto spec = make_trio();
    FieldSweepSpec sweep;
    sweep.b_center_mT = 46.0;
    sweep.delta_b_mT = 2.0;
    sweep.t_lh_ms = 4.0;
    sweep.t_hl_ms = 4.0;
    const auto result =
        single_sweep_polarization(spec, sweep, SweepDirection::Up);
    CHECK(std::abs(result.polarization) <= 1e-3);
}

TEST_CASE("single sweep: direction antisymmetry at the working rate") {
    const auto spec = make_trio();
    FieldSweepSpec sweep;
    sweep.b_center_mT = 51.2;
    sweep.delta_b_mT = 2.0;
    sweep.t_lh_ms = sweep.delta_b_mT / 0.26;
    sweep.t_hl_ms = sweep.t_lh_ms;
    const auto up = single_sweep_polarization(spec, sweep, SweepDirection::Up);
    const auto down = single_sweep_polarization(spec, sweep, SweepDirection::Down);
    CHECK(up.polarization > 0.0);
    CHECK(down.polarization < 0.0);
    CHECK(up.polarization / -down.polarization == Approx(1.0).margin(0.1));
}

TEST_CASE("single sweep: trajectory samples bracket the transfer window") {
    const auto spec = make_trio();
    FieldSweepSpec sweep;
    sweep.b_center_mT = 51.2;
    sweep.delta_b_mT = 1.0;
    sweep.t_lh_ms = 2.0;
    sweep.t_hl_ms = 2.0;
    const auto result =
        single_sweep_polarization(spec, sweep, SweepDirection::Up, {}, true);
    REQUIRE(result.trajectory.size() > 10);
    CHECK(result.trajectory.front().b_mT > sweep.b_low());
    CHECK(result.trajectory.back().b_mT == Approx(sweep.b_high()).margin(1e-9));
    CHECK(result.trajectory.back().value ==
          Approx(result.polarization).margin(1e-12));
    // polarization appears only after the crossing region
    for (const auto& s : result.trajectory)
        if (s.b_mT < 51.05) CHECK(std::abs(s.value) < 1e-3);
}

TEST_CASE("single sweep: halving the step tolerance barely moves the answer") {
    const auto spec = make_trio();
    FieldSweepSpec sweep;
    sweep.b_center_mT = 51.2;
    sweep.delta_b_mT = 1.0;
    sweep.t_lh_ms = sweep.delta_b_mT / 0.5;
    sweep.t_hl_ms = sweep.t_lh_ms;
    StepControl fine;
    fine.eps_step = StepControl{}.eps_step / 2.0;
    const auto coarse = single_sweep_polarization(spec, sweep, SweepDirection::Up);
    const auto finer =
        single_sweep_polarization(spec, sweep, SweepDirection::Up, fine);
    CHECK(std::abs(coarse.polarization - finer.polarization) < 1e-3);
}

TEST_CASE("field sweep spec: validation") {
    FieldSweepSpec sweep;
    sweep.t_lh_ms = 0.0;
    CHECK_THROWS_AS(validate(sweep), ConfigError);
    sweep = FieldSweepSpec{};
    sweep.delta_b_mT = -1.0;
    CHECK_THROWS_AS(validate(sweep), ConfigError);
    sweep = FieldSweepSpec{};
    sweep.b_center_mT = 1.0;
    sweep.delta_b_mT = 4.0;  // dips below zero field
    CHECK_THROWS_AS(validate(sweep), ConfigError);
}
