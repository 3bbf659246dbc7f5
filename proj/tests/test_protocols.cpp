#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "dnpr/dynamics.hpp"

using namespace dnpr;
using Catch::Approx;

namespace {

// Fast unit-scale protocol: narrow window, short cycle.
ProtocolSpec small_protocol() {
    ProtocolSpec p;
    p.system = make_trio();
    p.sweep.b_center_mT = 51.2;
    p.sweep.delta_b_mT = 2.0;
    p.sweep.t_lh_ms = 3.0;
    p.sweep.t_hl_ms = 3.0;
    p.t_p_ms = 600.0;
    p.t1n_ms = 300.0;
    return p;
}

} // namespace

TEST_CASE("rate scan: input validation") {
    const auto spec = make_trio();
    CHECK_THROWS_AS(rate_scan(spec, {0.1, 0.2, 1.0}, SweepDirection::Up),
                    ConfigError);
    CHECK_THROWS_AS(
        rate_scan(spec, {0.1, 0.2, 0.5, 1.0, 2.0}, SweepDirection::Up),
        ConfigError);  // under two decades
    CHECK_THROWS_AS(
        rate_scan(spec, {-0.1, 0.2, 0.5, 1.0, 20.0}, SweepDirection::Up),
        ConfigError);
}

TEST_CASE("rate scan: adiabatic limit and determinism") {
    const auto spec = make_trio();
    RateScanOptions opt;
    opt.window.delta_b_mT = 1.0;
    opt.jitter_n = 2;
    const std::vector<double> rates = {0.02, 0.3, 1.0, 1.5, 2.0};
    const auto a = rate_scan(spec, rates, SweepDirection::Up, opt);
    const auto b = rate_scan(spec, rates, SweepDirection::Up, opt);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].second == b[i].second);  // bit-identical
    }
    // slowest point is deep in the adiabatic regime
    CHECK(std::abs(a.front().second) < 5e-3);
    CHECK(std::abs(a.front().second) < 0.05 * std::abs(a[2].second));
}

TEST_CASE("cycle injection: antisymmetrized segments cancel at equal rates") {
    const auto p = small_protocol();
    const auto inj = cycle_injection(p.system, p.sweep, p.pump, {}, 3);
    CHECK(inj.p_lh == Approx(-inj.p_hl).margin(0.0));  // exact by construction
    CHECK(inj.net() == 0.0);
    CHECK(inj.p_lh > 0.0);
}

TEST_CASE("multi cycle: symmetric cycle accumulates nothing") {
    const auto p = small_protocol();
    const auto series = multi_cycle_protocol(p, {}, 3);
    REQUIRE(!series.empty());
    CHECK(series.back().t_ms <= p.t_p_ms);
    CHECK(std::abs(series.back().polarization) <= 1e-3 * p.p_sat);
}

TEST_CASE("multi cycle: asymmetric cycle builds up and saturates") {
    ProtocolSpec p = small_protocol();
    p.sweep.t_lh_ms = 5.0;
    p.sweep.t_hl_ms = 1.0;
    p.t_p_ms = 2400.0;
    p.t1n_ms = 400.0;
    p.injection_scale = 0.05;  // bulk dilution of the local injection
    const auto series = multi_cycle_protocol(p, {}, 3);
    REQUIRE(series.size() > 10);
    // monotone growth
    for (size_t i = 1; i < series.size(); ++i)
        CHECK(series[i].polarization >= series[i - 1].polarization - 1e-12);
    const double p_final = series.back().polarization;
    CHECK(p_final > 0.0);

    // effective time constant within a factor 2 of T1n when the leak
    // dominates the per-cycle injection
    const double target = p_final * (1.0 - std::exp(-1.0));
    double t63 = series.back().t_ms;
    for (const auto& pt : series)
        if (pt.polarization >= target) {
            t63 = pt.t_ms;
            break;
        }
    CHECK(t63 > 0.5 * *p.t1n_ms);
    CHECK(t63 < 2.0 * *p.t1n_ms);

    // swapping the segment durations flips the buildup sign
    ProtocolSpec swapped = p;
    std::swap(swapped.sweep.t_lh_ms, swapped.sweep.t_hl_ms);
    const auto flipped = multi_cycle_protocol(swapped, {}, 3);
    CHECK(flipped.back().polarization ==
          Approx(-p_final).epsilon(1e-9));
}

TEST_CASE("fraction scan: odd about one half with an exact central zero") {
    ProtocolSpec p = small_protocol();
    p.sweep.t_lh_ms = 3.0;
    p.sweep.t_hl_ms = 3.0;  // t_c = 6 ms
    const std::vector<double> fractions = {1.0 / 6, 2.0 / 6, 3.0 / 6, 4.0 / 6,
                                           5.0 / 6};
    const auto points = fraction_scan(p, fractions, {}, 2);
    REQUIRE(points.size() == 5);
    CHECK(points[2].polarization == 0.0);  // exact: equal legs cancel
    // odd within tolerance
    CHECK(points[4].polarization == Approx(-points[0].polarization).epsilon(1e-9));
    CHECK(points[3].polarization == Approx(-points[1].polarization).epsilon(1e-9));
    // slow-up-leg side is positive
    CHECK(points[4].polarization > 0.0);

    CHECK_THROWS_AS(fraction_scan(p, {0.0, 0.5}, {}, 2), ConfigError);
}

TEST_CASE("fraction scan: pulse gating keeps only the slow leg") {
    ProtocolSpec p = small_protocol();
    p.pump.pulse_gate_t1_ms = 3.0;
    const auto points = fraction_scan(p, {1.0 / 6, 5.0 / 6}, {}, 2);
    CHECK(points[0].p_lh == 0.0);  // gated off: fast LH leg injects nothing
    CHECK(points[0].p_hl != 0.0);
    CHECK(points[1].p_hl == 0.0);
    CHECK(points[1].p_lh != 0.0);
}

TEST_CASE("dnp spectrum: off-resonance fields stay unpolarized") {
    const auto spec = make_quartet();
    const auto table = dnp_spectrum(spec, {43.0, 58.5, 60.0}, 100, 10.0);
    for (const auto& [b, p] : table) CHECK(std::abs(p) <= 1e-3);
}

TEST_CASE("dnp spectrum: central motif is a balanced sign-changing doublet") {
    const auto spec = make_quartet();
    std::vector<double> fields;
    for (double b = 50.95; b <= 51.3 + 1e-9; b += 0.005) fields.push_back(b);
    const auto table = dnp_spectrum(spec, fields, 200, 10.0);

    double pos_peak = 0.0, neg_peak = 0.0;
    double pos_b = 0, neg_b = 0;
    for (const auto& [b, p] : table) {
        if (p > pos_peak) {
            pos_peak = p;
            pos_b = b;
        }
        if (p < neg_peak) {
            neg_peak = p;
            neg_b = b;
        }
    }
    CHECK(pos_peak > 0.05);
    CHECK(-neg_peak > 0.05);
    CHECK(pos_b < neg_b);  // positive lobe below the centre, negative above
    // lobe balance within 15 percent
    CHECK(pos_peak == Approx(-neg_peak).epsilon(0.15));

    CHECK_THROWS_AS(dnp_spectrum(spec, {51.0}, 0, 10.0), ConfigError);
    CHECK_THROWS_AS(dnp_spectrum(spec, {51.0}, 10, -1.0), ConfigError);
}

TEST_CASE("range scan: zero range stays unpolarized, full window is signed") {
    const auto spec = make_quartet();
    // up from below the active window across the central motif
    const auto up = sweep_range_scan(spec, 50.4, {0.0, 1.6}, SweepDirection::Up,
                                     3.0, 0.3, 6);
    CHECK(std::abs(up[0].second) < 1e-9);
    CHECK(up[1].second > 1e-3);
    // down from above
    const auto down = sweep_range_scan(spec, 52.0, {0.0, 1.6},
                                       SweepDirection::Down, 3.0, 0.3, 6);
    CHECK(std::abs(down[0].second) < 1e-9);
    CHECK(down[1].second < -1e-3);

    CHECK_THROWS_AS(
        sweep_range_scan(spec, 50.4, {1.0}, SweepDirection::Up, 3.0, 0.3, 0),
        ConfigError);
}
