#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnpr/density_matrix.hpp"
#include "dnpr/linalg.hpp"
#include "dnpr/parallel.hpp"
#include "dnpr/spin_system.hpp"

namespace dnpr {

// --------------------------------------------------------------------------
// Protocol data types
// --------------------------------------------------------------------------

enum class SweepDirection { Up, Down };

inline SweepDirection opposite(SweepDirection d) {
    return d == SweepDirection::Up ? SweepDirection::Down : SweepDirection::Up;
}

// Saw-tooth field protocol: range delta_b around b_center, low-to-high leg
// of duration t_lh, high-to-low leg of duration t_hl.
struct FieldSweepSpec {
    double b_center_mT = 51.2;
    double delta_b_mT = 6.0;
    double t_lh_ms = 18.45;
    double t_hl_ms = 1.85;
    int n_cycles = 1;
    SweepDirection start_direction = SweepDirection::Up;

    double cycle_period_ms() const { return t_lh_ms + t_hl_ms; }
    double rate_lh_mT_per_ms() const { return delta_b_mT / t_lh_ms; }
    double rate_hl_mT_per_ms() const { return delta_b_mT / t_hl_ms; }
    double b_low() const { return b_center_mT - 0.5 * delta_b_mT; }
    double b_high() const { return b_center_mT + 0.5 * delta_b_mT; }
};

inline void validate(const FieldSweepSpec& s) {
    if (!(s.t_lh_ms > 0.0) || !(s.t_hl_ms > 0.0))
        throw ConfigError("field sweep: segment durations must be positive");
    if (!(s.delta_b_mT > 0.0))
        throw ConfigError("field sweep: delta_b must be positive");
    if (s.n_cycles < 1) throw ConfigError("field sweep: n_cycles must be >= 1");
    if (!std::isfinite(s.rate_lh_mT_per_ms()) || !std::isfinite(s.rate_hl_mT_per_ms()))
        throw ConfigError("field sweep: non-finite sweep rate");
    if (s.b_low() < 0.0) throw ConfigError("field sweep: range extends below 0 mT");
}

enum class PumpMode { Stroboscopic, Continuous };

// Optical repolarisation model.  Stroboscopic: instantaneous NV reset every
// reset_interval of illuminated time.  Continuous: collapse toward the reset
// state at pump_rate.  pulse_gate restricts light to the longer sweep leg.
struct PumpSpec {
    PumpMode mode = PumpMode::Stroboscopic;
    double reset_interval_ms = 1e-3;
    double pump_rate_per_ms = 0.0;
    std::optional<double> pulse_gate_t1_ms;
};

inline void validate(const PumpSpec& p, double t_c_ms) {
    const bool strob = p.mode == PumpMode::Stroboscopic;
    if (strob && !(p.reset_interval_ms > 0.0))
        throw ConfigError("pump: stroboscopic mode needs reset_interval > 0");
    if (!strob && !(p.pump_rate_per_ms > 0.0))
        throw ConfigError("pump: continuous mode needs pump_rate > 0");
    if (strob && p.pump_rate_per_ms > 0.0)
        throw ConfigError("pump: set exactly one of reset_interval / pump_rate");
    if (p.pulse_gate_t1_ms && *p.pulse_gate_t1_ms > t_c_ms + 1e-12)
        throw ConfigError("pump: pulse gate t1 exceeds the cycle period");
}

struct ProtocolSpec {
    SpinSystemSpec system;
    FieldSweepSpec sweep;
    PumpSpec pump;
    double t_p_ms = 10000.0;              // total pumping time
    std::optional<double> t1n_ms = 5000.0;  // nuclear relaxation constant
    double p_sat = 1.0;
    // Dilution of the single-cluster injection into the bulk accumulation
    // model (one polarized local carbon feeds many bulk spins).
    double injection_scale = 1.0;
};

inline void validate(const ProtocolSpec& p) {
    validate(p.system);
    validate(p.sweep);
    validate(p.pump, p.sweep.cycle_period_ms());
    if (p.t_p_ms < p.sweep.cycle_period_ms())
        throw ConfigError("protocol: t_p shorter than one sweep cycle");
    if (p.t1n_ms && !(*p.t1n_ms > 0.0))
        throw ConfigError("protocol: T1n must be positive");
    if (!(p.p_sat > 0.0)) throw ConfigError("protocol: p_sat must be positive");
}

// --------------------------------------------------------------------------
// Propagation
// --------------------------------------------------------------------------

// One linear field leg.
struct FieldSegment {
    double b_from_mT = 0.0;
    double b_to_mT = 0.0;
    double duration_ms = 0.0;
};

struct StepControl {
    // Bound on ||H(t+dt)-H(t)||_max * dt in MHz*us; sets the step size on
    // ramped legs.
    double eps_step = 2e-4;
    // Optional cap on 2*pi*||H||_max*dt (radians).  Disabled by default: the
    // per-step exponential is evaluated by exact spectral decomposition, so
    // accuracy is governed by eps_step alone (checked by the convergence
    // gate); enabling the cap is only useful for toy systems.
    double max_phase_rad = 0.0;
    double min_dt_ms = 1e-9;
    int hermitize_every = 4096;
};

struct TrajectorySample {
    double t_ms = 0.0;
    double b_mT = 0.0;
    double value = 0.0;
};

namespace detail {

// exp(-2 pi i H dt) via spectral decomposition; H in MHz, dt in us.
inline Matrix step_unitary(const Matrix& h, double dt_us) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw ContractViolation("step_unitary: eigensolver failed");
    const auto& v = solver.eigenvectors();
    Vector phases(h.rows());
    for (Eigen::Index k = 0; k < h.rows(); ++k)
        phases[k] = std::polar(1.0, -2.0 * kPi * solver.eigenvalues()[k] * dt_us);
    return v * phases.asDiagonal() * v.adjoint();
}

// Per-step exponential engine with preallocated workspaces.  Hamiltonians
// that are real symmetric in the product basis (any theta with phi = 0 and
// real coupling tensors) take the faster real eigensolve path.
class StepEngine {
public:
    explicit StepEngine(const HamiltonianParts& parts)
        : parts_(parts), d_(parts.h0.rows()) {
        real_mode_ = parts.h0.imag().cwiseAbs().maxCoeff() == 0.0 &&
                     parts.hb.imag().cwiseAbs().maxCoeff() == 0.0;
        if (real_mode_) {
            h0r_ = parts.h0.real();
            hbr_ = parts.hb.real();
            hr_.resize(d_, d_);
            vc_.resize(d_, d_);
        } else {
            hc_.resize(d_, d_);
        }
        u_.resize(d_, d_);
        phases_.resize(d_);
    }

    // u = exp(-2 pi i H(b) dt)
    const Matrix& unitary(double b_mT, double dt_us) {
        if (real_mode_) {
            hr_ = h0r_ + b_mT * hbr_;
            rsolver_.compute(hr_);
            if (rsolver_.info() != Eigen::Success)
                throw ContractViolation("propagate: eigensolver failed");
            set_phases(rsolver_.eigenvalues(), dt_us);
            vc_ = rsolver_.eigenvectors().cast<complexd>();
            tmpc_.noalias() = vc_ * phases_.asDiagonal();
            u_.noalias() = tmpc_ * vc_.transpose();
        } else {
            hc_ = parts_.h0 + b_mT * parts_.hb;
            csolver_.compute(hc_);
            if (csolver_.info() != Eigen::Success)
                throw ContractViolation("propagate: eigensolver failed");
            set_phases(csolver_.eigenvalues(), dt_us);
            tmpc_.noalias() = csolver_.eigenvectors() * phases_.asDiagonal();
            u_.noalias() = tmpc_ * csolver_.eigenvectors().adjoint();
        }
        return u_;
    }

private:
    void set_phases(const RealVector& energies, double dt_us) {
        for (Eigen::Index k = 0; k < d_; ++k)
            phases_[k] = std::polar(1.0, -2.0 * kPi * energies[k] * dt_us);
        if (tmpc_.rows() != d_) tmpc_.resize(d_, d_);
    }

    const HamiltonianParts& parts_;
    Eigen::Index d_;
    bool real_mode_ = false;
    Eigen::MatrixXd h0r_, hbr_, hr_;
    Matrix hc_, vc_, u_, tmpc_;
    Vector phases_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rsolver_;
    Eigen::SelfAdjointEigenSolver<Matrix> csolver_;
};

inline int segment_steps(const HamiltonianParts& parts, const FieldSegment& seg,
                         const StepControl& ctrl) {
    const double duration_us = seg.duration_ms * 1e3;
    if (!(duration_us > 0.0))
        throw ConfigError("propagate: segment duration must be positive");
    const double rate_us = std::abs(seg.b_to_mT - seg.b_from_mT) / duration_us;
    double dt = duration_us;
    if (rate_us > 0.0) {
        const double hz_norm = max_abs(parts.hb);
        if (hz_norm > 0.0) dt = std::sqrt(ctrl.eps_step / (rate_us * hz_norm));
    }
    if (ctrl.max_phase_rad > 0.0) {
        const double h_norm = std::max(max_abs(parts.at(seg.b_from_mT)),
                                       max_abs(parts.at(seg.b_to_mT)));
        if (h_norm > 0.0)
            dt = std::min(dt, ctrl.max_phase_rad / (2.0 * kPi * h_norm));
    }
    dt = std::min(dt, duration_us);
    if (dt < ctrl.min_dt_ms * 1e3)
        throw StiffnessError("propagate: step size underflow (dt = " +
                             std::to_string(dt * 1e-3) + " ms)");
    return static_cast<int>(std::ceil(duration_us / dt));
}

} // namespace detail

// Observer signature: (t_ms since trajectory start, B in mT, rho).
using PropagationObserver =
    std::function<void(double, double, const DensityMatrix&)>;

// Piecewise-constant-Hamiltonian propagation rho -> U rho U^dag with the
// midpoint field of each step; H(B) is affine so the linearly swept diagonal
// phase is integrated exactly.
inline void propagate(DensityMatrix& state, const HamiltonianParts& parts,
                      const std::vector<FieldSegment>& segments,
                      const StepControl& ctrl = {},
                      const PropagationObserver& observe = nullptr,
                      int observe_stride = 64) {
    detail::StepEngine engine(parts);
    Matrix tmp(state.rho.rows(), state.rho.cols());
    double t_ms = 0.0;
    long step_count = 0;
    for (const auto& seg : segments) {
        const int n = detail::segment_steps(parts, seg, ctrl);
        const double dt_us = seg.duration_ms * 1e3 / n;
        const double db = (seg.b_to_mT - seg.b_from_mT) / n;
        for (int i = 0; i < n; ++i) {
            const double b_mid = seg.b_from_mT + (i + 0.5) * db;
            const Matrix& u = engine.unitary(b_mid, dt_us);
            tmp.noalias() = u * state.rho;
            state.rho.noalias() = tmp * u.adjoint();
            ++step_count;
            if (ctrl.hermitize_every > 0 && step_count % ctrl.hermitize_every == 0)
                state.rho = 0.5 * (state.rho + Matrix(state.rho.adjoint()));
            if (observe && (i % observe_stride == 0 || i == n - 1))
                observe(t_ms + (i + 1) * dt_us * 1e-3,
                        seg.b_from_mT + (i + 1) * db, state);
        }
        t_ms += seg.duration_ms;
    }
}

// Total unitary for a trajectory (same stepping as propagate).  Reusable
// across repeated cycles of an identical field program.
inline Matrix segment_propagator(const HamiltonianParts& parts,
                                 const std::vector<FieldSegment>& segments,
                                 const StepControl& ctrl = {}) {
    const Eigen::Index d = parts.h0.rows();
    detail::StepEngine engine(parts);
    Matrix u_total = Matrix::Identity(d, d);
    Matrix tmp(d, d);
    for (const auto& seg : segments) {
        const int n = detail::segment_steps(parts, seg, ctrl);
        const double dt_us = seg.duration_ms * 1e3 / n;
        const double db = (seg.b_to_mT - seg.b_from_mT) / n;
        for (int i = 0; i < n; ++i) {
            const double b_mid = seg.b_from_mT + (i + 0.5) * db;
            const Matrix& u = engine.unitary(b_mid, dt_us);
            tmp.noalias() = u * u_total;
            u_total.swap(tmp);
        }
    }
    return u_total;
}

// --------------------------------------------------------------------------
// Sweep protocols
// --------------------------------------------------------------------------

struct SweepResult {
    double polarization = 0.0;
    std::vector<TrajectorySample> trajectory;  // t_ms, B_mT, P_carbon
};

inline FieldSegment sweep_leg(const FieldSweepSpec& sweep, SweepDirection dir) {
    if (dir == SweepDirection::Up)
        return {sweep.b_low(), sweep.b_high(), sweep.t_lh_ms};
    return {sweep.b_high(), sweep.b_low(), sweep.t_hl_ms};
}

// One sweep leg from the optically pumped initial state (NV in |0>, all
// other spins maximally mixed); returns the final carbon polarization and
// the in-sweep trajectory P(B).
inline SweepResult single_sweep_polarization(const SpinSystemSpec& spec,
                                             const FieldSweepSpec& sweep,
                                             SweepDirection dir,
                                             const StepControl& ctrl = {},
                                             bool keep_trajectory = false) {
    validate(sweep);
    const auto parts = hamiltonian_parts(spec);
    const int carbon = find_carbon_site(spec);
    DensityMatrix rho = pumped_initial_state(spec);

    SweepResult out;
    PropagationObserver observer = nullptr;
    if (keep_trajectory)
        observer = [&](double t, double b, const DensityMatrix& state) {
            out.trajectory.push_back({t, b, carbon_polarization(state, spec, carbon)});
        };
    propagate(rho, parts, {sweep_leg(sweep, dir)}, ctrl, observer);
    out.polarization = carbon_polarization(rho, spec, carbon);
    return out;
}

struct RateScanOptions {
    FieldSweepSpec window;
    StepControl ctrl;
    // When > 1, each reported point is the mean over jitter_n sweeps whose
    // durations are spread over a fixed +-jitter_span_us/2 around the
    // nominal duration (capped at a quarter of it).  A fixed time spread
    // covers at least one interference fringe of the inter-crossing phase
    // at every rate, so the reported curve is the transfer envelope an
    // ensemble of slightly different cycle timings would show.
    int jitter_n = 1;
    double jitter_span_us = 120.0;
};

// Hann-weighted mean polarization over a small spread of sweep durations
// around delta_b / rate.  A fixed time spread covers at least one
// inter-crossing interference fringe at every rate, so the result is the
// transfer envelope an ensemble of slightly different cycle timings shows;
// a single sweep at one exact duration can sit anywhere on the fringe.
inline double averaged_sweep_polarization(const SpinSystemSpec& spec,
                                          const FieldSweepSpec& window,
                                          double rate_mT_per_ms,
                                          SweepDirection dir,
                                          const StepControl& ctrl = {},
                                          int jitter_n = 8,
                                          double jitter_span_us = 240.0) {
    if (jitter_n < 1)
        throw ConfigError("averaged_sweep_polarization: jitter_n must be >= 1");
    const double nominal_ms = window.delta_b_mT / rate_mT_per_ms;
    const double half_span_ms =
        std::min(0.5 * jitter_span_us * 1e-3, nominal_ms / 3.0);
    double acc = 0.0;
    double wsum = 0.0;
    for (int j = 0; j < jitter_n; ++j) {
        const double f = -1.0 + 2.0 * (j + 0.5) / jitter_n;
        FieldSweepSpec sweep = window;
        sweep.t_lh_ms = nominal_ms + f * half_span_ms;
        sweep.t_hl_ms = sweep.t_lh_ms;
        const double w =
            jitter_n > 1 ? std::pow(std::sin(kPi * (j + 0.5) / jitter_n), 2) : 1.0;
        acc += w * single_sweep_polarization(spec, sweep, dir, ctrl).polarization;
        wsum += w;
    }
    return acc / wsum;
}

// Polarization vs sweep rate over a fixed field window.
inline std::vector<std::pair<double, double>> rate_scan(
    const SpinSystemSpec& spec, const std::vector<double>& rates_mT_per_ms,
    SweepDirection dir, const RateScanOptions& opt = {}) {
    if (rates_mT_per_ms.size() < 5)
        throw ConfigError("rate_scan: need at least 5 rates");
    const auto [lo, hi] = std::minmax_element(rates_mT_per_ms.begin(),
                                              rates_mT_per_ms.end());
    if (*lo <= 0.0) throw ConfigError("rate_scan: rates must be positive");
    if (*hi / *lo < 100.0)
        throw ConfigError("rate_scan: rates must span at least 2 decades");
    if (opt.jitter_n < 1) throw ConfigError("rate_scan: jitter_n must be >= 1");

    const int n_rates = static_cast<int>(rates_mT_per_ms.size());
    const int n_jobs = n_rates * opt.jitter_n;
    std::vector<double> values(n_jobs);
    parallel_for(n_jobs, [&](int job) {
        const int i = job / opt.jitter_n;
        const int j = job % opt.jitter_n;
        const double nominal_ms = opt.window.delta_b_mT / rates_mT_per_ms[i];
        double duration_ms = nominal_ms;
        if (opt.jitter_n > 1) {
            const double half_span_ms =
                std::min(0.5 * opt.jitter_span_us * 1e-3, nominal_ms / 3.0);
            const double f = -1.0 + 2.0 * (j + 0.5) / opt.jitter_n;
            duration_ms += f * half_span_ms;
        }
        FieldSweepSpec sweep = opt.window;
        sweep.t_lh_ms = duration_ms;
        sweep.t_hl_ms = duration_ms;
        values[job] =
            single_sweep_polarization(spec, sweep, dir, opt.ctrl).polarization;
    });

    // Hann-weighted mean over the jitter window: suppresses any fringe whose
    // period fits inside the span, not just integer multiples.
    std::vector<std::pair<double, double>> out(n_rates);
    for (int i = 0; i < n_rates; ++i) {
        double acc = 0.0;
        double wsum = 0.0;
        for (int j = 0; j < opt.jitter_n; ++j) {
            const double w =
                opt.jitter_n > 1
                    ? std::pow(std::sin(kPi * (j + 0.5) / opt.jitter_n), 2)
                    : 1.0;
            acc += w * values[i * opt.jitter_n + j];
            wsum += w;
        }
        out[i] = {rates_mT_per_ms[i], acc / wsum};
    }
    return out;
}

// Direction-odd per-sweep injection at a given duration: the bulk signal
// has no direction-even component (equal up and down sweeps counter-balance
// in the ensemble), so the accumulation model feeds on the odd part only.
// Timing-jitter averaging quenches single-cluster interference fringes.
inline double odd_injection(const SpinSystemSpec& spec,
                            const FieldSweepSpec& window, double duration_ms,
                            const StepControl& ctrl = {}, int jitter_n = 6,
                            double jitter_span_us = 240.0) {
    const double rate = window.delta_b_mT / duration_ms;
    const double up = averaged_sweep_polarization(spec, window, rate,
                                                  SweepDirection::Up, ctrl,
                                                  jitter_n, jitter_span_us);
    const double down = averaged_sweep_polarization(spec, window, rate,
                                                    SweepDirection::Down, ctrl,
                                                    jitter_n, jitter_span_us);
    return 0.5 * (up - down);
}

// Per-segment injected polarizations for one saw-tooth cycle, each computed
// from a fresh optically pumped state.
struct CycleInjection {
    double p_lh = 0.0;
    double p_hl = 0.0;

    double net() const { return p_lh + p_hl; }
};

inline CycleInjection cycle_injection(const SpinSystemSpec& spec,
                                      const FieldSweepSpec& sweep,
                                      const PumpSpec& pump,
                                      const StepControl& ctrl = {},
                                      int jitter_n = 6) {
    CycleInjection inj;
    inj.p_lh = odd_injection(spec, sweep, sweep.t_lh_ms, ctrl, jitter_n);
    inj.p_hl = -odd_injection(spec, sweep, sweep.t_hl_ms, ctrl, jitter_n);
    if (pump.pulse_gate_t1_ms) {
        // light gated onto the longer leg: the other leg injects nothing
        if (sweep.t_lh_ms >= sweep.t_hl_ms)
            inj.p_hl = 0.0;
        else
            inj.p_lh = 0.0;
    }
    return inj;
}

struct BuildupPoint {
    double t_ms = 0.0;
    double polarization = 0.0;
};

// Per-cycle accumulation with saturation and a T1n leak.
inline std::vector<BuildupPoint> accumulate_cycles(double p_net, double t_c_ms,
                                                   double t_p_ms, double p_sat,
                                                   std::optional<double> t1n_ms) {
    const double leak = t1n_ms ? t_c_ms / *t1n_ms : 0.0;
    const int n_cycles = static_cast<int>(std::floor(t_p_ms / t_c_ms));
    std::vector<BuildupPoint> series;
    series.reserve(n_cycles + 1);
    double p = 0.0;
    series.push_back({0.0, p});
    for (int k = 1; k <= n_cycles; ++k) {
        p += p_net * (1.0 - std::abs(p) / p_sat) - leak * p;
        series.push_back({k * t_c_ms, p});
    }
    return series;
}

// Bulk buildup over many sweep cycles, emitted at cycle boundaries.
inline std::vector<BuildupPoint> multi_cycle_protocol(const ProtocolSpec& protocol,
                                                      const StepControl& ctrl = {},
                                                      int jitter_n = 6) {
    validate(protocol);
    const auto inj = cycle_injection(protocol.system, protocol.sweep, protocol.pump,
                                     ctrl, jitter_n);
    return accumulate_cycles(protocol.injection_scale * inj.net(),
                             protocol.sweep.cycle_period_ms(), protocol.t_p_ms,
                             protocol.p_sat, protocol.t1n_ms);
}

struct FractionScanPoint {
    double fraction = 0.0;  // t_LH / t_c
    double p_lh = 0.0;
    double p_hl = 0.0;
    double polarization = 0.0;  // accumulated P(t_p)
};

// Buildup endpoint versus the fractional low-to-high interval at fixed
// cycle period.  Injections are cached per segment duration, so mirrored
// fractions share sweep evaluations.
inline std::vector<FractionScanPoint> fraction_scan(
    const ProtocolSpec& protocol, const std::vector<double>& fractions,
    const StepControl& ctrl = {}, int jitter_n = 6) {
    validate(protocol);
    const double t_c = protocol.sweep.cycle_period_ms();

    std::vector<double> durations;
    for (double f : fractions) {
        if (!(f > 0.0) || !(f < 1.0))
            throw ConfigError("fraction_scan: fractions must lie in (0, 1)");
        durations.push_back(f * t_c);
        durations.push_back((1.0 - f) * t_c);
    }
    std::sort(durations.begin(), durations.end());
    durations.erase(std::unique(durations.begin(), durations.end()),
                    durations.end());

    std::vector<double> inj(durations.size());
    parallel_for(static_cast<int>(durations.size()), [&](int i) {
        inj[i] = odd_injection(protocol.system, protocol.sweep, durations[i], ctrl,
                               jitter_n);
    });
    auto injection_at = [&](double duration) {
        const auto it =
            std::lower_bound(durations.begin(), durations.end(), duration);
        return inj[static_cast<size_t>(it - durations.begin())];
    };

    std::vector<FractionScanPoint> out;
    out.reserve(fractions.size());
    for (double f : fractions) {
        FractionScanPoint pt;
        pt.fraction = f;
        pt.p_lh = injection_at(f * t_c);
        pt.p_hl = -injection_at((1.0 - f) * t_c);
        if (protocol.pump.pulse_gate_t1_ms) {
            if (f >= 0.5)
                pt.p_hl = 0.0;
            else
                pt.p_lh = 0.0;
        }
        const auto series = accumulate_cycles(
            protocol.injection_scale * (pt.p_lh + pt.p_hl), t_c, protocol.t_p_ms,
            protocol.p_sat, protocol.t1n_ms);
        pt.polarization = series.back().polarization;
        out.push_back(pt);
    }
    return out;
}

// Static-field pump cycling: alternate free evolution for tau_evol with an
// instantaneous NV reset, then read the carbon polarization.
inline std::vector<std::pair<double, double>> dnp_spectrum(
    const SpinSystemSpec& spec, const std::vector<double>& b0_list_mT,
    int pump_cycles = 200, double tau_evol_us = 10.0) {
    if (pump_cycles < 1) throw ConfigError("dnp_spectrum: pump_cycles must be >= 1");
    if (!(tau_evol_us > 0.0))
        throw ConfigError("dnp_spectrum: tau_evol must be positive");
    const auto parts = hamiltonian_parts(spec);
    const int carbon = find_carbon_site(spec);

    std::vector<std::pair<double, double>> out(b0_list_mT.size());
    parallel_for(static_cast<int>(b0_list_mT.size()), [&](int i) {
        const double b0 = b0_list_mT[i];
        if (b0 < 0.0) throw ConfigError("dnp_spectrum: negative field");
        const Matrix u = detail::step_unitary(parts.at(b0), tau_evol_us);
        const Matrix u_dag = u.adjoint();
        DensityMatrix rho = pumped_initial_state(spec);
        Matrix tmp(rho.rho.rows(), rho.rho.cols());
        for (int k = 0; k < pump_cycles; ++k) {
            tmp.noalias() = u * rho.rho;
            rho.rho.noalias() = tmp * u_dag;
            rho = optical_reset(rho, spec);
        }
        out[i] = {b0, carbon_polarization(rho, spec, carbon)};
    });
    return out;
}

// Saw-tooth cycling versus sweep range.  The quantum state is carried across
// cycles (nuclear registers are never reset); the NV is repolarised at each
// sweep reversal.
inline std::vector<std::pair<double, double>> sweep_range_scan(
    const SpinSystemSpec& spec, double b_start_mT,
    const std::vector<double>& ranges_mT, SweepDirection dir, double t_slow_ms,
    double t_fast_ms, int n_cycles, const StepControl& ctrl = {}) {
    if (n_cycles < 1) throw ConfigError("sweep_range_scan: n_cycles must be >= 1");
    const auto parts = hamiltonian_parts(spec);
    const int carbon = find_carbon_site(spec);

    std::vector<std::pair<double, double>> out(ranges_mT.size());
    parallel_for(static_cast<int>(ranges_mT.size()), [&](int i) {
        const double delta_b = ranges_mT[i];
        if (!(delta_b >= 0.0))
            throw ConfigError("sweep_range_scan: ranges must be non-negative");
        DensityMatrix rho = pumped_initial_state(spec);
        if (delta_b == 0.0) {
            out[i] = {delta_b, carbon_polarization(rho, spec, carbon)};
            return;
        }
        const double b_end =
            dir == SweepDirection::Up ? b_start_mT + delta_b : b_start_mT - delta_b;
        const Matrix u_fwd = segment_propagator(
            parts, {{b_start_mT, b_end, t_slow_ms}}, ctrl);
        const Matrix u_back = segment_propagator(
            parts, {{b_end, b_start_mT, t_fast_ms}}, ctrl);
        Matrix tmp(rho.rho.rows(), rho.rho.cols());
        for (int k = 0; k < n_cycles; ++k) {
            tmp.noalias() = u_fwd * rho.rho;
            rho.rho.noalias() = tmp * u_fwd.adjoint();
            rho = optical_reset(rho, spec);
            tmp.noalias() = u_back * rho.rho;
            rho.rho.noalias() = tmp * u_back.adjoint();
            rho = optical_reset(rho, spec);
        }
        out[i] = {delta_b, carbon_polarization(rho, spec, carbon)};
    });
    return out;
}

} // namespace dnpr
