#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dnpr/errors.hpp"
#include "dnpr/numerics.hpp"
#include "dnpr/rng.hpp"

namespace dnpr {

// --------------------------------------------------------------------------
// Closed-form sweep-rate transfer model
//
//   P(Bdot) = g(Bdot) q(Bdot) (1 - Q(Bdot))
//   Q = exp(-d0^2 / (|g_e| Bdot))          jump across the wider gap
//   q = exp(-d1^2 / (|g_e| Bdot)) (1 - Q)  transfer across the narrow gap
//   g = p_m (1 - exp(-|g_e| Bdot / k))     cycle-count prefactor
//
// Exponents are evaluated in coherent SI frequency units: gaps in Hz (so
// d^2 in s^-2), |g_e| = 2.80249e10 Hz/T (cyclic), Bdot in T/s (numerically
// equal to mT/ms), and k in s^-2 with 1 kHz^2 = 1e6 s^-2.
// --------------------------------------------------------------------------

inline constexpr double kGammaESI = 2.80249e10;  // Hz / T

struct LZParams {
    double delta0_kHz = 250.0;
    double delta1_kHz = 30.0;
    double k_kHz2 = 15.0;
    double p_m = 13.0;
};

inline void validate(const LZParams& p) {
    if (!(p.delta0_kHz > p.delta1_kHz) || !(p.delta1_kHz > 0.0))
        throw ConfigError("lz params: require delta0 > delta1 > 0");
    if (!(p.k_kHz2 > 0.0)) throw ConfigError("lz params: require k > 0");
}

struct LZComponents {
    double q_wide = 0.0;    // Q
    double q_narrow = 0.0;  // q
    double prefactor = 0.0; // g
    double value = 0.0;     // P
};

inline LZComponents eval_components(const LZParams& params,
                                    double rate_mT_per_ms) {
    validate(params);
    if (!(rate_mT_per_ms > 0.0))
        throw ConfigError("lz model: sweep rate must be positive");
    const double bdot_si = rate_mT_per_ms;  // T/s
    const double ge_bdot = kGammaESI * bdot_si;
    const double d0 = params.delta0_kHz * 1e3;
    const double d1 = params.delta1_kHz * 1e3;
    const double k_si = params.k_kHz2 * 1e6;

    LZComponents out;
    out.q_wide = std::exp(-d0 * d0 / ge_bdot);
    out.q_narrow = std::exp(-d1 * d1 / ge_bdot) * (1.0 - out.q_wide);
    out.prefactor = params.p_m * (1.0 - std::exp(-ge_bdot / k_si));
    out.value = out.prefactor * out.q_narrow * (1.0 - out.q_wide);
    return out;
}

inline double eval(const LZParams& params, double rate_mT_per_ms) {
    return eval_components(params, rate_mT_per_ms).value;
}

// Maximiser of |P| over [1e-3, 1e2] mT/ms: dense log grid then
// golden-section refinement to 1e-3 mT/ms.
inline double argmax_rate(const LZParams& params) {
    validate(params);
    if (params.p_m == 0.0)
        throw DegenerateModel("argmax_rate: p_m = 0 gives a flat curve");
    const double lo = 1e-3, hi = 1e2;
    const int n = 2000;
    double best_val = -1.0;
    int best_i = 0;
    for (int i = 0; i <= n; ++i) {
        const double r = lo * std::pow(hi / lo, static_cast<double>(i) / n);
        const double v = std::abs(eval(params, r));
        if (v > best_val) {
            best_val = v;
            best_i = i;
        }
    }
    const double bracket_lo =
        lo * std::pow(hi / lo, static_cast<double>(std::max(0, best_i - 1)) / n);
    const double bracket_hi =
        lo * std::pow(hi / lo, static_cast<double>(std::min(n, best_i + 1)) / n);
    return golden_section_min(
        [&](double r) { return -std::abs(eval(params, r)); }, bracket_lo,
        bracket_hi, 1e-3);
}

// --------------------------------------------------------------------------
// Least-squares fit
// --------------------------------------------------------------------------

struct RateCurve {
    std::vector<double> rates_mT_per_ms;
    std::vector<double> values;
    std::vector<double> sigmas;  // optional; empty = unweighted

    void check() const {
        if (rates_mT_per_ms.size() != values.size())
            throw ConfigError("rate curve: rate/value length mismatch");
        if (!sigmas.empty() && sigmas.size() != values.size())
            throw ConfigError("rate curve: sigma length mismatch");
        for (size_t i = 0; i < rates_mT_per_ms.size(); ++i) {
            if (!(rates_mT_per_ms[i] > 0.0))
                throw ConfigError("rate curve: rates must be positive");
            if (i > 0 && !(rates_mT_per_ms[i] > rates_mT_per_ms[i - 1]))
                throw ConfigError("rate curve: rates must be strictly increasing");
        }
    }
};

struct FitResult {
    LZParams params;
    std::vector<double> residuals;
    double rms = 0.0;
    bool converged = false;
    int iterations = 0;
    int best_start = -1;
};

namespace detail {

// Internal fit coordinates: delta0 = exp(a), delta1 = delta0 * sigmoid(c),
// k = exp(lk); the ordering constraint delta0 > delta1 > 0 holds by
// construction.
struct LZCoords {
    double a, c, lk, pm;

    LZParams to_params() const {
        LZParams p;
        p.delta0_kHz = std::exp(a);
        p.delta1_kHz = p.delta0_kHz / (1.0 + std::exp(-c));
        p.k_kHz2 = std::exp(lk);
        p.p_m = pm;
        return p;
    }
};

inline void fit_residuals(const LZCoords& x, const RateCurve& data,
                          std::vector<double>& r) {
    const LZParams p = x.to_params();
    r.resize(data.values.size());
    for (size_t i = 0; i < data.values.size(); ++i) {
        const double w = data.sigmas.empty() ? 1.0 : 1.0 / data.sigmas[i];
        r[i] = w * (eval(p, data.rates_mT_per_ms[i]) - data.values[i]);
    }
}

inline double rms_of(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return std::sqrt(s / static_cast<double>(r.size()));
}

// Levenberg-Marquardt with a forward-difference Jacobian on the 4 internal
// coordinates.
inline std::pair<LZCoords, int> levenberg_marquardt(LZCoords x,
                                                    const RateCurve& data,
                                                    int max_iter = 200) {
    const int m = static_cast<int>(data.values.size());
    std::vector<double> r, r_trial;
    fit_residuals(x, data, r);
    double cost = rms_of(r);
    double lambda = 1e-3;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        Eigen::MatrixXd jac(m, 4);
        double* coords[4] = {&x.a, &x.c, &x.lk, &x.pm};
        for (int p = 0; p < 4; ++p) {
            const double h = 1e-6 * std::max(1.0, std::abs(*coords[p]));
            LZCoords xp = x;
            double* cp[4] = {&xp.a, &xp.c, &xp.lk, &xp.pm};
            *cp[p] += h;
            fit_residuals(xp, data, r_trial);
            for (int i = 0; i < m; ++i) jac(i, p) = (r_trial[i] - r[i]) / h;
        }
        const Eigen::VectorXd rv =
            Eigen::Map<const Eigen::VectorXd>(r.data(), m);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * rv;
        if (jtr.cwiseAbs().maxCoeff() < 1e-12) break;

        bool stepped = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            for (int p = 0; p < 4; ++p) damped(p, p) += lambda * (jtj(p, p) + 1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            LZCoords xt = x;
            xt.a += step[0];
            xt.c = std::clamp(xt.c + step[1], -30.0, 30.0);
            xt.lk += step[2];
            xt.pm += step[3];
            fit_residuals(xt, data, r_trial);
            const double trial_cost = rms_of(r_trial);
            if (std::isfinite(trial_cost) && trial_cost < cost) {
                const double gain = cost - trial_cost;
                x = xt;
                r.swap(r_trial);
                cost = trial_cost;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (gain < 1e-14 * std::max(1.0, cost)) return {x, iter};
                break;
            }
            lambda *= 8.0;
        }
        if (!stepped) break;
    }
    return {x, iter};
}

} // namespace detail

// Multistart least squares over (log delta0, logit ratio, log k, p_m).
// Start points form a deterministic grid; results merge by (rms, start
// index).
inline FitResult fit(const RateCurve& data,
                     std::optional<LZParams> init = std::nullopt,
                     int multistart = 24) {
    data.check();
    if (data.values.size() < 4)
        throw ConfigError("fit: need at least 4 points for 4 parameters");
    double max_abs_val = 0.0;
    for (double v : data.values) max_abs_val = std::max(max_abs_val, std::abs(v));
    if (max_abs_val == 0.0) throw DegenerateData("fit: all data values are zero");
    if (multistart < 1) throw ConfigError("fit: multistart must be >= 1");

    // peak location seeds the amplitude sign
    size_t peak_i = 0;
    for (size_t i = 0; i < data.values.size(); ++i)
        if (std::abs(data.values[i]) > std::abs(data.values[peak_i])) peak_i = i;
    const double pm_sign = data.values[peak_i] >= 0.0 ? 1.0 : -1.0;

    std::vector<detail::LZCoords> starts;
    if (init) {
        validate(*init);
        const double ratio = init->delta1_kHz / init->delta0_kHz;
        starts.push_back({std::log(init->delta0_kHz),
                          std::log(ratio / (1.0 - ratio)), std::log(init->k_kHz2),
                          init->p_m});
    }
    // deterministic log-uniform grid, scrambled by a fixed stream
    std::mt19937_64 rng(0x6c7a666974ULL);
    while (static_cast<int>(starts.size()) < multistart) {
        const double d0 = std::exp(uniform(rng, std::log(10.0), std::log(2000.0)));
        const double ratio = uniform(rng, 0.03, 0.7);
        const double k = std::exp(uniform(rng, std::log(0.5), std::log(500.0)));
        starts.push_back({std::log(d0), std::log(ratio / (1.0 - ratio)),
                          std::log(k), pm_sign * std::max(1.0, max_abs_val)});
    }

    FitResult best;
    best.rms = std::numeric_limits<double>::infinity();
    for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
        auto [coords, iters] = detail::levenberg_marquardt(starts[s], data);
        std::vector<double> r;
        detail::fit_residuals(coords, data, r);
        const double rms = detail::rms_of(r);
        if (std::isfinite(rms) && rms < best.rms) {
            best.params = coords.to_params();
            best.residuals = std::move(r);
            best.rms = rms;
            best.iterations = iters;
            best.best_start = s;
        }
    }
    if (!std::isfinite(best.rms))
        throw FitFailed("fit: no start point produced a finite residual");
    best.converged = best.rms <= 1e-6 * std::max(1.0, max_abs_val) ||
                     best.iterations < 200;
    return best;
}

} // namespace dnpr
