#pragma once

#include <cmath>
#include <string>

#include "neuroage/aging.hpp"

namespace neuroage {

inline constexpr double kLifetimeSeconds = 2.0 * 365.0 * 86400.0;  // two years
inline constexpr double kReferenceRateHz = 50.0;

struct CalibrationResult {
    double a_fit = 0;           // solved fit constant
    double baseline_aging = 0;  // reference-workload aging at the lifetime horizon
    int iterations = 0;
};

// Aging of the constant-rate reference workload over the horizon, evaluated
// in closed form (exact for a constant rate with recovery disabled; runs at
// per-spike event granularity over two years are not an option).
inline double reference_aging(const AgingParams& p, const Environment& env,
                              double rate_hz = kReferenceRateHz,
                              double lifetime_s = kLifetimeSeconds) {
    const double n_spikes = rate_hz * lifetime_s;
    return n_spikes * env.delta_t_spike / weibull_scale(p, env, env.v_spike);
}

// Solves a_fit by bisection so the reference workload reaches aging 1
// (reliability e^-1) exactly at the lifetime horizon. The residual is
// strictly decreasing in a_fit, so a sign-changing bracket always exists.
inline CalibrationResult calibrate_a_fit(AgingParams params, const Environment& env,
                                         double rate_hz = kReferenceRateHz,
                                         double lifetime_s = kLifetimeSeconds,
                                         double rel_tol = 1e-9) {
    auto residual = [&](double a_fit) {
        AgingParams p = params;
        p.a_fit = a_fit;
        return reference_aging(p, env, rate_hz, lifetime_s) - 1.0;
    };

    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (residual(lo) < 0) {
        lo /= 2;
        if (++guard > 2000)
            throw ConvergenceError("calibration bracket search failed, lo=" + std::to_string(lo));
    }
    while (residual(hi) > 0) {
        hi *= 2;
        if (++guard > 2000)
            throw ConvergenceError("calibration bracket search failed, hi=" + std::to_string(hi));
    }

    CalibrationResult result;
    while ((hi - lo) > rel_tol * lo) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) > 0)
            lo = mid;
        else
            hi = mid;
        if (++result.iterations > 20000)
            throw ConvergenceError("calibration bisection did not converge, bracket [" +
                                   std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    result.a_fit = 0.5 * (lo + hi);
    params.a_fit = result.a_fit;
    result.baseline_aging = reference_aging(params, env, rate_hz, lifetime_s);
    return result;
}

}  // namespace neuroage
