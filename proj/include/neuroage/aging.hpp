#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

#include "neuroage/types.hpp"

namespace neuroage {

// Reliability-model constants. All values SI except e_a and k_b, which are
// in electron-volt units so that e_a/(k_b*T) is dimensionless.
struct AgingParams {
    double a_fit = 1.0;      // fit constant of the MTTF laws
    double gamma = 2.5;      // voltage exponent
    double e_a = 0.2;        // activation energy [eV]
    double k_b = 8.617333262e-5;  // Boltzmann constant [eV/K]
    double beta = 2.0;       // Weibull slope

    // Stress/recovery split. A fraction rho_recoverable of fresh stress is
    // annealable; the rest is permanent. While a stressed circuit is not
    // being de-stressed, the recoverable pool leaks to permanent with time
    // constant tau_convert. Infinity disables the corresponding term.
    double rho_recoverable = 0.7;
    double tau_recover_destress = 0.05;  // [s], recovery during a de-stress window
    double tau_recover_idle = 0.5;       // [s], recovery while idling at V_idle
    double tau_convert = 10.0;           // [s], recoverable -> permanent leakage

    void validate() const {
        if (!(a_fit > 0)) throw std::domain_error("aging.a_fit must be > 0");
        if (!(gamma > 0)) throw std::domain_error("aging.gamma must be > 0");
        if (!(e_a > 0)) throw std::domain_error("aging.e_a must be > 0");
        if (!(k_b > 0)) throw std::domain_error("aging.k_b must be > 0");
        if (!(beta > 0)) throw std::domain_error("aging.beta must be > 0");
        if (!(rho_recoverable >= 0.0 && rho_recoverable <= 1.0))
            throw std::domain_error("aging.rho_recoverable must be in [0,1]");
        if (!(tau_recover_destress > 0)) throw std::domain_error("aging.tau_recover_destress must be > 0");
        if (!(tau_recover_idle > 0)) throw std::domain_error("aging.tau_recover_idle must be > 0");
        if (!(tau_convert > 0)) throw std::domain_error("aging.tau_convert must be > 0");
        if (!(tau_recover_destress < tau_recover_idle))
            throw std::domain_error("aging.tau_recover_destress must be < tau_recover_idle");
    }
};

// Operating point of the chip: temperature plus the charge-pump voltage
// levels and the fixed spike duration.
struct Environment {
    double temperature = 300.0;   // [K]
    double v_spike = 3.0;         // [V], overdrive while generating a spike
    double v_idle = 1.8;          // [V], charge pump at rest
    double v_destress = 1.2;      // [V], discharged level during de-stress
    double delta_t_spike = 1e-3;  // [s], fixed spike duration

    void validate() const {
        if (!(temperature > 0)) throw std::domain_error("env.temperature must be > 0");
        if (!(v_destress < v_idle && v_idle < v_spike))
            throw std::domain_error("env voltages must satisfy v_destress < v_idle < v_spike");
        if (!(v_destress > 0)) throw std::domain_error("env.v_destress must be > 0");
        if (!(delta_t_spike > 0)) throw std::domain_error("env.delta_t_spike must be > 0");
    }
};

// Accumulated degradation of one neuron circuit, split into the pool that
// anneals out under low voltage and the part that never does.
struct NeuronAgingState {
    double aging_recoverable = 0.0;
    double aging_permanent = 0.0;
    SimTime last_update = 0;

    double total() const { return aging_recoverable + aging_permanent; }
};

enum class RecoveryMode { Destress, Idle };

// MTTF under time-dependent dielectric breakdown: a_fit * exp(-gamma*sqrt(v)).
inline double mttf_tddb(const AgingParams& p, double v) {
    if (!(v > 0)) throw std::domain_error("mttf_tddb: voltage must be > 0");
    return p.a_fit * std::exp(-p.gamma * std::sqrt(v));
}

// Weibull scale parameter alpha(V) = (a_fit/V^gamma * e^{e_a/(k_b*T)}) / Gamma(1+1/beta).
// Strictly decreasing in both v and temperature.
inline double weibull_scale(const AgingParams& p, const Environment& env, double v) {
    if (!(v > 0)) throw std::domain_error("weibull_scale: voltage must be > 0");
    if (!(env.temperature > 0)) throw std::domain_error("weibull_scale: temperature must be > 0");
    const double mttf = p.a_fit / std::pow(v, p.gamma) *
                        std::exp(p.e_a / (p.k_b * env.temperature));
    return mttf / std::tgamma(1.0 + 1.0 / p.beta);
}

// MTTF under bias temperature instability, expressed through the Weibull
// scale: alpha(V) * Gamma(1+1/beta). Algebraically identical to
// a_fit/V^gamma * e^{e_a/(k_b*T)}.
inline double mttf_bti(const AgingParams& p, const Environment& env, double v) {
    return weibull_scale(p, env, v) * std::tgamma(1.0 + 1.0 / p.beta);
}

// Survival probability for a given accumulated aging: R = exp(-aging^beta).
inline double reliability(double aging_total, const AgingParams& p) {
    if (!(aging_total >= 0)) throw std::domain_error("reliability: aging must be >= 0");
    return std::exp(-std::pow(aging_total, p.beta));
}

// Aging contributed by one spike: delta_t_spike / alpha(v_spike).
inline double aging_per_spike(const Environment& env, const AgingParams& p) {
    return env.delta_t_spike / weibull_scale(p, env, env.v_spike);
}

// Closed form for n spikes of fixed voltage and duration: n * dt / alpha(V).
inline double aging_from_spikes(std::uint64_t n, const Environment& env, const AgingParams& p) {
    return static_cast<double>(n) * aging_per_spike(env, p);
}

// One stress interval: a duration spent at a given overdrive voltage.
struct StressInterval {
    double duration;  // [s]
    double voltage;   // [V]
};

// General per-interval accumulation, sum of dt_i / alpha(V_i). Reduces to
// aging_from_spikes when every interval has the same duration and voltage.
inline double aging_from_intervals(std::span<const StressInterval> intervals,
                                   const Environment& env, const AgingParams& p) {
    double total = 0.0;
    for (const StressInterval& iv : intervals) {
        if (!(iv.duration >= 0)) throw std::domain_error("aging_from_intervals: negative duration");
        total += iv.duration / weibull_scale(p, env, iv.voltage);
    }
    return total;
}

// Applies the stress of n_spikes spikes. `elapsed` is the un-de-stressed
// interval since the state was last advanced; over it, the pre-existing
// recoverable pool leaks to permanent with tau_convert. New stress is split
// rho_recoverable / (1 - rho_recoverable). Total aging never decreases here.
inline NeuronAgingState apply_stress(NeuronAgingState state, std::uint64_t n_spikes,
                                     double elapsed, const Environment& env,
                                     const AgingParams& p) {
    if (!(elapsed >= 0)) throw StateError("apply_stress: time regression (elapsed < 0)");
    if (elapsed > 0 && std::isfinite(p.tau_convert)) {
        const double converted = state.aging_recoverable * (1.0 - std::exp(-elapsed / p.tau_convert));
        state.aging_recoverable -= converted;
        state.aging_permanent += converted;
    }
    if (n_spikes > 0) {
        const double fresh = aging_from_spikes(n_spikes, env, p);
        state.aging_recoverable += p.rho_recoverable * fresh;
        state.aging_permanent += (1.0 - p.rho_recoverable) * fresh;
    }
    return state;
}

// Anneals the recoverable pool: exponential decay with the mode's time
// constant. Permanent aging is untouched, so the total never drops below it.
inline NeuronAgingState apply_recovery(NeuronAgingState state, double duration,
                                       RecoveryMode mode, const AgingParams& p) {
    if (!(duration >= 0)) throw std::domain_error("apply_recovery: negative duration");
    const double tau = mode == RecoveryMode::Destress ? p.tau_recover_destress
                                                      : p.tau_recover_idle;
    if (duration > 0 && std::isfinite(tau))
        state.aging_recoverable *= std::exp(-duration / tau);
    return state;
}

// Normalization anchor for threshold-voltage reporting: the total aging the
// unmanaged reference workload accumulates over the full lifetime run.
struct VthCalibration {
    double baseline_aging = 0.0;  // > 0 once calibrated

    bool calibrated() const { return baseline_aging > 0; }
};

// Threshold-voltage shift in percent, linear in total aging and pinned so
// the calibration baseline maps to 10%.
inline double vth_shift_pct(double aging_total, const VthCalibration& cal) {
    if (!cal.calibrated())
        throw ConfigError("vth_shift: calibration.baseline_aging is not set");
    if (!(aging_total >= 0)) throw std::domain_error("vth_shift: aging must be >= 0");
    return 10.0 * aging_total / cal.baseline_aging;
}

}  // namespace neuroage
