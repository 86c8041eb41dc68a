#include <doctest.h>

#include <cmath>
#include <vector>

#include "neuroage/aging.hpp"
#include "neuroage/rng.hpp"

using namespace neuroage;

namespace {

// Independent gamma-function oracle (Lanczos, g=7, 9 terms). Kept separate
// from the implementation path, which uses std::tgamma.
double gamma_lanczos(double x) {
    static const double c[9] = {0.99999999999980993,  676.5203681218851,   -1259.1392167224028,
                                771.32342877765313,   -176.61502916214059, 12.507343278686905,
                                -0.13857109526572012, 9.9843695780195716e-6,
                                1.5056327351493116e-7};
    if (x < 0.5) return M_PI / (std::sin(M_PI * x) * gamma_lanczos(1.0 - x));
    x -= 1.0;
    double a = c[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
    return std::sqrt(2.0 * M_PI) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4 * fm + fb); }

template <typename F>
double adaptive_simpson(F f, double a, double b, double eps, int depth, double whole, double fa,
                        double fm, double fb) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    if (depth <= 0 || std::abs(left + right - whole) <= 15 * eps) return left + right;
    return adaptive_simpson(f, a, m, eps / 2, depth - 1, left, fa, flm, fm) +
           adaptive_simpson(f, m, b, eps / 2, depth - 1, right, fm, frm, fb);
}

template <typename F>
double integrate(F f, double a, double b, double eps = 1e-11) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return adaptive_simpson(f, a, b, eps, 48, simpson(fa, fm, fb, b - a), fa, fm, fb);
}

// Quadrature of the Weibull survival curve over [0, inf), the defining
// integral that mttf_bti's closed form must reproduce.
double mttf_by_quadrature(double alpha, double beta) {
    // After t = alpha*x the integrand exp(-x^beta) decays below 1e-26 by
    // x = 60 for every beta >= 1.
    auto f = [beta](double x) { return std::exp(-std::pow(x, beta)); };
    return alpha * integrate(f, 0.0, 60.0);
}

AgingParams params_with(double a_fit, double gamma, double e_a, double beta) {
    AgingParams p;
    p.a_fit = a_fit;
    p.gamma = gamma;
    p.e_a = e_a;
    p.beta = beta;
    return p;
}

}  // namespace

TEST_CASE("gamma oracle agrees with std::tgamma to 12+ digits on [1,2]") {
    CHECK(gamma_lanczos(1.5) == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-13));
    CHECK(std::tgamma(1.5) == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-14));
    for (double x = 1.0; x <= 2.0; x += 1.0 / 64)
        CHECK(std::tgamma(x) == doctest::Approx(gamma_lanczos(x)).epsilon(1e-12));
}

TEST_CASE("mttf_tddb") {
    Environment env;
    CHECK(mttf_tddb(params_with(1, 1e-300, 0.2, 2), 4.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mttf_tddb(params_with(1, 1, 0.2, 2), 4.0) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-13));
    // frozen: 2*e^{-1.5}
    CHECK(mttf_tddb(params_with(2, 0.5, 0.2, 2), 9.0) ==
          doctest::Approx(0.44626032029685964).epsilon(1e-13));
    // strictly decreasing in v
    double prev = mttf_tddb(params_with(2, 0.5, 0.2, 2), 1.0);
    for (double v = 2; v <= 10; ++v) {
        const double cur = mttf_tddb(params_with(2, 0.5, 0.2, 2), v);
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK_THROWS_AS(mttf_tddb(params_with(1, 1, 0.2, 2), 0.0), std::domain_error);
    CHECK_THROWS_AS(mttf_tddb(params_with(1, 1, 0.2, 2), -3.0), std::domain_error);
}

TEST_CASE("weibull_scale") {
    Environment env;

    // beta=1 (Gamma(2)=1), a_fit=1, gamma=1, e_a -> 0, v=2 -> 0.5
    AgingParams p = params_with(1, 1, 1e-300, 1);
    CHECK(weibull_scale(p, env, 2.0) == doctest::Approx(0.5).epsilon(1e-13));

    // beta=2 -> 1/Gamma(1.5) = 2/sqrt(pi), frozen via the gamma oracle
    p = params_with(1, 1, 1e-300, 2);
    CHECK(weibull_scale(p, env, 1.0) == doctest::Approx(1.1283791670955126).epsilon(1e-13));
    CHECK(weibull_scale(p, env, 1.0) == doctest::Approx(1.0 / gamma_lanczos(1.5)).epsilon(1e-13));

    // numerator chosen equal to Gamma(1+1/beta) -> alpha = 1
    p = params_with(std::tgamma(1.5), 1, 1e-300, 2);
    CHECK(weibull_scale(p, env, 1.0) == doctest::Approx(1.0).epsilon(1e-13));

    // strictly decreasing in v and in temperature
    p = params_with(1, 2.5, 0.2, 2);
    CHECK(weibull_scale(p, env, 3.0) < weibull_scale(p, env, 2.0));
    Environment hot = env;
    hot.temperature = 340.0;
    CHECK(weibull_scale(p, hot, 3.0) < weibull_scale(p, env, 3.0));

    CHECK_THROWS_AS(weibull_scale(p, env, 0.0), std::domain_error);
    Environment bad = env;
    bad.temperature = -1;
    CHECK_THROWS_AS(weibull_scale(p, bad, 3.0), std::domain_error);
}

TEST_CASE("mttf_bti algebraic identity and quadrature oracle") {
    Environment env;

    // beta=1: MTTF == alpha (exponential case)
    AgingParams p = params_with(3, 1.5, 0.3, 1);
    CHECK(mttf_bti(p, env, 2.0) == doctest::Approx(weibull_scale(p, env, 2.0)).epsilon(1e-13));

    // beta=2, alpha=1 -> MTTF = sqrt(pi)/2
    p = params_with(std::tgamma(1.5), 1, 1e-300, 2);
    CHECK(weibull_scale(p, env, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(mttf_bti(p, env, 1.0) == doctest::Approx(0.8862269254527580).epsilon(1e-13));

    // identity with the closed form, randomized draws
    CounterRng rng{20260809};
    int draw = 0;
    for (double beta : {1.0, 1.5, 2.0, 3.0}) {
        for (int i = 0; i < 20; ++i, ++draw) {
            AgingParams q;
            q.a_fit = 0.1 + 10 * rng.uniform(1, draw);
            q.gamma = 0.5 + 4 * rng.uniform(2, draw);
            q.e_a = 0.05 + 0.5 * rng.uniform(3, draw);
            q.beta = beta;
            const double v = 1.0 + 4 * rng.uniform(4, draw);
            const double closed = q.a_fit / std::pow(v, q.gamma) *
                                  std::exp(q.e_a / (q.k_b * env.temperature));
            CHECK(mttf_bti(q, env, v) == doctest::Approx(closed).epsilon(1e-12));
            CHECK(mttf_bti(q, env, v) ==
                  doctest::Approx(mttf_by_quadrature(weibull_scale(q, env, v), beta))
                      .epsilon(1e-6));
        }
    }
}

TEST_CASE("reliability") {
    AgingParams p = params_with(1, 1, 0.2, 2);
    CHECK(reliability(0.0, p) == doctest::Approx(1.0));
    CHECK(reliability(1.0, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
    p.beta = 7.3;
    CHECK(reliability(1.0, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
    p.beta = 2;
    CHECK(reliability(0.5, p) == doctest::Approx(0.7788007830714049).epsilon(1e-13));
    CHECK_THROWS_AS(reliability(-0.1, p), std::domain_error);
}

TEST_CASE("aging_from_spikes") {
    Environment env;
    AgingParams p = params_with(1, 1, 1e-300, 2);

    CHECK(aging_from_spikes(0, env, p) == 0.0);

    // n=1, dt=1ms, alpha forced to 1s
    Environment e1 = env;
    e1.delta_t_spike = 1e-3;
    AgingParams p1 = params_with(std::tgamma(1.5) * std::pow(e1.v_spike, 1.0), 1, 1e-300, 2);
    CHECK(weibull_scale(p1, e1, e1.v_spike) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(aging_from_spikes(1, e1, p1) == doctest::Approx(1e-3).epsilon(1e-13));

    // n=1000 at (beta=2, e_a->0, a_fit=1, gamma=1, V=3): 1.0 / alpha(3)
    CHECK(aging_from_spikes(1000, env, p) ==
          doctest::Approx(1.0 / weibull_scale(p, env, 3.0)).epsilon(1e-12));

    // linear in n, increasing in v_spike and temperature
    CHECK(aging_from_spikes(2000, env, p) ==
          doctest::Approx(2 * aging_from_spikes(1000, env, p)).epsilon(1e-13));
    Environment faster = env;
    faster.v_spike = 3.5;
    CHECK(aging_from_spikes(10, faster, p) > aging_from_spikes(10, env, p));
    AgingParams pt = params_with(1, 2.5, 0.2, 2);
    double prev = 0;
    for (double t : {300.0, 320.0, 340.0}) {
        Environment et = env;
        et.temperature = t;
        const double a = aging_from_spikes(10, et, pt);
        CHECK(a > prev);  // d(aging)/dT > 0 by forward differences
        prev = a;
    }
}

TEST_CASE("per-interval accumulation equals the closed form for constant V, dt") {
    Environment env;
    AgingParams p = params_with(2, 2.5, 0.2, 2);
    for (std::uint64_t n : {std::uint64_t{1}, std::uint64_t{1000}, std::uint64_t{1000000}}) {
        std::vector<StressInterval> intervals(n, {env.delta_t_spike, env.v_spike});
        const double summed = aging_from_intervals(intervals, env, p);
        const double closed = aging_from_spikes(n, env, p);
        CHECK(summed == doctest::Approx(closed).epsilon(1e-9));
    }
    // varying-voltage form stays order-independent in total
    std::vector<StressInterval> mixed = {{1e-3, 3.0}, {2e-3, 2.5}, {0.5e-3, 3.5}};
    std::vector<StressInterval> rev(mixed.rbegin(), mixed.rend());
    CHECK(aging_from_intervals(mixed, env, p) ==
          doctest::Approx(aging_from_intervals(rev, env, p)).epsilon(1e-13));
}

TEST_CASE("apply_stress splits and converts") {
    Environment env;
    AgingParams p = params_with(1, 1, 1e-300, 2);

    NeuronAgingState s;
    SUBCASE("no spikes, no time: unchanged") {
        s.aging_recoverable = 0.25;
        s.aging_permanent = 0.5;
        const NeuronAgingState after = apply_stress(s, 0, 0.0, env, p);
        CHECK(after.aging_recoverable == 0.25);
        CHECK(after.aging_permanent == 0.5);
    }

    SUBCASE("rho=1 with infinite tau_convert keeps everything recoverable") {
        p.rho_recoverable = 1.0;
        p.tau_convert = std::numeric_limits<double>::infinity();
        NeuronAgingState after = apply_stress(s, 5, 123.0, env, p);
        CHECK(after.aging_permanent == 0.0);
        CHECK(after.aging_recoverable ==
              doctest::Approx(aging_from_spikes(5, env, p)).epsilon(1e-13));
    }

    SUBCASE("rho=0.6 split of a unit of fresh stress") {
        // pin aging-per-spike to exactly 1.0
        Environment e1 = env;
        e1.delta_t_spike = 1.0;
        AgingParams q = params_with(std::tgamma(1.5) * std::pow(e1.v_spike, 1.0), 1, 1e-300, 2);
        q.rho_recoverable = 0.6;
        q.tau_convert = 10.0;
        const NeuronAgingState after = apply_stress(s, 1, 1e-9, e1, q);
        CHECK(after.aging_recoverable == doctest::Approx(0.6).epsilon(1e-9));
        CHECK(after.aging_permanent == doctest::Approx(0.4).epsilon(1e-9));
    }

    SUBCASE("conversion moves the pre-existing pool, preserving the total") {
        s.aging_recoverable = 2.0;
        p.tau_convert = 10.0;
        const NeuronAgingState after = apply_stress(s, 0, 10.0, env, p);
        CHECK(after.aging_recoverable == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
        CHECK(after.aging_permanent ==
              doctest::Approx(2.0 * (1 - std::exp(-1.0))).epsilon(1e-12));
        CHECK(after.total() == doctest::Approx(s.total()).epsilon(1e-13));
    }

    CHECK_THROWS_AS(apply_stress(s, 1, -1.0, env, p), StateError);
}

TEST_CASE("apply_recovery decays only the recoverable pool") {
    AgingParams p = params_with(1, 1, 0.2, 2);
    p.tau_recover_destress = 0.1;
    p.tau_recover_idle = 1.0;

    NeuronAgingState s;
    s.aging_recoverable = 2.0;
    s.aging_permanent = 0.7;

    CHECK(apply_recovery(s, 0.0, RecoveryMode::Idle, p).total() == doctest::Approx(s.total()));

    const NeuronAgingState d = apply_recovery(s, 0.1, RecoveryMode::Destress, p);
    CHECK(d.aging_recoverable == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-12));
    CHECK(d.aging_permanent == 0.7);

    const NeuronAgingState i = apply_recovery(s, 0.1, RecoveryMode::Idle, p);
    CHECK(i.aging_recoverable == doctest::Approx(2.0 * std::exp(-0.1)).epsilon(1e-12));
    CHECK(i.aging_recoverable > d.aging_recoverable);  // idle recovers slower

    const NeuronAgingState forever = apply_recovery(s, 1e9, RecoveryMode::Destress, p);
    CHECK(forever.aging_recoverable == doctest::Approx(0.0));
    CHECK(forever.total() == doctest::Approx(s.aging_permanent));

    CHECK_THROWS_AS(apply_recovery(s, -0.5, RecoveryMode::Idle, p), std::domain_error);
}

TEST_CASE("stress/recovery composition: monotone totals, permanent floor") {
    Environment env;
    AgingParams p = params_with(1, 2.5, 0.2, 2);
    p.rho_recoverable = 0.7;
    p.tau_convert = 5.0;
    p.tau_recover_destress = 0.05;
    p.tau_recover_idle = 0.5;

    CounterRng rng{42};
    NeuronAgingState s;
    double perm_prev = 0;
    for (int step = 0; step < 2000; ++step) {
        const double u = rng.uniform(7, step);
        const double total_before = s.total();
        if (u < 0.5) {
            const auto n = static_cast<std::uint64_t>(u * 10);
            s = apply_stress(s, n, 5.0 * rng.uniform(8, step), env, p);
            CHECK(s.total() >= total_before - 1e-18);
        } else {
            const auto mode = u < 0.75 ? RecoveryMode::Destress : RecoveryMode::Idle;
            s = apply_recovery(s, rng.uniform(9, step), mode, p);
            CHECK(s.total() <= total_before + 1e-18);
        }
        CHECK(s.total() >= s.aging_permanent - 1e-18);
        CHECK(s.aging_permanent >= perm_prev - 1e-18);  // permanent never shrinks
        perm_prev = s.aging_permanent;
    }
}

TEST_CASE("more frequent de-stressing never ages more") {
    // 50 Hz constant spiking for 30 s; window of 5 ms every P seconds.
    Environment env;
    AgingParams p = params_with(1, 2.5, 0.2, 2);

    auto final_total = [&](double destress_period) {
        NeuronAgingState s;
        const double tdsc = 5e-3;
        double next_destress =
            destress_period > 0 ? destress_period : std::numeric_limits<double>::infinity();
        double prev = 0.0;
        for (double t = 0.02; t <= 30.0; t += 0.02) {
            while (next_destress <= t) {
                s = apply_recovery(s, std::max(0.0, next_destress - prev), RecoveryMode::Idle, p);
                s = apply_recovery(s, tdsc, RecoveryMode::Destress, p);
                prev = next_destress + tdsc;
                next_destress += destress_period;
            }
            const double idle = std::max(0.0, t - prev);  // spikes in a window slip to its end
            s = apply_recovery(s, idle, RecoveryMode::Idle, p);
            s = apply_stress(s, 1, idle, env, p);
            prev = std::max(prev, t);
        }
        return s.total();
    };

    const double every_100ms = final_total(0.1);
    const double every_1s = final_total(1.0);
    const double never = final_total(0.0);
    CHECK(every_100ms <= every_1s);
    CHECK(every_1s <= never);
    CHECK(every_100ms < never);  // the two extremes clearly separate
}

TEST_CASE("vth_shift") {
    VthCalibration cal;
    CHECK_THROWS_AS(vth_shift_pct(1.0, cal), ConfigError);
    cal.baseline_aging = 2.5;
    CHECK(vth_shift_pct(0.0, cal) == doctest::Approx(0.0));
    CHECK(vth_shift_pct(2.5, cal) == doctest::Approx(10.0).epsilon(1e-13));
    CHECK(vth_shift_pct(0.48 * 2.5, cal) == doctest::Approx(4.8).epsilon(1e-13));
    CHECK_THROWS_AS(vth_shift_pct(-1.0, cal), std::domain_error);
}

TEST_CASE("params validation") {
    AgingParams p;
    CHECK_NOTHROW(p.validate());
    p.rho_recoverable = 1.5;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
    p = AgingParams{};
    p.tau_recover_destress = 2.0;  // must stay below tau_recover_idle
    CHECK_THROWS_AS(p.validate(), std::domain_error);

    Environment env;
    CHECK_NOTHROW(env.validate());
    env.v_destress = 2.0;  // violates v_destress < v_idle
    CHECK_THROWS_AS(env.validate(), std::domain_error);
}
