#pragma once

#include "vdpsync/common.hpp"
#include "vdpsync/dynamics.hpp"
#include "vdpsync/integrate.hpp"

#include <vector>

namespace vdpsync {

/// Anchor state and period of the blended-dynamics limit cycle.
struct LimitCycle {
    Vec2 anchor;
    double period = 0.0;
    double consistency = 0.0;
};

/// Uniform sampling of one period of the blended-dynamics cycle:
/// f states spaced dt = T / f apart, starting at the anchor.
struct CycleSample {
    double T = 0.0;             // period
    double dt = 0.0;            // sampling interval, T / f
    int f = 0;                  // sample count
    std::vector<double> times;  // l * dt, l = 0 .. f-1
    std::vector<Vec2> states;   // cycle states at those times
    Vec2 anchor = Vec2::Zero(); // states[0]
};

/// Locate the blended-dynamics limit cycle: settle from `x0`, then detect the
/// period on the section {x2 = 0, x1 > 0, downward crossing}, refining each
/// crossing by bisection. Successive period measurements must agree within
/// `tol`.
inline LimitCycle find_limit_cycle(const OscillatorSet& osc, double settle_time = 100.0,
                                   double tol = 1e-6, double dt = 1e-3,
                                   const Vec2& x0 = Vec2(2.0, 0.0)) {
    auto rhs = [&osc](double, const Vec& s) -> Vec {
        return blended_rhs(Vec2(s[0], s[1]), osc);
    };
    PeriodEstimate est = find_period(rhs, Vec(x0), settle_time, tol, dt);
    return {Vec2(est.anchor[0], est.anchor[1]), est.period, est.consistency};
}

/// Sample the cycle into f states: states[l] is the blended flow of the
/// anchor over l * (T / f). Each interval is integrated with at least 10
/// substeps (more if `dt` is finer).
inline CycleSample sample_cycle(const Vec2& anchor, double T, int f, const OscillatorSet& osc,
                                double dt = 1e-3) {
    if (f < 2) throw std::invalid_argument("sample_cycle: need f >= 2");
    if (!(T > 0.0)) throw std::invalid_argument("sample_cycle: period must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("sample_cycle: dt must be positive");

    CycleSample cs;
    cs.T = T;
    cs.f = f;
    cs.dt = T / static_cast<double>(f);
    cs.anchor = anchor;
    cs.times.resize(static_cast<size_t>(f));
    cs.states.resize(static_cast<size_t>(f));

    auto rhs = [&osc](double, const Vec& s) -> Vec {
        return blended_rhs(Vec2(s[0], s[1]), osc);
    };
    const int substeps = std::max(10, static_cast<int>(std::ceil(cs.dt / dt)));
    const double h = cs.dt / static_cast<double>(substeps);

    Vec s(anchor);
    for (int l = 0; l < f; ++l) {
        cs.times[static_cast<size_t>(l)] = static_cast<double>(l) * cs.dt;
        cs.states[static_cast<size_t>(l)] = Vec2(s[0], s[1]);
        if (l + 1 < f) {
            const double t0 = static_cast<double>(l) * cs.dt;
            for (int k = 0; k < substeps; ++k)
                s = rk4_step(rhs, t0 + k * h, s, h);
            if (!s.allFinite())
                throw numeric_error("sample_cycle: non-finite state", (l + 1) * cs.dt);
        }
    }
    return cs;
}

}  // namespace vdpsync
