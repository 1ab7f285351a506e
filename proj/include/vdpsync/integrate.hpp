#pragma once

#include "vdpsync/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vdpsync {

/// A time-stamped sequence of states with strictly increasing times.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;

    [[nodiscard]] size_t size() const { return times.size(); }
};

/// One classical fourth-order Runge-Kutta step. `rhs(t, x)` returns dx/dt.
template <class Rhs>
Vec rk4_step(Rhs&& rhs, double t, const Vec& x, double h) {
    const Vec k1 = rhs(t, x);
    const Vec k2 = rhs(t + 0.5 * h, Vec(x + (0.5 * h) * k1));
    const Vec k3 = rhs(t + 0.5 * h, Vec(x + (0.5 * h) * k2));
    const Vec k4 = rhs(t + h, Vec(x + h * k3));
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace detail {

inline void check_span(double t_start, double t_end, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
    if (!(t_end > t_start)) throw std::invalid_argument("integrate: t_end must exceed t_start");
}

[[noreturn]] inline void throw_blowup(double t) {
    throw numeric_error("integration blow-up: non-finite state at t=" + std::to_string(t), t);
}

}  // namespace detail

/// Fixed-step RK4 over [t_start, t_end], recording every step. The last step
/// is shortened so the final time equals t_end exactly. Deterministic for
/// identical inputs; throws numeric_error (with the failure time) if the
/// state stops being finite.
template <class Rhs>
Trajectory integrate(Rhs&& rhs, const Vec& x0, double t_start, double t_end, double dt) {
    detail::check_span(t_start, t_end, dt);
    if (!x0.allFinite()) throw std::invalid_argument("integrate: non-finite initial state");

    const double span = t_end - t_start;
    auto n_full = static_cast<std::int64_t>(std::floor(span / dt * (1.0 + 1e-14)));
    double rem = span - static_cast<double>(n_full) * dt;
    if (rem <= span * 1e-14) rem = 0.0;

    Trajectory traj;
    traj.times.reserve(static_cast<size_t>(n_full) + 2);
    traj.states.reserve(static_cast<size_t>(n_full) + 2);
    traj.times.push_back(t_start);
    traj.states.push_back(x0);

    Vec x = x0;
    for (std::int64_t k = 0; k < n_full; ++k) {
        const double t = t_start + static_cast<double>(k) * dt;
        x = rk4_step(rhs, t, x, dt);
        if (!x.allFinite()) detail::throw_blowup(t + dt);
        const double t_next = (k + 1 == n_full && rem == 0.0)
                                  ? t_end
                                  : t_start + static_cast<double>(k + 1) * dt;
        traj.times.push_back(t_next);
        traj.states.push_back(x);
    }
    if (rem > 0.0) {
        x = rk4_step(rhs, t_end - rem, x, rem);
        if (!x.allFinite()) detail::throw_blowup(t_end);
        traj.times.push_back(t_end);
        traj.states.push_back(x);
    }
    return traj;
}

/// Final state of the fixed-step RK4 flow over `duration`, without storing
/// the trajectory.
template <class Rhs>
Vec flow(Rhs&& rhs, const Vec& x0, double t_start, double duration, double dt) {
    detail::check_span(t_start, t_start + duration, dt);
    auto n_full = static_cast<std::int64_t>(std::floor(duration / dt * (1.0 + 1e-14)));
    double rem = duration - static_cast<double>(n_full) * dt;
    if (rem <= duration * 1e-14) rem = 0.0;

    Vec x = x0;
    for (std::int64_t k = 0; k < n_full; ++k) {
        const double t = t_start + static_cast<double>(k) * dt;
        x = rk4_step(rhs, t, x, dt);
        if (!x.allFinite()) detail::throw_blowup(t + dt);
    }
    if (rem > 0.0) {
        x = rk4_step(rhs, t_start + duration - rem, x, rem);
        if (!x.allFinite()) detail::throw_blowup(t_start + duration);
    }
    return x;
}

/// A refined passage through the section {x[c2] = 0, x[c1] > 0, downward}.
struct SectionCrossing {
    double t = 0.0;
    Vec state;
};

/// Refine a bracketed downward zero crossing of the scalar `section(x)`
/// inside one integration step of width h starting at (t0, before), given
/// section(before) > 0 and section(after the full step) <= 0. The bracket is
/// bisected on the substep length; each probe is a single RK4 step, so the
/// refined state is consistent with the surrounding flow to local truncation
/// error.
template <class Rhs, class Section>
SectionCrossing refine_functional_crossing(Rhs&& rhs, double t0, const Vec& before, double h,
                                           Section&& section, int max_iters = 60) {
    double lo = 0.0;  // section > 0 here
    double hi = h;    // section <= 0 here
    Vec x_hi = rk4_step(rhs, t0, before, hi);
    for (int it = 0; it < max_iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const Vec x_mid = rk4_step(rhs, t0, before, mid);
        if (section(x_mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
            x_hi = x_mid;
        }
    }
    return SectionCrossing{t0 + hi, x_hi};
}

/// Component-wise form of the section {x[c2] = 0, x[c1] > 0, downward}.
/// Returns nullopt if the refined point fails the section conditions
/// (x[c1] > 0 and decreasing x[c2]).
template <class Rhs>
std::optional<SectionCrossing> refine_section_crossing(Rhs&& rhs, double t0, const Vec& before,
                                                       double h, int c1, int c2,
                                                       int max_iters = 60) {
    SectionCrossing cross = refine_functional_crossing(
        rhs, t0, before, h, [c2](const Vec& x) { return x[c2]; }, max_iters);
    if (!(cross.state[c1] > 0.0)) return std::nullopt;
    const Vec dx = rhs(cross.t, cross.state);
    if (!(dx[c2] < 0.0)) return std::nullopt;
    return cross;
}

/// Result of Poincare-section period detection.
struct PeriodEstimate {
    double period = 0.0;
    Vec anchor;           // refined section state of the last crossing used
    double consistency = 0.0;  // |T_k - T_{k+1}| between the two measured periods
};

/// Detect the period of an attracting cycle: flow for `settle_time`, then
/// time three successive refined crossings of the section
/// {x[c2] = 0, x[c1] > 0, downward}. The two resulting period measurements
/// must agree within `tol`. The anchor is the last crossing state.
template <class Rhs>
PeriodEstimate find_period(Rhs&& rhs, const Vec& x0, double settle_time, double tol, double dt,
                           int c1 = 0, int c2 = 1, double search_budget = 200.0) {
    if (!(settle_time > 0.0)) throw std::invalid_argument("find_period: settle_time must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("find_period: tol must be > 0");

    Vec x = flow(rhs, x0, 0.0, settle_time, dt);

    std::vector<double> crossing_times;
    std::vector<Vec> crossing_states;
    double t = settle_time;
    auto steps = static_cast<std::int64_t>(std::ceil(search_budget / dt));
    for (std::int64_t k = 0; k < steps && crossing_times.size() < 3; ++k) {
        const Vec x_next = rk4_step(rhs, t, x, dt);
        if (!x_next.allFinite()) detail::throw_blowup(t + dt);
        if (x[c2] > 0.0 && x_next[c2] <= 0.0 && x[c1] > 0.0) {
            if (auto cross = refine_section_crossing(rhs, t, x, dt, c1, c2)) {
                crossing_times.push_back(cross->t);
                crossing_states.push_back(cross->state);
            }
        }
        x = x_next;
        t += dt;
    }
    if (crossing_times.size() < 3)
        throw numeric_error("find_period: no periodic section crossings found within budget", t);

    const double T1 = crossing_times[1] - crossing_times[0];
    const double T2 = crossing_times[2] - crossing_times[1];
    if (std::abs(T1 - T2) >= tol)
        throw numeric_error("find_period: successive periods differ by " +
                            std::to_string(std::abs(T1 - T2)) + " (tol " + std::to_string(tol) +
                            ")");
    return {T2, crossing_states[2], std::abs(T1 - T2)};
}

}  // namespace vdpsync
