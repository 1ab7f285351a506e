#pragma once

#include "vdpsync/common.hpp"
#include "vdpsync/dynamics.hpp"
#include "vdpsync/gain_opt.hpp"
#include "vdpsync/graph.hpp"
#include "vdpsync/integrate.hpp"
#include "vdpsync/limit_cycle.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vdpsync {

enum class SimMode { Phase1, Phase2, Resync };

inline const char* to_string(SimMode m) {
    switch (m) {
        case SimMode::Phase1: return "phase1";
        case SimMode::Phase2: return "phase2";
        default: return "resync";
    }
}

/// Switch-back policy: when the sampled pairwise deviation exceeds
/// `error_threshold`, revert to static coupling until the network is within
/// `resync_epsilon` of a fresh blended reference and returns to the cycle
/// anchor, then resume the schedule at sample 0.
struct HybridOptions {
    double error_threshold = 0.4;
    double resync_epsilon = 0.1;
};

/// Per-oscillator starting points: each oscillator settles alone from (2, 0)
/// onto its own limit cycle, so the network starts from scattered states on
/// distinct cycles.
inline std::vector<Vec2> default_initial_states(const OscillatorSet& osc, double settle = 60.0,
                                                double dt = 1e-3) {
    std::vector<Vec2> x0;
    x0.reserve(static_cast<size_t>(osc.size()));
    for (int i = 0; i < osc.size(); ++i) {
        const double mu = osc.mu(i);
        auto rhs = [mu](double, const Vec& s) -> Vec { return Vec(vdp_rhs(Vec2(s[0], s[1]), mu)); };
        const Vec s = flow(rhs, Vec(Vec2(2.0, 0.0)), 0.0, settle, dt);
        x0.emplace_back(s[0], s[1]);
    }
    return x0;
}

/// Everything a two-phase run needs. k_c is expected positive for a
/// meaningful phase one; with k_c = 0 a heterogeneous network never
/// synchronizes and phase one times out.
struct RunConfig {
    OscillatorSet osc;
    CouplingGraph graph;
    std::vector<Vec2> initial_states;

    double k_c = 200.0;
    double epsilon = 0.1;
    int f = 400;
    double omega = 0.0015;
    double dt = 1e-3;  // offline (cycle-stage) integration step
    int n_periods = 20;
    std::optional<HybridOptions> hybrid;

    double settle_time = 100.0;
    double cycle_tol = 1e-6;
    int min_steps_per_sample = 10;
    int record_stride = 1;
    double phase_one_budget_periods = 50.0;
    SolverOptions solver;

    RunConfig(OscillatorSet o, CouplingGraph g)
        : osc(std::move(o)), graph(std::move(g)), initial_states(default_initial_states(osc)) {
        if (osc.size() != graph.node_count())
            throw std::invalid_argument("run config: oscillator/graph size mismatch");
    }

    void validate() const {
        if (static_cast<int>(initial_states.size()) != osc.size())
            throw std::invalid_argument("run config: initial state count mismatch");
        double norm2 = 0.0;
        for (const Vec2& x : initial_states) {
            if (!x.allFinite())
                throw std::invalid_argument("run config: non-finite initial state");
            norm2 += x.squaredNorm();
        }
        if (norm2 == 0.0)
            throw std::invalid_argument("run config: initial states must not all be zero");
        if (!(epsilon > 0.0)) throw std::invalid_argument("run config: epsilon must be > 0");
        if (!(k_c >= 0.0)) throw std::invalid_argument("run config: k_c must be >= 0");
        if (n_periods < 0) throw std::invalid_argument("run config: n_periods must be >= 0");
        if (f < 2) throw std::invalid_argument("run config: f must be >= 2");
        if (hybrid) {
            if (!(hybrid->error_threshold > 0.0))
                throw std::invalid_argument("run config: hybrid error_threshold must be > 0");
            if (!(hybrid->resync_epsilon > 0.0))
                throw std::invalid_argument("run config: hybrid resync_epsilon must be > 0");
        }
    }
};

/// Recorded run: step rows at the configured stride plus one row at every
/// sampling instant. Gains are stored as the schedule index that was active
/// (-1 while static coupling is active) to keep traces compact.
struct SimulationTrace {
    int n = 0;

    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec2> reference;
    std::vector<SimMode> modes;
    std::vector<int> gain_sample;  // schedule index or -1
    std::vector<double> V;
    std::vector<double> max_pairwise;

    std::vector<double> sample_times;
    std::vector<SimMode> sample_modes;
    std::vector<int> sample_gain_index;
    std::vector<double> sample_V;
    std::vector<double> sample_max_pairwise;
    std::vector<double> sample_ref_dev;

    // engine bookkeeping
    double t_switch = 0.0;
    double total_time = 0.0;
    double anchor_mismatch = 0.0;
    int resync_count = 0;
    double resync_time = 0.0;
    int reanchor_count = 0;
    // largest pairwise deviation seen at any integration step outside phase
    // one (the sample grid can straddle a narrow peak)
    double step_max_pairwise = 0.0;
};

/// Aggregates reported next to a trace.
struct RunSummary {
    double T = 0.0;
    double t_switch = 0.0;
    double total_time = 0.0;
    double omega = 0.0;

    std::vector<double> per_edge_avg_gain;
    double overall_avg_gain = 0.0;
    std::vector<double> beta_per_sample;
    double max_beta = 0.0;

    double handoff_V = 0.0;
    double max_dev_overall = 0.0;            // pairwise, phase-two sample times
    double max_dev_steps = 0.0;              // pairwise, every phase-two step
    std::vector<double> per_period_max_dev;  // windows of length T after t_switch
    std::vector<double> V_at_period_boundaries;

    int resync_count = 0;
    int reanchor_count = 0;
    double strong_time_fraction = 0.0;  // resync share of the preservation phase
    double anchor_mismatch = 0.0;
};

namespace detail {

inline double max_pairwise_dev(const Vec& x, int n) {
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            m = std::max(m, (x.segment<2>(2 * i) - x.segment<2>(2 * j)).norm());
    return m;
}

inline double pairwise_V(const Vec& x, int n) {
    double v = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            v += (x.segment<2>(2 * i) - x.segment<2>(2 * j)).squaredNorm();
    return v;
}

inline double max_ref_dev(const Vec& x, int n, const Vec2& s) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, (x.segment<2>(2 * i) - s).norm());
    return m;
}

/// Substep count for one hold interval: enough steps to keep h * rho well
/// inside the RK4 stability interval, where rho bounds the coupling spectrum
/// (Gershgorin on the gain Laplacian) plus the local Jacobian scale.
inline int stability_substeps(double dt_hold, double gain_max, int max_in_degree, double mu_max,
                              int min_steps) {
    const double rho = 2.0 * gain_max * static_cast<double>(max_in_degree) + 1.0 + 25.0 * mu_max;
    const int m = static_cast<int>(std::ceil(dt_hold * rho / 1.5));
    return std::max(min_steps, m);
}

inline int max_in_degree(const CouplingGraph& g) {
    int d = 0;
    for (int i = 0; i < g.node_count(); ++i)
        d = std::max(d, static_cast<int>(g.in_neighbors(i).size()));
    return d;
}

struct TraceRecorder {
    SimulationTrace& trace;
    int n;
    int stride;
    long counter = 0;

    // Crossing refinement can land exactly on an already-recorded instant;
    // rows keep strictly increasing times by skipping such duplicates.
    void row(double t, const Vec& y, SimMode mode, int gidx) {
        if (!trace.times.empty() && t <= trace.times.back()) return;
        trace.times.push_back(t);
        trace.states.push_back(y.head(2 * n));
        trace.reference.push_back(Vec2(y[2 * n], y[2 * n + 1]));
        trace.modes.push_back(mode);
        trace.gain_sample.push_back(gidx);
        trace.V.push_back(pairwise_V(y, n));
        trace.max_pairwise.push_back(max_pairwise_dev(y, n));
    }

    void step(double t, const Vec& y, SimMode mode, int gidx) {
        if (mode != SimMode::Phase1)
            trace.step_max_pairwise = std::max(trace.step_max_pairwise, max_pairwise_dev(y, n));
        if (stride <= 1 || (++counter % stride) == 0) row(t, y, mode, gidx);
    }

    void sample(double t, const Vec& y, SimMode mode, int gidx) {
        if (!trace.sample_times.empty() && t <= trace.sample_times.back()) return;
        trace.sample_times.push_back(t);
        trace.sample_modes.push_back(mode);
        trace.sample_gain_index.push_back(gidx);
        trace.sample_V.push_back(pairwise_V(y, n));
        trace.sample_max_pairwise.push_back(max_pairwise_dev(y, n));
        trace.sample_ref_dev.push_back(max_ref_dev(y, n, Vec2(y[2 * n], y[2 * n + 1])));
    }
};

struct SyncSegmentResult {
    double t_end = 0.0;
    double anchor_mismatch = 0.0;
};

/// Static-coupling segment shared by phase one and hybrid re-sync: integrate
/// the network under uniform gain k_c together with a blended reference
/// started from the mean of the current local states. Once every oscillator
/// is within eps of the reference at a sampling instant, stop at the next
/// refined section crossing of the network mean that lies at the cycle
/// anchor: the schedule is aligned to the cycle position of the network
/// itself, and the mean needs time to relax onto the cycle before a crossing
/// actually is the anchor state. y holds [x; s] and is updated in place.
template <class Recorder>
SyncSegmentResult static_sync_until_anchor(Vec& y, double t_begin, SimMode mode,
                                           const OscillatorSet& osc, const CouplingGraph& g,
                                           double k_c, double eps, const CycleSample& cycle,
                                           int min_steps, double budget_periods,
                                           Recorder& rec, double anchor_tol = 0.05) {
    const int n = g.node_count();
    auto rhs = [&](double, const Vec& yy) -> Vec {
        Vec dy(2 * n + 2);
        dy.head(2 * n) = coupled_rhs_static(yy.head(2 * n), osc, g, k_c);
        dy.tail(2) = Vec(blended_rhs(Vec2(yy[2 * n], yy[2 * n + 1]), osc));
        return dy;
    };
    auto mean_state = [n](const Vec& yy) {
        Vec2 m = Vec2::Zero();
        for (int i = 0; i < n; ++i) m += yy.segment<2>(2 * i);
        return Vec2(m / static_cast<double>(n));
    };
    auto section = [n, &mean_state](const Vec& yy) { return mean_state(yy)[1]; };

    const double dt_hold = cycle.dt;
    const double mu_max = *std::max_element(osc.mu().begin(), osc.mu().end());
    const int m = stability_substeps(dt_hold, k_c, max_in_degree(g), mu_max, min_steps);
    const double h = dt_hold / static_cast<double>(m);
    const double budget = budget_periods * cycle.T;

    bool synced = max_ref_dev(y, n, Vec2(y[2 * n], y[2 * n + 1])) <= eps;
    rec.sample(t_begin, y, mode, -1);

    const auto max_intervals =
        static_cast<std::int64_t>(std::ceil(budget / dt_hold)) + 1;
    for (std::int64_t interval = 0; interval < max_intervals; ++interval) {
        for (int k = 0; k < m; ++k) {
            const double t = t_begin + static_cast<double>(interval) * dt_hold +
                             static_cast<double>(k) * h;
            const Vec y_next = rk4_step(rhs, t, y, h);
            if (!y_next.allFinite())
                throw numeric_error("static coupling: state blow-up at t=" + std::to_string(t),
                                    t);
            if (synced && section(y) > 0.0 && section(y_next) <= 0.0 && mean_state(y)[0] > 0.0) {
                SectionCrossing cross = refine_functional_crossing(rhs, t, y, h, section);
                const Vec2 mean_cross = mean_state(cross.state);
                const double mismatch = (mean_cross - cycle.anchor).norm();
                if (mean_cross[0] > 0.0 && mismatch <= anchor_tol) {
                    y = cross.state;
                    rec.row(cross.t, y, mode, -1);
                    rec.sample(cross.t, y, mode, -1);
                    return {cross.t, mismatch};
                }
            }
            y = y_next;
            rec.step(t + h, y, mode, -1);
        }
        const double t_bound = t_begin + static_cast<double>(interval + 1) * dt_hold;
        rec.sample(t_bound, y, mode, -1);
        if (!synced && max_ref_dev(y, n, Vec2(y[2 * n], y[2 * n + 1])) <= eps) synced = true;
    }
    throw numeric_error(mode == SimMode::Phase1
                            ? "phase one: synchronization not reached within budget"
                            : "re-sync: synchronization not reached within budget",
                        t_begin + budget);
}

}  // namespace detail

/// Result of the strong-coupling phase: trace segment, the global state at
/// the anchor instant, and the switch time.
struct PhaseOneResult {
    SimulationTrace trace;
    Vec handoff;
    double t_switch = 0.0;
    double anchor_mismatch = 0.0;
};

/// Phase one: static diffusive coupling with gain k_c from the configured
/// initial states, tracking the blended reference started at the mean
/// initial state. Ends at the first refined anchor crossing of the reference
/// after the sampled synchronization criterion holds.
inline PhaseOneResult phase_one(const RunConfig& cfg, const CycleSample& cycle) {
    cfg.validate();
    const int n = cfg.graph.node_count();

    PhaseOneResult res;
    res.trace.n = n;
    detail::TraceRecorder rec{res.trace, n, cfg.record_stride};

    Vec y(2 * n + 2);
    Vec2 mean = Vec2::Zero();
    for (int i = 0; i < n; ++i) {
        y.segment<2>(2 * i) = cfg.initial_states[static_cast<size_t>(i)];
        mean += cfg.initial_states[static_cast<size_t>(i)];
    }
    y.tail(2) = mean / static_cast<double>(n);

    rec.row(0.0, y, SimMode::Phase1, -1);
    auto seg = detail::static_sync_until_anchor(y, 0.0, SimMode::Phase1, cfg.osc, cfg.graph,
                                                cfg.k_c, cfg.epsilon, cycle,
                                                cfg.min_steps_per_sample,
                                                cfg.phase_one_budget_periods, rec);
    res.handoff = y.head(2 * n);
    res.t_switch = seg.t_end;
    res.anchor_mismatch = seg.anchor_mismatch;
    res.trace.t_switch = seg.t_end;
    res.trace.total_time = seg.t_end;
    res.trace.anchor_mismatch = seg.anchor_mismatch;
    return res;
}

/// Options for the preservation phase.
struct PhaseTwoOptions {
    double t_start = 0.0;
    int min_steps_per_sample = 10;
    int record_stride = 1;
    std::optional<HybridOptions> hybrid;
    double k_c = 200.0;                  // re-sync coupling gain
    double resync_budget_periods = 50.0;
};

/// Phase two: apply the periodic gain schedule with zero-order hold. The
/// gains are designed for cycle positions, so each pass through the schedule
/// is re-anchored to the network itself: when the network mean makes its
/// refined downward section crossing (it returns to the anchor once per
/// revolution), the schedule restarts at sample 0 and the reference restarts
/// from the anchor. Between crossings the entries advance by wall clock,
/// each held for dt. With hybrid options set, a sampled pairwise deviation
/// beyond the threshold triggers a static-coupling re-sync segment, after
/// which the schedule resumes at sample 0. Runs until the elapsed phase-two
/// time reaches n_periods * T.
inline SimulationTrace phase_two(const Vec& handoff, const GainSchedule& schedule, int n_periods,
                                 const OscillatorSet& osc, const CouplingGraph& g,
                                 const PhaseTwoOptions& opts = PhaseTwoOptions{}) {
    const int n = g.node_count();
    if (handoff.size() != 2 * n)
        throw std::invalid_argument("phase_two: handoff has wrong dimension");
    if (osc.size() != n) throw std::invalid_argument("phase_two: oscillator/graph mismatch");
    if (schedule.f() < 2 || schedule.f() != schedule.cycle.f)
        throw std::invalid_argument("phase_two: invalid schedule");
    for (const EdgeGainSet& gs : schedule.samples)
        if (gs.size() != g.edge_count())
            throw std::invalid_argument("phase_two: schedule gains do not match graph");

    const CycleSample& cycle = schedule.cycle;
    const double T = cycle.T;
    const double dt_hold = cycle.dt;
    const int f = cycle.f;
    const double mu_max = *std::max_element(osc.mu().begin(), osc.mu().end());
    const int maxdeg = detail::max_in_degree(g);

    SimulationTrace trace;
    trace.n = n;
    trace.t_switch = opts.t_start;
    detail::TraceRecorder rec{trace, n, opts.record_stride};

    auto mean_state = [n](const Vec& yy) {
        Vec2 m = Vec2::Zero();
        for (int i = 0; i < n; ++i) m += yy.segment<2>(2 * i);
        return Vec2(m / static_cast<double>(n));
    };
    auto section = [&mean_state](const Vec& yy) { return mean_state(yy)[1]; };

    Vec y(2 * n + 2);
    y.head(2 * n) = handoff;
    y.tail(2) = Vec(cycle.anchor);

    const double target = static_cast<double>(n_periods) * T;
    double elapsed = 0.0;
    double last_anchor = 0.0;  // elapsed time of the latest re-anchor
    int l = 0;

    rec.row(opts.t_start, y, SimMode::Phase2, 0);
    rec.sample(opts.t_start, y, SimMode::Phase2, 0);

    while (elapsed < target - 1e-9 * T) {
        const EdgeGainSet& gains = schedule.samples[static_cast<size_t>(l)];
        auto rhs = [&](double, const Vec& yy) -> Vec {
            Vec dy(2 * n + 2);
            dy.head(2 * n) = coupled_rhs_scheduled(yy.head(2 * n), osc, g, gains);
            dy.tail(2) = Vec(blended_rhs(Vec2(yy[2 * n], yy[2 * n + 1]), osc));
            return dy;
        };
        const int m = detail::stability_substeps(dt_hold, gains.max_entry(), maxdeg, mu_max,
                                                 opts.min_steps_per_sample);
        const double h = dt_hold / static_cast<double>(m);
        const double t0 = opts.t_start + elapsed;
        bool reanchored = false;
        // The cycle is symmetric under (x, t) -> (-x, t + T/2), so the mean's
        // downward section crossing marks sample 0 and, for even f, the
        // mirrored upward crossing at x1 < 0 marks sample f/2.
        const bool use_mirror = (f % 2 == 0);
        for (int k = 0; k < m; ++k) {
            const double t = t0 + static_cast<double>(k) * h;
            const Vec y_next = rk4_step(rhs, t, y, h);
            if (!y_next.allFinite())
                throw numeric_error("phase two: state blow-up at t=" + std::to_string(t + h),
                                    t + h);
            if (elapsed + static_cast<double>(k + 1) * h - last_anchor > 0.25 * T) {
                int anchor_index = -1;
                SectionCrossing cross;
                if (section(y) > 0.0 && section(y_next) <= 0.0 && mean_state(y)[0] > 0.0) {
                    cross = refine_functional_crossing(rhs, t, y, h, section);
                    if (mean_state(cross.state)[0] > 0.0) anchor_index = 0;
                } else if (use_mirror && section(y) < 0.0 && section(y_next) >= 0.0 &&
                           mean_state(y)[0] < 0.0) {
                    cross = refine_functional_crossing(
                        rhs, t, y, h, [&section](const Vec& yy) { return -section(yy); });
                    if (mean_state(cross.state)[0] < 0.0) anchor_index = f / 2;
                }
                if (anchor_index >= 0) {
                    y = cross.state;
                    y.tail(2) = Vec(cycle.states[static_cast<size_t>(anchor_index)]);
                    elapsed = cross.t - opts.t_start;
                    last_anchor = elapsed;
                    l = anchor_index;
                    ++trace.reanchor_count;
                    rec.row(cross.t, y, SimMode::Phase2, l);
                    rec.sample(cross.t, y, SimMode::Phase2, l);
                    reanchored = true;
                    break;
                }
            }
            y = y_next;
            rec.step(t + h, y, SimMode::Phase2, l);
        }
        if (reanchored) continue;

        elapsed += dt_hold;
        const double t_bound = opts.t_start + elapsed;
        rec.sample(t_bound, y, SimMode::Phase2, l);
        l = (l + 1) % f;

        if (opts.hybrid) {
            const double dev = detail::max_pairwise_dev(y, n);
            if (dev > opts.hybrid->error_threshold) {
                ++trace.resync_count;
                y.tail(2) = Vec(mean_state(y));
                auto seg = detail::static_sync_until_anchor(
                    y, t_bound, SimMode::Resync, osc, g, opts.k_c, opts.hybrid->resync_epsilon,
                    cycle, opts.min_steps_per_sample, opts.resync_budget_periods, rec);
                trace.resync_time += seg.t_end - t_bound;
                elapsed = seg.t_end - opts.t_start;
                last_anchor = elapsed;
                l = 0;
                y.tail(2) = Vec(cycle.anchor);
            }
        }
    }
    trace.total_time = opts.t_start + elapsed;
    return trace;
}

/// Merge two trace segments recorded back to back. The second segment's
/// leading rows duplicate the junction instant and are dropped to keep the
/// merged times strictly increasing.
inline SimulationTrace concat_traces(SimulationTrace a, const SimulationTrace& b) {
    size_t skip = 0;
    while (skip < b.times.size() && !a.times.empty() && b.times[skip] <= a.times.back()) ++skip;
    size_t skip_s = 0;
    while (skip_s < b.sample_times.size() && !a.sample_times.empty() &&
           b.sample_times[skip_s] <= a.sample_times.back())
        ++skip_s;
    auto append = [](auto& dst, const auto& src, size_t from) {
        dst.insert(dst.end(), src.begin() + static_cast<std::ptrdiff_t>(from), src.end());
    };
    append(a.times, b.times, skip);
    append(a.states, b.states, skip);
    append(a.reference, b.reference, skip);
    append(a.modes, b.modes, skip);
    append(a.gain_sample, b.gain_sample, skip);
    append(a.V, b.V, skip);
    append(a.max_pairwise, b.max_pairwise, skip);
    append(a.sample_times, b.sample_times, skip_s);
    append(a.sample_modes, b.sample_modes, skip_s);
    append(a.sample_gain_index, b.sample_gain_index, skip_s);
    append(a.sample_V, b.sample_V, skip_s);
    append(a.sample_max_pairwise, b.sample_max_pairwise, skip_s);
    append(a.sample_ref_dev, b.sample_ref_dev, skip_s);
    a.total_time = b.total_time;
    a.resync_count += b.resync_count;
    a.resync_time += b.resync_time;
    a.reanchor_count += b.reanchor_count;
    a.step_max_pairwise = std::max(a.step_max_pairwise, b.step_max_pairwise);
    return a;
}

/// Aggregate a finished trace. Schedule-derived quantities (per-edge period
/// averages, beta trajectory) come from the schedule; deviation statistics
/// come from the trace's sampling instants during the preservation phase.
inline RunSummary compute_metrics(const SimulationTrace& trace, const GainSchedule& schedule) {
    RunSummary s;
    s.T = schedule.cycle.T;
    s.t_switch = trace.t_switch;
    s.total_time = trace.total_time;
    s.omega = schedule.omega;
    s.per_edge_avg_gain = schedule.per_edge_average();
    s.overall_avg_gain = schedule.overall_average();
    s.beta_per_sample = schedule.betas;
    s.max_beta =
        schedule.betas.empty() ? 0.0 : *std::max_element(schedule.betas.begin(), schedule.betas.end());
    s.resync_count = trace.resync_count;
    s.reanchor_count = trace.reanchor_count;
    s.anchor_mismatch = trace.anchor_mismatch;
    s.max_dev_steps = trace.step_max_pairwise;

    const double preservation = trace.total_time - trace.t_switch;
    s.strong_time_fraction = preservation > 0.0 ? trace.resync_time / preservation : 0.0;

    for (size_t r = 0; r < trace.sample_times.size(); ++r) {
        if (trace.sample_modes[r] == SimMode::Phase1) continue;
        s.max_dev_overall = std::max(s.max_dev_overall, trace.sample_max_pairwise[r]);
        const double local = trace.sample_times[r] - trace.t_switch;
        const auto period = static_cast<size_t>(std::max(0.0, (local - 1e-9) / s.T));
        if (s.per_period_max_dev.size() <= period) s.per_period_max_dev.resize(period + 1, 0.0);
        s.per_period_max_dev[period] =
            std::max(s.per_period_max_dev[period], trace.sample_max_pairwise[r]);
    }

    // handoff V and per-period V at the sampling instants nearest to the
    // period boundaries (re-anchoring shifts the grid off exact multiples)
    bool have_handoff = false;
    std::vector<std::pair<double, double>> nearest;  // (distance, V) per boundary
    for (size_t r = 0; r < trace.sample_times.size(); ++r) {
        if (trace.sample_modes[r] == SimMode::Phase1) continue;
        if (!have_handoff) {
            s.handoff_V = trace.sample_V[r];
            have_handoff = true;
        }
        const double local = trace.sample_times[r] - trace.t_switch;
        const auto p = static_cast<size_t>(std::llround(local / s.T));
        if (p < 1) continue;
        const double dist = std::abs(local - static_cast<double>(p) * s.T);
        if (nearest.size() < p) nearest.resize(p, {1e300, 0.0});
        if (dist < nearest[p - 1].first) nearest[p - 1] = {dist, trace.sample_V[r]};
    }
    const double dt_hold = schedule.cycle.dt;
    for (const auto& [dist, v] : nearest)
        if (dist <= dt_hold) s.V_at_period_boundaries.push_back(v);
    return s;
}

/// The full two-phase run against precomputed offline artifacts.
inline std::pair<SimulationTrace, RunSummary> run_two_phase(const RunConfig& cfg,
                                                            const CycleSample& cycle,
                                                            const GainSchedule& schedule) {
    cfg.validate();
    PhaseOneResult p1 = phase_one(cfg, cycle);
    SimulationTrace trace = std::move(p1.trace);
    if (cfg.n_periods > 0) {
        PhaseTwoOptions opts;
        opts.t_start = p1.t_switch;
        opts.min_steps_per_sample = cfg.min_steps_per_sample;
        opts.record_stride = cfg.record_stride;
        opts.hybrid = cfg.hybrid;
        opts.k_c = cfg.k_c;
        opts.resync_budget_periods = cfg.phase_one_budget_periods;
        SimulationTrace p2 = phase_two(p1.handoff, schedule, cfg.n_periods, cfg.osc, cfg.graph,
                                       opts);
        trace = concat_traces(std::move(trace), p2);
    }
    RunSummary summary = compute_metrics(trace, schedule);
    return {std::move(trace), std::move(summary)};
}

/// The full pipeline: locate and sample the blended cycle, design the
/// schedule, then run both phases. Hybrid switching is controlled by
/// cfg.hybrid.
inline std::pair<SimulationTrace, RunSummary> run_two_phase(const RunConfig& cfg) {
    cfg.validate();
    const LimitCycle lc = find_limit_cycle(cfg.osc, cfg.settle_time, cfg.cycle_tol, cfg.dt);
    const CycleSample cycle = sample_cycle(lc.anchor, lc.period, cfg.f, cfg.osc, cfg.dt);
    const GainSchedule schedule =
        optimize_schedule(cycle, cfg.osc, cfg.graph, cfg.omega, cfg.solver);
    return run_two_phase(cfg, cycle, schedule);
}

/// Two-phase run with the hybrid switch-back enabled; cfg.hybrid must be set.
inline std::pair<SimulationTrace, RunSummary> run_hybrid(const RunConfig& cfg,
                                                         const CycleSample& cycle,
                                                         const GainSchedule& schedule) {
    if (!cfg.hybrid) throw std::invalid_argument("run_hybrid: hybrid options not set");
    return run_two_phase(cfg, cycle, schedule);
}

inline std::pair<SimulationTrace, RunSummary> run_hybrid(const RunConfig& cfg) {
    if (!cfg.hybrid) throw std::invalid_argument("run_hybrid: hybrid options not set");
    return run_two_phase(cfg);
}

}  // namespace vdpsync
