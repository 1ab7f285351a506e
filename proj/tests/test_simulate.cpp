#include "vdpsync/simulate.hpp"

#include "fixtures.hpp"

#include <doctest.h>

using namespace vdpsync;

namespace {

double sample_max(const SimulationTrace& t) {
    double m = 0.0;
    for (size_t r = 0; r < t.sample_times.size(); ++r)
        if (t.sample_modes[r] != SimMode::Phase1)
            m = std::max(m, t.sample_max_pairwise[r]);
    return m;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("default initial states are deterministic points on the local cycles") {
    const auto a = default_initial_states(fixtures::paper_osc());
    const auto b = default_initial_states(fixtures::paper_osc());
    REQUIRE(a.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(a[i] == b[i]);
        CHECK(a[i].allFinite());
        CHECK(a[i].norm() > 0.3);
        CHECK(a[i].norm() < 20.0);
    }
    // heterogeneous parameters land on distinct cycles
    CHECK((a[0] - a[3]).norm() > 0.1);
}

TEST_CASE("RunConfig validation") {
    RunConfig cfg(fixtures::paper_osc(), fixtures::chain4());
    CHECK_NOTHROW(cfg.validate());

    RunConfig zero = cfg;
    zero.initial_states.assign(4, Vec2::Zero());
    CHECK_THROWS_AS(zero.validate(), std::invalid_argument);

    RunConfig bad_eps = cfg;
    bad_eps.epsilon = 0.0;
    CHECK_THROWS_AS(bad_eps.validate(), std::invalid_argument);

    RunConfig bad_count = cfg;
    bad_count.initial_states.pop_back();
    CHECK_THROWS_AS(bad_count.validate(), std::invalid_argument);

    CHECK_THROWS_AS(RunConfig(OscillatorSet({1.0, 2.0}), fixtures::chain4()),
                    std::invalid_argument);
}

TEST_CASE("phase one synchronizes the paper network under strong coupling") {
    const PhaseOneResult& p1 = fixtures::phase_one80();
    const CycleSample& cyc = fixtures::cycle80();
    CHECK(p1.t_switch > 0.0);
    CHECK(p1.t_switch < 50.0 * cyc.T);
    CHECK(p1.anchor_mismatch < 0.05);
    // synchronization criterion was reached at some sampling instant
    double best = 1e300;
    for (size_t r = 0; r < p1.trace.sample_ref_dev.size(); ++r)
        best = std::min(best, p1.trace.sample_ref_dev[r]);
    CHECK(best <= 0.1);
    // handoff is the network mean's anchor crossing: mean x2 vanishes
    double mean2 = 0.0;
    for (int i = 0; i < 4; ++i) mean2 += p1.handoff[2 * i + 1];
    CHECK(std::abs(mean2 / 4.0) < 1e-9);
}

TEST_CASE("phase one: already-synchronized homogeneous network stops at the first crossing") {
    OscillatorSet osc({2.0, 2.0, 2.0, 2.0});
    LimitCycle lc = find_limit_cycle(osc);
    CycleSample cyc = sample_cycle(lc.anchor, lc.period, 40, osc);
    RunConfig cfg(osc, fixtures::chain4());
    cfg.initial_states.assign(4, Vec2(2.0, 0.0));
    cfg.record_stride = 1000;
    PhaseOneResult p1 = phase_one(cfg, cyc);
    CHECK(p1.t_switch < 2.0 * lc.period);
    CHECK(p1.anchor_mismatch < 1e-6);
    for (size_t r = 0; r < p1.trace.sample_ref_dev.size(); ++r)
        CHECK(p1.trace.sample_ref_dev[r] < 1e-6);
}

TEST_CASE("phase one: no coupling means no synchronization, reported as a timeout") {
    RunConfig cfg(fixtures::paper_osc(), fixtures::chain4());
    cfg.k_c = 0.0;
    cfg.phase_one_budget_periods = 3.0;
    cfg.record_stride = 100000;
    CHECK_THROWS_AS(phase_one(cfg, fixtures::cycle80()), numeric_error);
}

TEST_CASE("phase two: zero gains let the heterogeneous network fall apart") {
    const PhaseOneResult& p1 = fixtures::phase_one80();
    GainSchedule zero = constant_gain_schedule(fixtures::cycle80(), fixtures::paper_osc(),
                                               fixtures::chain4(),
                                               EdgeGainSet::zero(fixtures::chain4()));
    PhaseTwoOptions opts;
    opts.t_start = p1.t_switch;
    opts.record_stride = 1000;
    SimulationTrace t = phase_two(p1.handoff, zero, 5, fixtures::paper_osc(), fixtures::chain4(),
                                  opts);
    const double v0 = t.sample_V.front();
    double vmax = 0.0;
    for (double v : t.sample_V) vmax = std::max(vmax, v);
    CHECK(vmax > 10.0 * v0);
    CHECK(vmax > 1.0);
    // desynchronization onset: V climbs monotonically out of the handoff
    // level and never returns there (once on their own cycles the pairwise
    // distances oscillate, so only the onset is monotone)
    for (size_t r = 1; r < 10 && r < t.sample_V.size(); ++r)
        CHECK(t.sample_V[r] > t.sample_V[r - 1]);
    for (size_t r = 10; r < t.sample_V.size(); ++r) CHECK(t.sample_V[r] > 100.0 * v0);
}

TEST_CASE("phase two: optimized schedule keeps the network together") {
    const PhaseOneResult& p1 = fixtures::phase_one80();
    PhaseTwoOptions opts;
    opts.t_start = p1.t_switch;
    opts.record_stride = 1000;
    SimulationTrace t = phase_two(p1.handoff, fixtures::schedule80(), 3, fixtures::paper_osc(),
                                  fixtures::chain4(), opts);
    CHECK(sample_max(t) < 1.0);
    CHECK(t.reanchor_count >= 2);
    CHECK(t.total_time - p1.t_switch >= 3.0 * fixtures::cycle80().T - 1e-6);
}

TEST_CASE("phase two: reference stays aligned with the sampled cycle") {
    const PhaseOneResult& p1 = fixtures::phase_one80();
    const CycleSample& cyc = fixtures::cycle80();
    PhaseTwoOptions opts;
    opts.t_start = p1.t_switch;
    opts.record_stride = 1;
    SimulationTrace fine = phase_two(p1.handoff, fixtures::schedule80(), 1, fixtures::paper_osc(),
                                     fixtures::chain4(), opts);
    double worst = 0.0;
    int hits = 0;
    for (size_t r = 0; r < fine.times.size(); ++r) {
        if (fine.modes[r] != SimMode::Phase2) continue;
        const double local = fine.times[r] - p1.t_switch;
        const double idxf = local / cyc.dt;
        const int l = static_cast<int>(std::lround(idxf));
        if (std::abs(idxf - l) > 1e-7 || l <= 0) continue;
        // only rows before the first re-anchor seam sit on the exact hold grid
        if (fine.times[r] > p1.t_switch + 0.45 * cyc.T) break;
        worst = std::max(worst,
                         (fine.reference[r] - cyc.states[static_cast<size_t>(l % cyc.f)]).norm());
        ++hits;
    }
    CHECK(hits > 20);
    CHECK(worst < 1e-5);
}

TEST_CASE("run_two_phase end to end on a coarse schedule") {
    RunConfig cfg(fixtures::paper_osc(), fixtures::chain4());
    cfg.f = 80;
    cfg.n_periods = 2;
    cfg.record_stride = 50;
    auto [trace, summary] = run_two_phase(cfg, fixtures::cycle80(), fixtures::schedule80());

    SUBCASE("times strictly increase and modes form two contiguous segments") {
        for (size_t r = 1; r < trace.times.size(); ++r) CHECK(trace.times[r] > trace.times[r - 1]);
        bool seen_phase2 = false;
        for (SimMode m : trace.modes) {
            if (m == SimMode::Phase2) seen_phase2 = true;
            if (seen_phase2) CHECK(m == SimMode::Phase2);
        }
        CHECK(seen_phase2);
    }
    SUBCASE("summary aggregates are consistent with the schedule and trace") {
        CHECK(summary.T == doctest::Approx(fixtures::cycle80().T));
        CHECK(summary.t_switch == doctest::Approx(fixtures::phase_one80().t_switch));
        CHECK(summary.overall_avg_gain ==
              doctest::Approx(fixtures::schedule80().overall_average()));
        CHECK(summary.max_dev_overall <= summary.max_dev_steps + 1e-12);
        CHECK(summary.total_time >=
              summary.t_switch + 2.0 * fixtures::cycle80().T - 1e-6);
        CHECK(summary.per_period_max_dev.size() >= 2);
        CHECK(summary.handoff_V < 0.1);
        CHECK(summary.V_at_period_boundaries.size() >= 1);
        for (double v : summary.V_at_period_boundaries) CHECK(v < 1.0);
    }
    SUBCASE("identical configs give identical summaries") {
        auto [trace2, summary2] = run_two_phase(cfg, fixtures::cycle80(), fixtures::schedule80());
        CHECK(trace2.times.size() == trace.times.size());
        CHECK(summary2.max_dev_overall == summary.max_dev_overall);
        CHECK(summary2.total_time == summary.total_time);
        CHECK(summary2.t_switch == summary.t_switch);
    }
    SUBCASE("n_periods = 0 is a phase-one-only run") {
        RunConfig solo = cfg;
        solo.n_periods = 0;
        auto [trace1, summary1] = run_two_phase(solo, fixtures::cycle80(), fixtures::schedule80());
        for (SimMode m : trace1.modes) CHECK(m == SimMode::Phase1);
        CHECK(summary1.total_time == doctest::Approx(summary1.t_switch));
    }
}

TEST_CASE("run_hybrid") {
    RunConfig cfg(fixtures::paper_osc(), fixtures::chain4());
    cfg.f = 80;
    cfg.n_periods = 4;
    cfg.record_stride = 50;

    SUBCASE("an unreachable threshold reproduces the plain run") {
        RunConfig loose = cfg;
        loose.hybrid = HybridOptions{1e18, 0.1};
        auto [ht, hs] = run_hybrid(loose, fixtures::cycle80(), fixtures::schedule80());
        auto [pt, ps] = run_two_phase(cfg, fixtures::cycle80(), fixtures::schedule80());
        CHECK(hs.resync_count == 0);
        CHECK(hs.strong_time_fraction == 0.0);
        CHECK(ht.times.size() == pt.times.size());
        CHECK(hs.max_dev_overall == ps.max_dev_overall);
        CHECK(hs.total_time == ps.total_time);
    }
    SUBCASE("a tight threshold forces re-sync segments that end at the anchor") {
        RunConfig tight = cfg;
        tight.hybrid = HybridOptions{0.05, 0.05};
        auto [trace, summary] = run_hybrid(tight, fixtures::cycle80(), fixtures::schedule80());
        CHECK(summary.resync_count >= 1);
        CHECK(summary.strong_time_fraction > 0.0);
        CHECK(summary.strong_time_fraction < 1.0);

        // after phase one, modes alternate phase2 / resync in contiguous
        // segments, and every resync segment hands back at schedule sample 0
        bool in_preservation = false;
        int transitions = 0;
        for (size_t r = 1; r < trace.sample_modes.size(); ++r) {
            if (trace.sample_modes[r] != SimMode::Phase1) in_preservation = true;
            if (in_preservation) CHECK(trace.sample_modes[r] != SimMode::Phase1);
            if (trace.sample_modes[r] != trace.sample_modes[r - 1] &&
                trace.sample_modes[r - 1] != SimMode::Phase1)
                ++transitions;
            if (trace.sample_modes[r - 1] == SimMode::Resync &&
                trace.sample_modes[r] == SimMode::Phase2)
                CHECK(trace.sample_gain_index[r] == 0);
        }
        CHECK(transitions >= 2);
    }
    SUBCASE("run_hybrid requires hybrid options") {
        CHECK_THROWS_AS(run_hybrid(cfg, fixtures::cycle80(), fixtures::schedule80()),
                        std::invalid_argument);
    }
}

TEST_CASE("compute_metrics on hand-built inputs") {
    GainSchedule uniform = constant_gain_schedule(fixtures::cycle80(), fixtures::paper_osc(),
                                                  fixtures::chain4(),
                                                  EdgeGainSet::uniform(fixtures::chain4(), 200.0));
    SUBCASE("uniform schedule averages to the uniform gain") {
        CHECK(uniform.overall_average() == doctest::Approx(200.0));
        for (double b : uniform.betas) CHECK(b == 200.0);
    }
    SUBCASE("consensus trace has zero deviation metrics") {
        SimulationTrace t;
        t.n = 4;
        Vec x(8);
        for (int i = 0; i < 4; ++i) x.segment<2>(2 * i) = Vec2(1.0, -0.5);
        for (int r = 0; r < 5; ++r) {
            t.sample_times.push_back(0.1 * r);
            t.sample_modes.push_back(SimMode::Phase2);
            t.sample_gain_index.push_back(r);
            t.sample_V.push_back(detail::pairwise_V(x, 4));
            t.sample_max_pairwise.push_back(detail::max_pairwise_dev(x, 4));
            t.sample_ref_dev.push_back(0.0);
        }
        t.total_time = 0.4;
        RunSummary s = compute_metrics(t, uniform);
        CHECK(s.max_dev_overall == 0.0);
        CHECK(s.handoff_V == 0.0);
    }
}

TEST_CASE("strong uniform coupling is a quality reference for a weak schedule") {
    // At a deliberately large effort weight the optimized gains are small, and
    // the uniform strong-coupling baseline synchronizes at least as tightly.
    const PhaseOneResult& p1 = fixtures::phase_one80();
    GainSchedule weak = optimize_schedule(fixtures::cycle80(), fixtures::paper_osc(),
                                          fixtures::chain4(), 0.05);
    GainSchedule strong = constant_gain_schedule(fixtures::cycle80(), fixtures::paper_osc(),
                                                 fixtures::chain4(),
                                                 EdgeGainSet::uniform(fixtures::chain4(), 200.0));
    PhaseTwoOptions opts;
    opts.t_start = p1.t_switch;
    opts.record_stride = 1000;
    SimulationTrace tw = phase_two(p1.handoff, weak, 3, fixtures::paper_osc(), fixtures::chain4(),
                                   opts);
    SimulationTrace ts = phase_two(p1.handoff, strong, 3, fixtures::paper_osc(),
                                   fixtures::chain4(), opts);
    CHECK(sample_max(ts) <= sample_max(tw));
}

}  // TEST_SUITE
