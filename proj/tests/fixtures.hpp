#pragma once

#include "vdpsync/gain_opt.hpp"
#include "vdpsync/limit_cycle.hpp"
#include "vdpsync/simulate.hpp"

// Shared heavyweight fixtures, computed once per test process.
namespace fixtures {

using namespace vdpsync;

inline const OscillatorSet& paper_osc() {
    static OscillatorSet osc({0.5, 3.0, 6.0, 10.0});
    return osc;
}

inline const CouplingGraph& chain4() {
    static CouplingGraph g = CouplingGraph::chain(4);
    return g;
}

inline const LimitCycle& paper_cycle() {
    static LimitCycle lc = find_limit_cycle(paper_osc());
    return lc;
}

/// Coarse sampling for fast simulation tests.
inline const CycleSample& cycle80() {
    static CycleSample c = sample_cycle(paper_cycle().anchor, paper_cycle().period, 80,
                                        paper_osc());
    return c;
}

inline const GainSchedule& schedule80() {
    static GainSchedule s = optimize_schedule(cycle80(), paper_osc(), chain4(), 0.0015);
    return s;
}

inline const PhaseOneResult& phase_one80() {
    static PhaseOneResult p = [] {
        RunConfig cfg(paper_osc(), chain4());
        cfg.f = 80;
        cfg.record_stride = 1000;
        return phase_one(cfg, cycle80());
    }();
    return p;
}

}  // namespace fixtures
