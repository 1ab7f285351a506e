#pragma once

#include "vdpsync/gain_opt.hpp"
#include "vdpsync/graph.hpp"
#include "vdpsync/limit_cycle.hpp"
#include "vdpsync/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace vdpsync::io {

using json = nlohmann::json;

/// Write via a temporary file in the same directory plus rename, so a failed
/// command never leaves a partial output behind.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    const auto dir = path.parent_path();
    if (!dir.empty()) {
        std::filesystem::create_directories(dir, ec);
        if (ec) throw io_error("cannot create directory " + dir.string() + ": " + ec.message());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp, ec);
            throw io_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw io_error("cannot move " + tmp.string() + " to " + path.string());
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Content key for cached offline artifacts: everything the cycle and the
/// schedule depend on.
struct ArtifactKey {
    std::vector<double> mu;
    std::string graph_signature;
    int f = 0;
    double omega = 0.0;
    std::string solver_signature;
    double settle_time = 0.0;
    double tol = 0.0;
    double dt = 0.0;
    Vec2 cycle_x0 = Vec2(2.0, 0.0);

    [[nodiscard]] std::string hash() const {
        std::ostringstream os;
        os.precision(17);
        os << "mu=";
        for (double m : mu) os << m << ",";
        os << ";graph=" << graph_signature << ";f=" << f << ";omega=" << omega
           << ";solver=" << solver_signature << ";settle=" << settle_time << ";tol=" << tol
           << ";dt=" << dt << ";x0=" << cycle_x0[0] << "," << cycle_x0[1];
        return hex64(fnv1a64(os.str()));
    }
};

// ---------------------------------------------------------------------------
// cycle files
// ---------------------------------------------------------------------------

inline json cycle_to_json(const CycleSample& c) {
    json j;
    j["format"] = "vdpsync-cycle";
    j["version"] = 1;
    j["T"] = c.T;
    j["dt"] = c.dt;
    j["f"] = c.f;
    j["anchor"] = {c.anchor[0], c.anchor[1]};
    json times = json::array();
    json states = json::array();
    for (int l = 0; l < c.f; ++l) {
        times.push_back(c.times[static_cast<size_t>(l)]);
        states.push_back({c.states[static_cast<size_t>(l)][0], c.states[static_cast<size_t>(l)][1]});
    }
    j["times"] = std::move(times);
    j["states"] = std::move(states);
    return j;
}

inline CycleSample cycle_from_json(const json& j) {
    if (!j.is_object() || j.value("format", "") != "vdpsync-cycle")
        throw config_error("cycle file: unrecognized format");
    CycleSample c;
    c.T = j.at("T").get<double>();
    c.dt = j.at("dt").get<double>();
    c.f = j.at("f").get<int>();
    c.anchor = Vec2(j.at("anchor").at(0).get<double>(), j.at("anchor").at(1).get<double>());
    for (const auto& t : j.at("times")) c.times.push_back(t.get<double>());
    for (const auto& s : j.at("states"))
        c.states.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
    if (static_cast<int>(c.times.size()) != c.f || static_cast<int>(c.states.size()) != c.f)
        throw config_error("cycle file: inconsistent sample count");
    return c;
}

inline std::string cycle_to_csv(const CycleSample& c) {
    std::ostringstream os;
    os.precision(17);
    os << "l,t,s1,s2\n";
    for (int l = 0; l < c.f; ++l)
        os << l << "," << c.times[static_cast<size_t>(l)] << ","
           << c.states[static_cast<size_t>(l)][0] << "," << c.states[static_cast<size_t>(l)][1]
           << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// schedule files
// ---------------------------------------------------------------------------

inline json schedule_to_json(const GainSchedule& s, const CouplingGraph& g,
                             const std::string& graph_hash) {
    json j;
    j["format"] = "vdpsync-schedule";
    j["version"] = 1;
    j["n"] = g.node_count();
    j["f"] = s.f();
    j["T"] = s.cycle.T;
    j["dt"] = s.cycle.dt;
    j["omega"] = s.omega;
    j["graph_hash"] = graph_hash;
    j["all_converged"] = s.all_converged;
    json edges = json::array();
    for (const Edge& e : g.edges()) edges.push_back({e.i, e.j});
    j["edges"] = std::move(edges);
    j["cycle"] = cycle_to_json(s.cycle);
    json samples = json::array();
    for (int l = 0; l < s.f(); ++l) {
        json rec;
        rec["l"] = l;
        rec["alpha"] = s.alphas[static_cast<size_t>(l)];
        rec["beta"] = s.betas[static_cast<size_t>(l)];
        json gains = json::array();
        const EdgeGainSet& gs = s.samples[static_cast<size_t>(l)];
        for (int e = 0; e < gs.size(); ++e) gains.push_back({gs[e][0], gs[e][1]});
        rec["gains"] = std::move(gains);
        samples.push_back(std::move(rec));
    }
    j["samples"] = std::move(samples);
    return j;
}

inline GainSchedule schedule_from_json(const json& j, const CouplingGraph& g) {
    if (!j.is_object() || j.value("format", "") != "vdpsync-schedule")
        throw config_error("schedule file: unrecognized format");
    if (j.at("n").get<int>() != g.node_count())
        throw config_error("schedule file: node count does not match graph");
    const auto& edges = j.at("edges");
    if (static_cast<int>(edges.size()) != g.edge_count())
        throw config_error("schedule file: edge count does not match graph");
    for (int e = 0; e < g.edge_count(); ++e) {
        if (edges.at(static_cast<size_t>(e)).at(0).get<int>() != g.edges()[static_cast<size_t>(e)].i ||
            edges.at(static_cast<size_t>(e)).at(1).get<int>() != g.edges()[static_cast<size_t>(e)].j)
            throw config_error("schedule file: edge list does not match graph");
    }
    GainSchedule s;
    s.omega = j.at("omega").get<double>();
    s.all_converged = j.value("all_converged", true);
    s.cycle = cycle_from_json(j.at("cycle"));
    for (const auto& rec : j.at("samples")) {
        std::vector<Vec2> entries;
        for (const auto& kv : rec.at("gains"))
            entries.emplace_back(kv.at(0).get<double>(), kv.at(1).get<double>());
        s.samples.emplace_back(g, std::move(entries));
        s.alphas.push_back(rec.at("alpha").get<double>());
        s.betas.push_back(rec.at("beta").get<double>());
    }
    if (s.f() != s.cycle.f) throw config_error("schedule file: sample count mismatch");
    return s;
}

inline std::string schedule_to_csv(const GainSchedule& s, const CouplingGraph& g,
                                   const std::string& graph_hash) {
    std::ostringstream os;
    os.precision(17);
    os << "# vdpsync-schedule v1\n";
    os << "# n=" << g.node_count() << " f=" << s.f() << " T=" << s.cycle.T
       << " dt=" << s.cycle.dt << " omega=" << s.omega << " graph=" << graph_hash << "\n";
    os << "l,alpha,beta,i,j,k1,k2\n";
    for (int l = 0; l < s.f(); ++l) {
        const EdgeGainSet& gs = s.samples[static_cast<size_t>(l)];
        for (int e = 0; e < gs.size(); ++e) {
            const Edge& ed = g.edges()[static_cast<size_t>(e)];
            os << l << "," << s.alphas[static_cast<size_t>(l)] << ","
               << s.betas[static_cast<size_t>(l)] << "," << ed.i << "," << ed.j << ","
               << gs[e][0] << "," << gs[e][1] << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// trace / summary files
// ---------------------------------------------------------------------------

/// Trace CSV: one row per recorded step. Active gains are expanded from the
/// schedule index; static-coupling rows carry the uniform k_c.
inline std::string trace_to_csv(const SimulationTrace& trace, const GainSchedule& schedule,
                                const CouplingGraph& g, double k_c) {
    std::ostringstream os;
    os.precision(17);
    os << "time,mode,gain_sample";
    for (int i = 0; i < trace.n; ++i) os << ",x" << i << "_1,x" << i << "_2";
    os << ",s_1,s_2,V,max_dev";
    for (const Edge& e : g.edges()) os << ",k_" << e.i << "_" << e.j << "_1,k_" << e.i << "_"
                                      << e.j << "_2";
    os << "\n";
    for (size_t r = 0; r < trace.times.size(); ++r) {
        os << trace.times[r] << "," << to_string(trace.modes[r]) << "," << trace.gain_sample[r];
        for (int i = 0; i < 2 * trace.n; ++i) os << "," << trace.states[r][i];
        os << "," << trace.reference[r][0] << "," << trace.reference[r][1];
        os << "," << trace.V[r] << "," << trace.max_pairwise[r];
        const int l = trace.gain_sample[r];
        for (int e = 0; e < g.edge_count(); ++e) {
            if (l >= 0) {
                const EdgeGainSet& gs = schedule.samples[static_cast<size_t>(l)];
                os << "," << gs[e][0] << "," << gs[e][1];
            } else {
                os << "," << k_c << "," << k_c;
            }
        }
        os << "\n";
    }
    return os.str();
}

inline json summary_to_json(const RunSummary& s) {
    json j;
    j["T"] = s.T;
    j["t_switch"] = s.t_switch;
    j["total_time"] = s.total_time;
    j["omega"] = s.omega;
    j["per_edge_avg_gain"] = s.per_edge_avg_gain;
    j["overall_avg_gain"] = s.overall_avg_gain;
    j["max_beta"] = s.max_beta;
    j["beta_per_sample"] = s.beta_per_sample;
    j["handoff_V"] = s.handoff_V;
    j["max_dev_sample_times"] = s.max_dev_overall;
    j["max_dev_steps"] = s.max_dev_steps;
    j["per_period_max_dev"] = s.per_period_max_dev;
    j["V_at_period_boundaries"] = s.V_at_period_boundaries;
    j["resync_count"] = s.resync_count;
    j["reanchor_count"] = s.reanchor_count;
    j["strong_time_fraction"] = s.strong_time_fraction;
    j["anchor_mismatch"] = s.anchor_mismatch;
    return j;
}

}  // namespace vdpsync::io
