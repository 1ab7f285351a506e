#pragma once

#include "vdpsync/dynamics.hpp"
#include "vdpsync/gain_opt.hpp"
#include "vdpsync/graph.hpp"
#include "vdpsync/io.hpp"
#include "vdpsync/simulate.hpp"

#include <json.hpp>

#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace vdpsync {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& j, const std::string& path,
                                const std::set<std::string>& allowed) {
    if (!j.is_object()) throw config_error("config: '" + path + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw config_error("config: unknown key '" +
                               (path.empty() ? key : path + "." + key) + "'");
    }
}

template <class T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error("config: bad value for '" + path + "." + key + "'");
    }
}

}  // namespace detail

/// Parsed and validated run configuration file.
struct AppConfig {
    std::vector<double> mu;

    std::string graph_type = "chain";  // chain | complete | edges
    int graph_n = 0;
    std::vector<Edge> graph_edges;  // for type "edges"

    // cycle stage
    int f = 400;
    double settle_time = 100.0;
    double cycle_tol = 1e-6;
    double dt = 1e-3;
    Vec2 cycle_x0 = Vec2(2.0, 0.0);

    // optimization stage
    double omega = 0.0015;
    SolverOptions solver;

    // simulation stage
    double k_c = 200.0;
    double epsilon = 0.1;
    int n_periods = 20;
    int record_stride = 1;
    int min_steps_per_sample = 10;
    double phase_one_budget_periods = 50.0;
    std::optional<std::vector<Vec2>> initial_states;
    std::optional<std::uint64_t> seed;
    std::optional<HybridOptions> hybrid;

    // sweep
    std::optional<std::string> sweep_parameter;
    std::vector<json> sweep_values;

    // output
    std::string out_dir = "out";
    std::optional<std::string> cache_dir;
    bool write_trace = true;

    [[nodiscard]] OscillatorSet oscillators() const { return OscillatorSet(mu); }

    [[nodiscard]] CouplingGraph graph() const {
        if (graph_type == "chain") return CouplingGraph::chain(graph_n);
        if (graph_type == "complete") return CouplingGraph::complete(graph_n);
        return {graph_n, graph_edges};
    }

    /// Initial states resolved in priority order: explicit list, seeded
    /// random draw, per-oscillator settled defaults.
    [[nodiscard]] std::vector<Vec2> resolve_initial_states(const OscillatorSet& osc) const {
        if (initial_states) {
            if (static_cast<int>(initial_states->size()) != osc.size())
                throw config_error("config: simulate.initial_states must list one state per oscillator");
            return *initial_states;
        }
        if (seed) {
            std::mt19937_64 rng(*seed);
            std::uniform_real_distribution<double> dist(-2.5, 2.5);
            std::vector<Vec2> x0;
            double norm2 = 0.0;
            do {
                x0.clear();
                norm2 = 0.0;
                for (int i = 0; i < osc.size(); ++i) {
                    Vec2 v(dist(rng), dist(rng));
                    norm2 += v.squaredNorm();
                    x0.push_back(v);
                }
            } while (norm2 < 1e-6);
            return x0;
        }
        return default_initial_states(osc);
    }

    [[nodiscard]] RunConfig run_config() const {
        RunConfig rc(oscillators(), graph());
        rc.initial_states = resolve_initial_states(rc.osc);
        rc.k_c = k_c;
        rc.epsilon = epsilon;
        rc.f = f;
        rc.omega = omega;
        rc.dt = dt;
        rc.n_periods = n_periods;
        rc.hybrid = hybrid;
        rc.settle_time = settle_time;
        rc.cycle_tol = cycle_tol;
        rc.min_steps_per_sample = min_steps_per_sample;
        rc.record_stride = record_stride;
        rc.phase_one_budget_periods = phase_one_budget_periods;
        rc.solver = solver;
        rc.validate();
        return rc;
    }

    [[nodiscard]] io::ArtifactKey artifact_key() const {
        io::ArtifactKey key;
        key.mu = mu;
        key.graph_signature = graph().signature();
        key.f = f;
        key.omega = omega;
        key.solver_signature = solver.signature();
        key.settle_time = settle_time;
        key.tol = cycle_tol;
        key.dt = dt;
        key.cycle_x0 = cycle_x0;
        return key;
    }
};

inline AppConfig parse_config(const json& j) {
    detail::reject_unknown_keys(j, "", {"oscillators", "graph", "cycle", "optimize", "simulate",
                                        "sweep", "output"});
    AppConfig cfg;

    if (!j.contains("oscillators"))
        throw config_error("config: missing required section 'oscillators'");
    detail::reject_unknown_keys(j.at("oscillators"), "oscillators", {"mu"});
    if (!j.at("oscillators").contains("mu"))
        throw config_error("config: missing 'oscillators.mu'");
    cfg.mu = j.at("oscillators").at("mu").get<std::vector<double>>();

    if (!j.contains("graph")) throw config_error("config: missing required section 'graph'");
    const json& jg = j.at("graph");
    detail::reject_unknown_keys(jg, "graph", {"type", "n", "edges"});
    cfg.graph_type = detail::get_or<std::string>(jg, "type", "graph", "chain");
    if (cfg.graph_type != "chain" && cfg.graph_type != "complete" && cfg.graph_type != "edges")
        throw config_error("config: graph.type must be chain, complete, or edges");
    cfg.graph_n = detail::get_or<int>(jg, "n", "graph", static_cast<int>(cfg.mu.size()));
    if (cfg.graph_n != static_cast<int>(cfg.mu.size()))
        throw config_error("config: graph.n must match the number of oscillators");
    if (cfg.graph_type == "edges") {
        if (!jg.contains("edges")) throw config_error("config: graph.edges required for type 'edges'");
        for (const auto& e : jg.at("edges")) {
            if (!e.is_array() || e.size() != 2)
                throw config_error("config: graph.edges entries must be [i, j] pairs");
            cfg.graph_edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
        }
    } else if (jg.contains("edges")) {
        throw config_error("config: graph.edges only valid for type 'edges'");
    }

    if (j.contains("cycle")) {
        const json& jc = j.at("cycle");
        detail::reject_unknown_keys(jc, "cycle", {"f", "settle_time", "tol", "dt", "initial_state"});
        cfg.f = detail::get_or<int>(jc, "f", "cycle", cfg.f);
        cfg.settle_time = detail::get_or<double>(jc, "settle_time", "cycle", cfg.settle_time);
        cfg.cycle_tol = detail::get_or<double>(jc, "tol", "cycle", cfg.cycle_tol);
        cfg.dt = detail::get_or<double>(jc, "dt", "cycle", cfg.dt);
        if (jc.contains("initial_state")) {
            const auto v = jc.at("initial_state").get<std::vector<double>>();
            if (v.size() != 2) throw config_error("config: cycle.initial_state must have 2 entries");
            cfg.cycle_x0 = Vec2(v[0], v[1]);
        }
        if (cfg.f < 2) throw config_error("config: cycle.f must be >= 2");
        if (!(cfg.dt > 0.0)) throw config_error("config: cycle.dt must be > 0");
    }

    if (j.contains("optimize")) {
        const json& jo = j.at("optimize");
        detail::reject_unknown_keys(jo, "optimize", {"omega", "solver"});
        cfg.omega = detail::get_or<double>(jo, "omega", "optimize", cfg.omega);
        if (!(cfg.omega >= 0.0)) throw config_error("config: optimize.omega must be >= 0");
        if (jo.contains("solver")) {
            const json& js = jo.at("solver");
            detail::reject_unknown_keys(js, "optimize.solver",
                                        {"t_init", "t_mult", "gap_tol", "newton_tol",
                                         "max_newton", "max_outer", "threads"});
            cfg.solver.t_init = detail::get_or<double>(js, "t_init", "optimize.solver", cfg.solver.t_init);
            cfg.solver.t_mult = detail::get_or<double>(js, "t_mult", "optimize.solver", cfg.solver.t_mult);
            cfg.solver.gap_tol = detail::get_or<double>(js, "gap_tol", "optimize.solver", cfg.solver.gap_tol);
            cfg.solver.newton_tol =
                detail::get_or<double>(js, "newton_tol", "optimize.solver", cfg.solver.newton_tol);
            cfg.solver.max_newton =
                detail::get_or<int>(js, "max_newton", "optimize.solver", cfg.solver.max_newton);
            cfg.solver.max_outer =
                detail::get_or<int>(js, "max_outer", "optimize.solver", cfg.solver.max_outer);
            cfg.solver.threads = detail::get_or<int>(js, "threads", "optimize.solver", cfg.solver.threads);
        }
    }

    if (j.contains("simulate")) {
        const json& js = j.at("simulate");
        detail::reject_unknown_keys(js, "simulate",
                                    {"k_c", "epsilon", "n_periods", "record_stride",
                                     "min_steps_per_sample", "phase_one_budget_periods",
                                     "initial_states", "seed", "hybrid"});
        cfg.k_c = detail::get_or<double>(js, "k_c", "simulate", cfg.k_c);
        cfg.epsilon = detail::get_or<double>(js, "epsilon", "simulate", cfg.epsilon);
        cfg.n_periods = detail::get_or<int>(js, "n_periods", "simulate", cfg.n_periods);
        cfg.record_stride = detail::get_or<int>(js, "record_stride", "simulate", cfg.record_stride);
        cfg.min_steps_per_sample = detail::get_or<int>(js, "min_steps_per_sample", "simulate",
                                                       cfg.min_steps_per_sample);
        cfg.phase_one_budget_periods = detail::get_or<double>(js, "phase_one_budget_periods",
                                                              "simulate",
                                                              cfg.phase_one_budget_periods);
        if (!(cfg.k_c > 0.0)) throw config_error("config: simulate.k_c must be > 0");
        if (!(cfg.epsilon > 0.0)) throw config_error("config: simulate.epsilon must be > 0");
        if (cfg.n_periods < 0) throw config_error("config: simulate.n_periods must be >= 0");
        if (cfg.record_stride < 1) throw config_error("config: simulate.record_stride must be >= 1");
        if (js.contains("initial_states")) {
            std::vector<Vec2> states;
            for (const auto& v : js.at("initial_states")) {
                if (!v.is_array() || v.size() != 2)
                    throw config_error("config: simulate.initial_states entries must be [x1, x2]");
                states.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
            }
            cfg.initial_states = std::move(states);
        }
        if (js.contains("seed")) cfg.seed = js.at("seed").get<std::uint64_t>();
        if (js.contains("hybrid") && !js.at("hybrid").is_null()) {
            const json& jh = js.at("hybrid");
            detail::reject_unknown_keys(jh, "simulate.hybrid",
                                        {"error_threshold", "resync_epsilon"});
            HybridOptions h;
            h.error_threshold =
                detail::get_or<double>(jh, "error_threshold", "simulate.hybrid", h.error_threshold);
            h.resync_epsilon =
                detail::get_or<double>(jh, "resync_epsilon", "simulate.hybrid", h.resync_epsilon);
            cfg.hybrid = h;
        }
    }

    if (j.contains("sweep")) {
        const json& js = j.at("sweep");
        detail::reject_unknown_keys(js, "sweep", {"parameter", "values"});
        if (!js.contains("parameter") || !js.contains("values"))
            throw config_error("config: sweep needs 'parameter' and 'values'");
        cfg.sweep_parameter = js.at("parameter").get<std::string>();
        if (*cfg.sweep_parameter != "omega" && *cfg.sweep_parameter != "f" &&
            *cfg.sweep_parameter != "topology")
            throw config_error("config: sweep.parameter must be omega, f, or topology");
        for (const auto& v : js.at("values")) cfg.sweep_values.push_back(v);
        if (cfg.sweep_values.empty()) throw config_error("config: sweep.values must not be empty");
    }

    if (j.contains("output")) {
        const json& jo = j.at("output");
        detail::reject_unknown_keys(jo, "output", {"dir", "cache", "trace"});
        cfg.out_dir = detail::get_or<std::string>(jo, "dir", "output", cfg.out_dir);
        if (jo.contains("cache")) cfg.cache_dir = jo.at("cache").get<std::string>();
        cfg.write_trace = detail::get_or<bool>(jo, "trace", "output", cfg.write_trace);
    }

    // eager validation of oscillator and graph specs
    static_cast<void>(cfg.oscillators());
    static_cast<void>(cfg.graph());
    return cfg;
}

inline AppConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const io_error&) {
        throw;
    } catch (const json::exception& e) {
        throw config_error("config: " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace vdpsync
