#pragma once

#include "vdpsync/config.hpp"
#include "vdpsync/io.hpp"
#include "vdpsync/simulate.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vdpsync::cli {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;    // overrides config output.dir when set
    std::string cache_dir;  // overrides env and config when set
};

inline fs::path resolve_cache_dir(const CommonArgs& args, const AppConfig& cfg) {
    if (!args.cache_dir.empty()) return args.cache_dir;
    if (const char* env = std::getenv("VDPSYNC_CACHE"); env && *env) return env;
    if (cfg.cache_dir) return *cfg.cache_dir;
    return ".vdpsync-cache";
}

inline fs::path resolve_out_dir(const CommonArgs& args, const AppConfig& cfg) {
    return args.out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(args.out_dir);
}

/// Load the cached cycle for the key or compute and cache it.
inline CycleSample ensure_cycle(const AppConfig& cfg, const fs::path& cache) {
    const std::string key = cfg.artifact_key().hash();
    const fs::path file = cache / (key + ".cycle.json");
    if (fs::exists(file))
        return io::cycle_from_json(json::parse(io::read_text(file)));
    const OscillatorSet osc = cfg.oscillators();
    const LimitCycle lc = find_limit_cycle(osc, cfg.settle_time, cfg.cycle_tol, cfg.dt,
                                           cfg.cycle_x0);
    CycleSample cycle = sample_cycle(lc.anchor, lc.period, cfg.f, osc, cfg.dt);
    io::write_text_atomic(file, io::cycle_to_json(cycle).dump(2));
    return cycle;
}

/// Load the cached schedule for the key or optimize and cache it.
inline GainSchedule ensure_schedule(const AppConfig& cfg, const CycleSample& cycle,
                                    const fs::path& cache) {
    const std::string key = cfg.artifact_key().hash();
    const fs::path file = cache / (key + ".schedule.json");
    const CouplingGraph g = cfg.graph();
    if (fs::exists(file))
        return io::schedule_from_json(json::parse(io::read_text(file)), g);
    GainSchedule schedule = optimize_schedule(cycle, cfg.oscillators(), g, cfg.omega, cfg.solver);
    io::write_text_atomic(file, io::schedule_to_json(schedule, g, cfg.artifact_key().hash()).dump(2));
    return schedule;
}

inline int cmd_cycle(const CommonArgs& args) {
    const AppConfig cfg = load_config(args.config_path);
    const fs::path cache = resolve_cache_dir(args, cfg);
    const fs::path out = resolve_out_dir(args, cfg);
    const CycleSample cycle = ensure_cycle(cfg, cache);
    io::write_text_atomic(out / "cycle.json", io::cycle_to_json(cycle).dump(2));
    io::write_text_atomic(out / "cycle.csv", io::cycle_to_csv(cycle));
    std::cout << "cycle: T=" << cycle.T << " f=" << cycle.f << " dt=" << cycle.dt << "\n";
    std::cout << "wrote " << (out / "cycle.json").string() << ", " << (out / "cycle.csv").string()
              << "\n";
    return 0;
}

inline int cmd_optimize(const CommonArgs& args) {
    const AppConfig cfg = load_config(args.config_path);
    const fs::path cache = resolve_cache_dir(args, cfg);
    const fs::path out = resolve_out_dir(args, cfg);
    const CouplingGraph g = cfg.graph();
    const CycleSample cycle = ensure_cycle(cfg, cache);
    const GainSchedule schedule = ensure_schedule(cfg, cycle, cache);
    const std::string key = cfg.artifact_key().hash();
    io::write_text_atomic(out / "schedule.json", io::schedule_to_json(schedule, g, key).dump(2));
    io::write_text_atomic(out / "schedule.csv", io::schedule_to_csv(schedule, g, key));
    const auto per_edge = schedule.per_edge_average();
    std::cout << "schedule: f=" << schedule.f() << " omega=" << schedule.omega << "\n";
    for (int e = 0; e < g.edge_count(); ++e)
        std::cout << "  edge (" << g.edges()[static_cast<size_t>(e)].i << ","
                  << g.edges()[static_cast<size_t>(e)].j
                  << ") period-averaged gain: " << per_edge[static_cast<size_t>(e)] << "\n";
    std::cout << "overall average gain: " << schedule.overall_average() << "\n";
    return 0;
}

inline int cmd_simulate(const CommonArgs& args) {
    const AppConfig cfg = load_config(args.config_path);
    const fs::path cache = resolve_cache_dir(args, cfg);
    const fs::path out = resolve_out_dir(args, cfg);
    const CycleSample cycle = ensure_cycle(cfg, cache);
    const GainSchedule schedule = ensure_schedule(cfg, cycle, cache);
    const RunConfig rc = cfg.run_config();
    auto [trace, summary] =
        cfg.hybrid ? run_hybrid(rc, cycle, schedule) : run_two_phase(rc, cycle, schedule);
    if (cfg.write_trace)
        io::write_text_atomic(out / "trace.csv",
                              io::trace_to_csv(trace, schedule, cfg.graph(), cfg.k_c));
    io::write_text_atomic(out / "summary.json", io::summary_to_json(summary).dump(2));
    std::cout << "simulate: T=" << summary.T << " t_switch=" << summary.t_switch
              << " total=" << summary.total_time << "\n"
              << "  overall average gain: " << summary.overall_avg_gain << "\n"
              << "  max pairwise deviation (sample times): " << summary.max_dev_overall << "\n"
              << "  resyncs: " << summary.resync_count
              << " strong-coupling fraction: " << summary.strong_time_fraction << "\n";
    return 0;
}

inline int cmd_sweep(const CommonArgs& args) {
    const AppConfig base = load_config(args.config_path);
    if (!base.sweep_parameter)
        throw config_error("sweep: config has no 'sweep' section");
    const fs::path cache = resolve_cache_dir(args, base);
    const fs::path out = resolve_out_dir(args, base);

    std::ostringstream csv;
    csv.precision(17);
    csv << "parameter,value,avg_gain,max_beta,max_dev,max_dev_steps,resyncs,failed\n";
    int failures = 0;
    for (const json& value : base.sweep_values) {
        AppConfig cfg = base;
        std::string label;
        try {
            if (*base.sweep_parameter == "omega") {
                cfg.omega = value.get<double>();
                label = std::to_string(cfg.omega);
            } else if (*base.sweep_parameter == "f") {
                cfg.f = value.get<int>();
                label = std::to_string(cfg.f);
            } else {
                cfg.graph_type = value.get<std::string>();
                label = cfg.graph_type;
            }
            const CycleSample cycle = ensure_cycle(cfg, cache);
            const GainSchedule schedule = ensure_schedule(cfg, cycle, cache);
            const RunConfig rc = cfg.run_config();
            auto [trace, summary] =
                cfg.hybrid ? run_hybrid(rc, cycle, schedule) : run_two_phase(rc, cycle, schedule);
            (void)trace;
            csv << *base.sweep_parameter << "," << label << "," << summary.overall_avg_gain << ","
                << summary.max_beta << "," << summary.max_dev_overall << ","
                << summary.max_dev_steps << "," << summary.resync_count << ",0\n";
            std::cout << *base.sweep_parameter << "=" << label
                      << ": avg_gain=" << summary.overall_avg_gain
                      << " max_beta=" << summary.max_beta
                      << " max_dev=" << summary.max_dev_overall << "\n";
        } catch (const std::exception& e) {
            ++failures;
            csv << *base.sweep_parameter << "," << (label.empty() ? value.dump() : label)
                << ",,,,,," << "1\n";
            std::cout << *base.sweep_parameter << "=" << (label.empty() ? value.dump() : label)
                      << ": FAILED (" << e.what() << ")\n";
        }
    }
    io::write_text_atomic(out / "sweep.csv", csv.str());
    if (failures == static_cast<int>(base.sweep_values.size()))
        throw numeric_error("sweep: every row failed");
    return 0;
}

namespace detail_plot {

struct TraceTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // numeric columns; mode stored separately
    std::vector<std::string> modes;
    std::map<std::string, size_t> index;

    [[nodiscard]] size_t col(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw config_error("plotdata: trace has no column '" + name + "'");
        return it->second;
    }
};

inline TraceTable parse_trace_csv(const std::string& text) {
    TraceTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw config_error("plotdata: empty trace file");
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) {
        t.index[cell] = t.columns.size();
        t.columns.push_back(cell);
    }
    const size_t mode_col = t.col("mode");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        std::string mode;
        size_t c = 0;
        while (std::getline(ls, cell, ',')) {
            if (c == mode_col) {
                mode = cell;
                row.push_back(0.0);
            } else {
                row.push_back(cell.empty() ? 0.0 : std::stod(cell));
            }
            ++c;
        }
        if (row.size() != t.columns.size())
            throw config_error("plotdata: malformed trace row");
        t.rows.push_back(std::move(row));
        t.modes.push_back(std::move(mode));
    }
    if (t.rows.empty()) throw config_error("plotdata: trace has no data rows");
    return t;
}

inline std::string python_stub(const std::string& figure,
                               const std::vector<std::string>& data_files,
                               const std::string& kind) {
    std::ostringstream os;
    os << "#!/usr/bin/env python3\n"
       << "# Plot helper for " << figure << "; reads only the CSV files next to it.\n"
       << "import csv\n"
       << "import matplotlib.pyplot as plt\n\n"
       << "files = [";
    for (size_t i = 0; i < data_files.size(); ++i)
        os << (i ? ", " : "") << "\"" << data_files[i] << "\"";
    os << "]\n\n"
       << "def load(path):\n"
       << "    with open(path) as f:\n"
       << "        rows = list(csv.DictReader(f))\n"
       << "    return {k: [float(r[k]) for r in rows] for k in rows[0]}\n\n";
    if (kind == "phase") {
        os << "for path in files:\n"
           << "    d = load(path)\n"
           << "    xs = sorted(c[:-2] for c in d if c.endswith('_x1'))\n"
           << "    for name in xs:\n"
           << "        plt.plot(d[name + '_x1'], d[name + '_x2'], lw=0.5, label=name)\n"
           << "plt.xlabel('x1'); plt.ylabel('x2'); plt.legend(); plt.axis('equal')\n";
    } else {
        os << "for path in files:\n"
           << "    d = load(path)\n"
           << "    t = d.pop('t')\n"
           << "    for name, series in d.items():\n"
           << "        plt.plot(t, series, lw=0.8, label=name)\n"
           << "plt.xlabel('t'); plt.legend()\n";
    }
    os << "plt.title(\"" << figure << "\")\n"
       << "plt.savefig(\"" << figure << ".png\", dpi=160)\n"
       << "print(\"wrote " << figure << ".png\")\n";
    return os.str();
}

}  // namespace detail_plot

/// Emit plot-ready per-figure data files plus a small matplotlib stub that
/// references only those files.
inline int cmd_plotdata(const CommonArgs& args, const std::string& figure,
                        const std::vector<std::string>& inputs) {
    AppConfig cfg;
    const bool have_config = !args.config_path.empty();
    if (have_config) cfg = load_config(args.config_path);
    const fs::path out = have_config ? resolve_out_dir(args, cfg)
                                     : (args.out_dir.empty() ? fs::path("out") : fs::path(args.out_dir));

    auto need_inputs = [&](size_t count) {
        if (inputs.size() < count)
            throw config_error("plotdata: figure '" + figure + "' needs " +
                               std::to_string(count) + " input file(s) via --in");
    };

    std::vector<std::string> data_files;
    std::string kind = "phase";

    if (figure == "fig1a") {
        if (!have_config) throw config_error("plotdata: fig1a needs --config");
        const OscillatorSet osc = cfg.oscillators();
        std::ostringstream csv;
        csv.precision(17);
        csv << "t";
        for (int i = 0; i < osc.size(); ++i) csv << ",osc" << i << "_x1,osc" << i << "_x2";
        csv << "\n";
        // one settled revolution per oscillator, resampled on a common grid
        std::vector<Trajectory> trajs;
        double t_max = 0.0;
        for (int i = 0; i < osc.size(); ++i) {
            const double mu = osc.mu(i);
            auto rhs = [mu](double, const Vec& s) -> Vec {
                return Vec(vdp_rhs(Vec2(s[0], s[1]), mu));
            };
            PeriodEstimate est = find_period(rhs, Vec(Vec2(2, 0)), cfg.settle_time, 1e-6, cfg.dt);
            trajs.push_back(integrate(rhs, est.anchor, 0.0, est.period, cfg.dt));
            t_max = std::max(t_max, est.period);
        }
        const int rows = 2000;
        for (int r = 0; r <= rows; ++r) {
            const double t = t_max * r / rows;
            csv << t;
            for (const Trajectory& tr : trajs) {
                // wrap each oscillator onto its own period
                const double tp = std::fmod(t, tr.times.back());
                size_t k = static_cast<size_t>(
                    std::lower_bound(tr.times.begin(), tr.times.end(), tp) - tr.times.begin());
                if (k >= tr.states.size()) k = tr.states.size() - 1;
                csv << "," << tr.states[k][0] << "," << tr.states[k][1];
            }
            csv << "\n";
        }
        io::write_text_atomic(out / "fig1a_cycles.csv", csv.str());
        data_files.push_back("fig1a_cycles.csv");
    } else if (figure == "fig1b" || figure == "fig4" || figure == "fig5" || figure == "fig6") {
        need_inputs(1);
        const auto table = detail_plot::parse_trace_csv(io::read_text(inputs[0]));
        const bool phase1_only = figure == "fig1b";
        std::ostringstream csv;
        csv.precision(17);
        int n = 0;
        while (table.index.count("x" + std::to_string(n) + "_1")) ++n;
        if (n == 0) throw config_error("plotdata: trace has no state columns");
        csv << "t";
        for (int i = 0; i < n; ++i) csv << ",osc" << i << "_x1,osc" << i << "_x2";
        csv << "\n";
        const size_t tc = table.col("time");
        size_t written = 0;
        for (size_t r = 0; r < table.rows.size(); ++r) {
            const bool is_phase1 = table.modes[r] == "phase1";
            if (phase1_only != is_phase1) continue;
            csv << table.rows[r][tc];
            for (int i = 0; i < n; ++i) {
                csv << "," << table.rows[r][table.col("x" + std::to_string(i) + "_1")] << ","
                    << table.rows[r][table.col("x" + std::to_string(i) + "_2")];
            }
            csv << "\n";
            ++written;
        }
        if (written == 0)
            throw config_error("plotdata: trace contains no rows for figure '" + figure + "'");
        const std::string name = figure + "_states.csv";
        io::write_text_atomic(out / name, csv.str());
        data_files.push_back(name);
    } else if (figure == "fig2") {
        need_inputs(1);
        const json j = json::parse(io::read_text(inputs[0]));
        CouplingGraph g = [&j]() {
            std::vector<Edge> edges;
            for (const auto& e : j.at("edges")) edges.push_back({e.at(0), e.at(1)});
            return CouplingGraph(j.at("n").get<int>(), std::move(edges));
        }();
        const GainSchedule s = io::schedule_from_json(j, g);
        std::ostringstream csv;
        csv.precision(17);
        csv << "t";
        for (const Edge& e : g.edges())
            csv << ",k_" << e.i << "_" << e.j << "_1,k_" << e.i << "_" << e.j << "_2";
        csv << "\n";
        for (int l = 0; l < s.f(); ++l) {
            csv << s.cycle.times[static_cast<size_t>(l)];
            const EdgeGainSet& gs = s.samples[static_cast<size_t>(l)];
            for (int e = 0; e < gs.size(); ++e) csv << "," << gs[e][0] << "," << gs[e][1];
            csv << "\n";
        }
        io::write_text_atomic(out / "fig2_gains.csv", csv.str());
        data_files.push_back("fig2_gains.csv");
        kind = "series";
    } else if (figure == "fig7") {
        need_inputs(2);
        std::ostringstream csv;
        csv.precision(17);
        std::vector<GainSchedule> schedules;
        for (const std::string& path : inputs) {
            const json j = json::parse(io::read_text(path));
            std::vector<Edge> edges;
            for (const auto& e : j.at("edges")) edges.push_back({e.at(0), e.at(1)});
            CouplingGraph g(j.at("n").get<int>(), std::move(edges));
            schedules.push_back(io::schedule_from_json(j, g));
        }
        const int f = schedules.front().f();
        for (const GainSchedule& s : schedules)
            if (s.f() != f) throw config_error("plotdata: fig7 schedules must share f");
        csv << "t";
        for (size_t s = 0; s < schedules.size(); ++s) csv << ",beta_" << s;
        csv << "\n";
        for (int l = 0; l < f; ++l) {
            csv << schedules.front().cycle.times[static_cast<size_t>(l)];
            for (const GainSchedule& s : schedules) csv << "," << s.betas[static_cast<size_t>(l)];
            csv << "\n";
        }
        io::write_text_atomic(out / "fig7_beta.csv", csv.str());
        data_files.push_back("fig7_beta.csv");
        kind = "series";
    } else {
        throw config_error("plotdata: unknown figure id '" + figure + "'");
    }

    io::write_text_atomic(out / ("plot_" + figure + ".py"),
                          detail_plot::python_stub(figure, data_files, kind));
    std::cout << "wrote";
    for (const std::string& f : data_files) std::cout << " " << (out / f).string();
    std::cout << " and " << (out / ("plot_" + figure + ".py")).string() << "\n";
    return 0;
}

/// Entry point used by the binary and by tests. Returns the process exit
/// code: 0 success, 2 configuration error, 3 numeric/solver failure, 4 I/O
/// failure.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"Two-phase synchronization of heterogeneous Van der Pol oscillator networks"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string figure;
    std::vector<std::string> inputs;

    auto add_common = [&args](CLI::App* sub, bool config_required = true) {
        auto* opt = sub->add_option("--config", args.config_path, "run configuration file (JSON)");
        if (config_required) opt->required();
        sub->add_option("--out", args.out_dir, "output directory (default from config)");
        sub->add_option("--cache", args.cache_dir,
                        "cache directory (overrides VDPSYNC_CACHE and config)");
    };

    CLI::App* c_cycle = app.add_subcommand("cycle", "compute and store the blended limit cycle");
    add_common(c_cycle);
    CLI::App* c_opt = app.add_subcommand("optimize", "design the periodic gain schedule");
    add_common(c_opt);
    CLI::App* c_sim = app.add_subcommand("simulate", "run the two-phase (or hybrid) simulation");
    add_common(c_sim);
    CLI::App* c_sweep = app.add_subcommand("sweep", "run the configured parameter sweep");
    add_common(c_sweep);
    CLI::App* c_plot = app.add_subcommand("plotdata", "emit plot-ready data files");
    add_common(c_plot, false);
    c_plot->add_option("--figure", figure, "figure id (fig1a, fig1b, fig2, fig4-fig7)")
        ->required();
    c_plot->add_option("--in", inputs, "input trace/schedule file(s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_cycle->parsed()) return cmd_cycle(args);
        if (c_opt->parsed()) return cmd_optimize(args);
        if (c_sim->parsed()) return cmd_simulate(args);
        if (c_sweep->parsed()) return cmd_sweep(args);
        if (c_plot->parsed()) return cmd_plotdata(args, figure, inputs);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace vdpsync::cli
