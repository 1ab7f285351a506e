#pragma once

#include "vdpsync/common.hpp"
#include "vdpsync/dynamics.hpp"
#include "vdpsync/graph.hpp"
#include "vdpsync/limit_cycle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace vdpsync {

/// The disagreement metric P = (n I - ones) (x) I2: x'Px equals the sum of
/// squared pairwise state differences over unordered node pairs. P is
/// positive semi-definite with a two-dimensional kernel spanned by consensus
/// vectors.
struct SyncMetric {
    int n = 0;
    Mat P;
};

inline SyncMetric sync_metric(int n) {
    if (n < 2) throw std::invalid_argument("sync_metric: need n >= 2");
    Mat P = Mat::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = (i == j) ? static_cast<double>(n - 1) : -1.0;
            P(2 * i, 2 * j) = v;
            P(2 * i + 1, 2 * j + 1) = v;
        }
    return {n, std::move(P)};
}

/// x'Px, the total squared pairwise disagreement.
inline double value_function(const Vec& x, const SyncMetric& m) {
    if (x.size() != m.P.rows())
        throw std::invalid_argument("value_function: dimension mismatch");
    return x.dot(m.P * x);
}

/// Jacobians of every local oscillator at the expansion state s.
inline std::vector<Mat2> linearize_all(const OscillatorSet& osc, const Vec2& s) {
    std::vector<Mat2> blocks;
    blocks.reserve(static_cast<size_t>(osc.size()));
    for (int i = 0; i < osc.size(); ++i) blocks.push_back(vdp_jacobian(s, osc.mu(i)));
    return blocks;
}

/// Symmetric form governing the decay of x'Px along the linearized coupled
/// dynamics: (A - LK)' P + P (A - LK), explicitly symmetrized to suppress
/// round-off asymmetry. A is the block diagonal of the local Jacobians.
inline Mat lyapunov_form(const std::vector<Mat2>& A_blocks, const EdgeGainSet& gains,
                         const CouplingGraph& g, const SyncMetric& P) {
    const int n = g.node_count();
    if (static_cast<int>(A_blocks.size()) != n)
        throw std::invalid_argument("lyapunov_form: block count mismatch");
    if (P.n != n) throw std::invalid_argument("lyapunov_form: metric dimension mismatch");
    Mat A = Mat::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) A.block<2, 2>(2 * i, 2 * i) = A_blocks[static_cast<size_t>(i)];
    const Mat Q = A - build_LK(g, gains);
    Mat S = Q.transpose() * P.P + P.P * Q;
    return 0.5 * (S + S.transpose());
}

/// Options for the per-sample gain solver (a log-barrier interior-point
/// method on the equivalent semidefinite program).
struct SolverOptions {
    double t_init = 1.0;      // initial barrier weight on the objective
    double t_mult = 10.0;     // barrier weight multiplier per outer iteration
    double gap_tol = 1e-8;    // stop once the duality-gap bound falls below this
    double newton_tol = 1e-9; // centering stop: squared Newton decrement / 2
    int max_newton = 60;      // Newton iterations per centering
    int max_outer = 40;
    int threads = 0;          // schedule-level parallelism; 0 = hardware

    [[nodiscard]] std::string signature() const {
        std::ostringstream os;
        os << "t0=" << t_init << ";mult=" << t_mult << ";gap=" << gap_tol
           << ";ntol=" << newton_tol << ";nmax=" << max_newton << ";omax=" << max_outer;
        return os.str();
    }
};

/// Result of one per-sample gain optimization. alpha and beta are reported
/// tight: alpha is the largest eigenvalue of the Lyapunov form at the
/// returned gains, beta the largest gain entry.
struct GainOptResult {
    EdgeGainSet gains;
    double alpha = 0.0;
    double beta = 0.0;
    double objective = 0.0;  // alpha + omega * beta
    bool converged = true;   // false if an iteration budget was exhausted
};

namespace detail {

inline double lambda_max(const Mat& S) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

/// Affine model of the Lyapunov form: S(k) = S0 - sum_i k[i] * C[i], one
/// gain entry per (edge, dimension) pair, entry index 2*e + d.
struct SampleProblem {
    int n = 0;
    int q = 0;
    Mat S0;
    std::vector<Mat> C;
};

inline SampleProblem build_sample_problem(const std::vector<Mat2>& A_blocks,
                                          const CouplingGraph& g, const SyncMetric& P) {
    const int n = g.node_count();
    for (const Mat2& A : A_blocks)
        if (!A.allFinite())
            throw std::invalid_argument("gain optimization: non-finite Jacobian block");
    SampleProblem prob;
    prob.n = n;
    prob.q = 2 * g.edge_count();
    prob.S0 = lyapunov_form(A_blocks, EdgeGainSet::zero(g), g, P);
    prob.C.reserve(static_cast<size_t>(prob.q));
    const auto& edges = g.edges();
    for (int e = 0; e < g.edge_count(); ++e) {
        for (int d = 0; d < 2; ++d) {
            Mat E = Mat::Zero(2 * n, 2 * n);
            E(2 * edges[static_cast<size_t>(e)].i + d, 2 * edges[static_cast<size_t>(e)].i + d) = 1.0;
            E(2 * edges[static_cast<size_t>(e)].i + d, 2 * edges[static_cast<size_t>(e)].j + d) = -1.0;
            prob.C.push_back(E.transpose() * P.P + P.P * E);
        }
    }
    return prob;
}

inline Mat eval_S(const SampleProblem& prob, const Vec& k) {
    Mat S = prob.S0;
    for (int i = 0; i < prob.q; ++i) S -= k[i] * prob.C[static_cast<size_t>(i)];
    return S;
}

inline EdgeGainSet entries_to_gains(const CouplingGraph& g, const Vec& k) {
    std::vector<Vec2> entries(static_cast<size_t>(g.edge_count()));
    for (int e = 0; e < g.edge_count(); ++e)
        entries[static_cast<size_t>(e)] = Vec2(k[2 * e], k[2 * e + 1]);
    return {g, std::move(entries)};
}

/// Interior-point state for min alpha + omega*beta subject to
/// S(k) < alpha*I, 0 < k_i < beta. All iterates stay strictly feasible.
struct BarrierPoint {
    Vec k;
    double alpha = 0.0;
    double beta = 0.0;
};

inline std::optional<double> barrier_value(const SampleProblem& prob, double omega, double t,
                                           const BarrierPoint& z) {
    if (!(z.beta > 0.0)) return std::nullopt;
    for (int i = 0; i < prob.q; ++i)
        if (!(z.k[i] > 0.0) || !(z.beta - z.k[i] > 0.0)) return std::nullopt;
    Mat M = -eval_S(prob, z.k);
    M.diagonal().array() += z.alpha;
    Eigen::LLT<Mat> llt(M);
    if (llt.info() != Eigen::Success) return std::nullopt;
    double logdet = 0.0;
    for (int i = 0; i < M.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    double val = t * (z.alpha + omega * z.beta) - logdet - std::log(z.beta);
    for (int i = 0; i < prob.q; ++i)
        val += -std::log(z.k[i]) - std::log(z.beta - z.k[i]);
    return std::isfinite(val) ? std::optional<double>(val) : std::nullopt;
}

/// One Newton centering at fixed barrier weight t. Returns false on a line
/// search stall or exhausted iteration budget.
inline bool center(const SampleProblem& prob, double omega, double t, BarrierPoint& z,
                   const SolverOptions& opts) {
    const int q = prob.q;
    const int dim = q + 2;  // ordering: k_0..k_{q-1}, alpha, beta
    const int ai = q;
    const int bi = q + 1;

    for (int iter = 0; iter < opts.max_newton; ++iter) {
        Mat M = -eval_S(prob, z.k);
        M.diagonal().array() += z.alpha;
        Eigen::LLT<Mat> llt(M);
        if (llt.info() != Eigen::Success) return false;  // lost feasibility; should not happen
        const Mat W = llt.solve(Mat::Identity(M.rows(), M.cols()));

        std::vector<Mat> X(static_cast<size_t>(q));  // X_i = W * C_i
        for (int i = 0; i < q; ++i) X[static_cast<size_t>(i)] = W * prob.C[static_cast<size_t>(i)];
        const Mat W2 = W * W;

        Vec grad = Vec::Zero(dim);
        Mat H = Mat::Zero(dim, dim);
        for (int i = 0; i < q; ++i) {
            const double invk = 1.0 / z.k[i];
            const double invbk = 1.0 / (z.beta - z.k[i]);
            grad[i] = -X[static_cast<size_t>(i)].trace() - invk + invbk;
            H(i, i) += invk * invk + invbk * invbk;
            H(i, bi) -= invbk * invbk;
            H(bi, i) -= invbk * invbk;
            H(bi, bi) += invbk * invbk;
            for (int j = i; j < q; ++j) {
                const double hij =
                    (X[static_cast<size_t>(i)].cwiseProduct(X[static_cast<size_t>(j)].transpose()))
                        .sum();
                H(i, j) += hij;
                if (j != i) H(j, i) += hij;
            }
            const double hia = (W2.cwiseProduct(prob.C[static_cast<size_t>(i)])).sum();
            H(i, ai) += hia;
            H(ai, i) += hia;
        }
        grad[ai] = t - W.trace();
        grad[bi] = t * omega - 1.0 / z.beta;
        H(ai, ai) += W2.trace();
        H(bi, bi) += 1.0 / (z.beta * z.beta);
        for (int i = 0; i < q; ++i) grad[bi] -= 1.0 / (z.beta - z.k[i]);

        Eigen::LDLT<Mat> ldlt(H);
        Vec d = -ldlt.solve(grad);
        if (!d.allFinite()) {
            Mat Hr = H;
            Hr.diagonal().array() += 1e-10 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
            d = -Eigen::LDLT<Mat>(Hr).solve(grad);
            if (!d.allFinite()) return false;
        }
        const double decrement2 = -grad.dot(d);

        const auto psi0 = barrier_value(prob, omega, t, z);
        if (!psi0) return false;
        // At large t the barrier value's ulp bounds the measurable descent;
        // below that floor the point is centered as far as doubles can tell.
        const double noise_floor =
            512.0 * std::numeric_limits<double>::epsilon() * (std::abs(*psi0) + 1.0);
        if (decrement2 <= std::max(2.0 * opts.newton_tol, noise_floor)) return true;

        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            BarrierPoint trial;
            trial.k = z.k + step * d.head(q);
            trial.alpha = z.alpha + step * d[ai];
            trial.beta = z.beta + step * d[bi];
            const auto psi = barrier_value(prob, omega, t, trial);
            if (psi && *psi <= *psi0 - 0.1 * step * decrement2) {
                z = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        // A stalled line search with a small decrement means the iterate is
        // already inside Newton's quadratic zone.
        if (!accepted) return decrement2 <= 1e-2;
    }
    return false;
}

}  // namespace detail

/// Solve the per-sample gain design problem: minimize
/// lambda_max(S(K)) + omega * (largest gain entry) over nonnegative diagonal
/// edge gains, where S is the Lyapunov form of the linearized coupled
/// dynamics. With the metric P fixed, S is affine in the gain entries and
/// the problem is a small semidefinite program; it is solved by a primal
/// log-barrier Newton method whose iterates stay strictly feasible.
///
/// On budget exhaustion the best strictly feasible point found is returned
/// with `converged` cleared; the zero-gain point is always feasible, so the
/// reported objective never exceeds lambda_max(S(0)).
inline GainOptResult optimize_gains_at_sample(const std::vector<Mat2>& A_blocks,
                                              const CouplingGraph& g, const SyncMetric& P,
                                              double omega,
                                              const SolverOptions& opts = SolverOptions{}) {
    if (!(omega >= 0.0)) throw std::invalid_argument("optimize_gains_at_sample: omega < 0");
    detail::SampleProblem prob = detail::build_sample_problem(A_blocks, g, P);

    // Normalize the matrix scale so every subproblem sees an O(1) objective;
    // the barrier weight then covers the same numeric range regardless of how
    // stiff the linearization is. Gains are unaffected, alpha rescales back.
    const double scale = std::max(1.0, prob.S0.cwiseAbs().maxCoeff());
    detail::SampleProblem sprob = prob;
    sprob.S0 /= scale;
    for (Mat& C : sprob.C) C /= scale;
    const double omega_s = omega / scale;

    detail::BarrierPoint z;
    z.k = Vec::Constant(sprob.q, 1.0);
    z.beta = 3.0;
    z.alpha = detail::lambda_max(detail::eval_S(sprob, z.k));
    z.alpha += 1.0 + 0.01 * std::abs(z.alpha);

    // Zero gains are always feasible; the result never does worse.
    Vec best_k = Vec::Zero(sprob.q);
    double best_obj = scale * detail::lambda_max(sprob.S0);

    const double nu = static_cast<double>(2 * sprob.n + 2 * sprob.q + 1);
    double t = opts.t_init;
    bool converged = false;
    for (int outer = 0; outer < opts.max_outer; ++outer) {
        const bool centering_ok = detail::center(sprob, omega_s, t, z, opts);
        const double f_true =
            scale * detail::lambda_max(detail::eval_S(sprob, z.k)) + omega * z.k.maxCoeff();
        if (f_true < best_obj) {
            best_obj = f_true;
            best_k = z.k;
        }
        if (nu / t <= opts.gap_tol) {
            converged = centering_ok;
            break;
        }
        t *= opts.t_mult;
    }

    GainOptResult res;
    res.gains = detail::entries_to_gains(g, best_k);
    res.alpha = scale * detail::lambda_max(detail::eval_S(sprob, best_k));
    res.beta = best_k.size() > 0 ? std::max(0.0, best_k.maxCoeff()) : 0.0;
    res.objective = res.alpha + omega * res.beta;
    res.converged = converged;
    return res;
}

/// Exhaustive grid search over the gain entries, used as the independent
/// test oracle for optimize_gains_at_sample. Refuses problems with more than
/// four gain entries. For the two-node bidirectional graph the Lyapunov form
/// depends on the gains only through the per-dimension sums across the two
/// opposing edges (the per-entry curvature matrices of the two edges
/// coincide), so the full product grid is scanned exactly by enumerating the
/// sums and splitting each one as evenly as the grid allows, which minimizes
/// the largest entry. `force_naive` disables that reduction and enumerates
/// the raw product grid (kept for cross-checking the reduction in tests).
inline GainOptResult grid_oracle(const std::vector<Mat2>& A_blocks, const CouplingGraph& g,
                                 const SyncMetric& P, double omega, double grid_max,
                                 double grid_step, bool force_naive = false, int threads = 0) {
    if (2 * g.edge_count() > 4)
        throw std::invalid_argument("grid_oracle: more than 4 gain entries");
    if (!(grid_step > 0.0)) throw std::invalid_argument("grid_oracle: grid_step must be > 0");
    if (grid_max < 0.0) throw std::invalid_argument("grid_oracle: grid_max must be >= 0");

    detail::SampleProblem prob = detail::build_sample_problem(A_blocks, g, P);
    const int q = prob.q;

    auto make_result = [&](const Vec& k) {
        GainOptResult r;
        r.gains = detail::entries_to_gains(g, k);
        r.alpha = detail::lambda_max(detail::eval_S(prob, k));
        r.beta = k.size() > 0 ? std::max(0.0, k.maxCoeff()) : 0.0;
        r.objective = r.alpha + omega * r.beta;
        r.converged = true;
        return r;
    };

    const auto steps = static_cast<std::int64_t>(std::floor(grid_max / grid_step + 1e-9));
    if (steps == 0) return make_result(Vec::Zero(q));

    const bool reducible = !force_naive && g.node_count() == 2 && g.edge_count() == 2;
    if (reducible) {
        // S(k) = S0 - sigma1 * C[0] - sigma2 * C[1] with sigma_d the summed
        // gains of dimension d over both edges.
        const Mat& C0 = prob.C[0];
        const Mat& C1 = prob.C[1];
        const std::int64_t sum_steps = 2 * steps;

        struct Best {
            double obj = std::numeric_limits<double>::infinity();
            std::int64_t i1 = 0, i2 = 0;
        };
        int nthreads = threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency())
                                    : threads;
        nthreads = std::max(1, std::min<int>(nthreads, 32));
        std::vector<Best> best(static_cast<size_t>(nthreads));
        std::atomic<std::int64_t> next{0};
        auto worker = [&](int tid) {
            Eigen::SelfAdjointEigenSolver<Mat> es;
            Mat S(prob.S0.rows(), prob.S0.cols());
            std::int64_t i1;
            while ((i1 = next.fetch_add(1)) <= sum_steps) {
                const double sigma1 = static_cast<double>(i1) * grid_step;
                const double beta1 =
                    static_cast<double>((i1 + 1) / 2) * grid_step;  // minimal max entry, dim 1
                for (std::int64_t i2 = 0; i2 <= sum_steps; ++i2) {
                    const double sigma2 = static_cast<double>(i2) * grid_step;
                    const double beta2 = static_cast<double>((i2 + 1) / 2) * grid_step;
                    S = prob.S0 - sigma1 * C0 - sigma2 * C1;
                    es.compute(S, Eigen::EigenvaluesOnly);
                    const double obj =
                        es.eigenvalues().maxCoeff() + omega * std::max(beta1, beta2);
                    Best& b = best[static_cast<size_t>(tid)];
                    if (obj < b.obj) b = {obj, i1, i2};
                }
            }
        };
        if (nthreads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int tindex = 0; tindex < nthreads; ++tindex)
                pool.emplace_back(worker, tindex);
            for (auto& th : pool) th.join();
        }
        Best overall;
        for (const Best& b : best)
            if (b.obj < overall.obj ||
                (b.obj == overall.obj && std::tie(b.i1, b.i2) < std::tie(overall.i1, overall.i2)))
                overall = b;

        Vec k(q);
        const std::int64_t a_idx = (overall.i1 + 1) / 2;
        const std::int64_t b_idx = (overall.i2 + 1) / 2;
        k[0] = static_cast<double>(a_idx) * grid_step;
        k[1] = static_cast<double>(b_idx) * grid_step;
        k[2] = static_cast<double>(overall.i1 - a_idx) * grid_step;
        k[3] = static_cast<double>(overall.i2 - b_idx) * grid_step;
        return make_result(k);
    }

    double points = 1.0;
    for (int i = 0; i < q; ++i) points *= static_cast<double>(steps + 1);
    if (points > 2e7) throw std::invalid_argument("grid_oracle: grid too large to enumerate");

    std::vector<std::int64_t> idx(static_cast<size_t>(q), 0);
    Vec k = Vec::Zero(q);
    double best_obj = std::numeric_limits<double>::infinity();
    Vec best_k = k;
    Eigen::SelfAdjointEigenSolver<Mat> es;
    while (true) {
        for (int i = 0; i < q; ++i) k[i] = static_cast<double>(idx[static_cast<size_t>(i)]) * grid_step;
        es.compute(detail::eval_S(prob, k), Eigen::EigenvaluesOnly);
        const double obj = es.eigenvalues().maxCoeff() + omega * (q > 0 ? k.maxCoeff() : 0.0);
        if (obj < best_obj) {
            best_obj = obj;
            best_k = k;
        }
        int pos = q - 1;
        while (pos >= 0 && idx[static_cast<size_t>(pos)] == steps) {
            idx[static_cast<size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++idx[static_cast<size_t>(pos)];
    }
    return make_result(best_k);
}

/// The periodic gain schedule: one edge-gain set per cycle sample, plus the
/// tight per-sample bounds and the cycle the schedule was designed for.
struct GainSchedule {
    std::vector<EdgeGainSet> samples;
    std::vector<double> alphas;
    std::vector<double> betas;
    double omega = 0.0;
    CycleSample cycle;
    bool all_converged = true;

    [[nodiscard]] int f() const { return static_cast<int>(samples.size()); }

    /// Per-edge gain averaged over the period (mean of both diagonal entries).
    [[nodiscard]] std::vector<double> per_edge_average() const {
        if (samples.empty()) return {};
        std::vector<double> avg(static_cast<size_t>(samples.front().size()), 0.0);
        for (const EdgeGainSet& gs : samples)
            for (int e = 0; e < gs.size(); ++e)
                avg[static_cast<size_t>(e)] += 0.5 * (gs[e][0] + gs[e][1]);
        for (double& a : avg) a /= static_cast<double>(samples.size());
        return avg;
    }

    /// Mean of the per-edge period averages.
    [[nodiscard]] double overall_average() const {
        const auto avg = per_edge_average();
        if (avg.empty()) return 0.0;
        double s = 0.0;
        for (double a : avg) s += a;
        return s / static_cast<double>(avg.size());
    }
};

namespace detail {

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    int nthreads = threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : threads;
    nthreads = std::max(1, std::min(nthreads, count));
    if (nthreads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        int i;
        while ((i = next.fetch_add(1)) < count) {
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (error) return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Design the full periodic schedule: linearize every oscillator at each
/// cycle sample and solve the per-sample problem. The subproblems are
/// independent and solved in parallel; output order follows the sample
/// index, so the result does not depend on the thread count.
inline GainSchedule optimize_schedule(const CycleSample& cycle, const OscillatorSet& osc,
                                      const CouplingGraph& g, double omega,
                                      const SolverOptions& opts = SolverOptions{}) {
    if (osc.size() != g.node_count())
        throw std::invalid_argument("optimize_schedule: oscillator/graph size mismatch");
    if (cycle.f < 2 || static_cast<int>(cycle.states.size()) != cycle.f)
        throw std::invalid_argument("optimize_schedule: invalid cycle sample");

    const SyncMetric P = sync_metric(g.node_count());
    GainSchedule sched;
    sched.omega = omega;
    sched.cycle = cycle;
    sched.samples.resize(static_cast<size_t>(cycle.f));
    sched.alphas.resize(static_cast<size_t>(cycle.f));
    sched.betas.resize(static_cast<size_t>(cycle.f));
    std::vector<char> ok(static_cast<size_t>(cycle.f), 1);

    detail::parallel_for(cycle.f, opts.threads, [&](int l) {
        try {
            const auto A_blocks = linearize_all(osc, cycle.states[static_cast<size_t>(l)]);
            GainOptResult r = optimize_gains_at_sample(A_blocks, g, P, omega, opts);
            sched.samples[static_cast<size_t>(l)] = r.gains;
            sched.alphas[static_cast<size_t>(l)] = r.alpha;
            sched.betas[static_cast<size_t>(l)] = r.beta;
            ok[static_cast<size_t>(l)] = r.converged ? 1 : 0;
        } catch (const std::exception& e) {
            throw numeric_error("optimize_schedule: sample " + std::to_string(l) + ": " +
                                e.what());
        }
    });
    for (char c : ok)
        if (!c) sched.all_converged = false;
    return sched;
}

/// A schedule holding the same gain set at every sample, with tight
/// per-sample alpha/beta. Used for strong-coupling and zero-gain baselines.
inline GainSchedule constant_gain_schedule(const CycleSample& cycle, const OscillatorSet& osc,
                                           const CouplingGraph& g, const EdgeGainSet& gains) {
    if (osc.size() != g.node_count())
        throw std::invalid_argument("constant_gain_schedule: oscillator/graph size mismatch");
    const SyncMetric P = sync_metric(g.node_count());
    GainSchedule sched;
    sched.omega = 0.0;
    sched.cycle = cycle;
    sched.samples.assign(static_cast<size_t>(cycle.f), gains);
    sched.alphas.resize(static_cast<size_t>(cycle.f));
    sched.betas.assign(static_cast<size_t>(cycle.f), gains.max_entry());
    for (int l = 0; l < cycle.f; ++l) {
        const auto A_blocks = linearize_all(osc, cycle.states[static_cast<size_t>(l)]);
        sched.alphas[static_cast<size_t>(l)] =
            detail::lambda_max(lyapunov_form(A_blocks, gains, g, P));
    }
    return sched;
}

}  // namespace vdpsync
