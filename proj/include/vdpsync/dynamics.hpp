#pragma once

#include "vdpsync/common.hpp"
#include "vdpsync/graph.hpp"

#include <numeric>
#include <vector>

namespace vdpsync {

/// The damping parameters of a heterogeneous Van der Pol network.
class OscillatorSet {
public:
    explicit OscillatorSet(std::vector<double> mu) : mu_(std::move(mu)) {
        if (mu_.size() < 2) throw std::invalid_argument("oscillators: need at least 2");
        for (double m : mu_)
            if (!(m > 0.0) || !std::isfinite(m))
                throw std::invalid_argument("oscillators: every mu must be positive and finite");
        mean_mu_ = std::accumulate(mu_.begin(), mu_.end(), 0.0) /
                   static_cast<double>(mu_.size());
    }

    [[nodiscard]] int size() const { return static_cast<int>(mu_.size()); }
    [[nodiscard]] double mu(int i) const { return mu_[static_cast<size_t>(i)]; }
    [[nodiscard]] const std::vector<double>& mu() const { return mu_; }
    [[nodiscard]] double mean_mu() const { return mean_mu_; }

private:
    std::vector<double> mu_;
    double mean_mu_;
};

/// Van der Pol right-hand side: [x2, -x1 + mu (1 - x1^2) x2].
inline Vec2 vdp_rhs(const Vec2& x, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("vdp_rhs: mu must be positive");
    if (!x.allFinite()) throw std::invalid_argument("vdp_rhs: non-finite state");
    return {x[1], -x[0] + mu * (1.0 - x[0] * x[0]) * x[1]};
}

inline Mat2 vdp_jacobian(const Vec2& x, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("vdp_jacobian: mu must be positive");
    if (!x.allFinite()) throw std::invalid_argument("vdp_jacobian: non-finite state");
    Mat2 J;
    J << 0.0, 1.0,
        -1.0 - 2.0 * mu * x[0] * x[1], mu * (1.0 - x[0] * x[0]);
    return J;
}

/// First-order expansion of the local dynamics about a state s:
/// xdot ~ A x + b with b chosen so the expansion is exact at s.
struct LinearizedLocal {
    Mat2 A;
    Vec2 b;
};

inline LinearizedLocal linearize(const Vec2& s, double mu) {
    LinearizedLocal lin;
    lin.A = vdp_jacobian(s, mu);
    lin.b = vdp_rhs(s, mu) - lin.A * s;
    return lin;
}

/// Node-averaged vector field. The Van der Pol right-hand side is affine in
/// mu, so this is a Van der Pol oscillator with the mean damping parameter.
inline Vec2 blended_rhs(const Vec2& s, const OscillatorSet& osc) {
    return vdp_rhs(s, osc.mean_mu());
}

namespace detail {

inline void check_global_dim(const Vec& x, const OscillatorSet& osc, const CouplingGraph& g,
                             const char* where) {
    if (osc.size() != g.node_count())
        throw std::invalid_argument(std::string(where) + ": oscillator/graph size mismatch");
    if (x.size() != 2 * g.node_count())
        throw std::invalid_argument(std::string(where) + ": global state has wrong dimension");
    if (!x.allFinite())
        throw std::invalid_argument(std::string(where) + ": non-finite global state");
}

}  // namespace detail

/// Coupled dynamics under uniform static diffusive coupling with gain k_c.
/// Equivalent to the stacked local dynamics minus k_c (L (x) I2) x.
inline Vec coupled_rhs_static(const Vec& x, const OscillatorSet& osc, const CouplingGraph& g,
                              double k_c) {
    detail::check_global_dim(x, osc, g, "coupled_rhs_static");
    if (!(k_c >= 0.0)) throw std::invalid_argument("coupled_rhs_static: k_c must be >= 0");
    const int n = g.node_count();
    Vec dx(2 * n);
    for (int i = 0; i < n; ++i) {
        const Vec2 xi = x.segment<2>(2 * i);
        Vec2 d = vdp_rhs(xi, osc.mu(i));
        for (int j : g.in_neighbors(i)) {
            const Vec2 xj = x.segment<2>(2 * j);
            d[0] += k_c * (xj[0] - xi[0]);
            d[1] += k_c * (xj[1] - xi[1]);
        }
        dx.segment<2>(2 * i) = d;
    }
    return dx;
}

/// Coupled dynamics under edge-wise diagonal gains. Simulation always uses
/// the exact nonlinear local dynamics; linearization is a design-time tool.
inline Vec coupled_rhs_scheduled(const Vec& x, const OscillatorSet& osc, const CouplingGraph& g,
                                 const EdgeGainSet& gains) {
    detail::check_global_dim(x, osc, g, "coupled_rhs_scheduled");
    if (gains.size() != g.edge_count())
        throw std::invalid_argument("coupled_rhs_scheduled: gain/edge mismatch");
    const int n = g.node_count();
    Vec dx(2 * n);
    for (int i = 0; i < n; ++i)
        dx.segment<2>(2 * i) = vdp_rhs(x.segment<2>(2 * i), osc.mu(i));
    const auto& edges = g.edges();
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = edges[static_cast<size_t>(e)];
        const Vec2& k = gains[e];
        dx[2 * ed.i] += k[0] * (x[2 * ed.j] - x[2 * ed.i]);
        dx[2 * ed.i + 1] += k[1] * (x[2 * ed.j + 1] - x[2 * ed.i + 1]);
    }
    return dx;
}

}  // namespace vdpsync
