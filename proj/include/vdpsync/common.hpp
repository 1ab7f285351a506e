#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vdpsync {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error raised by invalid configuration or malformed input files.
/// The CLI maps it to exit code 2.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Error raised by numeric failures: integration blow-up, missing limit
/// cycle, solver non-convergence, phase-one timeout. Carries the simulation
/// time of the failure when one is meaningful. CLI exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what,
                           double time = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), time_(time) {}

    /// Simulation time at which the failure occurred (NaN if not applicable).
    [[nodiscard]] double time() const { return time_; }

private:
    double time_;
};

/// Error raised by file-system failures. CLI exit code 4.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace vdpsync
