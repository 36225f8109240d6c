#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace romfv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;

/// Error type thrown by every module; the message carries the context
/// (file/line for parsers, cell/face ids for geometry, stage names for
/// the pipeline).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

/// Sentinel for "no neighbor cell" on boundary faces.
inline constexpr int kNoCell = -1;

}  // namespace romfv
