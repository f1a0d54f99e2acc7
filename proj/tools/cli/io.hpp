#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ocpopt/ocpopt.hpp"

namespace ocpopt::cli {

/// %.17g; "nan", "inf" and "-inf" for non-finite values.
std::string format_real(double v);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
/// Creates missing parent directories. Throws IoError.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Per-iterate CSV: k, x0..x{n-1}, f, grad_norm, step_norm, depth, retries.
/// The step columns describe the step taken *from* row k; the final row has
/// step_norm 0, depth 0, retries 0.
std::string trajectory_csv(const Trajectory& traj, const Objective& obj);

std::string comparison_csv(const ComparisonTable& table);

}  // namespace ocpopt::cli
