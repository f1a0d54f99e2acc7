#include "cli/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cli/config.hpp"

namespace ocpopt::cli {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path.string() + "'");
  }
}

std::string trajectory_csv(const Trajectory& traj, const Objective& obj) {
  std::ostringstream os;
  os << "k";
  for (Eigen::Index i = 0; i < obj.dim; ++i) os << ",x" << i;
  os << ",f,grad_norm,step_norm,depth,retries\n";
  for (std::size_t k = 0; k < traj.iterates.size(); ++k) {
    const Vec& x = traj.iterates[k];
    os << k;
    for (Eigen::Index i = 0; i < x.size(); ++i) os << ',' << format_real(x[i]);
    os << ',' << format_real(traj.f_values[k]);
    if (k < traj.diags.size()) {
      const StepDiag& d = traj.diags[k];
      os << ',' << format_real(d.grad_norm) << ',' << format_real(d.step.norm()) << ','
         << d.depth << ',' << d.retries;
    } else {
      os << ',' << format_real(traj.final_grad_norm) << ",0,0,0";
    }
    os << '\n';
  }
  return os.str();
}

std::string comparison_csv(const ComparisonTable& table) {
  std::ostringstream os;
  os << "solver,iterations,gradient_evals,hessian_evals,linear_solves,final_f,final_grad_norm,"
        "termination\n";
  for (const auto& row : table.rows) {
    os << row.solver << ',' << row.iterations << ',' << row.gradient_evals << ','
       << row.hessian_evals << ',' << row.linear_solves << ',' << format_real(row.final_f) << ','
       << format_real(row.final_grad_norm) << ',' << to_string(row.termination) << '\n';
  }
  return os.str();
}

}  // namespace ocpopt::cli
