#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace diagcoag::cli {

/// Exit codes shared by all subcommands.
enum Exit : int {
  kOk = 0,
  kUsage = 1,          ///< unparsable command line or unreadable files
  kInvalid = 2,        ///< parameters outside the admissible range
  kSolverFailure = 3,  ///< a pipeline stage failed
  kBoundFailure = 4,   ///< verify found a failed bound
  kStepCollapse = 5,   ///< time stepping lost positivity
};

/// Settings common to the subcommands. Every field may also come from the
/// JSON file given by --config; explicit flags take precedence.
struct RunConfig {
  std::optional<double> gamma;
  std::optional<double> beta;
  std::optional<double> rho;
  double c = 1.0;
  std::optional<double> z;
  int m = 64;
  std::optional<double> x_max;
  double tol = 1e-12;
  std::string out;
  std::string format = "csv";
  bool allow_degenerate = false;

  /// Overwrites fields present in `j` (keys as the long flag names, with
  /// "allow_degenerate" for --allow-degenerate).
  void merge_json(const nlohmann::json& j);
  /// beta from exactly one of beta / rho.
  double resolve_beta() const;
};

/// Runs the command line `args` (without the program name). Reports go to
/// `out`, diagnostics to `err`; the return value is the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace diagcoag::cli
