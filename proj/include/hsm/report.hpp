#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace hsm {

// Everything needed to reproduce a run: the full request plus the build
// version.  Serialized verbatim into the "spec" block of every report.
struct RunSpec {
  std::string subcommand;
  int dim = 0;
  std::string length_spec;     // as requested, e.g. "4" or "3..6"
  std::vector<int> lengths;    // expanded sweep
  double lambda = 0.0;         // 0 when the (N, beta) form is in use
  int spin_components = 0;     // 0 in the lambda-only form
  double beta = 0.0;
  int x0 = 0;
  std::uint64_t seed = 0;
  int sweeps = 0;
  int burn_in = 0;
  int thin = 0;
  int chains = 0;
  int starts = 0;
  int grid = 0;
  double rel_tol = 0.0;
  std::string format = "json";
  std::string out_path;        // empty means stdout
};

nlohmann::ordered_json runspec_json(const RunSpec& spec);

// Report layout shared by every subcommand: the run spec, one row per
// lattice size (or per separation for the sampler), and a certificate
// block with the pass/fail verdicts that drive the exit code.
std::string render_report_json(const RunSpec& spec,
                               const nlohmann::ordered_json& rows,
                               const nlohmann::ordered_json& certificates);

// Plain CSV: mandatory header, '\n' line ends, '.' decimal point
// regardless of locale.  Missing cells render empty.
std::string render_report_csv(const std::vector<std::string>& columns,
                              const nlohmann::ordered_json& rows);

// Writes to out_path, or stdout when out_path is empty.
void emit_report(const std::string& text, const std::string& out_path);

}  // namespace hsm
