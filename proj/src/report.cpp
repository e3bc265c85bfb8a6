#include "hsm/report.hpp"

#include <fstream>
#include <iostream>
#include <stdexcept>

#include "hsm/version.hpp"

namespace hsm {

nlohmann::ordered_json runspec_json(const RunSpec& spec) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["subcommand"] = spec.subcommand;
  j["dim"] = spec.dim;
  j["length_spec"] = spec.length_spec;
  j["lengths"] = spec.lengths;
  if (spec.spin_components > 0) {
    j["spin_components"] = spec.spin_components;
    j["beta"] = spec.beta;
  } else {
    j["lambda"] = spec.lambda;
  }
  j["x0"] = spec.x0;
  j["seed"] = spec.seed;
  j["sweeps"] = spec.sweeps;
  j["burn_in"] = spec.burn_in;
  j["thin"] = spec.thin;
  j["chains"] = spec.chains;
  j["starts"] = spec.starts;
  j["grid"] = spec.grid;
  j["rel_tol"] = spec.rel_tol;
  j["format"] = spec.format;
  return j;
}

std::string render_report_json(const RunSpec& spec,
                               const nlohmann::ordered_json& rows,
                               const nlohmann::ordered_json& certificates) {
  nlohmann::ordered_json j;
  j["spec"] = runspec_json(spec);
  j["rows"] = rows;
  j["certificates"] = certificates;
  return j.dump(2) + "\n";
}

namespace {

std::string csv_cell(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find(',') != std::string::npos || s.find('"') != std::string::npos ||
        s.find('\n') != std::string::npos) {
      std::string quoted = "\"";
      for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      quoted += '"';
      return quoted;
    }
    return s;
  }
  // dump() formats numbers and booleans locale-independently, with enough
  // digits to round-trip doubles.
  return v.dump();
}

}  // namespace

std::string render_report_csv(const std::vector<std::string>& columns,
                              const nlohmann::ordered_json& rows) {
  if (columns.empty()) throw std::invalid_argument("render_report_csv: no columns");
  std::string out;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      if (row.contains(columns[i])) out += csv_cell(row.at(columns[i]));
    }
    out += '\n';
  }
  return out;
}

void emit_report(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  f << text;
  if (!f) throw std::runtime_error("failed writing output file: " + out_path);
}

}  // namespace hsm
