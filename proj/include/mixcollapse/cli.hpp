// Copyright 2026 The mixcollapse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "mixcollapse/analytic.hpp"
#include "mixcollapse/core.hpp"
#include "mixcollapse/sde.hpp"

namespace mixcollapse::cli {

/// Anything wrong with the configuration itself (exit code 1), as opposed to
/// a domain failure while computing (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Command { Analytic, Master, Ensemble, Compare, Estimate, Bounds };

enum class OutputFormat { Csv, Json };

/// MeV * s. Only used when a config (or the catalog) is in SI units.
inline constexpr double kHbarMeVs = 6.582119569e-22;

struct NamedMeson {
  std::string label;
  MesonParams params;
};

struct RunSpec {
  Command command = Command::Analytic;
  AsymmetryModel model = AsymmetryModel::CSL;
  NamedMeson meson;
  std::vector<NamedMeson> mesons;  // bounds: one curve block per entry
  CollapseParams collapse;
  bool widths_from_collapse = false;

  bool si_units = false;
  double mass_scale = 1.0;  // config mass unit -> internal inverse time

  double t_max = 0.0;
  std::size_t n_points = 400;

  std::size_t n_trajectories = 1000;
  std::uint64_t seed = 0;
  double dt = 0.0;
  Scheme scheme = Scheme::Exponential;
  Equation equation = Equation::ImaginaryLinearFamily;
  std::size_t threads = 1;

  double m0_min = 0.0;  // config units
  double m0_max = 0.0;
  std::size_t n_m0 = 50;
  std::vector<MassRatioConvention> conventions;

  std::optional<double> master_beta;    // negative-control overrides
  std::optional<double> ensemble_beta;

  std::string output;
  OutputFormat format = OutputFormat::Csv;

  std::vector<std::string> header;  // echoed as '#' comment lines
};

/// Parses a flat JSON config. `catalog_path` is used when the config does
/// not name its own; relative catalog paths resolve against `base_dir`.
RunSpec parse_config(const std::string& text, const std::string& catalog_path,
                     const std::string& base_dir = ".");

RunSpec load_config(const std::string& path, const std::string& catalog_path);

using Cell = std::variant<std::monostate, double, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> footer;
};

/// 17 significant digits, so that parsing the text recovers the double.
std::string format_double(double v);

void write_table(const Table& table, OutputFormat format, std::ostream& out);

struct CommandResult {
  Table table;
  int exit_code = 0;
};

CommandResult cmd_analytic(const RunSpec& spec);
CommandResult cmd_master(const RunSpec& spec);
CommandResult cmd_ensemble(const RunSpec& spec);
CommandResult cmd_compare(const RunSpec& spec);
CommandResult cmd_estimate(const RunSpec& spec);
CommandResult cmd_bounds(const RunSpec& spec);

CommandResult run_command(const RunSpec& spec);

/// Full CLI entry point shared by the executable and the tests.
int run_main(int argc, char** argv, const std::string& default_catalog);

}  // namespace mixcollapse::cli
