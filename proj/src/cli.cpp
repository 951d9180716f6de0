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

#include "mixcollapse/cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixcollapse/lindblad.hpp"
#include "mixcollapse/operators.hpp"

namespace mixcollapse::cli {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "command",     "model",          "collapse_model", "meson",
    "mesons",      "units",          "m_L",            "m_H",
    "delta_m",     "gamma_L",        "gamma_H",        "rate",
    "r_C",         "beta",           "m0",             "ratio_convention",
    "d",           "alpha",          "widths_from_collapse",
    "t_max",       "n_points",       "n_trajectories", "seed",
    "dt",          "scheme",         "equation",       "m0_min",
    "m0_max",      "n_m0",           "master_beta",    "ensemble_beta",
    "output",      "format",         "catalog",        "description",
    "$comment"};

const std::set<std::string, std::less<>> kCollapseKeys = {
    "rate", "r_C", "beta", "m0", "ratio_convention", "d", "alpha"};

[[noreturn]] void config_fail(ErrorKind kind, const std::string& what) {
  throw ConfigError(kind, what);
}

// Typed accessors; every type error names its key.
class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  bool has(const char* key) const { return doc_.contains(key); }

  std::optional<double> number(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = doc_.at(key);
    if (!v.is_number()) type_error(key, "a number");
    return v.get<double>();
  }

  std::optional<std::uint64_t> unsigned_int(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = doc_.at(key);
    if (!v.is_number_unsigned()) type_error(key, "a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::optional<std::string> string(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = doc_.at(key);
    if (!v.is_string()) type_error(key, "a string");
    return v.get<std::string>();
  }

  std::optional<bool> boolean(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) type_error(key, "true or false");
    return v.get<bool>();
  }

  std::vector<std::string> string_list(const char* key) const {
    const json& v = doc_.at(key);
    if (!v.is_array()) type_error(key, "an array of strings");
    std::vector<std::string> out;
    for (const json& item : v) {
      if (!item.is_string()) type_error(key, "an array of strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

 private:
  [[noreturn]] static void type_error(const char* key, const char* want) {
    config_fail(ErrorKind::ParseError,
                std::string("key \"") + key + "\": expected " + want);
  }

  const json& doc_;
};

template <typename Enum, std::size_t N>
Enum pick(const std::string& key, const std::string& value,
          const std::array<std::pair<const char*, Enum>, N>& table) {
  for (const auto& [name, e] : table)
    if (value == name) return e;
  std::string allowed;
  for (const auto& entry : table) allowed += std::string(" ") + entry.first;
  config_fail(ErrorKind::ParseError,
              "key \"" + key + "\": unknown value \"" + value +
                  "\" (allowed:" + allowed + ")");
}

constexpr std::array<std::pair<const char*, Command>, 6> kCommands{{
    {"analytic", Command::Analytic},
    {"master", Command::Master},
    {"ensemble", Command::Ensemble},
    {"compare", Command::Compare},
    {"estimate", Command::Estimate},
    {"bounds", Command::Bounds},
}};

constexpr std::array<std::pair<const char*, AsymmetryModel>, 3> kModels{{
    {"QM", AsymmetryModel::QM},
    {"QMUPL", AsymmetryModel::QMUPL},
    {"CSL", AsymmetryModel::CSL},
}};

constexpr std::array<std::pair<const char*, CollapseModel>, 2> kCollapseModels{{
    {"QMUPL", CollapseModel::QMUPL},
    {"CSL", CollapseModel::CSL},
}};

constexpr std::array<std::pair<const char*, MassRatioConvention>, 2>
    kConventions{{
        {"normal", MassRatioConvention::Normal},
        {"inverted", MassRatioConvention::Inverted},
    }};

constexpr std::array<std::pair<const char*, Scheme>, 3> kSchemes{{
    {"exponential", Scheme::Exponential},
    {"euler", Scheme::Euler},
    {"heun", Scheme::Heun},
}};

constexpr std::array<std::pair<const char*, Equation>, 7> kEquations{{
    {"family", Equation::ImaginaryLinearFamily},
    {"stratonovich", Equation::StratonovichLinear},
    {"imaginary", Equation::ImaginaryLinear},
    {"flavor_decay", Equation::FlavorDecay},
    {"nonlinear", Equation::NonlinearReal},
    {"general", Equation::NonlinearGeneral},
    {"enlarged", Equation::EnlargedNonlinear},
}};

constexpr std::array<std::pair<const char*, OutputFormat>, 2> kFormats{{
    {"csv", OutputFormat::Csv},
    {"json", OutputFormat::Json},
}};

template <typename Enum, std::size_t N>
std::string name_of(Enum e, const std::array<std::pair<const char*, Enum>, N>&
                                table) {
  for (const auto& [name, v] : table)
    if (v == e) return name;
  return "?";
}

std::string read_file(const std::string& path, ErrorKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_fail(kind, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(
                std::count(text.begin(), text.begin() + static_cast<long>(byte),
                           '\n'));
    config_fail(ErrorKind::ParseError,
                what + " line " + std::to_string(line) + ": " + e.what());
  }
}

struct Catalog {
  json doc;
  double hbar = kHbarMeVs;

  NamedMeson lookup(const std::string& key) const {
    const json& table = doc.at("mesons");
    if (!table.contains(key))
      config_fail(ErrorKind::CatalogMiss, "meson \"" + key + "\" not in catalog");
    const json& m = table.at(key);
    const double mass = m.at("mass_MeV").get<double>() / hbar;
    const double dm = m.at("delta_m_per_s").get<double>();
    MesonParams p;
    p.m_L = mass - 0.5 * dm;
    p.delta_m = dm;
    p.gamma_L = m.at("gamma_L_per_s").get<double>();
    p.gamma_H = m.at("gamma_H_per_s").get<double>();
    return {key, p};
  }
};

Catalog load_catalog(const std::string& path) {
  Catalog c;
  c.doc = parse_json(read_file(path, ErrorKind::CatalogMiss), "catalog");
  if (!c.doc.is_object() || !c.doc.contains("mesons"))
    config_fail(ErrorKind::ParseError, "catalog has no \"mesons\" table");
  if (c.doc.contains("hbar_MeV_s")) c.hbar = c.doc.at("hbar_MeV_s").get<double>();
  return c;
}

double default_t_max(const MesonParams& meson) {
  const double gbar = meson.mean_gamma();
  if (gbar > 0.0) return 10.0 / gbar;
  return 10.0 * 2.0 * std::numbers::pi / meson.delta_m;
}

void require(bool ok, const std::string& what) {
  if (!ok) config_fail(ErrorKind::InvalidParams, what);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

RunSpec parse_config(const std::string& text, const std::string& catalog_path,
                     const std::string& base_dir) {
  const json doc = parse_json(text, "config");
  if (!doc.is_object())
    config_fail(ErrorKind::ParseError, "config must be a JSON object");
  for (const auto& item : doc.items())
    if (!kKnownKeys.contains(item.key()))
      config_fail(ErrorKind::UnknownKey, "unknown key \"" + item.key() + "\"");
  const Reader r(doc);

  RunSpec spec;
  const auto command = r.string("command");
  if (!command) config_fail(ErrorKind::ParseError, "missing key \"command\"");
  spec.command = pick("command", *command, kCommands);
  spec.model = pick("model", r.string("model").value_or("CSL"), kModels);

  // Units and catalog.
  const bool uses_catalog = r.has("meson") || r.has("mesons");
  const std::string units =
      r.string("units").value_or(uses_catalog ? "si" : "natural");
  if (units != "si" && units != "natural")
    config_fail(ErrorKind::ParseError,
                "key \"units\": expected \"si\" or \"natural\"");
  spec.si_units = units == "si";
  if (uses_catalog && !spec.si_units)
    config_fail(ErrorKind::InvalidParams,
                "catalog mesons are tabulated in SI units; drop \"units\" or "
                "set it to \"si\"");
  std::optional<Catalog> catalog;
  if (uses_catalog) {
    std::string path = catalog_path;
    if (const auto own = r.string("catalog")) {
      std::filesystem::path p(*own);
      path = p.is_absolute() ? p.string()
                             : (std::filesystem::path(base_dir) / p).string();
    }
    catalog = load_catalog(path);
  }
  const double hbar = catalog ? catalog->hbar : kHbarMeVs;
  spec.mass_scale = spec.si_units ? 1.0 / hbar : 1.0;

  // Meson parameters.
  const bool explicit_meson = r.has("m_L") || r.has("m_H") ||
                              r.has("delta_m") || r.has("gamma_L") ||
                              r.has("gamma_H");
  if (explicit_meson && uses_catalog)
    config_fail(ErrorKind::InvalidParams,
                "give either a catalog meson or explicit parameters, not both");
  if (r.has("mesons")) {
    if (spec.command != Command::Bounds)
      config_fail(ErrorKind::InvalidParams,
                  "\"mesons\" is only used by the bounds command");
    for (const std::string& key : r.string_list("mesons"))
      spec.mesons.push_back(catalog->lookup(key));
    if (spec.mesons.empty())
      config_fail(ErrorKind::InvalidParams, "\"mesons\" is empty");
    spec.meson = spec.mesons.front();
  } else if (r.has("meson")) {
    spec.meson = catalog->lookup(*r.string("meson"));
  } else {
    if (r.has("m_H") == r.has("delta_m"))
      config_fail(ErrorKind::InvalidParams,
                  "give exactly one of \"m_H\" and \"delta_m\"");
    MesonParams p;
    const bool needs_m_L = spec.command != Command::Estimate;
    if (!r.has("m_L") && (needs_m_L || r.has("m_H")))
      config_fail(ErrorKind::InvalidParams, "missing key \"m_L\"");
    p.m_L = r.number("m_L").value_or(0.0) * spec.mass_scale;
    if (r.has("m_H"))
      p.delta_m = (*r.number("m_H") - *r.number("m_L")) * spec.mass_scale;
    else
      p.delta_m = *r.number("delta_m");
    p.gamma_L = r.number("gamma_L").value_or(0.0);
    p.gamma_H = r.number("gamma_H").value_or(0.0);
    spec.meson = {"custom", p};
  }
  if (spec.mesons.empty()) spec.mesons.push_back(spec.meson);

  // Collapse parameters.
  spec.widths_from_collapse = r.boolean("widths_from_collapse").value_or(false);
  const bool collapse_model = spec.model != AsymmetryModel::QM;
  if (spec.model == AsymmetryModel::QM && !spec.widths_from_collapse &&
      (spec.command == Command::Analytic || spec.command == Command::Master ||
       spec.command == Command::Ensemble || spec.command == Command::Compare)) {
    for (const auto& key : kCollapseKeys)
      if (r.has(key.c_str()) && key != "m0")
        config_fail(ErrorKind::InvalidParams,
                    "key \"" + key + "\" has no effect for model QM");
  }
  if (r.has("collapse_model") && collapse_model)
    config_fail(ErrorKind::InvalidParams,
                "\"collapse_model\" is only for model QM with "
                "widths_from_collapse; use \"model\"");
  CollapseParams& c = spec.collapse;
  if (spec.model == AsymmetryModel::QMUPL) {
    c.model = CollapseModel::QMUPL;
  } else if (spec.model == AsymmetryModel::CSL) {
    c.model = CollapseModel::CSL;
  } else {
    c.model = pick("collapse_model", r.string("collapse_model").value_or("CSL"),
                   kCollapseModels);
  }
  c.rate = r.number("rate").value_or(0.0);
  c.r_C = r.number("r_C").value_or(1.0);
  c.beta = r.number("beta").value_or(0.5);
  c.m0 = r.number("m0").value_or(1.0) * spec.mass_scale;
  c.convention = pick("ratio_convention",
                      r.string("ratio_convention").value_or("normal"),
                      kConventions);
  c.d = static_cast<int>(r.unsigned_int("d").value_or(3));
  c.alpha = r.number("alpha").value_or(1.0);

  try {
    validate_collapse(c);
    for (NamedMeson& m : spec.mesons) {
      if (spec.widths_from_collapse) m.params = with_induced_widths(m.params, c);
      validate_meson(m.params);
    }
    spec.meson = spec.mesons.front();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    config_fail(e.kind(), e.what());
  }

  // Time grid and ensemble settings.
  const MesonParams& meson = spec.meson.params;
  MesonParams rates = meson;
  if (collapse_model && c.beta >= 0.5) rates = with_induced_widths(meson, c);
  spec.t_max = r.number("t_max").value_or(default_t_max(rates));
  require(spec.t_max > 0.0 && std::isfinite(spec.t_max),
          "t_max must be positive and finite");
  spec.n_points = r.unsigned_int("n_points").value_or(400);
  require(spec.n_points >= 2, "n_points must be >= 2");
  spec.n_trajectories = r.unsigned_int("n_trajectories").value_or(1000);
  require(spec.n_trajectories >= 2, "n_trajectories must be >= 2");
  spec.seed = r.unsigned_int("seed").value_or(0);
  spec.dt = r.number("dt").value_or(spec.t_max / 1e4);
  require(spec.dt > 0.0 && spec.dt <= spec.t_max, "dt must lie in (0, t_max]");
  spec.scheme = pick("scheme", r.string("scheme").value_or("exponential"),
                     kSchemes);
  spec.equation = pick("equation", r.string("equation").value_or("family"),
                       kEquations);
  const bool linear_eq = spec.equation == Equation::ImaginaryLinearFamily ||
                         spec.equation == Equation::StratonovichLinear ||
                         spec.equation == Equation::ImaginaryLinear;
  if (spec.scheme == Scheme::Heun && !linear_eq)
    config_fail(ErrorKind::UnsupportedEquation,
                "scheme \"heun\" needs a linear equation");
  const bool dynamic = spec.command == Command::Master ||
                       spec.command == Command::Ensemble ||
                       spec.command == Command::Compare;
  if (dynamic && spec.model == AsymmetryModel::QMUPL)
    config_fail(ErrorKind::UnsupportedEquation,
                "model QMUPL has no two-level master or trajectory route; use "
                "the analytic command");

  spec.master_beta = r.number("master_beta");
  spec.ensemble_beta = r.number("ensemble_beta");
  for (const auto& b : {spec.master_beta, spec.ensemble_beta})
    require(!b || (*b >= 0.0 && *b <= 1.0), "override beta out of [0,1]");

  // Bounds.
  if (spec.command == Command::Bounds) {
    const auto lo = r.number("m0_min");
    const auto hi = r.number("m0_max");
    if (!lo || !hi)
      config_fail(ErrorKind::InvalidParams,
                  "bounds needs \"m0_min\" and \"m0_max\"");
    spec.m0_min = *lo;
    spec.m0_max = *hi;
    require(spec.m0_min > 0.0 && spec.m0_max > spec.m0_min,
            "need 0 < m0_min < m0_max");
    spec.n_m0 = r.unsigned_int("n_m0").value_or(50);
    require(spec.n_m0 >= 2, "n_m0 must be >= 2");
  }
  if (r.has("ratio_convention"))
    spec.conventions = {c.convention};
  else
    spec.conventions = {MassRatioConvention::Normal,
                        MassRatioConvention::Inverted};

  spec.output = r.string("output").value_or("");
  spec.format = pick("format", r.string("format").value_or("csv"), kFormats);

  // Header echoed into every output.
  spec.header.push_back("mixcollapse " + *command + " model=" +
                        name_of(spec.model, kModels));
  if (spec.si_units) {
    spec.header.push_back(
        "units=si masses converted MeV -> s^-1 by 1/hbar with hbar=" +
        format_double(hbar) + " MeV s; widths, delta_m and rates in s^-1");
  } else {
    spec.header.push_back("units=natural (hbar = c = 1)");
  }
  for (const NamedMeson& m : spec.mesons) {
    spec.header.push_back(
        "meson=" + m.label + " m_L=" + format_double(m.params.m_L) +
        " delta_m=" + format_double(m.params.delta_m) +
        " gamma_L=" + format_double(m.params.gamma_L) +
        " gamma_H=" + format_double(m.params.gamma_H));
  }
  if (collapse_model || spec.widths_from_collapse) {
    spec.header.push_back(
        "collapse=" + name_of(c.model, kCollapseModels) +
        " rate=" + format_double(c.rate) + " r_C=" + format_double(c.r_C) +
        " beta=" + format_double(c.beta) + " m0=" + format_double(c.m0) +
        " convention=" + name_of(c.convention, kConventions) +
        " d=" + std::to_string(c.d) + " alpha=" + format_double(c.alpha) +
        " lambda_eff=" + format_double(c.effective_rate()));
  }
  if (spec.widths_from_collapse)
    spec.header.push_back("widths replaced by collapse-induced widths");
  return spec;
}

RunSpec load_config(const std::string& path, const std::string& catalog_path) {
  const std::string text = read_file(path, ErrorKind::ParseError);
  const std::string base =
      std::filesystem::path(path).parent_path().string();
  return parse_config(text, catalog_path, base.empty() ? "." : base);
}

void write_table(const Table& table, OutputFormat format, std::ostream& out) {
  if (format == OutputFormat::Csv) {
    for (const std::string& h : table.header) out << "# " << h << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i)
      out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        if (const double* d = std::get_if<double>(&row[i]))
          out << format_double(*d);
        else if (const std::string* s = std::get_if<std::string>(&row[i]))
          out << *s;
      }
      out << '\n';
    }
    for (const std::string& f : table.footer) out << "# " << f << '\n';
    return;
  }
  json doc;
  doc["header"] = table.header;
  doc["columns"] = table.columns;
  json rows = json::array();
  for (const auto& row : table.rows) {
    json jr = json::array();
    for (const Cell& cell : row) {
      if (const double* d = std::get_if<double>(&cell))
        jr.push_back(std::isfinite(*d) ? json(*d) : json(nullptr));
      else if (const std::string* s = std::get_if<std::string>(&cell))
        jr.push_back(*s);
      else
        jr.push_back(nullptr);
    }
    rows.push_back(std::move(jr));
  }
  doc["rows"] = std::move(rows);
  doc["footer"] = table.footer;
  out << doc.dump(1) << '\n';
}

namespace {

constexpr std::size_t kProbColumns = 4;
const std::array<std::string, kProbColumns> kProbNames = {
    "P_M0_M0", "P_M0_M0bar", "P_L_L", "P_H_H"};

using ProbRow = std::array<double, kProbColumns>;

Cell asymmetry_cell(const ProbRow& p) {
  const double sum = p[0] + p[1];
  if (!(sum > 0.0) || !std::isfinite(sum)) return std::monostate{};
  return (p[0] - p[1]) / sum;
}

std::vector<double> time_grid(const RunSpec& spec) {
  return linear_grid(spec.t_max, spec.n_points);
}

AsymmetrySpec analytic_spec(const RunSpec& spec) {
  AsymmetrySpec a;
  a.model = spec.model;
  a.meson = spec.meson.params;
  if (spec.model != AsymmetryModel::QM) a.collapse = spec.collapse;
  return a;
}

std::vector<ProbRow> analytic_probs(const RunSpec& spec,
                                    const std::vector<double>& grid) {
  const AsymmetrySpec a = analytic_spec(spec);
  a.validate();
  std::vector<ProbRow> out;
  out.reserve(grid.size());
  for (double t : grid) {
    try {
      out.push_back({prob_flavor(a, FlavorState::Particle, t),
                     prob_flavor(a, FlavorState::Antiparticle, t),
                     prob_lifetime(a, Eigenstate::L, Eigenstate::L, t),
                     prob_lifetime(a, Eigenstate::H, Eigenstate::H, t)});
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " at t=" + format_double(t));
    }
  }
  return out;
}

CollapseParams with_beta(CollapseParams c, std::optional<double> beta) {
  if (beta) c.beta = *beta;
  return c;
}

// Every generator here is diagonal in the mass basis, so the L and H
// populations evolve independently and the M0 start carries half of each:
// P_{i->i}(t) = 2 <M_i|rho_t|M_i>.
ProbRow probs_from_flavor_rho(const CMatrix& rho) {
  const CMatrix mass = flavor_to_mass(rho);
  return {rho(0, 0).real(), rho(1, 1).real(), 2.0 * mass(0, 0).real(),
          2.0 * mass(1, 1).real()};
}

std::vector<ProbRow> master_probs(const RunSpec& spec,
                                  const std::vector<double>& grid) {
  MasterSpec ms;
  if (spec.model == AsymmetryModel::QM) {
    CollapseParams none;
    none.rate = 0.0;
    ms = decay_master_spec(spec.meson.params, none);
  } else {
    ms = family_master_spec(spec.meson.params,
                            with_beta(spec.collapse, spec.master_beta));
  }
  const QuantumState m0(flavor_vector(FlavorState::Particle), Basis::Flavor);
  const auto series = integrate_master(ms, DensityMatrix::pure(m0), grid);
  std::vector<ProbRow> out;
  out.reserve(series.size());
  for (const DensityMatrix& rho : series)
    out.push_back(probs_from_flavor_rho(rho.matrix));
  return out;
}

SdeSpec ensemble_sde(const RunSpec& spec) {
  const MesonParams& meson = spec.meson.params;
  if (spec.model == AsymmetryModel::QM) {
    CollapseParams none;
    none.rate = 0.0;
    return imaginary_sde_spec(meson, none, Basis::Mass);
  }
  const CollapseParams c = with_beta(spec.collapse, spec.ensemble_beta);
  switch (spec.equation) {
    case Equation::ImaginaryLinearFamily:
      return family_sde_spec(meson, c, Basis::Mass);
    case Equation::StratonovichLinear:
      return stratonovich_family_sde_spec(meson, c, Basis::Mass);
    case Equation::ImaginaryLinear:
      return imaginary_sde_spec(meson, c, Basis::Mass);
    case Equation::FlavorDecay:
      return flavor_decay_sde_spec(meson, c, Basis::Mass);
    case Equation::NonlinearReal:
      return collapse_sde_spec(meson, c, Basis::Mass);
    case Equation::NonlinearGeneral:
      return general_sde_spec(meson, c, Basis::Mass);
    case Equation::EnlargedNonlinear:
      return enlarged_sde_spec(meson, c, Basis::Mass);
  }
  return family_sde_spec(meson, c, Basis::Mass);
}

struct EnsembleProbs {
  std::vector<ProbRow> mean;
  std::vector<ProbRow> stderr_;
};

EnsembleProbs ensemble_probs(const RunSpec& spec,
                             const std::vector<double>& grid) {
  const SdeSpec sde = ensemble_sde(spec);
  NoiseConfig noise;
  noise.seed = spec.seed;
  noise.dt = spec.dt;
  noise.theta0 = sde.native_theta();
  noise.n_channels = sde.n_channels();
  CVector psi0 = flavor_mass_basis_change().adjoint() *
                 flavor_vector(FlavorState::Particle);
  Basis basis = Basis::Mass;
  if (sde.dimension() == 4) {
    CVector full = CVector::Zero(4);
    full.head(2) = psi0;
    psi0 = full;
    basis = Basis::Enlarged;
  }
  EnsembleOptions options;
  options.scheme = spec.scheme;
  options.threads = spec.threads;
  const EnsembleStats stats = ensemble_evolve(
      sde, noise, QuantumState(psi0, basis), grid, spec.n_trajectories, options);
  EnsembleProbs out;
  for (std::size_t ti = 0; ti < grid.size(); ++ti) {
    // populations of the M0 start; lifetime columns scaled as in the master
    const auto& m = stats.observable_mean;
    const auto& s = stats.observable_stderr;
    out.mean.push_back({m[0][ti], m[1][ti], 2.0 * m[2][ti], 2.0 * m[3][ti]});
    out.stderr_.push_back({s[0][ti], s[1][ti], 2.0 * s[2][ti], 2.0 * s[3][ti]});
  }
  return out;
}

Table probability_table(const RunSpec& spec, const std::vector<double>& grid,
                        const std::vector<ProbRow>& probs,
                        const std::vector<ProbRow>* stderr_rows) {
  Table t;
  t.header = spec.header;
  t.columns = {"time"};
  for (const auto& n : kProbNames) t.columns.push_back(n);
  t.columns.push_back("asymmetry");
  if (stderr_rows)
    for (const auto& n : kProbNames) t.columns.push_back("stderr_" + n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<Cell> row = {grid[k]};
    for (double p : probs[k]) row.emplace_back(p);
    row.push_back(asymmetry_cell(probs[k]));
    if (stderr_rows)
      for (double s : (*stderr_rows)[k]) row.emplace_back(s);
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string ensemble_header(const RunSpec& spec) {
  return "ensemble equation=" + std::string(to_string(ensemble_sde(spec).equation)) +
         " scheme=" + std::string(to_string(spec.scheme)) +
         " n_trajectories=" + std::to_string(spec.n_trajectories) +
         " seed=" + std::to_string(spec.seed) + " dt=" + format_double(spec.dt);
}

// |residual| beyond a 1e-9 absolute floor, in units of the standard error.
double excess_ratio(double residual, double se) {
  const double excess = std::abs(residual) - 1e-9;
  if (excess <= 0.0) return 0.0;
  return se > 0.0 ? excess / se : std::numeric_limits<double>::infinity();
}

}  // namespace

CommandResult cmd_analytic(const RunSpec& spec) {
  const auto grid = time_grid(spec);
  return {probability_table(spec, grid, analytic_probs(spec, grid), nullptr), 0};
}

CommandResult cmd_master(const RunSpec& spec) {
  const auto grid = time_grid(spec);
  Table t = probability_table(spec, grid, master_probs(spec, grid), nullptr);
  t.header.push_back("master dt_max=default (1e-3 / fastest generator rate)");
  return {t, 0};
}

CommandResult cmd_ensemble(const RunSpec& spec) {
  const auto grid = time_grid(spec);
  const EnsembleProbs e = ensemble_probs(spec, grid);
  Table t = probability_table(spec, grid, e.mean, &e.stderr_);
  t.header.push_back(ensemble_header(spec));
  return {t, 0};
}

CommandResult cmd_compare(const RunSpec& spec) {
  const auto grid = time_grid(spec);
  const auto analytic = analytic_probs(spec, grid);
  const auto master = master_probs(spec, grid);
  const EnsembleProbs ens = ensemble_probs(spec, grid);

  Table t;
  t.header = spec.header;
  t.header.push_back(ensemble_header(spec));
  t.columns = {"time", "analytic_P_M0_M0", "master_residual",
               "ensemble_residual", "ensemble_ratio"};
  double worst_master = 0.0;
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double m_res = 0.0;
    double e_res = 0.0;
    double ratio = 0.0;
    for (std::size_t c = 0; c < kProbColumns; ++c) {
      m_res = std::max(m_res, std::abs(master[k][c] - analytic[k][c]));
      const double r = ens.mean[k][c] - analytic[k][c];
      e_res = std::max(e_res, std::abs(r));
      ratio = std::max(ratio, excess_ratio(r, ens.stderr_[k][c]));
    }
    worst_master = std::max(worst_master, m_res);
    worst_ratio = std::max(worst_ratio, ratio);
    t.rows.push_back({grid[k], analytic[k][0], m_res, e_res, ratio});
  }
  const bool pass = worst_master < 1e-8 && worst_ratio < 4.0;
  t.footer.push_back("summary master_max_residual=" +
                     format_double(worst_master) +
                     " ensemble_max_ratio=" + format_double(worst_ratio) +
                     " result=" + (pass ? "pass" : "fail"));
  return {t, pass ? 0 : 3};
}

CommandResult cmd_estimate(const RunSpec& spec) {
  const MesonParams& meson = spec.meson.params;
  const double to_config = 1.0 / spec.mass_scale;
  Table t;
  t.header = spec.header;
  t.header.push_back(
      "mass columns in config mass units; family columns are "
      "lambda_eff (2 beta - 1) = Gamma_i / m~_i^2 at m0=" +
      format_double(spec.collapse.m0 * to_config));
  t.columns = {"convention", "status", "m_L", "m_H", "positive",
               "lambda_2beta_minus_1_L", "lambda_2beta_minus_1_H"};
  for (MassRatioConvention conv :
       {MassRatioConvention::Normal, MassRatioConvention::Inverted}) {
    const std::string name = name_of(conv, kConventions);
    MassSolution sol;
    try {
      sol = solve_absolute_masses(meson.delta_gamma(), meson.mean_gamma(),
                                  meson.delta_m, conv);
    } catch (const Error& e) {
      const std::string status = e.kind() == ErrorKind::NoRealRoot
                                     ? "no_real_root"
                                     : "degenerate_denominator";
      if (e.kind() != ErrorKind::NoRealRoot &&
          e.kind() != ErrorKind::DegenerateDenominator)
        throw;
      t.rows.push_back({name, status, {}, {}, {}, {}, {}});
      continue;
    }
    for (const MassRoot& root : sol.roots) {
      const bool positive = root.m_L > 0.0;
      std::vector<Cell> row = {name, std::string(sol.linear ? "linear" : "ok"),
                               root.m_L * to_config, root.m_H * to_config,
                               std::string(positive ? "true" : "false")};
      if (positive) {
        CollapseParams c = spec.collapse;
        c.convention = conv;
        MesonParams solved = meson;
        solved.m_L = root.m_L;
        const double l = mass_ratio(solved, c, Eigenstate::L);
        const double h = mass_ratio(solved, c, Eigenstate::H);
        row.emplace_back(meson.gamma_L / (l * l));
        row.emplace_back(meson.gamma_H / (h * h));
      } else {
        row.emplace_back(std::monostate{});
        row.emplace_back(std::monostate{});
      }
      t.rows.push_back(std::move(row));
    }
  }
  return {t, 0};
}

CommandResult cmd_bounds(const RunSpec& spec) {
  Table t;
  t.header = spec.header;
  t.header.push_back(
      "m0 in config mass units; lambda_bound in inverse time units; reference "
      "lines at r_C = 1e-7 m");
  t.columns = {"curve", "convention", "m0", "lambda_bound"};
  const double lo = std::log(spec.m0_min);
  const double span = std::log(spec.m0_max) - lo;
  const std::size_t n = spec.n_m0;
  for (const NamedMeson& m : spec.mesons) {
    for (MassRatioConvention conv : spec.conventions) {
      for (std::size_t k = 0; k < n; ++k) {
        double m0 = std::exp(lo + span * static_cast<double>(k) /
                                      static_cast<double>(n - 1));
        if (k == 0) m0 = spec.m0_min;
        if (k + 1 == n) m0 = spec.m0_max;
        t.rows.push_back(
            {m.label, name_of(conv, kConventions), m0,
             collapse_rate_lower_bound(m.params, m0 * spec.mass_scale, conv)});
      }
    }
  }
  const std::array<std::pair<const char*, double>, 4> refs{{
      {"GRW", 1e-16},
      {"Adler_low", 1e-10},
      {"Adler", 1e-8},
      {"Adler_high", 1e-6},
  }};
  for (const auto& [label, value] : refs)
    for (double m0 : {spec.m0_min, spec.m0_max})
      t.rows.push_back({std::string(label), std::string("reference"), m0, value});
  return {t, 0};
}

CommandResult run_command(const RunSpec& spec) {
  switch (spec.command) {
    case Command::Analytic: return cmd_analytic(spec);
    case Command::Master: return cmd_master(spec);
    case Command::Ensemble: return cmd_ensemble(spec);
    case Command::Compare: return cmd_compare(spec);
    case Command::Estimate: return cmd_estimate(spec);
    case Command::Bounds: return cmd_bounds(spec);
  }
  return {};
}

int run_main(int argc, char** argv, const std::string& default_catalog) {
  CLI::App app{"Flavor oscillations of neutral mesons under collapse dynamics",
               "mixcollapse"};
  std::string config_path;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string format;
  std::string catalog = default_catalog;
  app.add_option("config", config_path, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("-o,--output", output, "write the table here instead of stdout");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--threads", threads, "worker threads for ensembles")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--catalog", catalog, "meson catalog JSON");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunSpec spec;
  try {
    spec = load_config(config_path, catalog);
  } catch (const Error& e) {
    std::cerr << "config error (" << to_string(e.kind()) << "): " << e.what()
              << '\n';
    return 1;
  }
  if (seed) spec.seed = *seed;
  if (threads) spec.threads = *threads;
  if (!format.empty())
    spec.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  if (!output.empty()) spec.output = output;

  CommandResult result;
  try {
    result = run_command(spec);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return 2;
  }
  if (spec.output.empty()) {
    write_table(result.table, spec.format, std::cout);
  } else {
    std::ofstream out(spec.output);
    if (!out) {
      std::cerr << "cannot write " << spec.output << '\n';
      return 2;
    }
    write_table(result.table, spec.format, out);
    for (const std::string& f : result.table.footer) std::cerr << f << '\n';
  }
  return result.exit_code;
}

}  // namespace mixcollapse::cli
