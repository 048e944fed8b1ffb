#pragma once

// Configuration, report and subcommand orchestration behind the coexist tool.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "continuation.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "nonlinearity.hpp"
#include "spectrum.hpp"

namespace coexist {

inline constexpr const char* version = "0.1.0";

struct Tolerances {
  double eigen_tol = 1e-9;
  double linear_tol = default_linear_tol;
  double newton_tol = 1e-10;
  std::optional<double> zero_tol;
  std::optional<double> gap_tol;
  double trans_tol = 1e-6;
  int newton_max_iters = 25;
};

struct Outputs {
  std::string report_path = "report.json";
  std::string branch_csv_path = "branch.csv";
  std::string table_csv_path = "table.csv";
};

struct TableSpec {
  std::vector<int> k_list{3, 4, 5, 6, 7, 8};
  std::vector<double> eta_list{1.0};
};

struct RunConfig {
  DomainSpec domain = make_interval(0.0, 3.141592653589793, 400);
  NonlinearityModel model = NonlinearityModel::psi_k(4, 1.0);
  std::vector<double> s_values{-0.10, -0.08, -0.06, -0.04, -0.02,
                               0.02,  0.04,  0.06,  0.08,  0.10};
  Tolerances tolerances;
  Outputs outputs;
  TableSpec table;

  DiagnosticsOptions diagnostics_options() const {
    DiagnosticsOptions o;
    o.eigen.tol = tolerances.eigen_tol;
    o.eigen.linear_tol = tolerances.linear_tol;
    o.linear_tol = tolerances.linear_tol;
    o.zero_tol = tolerances.zero_tol;
    o.gap_tol = tolerances.gap_tol;
    o.trans_tol = tolerances.trans_tol;
    return o;
  }

  NewtonOptions newton_options() const {
    return {tolerances.newton_tol, tolerances.newton_max_iters,
            tolerances.linear_tol};
  }
};

inline json config_to_json(const RunConfig& c) {
  json tol{{"eigen_tol", c.tolerances.eigen_tol},
           {"linear_tol", c.tolerances.linear_tol},
           {"newton_tol", c.tolerances.newton_tol},
           {"trans_tol", c.tolerances.trans_tol},
           {"newton_max_iters", c.tolerances.newton_max_iters}};
  detail::put_optional(tol, "zero_tol", c.tolerances.zero_tol);
  detail::put_optional(tol, "gap_tol", c.tolerances.gap_tol);
  return json{{"domain", domain_to_json(c.domain)},
              {"model", model_to_json(c.model)},
              {"s_values", c.s_values},
              {"tolerances", tol},
              {"outputs",
               {{"report_path", c.outputs.report_path},
                {"branch_csv_path", c.outputs.branch_csv_path},
                {"table_csv_path", c.outputs.table_csv_path}}},
              {"table", {{"k_list", c.table.k_list}, {"eta_list", c.table.eta_list}}}};
}

/// Builds a RunConfig from JSON; absent sections keep their defaults.
inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    if (!j.is_object())
      throw ConfigError("config: top level must be a JSON object");
    if (j.contains("domain"))
      c.domain = domain_from_json(j.at("domain"));
    if (j.contains("model"))
      c.model = model_from_json(j.at("model"));
    if (j.contains("s_values"))
      c.s_values = j.at("s_values").get<std::vector<double>>();
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      auto& tol = c.tolerances;
      tol.eigen_tol = t.value("eigen_tol", tol.eigen_tol);
      tol.linear_tol = t.value("linear_tol", tol.linear_tol);
      tol.newton_tol = t.value("newton_tol", tol.newton_tol);
      tol.trans_tol = t.value("trans_tol", tol.trans_tol);
      tol.newton_max_iters = t.value("newton_max_iters", tol.newton_max_iters);
      tol.zero_tol = detail::get_optional<double>(t, "zero_tol");
      tol.gap_tol = detail::get_optional<double>(t, "gap_tol");
    }
    if (j.contains("outputs")) {
      const json& o = j.at("outputs");
      c.outputs.report_path = o.value("report_path", c.outputs.report_path);
      c.outputs.branch_csv_path = o.value("branch_csv_path", c.outputs.branch_csv_path);
      c.outputs.table_csv_path = o.value("table_csv_path", c.outputs.table_csv_path);
    }
    if (j.contains("table")) {
      const json& t = j.at("table");
      c.table.k_list = t.value("k_list", c.table.k_list);
      c.table.eta_list = t.value("eta_list", c.table.eta_list);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  const auto& tol = c.tolerances;
  for (auto [name, v] : {std::pair{"eigen_tol", tol.eigen_tol},
                         std::pair{"linear_tol", tol.linear_tol},
                         std::pair{"newton_tol", tol.newton_tol},
                         std::pair{"trans_tol", tol.trans_tol},
                         std::pair{"zero_tol", tol.zero_tol.value_or(1.0)},
                         std::pair{"gap_tol", tol.gap_tol.value_or(1.0)}})
    if (!(v > 0.0))
      throw ConfigError(std::string("tolerances.") + name + ": must be positive");
  if (tol.newton_max_iters < 1)
    throw ConfigError("tolerances.newton_max_iters: must be at least 1");
  for (double s : c.s_values)
    if (s == 0.0 || !std::isfinite(s))
      throw ConfigError("s_values: entries must be finite and nonzero");
  for (int k : c.table.k_list)
    if (k < 3 || k > 8)
      throw ConfigError("table.k_list: entries must lie in [3, 8]");
  return c;
}

/// Sets the value at a dotted key path, e.g. "model.eta=-1". The value is
/// parsed as JSON when possible and taken as a string otherwise. A top-level
/// section absent from config is first filled with its default.
inline void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--override: expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded())
    value = text;

  if (!config.is_object())
    config = json::object();
  const std::string section = key.substr(0, key.find('.'));
  if (key.find('.') != std::string::npos && !config.contains(section)) {
    const json defaults = config_to_json(RunConfig{});
    if (defaults.contains(section))
      config[section] = defaults.at(section);
  }

  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty())
      throw ConfigError("--override: empty path segment in '" + key + "'");
    if (!node->is_object())
      *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path.string() + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ConfigError("config file '" + path.string() + "' is not valid JSON");
  return j;
}

// ---------------------------------------------------------------------------
// Report

struct DiagnosticsSummary {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double V_L = 0.0;
  double m_critical = 0.0;
  double mu_s = 0.0;
  double mu_ss = 0.0;
  std::optional<double> sigma;
  std::optional<double> sigma_constraint_term;
  double solvability_defect = 0.0;
  Moments moments;
  double zero_tol = 0.0;
  CoexistenceType ctype = CoexistenceType::II;
  CoexistenceSide side = CoexistenceSide::degenerate;

  bool operator==(const DiagnosticsSummary&) const = default;
};

inline DiagnosticsSummary summarize(const BifurcationDiagnostics& d) {
  return {d.lambda0, d.lambda1, d.V_L,         d.m_critical,
          d.mu_s,    d.mu_ss,   d.sigma,       d.sigma_constraint_term,
          d.solvability_defect, d.moments,     d.zero_tol,
          d.ctype,   d.side};
}

struct BranchSummary {
  int points = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::optional<BranchFit> fit;
  std::optional<ConsistencyCheck> consistency;
  std::vector<std::string> truncations;
  std::string csv_path;

  bool operator==(const BranchSummary&) const = default;
};

struct Report {
  std::string command;
  std::string version = coexist::version;
  std::string timestamp;
  json config;
  std::optional<CRReport> cr;
  std::optional<DiagnosticsSummary> diagnostics;
  std::optional<BranchSummary> branch;
  std::vector<PsiKRow> table;
  std::vector<std::string> warnings;
  int exit_code = 0;

  bool operator==(const Report&) const = default;
};

inline void to_json(json& j, const DiagnosticsSummary& d) {
  j = json{{"lambda0", d.lambda0},
           {"lambda1", d.lambda1},
           {"V_L", d.V_L},
           {"m_critical", d.m_critical},
           {"mu_s", d.mu_s},
           {"mu_ss", d.mu_ss},
           {"solvability_defect", d.solvability_defect},
           {"moments", d.moments},
           {"zero_tol", d.zero_tol},
           {"type", to_string(d.ctype)},
           {"coexistence_side", to_string(d.side)}};
  detail::put_optional(j, "sigma", d.sigma);
  detail::put_optional(j, "sigma_constraint_term", d.sigma_constraint_term);
}

inline void from_json(const json& j, DiagnosticsSummary& d) {
  j.at("lambda0").get_to(d.lambda0);
  j.at("lambda1").get_to(d.lambda1);
  j.at("V_L").get_to(d.V_L);
  j.at("m_critical").get_to(d.m_critical);
  j.at("mu_s").get_to(d.mu_s);
  j.at("mu_ss").get_to(d.mu_ss);
  j.at("solvability_defect").get_to(d.solvability_defect);
  j.at("moments").get_to(d.moments);
  j.at("zero_tol").get_to(d.zero_tol);
  d.ctype = coexistence_type_from_string(j.at("type").get<std::string>());
  d.side = coexistence_side_from_string(j.at("coexistence_side").get<std::string>());
  d.sigma = detail::get_optional<double>(j, "sigma");
  d.sigma_constraint_term = detail::get_optional<double>(j, "sigma_constraint_term");
}

inline void to_json(json& j, const BranchSummary& b) {
  j = json{{"points", b.points},
           {"lambda_min", b.lambda_min},
           {"lambda_max", b.lambda_max},
           {"truncations", b.truncations},
           {"csv_path", b.csv_path}};
  detail::put_optional(j, "fit", b.fit);
  detail::put_optional(j, "consistency", b.consistency);
}

inline void from_json(const json& j, BranchSummary& b) {
  j.at("points").get_to(b.points);
  j.at("lambda_min").get_to(b.lambda_min);
  j.at("lambda_max").get_to(b.lambda_max);
  j.at("truncations").get_to(b.truncations);
  j.at("csv_path").get_to(b.csv_path);
  b.fit = detail::get_optional<BranchFit>(j, "fit");
  b.consistency = detail::get_optional<ConsistencyCheck>(j, "consistency");
}

inline void to_json(json& j, const Report& r) {
  j = json{{"command", r.command},     {"version", r.version},
           {"timestamp", r.timestamp}, {"config", r.config},
           {"table", r.table},         {"warnings", r.warnings},
           {"exit_code", r.exit_code}};
  detail::put_optional(j, "crandall_rabinowitz", r.cr);
  detail::put_optional(j, "diagnostics", r.diagnostics);
  detail::put_optional(j, "branch", r.branch);
}

inline void from_json(const json& j, Report& r) {
  j.at("command").get_to(r.command);
  j.at("version").get_to(r.version);
  j.at("timestamp").get_to(r.timestamp);
  r.config = j.at("config");
  j.at("table").get_to(r.table);
  j.at("warnings").get_to(r.warnings);
  j.at("exit_code").get_to(r.exit_code);
  r.cr = detail::get_optional<CRReport>(j, "crandall_rabinowitz");
  r.diagnostics = detail::get_optional<DiagnosticsSummary>(j, "diagnostics");
  r.branch = detail::get_optional<BranchSummary>(j, "branch");
}

inline std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Commands

struct CommandResult {
  Report report;
  ExitCode code = ExitCode::success;
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& out_dir,
                                     const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() || out_dir.empty() ? p : out_dir / p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out)
    throw ConfigError("failed writing '" + path.string() + "'");
}

inline Report start_report(const std::string& command, const RunConfig& config) {
  Report r;
  r.command = command;
  r.timestamp = utc_timestamp();
  r.config = config_to_json(config);
  return r;
}

inline void finish(CommandResult& result, const RunConfig& config,
                   const std::filesystem::path& out_dir) {
  result.report.exit_code = static_cast<int>(result.code);
  write_text(resolve(out_dir, config.outputs.report_path),
             json(result.report).dump(2) + "\n");
}

} // namespace detail

/// Spectrum, bifurcation-point checks and second-order diagnostics.
inline CommandResult cmd_analyze(const RunConfig& config,
                                 const std::filesystem::path& out_dir) {
  CommandResult result{detail::start_report("analyze", config)};
  const Mesh mesh = build_mesh(config.domain);
  const DiagnosticsOptions opts = config.diagnostics_options();
  const SpectralData spectrum = analyze_spectrum(mesh, opts);
  const BifurcationDiagnostics d = diagnose(spectrum, config.model, mesh, opts);
  result.report.cr = spectrum.cr;
  result.report.diagnostics = summarize(d);
  result.report.warnings = d.warnings;
  if (!spectrum.cr.ok())
    result.code = ExitCode::verification_failure;
  detail::finish(result, config, out_dir);
  return result;
}

/// analyze, then trace the nontrivial branch and compare its fit with the
/// diagnostics.
inline CommandResult cmd_trace(const RunConfig& config,
                               const std::filesystem::path& out_dir) {
  CommandResult result{detail::start_report("trace", config)};
  const Mesh mesh = build_mesh(config.domain);
  const DiagnosticsOptions opts = config.diagnostics_options();
  const SpectralData spectrum = analyze_spectrum(mesh, opts);
  const BifurcationDiagnostics d = diagnose(spectrum, config.model, mesh, opts);
  result.report.cr = spectrum.cr;
  result.report.diagnostics = summarize(d);
  result.report.warnings = d.warnings;

  const Branch branch = trace_branch(config.model, mesh, seed_from(spectrum, d),
                                     config.s_values, config.newton_options());
  const auto csv_path = detail::resolve(out_dir, config.outputs.branch_csv_path);
  std::ostringstream csv;
  write_branch_csv(csv, branch, mesh);
  detail::write_text(csv_path, csv.str());

  BranchSummary summary;
  summary.points = static_cast<int>(branch.points.size());
  summary.truncations = branch.truncations;
  summary.csv_path = csv_path.string();
  if (!branch.points.empty()) {
    summary.lambda_min = summary.lambda_max = branch.points.front().lambda;
    for (const auto& p : branch.points) {
      summary.lambda_min = std::min(summary.lambda_min, p.lambda);
      summary.lambda_max = std::max(summary.lambda_max, p.lambda);
    }
  }
  summary.fit = branch.fit;
  if (branch.fit)
    summary.consistency = check_consistency(*branch.fit, d.mu_s, d.mu_ss);
  for (const auto& t : branch.truncations)
    result.report.warnings.push_back("branch truncated: " + t);
  result.report.branch = summary;

  if (!branch.fit)
    result.code = ExitCode::solver_failure;
  else if (!spectrum.cr.ok() || !summary.consistency->ok())
    result.code = ExitCode::verification_failure;
  detail::finish(result, config, out_dir);
  return result;
}

/// psi^k summary over table.k_list x table.eta_list.
inline CommandResult cmd_table(const RunConfig& config,
                               const std::filesystem::path& out_dir) {
  CommandResult result{detail::start_report("table", config)};
  const Mesh mesh = build_mesh(config.domain);
  const DiagnosticsOptions opts = config.diagnostics_options();
  const SpectralData spectrum = analyze_spectrum(mesh, opts);
  result.report.cr = spectrum.cr;
  for (double eta : config.table.eta_list)
    for (const PsiKRow& row :
         psi_k_table(spectrum, mesh, config.table.k_list, eta, opts))
      result.report.table.push_back(row);

  std::ostringstream csv;
  write_table_csv(csv, result.report.table);
  detail::write_text(detail::resolve(out_dir, config.outputs.table_csv_path), csv.str());
  if (!spectrum.cr.ok())
    result.code = ExitCode::verification_failure;
  detail::finish(result, config, out_dir);
  return result;
}

/// Eigensolves and the bifurcation-point conditions only.
inline CommandResult cmd_verify(const RunConfig& config,
                                const std::filesystem::path& out_dir) {
  CommandResult result{detail::start_report("verify", config)};
  const Mesh mesh = build_mesh(config.domain);
  const SpectralData spectrum = analyze_spectrum(mesh, config.diagnostics_options());
  result.report.cr = spectrum.cr;
  if (!spectrum.cr.kernel_dim_ok)
    result.report.warnings.push_back("spectral gap below gap_tol");
  if (!spectrum.cr.transversality_ok)
    result.report.warnings.push_back("transversality below trans_tol");
  if (!spectrum.cr.ok())
    result.code = ExitCode::verification_failure;
  detail::finish(result, config, out_dir);
  return result;
}

} // namespace coexist
