#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coexist/app.hpp"

namespace {

using coexist::ExitCode;
using coexist::json;

int report_error(const std::string& kind, const std::string& message, ExitCode code) {
  json err{{"error", kind}, {"message", message}, {"exit_code", static_cast<int>(code)}};
  std::cerr << err.dump() << '\n';
  return static_cast<int>(code);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-existence diagnostics for semilinear Dirichlet problems"};
  app.set_version_flag("--version", coexist::version);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;

  using Command = std::function<coexist::CommandResult(const coexist::RunConfig&,
                                                       const std::filesystem::path&)>;
  const std::map<std::string, std::pair<std::string, Command>> commands{
      {"analyze", {"eigenpairs, bifurcation checks, mu_s, mu_ss and type", coexist::cmd_analyze}},
      {"trace", {"analyze plus branch tracing and fit", coexist::cmd_trace}},
      {"table", {"psi^k summary table", coexist::cmd_table}},
      {"verify", {"eigenpairs and bifurcation-point checks only", coexist::cmd_verify}},
  };
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--out-dir", out_dir, "directory for relative output paths");
    sub->add_option("--override", overrides, "key.path=value, repeatable")
        ->take_all();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0)
      return app.exit(e);
    return report_error("usage", e.what(), ExitCode::config_error);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    json raw = config_path.empty() ? json::object()
                                   : coexist::read_json_file(config_path);
    for (const auto& o : overrides)
      coexist::apply_override(raw, o);
    const coexist::RunConfig config = coexist::config_from_json(raw);
    const coexist::CommandResult result = commands.at(name).second(config, out_dir);
    for (const auto& w : result.report.warnings)
      std::cerr << "warning: " << w << '\n';
    std::cout << json(result.report).dump(2) << '\n';
    return static_cast<int>(result.code);
  } catch (const coexist::ConfigError& e) {
    return report_error("config", e.what(), ExitCode::config_error);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("io", e.what(), ExitCode::config_error);
  } catch (const coexist::VerificationError& e) {
    return report_error("verification", e.what(), ExitCode::verification_failure);
  } catch (const coexist::ConvergenceError& e) {
    return report_error("convergence", e.what(), ExitCode::solver_failure);
  } catch (const std::invalid_argument& e) {
    return report_error("config", e.what(), ExitCode::config_error);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), ExitCode::solver_failure);
  }
}
