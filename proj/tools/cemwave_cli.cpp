// Experiment CLI for the multiscale wave solver: run/sweep experiments,
// dump diagnostic fields and run the invariant check suite.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "cemwave/lab.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

cemwave::ExperimentConfig load_config(const std::string& path,
                                      const std::vector<std::string>& overrides) {
  cemwave::ExperimentConfig cfg =
      path.empty() ? cemwave::ExperimentConfig{} : cemwave::parse_config_file(path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw cemwave::ConfigError("override '" + kv + "' is not key=value");
    cemwave::apply_config_entry(cfg, cemwave::detail::trim(kv.substr(0, eq)),
                                cemwave::detail::trim(kv.substr(eq + 1)));
  }
  return cfg;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const cemwave::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cemwave::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"CEM multiscale solver for the first-order wave equation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "configuration file (key = value lines)");
    cmd->add_option("-s,--set", overrides, "override a config key, e.g. --set n_coarse=10,20")
        ->take_all();
    cmd->add_option("-o,--output-dir", output_dir, "override the output directory");
  };

  CLI::App* run = app.add_subcommand("run", "run a single experiment point");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep (lists in the config)");
  add_common(sweep);
  CLI::App* check = app.add_subcommand("check", "run the invariant check suite");
  add_common(check);

  CLI::App* fields = app.add_subcommand("fields", "dump diagnostic fields");
  add_common(fields);
  bool dump_kappa = false, dump_ktilde = false, dump_chi_sum = false, dump_eigen = false;
  std::vector<int> chi_nodes;
  std::vector<std::string> psi_specs;
  fields->add_flag("--kappa", dump_kappa, "dump the permeability field");
  fields->add_flag("--kappa-tilde", dump_ktilde, "dump the spectral weight field");
  fields->add_flag("--chi-sum", dump_chi_sum, "dump the partition-of-unity sum");
  fields->add_option("--chi", chi_nodes, "dump chi for these interior node indices")->take_all();
  fields->add_option("--psi", psi_specs, "dump basis magnitude for element,j pairs, e.g. --psi 3,0")
      ->take_all();
  fields->add_flag("--eigenvalues", dump_eigen, "write the eigenvalue-decay CSV");

  CLI11_PARSE(app, argc, argv);

  return run_guarded([&]() -> int {
    cemwave::ExperimentConfig cfg = load_config(config_path, overrides);
    if (!output_dir.empty()) cfg.output_dir = output_dir;

    if (run->parsed() || sweep->parsed()) {
      cemwave::validate_config(cfg);
      const std::size_t points = cfg.n_coarse.size() * cfg.J.size() * cfg.ell.size();
      if (run->parsed() && points != 1)
        throw cemwave::ConfigError("run expects a single point; use `sweep` for lists");
      const cemwave::ExperimentResult res = cemwave::run_experiment(cfg, &std::cout);
      std::cout << "wrote " << (res.out_dir / "results.csv").string() << "\n";
      return kExitOk;
    }
    if (check->parsed()) {
      const auto checks = cemwave::run_checks(cfg, &std::cout);
      for (const auto& c : checks)
        if (!c.pass) return kExitNumerical;
      return kExitOk;
    }
    // fields
    cemwave::FieldDumpSelection sel;
    sel.kappa = dump_kappa;
    sel.kappa_tilde = dump_ktilde;
    sel.chi_sum = dump_chi_sum;
    sel.chi_nodes = chi_nodes;
    sel.eigen_csv = dump_eigen;
    for (const std::string& s : psi_specs) {
      const auto comma = s.find(',');
      if (comma == std::string::npos)
        throw cemwave::ConfigError("--psi expects element,j (got '" + s + "')");
      sel.psi_cols.emplace_back(std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1)));
    }
    if (!sel.kappa && !sel.kappa_tilde && !sel.chi_sum && sel.chi_nodes.empty() &&
        sel.psi_cols.empty() && !sel.eigen_csv)
      sel.kappa = sel.kappa_tilde = true;
    cemwave::dump_diagnostic_fields(cfg, sel, &std::cout);
    return kExitOk;
  });
}
