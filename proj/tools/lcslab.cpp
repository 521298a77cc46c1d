#include <iostream>

#include "CLI11.hpp"
#include "lcslab/experiments.hpp"

namespace {

int run(const std::string& command, const std::string& config_path, const std::string& out,
        const std::optional<unsigned long long>& seed) {
  auto config = lcs::ExperimentConfig::load(config_path);
  if (seed) config.set_seed(*seed);
  const auto result = lcs::run_command(command, config);
  const std::string report = result.report.dump(2) + "\n";
  if (out.empty()) {
    std::cout << report;
  } else {
    std::filesystem::path json_path = out, csv_path = out;
    if (json_path.extension() == ".csv") {
      json_path.replace_extension(".json");
    } else {
      csv_path.replace_extension(".csv");
    }
    lcs::write_atomic(json_path, report);
    if (!result.csv.empty()) lcs::write_atomic(csv_path, result.csv);
  }
  std::cerr << command << ": " << lcs::to_string(result.verdict) << " (" << result.rows.size() << " rows)\n";
  for (const auto& r : result.rows) {
    if (r.status != "PASS" && r.status != "XFAIL") {
      std::cerr << "  " << r.status << " " << r.suite << "/" << r.name << ": " << r.detail << "\n";
    }
  }
  return lcs::exit_code(result.verdict);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally conformally symplectic lab: lifts, window Betti numbers, energies and experiments"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::optional<unsigned long long> seed;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"verify", "lift identities, flow order and d_beta^2 checks"},
      {"betti", "window Betti numbers and c_j estimates of an equivariant sheaf model"},
      {"energy", "Tamarkin energies, ball sheaves and the squeeze bound"},
      {"intersections", "zero-section intersections against sum of c_j"},
      {"psi", "upstairs Lambda_psi count against the downstairs count"},
      {"nonsqueeze", "non-squeezing falsifier for candidate Hamiltonians"},
      {"all", "run every experiment listed in the config"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "report path (.json; tables go next to it as .csv)");
    sub->add_option("--seed", seed, "override the config seed");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, config_path, out, seed);
  } catch (const std::exception& e) {
    std::cerr << "lcslab " << command << ": " << e.what() << "\n";
    return 1;
  }
}
