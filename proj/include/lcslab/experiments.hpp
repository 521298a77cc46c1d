#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcslab/geometry.hpp"
#include "lcslab/hamiltonian.hpp"
#include "lcslab/sheaf.hpp"

namespace lcs {

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);
/// 0 pass, 1 fail, 2 inconclusive.
int exit_code(Verdict v);
/// fail wins over inconclusive, which wins over pass.
Verdict combine(Verdict a, Verdict b);

// Experiment configuration. File references inside the config are resolved relative to the
// config file and inlined, so `resolved()` is self-contained.
class ExperimentConfig {
 public:
  ExperimentConfig() = default;
  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = ".");

  const nlohmann::json& resolved() const { return json_; }
  std::string experiment() const { return json_.value("experiment", std::string()); }
  unsigned long long seed() const { return json_.value("seed", 1ULL); }
  void set_seed(unsigned long long seed) { json_["seed"] = seed; }
  bool empty() const { return json_.empty(); }

  bool has(const std::string& key) const { return json_.contains(key); }
  const nlohmann::json& at(const std::string& key) const;
  double knob(const std::string& name, double fallback) const;
  int knob_int(const std::string& name, int fallback) const;

  /// From "model".
  CoverModel cover_model() const;
  /// From "hamiltonian": {"name", "params"}.
  Hamiltonian hamiltonian(const ModelSpace& space) const;

 private:
  nlohmann::json json_ = nlohmann::json::object();
};

/// One line of a pass/fail table. Status is PASS, FAIL, XFAIL (expected deviation seen),
/// XPASS (expected deviation missing; counts as failure), INCONCLUSIVE or ERROR.
struct ResultRow {
  std::string suite;
  std::string name;
  std::optional<double> value;
  std::string criterion;
  std::string status;
  std::string detail;
};
nlohmann::json to_json(const ResultRow& r);
Verdict verdict_of(const std::vector<ResultRow>& rows);
std::string rows_to_csv(const std::vector<ResultRow>& rows);

struct ExperimentResult {
  std::string command;
  Verdict verdict = Verdict::pass;
  std::vector<ResultRow> rows;
  nlohmann::json report;  // full report, including the resolved config and seed
  std::string csv;        // table output, empty when the command has none
};

// Intersections of phi_t(zero section) with the zero section on T*S^1 or T*T^2.
struct ZeroSearchOptions {
  double t = 1.0;
  int steps = 400;
  /// Samples per circle direction.
  int grid = 64;
  double transverse_tol = 1e-6;
  double fd_step = 1e-5;
};

struct IntersectionPoint {
  Vec parameter;  // point of the zero section (or fundamental domain) that is carried over
  Vec location;   // where it lands, circle coordinates reduced to [0, 1)
  double margin = 0.0;
};

struct IntersectionCount {
  std::vector<IntersectionPoint> points;
  bool transverse = true;
  std::string diagnostic;
  int count() const { return static_cast<int>(points.size()); }
  nlohmann::json to_json() const;
};

/// Downstairs: fiber part of phi_t(theta, 0) for the lcs flow, zeros over [0, 1)^n.
IntersectionCount zero_section_intersections(const CoverModel& m, const Hamiltonian& h,
                                             const ZeroSearchOptions& opts = {});
/// Upstairs: Phi^eq_t of the conormal to M~ x {0} over one fundamental domain against
/// Lambda_psi for psi(x, s) = e^{-g(x)} s.
IntersectionCount psi_intersections(const CoverModel& m, const Hamiltonian& h,
                                    const ZeroSearchOptions& opts = {});

struct IntersectionReport {
  IntersectionCount intersections;
  std::vector<double> cj;
  double bound = 0.0;
  Verdict verdict = Verdict::pass;
  std::string note;
  nlohmann::json to_json() const;
};

/// Count versus sum_j c_j of the constant sheaf on the matching torus model.
IntersectionReport chantraine_murphy_check(const CoverModel& m, const Hamiltonian& h,
                                           const ZeroSearchOptions& opts = {}, int k_max = 3,
                                           Field field = Field::F2);

struct NonsqueezeOptions {
  double r1 = 1.0;
  double r2 = 0.9;
  int k = 3;
  double t = 1.0;
  int steps = 200;
  int samples = 400;
  double zeta_range = 1.0;
  double equivariance_tol = 1e-6;
  unsigned long long seed = 1;
};

struct NonsqueezeReport {
  std::string candidate;
  bool equivariant = true;
  double equivariance_deviation = 0.0;
  Vec witness;
  double max_radius = 0.0;  // largest image radius in the (x_1, xi_1) plane
  bool contained = false;
  /// "consistent", "rejected" or "containment_observed".
  std::string outcome;
  double ball_energy = 0.0;  // e(G) >= pi R1^2 for the doubled ball sheaf
  double squeeze_budget = 0.0;
  nlohmann::json to_json() const;
};

/// Model: S^1_z x R^n with beta = dz. Rejects candidates that do not commute with
/// zeta -> zeta + 1, then tests whether the closed ball times T*S^1 lands in D_{R2}.
NonsqueezeReport nonsqueeze_check(const CoverModel& m, const Hamiltonian& h, const std::string& candidate,
                                  const NonsqueezeOptions& opts);

ExperimentResult cmd_verify(const ExperimentConfig& c);
ExperimentResult cmd_betti(const ExperimentConfig& c);
ExperimentResult cmd_energy(const ExperimentConfig& c);
ExperimentResult cmd_intersections(const ExperimentConfig& c);
ExperimentResult cmd_psi_correspondence(const ExperimentConfig& c);
ExperimentResult cmd_nonsqueeze(const ExperimentConfig& c);
/// Runs every entry of "experiments"; errors become ERROR rows.
ExperimentResult cmd_run_all(const ExperimentConfig& c);

std::vector<std::string> command_names();
/// Dispatches on verify, betti, energy, intersections, psi, nonsqueeze, all.
ExperimentResult run_command(const std::string& command, const ExperimentConfig& c);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace lcs
