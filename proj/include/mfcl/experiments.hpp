// Monte Carlo orchestration: the shared viscous field, per-sample flows,
// zero-noise sweeps and the figure data bundles.
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfcl/core.hpp"
#include "mfcl/diagnostics.hpp"
#include "mfcl/filippov.hpp"
#include "mfcl/sde.hpp"
#include "mfcl/transport.hpp"

namespace mfcl {

/// Inviscid reference shared by every epsilon of a configuration.
struct Reference {
  SpaceTimeField entropy;
  /// Filippov paths (k = 0) from each probe, one step per flow step.
  std::vector<FilippovPath> probe_paths;
};

std::shared_ptr<const Reference> make_reference(const ExperimentConfig& config);

struct SampleOptions {
  bool y_flow = true;
  bool probes = true;
  /// Keep the particle ensembles (trajectory dumps).
  bool keep_ensembles = false;
  /// Resample every recorded density onto the grid (the final one always is).
  bool resample_all = false;
  /// Pushforward only at the final time (u_eps then holds one sample).
  bool final_density_only = false;
};

struct SampleResult {
  std::size_t sample_index = 0;
  DensitySeries u_eps;
  /// v^eps on the grid at each recorded time (empty without the Y flow).
  std::vector<std::vector<double>> v_eps;
  /// sup_t |X^eps(x0) - X(x0)| per probe.
  std::vector<double> probe_sup_error;
  std::optional<ParticleEnsemble> x_flow;
  std::optional<ParticleEnsemble> y_flow;
};

/// Everything shared by the samples of one (config, epsilon): m^eps is solved
/// once here and read concurrently afterwards.
class MeanFieldModel {
 public:
  MeanFieldModel(ExperimentConfig config, double epsilon, std::shared_ptr<const Reference> reference = nullptr);

  const ExperimentConfig& config() const { return config_; }
  double epsilon() const { return epsilon_; }
  const Grid1D& grid() const { return grid_; }
  const FluxModel& flux() const { return flux_; }
  const InitialData& initial() const { return initial_; }
  const SpaceTimeField& m_eps() const { return m_eps_; }
  const Reference& reference() const { return *reference_; }
  double flow_dt() const { return config_.T / static_cast<double>(config_.n_time_steps); }
  /// Times at which flows are recorded.
  const std::vector<double>& record_times() const { return record_times_; }

  SampleResult run_sample(std::size_t sample_index, const SampleOptions& options = {}) const;

 private:
  ExperimentConfig config_;
  double epsilon_;
  Grid1D grid_;
  FluxModel flux_;
  InitialData initial_;
  std::shared_ptr<const Reference> reference_;
  SpaceTimeField m_eps_;
  std::vector<double> record_times_;
};

/// int_{-L}^{L} theta u at the record times: exact Riemann functional when
/// available, otherwise the entropy reference field.
std::vector<double> reference_functional(const MeanFieldModel& model, const TestFunction& theta);

/// Per-sample reductions, small enough to keep for every sample.
struct SampleSummary {
  std::vector<double> sup_weak_dev;  // per test function
  std::vector<double> final_density;  // grid-resampled u^eps(T)
  std::vector<double> probe_sup_error;
  double mass_defect = 0.0;  // max over recorded times
};

SampleSummary summarize_sample(const MeanFieldModel& model, std::size_t sample_index,
                               const std::vector<TestFunction>& thetas,
                               const std::vector<std::vector<double>>& references);

/// Summaries of samples [first, first + count), computed in parallel and
/// returned in sample order. Without test functions only u^eps(T) is built.
std::vector<SampleSummary> run_ensemble(const MeanFieldModel& model, std::size_t first, std::size_t count,
                                        const std::vector<TestFunction>& thetas);

/// Full Monte Carlo ensemble per epsilon: weak-* errors for p in {1, 2} (and
/// config.p_moment), mean consistency, path errors, Oleinik margin, mass audit.
ConvergenceReport run_zero_noise_sweep(const ExperimentConfig& config, const std::vector<double>& epsilons);

struct ManifestEntry {
  std::string role;
  std::filesystem::path path;
};

struct RunManifest {
  ExperimentConfig config;
  std::string name;
  std::vector<ManifestEntry> outputs;
  std::vector<std::pair<std::string, std::string>> extra;
  double wall_time = 0.0;

  void add(std::string role, std::filesystem::path path) { outputs.push_back({std::move(role), std::move(path)}); }
  /// Flat `key = value` text.
  std::string to_text() const;
  void write(const std::filesystem::path& file) const;
};

/// Emits the CSV bundle of figure n (1..5) into out_dir together with
/// `fig<n>_manifest.txt`. Unknown n throws std::invalid_argument.
RunManifest run_figure(int n, const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Roles every bundle of figure n must contain.
std::vector<std::string> required_roles(int n);

/// Per-epsilon path errors of a sweep: `epsilon,x0,path_error`.
void write_path_error_csv(std::ostream& out, const ConvergenceReport& report);

struct VerificationCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

/// Runs the deterministic diagnostics on both Riemann cases: maximum principle
/// and Oleinik margins (eps = 0 and every given eps), drift-distance bounds
/// against the entropy drift, Hölder constants under grid refinement and the
/// heat-kernel difference bounds.
std::vector<VerificationCheck> run_verification(const ExperimentConfig& config, const std::vector<double>& epsilons);

/// `check,value,threshold,passed`
void write_verification_csv(std::ostream& out, std::span<const VerificationCheck> checks);

}  // namespace mfcl
