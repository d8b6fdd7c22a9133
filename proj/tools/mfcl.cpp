// mfcl: command-line driver for the mean-field conservation-law experiments.
//
//   mfcl pde | flow | push | sweep | figure N | verify  [--config F] [--seed N]
//        [--eps LIST] [--full] [--out DIR] [--threads N] [--sample I]
//
// Exit status: 0 ok, 1 usage or runtime error, 2 verification failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "mfcl/core.hpp"
#include "mfcl/diagnostics.hpp"
#include "mfcl/experiments.hpp"
#include "mfcl/pde.hpp"
#include "mfcl/sde.hpp"
#include "mfcl/transport.hpp"

namespace fs = std::filesystem;
using namespace mfcl;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string eps;
  bool full = false;
  std::string out = "out";
  int threads = 0;
  std::size_t sample = 0;
  int figure = 0;
};

ExperimentConfig build_config(const Options& o) {
  ExperimentConfig c = o.full ? ExperimentConfig{} : ExperimentConfig::desk_scale();
  if (!o.config_path.empty()) c = load_config(o.config_path, c);
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

std::vector<double> eps_list(const Options& o, std::vector<double> fallback) {
  return o.eps.empty() ? fallback : parse_number_list(o.eps);
}

// "1", "1_3" for 1/3, otherwise the shortest decimal with '.' replaced.
std::string eps_tag(double eps) {
  const double k = std::round(1.0 / eps);
  if (eps > 0.0 && k >= 1.0 && std::abs(k * eps - 1.0) < 1e-12)
    return k == 1.0 ? "1" : "1_" + std::to_string(static_cast<long>(k));
  std::ostringstream os;
  os << eps;
  std::string s = os.str();
  for (char& ch : s)
    if (ch == '.') ch = 'p';
  return s;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Noise levels the standard figures use; anything else in a sweep is flagged.
bool is_figure_epsilon(double e) { return std::abs(e - 1.0) < 1e-12 || std::abs(e - 1.0 / 3.0) < 1e-12; }

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

void finish(RunManifest& man, const fs::path& dir, const std::string& file,
            std::chrono::steady_clock::time_point t0) {
  man.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  man.write(dir / file);
  std::cout << "wrote " << (dir / file).string() << " (" << man.outputs.size() << " outputs)\n";
}

int cmd_pde(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig c = build_config(o);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  RunManifest man{c, "pde", {}, {}, 0.0};
  PdeScheme scheme;
  scheme.cfl_safety = c.cfl_safety;
  scheme.store_slices = c.store_slices;
  for (double eps : eps_list(o, {c.epsilon})) {
    const auto m = solve_viscous(c.grid(), c.flux_model(), eps, c.initial_data(), c.T, scheme);
    const std::string file = "pde_" + c.initial + "_eps" + eps_tag(eps) + ".csv";
    auto out = open_out(dir / file);
    write_field_csv(out, m);
    man.add("pde_field", file);
  }
  finish(man, dir, "pde_manifest.txt", t0);
  return 0;
}

int cmd_flow(const Options& o, bool densities) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig c = build_config(o);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  RunManifest man{c, densities ? "push" : "flow", {}, {}, 0.0};
  man.extra.push_back({"sample_index", std::to_string(o.sample)});
  const auto reference = make_reference(c);
  for (double eps : eps_list(o, {c.epsilon})) {
    const MeanFieldModel model(c, eps, reference);
    SampleOptions opt;
    opt.keep_ensembles = !densities;
    opt.probes = false;
    opt.resample_all = densities;
    const SampleResult r = model.run_sample(o.sample, opt);
    const std::string stem = c.initial + "_eps" + eps_tag(eps);
    const Grid1D& g = model.grid();
    if (densities) {
      {
        auto out = open_out(dir / ("u_" + stem + ".csv"));
        write_density_csv(out, r.u_eps, g);
        man.add("density", "u_" + stem + ".csv");
      }
      auto out = open_out(dir / ("v_" + stem + ".csv"));
      out << "t,x,v_eps\n" << std::setprecision(17);
      for (std::size_t j = 0; j < r.v_eps.size(); ++j)
        for (std::size_t i = 0; i < g.size(); ++i)
          out << model.record_times()[j] << ',' << g.node(i) << ',' << r.v_eps[j][i] << '\n';
      man.add("density", "v_" + stem + ".csv");
    } else {
      const std::size_t stride = std::max<std::size_t>(1, c.n_paths / 50);
      auto ox = open_out(dir / ("x_" + stem + ".csv"));
      write_trajectory_csv(ox, *r.x_flow, 1, stride);
      man.add("flow_paths", "x_" + stem + ".csv");
      auto oy = open_out(dir / ("y_" + stem + ".csv"));
      write_trajectory_csv(oy, *r.y_flow, 1, stride);
      man.add("flow_paths", "y_" + stem + ".csv");
    }
  }
  finish(man, dir, (densities ? "push" : "flow") + std::string("_manifest.txt"), t0);
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig c = build_config(o);
  const auto eps = eps_list(o, {1.0, 0.5, 1.0 / 3.0, 0.25});
  const fs::path dir = o.out;
  fs::create_directories(dir);
  const ConvergenceReport rep = run_zero_noise_sweep(c, eps);
  RunManifest man{c, "sweep", {}, {}, 0.0};
  {
    auto out = open_out(dir / "report.csv");
    write_report_csv(out, rep);
    man.add("report", "report.csv");
  }
  {
    auto out = open_out(dir / "paths.csv");
    write_path_error_csv(out, rep);
    man.add("paths", "paths.csv");
  }
  std::vector<double> extension;
  for (double e : eps)
    if (!is_figure_epsilon(e)) extension.push_back(e);
  man.extra.push_back({"epsilons", join(eps)});
  man.extra.push_back({"extension_epsilons", join(extension)});
  man.extra.push_back({"time_sup", rep.time_sup});
  print_report(std::cout, rep);
  finish(man, dir, "sweep_manifest.txt", t0);
  return 0;
}

int cmd_figure(const Options& o) {
  const ExperimentConfig c = build_config(o);
  const RunManifest man = run_figure(o.figure, c, o.out);
  std::cout << "figure " << o.figure << ": " << man.outputs.size() << " outputs in " << o.out << '\n';
  return 0;
}

int cmd_verify(const Options& o) {
  const ExperimentConfig c = build_config(o);
  const auto checks = run_verification(c, eps_list(o, {1.0, 0.5, 1.0 / 3.0}));
  fs::create_directories(o.out);
  auto out = open_out(fs::path(o.out) / "verify.csv");
  write_verification_csv(out, checks);
  bool ok = true;
  for (const auto& k : checks) {
    std::cout << (k.passed ? "PASS " : "FAIL ") << std::left << std::setw(44) << k.name << " value "
              << std::setprecision(6) << k.value << " threshold " << k.threshold << '\n';
    ok = ok && k.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field stochastic conservation law experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Options o;
  app.add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--eps", o.eps, "comma-separated epsilons, fractions allowed (1,1/2,1/4)");
  app.add_flag("--full", o.full, "full-scale parameters instead of desk scale");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--threads", o.threads, "OpenMP threads (results do not depend on it)")->check(CLI::NonNegativeNumber);

  auto* pde = app.add_subcommand("pde", "solve the viscous law and dump m^eps");
  auto* flow = app.add_subcommand("flow", "dump X and Y trajectories of one sample");
  auto* push = app.add_subcommand("push", "dump u^eps and v^eps of one sample");
  for (auto* s : {flow, push}) s->add_option("--sample", o.sample, "sample index");
  auto* sweep = app.add_subcommand("sweep", "zero-noise convergence report");
  auto* figure = app.add_subcommand("figure", "emit the data bundle of a figure");
  figure->add_option("n", o.figure, "figure number")->required()->check(CLI::Range(1, 5));
  auto* verify = app.add_subcommand("verify", "run the deterministic diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (o.threads > 0) omp_set_num_threads(o.threads);

  try {
    if (*pde) return cmd_pde(o);
    if (*flow) return cmd_flow(o, false);
    if (*push) return cmd_flow(o, true);
    if (*sweep) return cmd_sweep(o);
    if (*figure) return cmd_figure(o);
    if (*verify) return cmd_verify(o);
  } catch (const std::exception& e) {
    std::cerr << "mfcl: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
