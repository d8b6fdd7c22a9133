#include "mfcl/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mfcl/filippov.hpp"
#include "mfcl/pde.hpp"

namespace mfcl {

namespace {

bool riemann_reference_available(const FluxModel& flux, const InitialData& u) {
  return u.kind() == InitialData::Kind::riemann && flux.is_strictly_convex;
}

// Runs body(i) for i in [0, n) in parallel; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t n, F body) {
  std::exception_ptr error;
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(mfcl_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::shared_ptr<const Reference> make_reference(const ExperimentConfig& config) {
  config.validate();
  const Grid1D grid = config.grid();
  const FluxModel flux = config.flux_model();
  PdeScheme scheme;
  scheme.cfl_safety = config.cfl_safety;
  scheme.store_slices = config.store_slices;
  auto ref = std::make_shared<Reference>(
      Reference{solve_viscous(grid, flux, 0.0, config.initial_data(), config.T, scheme), {}});
  const double dt = config.T / static_cast<double>(config.n_time_steps);
  for (double x0 : config.probes) ref->probe_paths.push_back(filippov_solve(ref->entropy, flux, 0.0, x0, 0.0, config.T, dt));
  return ref;
}

MeanFieldModel::MeanFieldModel(ExperimentConfig config, double epsilon, std::shared_ptr<const Reference> reference)
    : config_(std::move(config)),
      epsilon_(epsilon),
      grid_(config_.grid()),
      flux_(config_.flux_model()),
      initial_(config_.initial_data()),
      reference_(reference ? std::move(reference) : make_reference(config_)),
      m_eps_(grid_) {
  config_.validate();
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  PdeScheme scheme;
  scheme.cfl_safety = config_.cfl_safety;
  scheme.store_slices = config_.store_slices;
  m_eps_ = solve_viscous(grid_, flux_, epsilon_, initial_, config_.T, scheme);
  const double dt = flow_dt();
  record_times_.push_back(0.0);
  for (std::size_t j = 1; j <= config_.n_time_steps; ++j)
    if (j % config_.record_stride == 0 || j == config_.n_time_steps)
      record_times_.push_back(static_cast<double>(j) * dt);
}

SampleResult MeanFieldModel::run_sample(std::size_t sample_index, const SampleOptions& opt) const {
  const BrownianBundle bundle = make_brownian(config_.seed, sample_index, config_.n_time_steps, flow_dt());
  const auto labels = seed_particles(config_.half_length, config_.n_paths);
  const FluxModel& flux = flux_;
  const std::function<double(double)> a = [&flux](double v) { return drift_a(flux, v); };
  const FlowOptions fo{config_.record_stride};

  SampleResult r;
  r.sample_index = sample_index;
  ParticleEnsemble x = evolve_flow(m_eps_, a, labels, epsilon_, bundle, fo);
  r.u_eps.reserve(x.n_times());
  for (std::size_t j = opt.final_density_only ? x.n_times() - 1 : 0; j < x.n_times(); ++j) {
    const bool last = j + 1 == x.n_times();
    r.u_eps.push_back(pushforward_density(initial_, x, j, (opt.resample_all || last) ? &grid_ : nullptr));
  }
  if (opt.y_flow) {
    ParticleEnsemble y = evolve_flow(m_eps_, {}, labels, epsilon_, bundle, fo);
    for (std::size_t j = 0; j < y.n_times(); ++j) r.v_eps.push_back(compose_solution(initial_, y, j, grid_));
    if (opt.keep_ensembles) r.y_flow.emplace(std::move(y));
  }
  if (opt.probes && !config_.probes.empty()) {
    std::vector<std::size_t> order(config_.probes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t k) { return config_.probes[i] < config_.probes[k]; });
    std::vector<double> start(order.size());
    for (std::size_t q = 0; q < order.size(); ++q) start[q] = config_.probes[order[q]];
    const ParticleEnsemble p = evolve_flow(m_eps_, a, start, epsilon_, bundle, fo);
    r.probe_sup_error.assign(order.size(), 0.0);
    for (std::size_t j = 0; j < p.n_times(); ++j) {
      const auto step = static_cast<std::size_t>(std::llround(p.times()[j] / flow_dt()));
      const auto pos = p.positions(j);
      for (std::size_t q = 0; q < order.size(); ++q) {
        const auto& ref = reference_->probe_paths[order[q]].positions;
        const double d = std::abs(pos[q] - ref[std::min(step, ref.size() - 1)]);
        r.probe_sup_error[order[q]] = std::max(r.probe_sup_error[order[q]], d);
      }
    }
  }
  if (opt.keep_ensembles) r.x_flow.emplace(std::move(x));
  return r;
}

std::vector<double> reference_functional(const MeanFieldModel& model, const TestFunction& theta) {
  if (riemann_reference_available(model.flux(), model.initial()))
    return riemann_functional(model.flux(), model.initial(), model.record_times(), theta, model.grid().half_length());
  return field_functional(resample_times(model.reference().entropy, model.record_times()), theta);
}

SampleSummary summarize_sample(const MeanFieldModel& model, std::size_t sample_index,
                               const std::vector<TestFunction>& thetas,
                               const std::vector<std::vector<double>>& references) {
  SampleOptions opt;
  opt.y_flow = false;
  opt.final_density_only = thetas.empty();
  const SampleResult r = model.run_sample(sample_index, opt);
  SampleSummary s;
  for (std::size_t k = 0; k < thetas.size(); ++k)
    s.sup_weak_dev.push_back(sup_weak_deviation(r.u_eps, model.record_times(), references[k], thetas[k]));
  s.final_density = r.u_eps.back().grid_resampled;
  s.probe_sup_error = r.probe_sup_error;
  for (const auto& d : r.u_eps) s.mass_defect = std::max(s.mass_defect, mass_defect(model.initial(), d));
  return s;
}

std::vector<SampleSummary> run_ensemble(const MeanFieldModel& model, std::size_t first, std::size_t count,
                                        const std::vector<TestFunction>& thetas) {
  std::vector<std::vector<double>> refs;
  for (const auto& th : thetas) refs.push_back(reference_functional(model, th));
  std::vector<SampleSummary> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = summarize_sample(model, first + i, thetas, refs); });
  return out;
}

ConvergenceReport run_zero_noise_sweep(const ExperimentConfig& config, const std::vector<double>& epsilons) {
  config.validate();
  if (epsilons.empty()) throw std::invalid_argument("sweep needs at least one epsilon");
  for (double e : epsilons)
    if (!(e > 0.0)) throw std::invalid_argument("sweep epsilons must be positive");
  const auto reference = make_reference(config);
  std::vector<TestFunction> thetas;
  for (const auto& name : config.test_functions) thetas.push_back(test_function(name));
  std::vector<double> moments{1.0, 2.0};
  if (std::find(moments.begin(), moments.end(), config.p_moment) == moments.end()) moments.push_back(config.p_moment);

  ConvergenceReport rep;
  rep.config_hash = config.hash();
  rep.seed = config.seed;
  rep.time_sup = "flow records every " + std::to_string(config.record_stride) + " steps";
  rep.probes = config.probes;

  for (double eps : epsilons) {
    const MeanFieldModel model(config, eps, reference);
    const auto summaries = run_ensemble(model, 0, config.n_mc, thetas);

    std::vector<std::vector<double>> finals;
    finals.reserve(summaries.size());
    double defect = 0.0;
    std::vector<double> path(config.probes.size(), 0.0);
    for (const auto& s : summaries) {
      finals.push_back(s.final_density);
      defect = std::max(defect, s.mass_defect);
      for (std::size_t q = 0; q < path.size(); ++q) path[q] += s.probe_sup_error[q];
    }
    for (double& v : path) v /= static_cast<double>(summaries.size());
    rep.path_errors.push_back(path);
    const double path_mean =
        path.empty() ? 0.0 : std::accumulate(path.begin(), path.end(), 0.0) / static_cast<double>(path.size());

    const double consistency = mean_consistency(finals, model.m_eps());
    const Grid1D& g = model.grid();
    std::vector<double> u_T;
    if (riemann_reference_available(model.flux(), model.initial())) {
      const auto ex = exact_riemann_field(g, model.flux(), model.initial(), {config.T});
      const auto s = ex.slice(0);
      u_T.assign(s.begin(), s.end());
    } else {
      const auto s = reference->entropy.slice(reference->entropy.n_times() - 1);
      u_T.assign(s.begin(), s.end());
    }
    const auto m_T = model.m_eps().slice(model.m_eps().n_times() - 1);
    std::vector<double> diff(g.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(m_T[i] - u_T[i]);
    const double l1 = trapezoid(g, diff);
    const double oleinik = model.flux().is_strictly_convex
                               ? min_margin(oleinik_check(model.m_eps(), model.flux(), 0.1))
                               : std::numeric_limits<double>::quiet_NaN();

    for (std::size_t k = 0; k < thetas.size(); ++k) {
      std::vector<double> dev(summaries.size());
      for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = summaries[i].sup_weak_dev[k];
      for (double p : moments) {
        ReportRow row;
        row.epsilon = eps;
        row.theta = thetas[k].name;
        row.p = p;
        row.weak_star_error = mc_moment(dev, p);
        row.l1_mean_field = l1;
        row.mean_consistency = consistency;
        row.path_error = path_mean;
        row.oleinik_margin = oleinik;
        row.mass_defect = defect;
        row.n_mc = summaries.size();
        rep.rows.push_back(row);
      }
    }
  }
  return rep;
}

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "name = " << name << '\n';
  os << "config_hash = " << std::hex << config.hash() << std::dec << '\n';
  os << "seed = " << config.seed << '\n';
  os << "wall_time_s = " << wall_time << '\n';
  std::istringstream cfg(config.to_text());
  for (std::string line; std::getline(cfg, line);) os << "config." << line << '\n';
  for (const auto& [k, v] : extra) os << k << " = " << v << '\n';
  os << "outputs = " << outputs.size() << '\n';
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    os << "output." << i << ".role = " << outputs[i].role << '\n';
    os << "output." << i << ".path = " << outputs[i].path.generic_string() << '\n';
  }
  return os.str();
}

void RunManifest::write(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << to_text();
}

std::vector<std::string> required_roles(int n) {
  switch (n) {
    case 1:
    case 2:
    case 4:
    case 5:
      return {"pde_field", "reference", "flow_paths", "density", "figure_data"};
    case 3:
      return {"pde_field", "density", "figure_data"};
    default:
      throw std::invalid_argument("unknown figure " + std::to_string(n) + " (expected 1..5)");
  }
}

namespace {

std::string eps_tag(double eps) {
  const double k = std::round(1.0 / eps);
  if (k >= 1.0 && std::abs(k * eps - 1.0) < 1e-12) return k == 1.0 ? "1" : "1_" + std::to_string(static_cast<long>(k));
  std::ostringstream os;
  os << eps;
  return os.str();
}

template <class W>
void emit(RunManifest& m, const std::filesystem::path& dir, const std::string& file, const std::string& role, W writer) {
  std::ofstream out(dir / file);
  if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
  writer(out);
  m.add(role, file);
}

void write_drift_csv(std::ostream& out, const SpaceTimeField& m, const std::function<double(double)>& drift) {
  out << "t,x,drift\n" << std::setprecision(17);
  const Grid1D& g = m.grid();
  for (std::size_t j = 0; j < m.n_times(); ++j)
    for (std::size_t i = 0; i < g.size(); ++i) out << m.times()[j] << ',' << g.node(i) << ',' << std::abs(drift(m.at(j, i))) << '\n';
}

}  // namespace

RunManifest run_figure(int n, const ExperimentConfig& base, const std::filesystem::path& out_dir) {
  required_roles(n);  // validates n
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ExperimentConfig config = base;
  RunManifest man;
  man.name = "figure" + std::to_string(n);
  man.extra.push_back({"figure", std::to_string(n)});
  const std::string prefix = "fig" + std::to_string(n);

  if (n == 3) {
    config.epsilon = 1.0;
    man.extra.push_back({"epsilon", "1"});
    for (const std::string init : {"compressive", "expansive"}) {
      config.initial = init;
      const MeanFieldModel model(config, 1.0);
      const auto summaries = run_ensemble(model, 0, config.n_mc, {});
      std::vector<std::vector<double>> finals;
      for (const auto& s : summaries) finals.push_back(s.final_density);
      const auto stats = ensemble_stats(finals);
      const auto m_T = model.m_eps().slice(model.m_eps().n_times() - 1);
      const Grid1D& g = model.grid();
      emit(man, out_dir, prefix + "_" + init + "_mc_stats.csv", "figure_data", [&](std::ostream& out) {
        out << "x,m_eps,mean,std\n" << std::setprecision(17);
        for (std::size_t i = 0; i < g.size(); ++i)
          out << g.node(i) << ',' << m_T[i] << ',' << stats.mean[i] << ',' << stats.stddev[i] << '\n';
      });
      emit(man, out_dir, prefix + "_" + init + "_samples.csv", "density", [&](std::ostream& out) {
        out << "sample,x,u_eps\n" << std::setprecision(17);
        for (std::size_t s = 0; s < std::min<std::size_t>(5, finals.size()); ++s)
          for (std::size_t i = 0; i < g.size(); ++i) out << s << ',' << g.node(i) << ',' << finals[s][i] << '\n';
      });
      emit(man, out_dir, prefix + "_" + init + "_pde_field.csv", "pde_field", [&](std::ostream& out) {
        SpaceTimeField last(g);
        last.append(model.m_eps().final_time(), m_T);
        write_field_csv(out, last);
      });
    }
    man.extra.push_back({"n_mc", std::to_string(config.n_mc)});
  } else {
    const bool la_salt = n == 2 || n == 5;
    config.initial = n <= 2 ? "compressive" : "expansive";
    const auto reference = make_reference(config);
    man.extra.push_back({"epsilons", "1,1/3"});
    man.extra.push_back({"sample_index", "0"});
    const std::string init = config.initial;
    emit(man, out_dir, prefix + "_" + init + "_entropy.csv", "reference",
         [&](std::ostream& out) { write_field_csv(out, reference->entropy); });
    for (double eps : {1.0, 1.0 / 3.0}) {
      config.epsilon = eps;
      const MeanFieldModel model(config, eps, reference);
      SampleOptions opt;
      opt.y_flow = la_salt;
      opt.probes = false;
      opt.keep_ensembles = true;
      opt.resample_all = !la_salt;
      const SampleResult r = model.run_sample(0, opt);
      const std::string stem = prefix + "_" + init + "_eps" + eps_tag(eps);
      const Grid1D& g = model.grid();
      const std::size_t pstride = std::max<std::size_t>(1, config.n_paths / 50);
      emit(man, out_dir, stem + "_pde_field.csv", "pde_field",
           [&](std::ostream& out) { write_field_csv(out, model.m_eps()); });
      emit(man, out_dir, stem + "_paths.csv", "flow_paths", [&](std::ostream& out) {
        write_trajectory_csv(out, la_salt ? *r.y_flow : *r.x_flow, 1, pstride);
      });
      if (la_salt) {
        emit(man, out_dir, stem + "_density.csv", "density", [&](std::ostream& out) {
          out << "t,x,v_eps\n" << std::setprecision(17);
          for (std::size_t j = 0; j < r.v_eps.size(); ++j)
            for (std::size_t i = 0; i < g.size(); ++i)
              out << model.record_times()[j] << ',' << g.node(i) << ',' << r.v_eps[j][i] << '\n';
        });
      } else {
        emit(man, out_dir, stem + "_density.csv", "density",
             [&](std::ostream& out) { write_density_csv(out, r.u_eps, g); });
      }
      const FluxModel& flux = model.flux();
      const std::function<double(double)> drift =
          la_salt ? std::function<double(double)>([](double v) { return v; })
                  : std::function<double(double)>([&flux](double v) { return drift_a(flux, v); });
      emit(man, out_dir, stem + "_drift.csv", "figure_data",
           [&](std::ostream& out) { write_drift_csv(out, model.m_eps(), drift); });
    }
  }
  man.config = config;
  man.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  man.write(out_dir / (prefix + "_manifest.txt"));
  return man;
}

void write_path_error_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "epsilon,x0,path_error\n" << std::setprecision(17);
  const std::size_t n_eps = report.path_errors.size();
  if (n_eps == 0) return;
  if (report.rows.size() % n_eps != 0) throw std::invalid_argument("write_path_error_csv: rows do not match epsilons");
  const std::size_t per_eps = report.rows.size() / n_eps;
  for (std::size_t e = 0; e < n_eps; ++e)
    for (std::size_t q = 0; q < report.probes.size(); ++q)
      out << report.rows[e * per_eps].epsilon << ',' << report.probes[q] << ',' << report.path_errors[e][q] << '\n';
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void add_check(std::vector<VerificationCheck>& out, std::string name, double value, double threshold, bool passed) {
  out.push_back({std::move(name), value, threshold, passed});
}

double relative_drift(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); }

}  // namespace

std::vector<VerificationCheck> run_verification(const ExperimentConfig& config, const std::vector<double>& epsilons) {
  config.validate();
  for (double e : epsilons)
    if (!(e > 0.0)) throw std::invalid_argument("verify epsilons must be positive");
  std::vector<VerificationCheck> out;
  const FluxModel flux = config.flux_model();
  const Grid1D grid = config.grid();
  const Grid1D fine(config.half_length, 2 * config.n_x - 1);
  PdeScheme scheme;
  scheme.cfl_safety = config.cfl_safety;
  scheme.store_slices = config.store_slices;
  const double t_min = 0.1;

  for (const std::string init : {"compressive", "expansive"}) {
    const InitialData u_in = parse_initial(init);
    const double lo = u_in.min_value(), hi = u_in.max_value();
    std::optional<SpaceTimeField> ref;
    if (flux.is_strictly_convex) ref = solve_entropy_reference(grid, flux, u_in, config.T, scheme);
    std::vector<double> all_eps{0.0};
    all_eps.insert(all_eps.end(), epsilons.begin(), epsilons.end());
    for (double eps : all_eps) {
      const std::string tag = init + " eps=" + fmt(eps);
      const SpaceTimeField m = eps == 0.0 && ref ? *ref : solve_viscous(grid, flux, eps, u_in, config.T, scheme);
      const double mp = max_principle_check(m, u_in);
      add_check(out, "max_principle " + tag, mp, -1e-10, mp >= -1e-10);
      if (flux.is_strictly_convex) {
        const double ol = min_margin(oleinik_check(m, flux, t_min));
        add_check(out, "oleinik " + tag, ol, -5.0 * grid.dx(), ol >= -5.0 * grid.dx());
      }
      if (eps == 0.0) continue;

      if (ref) {
        // Lip+ of a(u) <= (max f'' / 2) Lip+ u <= max f'' / (2 t min f'').
        const double c = flux.f_second_min_on(lo, hi);
        double c_max = 0.0;
        for (int q = 0; q <= 100; ++q) c_max = std::max(c_max, flux.f_double_prime(lo + (hi - lo) * q / 100.0));
        const auto osl_bound = [c, c_max](double t) { return 0.5 * c_max / (t * c); };
        const auto a = [&flux](double v) { return drift_a(flux, v); };
        const auto rep = lemma51_check(map_field(m, a), map_field(resample_times(*ref, m.times()), a), osl_bound,
                                       0.25, t_min, grid.dx());
        add_check(out, "lemma51 " + tag, rep.precondition_ok ? rep.max_ratio : std::numeric_limits<double>::infinity(),
                  1.0, rep.passed());
      }

      const double beta = 0.9;
      const auto coarse = holder_bound_check(m, u_in, flux, beta);
      const auto refined = holder_bound_check(solve_viscous(fine, flux, eps, u_in, config.T, scheme), u_in, flux, beta);
      const double drift = relative_drift(coarse.constant, refined.constant);
      add_check(out, "holder_refinement " + tag, drift, 0.2, std::isfinite(coarse.constant) && drift < 0.2);
    }
  }

  for (double eps : {1.0, 0.5}) {
    for (double t : {0.1, 1.0}) {
      const std::string tag = "eps=" + fmt(eps) + " t=" + fmt(t);
      const auto a = heat_kernel_check(eps, t, 0.5, geometric_h_list(eps, t, -6, 3));
      const auto b = heat_kernel_check(eps, t, 0.5, geometric_h_list(eps, t, -7, 2));
      const double norm = std::abs(a.normalization - 1.0);
      const double anchor = std::abs(a.gradient_l1 - a.gradient_anchor);
      add_check(out, "heat_normalization " + tag, norm, 1e-12, norm <= 1e-12);
      add_check(out, "heat_gradient_anchor " + tag, anchor, 1e-8, anchor <= 1e-8);
      const double dk = relative_drift(a.constant_k, b.constant_k);
      const double dg = relative_drift(a.constant_grad, b.constant_grad);
      add_check(out, "heat_constant_k " + tag, dk, 0.2, dk < 0.2);
      add_check(out, "heat_constant_grad " + tag, dg, 0.2, dg < 0.2);
    }
  }
  return out;
}

void write_verification_csv(std::ostream& out, std::span<const VerificationCheck> checks) {
  out << "check,value,threshold,passed\n" << std::setprecision(17);
  for (const auto& c : checks) out << c.name << ',' << c.value << ',' << c.threshold << ',' << (c.passed ? 1 : 0) << '\n';
}

}  // namespace mfcl
