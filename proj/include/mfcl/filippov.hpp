// Set-valued drift envelopes, the d_R drift distance, one-sided Lipschitz
// seminorms and a 1-D Filippov solver for one-sided Lipschitz drifts.
//
// In one dimension the Filippov hull K_R[b](x, t) is the interval
// [essinf, esssup] of b over the ball B_R(x); on sampled data the node values
// are the essential range.
#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mfcl/core.hpp"

namespace mfcl {

struct Interval {
  double lo;
  double hi;

  bool contains(double v) const { return lo <= v && v <= hi; }
  double distance(double v) const { return v < lo ? lo - v : (v > hi ? v - hi : 0.0); }
};

/// Max / min of the slice nearest t over nodes within distance R of x.
double local_esssup(const SpaceTimeField& field, double x, double t, double R);
double local_essinf(const SpaceTimeField& field, double x, double t, double R);
Interval local_hull(const SpaceTimeField& field, double x, double t, double R);

/// esssup_x dist(b_approx(x, t), K_R[b_limit](x, t)) over the nodes.
double d_R_distance(const SpaceTimeField& b_approx, const SpaceTimeField& b_limit, double R, double t);

/// Discrete Lip+ seminorm: max over adjacent nodes of (b_{i+1} - b_i) / dx.
/// For sampled 1-D data this equals the supremum over all pairs.
double osl_seminorm(const Grid1D& grid, std::span<const double> values);
double osl_seminorm(const SpaceTimeField& field, double t);

using Drift = std::function<double(double x, double t)>;

struct FilippovPath {
  std::vector<double> times;
  std::vector<double> positions;
  /// 0 in K_R[b](X_t, t) with R = max(dx, sup|b| dt) at that time.
  std::vector<bool> sticking;
};

struct FilippovOptions {
  double dt = 1e-3;
  /// Spatial resolution of the drift; sets the envelope radius.
  double dx = 1e-3;
  /// sup |b|; bounds the bracketing interval of each step.
  double drift_bound = 1.0;
  bool track_sticking = true;
};

/// Backward-Euler Filippov integrator: X_{n+1} solves
/// X_{n+1} - dt * b(X_{n+1}, t_{n+1}) = X_n, located by bisection. At an
/// attracting jump of b the root is the jump itself, so paths stick to
/// shocks and move with them. |X_{n+1} - X_n| <= sup|b| dt always.
FilippovPath filippov_solve(const Drift& drift, double x0, double s, double T, const FilippovOptions& options);

/// b(x, t) = a_k(u(x, t), k) from a sampled entropy solution: constant on
/// each grid cell, linear in time between stored slices.
Drift entropy_drift(const SpaceTimeField& entropy_solution, const FluxModel& flux, double k);
/// sup |a_k(u, k)| over all stored values.
double entropy_drift_bound(const SpaceTimeField& entropy_solution, const FluxModel& flux, double k);

/// Drift b = a_k(u(x, t), k) from a sampled entropy solution, taken constant
/// on each grid cell (null sets are invisible) and linear in time.
FilippovPath filippov_solve(const SpaceTimeField& entropy_solution, const FluxModel& flux, double k, double x0,
                            double s, double T, double dt);

struct Lemma51Row {
  double t;
  double d_R;
  double bound;
  double ratio;
  double osl;
  double osl_bound;
};

struct Lemma51Report {
  std::vector<Lemma51Row> rows;
  bool precondition_ok = true;
  std::optional<std::size_t> violating_slice;  // first slice with osl > L(t)
  double max_ratio = 0.0;
  bool passed() const { return precondition_ok && max_ratio <= 1.0; }
};

/// For every stored slice with t >= t_min: d_R(b_approx; b_limit)(t) versus
/// sqrt(2 L(t) ||b_approx(t) - b_limit(t)||_1) + tolerance, after checking
/// |b_approx(t)|_Lip+ <= L(t) + osl_slack.
Lemma51Report lemma51_check(const SpaceTimeField& b_approx, const SpaceTimeField& b_limit,
                            const std::function<double(double)>& osl_bound, double R, double t_min,
                            double tolerance, double osl_slack = 0.0);

void write_path_csv(std::ostream& out, const FilippovPath& path);
/// `t,d_R,bound,ratio`
void write_lemma51_csv(std::ostream& out, const Lemma51Report& report);

}  // namespace mfcl
