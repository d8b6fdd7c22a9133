// Grids, flux models, initial data and the shared numeric conventions.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfcl {

/// Base class for every numerical failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

class BoundaryContaminationError : public Error {
 public:
  using Error::Error;
};

class MonotonicityError : public Error {
 public:
  using Error::Error;
};

class ContractionError : public Error {
 public:
  using Error::Error;
};

/// Uniform node-centred grid on [-L, L], both endpoints included.
class Grid1D {
 public:
  Grid1D(double half_length, std::size_t n_points);

  double half_length() const { return half_length_; }
  std::size_t size() const { return n_points_; }
  double dx() const { return dx_; }

  /// x_i = -L + i*dx, evaluated so that node 0 is -L, the last node is +L
  /// and the grid is exactly symmetric about 0.
  double node(std::size_t i) const {
    const auto n1 = static_cast<double>(n_points_ - 1);
    return half_length_ * ((2.0 * static_cast<double>(i) - n1) / n1);
  }
  std::vector<double> nodes() const;

  std::size_t nearest_index(double x) const;
  /// Index i of the cell [x_i, x_{i+1}] containing x, clamped to [0, n-2].
  std::size_t cell_index(double x) const;

 private:
  double half_length_;
  std::size_t n_points_;
  double dx_;
};

Grid1D make_grid(double half_length, std::size_t n_points);

/// Scalar flux f with its first two derivatives. `critical_points` lists
/// every zero of f' (used for exact interval extrema in the Godunov flux).
struct FluxModel {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  std::function<double(double)> f_double_prime;
  bool is_strictly_convex = false;
  std::vector<double> critical_points;

  double operator()(double u) const { return f(u); }
  double f_second_min_on(double lo, double hi) const;
  double max_abs_f_prime_on(double lo, double hi) const;
  double min_on(double lo, double hi) const;
  double max_on(double lo, double hi) const;
};

FluxModel burgers_flux();
FluxModel linear_flux(double speed);
FluxModel zero_flux();
/// f(u) = u^3/3: registered but not convex.
FluxModel cubic_flux();
/// Accepts "burgers", "zero", "cubic", "linear:<speed>".
FluxModel flux_by_name(const std::string& name);

/// a(v) = (f(v) - f(0)) / v with the removable singularity resolved to f'(0).
double drift_a(const FluxModel& flux, double v);
/// a_k(v) = (f(v) - f(k)) / (v - k), resolved to f'(k) when |v-k| is below
/// 1e-8 * max(1, |k|).
double drift_a_k(const FluxModel& flux, double v, double k);

class InitialData {
 public:
  enum class Kind { riemann, sampled, analytic };

  static InitialData riemann(double left_state, double right_state, double jump_position = 0.0);
  static InitialData sampled(const Grid1D& grid, std::vector<double> values);
  /// `sup_norm` must bound |fn|; analytic data cannot be scanned exhaustively.
  static InitialData analytic(std::function<double(double)> fn, double sup_norm, std::string label = "analytic");
  static InitialData constant(double c) { return riemann(c, c, 0.0); }
  static InitialData compressive() { return riemann(1.0, -1.0, 0.0); }
  static InitialData expansive() { return riemann(-1.0, 1.0, 0.0); }

  Kind kind() const { return kind_; }
  double sup_norm() const { return sup_norm_; }
  double min_value() const { return min_value_; }
  double max_value() const { return max_value_; }
  double left_state() const { return left_; }
  double right_state() const { return right_; }
  double jump_position() const { return jump_; }
  const std::string& label() const { return label_; }

  /// Pointwise value; Riemann data is `left` for x < jump and `right` otherwise.
  double operator()(double x) const;
  /// Exact (Riemann, sampled) or Gauss-Legendre (analytic) integral over [a, b].
  double integral(double a, double b) const;
  /// Node values; a node sitting exactly on a Riemann jump gets the cell average.
  std::vector<double> sample_on(const Grid1D& grid) const;

 private:
  InitialData() = default;
  Kind kind_ = Kind::analytic;
  double left_ = 0.0, right_ = 0.0, jump_ = 0.0;
  double sup_norm_ = 0.0, min_value_ = 0.0, max_value_ = 0.0;
  std::vector<double> sample_nodes_, sample_values_;
  std::function<double(double)> fn_;
  std::string label_;
};

/// Time-stacked field on a grid: values[j][i] at (x_i, t_j), stored row-major.
class SpaceTimeField {
 public:
  explicit SpaceTimeField(Grid1D grid) : grid_(grid) {}

  const Grid1D& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  std::size_t n_times() const { return times_.size(); }
  double final_time() const { return times_.empty() ? 0.0 : times_.back(); }

  void append(double t, std::span<const double> slice);
  std::span<const double> slice(std::size_t j) const {
    return {values_.data() + j * grid_.size(), grid_.size()};
  }
  double at(std::size_t j, std::size_t i) const { return values_[j * grid_.size() + i]; }
  /// Index of the stored slice closest to t.
  std::size_t nearest_slice(double t) const;
  double max_abs() const;

 private:
  Grid1D grid_;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Applies fn pointwise to every stored value.
SpaceTimeField map_field(const SpaceTimeField& field, const std::function<double(double)>& fn);

/// Bounded continuous test function with a closed-form antiderivative.
struct TestFunction {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> antiderivative;

  double operator()(double x) const { return value(x); }
  /// Signed integral over [a, b].
  double integral(double a, double b) const { return antiderivative(b) - antiderivative(a); }
};

/// "gauss" exp(-x^2/2), "lorentz" 1/(1+x^2), "tanh" tanh(x).
TestFunction test_function(const std::string& name);
std::vector<TestFunction> default_test_functions();

/// Composite trapezoid rule on the grid.
double trapezoid(const Grid1D& grid, std::span<const double> values);
/// Trapezoid rule on an arbitrary increasing abscissa.
double trapezoid(std::span<const double> x, std::span<const double> y);

struct ExperimentConfig {
  double epsilon = 1.0;
  double T = 1.0;
  double half_length = 6.0;
  std::size_t n_x = 1201;
  std::size_t n_paths = 4001;
  std::size_t n_time_steps = 4000;
  std::size_t n_mc = 5000;
  std::uint64_t seed = 1;
  std::string flux = "burgers";
  std::string initial = "compressive";
  std::vector<std::string> test_functions = {"gauss", "lorentz", "tanh"};
  double p_moment = 1.0;
  // scheme and output controls
  double cfl_safety = 0.4;
  std::size_t store_slices = 400;
  std::size_t record_stride = 10;
  std::vector<double> probes = {-1.0, -0.5, 0.5, 1.0};

  /// Reduced grid, particle and sample counts for CI runs.
  static ExperimentConfig desk_scale();

  Grid1D grid() const { return Grid1D(half_length, n_x); }
  FluxModel flux_model() const { return flux_by_name(flux); }
  InitialData initial_data() const;
  void validate() const;

  /// Canonical `key = value` text (every key, fixed order).
  std::string to_text() const;
  /// FNV-1a digest of to_text().
  std::uint64_t hash() const;
};

/// Parses "compressive", "expansive", "constant:<c>", "riemann:<l>,<r>[,<x0>]".
InitialData parse_initial(const std::string& spec);

/// Applies `key = value` lines on top of `base`. Unknown keys throw.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

std::vector<double> parse_number_list(const std::string& text);

}  // namespace mfcl
