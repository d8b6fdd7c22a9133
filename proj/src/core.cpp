#include "mfcl/core.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mfcl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Accepts plain numbers and simple fractions such as "1/3".
double parse_number(const std::string& text) {
  const auto s = trim(text);
  std::size_t used = 0;
  const auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      const double num = std::stod(s.substr(0, slash), &used);
      if (used != slash) throw std::invalid_argument(s);
      const auto den_text = s.substr(slash + 1);
      const double den = std::stod(den_text, &used);
      if (used != den_text.size() || den == 0.0) throw std::invalid_argument(s);
      return num / den;
    }
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
}

std::size_t parse_count(const std::string& text) {
  const double v = parse_number(text);
  if (v < 0 || v != std::floor(v)) throw std::invalid_argument("not a count: '" + text + "'");
  return static_cast<std::size_t>(v);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- Grid1D

Grid1D::Grid1D(double half_length, std::size_t n_points)
    : half_length_(half_length), n_points_(n_points), dx_(0.0) {
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw std::invalid_argument("grid half_length must be positive");
  if (n_points < 3) throw std::invalid_argument("grid needs at least 3 points");
  dx_ = 2.0 * half_length / static_cast<double>(n_points - 1);
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> x(n_points_);
  for (std::size_t i = 0; i < n_points_; ++i) x[i] = node(i);
  return x;
}

std::size_t Grid1D::nearest_index(double x) const {
  const double s = std::round((x + half_length_) / dx_);
  if (s <= 0.0) return 0;
  if (s >= static_cast<double>(n_points_ - 1)) return n_points_ - 1;
  return static_cast<std::size_t>(s);
}

std::size_t Grid1D::cell_index(double x) const {
  const double s = std::floor((x + half_length_) / dx_);
  if (!(s > 0.0)) return 0;
  if (s >= static_cast<double>(n_points_ - 2)) return n_points_ - 2;
  return static_cast<std::size_t>(s);
}

Grid1D make_grid(double half_length, std::size_t n_points) { return Grid1D(half_length, n_points); }

// ---------------------------------------------------------------- FluxModel

double FluxModel::f_second_min_on(double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  constexpr int n = 1000;
  double m = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= n; ++s) m = std::min(m, f_double_prime(lo + (hi - lo) * s / n));
  return m;
}

double FluxModel::max_abs_f_prime_on(double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  constexpr int n = 1000;
  double m = 0.0;
  for (int s = 0; s <= n; ++s) m = std::max(m, std::abs(f_prime(lo + (hi - lo) * s / n)));
  return m;
}

double FluxModel::min_on(double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  double m = std::min(f(lo), f(hi));
  for (double c : critical_points)
    if (c > lo && c < hi) m = std::min(m, f(c));
  return m;
}

double FluxModel::max_on(double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  double m = std::max(f(lo), f(hi));
  for (double c : critical_points)
    if (c > lo && c < hi) m = std::max(m, f(c));
  return m;
}

FluxModel burgers_flux() {
  return {"burgers", [](double u) { return 0.5 * u * u; }, [](double u) { return u; },
          [](double) { return 1.0; }, true, {0.0}};
}

FluxModel linear_flux(double speed) {
  return {"linear:" + format_double(speed), [speed](double u) { return speed * u; },
          [speed](double) { return speed; }, [](double) { return 0.0; }, false, {}};
}

FluxModel zero_flux() {
  return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }, false, {}};
}

FluxModel cubic_flux() {
  return {"cubic", [](double u) { return u * u * u / 3.0; }, [](double u) { return u * u; },
          [](double u) { return 2.0 * u; }, false, {0.0}};
}

FluxModel flux_by_name(const std::string& name) {
  const auto n = trim(name);
  if (n == "burgers") return burgers_flux();
  if (n == "zero") return zero_flux();
  if (n == "cubic") return cubic_flux();
  if (n.rfind("linear:", 0) == 0) return linear_flux(parse_number(n.substr(7)));
  throw std::invalid_argument("unknown flux '" + name + "'");
}

double drift_a_k(const FluxModel& flux, double v, double k) {
  if (std::abs(v - k) < 1e-8 * std::max(1.0, std::abs(k))) return flux.f_prime(k);
  return (flux.f(v) - flux.f(k)) / (v - k);
}

double drift_a(const FluxModel& flux, double v) { return drift_a_k(flux, v, 0.0); }

// ---------------------------------------------------------------- InitialData

InitialData InitialData::riemann(double left_state, double right_state, double jump_position) {
  InitialData d;
  d.kind_ = Kind::riemann;
  d.left_ = left_state;
  d.right_ = right_state;
  d.jump_ = jump_position;
  d.sup_norm_ = std::max(std::abs(left_state), std::abs(right_state));
  d.min_value_ = std::min(left_state, right_state);
  d.max_value_ = std::max(left_state, right_state);
  std::ostringstream os;
  os << "riemann:" << format_double(left_state) << ',' << format_double(right_state) << ','
     << format_double(jump_position);
  d.label_ = os.str();
  return d;
}

InitialData InitialData::sampled(const Grid1D& grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw std::invalid_argument("sampled data size does not match grid");
  InitialData d;
  d.kind_ = Kind::sampled;
  d.sample_nodes_ = grid.nodes();
  d.sample_values_ = std::move(values);
  const auto [mn, mx] = std::minmax_element(d.sample_values_.begin(), d.sample_values_.end());
  d.min_value_ = *mn;
  d.max_value_ = *mx;
  d.sup_norm_ = std::max(std::abs(*mn), std::abs(*mx));
  d.left_ = d.sample_values_.front();
  d.right_ = d.sample_values_.back();
  d.label_ = "sampled";
  return d;
}

InitialData InitialData::analytic(std::function<double(double)> fn, double sup_norm, std::string label) {
  if (!(sup_norm >= 0.0)) throw std::invalid_argument("sup_norm must be non-negative");
  InitialData d;
  d.kind_ = Kind::analytic;
  d.fn_ = std::move(fn);
  d.sup_norm_ = sup_norm;
  d.min_value_ = -sup_norm;
  d.max_value_ = sup_norm;
  d.label_ = std::move(label);
  return d;
}

double InitialData::operator()(double x) const {
  switch (kind_) {
    case Kind::riemann:
      return x < jump_ ? left_ : right_;
    case Kind::sampled: {
      const auto& xs = sample_nodes_;
      if (x <= xs.front()) return sample_values_.front();
      if (x >= xs.back()) return sample_values_.back();
      const auto it = std::upper_bound(xs.begin(), xs.end(), x);
      const auto i = static_cast<std::size_t>(it - xs.begin()) - 1;
      const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
      return (1.0 - w) * sample_values_[i] + w * sample_values_[i + 1];
    }
    case Kind::analytic:
      return fn_(x);
  }
  return 0.0;
}

double InitialData::integral(double a, double b) const {
  if (a == b) return 0.0;
  if (a > b) return -integral(b, a);
  switch (kind_) {
    case Kind::riemann: {
      const double split = std::clamp(jump_, a, b);
      return left_ * (split - a) + right_ * (b - split);
    }
    case Kind::sampled: {
      // exact integral of the clamped piecewise-linear interpolant
      const auto& xs = sample_nodes_;
      std::vector<double> pts{a};
      for (double x : xs)
        if (x > a && x < b) pts.push_back(x);
      pts.push_back(b);
      double s = 0.0;
      for (std::size_t q = 0; q + 1 < pts.size(); ++q)
        s += 0.5 * ((*this)(pts[q]) + (*this)(pts[q + 1])) * (pts[q + 1] - pts[q]);
      return s;
    }
    case Kind::analytic:
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(fn_, a, b, 12, 1e-13);
  }
  return 0.0;
}

std::vector<double> InitialData::sample_on(const Grid1D& grid) const {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i);
    if (kind_ == Kind::riemann && std::abs(x - jump_) <= 1e-12 * (1.0 + std::abs(jump_)))
      v[i] = 0.5 * (left_ + right_);
    else
      v[i] = (*this)(x);
  }
  return v;
}

// ---------------------------------------------------------------- SpaceTimeField

void SpaceTimeField::append(double t, std::span<const double> slice) {
  if (slice.size() != grid_.size()) throw std::invalid_argument("slice size does not match grid");
  if (!times_.empty() && !(t > times_.back())) throw std::invalid_argument("field times must increase");
  times_.push_back(t);
  values_.insert(values_.end(), slice.begin(), slice.end());
}

std::size_t SpaceTimeField::nearest_slice(double t) const {
  if (times_.empty()) throw std::logic_error("empty field");
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0;
  if (it == times_.end()) return times_.size() - 1;
  const auto j = static_cast<std::size_t>(it - times_.begin());
  return (t - times_[j - 1] <= times_[j] - t) ? j - 1 : j;
}

double SpaceTimeField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SpaceTimeField map_field(const SpaceTimeField& field, const std::function<double(double)>& fn) {
  SpaceTimeField out(field.grid());
  std::vector<double> row(field.grid().size());
  for (std::size_t j = 0; j < field.n_times(); ++j) {
    const auto s = field.slice(j);
    std::transform(s.begin(), s.end(), row.begin(), fn);
    out.append(field.times()[j], row);
  }
  return out;
}

// ---------------------------------------------------------------- test functions

TestFunction test_function(const std::string& name) {
  if (name == "gauss")
    return {name, [](double x) { return std::exp(-0.5 * x * x); },
            [](double x) { return std::sqrt(M_PI / 2.0) * std::erf(x / std::sqrt(2.0)); }};
  if (name == "lorentz")
    return {name, [](double x) { return 1.0 / (1.0 + x * x); }, [](double x) { return std::atan(x); }};
  if (name == "tanh")
    return {name, [](double x) { return std::tanh(x); },
            [](double x) {
              // log cosh without overflow
              const double a = std::abs(x);
              return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
            }};
  throw std::invalid_argument("unknown test function '" + name + "'");
}

std::vector<TestFunction> default_test_functions() {
  return {test_function("gauss"), test_function("lorentz"), test_function("tanh")};
}

double trapezoid(const Grid1D& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * grid.dx();
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
  return s;
}

// ---------------------------------------------------------------- ExperimentConfig

ExperimentConfig ExperimentConfig::desk_scale() {
  ExperimentConfig c;
  c.n_x = 301;
  c.n_paths = 1001;
  c.n_time_steps = 1000;
  c.n_mc = 200;
  return c;
}

InitialData ExperimentConfig::initial_data() const { return parse_initial(initial); }

void ExperimentConfig::validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (!(half_length > 0.0)) throw std::invalid_argument("half_length must be positive");
  if (n_x < 3) throw std::invalid_argument("n_x must be >= 3");
  if (n_paths == 0 || n_time_steps == 0 || n_mc == 0 || store_slices == 0 || record_stride == 0)
    throw std::invalid_argument("counts must be positive");
  if (!(p_moment >= 1.0)) throw std::invalid_argument("p_moment must be >= 1");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw std::invalid_argument("cfl_safety must lie in (0, 1]");
  if (test_functions.empty()) throw std::invalid_argument("at least one test function is required");
  for (const auto& t : test_functions) (void)test_function(t);
  (void)flux_by_name(flux);
  (void)parse_initial(initial);
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  auto join = [](const auto& items) {
    std::ostringstream j;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) j << ',';
      if constexpr (std::is_same_v<std::decay_t<decltype(items[i])>, double>)
        j << format_double(items[i]);
      else
        j << items[i];
    }
    return j.str();
  };
  os << "epsilon = " << format_double(epsilon) << '\n'
     << "T = " << format_double(T) << '\n'
     << "half_length = " << format_double(half_length) << '\n'
     << "n_x = " << n_x << '\n'
     << "n_paths = " << n_paths << '\n'
     << "n_time_steps = " << n_time_steps << '\n'
     << "n_mc = " << n_mc << '\n'
     << "seed = " << seed << '\n'
     << "flux = " << flux << '\n'
     << "initial = " << initial << '\n'
     << "test_functions = " << join(test_functions) << '\n'
     << "p_moment = " << format_double(p_moment) << '\n'
     << "cfl_safety = " << format_double(cfl_safety) << '\n'
     << "store_slices = " << store_slices << '\n'
     << "record_stride = " << record_stride << '\n'
     << "probes = " << join(probes) << '\n';
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

InitialData parse_initial(const std::string& spec) {
  const auto s = trim(spec);
  if (s == "compressive") return InitialData::compressive();
  if (s == "expansive") return InitialData::expansive();
  if (s.rfind("constant:", 0) == 0) return InitialData::constant(parse_number(s.substr(9)));
  if (s.rfind("riemann:", 0) == 0) {
    const auto parts = split(s.substr(8), ',');
    if (parts.size() != 2 && parts.size() != 3)
      throw std::invalid_argument("riemann initial data needs left,right[,jump]");
    return InitialData::riemann(parse_number(parts[0]), parse_number(parts[1]),
                                parts.size() == 3 ? parse_number(parts[2]) : 0.0);
  }
  throw std::invalid_argument("unknown initial data '" + spec + "'");
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number(item));
  return out;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  ExperimentConfig c = std::move(base);
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "epsilon") c.epsilon = parse_number(value);
      else if (key == "T") c.T = parse_number(value);
      else if (key == "half_length") c.half_length = parse_number(value);
      else if (key == "n_x") c.n_x = parse_count(value);
      else if (key == "n_paths") c.n_paths = parse_count(value);
      else if (key == "n_time_steps") c.n_time_steps = parse_count(value);
      else if (key == "n_mc") c.n_mc = parse_count(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "flux") c.flux = value;
      else if (key == "initial") c.initial = value;
      else if (key == "test_functions") c.test_functions = split(value, ',');
      else if (key == "p_moment") c.p_moment = parse_number(value);
      else if (key == "cfl_safety") c.cfl_safety = parse_number(value);
      else if (key == "store_slices") c.store_slices = parse_count(value);
      else if (key == "record_stride") c.record_stride = parse_count(value);
      else if (key == "probes") c.probes = parse_number_list(value);
      else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace mfcl
