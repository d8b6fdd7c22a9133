// Quantitative checks: weak-* and mean-consistency metrics, maximum
// principle, Hölder and heat-kernel difference bounds, Oleinik margins.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mfcl/core.hpp"
#include "mfcl/transport.hpp"

namespace mfcl {

/// One Monte Carlo sample: the pushforward density at each recorded time.
using DensitySeries = std::vector<DensitySample>;

/// int_{-L}^{L} theta u(x, t) for the exact Riemann solution of u_in, one
/// value per time. Constant pieces use the antiderivative of theta; a
/// rarefaction fan is integrated by Gauss-Kronrod quadrature.
std::vector<double> riemann_functional(const FluxModel& flux, const InitialData& u_in, std::span<const double> times,
                                       const TestFunction& theta, double half_length);

/// Trapezoid int theta u_ref(., t_j) for every stored slice of a grid field.
std::vector<double> field_functional(const SpaceTimeField& u_ref, const TestFunction& theta);

/// sup_j |I_eps(t_j) - I_ref(t_j)| for one sample.
double sup_weak_deviation(const DensitySeries& series, std::span<const double> times,
                          std::span<const double> reference, const TestFunction& theta);
/// Monte Carlo mean of dev^p.
double mc_moment(std::span<const double> deviations, double p);

/// E[ sup_j |I_eps(t_j) - I_ref(t_j)|^p ], I_eps the windowed carrier
/// functional of each sample. No p-th root is taken. Throws if a sample's time
/// stamps differ from `times`.
double weak_star_error(std::span<const DensitySeries> samples, std::span<const double> times,
                       std::span<const double> reference, const TestFunction& theta, double p);
/// Same, against a reference stored on the grid (slice times must match).
double weak_star_error(std::span<const DensitySeries> samples, const SpaceTimeField& u_ref, const TestFunction& theta,
                       double p);

struct EnsembleStats {
  std::vector<double> mean;
  std::vector<double> stddev;      // sample standard deviation (N - 1)
  std::vector<double> std_error;   // stddev / sqrt(N)
  std::size_t n_samples = 0;
};

/// Node-wise statistics of equally sized rows.
EnsembleStats ensemble_stats(std::span<const std::vector<double>> rows);

/// Trapezoid L1 distance between the Monte Carlo mean of grid-resampled
/// densities and m^eps at the final stored time.
double mean_consistency(std::span<const std::vector<double>> final_densities, const SpaceTimeField& m_eps);

/// Fraction of nodes in [first, last] with |mean - m| <= std_error.
double band_coverage(const EnsembleStats& stats, std::span<const double> m, std::size_t first, std::size_t last);

/// ||u_in||_inf - max |field|.
double max_principle_check(const SpaceTimeField& field, const InitialData& u_in);

struct HolderReport {
  double beta = 0.0;
  double constant = 0.0;  // max ratio over h and t
  std::vector<double> h;
  std::vector<double> ratio_per_h;  // max over t
};

/// ||Delta_h m(t)||_inf / (h^beta (t^{-beta/2} + |f|_Lip t^{(1-beta)/2})) for
/// h in {dx, 2dx, 4dx, 8dx} and stored t >= t_min; |f|_Lip is taken on
/// [-||u_in||, ||u_in||].
HolderReport holder_bound_check(const SpaceTimeField& field, const InitialData& u_in, const FluxModel& flux,
                                double beta, double t_min = 0.05);

struct HeatKernelReport {
  double epsilon = 0.0;
  double t = 0.0;
  double beta = 0.0;
  double normalization = 0.0;      // int K
  double gradient_l1 = 0.0;        // int |dK/dx|
  double gradient_anchor = 0.0;    // sqrt(2/pi) / (eps sqrt(t))
  std::vector<double> h;
  std::vector<double> diff_l1;       // ||Delta_h K||_1
  std::vector<double> grad_diff_l1;  // ||Delta_h dK/dx||_1
  double constant_k = 0.0;           // max_h ||Delta_h K||_1 (eps^2 t)^{beta/2} / h^beta
  double constant_grad = 0.0;        // max_h ||Delta_h dK||_1 (eps^2 t)^{(1+beta)/2} / h^beta
  /// max over h <= eps sqrt(t) of ||Delta_h K||_1 / (sqrt(2/pi) h / (eps sqrt t)).
  double lipschitz_ratio = 0.0;
};

/// Heat kernel K(x) = (2 pi eps^2 t)^{-1/2} exp(-x^2 / (2 eps^2 t)).
double heat_kernel(double epsilon, double t, double x);
double heat_kernel_dx(double epsilon, double t, double x);

/// Adaptive Gauss-Kronrod integration over |x| <= 12 sigma + |h|, split at
/// the sign changes of the integrand. Throws if the error estimate stalls.
HeatKernelReport heat_kernel_check(double epsilon, double t, double beta, std::span<const double> h_list);

/// h_k = eps sqrt(t) 2^k for k in [k_lo, k_hi].
std::vector<double> geometric_h_list(double epsilon, double t, int k_lo, int k_hi);

struct OleinikRow {
  double t;
  double osl;
  double bound;
  double margin;  // bound - osl
};

/// Per stored slice with t >= t_min: 1/(t min f'') - Lip+ of the slice, f''
/// minimised over the slice's range.
std::vector<OleinikRow> oleinik_check(const SpaceTimeField& field, const FluxModel& flux, double t_min);
double min_margin(std::span<const OleinikRow> rows);

struct ReportRow {
  double epsilon = 0.0;
  std::string theta;
  double p = 1.0;
  double weak_star_error = 0.0;
  double l1_mean_field = 0.0;     // ||m^eps(T) - u(T)||_1
  double mean_consistency = 0.0;
  double path_error = 0.0;        // E sup_t |X^eps(x0) - X(x0)|, mean over probes
  double oleinik_margin = 0.0;
  double mass_defect = 0.0;
  std::size_t n_mc = 0;
};

struct ConvergenceReport {
  std::vector<ReportRow> rows;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string time_sup = "stored slices";
  std::vector<double> probes;
  /// E sup_t |X^eps(x0) - X(x0)| per epsilon (outer) and probe (inner).
  std::vector<std::vector<double>> path_errors;
};

/// Long-format CSV, one row per (epsilon, theta, p). Deterministic: no timings.
void write_report_csv(std::ostream& out, const ConvergenceReport& report);
/// Human-readable table.
void print_report(std::ostream& out, const ConvergenceReport& report);

}  // namespace mfcl
