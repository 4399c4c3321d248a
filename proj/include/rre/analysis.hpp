#pragma once

#include "rre/filter.hpp"

namespace rre {

enum class Statistic { Trace, LambdaMax };

double eval_statistic(Statistic stat, const Eigen::MatrixXd& X);
std::string statistic_name(Statistic stat);

/// Complement of the open ball of `radius` around `center` in the chosen
/// scalar statistic.
struct RareEvent {
  Statistic statistic = Statistic::Trace;
  double center = 0.0;
  double radius = 0.0;

  void validate() const;
};

struct MeasureSample {
  double trace_norm = 0.0;  // Tr(P)/Tr(P*)
  double lmax_norm = 0.0;   // lmax(P)/lmax(P*)
  bool diverged = false;
};

struct EmpiricalMeasure {
  double gamma_bar = 0.0;
  int burn_in = 0;
  std::uint64_t seed = 0;
  std::vector<MeasureSample> samples;

  int divergent_count() const;
  std::vector<double> values(Statistic stat) const;  // non-divergent, normalized
};

struct MeasureModel {
  const LinearSystem* system = nullptr;
  const SensorSuite* suite = nullptr;
  const GossipTopology* topology = nullptr;
  const MatchingDistribution* dist = nullptr;
  Eigen::MatrixXd initial_covariance;
  Eigen::MatrixXd Pstar;
  double divergence_guard = 1e12;
};

/// Draws n_samples independent runs: burn_in M-GIKF covariance epochs each,
/// then the covariance at a uniformly chosen sensor. Per-sample seeds derive
/// from the master seed, and samples land in index order, so the result is
/// identical for every worker count.
EmpiricalMeasure sample_invariant_measure(const MeasureModel& model, double gamma_bar,
                                          int burn_in, int n_samples, std::uint64_t master_seed,
                                          int workers = 0);

/// Serial reference for the parallel kernel above; must agree exactly.
EmpiricalMeasure sample_invariant_measure_serial(const MeasureModel& model, double gamma_bar,
                                                 int burn_in, int n_samples,
                                                 std::uint64_t master_seed);

class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values);

  double operator()(double x) const;  // P(value <= x), right-continuous
  double quantile(double p) const;
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

struct ProbabilityEstimate {
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  long hits = 0;
  long trials = 0;
};

ProbabilityEstimate wilson_interval(long hits, long trials, double z = 1.959963984540054);

ProbabilityEstimate rare_event_probability(const EmpiricalMeasure& measure, const RareEvent& event);

struct ExponentPoint {
  double gamma_bar = 0.0;
  double exponent = 0.0;  // (1/gamma) ln p
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool censored = false;  // zero observed hits
};

std::vector<ExponentPoint> ld_exponent_estimate(
    const std::vector<std::pair<double, ProbabilityEstimate>>& probabilities);

struct LdBoundsResult {
  double upper_exponent = 0.0;  // -I_bar: ceiling for the decay exponent
  double lower_exponent = 0.0;  // -I_underbar: floor for the decay exponent
  RiccatiString upper_witness, lower_witness;
  bool upper_capped = false;
  bool lower_capped = false;
};

/// Bounded string enumeration of the LD upper/lower bound exponents of a
/// scalar-statistic rare event: closed event set with upper weights, open
/// event set with lower weights.
LdBoundsResult ld_bounds(const LinearSystem& system, const SensorSuite& suite,
                         const RareEvent& event, const WeightTable& table,
                         const Eigen::MatrixXd& path_adjacency, const Eigen::MatrixXd& Pstar,
                         const SearchCaps& caps, double set_tol = 1e-9);

struct DiracReportRow {
  double gamma_bar = 0.0;
  double median_dev = 0.0;  // median |Tr/Tr(P*) - 1|
  double p90_dev = 0.0;
};

struct DiracReport {
  std::vector<DiracReportRow> rows;
  bool medians_strictly_decreasing = false;
};

DiracReport dirac_convergence_report(const std::vector<EmpiricalMeasure>& measures);

}  // namespace rre
