#include "rre/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rre {

double eval_statistic(Statistic stat, const Eigen::MatrixXd& X) {
  if (stat == Statistic::Trace) return X.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

std::string statistic_name(Statistic stat) {
  return stat == Statistic::Trace ? "trace" : "lambda_max";
}

void RareEvent::validate() const {
  if (radius <= 0.0) throw std::invalid_argument("RareEvent: radius must be positive");
}

int EmpiricalMeasure::divergent_count() const {
  int count = 0;
  for (const auto& s : samples) count += s.diverged ? 1 : 0;
  return count;
}

std::vector<double> EmpiricalMeasure::values(Statistic stat) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    if (!s.diverged) out.push_back(stat == Statistic::Trace ? s.trace_norm : s.lmax_norm);
  return out;
}

namespace {

MeasureSample draw_one_sample(const MeasureModel& model, double gamma_bar, int burn_in,
                              std::uint64_t master_seed, long sample_id, double trace_star,
                              double lmax_star) {
  const std::uint64_t id = static_cast<std::uint64_t>(sample_id);
  RngStream swap(mix_seed(master_seed, id, kStreamSwap));
  RngStream dissemination(mix_seed(master_seed, id, kStreamDissemination));
  RngStream select(mix_seed(master_seed, id, kStreamSelect));

  CovarianceEnsemble ensemble = make_covariance_ensemble(
      *model.system, model.suite->count(), model.initial_covariance);
  for (int k = 0; k < burn_in && !ensemble.diverged; ++k)
    step_covariances(ensemble, *model.system, *model.suite, *model.topology, *model.dist,
                     gamma_bar, swap, dissemination, model.divergence_guard);

  MeasureSample sample;
  sample.diverged = ensemble.diverged;
  const int sensor = select.uniform_int(model.suite->count());
  const Eigen::MatrixXd& P = ensemble.covariances[static_cast<std::size_t>(sensor)];
  sample.trace_norm = P.trace() / trace_star;
  sample.lmax_norm = eval_statistic(Statistic::LambdaMax, P) / lmax_star;
  return sample;
}

void validate_measure_model(const MeasureModel& model, int burn_in, int n_samples) {
  if (!model.system || !model.suite || !model.topology || !model.dist)
    throw std::invalid_argument("sample_invariant_measure: incomplete model");
  if (burn_in < 1) throw std::invalid_argument("sample_invariant_measure: burn_in must be >= 1");
  if (n_samples < 1) throw std::invalid_argument("sample_invariant_measure: need samples");
}

}  // namespace

EmpiricalMeasure sample_invariant_measure(const MeasureModel& model, double gamma_bar,
                                          int burn_in, int n_samples, std::uint64_t master_seed,
                                          int workers) {
  validate_measure_model(model, burn_in, n_samples);
  const double trace_star = model.Pstar.trace();
  const double lmax_star = eval_statistic(Statistic::LambdaMax, model.Pstar);

  EmpiricalMeasure measure;
  measure.gamma_bar = gamma_bar;
  measure.burn_in = burn_in;
  measure.seed = master_seed;
  measure.samples.resize(static_cast<std::size_t>(n_samples));

#ifdef _OPENMP
  const int thread_count = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_count)
  for (long i = 0; i < n_samples; ++i)
    measure.samples[static_cast<std::size_t>(i)] =
        draw_one_sample(model, gamma_bar, burn_in, master_seed, i, trace_star, lmax_star);
#else
  (void)workers;
  for (long i = 0; i < n_samples; ++i)
    measure.samples[static_cast<std::size_t>(i)] =
        draw_one_sample(model, gamma_bar, burn_in, master_seed, i, trace_star, lmax_star);
#endif
  return measure;
}

EmpiricalMeasure sample_invariant_measure_serial(const MeasureModel& model, double gamma_bar,
                                                 int burn_in, int n_samples,
                                                 std::uint64_t master_seed) {
  validate_measure_model(model, burn_in, n_samples);
  const double trace_star = model.Pstar.trace();
  const double lmax_star = eval_statistic(Statistic::LambdaMax, model.Pstar);

  EmpiricalMeasure measure;
  measure.gamma_bar = gamma_bar;
  measure.burn_in = burn_in;
  measure.seed = master_seed;
  measure.samples.reserve(static_cast<std::size_t>(n_samples));
  for (long i = 0; i < n_samples; ++i)
    measure.samples.push_back(
        draw_one_sample(model, gamma_bar, burn_in, master_seed, i, trace_star, lmax_star));
  return measure;
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw std::domain_error("EmpiricalCdf: no samples");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::quantile(double p) const {
  if (p < 0.0 || p > 1.0) throw std::domain_error("EmpiricalCdf: quantile level out of [0,1]");
  if (p <= 0.0) return sorted_.front();
  const auto idx = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(sorted_.size())) - 1.0);
  return sorted_[std::min(idx, sorted_.size() - 1)];
}

ProbabilityEstimate wilson_interval(long hits, long trials, double z) {
  if (trials < 1) throw std::domain_error("wilson_interval: no trials");
  ProbabilityEstimate est;
  est.hits = hits;
  est.trials = trials;
  const double n = static_cast<double>(trials);
  est.p_hat = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (est.p_hat + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(est.p_hat * (1.0 - est.p_hat) / n + z2 / (4.0 * n * n)) / denom;
  est.ci_lo = std::max(0.0, center - half);
  est.ci_hi = std::min(1.0, center + half);
  return est;
}

ProbabilityEstimate rare_event_probability(const EmpiricalMeasure& measure,
                                           const RareEvent& event) {
  event.validate();
  const std::vector<double> values = measure.values(event.statistic);
  if (values.empty()) throw std::domain_error("rare_event_probability: empty measure");
  // Samples are normalized by the statistic of P*; compare in that scale.
  const double center = 1.0;
  const double radius = event.radius / event.center;
  long hits = 0;
  for (double v : values)
    if (std::abs(v - center) >= radius) ++hits;
  return wilson_interval(hits, static_cast<long>(values.size()));
}

std::vector<ExponentPoint> ld_exponent_estimate(
    const std::vector<std::pair<double, ProbabilityEstimate>>& probabilities) {
  std::vector<ExponentPoint> out;
  out.reserve(probabilities.size());
  for (const auto& [gamma, est] : probabilities) {
    if (gamma <= 0.0) throw std::domain_error("ld_exponent_estimate: rates must be positive");
    ExponentPoint point;
    point.gamma_bar = gamma;
    if (est.hits == 0) {
      point.censored = true;
      point.exponent = -std::numeric_limits<double>::infinity();
      point.ci_lo = -std::numeric_limits<double>::infinity();
      point.ci_hi = est.ci_hi > 0.0 ? std::log(est.ci_hi) / gamma
                                    : -std::numeric_limits<double>::infinity();
    } else {
      point.exponent = std::log(est.p_hat) / gamma;
      point.ci_lo = est.ci_lo > 0.0 ? std::log(est.ci_lo) / gamma
                                    : -std::numeric_limits<double>::infinity();
      point.ci_hi = std::log(est.ci_hi) / gamma;
    }
    out.push_back(point);
  }
  return out;
}

LdBoundsResult ld_bounds(const LinearSystem& system, const SensorSuite& suite,
                         const RareEvent& event, const WeightTable& table,
                         const Eigen::MatrixXd& path_adjacency, const Eigen::MatrixXd& Pstar,
                         const SearchCaps& caps, double set_tol) {
  event.validate();
  const Statistic stat = event.statistic;
  const double center = event.center;
  const double radius = event.radius;

  const auto in_closed = [&](const Eigen::MatrixXd& X) {
    return std::abs(eval_statistic(stat, X) - center) >= radius - set_tol;
  };
  const auto in_open = [&](const Eigen::MatrixXd& X) {
    return std::abs(eval_statistic(stat, X) - center) > radius + set_tol;
  };

  const WeightSearchResult up = search_min_weight(Pstar, in_closed, WeightKind::Upper, table,
                                                  path_adjacency, system, suite, caps);
  const WeightSearchResult low = search_min_weight(Pstar, in_open, WeightKind::Lower, table,
                                                   path_adjacency, system, suite, caps);

  LdBoundsResult out;
  out.upper_exponent = -up.weight;
  out.lower_exponent = -low.weight;
  out.upper_witness = up.witness;
  out.lower_witness = low.witness;
  out.upper_capped = up.capped;
  out.lower_capped = low.capped;
  if (out.lower_exponent > out.upper_exponent + 1e-12)
    throw std::logic_error("ld_bounds: exponent ordering violated (lower above upper)");
  return out;
}

DiracReport dirac_convergence_report(const std::vector<EmpiricalMeasure>& measures) {
  if (measures.size() < 2)
    throw std::invalid_argument("dirac_convergence_report: need at least two rates");
  DiracReport report;
  for (const auto& measure : measures) {
    std::vector<double> devs;
    for (const auto& s : measure.samples)
      if (!s.diverged) devs.push_back(std::abs(s.trace_norm - 1.0));
    if (devs.empty()) throw std::domain_error("dirac_convergence_report: empty measure");
    EmpiricalCdf cdf(std::move(devs));
    report.rows.push_back({measure.gamma_bar, cdf.quantile(0.5), cdf.quantile(0.9)});
  }
  report.medians_strictly_decreasing = true;
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    if (!(report.rows[i].median_dev < report.rows[i - 1].median_dev))
      report.medians_strictly_decreasing = false;
  return report;
}

}  // namespace rre
