#pragma once

#include <functional>
#include <limits>

#include "rre/model.hpp"

namespace rre {

inline constexpr double kInfWeight = std::numeric_limits<double>::infinity();

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& A);

/// Subset Riccati operator
///   f_j(X) = F X F' + Q - F X C_j' (C_j X C_j' + R_j)^{-1} C_j X F',
/// solved through an LDLT factorization of the innovation matrix and
/// re-symmetrized. The empty subset reduces to the Lyapunov map F X F' + Q.
Eigen::MatrixXd riccati_op(const LinearSystem& system, const SensorSuite& suite,
                           const SubsetIndex& subset, const Eigen::MatrixXd& X);

/// Per-sensor sum form
///   F X F' + Q - sum_j F X C_i' (C_i X C_i' + R_i)^{-1} C_i X F'.
/// Coincides with riccati_op exactly when the stacked innovation matrix is
/// block diagonal; kept as an independent cross-validation route.
Eigen::MatrixXd riccati_op_sum_form(const LinearSystem& system, const SensorSuite& suite,
                                    const SubsetIndex& subset, const Eigen::MatrixXd& X);

Eigen::MatrixXd lyapunov_op(const LinearSystem& system, const Eigen::MatrixXd& X);

struct FixedPoint {
  Eigen::MatrixXd P;
  int iterations = 0;
  double residual = 0.0;
};

/// Iterates X <- f_{full}(X) from X = Q until the Frobenius step is below
/// tol * (1 + ||X||_F). Throws on non-convergence, naming the last residual.
FixedPoint centralized_fixed_point(const LinearSystem& system, const SensorSuite& suite,
                                   double tol = 1e-12, int max_iter = 100000);

/// Composition record (f_{j_r}, ..., f_{j_1}, P_0); ops[0] is applied first.
struct RiccatiString {
  std::vector<SubsetIndex> ops;
  Eigen::MatrixXd initial;

  int length() const { return static_cast<int>(ops.size()); }
  std::string ops_to_string() const;
};

Eigen::MatrixXd evaluate_string(const RiccatiString& str, const LinearSystem& system,
                                const SensorSuite& suite);

/// Number of non-centralized operators in the string (0 for length 0).
int count_non_centralized(const RiccatiString& str);

/// Per-sensor, per-subset exponent bounds (infinity allowed). The upper bound
/// is infinite whenever the sensor is not a member of the subset; the full set
/// contributes nothing because the weight indicator excludes it.
class WeightTable {
 public:
  explicit WeightTable(int sensor_count);
  static WeightTable from_hitting_constants(double alpha, double beta, int window,
                                            int sensor_count);

  double upper(int sensor, const SubsetIndex& subset) const;  // q-bar
  double lower(int sensor, const SubsetIndex& subset) const;  // q-underbar
  void set(int sensor, const SubsetIndex& subset, double upper, double lower);
  int sensor_count() const { return n_; }

 private:
  std::size_t at(int sensor, const SubsetIndex& subset) const;
  int n_;
  std::vector<double> upper_, lower_;
};

struct StringWeights {
  double upper = 0.0;
  double lower = 0.0;
};

/// Path-minimized weights over paths of len(str) in the sensor graph given by
/// path_adjacency (positive entries; unit diagonal allows constant paths).
/// Length 0 yields (0, 0); an empty feasible set yields infinity.
StringWeights string_weights(const RiccatiString& str, const WeightTable& table,
                             const Eigen::MatrixXd& path_adjacency);

enum class WeightKind { Upper, Lower };

struct SearchCaps {
  int max_len = 8;
  std::size_t max_expansions = 200000;
  int max_subsets_per_step = 0;  // 0 = all non-empty subsets
};

struct WeightSearchResult {
  double weight = kInfWeight;  // approximate infimum (an upper bound on it)
  RiccatiString witness;
  bool capped = false;  // caps may hide a cheaper string
  std::size_t expansions = 0;
};

/// Best-first enumeration of strings with initial state `initial`, minimizing
/// the chosen weight over strings whose numerical value satisfies `target`.
/// Weights only grow along a branch, so the frontier minimum certifies
/// optimality whenever the caps were not binding.
WeightSearchResult search_min_weight(const Eigen::MatrixXd& initial,
                                     const std::function<bool(const Eigen::MatrixXd&)>& target,
                                     WeightKind kind, const WeightTable& table,
                                     const Eigen::MatrixXd& path_adjacency,
                                     const LinearSystem& system, const SensorSuite& suite,
                                     const SearchCaps& caps);

struct RateFunctionResult {
  double upper = kInfWeight;  // approximation of I-bar(X)
  double lower = kInfWeight;  // approximation of I-underbar(X)
  RiccatiString upper_witness, lower_witness;
  bool capped = false;
};

/// Approximates the rate functions at X by bounded enumeration over strings
/// with initial state P*; reports capped-ness honestly.
RateFunctionResult rate_function(const Eigen::MatrixXd& X, double target_tol,
                                 const SearchCaps& caps, const WeightTable& table,
                                 const Eigen::MatrixXd& path_adjacency,
                                 const LinearSystem& system, const SensorSuite& suite,
                                 const Eigen::MatrixXd& Pstar);

}  // namespace rre
