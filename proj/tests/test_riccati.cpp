#include "doctest.h"
#include "helpers.hpp"

using namespace rre;
using namespace rre::testing;

TEST_SUITE_BEGIN("riccati");

TEST_CASE("scalar operator values") {
  const LinearSystem system = scalar_system(1.0, 1.0);
  const SensorSuite suite = scalar_suite(1.0, 1.0);
  const SubsetIndex full = SubsetIndex::full_set(1);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);

  CHECK(riccati_op(system, suite, full, zero)(0, 0) == doctest::Approx(1.0));
  // (2X+1)/(X+1) at X=1.
  CHECK(riccati_op(system, suite, full, one)(0, 0) == doctest::Approx(1.5));
  // Empty subset is the Lyapunov map.
  const Eigen::MatrixXd x = 3.25 * one;
  CHECK(riccati_op(system, suite, SubsetIndex::empty_set(1), x)(0, 0) ==
        doctest::Approx(x(0, 0) + 1.0));
}

TEST_CASE("full-set stacking matches the centralized operator") {
  const LinearSystem system = desk_system();
  const SensorSuite suite = desk_suite();
  RngStream rng(4);
  const Eigen::MatrixXd X = random_psd(2, rng);
  // Evaluate through the stacked matrices directly.
  const auto stacked = stack_subset(suite, SubsetIndex::full_set(3));
  const Eigen::MatrixXd s = stacked.C * X * stacked.C.transpose() + stacked.R;
  const Eigen::MatrixXd direct =
      system.F * X * system.F.transpose() + system.Q -
      system.F * X * stacked.C.transpose() * s.inverse() * stacked.C * X * system.F.transpose();
  const Eigen::MatrixXd via_op = riccati_op(system, suite, SubsetIndex::full_set(3), X);
  CHECK((direct - via_op).norm() < 1e-10 * (1.0 + X.norm()));
}

TEST_CASE("sum form") {
  SUBCASE("singleton agrees with the stacked operator by construction") {
    const LinearSystem system = desk_system();
    const SensorSuite suite = desk_suite();
    RngStream rng(7);
    const Eigen::MatrixXd X = random_psd(2, rng);
    const SubsetIndex j = SubsetIndex::singleton(1, 3);
    CHECK((riccati_op(system, suite, j, X) - riccati_op_sum_form(system, suite, j, X)).norm() <
          1e-12);
  }
  SUBCASE("hand-evaluated scalar case with two identical sensors") {
    // F=1, Q=1, C=1, R=1, X=1: F X F' + Q = 2 and each sensor subtracts
    // 1*(1+1)^{-1}*1 = 1/2, so the sum form evaluates to 1.
    const LinearSystem system = scalar_system(1.0, 1.0);
    const SensorSuite suite = scalar_suite(1.0, 1.0, 2);
    const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
    CHECK(riccati_op_sum_form(system, suite, SubsetIndex::full_set(2), one)(0, 0) ==
          doctest::Approx(2.0 - 2.0 * 0.5));
  }
  SUBCASE("block-diagonal innovation construction agrees with the stacked form") {
    // Sensors built as C_i = B_i L^{-1} with orthonormal B rows and X = L L'
    // make C_i X C_j' = B_i B_j' = 0 for i != j, which is exactly the
    // block-diagonal case where both routes coincide.
    RngStream rng(21);
    const int m = 4;
    LinearSystem system;
    system.Q = Eigen::MatrixXd::Identity(m, m);
    for (int trial = 0; trial < 100; ++trial) {
      system.F.resize(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) system.F(i, j) = rng.gaussian();

      Eigen::MatrixXd a(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = rng.gaussian();
      const Eigen::MatrixXd X = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(m, m);
      const Eigen::LLT<Eigen::MatrixXd> llt(X);
      const Eigen::MatrixXd l_inv =
          llt.matrixL().solve(Eigen::MatrixXd::Identity(m, m));

      Eigen::MatrixXd b(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) b(i, j) = rng.gaussian();
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
      const Eigen::MatrixXd ortho = qr.householderQ();

      SensorSuite suite;
      for (int n = 0; n < 3; ++n) {
        Sensor s;
        s.C = ortho.row(n) * l_inv;
        s.R = (0.5 + rng.uniform()) * Eigen::MatrixXd::Identity(1, 1);
        suite.sensors.push_back(s);
      }
      const SubsetIndex full = SubsetIndex::full_set(3);
      const Eigen::MatrixXd lhs = riccati_op(system, suite, full, X);
      const Eigen::MatrixXd rhs = riccati_op_sum_form(system, suite, full, X);
      CHECK((lhs - rhs).norm() <= 1e-10 * (1.0 + X.norm()));
    }
  }
}

TEST_CASE("centralized fixed point") {
  SUBCASE("scalar golden-ratio fixed point") {
    const LinearSystem system = scalar_system(1.0, 1.0);
    const SensorSuite suite = scalar_suite(1.0, 1.0);
    const auto fp = centralized_fixed_point(system, suite);
    CHECK(fp.P(0, 0) == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-9));
    CHECK(fp.residual <= 1e-11);
  }
  SUBCASE("F = 0 converges to Q immediately") {
    const LinearSystem system = scalar_system(0.0, 2.5);
    const SensorSuite suite = scalar_suite(1.0, 1.0);
    const auto fp = centralized_fixed_point(system, suite);
    CHECK(fp.P(0, 0) == doctest::Approx(2.5));
    CHECK(fp.iterations <= 2);
  }
  SUBCASE("fixed point is monotone in the observation noise") {
    const LinearSystem system = desk_system();
    SensorSuite cheap = desk_suite(1.0);
    SensorSuite noisy = desk_suite(10.0);
    const auto p1 = centralized_fixed_point(system, cheap);
    const auto p10 = centralized_fixed_point(system, noisy);
    CHECK(min_eigenvalue(p10.P - p1.P) > -1e-9);
  }
  SUBCASE("undetectable unstable model reports divergence") {
    LinearSystem system;
    system.F = Eigen::Vector2d(2.0, 0.5).asDiagonal();
    system.Q = Eigen::MatrixXd::Identity(2, 2);
    SensorSuite suite;
    Sensor s;
    s.C.resize(1, 2);
    s.C << 0, 1;  // unstable mode unobserved
    s.R = Eigen::MatrixXd::Identity(1, 1);
    suite.sensors = {s};
    CHECK_THROWS_WITH_AS(centralized_fixed_point(system, suite, 1e-12, 200),
                         doctest::Contains("no convergence"), std::runtime_error);
  }
}

TEST_CASE("string evaluation and composition count") {
  const LinearSystem system = scalar_system(1.0, 1.0);
  const SensorSuite suite = scalar_suite(1.0, 1.0);
  const auto fp = centralized_fixed_point(system, suite);

  SUBCASE("length-0 string returns its initial state") {
    const RiccatiString s{{}, fp.P};
    CHECK(evaluate_string(s, system, suite) == fp.P);
    CHECK(count_non_centralized(s) == 0);
  }
  SUBCASE("one centralized step stays at the fixed point") {
    const RiccatiString s{{SubsetIndex::full_set(1)}, fp.P};
    CHECK((evaluate_string(s, system, suite) - fp.P).norm() <= 10 * fp.residual + 1e-12);
  }
  SUBCASE("two Lyapunov steps from zero") {
    const RiccatiString s{{SubsetIndex::empty_set(1), SubsetIndex::empty_set(1)},
                          Eigen::MatrixXd::Zero(1, 1)};
    CHECK(evaluate_string(s, system, suite)(0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("non-centralized count ignores full-set entries") {
    const int n = 3;
    RiccatiString s;
    s.initial = Eigen::MatrixXd::Identity(2, 2);
    s.ops = {SubsetIndex::singleton(1, n), SubsetIndex::full_set(n), SubsetIndex::singleton(2, n),
             SubsetIndex::full_set(n), SubsetIndex::singleton(0, n)};
    CHECK(count_non_centralized(s) == 3);
    RiccatiString all_central;
    all_central.initial = s.initial;
    all_central.ops.assign(5, SubsetIndex::full_set(n));
    CHECK(count_non_centralized(all_central) == 0);
  }
  SUBCASE("compositionality: value of a concatenation extends the prefix value") {
    const SensorSuite suite3 = desk_suite();
    const LinearSystem sys3 = desk_system();
    RngStream rng(12);
    RiccatiString prefix;
    prefix.initial = random_psd(2, rng);
    for (int i = 0; i < 4; ++i)
      prefix.ops.push_back(SubsetIndex(static_cast<std::uint32_t>(1 + rng.uniform_int(7)), 3));
    const SubsetIndex extra(static_cast<std::uint32_t>(1 + rng.uniform_int(7)), 3);
    RiccatiString whole = prefix;
    whole.ops.push_back(extra);
    const Eigen::MatrixXd via_parts =
        riccati_op(sys3, suite3, extra, evaluate_string(prefix, sys3, suite3));
    CHECK((evaluate_string(whole, sys3, suite3) - via_parts).norm() == 0.0);
  }
}

TEST_CASE("operators preserve symmetry and positive semidefiniteness") {
  const LinearSystem system = desk_system();
  const SensorSuite suite = desk_suite();
  RngStream rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd X = random_psd(2, rng, 1.0 + 10.0 * rng.uniform());
    const SubsetIndex j(static_cast<std::uint32_t>(rng.uniform_int(8)), 3);
    const Eigen::MatrixXd Y = riccati_op(system, suite, j, X);
    CHECK((Y - Y.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(min_eigenvalue(Y) > -1e-9 * (1.0 + X.norm()));
  }
}

TEST_CASE("monotone domination of the centralized operator") {
  const LinearSystem system = desk_system();
  const SensorSuite suite = desk_suite();
  const SubsetIndex full = SubsetIndex::full_set(3);
  RngStream rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd X = random_psd(2, rng, 0.2 + 5.0 * rng.uniform());
    const Eigen::MatrixXd fx_full = riccati_op(system, suite, full, X);
    for (std::uint32_t bits = 0; bits < 8; ++bits) {
      const Eigen::MatrixXd fx = riccati_op(system, suite, SubsetIndex(bits, 3), X);
      CHECK(min_eigenvalue(fx - fx_full) >= -1e-9 * (1.0 + X.norm()));
    }
  }
}

TEST_CASE("uniform convergence with an initial-state-independent horizon") {
  const LinearSystem system = desk_system();
  const SensorSuite suite = desk_suite();
  const auto fp = centralized_fixed_point(system, suite);
  const SubsetIndex full = SubsetIndex::full_set(3);
  const double eps = 1e-6;

  std::vector<Eigen::MatrixXd> starts;
  for (double scale : {1.0, 10.0, 1000.0})
    starts.push_back(fp.P + scale * fp.P.norm() * Eigen::MatrixXd::Identity(2, 2));

  int r_eps = 0;
  for (const auto& X0 : starts) {
    Eigen::MatrixXd X = X0;
    int r = 0;
    while ((X - fp.P).norm() > eps) {
      X = riccati_op(system, suite, full, X);
      ++r;
      REQUIRE(r < 10000);
    }
    r_eps = std::max(r_eps, r);
  }
  // One horizon works for every start, and stays converged afterwards.
  for (const auto& X0 : starts) {
    Eigen::MatrixXd X = X0;
    for (int r = 0; r < r_eps; ++r) X = riccati_op(system, suite, full, X);
    for (int extra = 0; extra < 20; ++extra) {
      CHECK((X - fp.P).norm() <= eps);
      X = riccati_op(system, suite, full, X);
    }
  }
}

TEST_CASE("removing centralized steps dominates after inflating the start") {
  // Doubling search for the alpha_{P0} of the truncated-string comparison.
  const LinearSystem system = desk_system();
  const SensorSuite suite = desk_suite();
  RngStream rng(23);
  const auto fp = centralized_fixed_point(system, suite);
  for (int trial = 0; trial < 20; ++trial) {
    RiccatiString s;
    s.initial = fp.P;
    for (int i = 0; i < 6; ++i)
      s.ops.push_back(SubsetIndex(static_cast<std::uint32_t>(rng.uniform_int(8)), 3));
    const Eigen::MatrixXd value = evaluate_string(s, system, suite);
    RiccatiString stripped;
    stripped.ops.reserve(s.ops.size());
    for (const auto& j : s.ops)
      if (!j.is_full()) stripped.ops.push_back(j);
    double alpha = 1.0;
    bool dominated = false;
    for (int doubling = 0; doubling < 40; ++doubling) {
      stripped.initial = alpha * Eigen::MatrixXd::Identity(2, 2);
      const Eigen::MatrixXd inflated = evaluate_string(stripped, system, suite);
      if (min_eigenvalue(inflated - value) >= -1e-9 * (1.0 + value.norm())) {
        dominated = true;
        break;
      }
      alpha *= 2.0;
    }
    CHECK(dominated);
  }
}

TEST_CASE("weight table from hitting constants") {
  const int n = 3;
  const auto table = WeightTable::from_hitting_constants(0.5, 0.25, 2, n);
  const SubsetIndex single = SubsetIndex::singleton(0, n);
  CHECK(table.upper(0, single) == doctest::Approx(std::log(2.0) / 2.0));
  CHECK(table.lower(0, single) == doctest::Approx(std::log(4.0)));  // (3-1)*ln4/2
  CHECK(table.upper(1, single) == kInfWeight);                      // non-member
  CHECK(table.lower(0, SubsetIndex::full_set(n)) == 0.0);
  // Ordering q-bar <= q-underbar for members of proper subsets.
  for (std::uint32_t bits = 1; bits < 7; ++bits) {
    const SubsetIndex j(bits, n);
    for (int sensor : j.members()) CHECK(table.upper(sensor, j) <= table.lower(sensor, j));
  }
  CHECK_THROWS_AS(q_exponent_bounds(1.5, 0.2, 1, n, single, 0), std::domain_error);
  CHECK_THROWS_AS(q_exponent_bounds(0.5, 0.7, 1, n, single, 0), std::domain_error);
}

TEST_CASE("string weights") {
  const int n = 2;
  WeightTable table(n);
  const SubsetIndex s1 = SubsetIndex::singleton(0, n);
  const SubsetIndex s2 = SubsetIndex::singleton(1, n);
  const SubsetIndex full = SubsetIndex::full_set(n);
  // q-bar: 1 for sensor 1, 3 for sensor 2, on both proper subsets they own.
  table.set(0, s1, 1.0, 2.0);
  table.set(1, s2, 3.0, 5.0);
  const Eigen::MatrixXd path = Eigen::MatrixXd::Ones(2, 2);  // 2-node path graph + self loops
  const Eigen::MatrixXd p0 = Eigen::MatrixXd::Identity(1, 1);

  SUBCASE("length zero gives zero weights") {
    const StringWeights w = string_weights({{}, p0}, table, path);
    CHECK(w.upper == 0.0);
    CHECK(w.lower == 0.0);
  }
  SUBCASE("all-centralized strings carry zero weight") {
    const StringWeights w = string_weights({{full, full, full}, p0}, table, path);
    CHECK(w.upper == 0.0);
    CHECK(w.lower == 0.0);
  }
  SUBCASE("brute-force path minimum on the 2-node graph") {
    // String (s2, s1): step 1 must sit at a sensor owning s1, step 2 at one
    // owning s2. Enumerate all 4 paths by hand.
    const RiccatiString str{{s1, s2}, p0};
    double best_upper = kInfWeight;
    double best_lower = kInfWeight;
    for (int n1 = 0; n1 < 2; ++n1)
      for (int n2 = 0; n2 < 2; ++n2) {
        if (path(n1, n2) <= 0.0) continue;
        best_upper = std::min(best_upper, table.upper(n1, s1) + table.upper(n2, s2));
        best_lower = std::min(best_lower, table.lower(n1, s1) + table.lower(n2, s2));
      }
    const StringWeights w = string_weights(str, table, path);
    CHECK(w.upper == doctest::Approx(best_upper));
    CHECK(w.lower == doctest::Approx(best_lower));
    CHECK(w.upper == doctest::Approx(4.0));
  }
  SUBCASE("weights are infinite when no admissible path exists") {
    WeightTable empty_table(n);
    const StringWeights w = string_weights({{s1}, p0}, empty_table, path);
    CHECK(w.upper == kInfWeight);
    CHECK(w.lower == kInfWeight);
  }
  SUBCASE("appending a non-centralized step never decreases the upper weight") {
    RngStream rng(3);
    WeightTable random_table(n);
    for (std::uint32_t bits = 1; bits < 4; ++bits) {
      const SubsetIndex j(bits, n);
      for (int sensor : j.members())
        random_table.set(sensor, j, rng.uniform(), rng.uniform() + 1.0);
    }
    RiccatiString str{{}, p0};
    StringWeights prev = string_weights(str, random_table, path);
    for (int step = 0; step < 6; ++step) {
      str.ops.push_back(SubsetIndex(static_cast<std::uint32_t>(1 + rng.uniform_int(3)), n));
      const StringWeights next = string_weights(str, random_table, path);
      CHECK(next.upper >= prev.upper - 1e-12);
      prev = next;
    }
  }
  SUBCASE("prefixing centralized repetitions changes neither count nor weight") {
    RiccatiString str{{s1, s2}, p0};
    const StringWeights w = string_weights(str, table, path);
    RiccatiString prefixed = str;
    for (int i = 0; i < 3; ++i) prefixed.ops.push_back(full);  // applied last
    const StringWeights w2 = string_weights(prefixed, table, path);
    CHECK(count_non_centralized(str) == count_non_centralized(prefixed));
    CHECK(w.upper == doctest::Approx(w2.upper));
    CHECK(w.lower == doctest::Approx(w2.lower));
  }
}

TEST_CASE("rate function enumeration") {
  const LinearSystem system = desk_system();
  const SensorSuite suite = desk_suite();
  const auto fp = centralized_fixed_point(system, suite);
  const GossipTopology topo = GossipTopology::complete(3);
  const auto hc = hitting_constants(dissemination_chain(topo), 1);
  const auto table = WeightTable::from_hitting_constants(hc.alpha, hc.beta, hc.window, 3);
  const Eigen::MatrixXd adjacency = topo.max_adjacency();
  SearchCaps caps;
  caps.max_len = 4;
  caps.max_expansions = 20000;

  SUBCASE("the fixed point itself costs nothing") {
    const auto res = rate_function(fp.P, 1e-6, caps, table, adjacency, system, suite, fp.P);
    CHECK(res.upper == 0.0);
    CHECK(res.lower == 0.0);
    CHECK(res.upper_witness.length() == 0);
  }
  SUBCASE("a one-step image is reached within the single-step weight") {
    const SubsetIndex j = SubsetIndex::of({0, 2}, 3);
    const Eigen::MatrixXd target = riccati_op(system, suite, j, fp.P);
    const auto res = rate_function(target, 1e-9, caps, table, adjacency, system, suite, fp.P);
    double single_step = kInfWeight;
    for (int sensor : j.members()) single_step = std::min(single_step, table.upper(sensor, j));
    CHECK(res.upper <= single_step + 1e-12);
    REQUIRE(res.upper_witness.length() >= 1);
    // Exhaustive length-<=2 check that nothing cheaper reaches the ball.
    double best = kInfWeight;
    for (std::uint32_t b1 = 1; b1 < 8; ++b1) {
      RiccatiString s1{{SubsetIndex(b1, 3)}, fp.P};
      if ((evaluate_string(s1, system, suite) - target).norm() <= 1e-9)
        best = std::min(best, string_weights(s1, table, adjacency).upper);
      for (std::uint32_t b2 = 1; b2 < 8; ++b2) {
        RiccatiString s2{{SubsetIndex(b1, 3), SubsetIndex(b2, 3)}, fp.P};
        if ((evaluate_string(s2, system, suite) - target).norm() <= 1e-9)
          best = std::min(best, string_weights(s2, table, adjacency).upper);
      }
    }
    CHECK(res.upper == doctest::Approx(best));
  }
  SUBCASE("unreachable targets report infinity with the capped flag") {
    const Eigen::MatrixXd far = 1e9 * Eigen::MatrixXd::Identity(2, 2);
    SearchCaps tight = caps;
    tight.max_len = 3;
    const auto res = rate_function(far, 1e-3, tight, table, adjacency, system, suite, fp.P);
    CHECK(res.upper == kInfWeight);
    CHECK(res.capped);
  }
}

TEST_SUITE_END();
