#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lpbias/error.hpp"
#include "lpbias/stats/spearman.hpp"
#include "oracles.hpp"

using namespace lpbias;
using namespace lpbias::stats;

TEST(Spearman, MonotoneOrders) {
  std::vector<double> x{1, 2, 3}, y{10, 20, 30}, z{3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, y).rho, 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, z).rho, -1.0);
  EXPECT_EQ(spearman(x, y).p_value, 0.0);
}

TEST(Spearman, AverageRanks) {
  std::vector<double> v{10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, RandomAgainstOracle) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(50), y(50);
    for (auto& v : x) v = nd(gen);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.3 * x[i] + nd(gen);
    EXPECT_NEAR(spearman(x, y).rho, oracle::spearman(x, y), 1e-12);
  }
}

TEST(Spearman, TiesAgainstOracle) {
  std::mt19937_64 gen(22);
  std::uniform_int_distribution<int> small(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(20), y(20);
    for (auto& v : x) v = small(gen);
    for (auto& v : y) v = small(gen);
    if (oracle::ranks(x) == std::vector<double>(20, 10.5) ||
        oracle::ranks(y) == std::vector<double>(20, 10.5))
      continue;
    EXPECT_NEAR(spearman(x, y).rho, oracle::spearman(x, y), 1e-12);
  }
}

TEST(Spearman, MonotoneTransformInvariant) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  std::vector<double> x(30), y(30), fx(30);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = nd(gen);
    y[i] = x[i] + nd(gen);
    fx[i] = std::exp(3 * x[i]) + 7;
  }
  EXPECT_NEAR(spearman(x, y).rho, spearman(fx, y).rho, 1e-15);
}

TEST(Spearman, PValueMatchesTDistribution) {
  // r = 0.5, n = 12: t = 0.5 * sqrt(10 / 0.75) = 1.8257, two-sided p = 0.09785.
  EXPECT_NEAR(correlation_t_pvalue(0.5, 12), 0.0978546142578125, 1e-10);
  EXPECT_NEAR(correlation_t_pvalue(0.0, 12), 1.0, 1e-12);
}

TEST(Spearman, ConstantInputUndefined) {
  std::vector<double> x{1, 1, 1, 1}, y{1, 2, 3, 4};
  EXPECT_THROW(spearman(x, y), UndefinedCorrelationError);
  EXPECT_THROW(spearman(y, x), UndefinedCorrelationError);
}

TEST(Spearman, ShapeErrors) {
  std::vector<double> x{1, 2}, y{1, 2}, z{1, 2, 3};
  EXPECT_THROW(spearman(x, y), ValidationError);
  EXPECT_THROW(spearman(x, z), ValidationError);
}

TEST(Spearman, BoundedInUnitInterval) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(5), y(5);
    for (auto& v : x) v = u(gen);
    for (auto& v : y) v = u(gen);
    auto c = spearman(x, y);
    EXPECT_LE(std::abs(c.rho), 1.0);
    EXPECT_GE(c.p_value, 0.0);
    EXPECT_LE(c.p_value, 1.0);
  }
}
