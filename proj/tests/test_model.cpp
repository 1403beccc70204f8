#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lqmarket/model.hpp"
#include "lqmarket/price_response.hpp"
#include "test_support.hpp"

using namespace lqmarket;
using test_support::make_agent;
using test_support::random_agent;
using test_support::random_prices;

TEST_CASE("trajectory recursion on worked cases") {
  {
    const AgentType agent = make_agent(1.0, {-1, -1}, {-1, -1}, {0, 0}, 0.0);
    const Vector states = simulate_trajectory(agent, Vector::Zero(2));
    CHECK(states.isApprox(Vector::Zero(3)));
  }
  {
    const AgentType agent = make_agent(2.0, {-1, -1}, {-1, -1}, {0, 0}, 1.0);
    Vector actions(2);
    actions << 1.0, 1.0;
    Vector expected(3);
    expected << 1.0, 1.0, 1.0;
    CHECK(simulate_trajectory(agent, actions).isApprox(expected));
  }
  {
    const AgentType agent = make_agent(1.0, {-1, -1}, {-1, -1}, {0, 0}, 0.0);
    Vector actions(2);
    actions << 1.0, -1.0;
    Vector expected(3);
    expected << 0.0, -1.0, 0.0;
    CHECK(simulate_trajectory(agent, actions).isApprox(expected));
  }
}

TEST_CASE("trajectory rejects shape mismatches") {
  const AgentType agent = make_agent(1.0, {-1, -1}, {-1, -1}, {0, 0}, 0.0);
  CHECK_THROWS_AS(simulate_trajectory(agent, Vector::Zero(3)), input_error);
  AgentType bad = agent;
  bad.b_coefs = Vector::Constant(2, 0.5);  // wrong sign
  CHECK_THROWS_AS(simulate_trajectory(bad, Vector::Zero(2)), input_error);
}

TEST_CASE("valuation on worked cases") {
  {
    const AgentType agent = make_agent(1.0, {-1, -1}, {-1, -1}, {0, 0}, 0.0);
    CHECK(valuation(agent, Vector::Zero(2)) == doctest::Approx(0.0));
  }
  {
    const AgentType agent = make_agent(1.0, {-1, -1}, {-1, -1}, {1, 1}, 0.0);
    CHECK(valuation(agent, Vector::Zero(2)) == doctest::Approx(-2.0));
  }
}

TEST_CASE("valuation matches a direct re-evaluation on random agents") {
  std::mt19937_64 rng(7001);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 6);
    const AgentType agent = random_agent(rng, k);
    const Vector actions = random_prices(rng, k, -2.0, 2.0);
    // Straight-line recomputation, no shared code with the library path.
    double x = agent.x0;
    double expected = 0.0;
    for (int j = 0; j < k; ++j) {
      x = agent.a_coef * x + agent.b_coefs[j] * actions[j];
      expected += agent.betas[j] * (x - agent.targets[j]) * (x - agent.targets[j]);
    }
    CHECK(valuation(agent, actions) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("utility equals valuation minus payment") {
  const AgentType agent = make_agent(1.0, {-1, -1}, {-1, -1}, {1, 1}, 0.0);
  Vector actions(2), prices(2);
  actions << 1.0, 0.0;
  prices << 1.0, 0.0;
  // States run (0, -1, -1); both periods miss the target by 2.
  CHECK(utility(agent, actions, prices) == doctest::Approx(-9.0));

  CHECK(utility(agent, Vector::Zero(2), prices) ==
        doctest::Approx(valuation(agent, Vector::Zero(2))));
  CHECK(utility(agent, actions, Vector::Zero(2)) ==
        doctest::Approx(valuation(agent, actions)));
}

TEST_CASE("utility decomposition holds to rounding on random agents") {
  std::mt19937_64 rng(7002);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 6);
    const AgentType agent = random_agent(rng, k);
    const Vector actions = random_prices(rng, k, -2.0, 2.0);
    const Vector prices = random_prices(rng, k, -1.0, 2.0);
    const double lhs = utility(agent, actions, prices) + prices.dot(actions);
    const double rhs = valuation(agent, actions);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("valuation is concave in actions") {
  std::mt19937_64 rng(7003);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 6);
    const AgentType agent = random_agent(rng, k);
    const Vector a = random_prices(rng, k, -3.0, 3.0);
    const Vector b = random_prices(rng, k, -3.0, 3.0);
    const double mid = valuation(agent, 0.5 * (a + b));
    const double avg = 0.5 * (valuation(agent, a) + valuation(agent, b));
    CHECK(mid >= avg - 1e-9);
  }
}

TEST_CASE("valuation gradient and hessian match finite differences") {
  std::mt19937_64 rng(7004);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 4);
    const AgentType agent = random_agent(rng, k);
    const Vector actions = random_prices(rng, k, -1.0, 1.0);
    const Vector grad = valuation_gradient(agent, actions);
    const Matrix hess = valuation_hessian(agent);
    const double h = 1e-6;
    for (int j = 0; j < k; ++j) {
      Vector up = actions, down = actions;
      up[j] += h;
      down[j] -= h;
      const double fd = (valuation(agent, up) - valuation(agent, down)) / (2 * h);
      CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-6));
      const Vector gu = valuation_gradient(agent, up);
      const Vector gd = valuation_gradient(agent, down);
      for (int l = 0; l < k; ++l)
        CHECK(hess(l, j) == doctest::Approx((gu[l] - gd[l]) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("aggregate demand sums per-agent responses") {
  std::mt19937_64 rng(7005);
  const int k = 3;
  Vector prices = random_prices(rng, k, 0.0, 1.5);

  BidProfile identical;
  const AgentType agent = random_agent(rng, k);
  for (int i = 0; i < 4; ++i) identical.reports.push_back(agent);
  CHECK(aggregate_demand(identical, prices)
            .isApprox(4.0 * respond(agent, prices), 1e-12));

  BidProfile empty;
  CHECK_THROWS_AS(aggregate_demand(empty, prices), input_error);

  BidProfile mixed;
  for (int i = 0; i < 3; ++i) mixed.reports.push_back(random_agent(rng, k));
  Vector expected = Vector::Zero(k);
  for (const AgentType& r : mixed.reports) expected += respond(r, prices);
  CHECK(aggregate_demand(mixed, prices).isApprox(expected, 1e-12));
}

TEST_CASE("type bounds membership") {
  TypeBounds bounds;
  bounds.validate();
  const AgentType inside = make_agent(1.0, {-1, -1}, {-1, -1}, {0, 0}, 0.0);
  CHECK(bounds.contains(inside));
  AgentType outside = inside;
  outside.a_coef = 5.0;
  CHECK_FALSE(bounds.contains(outside));

  TypeBounds bad = bounds;
  bad.b_hi = 0.5;
  CHECK_THROWS_AS(bad.validate(), input_error);
}
