#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "edt/admission.hpp"
#include "edt/fading_solver.hpp"
#include "edt/model.hpp"
#include "fixtures.hpp"

using namespace edt;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("power policy walks capped, normal and underuse regimes") {
  ChannelModel ch = test::reference_channel(0.2);
  DeviceParams g1 = catalog_device("g1");
  double h0 = ch.mean_gain(g1.distance);
  double tau = 0.01, e = 0.095;
  double theta_tx = fading_threshold(ch.pr_tx, ch.fading);

  auto capped = power_policy_at(theta_tx, tau, e, g1, h0, ch.w);
  REQUIRE(capped.has_value());
  CHECK(capped->regime == PolicyRegime::capped);
  CHECK(capped->power == g1.radio.p_max);
  CHECK(capped->l_bits ==
        doctest::Approx(tau * shannon_rate(h0 * theta_tx, g1.radio.p_max, ch.w))
            .epsilon(1e-12));

  auto normal = power_policy_at(3.0, tau, e, g1, h0, ch.w);
  REQUIRE(normal.has_value());
  CHECK(normal->regime == PolicyRegime::normal);
  CHECK(normal->power > g1.radio.p_min);
  CHECK(normal->power < g1.radio.p_max);
  // the budget is exhausted at the reported point
  double spend = g1.compression.e0_alpha * normal->l_bits + g1.radio.beta_const +
                 (normal->power / g1.radio.eta_a + g1.radio.e_c_rate) * tau;
  CHECK(spend == doctest::Approx(e).epsilon(1e-6));

  auto under = power_policy_at(12.0, tau, e, g1, h0, ch.w);
  REQUIRE(under.has_value());
  CHECK(under->regime == PolicyRegime::underuse);
  CHECK(under->power == g1.radio.p_min);
  // leftover processing budget converted to bits at the slope
  CHECK(under->l_bits == doctest::Approx(1811967.2413793104).epsilon(1e-9));

  // below the constant slot cost there is no admissible point at all
  CHECK(!power_policy_at(3.0, tau, 0.004, g1, h0, ch.w).has_value());
  CHECK_THROWS_AS(power_policy_at(-1.0, tau, e, g1, h0, ch.w), std::domain_error);
  CHECK_THROWS_AS(power_policy_at(1.0, 0.0, e, g1, h0, ch.w), std::domain_error);
}

TEST_CASE("realized distortion is non-increasing in the channel state") {
  ChannelModel ch = test::reference_channel(0.2);
  DeviceParams g1 = catalog_device("g1");
  double h0 = ch.mean_gain(g1.distance);
  double prev = kInf;
  for (double th = 1.61; th < 16.0; th += 0.05) {
    auto d = realized_distortion(th, 0.01, 0.095, g1, h0, ch.w);
    REQUIRE(d.has_value());
    CHECK(*d <= prev + 1e-9);
    prev = *d;
  }
}

TEST_CASE("expected distortion agrees with an independent monte carlo") {
  SolverConfig cfg;

  ChannelModel ch02 = test::reference_channel(0.2);
  DeviceParams g1 = catalog_device("g1");
  auto e1 = expected_distortion(0.01, 0.095, g1, ch02, cfg);
  REQUIRE(e1.has_value());
  // frozen 4e5-sample mc with an exact policy replica: 0.89198154 +/- 9.6e-5
  CHECK(std::fabs(e1->value - 0.8919815351687648) <= 4.8e-4);
  CHECK(e1->error <= 1e-3);

  ChannelModel ch06 = test::reference_channel(0.6);
  DeviceParams g2 = catalog_device("g2");
  auto e2 = expected_distortion(0.008, 0.054, g2, ch06, cfg);
  REQUIRE(e2.has_value());
  // frozen mc: 0.019928344 +/- 5.1e-5
  CHECK(std::fabs(e2->value - 0.01992834365247968) <= 2.6e-4);

  // policy windows are ordered and bracket the admissible states
  const PowerPolicy& pp = e2->policy;
  CHECK(pp.theta_tx <= pp.theta_a);
  CHECK(pp.theta_a <= pp.theta_b);
  CHECK(pp.theta_b <= pp.theta_cap);
  CHECK(!pp.at(pp.theta_tx * 0.5, cfg).has_value());

  // more energy can only help
  auto e3 = expected_distortion(0.008, 0.058, g2, ch06, cfg);
  REQUIRE(e3.has_value());
  CHECK(e3->value <= e2->value + 1e-9);

  // starving the slot below the constant cost yields no policy
  CHECK(!expected_distortion(0.01, 0.004, g1, ch02, cfg).has_value());
}

TEST_CASE("node plan window, minima and determinism") {
  SolverConfig cfg;
  ChannelModel ch = test::reference_channel(0.6);
  DeviceParams g2 = catalog_device("g2");

  NodeFadingPlan plan(g2, ch, 1.0, 0.054, cfg);
  REQUIRE(plan.feasible());
  REQUIRE(plan.tau_low() > 0.0);
  REQUIRE(plan.tau_high() <= 1.0);
  REQUIRE(plan.tau_low() < plan.tau_high());

  // the hard bound is unimodal over the window: one descent, one ascent
  int sign_changes = 0;
  double prev = plan.hard_bound_at(plan.tau_low());
  bool rising = false;
  for (int i = 1; i <= 200; ++i) {
    double t = plan.tau_low() +
               (plan.tau_high() - plan.tau_low()) * i / 200.0;
    double cur = plan.hard_bound_at(t);
    if (cur > prev * (1.0 + 1e-9) + 1e-12 && !rising) {
      rising = true;
      ++sign_changes;
    }
    if (rising) CHECK(cur >= prev * (1.0 - 1e-9) - 1e-12);
    prev = cur;
  }
  CHECK(sign_changes <= 1);

  // grid minimum below a cap: value really is the least expected distortion seen
  auto mm = plan.min_mean_up_to(plan.tau_high());
  CHECK(mm.value < g2.d_th);
  CHECK(mm.tau >= plan.tau_low());
  CHECK(mm.tau <= plan.tau_high());
  CHECK(plan.expected_at(mm.tau) == doctest::Approx(mm.value).epsilon(1e-9));

  // a cap below the window start answers +inf by contract
  auto none = plan.min_mean_up_to(plan.tau_low() * 0.5);
  CHECK(none.value == kInf);

  // smallest tau reaching a target: meets it, and no earlier grid point does
  double target = mm.value * 1.5;
  auto t_star = plan.smallest_tau(target);
  REQUIRE(t_star.has_value());
  CHECK(plan.expected_at(*t_star) <= target * (1.0 + 1e-6));
  for (int i = 0; i < 8; ++i) {
    double t = plan.tau_low() + (*t_star - plan.tau_low()) * i / 8.0;
    if (t < *t_star * (1.0 - 1e-9))
      CHECK(plan.expected_at(t) >= target * (1.0 - 1e-6));
  }

  // identical parameters, different query order: identical answers
  NodeFadingPlan p1(g2, ch, 1.0, 0.054, cfg);
  NodeFadingPlan p2(g2, ch, 1.0, 0.054, cfg);
  auto a1 = p1.smallest_tau(target);
  auto b1 = p1.min_mean_up_to(0.5);
  auto b2 = p2.min_mean_up_to(0.5);
  auto a2 = p2.smallest_tau(target);
  REQUIRE(a1.has_value());
  REQUIRE(a2.has_value());
  CHECK(*a1 == *a2);
  CHECK(b1.index == b2.index);
  CHECK(b1.value == b2.value);

  // an unfundable budget is reported, not solved
  NodeFadingPlan broke(g2, ch, 1.0, 1e-4, cfg);
  CHECK(!broke.feasible());
  CHECK(!broke.infeasible_reason().empty());
}

TEST_CASE("statistical frame solve meets targets and matches its plan variant") {
  SolverConfig cfg;
  ChannelModel ch = test::reference_channel(0.6);
  auto devs = test::reference_devices();
  std::vector<double> energies{0.095, 0.054, 0.0033};

  FrameSolution sol = solve_frame_statistical(energies, devs, ch, 1.0, cfg);
  REQUIRE(sol.feasible);
  CHECK(sol.gamma_star >= 0.0);
  CHECK(sol.gamma_star <= 1.0);
  CHECK(sol.tau_total <= 1.0 + 1e-12);
  for (std::size_t i = 0; i < devs.size(); ++i) {
    CHECK(sol.nodes[i].distortion <=
          sol.gamma_star * devs[i].d_th * (1 + 1e-6) + 1e-12);
    CHECK(sol.nodes[i].e_used <= energies[i] * (1 + 1e-9));
  }

  std::vector<NodeFadingPlan> storage;
  storage.reserve(devs.size());
  std::vector<NodeFadingPlan*> plans;
  for (std::size_t i = 0; i < devs.size(); ++i) {
    storage.emplace_back(devs[i], ch, 1.0, energies[i], cfg);
    plans.push_back(&storage.back());
  }
  FrameSolution via_plans =
      solve_frame_statistical_with_plans(plans, devs, ch, 1.0, cfg);
  REQUIRE(via_plans.feasible);
  CHECK(via_plans.gamma_star == doctest::Approx(sol.gamma_star).epsilon(1e-12));
  CHECK(via_plans.tau_total == doctest::Approx(sol.tau_total).epsilon(1e-12));

  // one-shot tau query agrees with the plan it wraps
  auto t = tau_search(sol.gamma_star, energies[1], devs[1], ch, 1.0, cfg);
  REQUIRE(t.has_value());
  CHECK(*t <= 1.0);
}

TEST_CASE("minimum slot literals for every mode") {
  auto devs = test::reference_devices();

  ChannelModel full = test::reference_channel(0.2);
  CHECK(min_transmission_time(devs[0], full, CsiMode::full_csi) ==
        doctest::Approx(0.0044649516758209174).epsilon(1e-9));
  CHECK(min_transmission_time(devs[1], full, CsiMode::full_csi) ==
        doctest::Approx(0.0015458856468368466).epsilon(1e-9));
  CHECK(min_transmission_time(devs[2], full, CsiMode::full_csi) ==
        doctest::Approx(7.091077966898783e-05).epsilon(1e-9));

  ChannelModel ch06 = test::reference_channel(0.6);
  CHECK(min_transmission_time(devs[0], ch06, CsiMode::statistical) ==
        doctest::Approx(0.004595492115042727).epsilon(1e-9));
  CHECK(min_transmission_time(devs[1], ch06, CsiMode::statistical) ==
        doctest::Approx(0.0016057626290538834).epsilon(1e-9));
  CHECK(min_transmission_time(devs[2], ch06, CsiMode::statistical) ==
        doctest::Approx(7.527562796183788e-05).epsilon(1e-9));

  ChannelModel ch02 = test::reference_channel(0.2);
  CHECK(min_transmission_time(devs[0], ch02, CsiMode::statistical) ==
        doctest::Approx(0.00437686993343287).epsilon(1e-9));
  CHECK(min_transmission_time(devs[2], ch02, CsiMode::statistical) ==
        doctest::Approx(6.811273375531507e-05).epsilon(1e-9));

  // the conservative mode plans at the same worst admissible gain
  for (const auto& d : devs)
    CHECK(min_transmission_time(d, ch06, CsiMode::suboptimal) ==
          min_transmission_time(d, ch06, CsiMode::statistical));
}
