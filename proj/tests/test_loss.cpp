#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "loss/loss.hpp"
#include "util/io.hpp"

using namespace policysimp;

namespace {

// Frozen from tests/oracle/loss_oracle.py (40-digit evaluation).
struct Frozen {
  const char* name;
  LossVariant variant;
  double margin, pref, nll, total, gate;
};

ScoredPair oracle_pair(const std::string& name) {
  if (name == "worked") return {std::vector<double>(4, -1.0), std::vector<double>(10, -2.0)};
  if (name == "mixed") return {{-0.3, -1.2, -2.5}, {-0.9, -3.1, -0.4, -1.7}};
  ScoredPair p;
  for (int i = 0; i < 12; ++i) p.logp_chosen.push_back(-0.05 * (i + 1));
  for (int i = 0; i < 7; ++i) p.logp_rejected.push_back(-0.2 * (i % 5 + 1));
  return p;
}

const Frozen kFrozen[] = {
    {"worked", LossVariant::CPO, 1.6, 0.18390074088833883, 1.0, 1.1839007408883388, 1.0},
    {"worked", LossVariant::SimPO, -1.4, 1.6204174099184509, 1.0, 1.6204174099184509, 1.0},
    {"worked", LossVariant::CPO_SimPO, -1.4, 1.6204174099184509, 1.0, 2.6204174099184509, 1.0},
    {"worked", LossVariant::ARPO_SimPO, -1.4802183888558582, 1.6852696413344357, 1.0, 2.6852696413344357,
     0.19781611144141825},
    {"mixed", LossVariant::CPO, 0.21, 0.59364958102178372, 1.3333333333333333, 1.926982914355117, 1.0},
    {"mixed", LossVariant::SimPO, -1.4808333333333333, 1.6857706070793837, 1.3333333333333333,
     1.6857706070793837, 1.0},
    {"mixed", LossVariant::CPO_SimPO, -1.4808333333333333, 1.6857706070793837, 1.3333333333333333,
     3.019103940412717, 1.0},
    {"mixed", LossVariant::ARPO_SimPO, -1.4964483863409471, 1.6985105106768904, 1.3333333333333333,
     3.0318438440102237, 0.18530158221145463},
    {"long", LossVariant::CPO, -0.03, 0.70825967634144842, 0.325, 1.0332596763414484, 1.0},
    {"long", LossVariant::SimPO, -1.4810714285714286, 1.6859645871719798, 0.325, 1.6859645871719798, 1.0},
    {"long", LossVariant::CPO_SimPO, -1.4810714285714286, 1.6859645871719798, 0.325, 2.0109645871719798, 1.0},
    {"long", LossVariant::ARPO_SimPO, -1.4964931860833534, 1.6985471141951591, 0.325, 2.0235471141951591,
     0.18526564087944321},
};

LossConfig config(LossVariant v, double gamma = 1.5) {
  LossConfig c;
  c.variant = v;
  c.gamma = gamma;
  return c;
}

ScoredPair random_pair(std::mt19937_64& rng, double lo = -4.0, double hi = -0.05) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::uniform_int_distribution<int> len(1, 12);
  ScoredPair p;
  for (int i = len(rng); i > 0; --i) p.logp_chosen.push_back(u(rng));
  for (int i = len(rng); i > 0; --i) p.logp_rejected.push_back(u(rng));
  return p;
}

}  // namespace

TEST(Loss, MatchesHighPrecisionOracle) {
  for (const Frozen& f : kFrozen) {
    SCOPED_TRACE(std::string(f.name) + " " + std::string(to_string(f.variant)));
    const LossValue v = loss(oracle_pair(f.name), config(f.variant));
    EXPECT_NEAR(v.margin, f.margin, 1e-12);
    EXPECT_NEAR(v.preference_term, f.pref, 1e-12);
    EXPECT_NEAR(v.nll_term, f.nll, 1e-12);
    EXPECT_NEAR(v.total, f.total, 1e-12);
    EXPECT_NEAR(v.gate, f.gate, 1e-12);
  }
}

TEST(Loss, SimpoMarginCases) {
  ScoredPair same{{-1.0, -3.0}, {-2.0, -2.0, -2.0}};
  EXPECT_NEAR(simpo_margin(same, config(LossVariant::SimPO, 0.0)), 0.0, 1e-15);
  const ScoredPair worked = oracle_pair("worked");
  EXPECT_NEAR(simpo_margin(worked, config(LossVariant::SimPO)), 0.1 * (-1.0 + 2.0) - 1.5, 1e-15);
  // Appending tokens at the current mean leaves the margin unchanged.
  ScoredPair longer = worked;
  for (int i = 0; i < 7; ++i) {
    longer.logp_chosen.push_back(-1.0);
    longer.logp_rejected.push_back(-2.0);
  }
  EXPECT_NEAR(simpo_margin(longer, config(LossVariant::SimPO)), simpo_margin(worked, config(LossVariant::SimPO)),
              1e-15);
}

TEST(Loss, SymmetryPointIsLog2) {
  std::mt19937_64 rng(3);
  for (LossVariant v : kAllLossVariants) {
    for (int t = 0; t < 20; ++t) {
      ScoredPair p = random_pair(rng);
      p.logp_rejected = p.logp_chosen;
      EXPECT_NEAR(loss(p, config(v, 0.0)).preference_term, 0.69314718055994531, 1e-12) << to_string(v);
    }
  }
}

TEST(Loss, GradCheckOnRandomConfigurations) {
  // Moderate ranges around the usual beta = 0.1: with saturated CPO margins
  // the true gradient drops below finite-difference round-off.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> beta(0.02, 0.5), gamma(0.0, 3.0), alpha(0.0, 2.0), scale(0.2, 3.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const ScoredPair p = random_pair(rng, -3.0, -0.05);
    LossConfig c;
    c.beta = beta(rng);
    c.gamma = gamma(rng);
    c.alpha = alpha(rng);
    c.rejection_gate_scale = scale(rng);
    for (LossVariant v : kAllLossVariants) {
      c.variant = v;
      worst = std::max(worst, grad_check(p, c, 1e-5));
      worst = std::max(worst, grad_check(p, c, 1e-5, LossTerm::Preference));
    }
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Loss, ConstantDirectionHasZeroDerivative) {
  // Moving mass between two chosen tokens keeps the mean, so SimPO-family
  // losses are flat along e0 - e1.
  const ScoredPair p{{-0.4, -1.9, -0.7}, {-2.2, -0.8}};
  for (LossVariant v : {LossVariant::SimPO, LossVariant::CPO_SimPO, LossVariant::ARPO_SimPO}) {
    const LossGradient g = loss_gradient(p, config(v));
    EXPECT_NEAR(g.d_chosen[0] - g.d_chosen[1], 0.0, 1e-8);
    EXPECT_NEAR(g.d_rejected[0] - g.d_rejected[1], 0.0, 1e-8);
  }
}

TEST(Loss, GammaDerivative) {
  const ScoredPair p = oracle_pair("mixed");
  for (LossVariant v : {LossVariant::SimPO, LossVariant::CPO_SimPO, LossVariant::ARPO_SimPO}) {
    const LossConfig c = config(v, 1.5);
    const double h = 1e-6;
    const double fd =
        (loss(p, config(v, 1.5 + h)).preference_term - loss(p, config(v, 1.5 - h)).preference_term) / (2 * h);
    EXPECT_NEAR(loss_gradient(p, c).d_gamma, fd, 1e-7) << to_string(v);
    if (v != LossVariant::ARPO_SimPO) {
      EXPECT_NEAR(loss_gradient(p, c).d_gamma, sigmoid(-loss(p, c).margin), 1e-14);
      EXPECT_GT(loss_gradient(p, c).d_gamma, 0.0);
    }
  }
}

TEST(Loss, MonotoneAndPositive) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 200; ++t) {
    const ScoredPair p = random_pair(rng);
    for (LossVariant v : kAllLossVariants) {
      const LossConfig c = config(v);
      const LossValue base = loss(p, c);
      EXPECT_GT(base.preference_term, 0.0);
      for (std::size_t i = 0; i < p.logp_chosen.size(); ++i) {
        ScoredPair q = p;
        q.logp_chosen[i] = std::min(0.0, q.logp_chosen[i] + 0.01);
        EXPECT_LE(loss(q, c).total, base.total + 1e-12);
      }
      for (std::size_t i = 0; i < p.logp_rejected.size(); ++i) {
        ScoredPair q = p;
        q.logp_rejected[i] = std::min(0.0, q.logp_rejected[i] + 0.01);
        EXPECT_GE(loss(q, c).preference_term, base.preference_term - 1e-12);
      }
    }
  }
}

TEST(Loss, LargeMarginLimit) {
  const ScoredPair p{{-0.01}, {-400.0}};
  LossConfig c = config(LossVariant::SimPO, 0.0);
  c.beta = 1.0;
  EXPECT_LT(loss(p, c).preference_term, 1e-100);
  c.variant = LossVariant::CPO;
  EXPECT_LT(loss(p, c).preference_term, 1e-100);
}

TEST(Loss, GateTendsToSimpoAsRejectedCollapses) {
  const std::vector<double> w = {-1.0, -1.2};
  double prev_gap = 1e9;
  for (double ml : {-80.0, -160.0, -320.0, -640.0}) {
    const ScoredPair p{w, {ml, ml}};
    const double arpo = loss(p, config(LossVariant::ARPO_SimPO)).preference_term;
    const double simpo = loss(p, config(LossVariant::SimPO)).preference_term;
    const double gap = std::abs(arpo - simpo);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 1e-12);
  EXPECT_NEAR(loss(ScoredPair{w, {-640.0, -640.0}}, config(LossVariant::ARPO_SimPO)).gate, 1.0, 1e-12);
}

TEST(Loss, GateDampsRejectedGradientForNearEqualPairs) {
  // Two probe points where the rejected response is only slightly worse.
  const ScoredPair probes[] = {{{-1.0, -1.1}, {-1.2, -1.1}}, {{-2.0, -0.5, -1.5}, {-1.4, -1.8}}};
  for (const ScoredPair& p : probes) {
    auto fd_rejected = [&](LossVariant v) {
      const double h = 1e-6;
      double g = 0.0;
      for (std::size_t i = 0; i < p.logp_rejected.size(); ++i) {
        ScoredPair hi = p, lo = p;
        hi.logp_rejected[i] += h;
        lo.logp_rejected[i] -= h;
        g += (loss(hi, config(v)).preference_term - loss(lo, config(v)).preference_term) / (2 * h);
      }
      return std::abs(g);
    };
    EXPECT_LT(fd_rejected(LossVariant::ARPO_SimPO), fd_rejected(LossVariant::SimPO));
  }
}

TEST(Loss, Validation) {
  EXPECT_THROW(loss(ScoredPair{{}, {-1.0}}, LossConfig{}), Error);
  EXPECT_THROW(loss(ScoredPair{{0.5}, {-1.0}}, LossConfig{}), Error);
  EXPECT_THROW(loss(ScoredPair{{-1.0}, {NAN}}, LossConfig{}), Error);
  LossConfig bad;
  bad.beta = 0.0;
  EXPECT_THROW(loss(ScoredPair{{-1.0}, {-1.0}}, bad), Error);
  EXPECT_THROW(grad_check(ScoredPair{{-1.0}, {-1.0}}, LossConfig{}, 1e-2), Error);
  EXPECT_EQ(parse_loss_variant("ARPO_SimPO"), LossVariant::ARPO_SimPO);
  EXPECT_THROW(parse_loss_variant("DPO"), Error);
}

TEST(ToyModel, GradientDescentRaisesChosenLikelihood) {
  const std::vector<int> chosen = {1, 3, 2, 5};
  const std::vector<int> rejected = {4, 0, 2, 2, 6, 1};
  for (LossVariant v : kAllLossVariants) {
    ToySoftmaxModel m(8, 6, 99);
    const double start = m.mean_logp(chosen);
    const double start_margin = loss(m.score(chosen, rejected), config(v)).margin;
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 200; ++i) {
      const LossValue lv = m.step(chosen, rejected, config(v), 0.5);
      if (i == 0) first = lv.total;
      if (i > 10) EXPECT_LT(lv.total, last) << to_string(v) << " step " << i;
      last = lv.total;
    }
    EXPECT_GT(m.mean_logp(chosen), start) << to_string(v);
    EXPECT_LT(last, first) << to_string(v);
    EXPECT_GT(loss(m.score(chosen, rejected), config(v)).margin, start_margin) << to_string(v);
  }
}

TEST(LossCheck, ReadsPairsAndReportsEveryVariant) {
  const auto dir = std::filesystem::temp_directory_path() / "psimp_loss_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "pairs.jsonl",
                    "{\"id\":\"a\",\"chosen\":[-1,-1,-1,-1],\"rejected\":[-2,-2,-2,-2,-2,-2,-2,-2,-2,-2]}\n"
                    "{\"chosen\":[-0.3,-1.2,-2.5],\"rejected\":[-0.9,-3.1,-0.4,-1.7]}\n");
  const auto pairs = read_scored_pairs(dir / "pairs.jsonl");
  ASSERT_EQ(pairs.size(), 2u);
  const auto rows = loss_check(pairs, LossConfig{});
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_NEAR(rows[2].value.total, 2.6204174099184509, 1e-12);
  for (const auto& r : rows) EXPECT_LE(r.grad_error, 1e-4);
  write_file_atomic(dir / "bad.jsonl", "{\"chosen\":[0.5],\"rejected\":[-1]}\n");
  try {
    read_scored_pairs(dir / "bad.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
  }
  std::filesystem::remove_all(dir);
}
