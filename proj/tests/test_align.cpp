#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <random>

#include "align/aligner.hpp"
#include "align/ot.hpp"
#include "core/error.hpp"
#include "util/io.hpp"
#include "support/ot_oracle.hpp"

using namespace policysimp;
using testsupport::lp_optimum_3x3;
using testsupport::transport_cost;

namespace {

Matrix mat(std::size_t r, std::size_t c, std::initializer_list<double> v) {
  Matrix m(r, c);
  std::copy(v.begin(), v.end(), m.data.begin());
  return m;
}

OtConfig balanced(double eps = 0.1) {
  OtConfig c;
  c.tau = 1.0;
  c.entropic_reg = eps;
  return c;
}

Matrix random_cost(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Matrix c(n, m);
  for (auto& x : c.data) x = u(rng);
  return c;
}

}  // namespace

TEST(CostMatrix, CosineCases) {
  const auto c = cost_matrix({{1, 0}, {0, 2}}, {{2, 0}, {0, 1}, {-1, 0}});
  EXPECT_DOUBLE_EQ(c(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(c(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(c(0, 2), 2.0);
  EXPECT_DOUBLE_EQ(c(1, 1), 0.0);
  EXPECT_EQ(c.rows, 2u);
  EXPECT_EQ(c.cols, 3u);
}

TEST(CostMatrix, Errors) {
  try {
    cost_matrix({{1, 0}}, {{1, 0, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  try {
    cost_matrix({{0, 0}}, {{1, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
  EXPECT_THROW(cost_matrix({}, {{1.0}}), Error);
}

TEST(Sinkhorn, SingleCell) {
  const auto r = sinkhorn_unbalanced(mat(1, 1, {0.3}), balanced());
  EXPECT_NEAR(r.plan(0, 0), 1.0, 1e-12);
  EXPECT_TRUE(r.converged);
}

// Feasible plans are [[p, 1/2 - p], [1/2 - p, p]] with cost 1 - 2p, so the LP
// optimum is p = 1/2. With entropy the duals are symmetric and
// p / (1/2 - p) = exp(1/eps).
TEST(Sinkhorn, TwoByTwoFamily) {
  const Matrix c = mat(2, 2, {0, 1, 1, 0});
  double lp_best_p = 0.0, lp_best = 1e9;
  for (int k = 0; k <= 1000; ++k) {
    const double p = 0.5 * k / 1000.0;
    if (1.0 - 2.0 * p < lp_best) lp_best = 1.0 - 2.0 * p, lp_best_p = p;
  }
  double prev_gap = 1.0;
  for (double eps : {1.0, 0.3, 0.1, 0.03, 0.01}) {
    const auto r = sinkhorn_unbalanced(c, balanced(eps));
    const double expected = 0.5 / (1.0 + std::exp(-1.0 / eps));
    EXPECT_NEAR(r.plan(0, 0), expected, 1e-9) << eps;
    EXPECT_GT(r.plan(0, 0), r.plan(0, 1));
    EXPECT_NEAR(r.plan(1, 1), r.plan(0, 0), 1e-9);
    const double gap = std::abs(r.plan(0, 0) - lp_best_p);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 1e-12);
}

TEST(Sinkhorn, MatchesLpOptimumOnRandom3x3) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Matrix c = random_cost(rng, 3, 3);
    const auto r = sinkhorn_unbalanced(c, balanced(1e-4));
    EXPECT_NEAR(transport_cost(c, r.plan), lp_optimum_3x3(c), 1e-3);
  }
}

TEST(Sinkhorn, BalancedMarginalsFeasible) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto r = sinkhorn_unbalanced(random_cost(rng, 10, 12), balanced());
    ASSERT_TRUE(r.converged);
    for (std::size_t i = 0; i < 10; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 12; ++j) s += r.plan(i, j);
      EXPECT_NEAR(s, 0.1, 1e-6);
    }
    for (std::size_t j = 0; j < 12; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < 10; ++i) s += r.plan(i, j);
      EXPECT_NEAR(s, 1.0 / 12.0, 1e-6);
    }
  }
}

TEST(Sinkhorn, UnbalancedMassAndNullMass) {
  std::mt19937_64 rng(5);
  OtConfig cfg;  // tau 0.88
  for (int t = 0; t < 50; ++t) {
    const auto solved = sinkhorn_unbalanced(random_cost(rng, 6, 9), cfg);
    double total = 0.0;
    for (double v : solved.plan.data) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_LE(total, 1.0 + 1e-12);
    const auto res = extract_links(solved, cfg);
    for (std::size_t i = 0; i < 6; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < 9; ++j) row += solved.plan(i, j);
      EXPECT_NEAR(row + res.null_mass[i], 1.0 / 6.0, 1e-12);
    }
  }
}

TEST(Sinkhorn, TransposeSymmetry) {
  std::mt19937_64 rng(6);
  for (double tau : {1.0, 0.88}) {
    OtConfig cfg;
    cfg.tau = tau;
    cfg.convergence_eps = 1e-13;
    cfg.max_iters = 5000;
    for (int t = 0; t < 20; ++t) {
      const Matrix c = random_cost(rng, 4, 7);
      std::vector<double> a = {0.1, 0.2, 0.3, 0.4};
      std::vector<double> b(7, 1.0 / 7.0);
      const auto p = sinkhorn_unbalanced(c, a, b, cfg).plan;
      const auto q = sinkhorn_unbalanced(c.transposed(), b, a, cfg).plan.transposed();
      for (std::size_t k = 0; k < p.data.size(); ++k) EXPECT_NEAR(p.data[k], q.data[k], 1e-9);
    }
  }
}

TEST(Sinkhorn, NonConvergenceIsFlaggedNotThrown) {
  OtConfig cfg = balanced(1e-3);
  cfg.max_iters = 1;
  std::mt19937_64 rng(7);
  const auto r = sinkhorn_unbalanced(random_cost(rng, 5, 5), cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(r.non_convergence);
  EXPECT_EQ(r.plan.rows, 5u);
  EXPECT_FALSE(extract_links(r, cfg).converged);
}

TEST(Sinkhorn, LengthNormalizedMarginals) {
  const auto [a, b] = marginals(2, 4, MarginalMode::LengthNormalized);
  EXPECT_EQ(a, std::vector<double>(2, 0.25));
  EXPECT_EQ(b, std::vector<double>(4, 0.25));
  OtConfig cfg;
  cfg.marginal_mode = MarginalMode::LengthNormalized;
  Matrix c(2, 4, 0.5);
  EXPECT_NO_THROW(sinkhorn_unbalanced(c, cfg));
  cfg.tau = 1.0;
  EXPECT_THROW(sinkhorn_unbalanced(c, cfg), Error);
}

TEST(Sinkhorn, RejectsBadInput) {
  EXPECT_THROW(sinkhorn_unbalanced(mat(1, 2, {0.1, -0.1}), balanced()), Error);
  EXPECT_THROW(sinkhorn_unbalanced(mat(1, 1, {NAN}), balanced()), Error);
  OtConfig bad;
  bad.tau = 0.0;
  EXPECT_THROW(sinkhorn_unbalanced(mat(1, 1, {0.1}), bad), Error);
}

TEST(Links, Basics) {
  EXPECT_TRUE(threshold_links(Matrix(3, 3, 0.0), 0.4).empty());
  const Matrix dominant = mat(2, 2, {0.9, 0.01, 0.02, 0.03});
  EXPECT_EQ(threshold_links(dominant, 0.4), (std::vector<std::pair<int, int>>{{0, 0}}));
  const Matrix sparse = mat(2, 2, {0.5, 0.0, 1e-9, 0.2});
  EXPECT_EQ(threshold_links(sparse, 0.0), (std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {1, 1}}));
}

TEST(LinksProperty, MonotoneAndScaleInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int t = 0; t < 1000; ++t) {
    Matrix p(dim(rng), dim(rng));
    for (auto& x : p.data) x = u(rng) < 0.2 ? 0.0 : u(rng);
    const double lo = u(rng), hi = lo + (1.0 - lo) * u(rng);
    const auto l_lo = threshold_links(p, lo);
    const auto l_hi = threshold_links(p, hi);
    EXPECT_TRUE(std::includes(l_lo.begin(), l_lo.end(), l_hi.begin(), l_hi.end()));
    Matrix scaled = p;
    const double k = std::exp(8.0 * (u(rng) - 0.5));
    for (auto& x : scaled.data) x *= k;
    EXPECT_EQ(threshold_links(scaled, 0.40), threshold_links(p, 0.40));
  }
}

TEST(Format, EmptyAndOrdered) {
  AlignmentResult r;
  r.source_tokens = {"the", "big", "dog"};
  r.candidate_tokens = {"a", "dog"};
  EXPECT_EQ(format_alignment_for_judge(r), "no aligned pairs");
  r.links = {{2, 1}, {0, 0}};
  EXPECT_EQ(format_alignment_for_judge(r), "the <-> a\ndog <-> dog");
}

namespace {

// Embeddings: each distinct token gets a pseudo-random unit direction derived
// from its hash, so equal tokens get equal vectors.
class HashEmbedTransport : public Transport {
 public:
  HttpResponse post(const EndpointProfile&, const std::string&, const Json& body, int) override {
    Json data = Json::array();
    int idx = 0;
    for (const auto& t : body["input"]) {
      const std::string h = sha256_hex(t.get<std::string>());
      std::vector<double> v;
      for (int k = 0; k < 16; ++k) v.push_back(std::stoi(h.substr(static_cast<std::size_t>(2 * k), 2), nullptr, 16) - 127.5);
      data.push_back(Json{{"index", idx++}, {"embedding", v}});
    }
    return {200, Json{{"data", data}}.dump()};
  }
};

}  // namespace

TEST(AlignTexts, IdenticalSentenceAlignsToItself) {
  Gateway gw(std::make_shared<HashEmbedTransport>());
  EndpointProfile emb;
  emb.model_name = "embedder";
  const std::string s = "Volcanic eruptions can change the global climate dramatically.";
  const auto r = align_texts(gw, emb, s, s, OtConfig{});
  const std::size_t n = r.source_tokens.size();
  ASSERT_EQ(n, 9u);
  ASSERT_EQ(r.links.size(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(r.links[i], (std::pair<int, int>(static_cast<int>(i), static_cast<int>(i))));
  const std::string text = format_alignment_for_judge(r);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(n - 1));
  EXPECT_EQ(text.substr(0, 22), "volcanic <-> volcanic\n");
}
