#pragma once

// Reference-free preference losses on explicit per-token log-probabilities.
//
//   mu_w, mu_l   mean log-prob of the chosen / rejected response
//   S_w, S_l     summed log-prob
//
//   CPO          m = beta (S_w - S_l)                    total = pref + alpha nll
//   SimPO        m = beta (mu_w - mu_l) - gamma          total = pref
//   CPO_SimPO    m = beta (mu_w - mu_l) - gamma          total = pref + alpha nll
//   ARPO_SimPO   m = g beta (mu_w - mu_l) - gamma,       total = pref + alpha nll
//                g = sigmoid(s m0), m0 the SimPO margin
//
// pref = -log sigmoid(m), nll = -mu_w. ARPO_SimPO is an adaptive rejection
// gate of our own: the rejected side's distance from the chosen side is
// scaled by g, so a rejected response that is only marginally worse (m0
// small) is pushed down less. As mu_l falls g -> 1 and the SimPO margin is
// recovered. Gradients flow through the gate.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace policysimp {

enum class LossVariant { CPO, SimPO, CPO_SimPO, ARPO_SimPO };
inline constexpr LossVariant kAllLossVariants[] = {LossVariant::CPO, LossVariant::SimPO, LossVariant::CPO_SimPO,
                                                   LossVariant::ARPO_SimPO};

std::string_view to_string(LossVariant v) noexcept;
LossVariant parse_loss_variant(std::string_view s);

struct ScoredPair {
  std::vector<double> logp_chosen;
  std::vector<double> logp_rejected;

  // Precondition unless both are non-empty with finite entries <= 0.
  void validate() const;
};

struct LossConfig {
  double beta = 0.1;
  double gamma = 1.5;
  double alpha = 1.0;
  LossVariant variant = LossVariant::CPO_SimPO;
  double rejection_gate_scale = 1.0;

  void validate() const;
};

double simpo_margin(const ScoredPair& pair, const LossConfig& cfg);

struct LossValue {
  double total = 0.0;
  double preference_term = 0.0;
  double nll_term = 0.0;  // -mean(logp_chosen), before alpha
  double gate = 1.0;      // 1 unless ARPO_SimPO
  double margin = 0.0;
};

LossValue loss(const ScoredPair& pair, const LossConfig& cfg);

enum class LossTerm { Total, Preference };

struct LossGradient {
  std::vector<double> d_chosen;
  std::vector<double> d_rejected;
  double d_gamma = 0.0;
};

LossGradient loss_gradient(const ScoredPair& pair, const LossConfig& cfg, LossTerm term = LossTerm::Total);

// max over entries of |g_analytic - g_fd| / (|g_fd| + 1e-12), central
// differences with step `epsilon` in (1e-8, 1e-3).
double grad_check(const ScoredPair& pair, const LossConfig& cfg, double epsilon, LossTerm term = LossTerm::Total);

double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

// A position-wise softmax table: logp(y_t) = theta[t][y_t] - logsumexp(theta[t]).
class ToySoftmaxModel {
 public:
  ToySoftmaxModel(int vocab, int max_len, std::uint64_t seed);

  std::vector<double> token_logps(const std::vector<int>& tokens) const;
  double mean_logp(const std::vector<int>& tokens) const;
  ScoredPair score(const std::vector<int>& chosen, const std::vector<int>& rejected) const;

  // One gradient-descent step on the pair; returns the loss before the step.
  LossValue step(const std::vector<int>& chosen, const std::vector<int>& rejected, const LossConfig& cfg,
                 double learning_rate);

 private:
  int vocab_;
  int max_len_;
  std::vector<double> theta_;  // max_len x vocab
};

struct LossCheckRow {
  std::size_t pair_index = 0;
  LossVariant variant = LossVariant::CPO;
  LossValue value;
  double grad_error = 0.0;
};

// One JSON object per line: {"chosen": [...], "rejected": [...]}; other keys
// are ignored.
std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& path);

// Every variant on every pair, using cfg's hyper-parameters.
std::vector<LossCheckRow> loss_check(const std::vector<ScoredPair>& pairs, const LossConfig& cfg,
                                     double epsilon = 1e-5);

}  // namespace policysimp
