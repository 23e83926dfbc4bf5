#include "loss/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "core/error.hpp"
#include "core/serialize.hpp"
#include "util/io.hpp"

namespace policysimp {

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

bool adds_nll(LossVariant v) { return v != LossVariant::SimPO; }

struct Forward {
  double margin = 0.0;
  double gate = 1.0;
  // dm/dmu_w, dm/dmu_l (or dS for CPO), dm/dgamma
  double dm_dw = 0.0;
  double dm_dl = 0.0;
  double dm_dgamma = 0.0;
};

Forward forward(const ScoredPair& p, const LossConfig& c) {
  Forward f;
  const double b = c.beta;
  switch (c.variant) {
    case LossVariant::CPO:
      f.margin = b * (sum(p.logp_chosen) - sum(p.logp_rejected));
      f.dm_dw = b;
      f.dm_dl = -b;
      break;
    case LossVariant::SimPO:
    case LossVariant::CPO_SimPO:
      f.margin = simpo_margin(p, c);
      f.dm_dw = b;
      f.dm_dl = -b;
      f.dm_dgamma = -1.0;
      break;
    case LossVariant::ARPO_SimPO: {
      const double delta = mean(p.logp_chosen) - mean(p.logp_rejected);
      const double s = c.rejection_gate_scale;
      const double g = sigmoid(s * (b * delta - c.gamma));
      const double dg_dm0 = s * g * (1.0 - g);
      f.gate = g;
      f.margin = g * b * delta - c.gamma;
      const double dm_ddelta = g * b + b * delta * dg_dm0 * b;
      f.dm_dw = dm_ddelta;
      f.dm_dl = -dm_ddelta;
      f.dm_dgamma = -1.0 - b * delta * dg_dm0;
      break;
    }
  }
  return f;
}

}  // namespace

std::string_view to_string(LossVariant v) noexcept {
  switch (v) {
    case LossVariant::CPO:
      return "CPO";
    case LossVariant::SimPO:
      return "SimPO";
    case LossVariant::CPO_SimPO:
      return "CPO_SimPO";
    case LossVariant::ARPO_SimPO:
      return "ARPO_SimPO";
  }
  return "?";
}

LossVariant parse_loss_variant(std::string_view s) {
  for (LossVariant v : kAllLossVariants)
    if (to_string(v) == s) return v;
  throw Error(ErrorCode::Config, "unknown loss variant '" + std::string(s) + "'");
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void ScoredPair::validate() const {
  if (logp_chosen.empty() || logp_rejected.empty())
    throw Error(ErrorCode::Precondition, "scored pair with an empty sequence");
  for (const auto* seq : {&logp_chosen, &logp_rejected})
    for (double x : *seq)
      if (!std::isfinite(x) || x > 0.0)
        throw Error(ErrorCode::Precondition, "log-probabilities must be finite and <= 0");
}

void LossConfig::validate() const {
  if (!(beta > 0.0)) throw Error(ErrorCode::Config, "beta must be > 0");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::Config, "gamma must be >= 0");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::Config, "alpha must be >= 0");
  if (!(rejection_gate_scale > 0.0)) throw Error(ErrorCode::Config, "rejection_gate_scale must be > 0");
}

double simpo_margin(const ScoredPair& pair, const LossConfig& cfg) {
  return cfg.beta * (mean(pair.logp_chosen) - mean(pair.logp_rejected)) - cfg.gamma;
}

LossValue loss(const ScoredPair& pair, const LossConfig& cfg) {
  pair.validate();
  cfg.validate();
  const Forward f = forward(pair, cfg);
  LossValue v;
  v.margin = f.margin;
  v.gate = f.gate;
  v.preference_term = softplus(-f.margin);
  v.nll_term = -mean(pair.logp_chosen);
  v.total = v.preference_term + (adds_nll(cfg.variant) ? cfg.alpha * v.nll_term : 0.0);
  return v;
}

LossGradient loss_gradient(const ScoredPair& pair, const LossConfig& cfg, LossTerm term) {
  pair.validate();
  cfg.validate();
  const Forward f = forward(pair, cfg);
  const double dpref_dm = -sigmoid(-f.margin);
  const double nw = static_cast<double>(pair.logp_chosen.size());
  const double nl = static_cast<double>(pair.logp_rejected.size());
  // CPO margins use sums, so the per-token factor is 1 rather than 1/n.
  const bool sums = cfg.variant == LossVariant::CPO;
  double gw = dpref_dm * f.dm_dw / (sums ? 1.0 : nw);
  const double gl = dpref_dm * f.dm_dl / (sums ? 1.0 : nl);
  if (term == LossTerm::Total && adds_nll(cfg.variant)) gw += -cfg.alpha / nw;
  LossGradient g;
  g.d_chosen.assign(pair.logp_chosen.size(), gw);
  g.d_rejected.assign(pair.logp_rejected.size(), gl);
  g.d_gamma = dpref_dm * f.dm_dgamma;
  return g;
}

double grad_check(const ScoredPair& pair, const LossConfig& cfg, double epsilon, LossTerm term) {
  if (!(epsilon > 1e-8 && epsilon < 1e-3)) throw Error(ErrorCode::Precondition, "epsilon must lie in (1e-8, 1e-3)");
  const LossGradient g = loss_gradient(pair, cfg, term);
  auto value = [&](const ScoredPair& p) {
    const LossValue v = loss(p, cfg);
    return term == LossTerm::Total ? v.total : v.preference_term;
  };
  double worst = 0.0;
  auto probe = [&](std::vector<double> ScoredPair::*seq, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      ScoredPair hi = pair, lo = pair;
      // Keep the probe inside the log-probability domain.
      const double x = (pair.*seq)[i];
      const double up = std::min(x + epsilon, 0.0);
      const double down = up - 2.0 * epsilon;
      (hi.*seq)[i] = up;
      (lo.*seq)[i] = down;
      const double fd = (value(hi) - value(lo)) / (up - down);
      worst = std::max(worst, std::abs(analytic[i] - fd) / (std::abs(fd) + 1e-12));
    }
  };
  probe(&ScoredPair::logp_chosen, g.d_chosen);
  probe(&ScoredPair::logp_rejected, g.d_rejected);
  return worst;
}

ToySoftmaxModel::ToySoftmaxModel(int vocab, int max_len, std::uint64_t seed)
    : vocab_(vocab), max_len_(max_len), theta_(static_cast<std::size_t>(vocab * max_len)) {
  if (vocab < 2 || max_len < 1) throw Error(ErrorCode::Precondition, "toy model needs vocab >= 2 and max_len >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, 0.1);
  for (double& t : theta_) t = init(rng);
}

std::vector<double> ToySoftmaxModel::token_logps(const std::vector<int>& tokens) const {
  if (tokens.empty() || static_cast<int>(tokens.size()) > max_len_)
    throw Error(ErrorCode::Precondition, "toy model: sequence length outside 1..max_len");
  std::vector<double> out;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] < 0 || tokens[t] >= vocab_) throw Error(ErrorCode::Precondition, "toy model: token out of range");
    const double* row = &theta_[t * static_cast<std::size_t>(vocab_)];
    const double mx = *std::max_element(row, row + vocab_);
    double z = 0.0;
    for (int v = 0; v < vocab_; ++v) z += std::exp(row[v] - mx);
    out.push_back(row[tokens[t]] - mx - std::log(z));
  }
  return out;
}

double ToySoftmaxModel::mean_logp(const std::vector<int>& tokens) const { return mean(token_logps(tokens)); }

ScoredPair ToySoftmaxModel::score(const std::vector<int>& chosen, const std::vector<int>& rejected) const {
  return ScoredPair{token_logps(chosen), token_logps(rejected)};
}

LossValue ToySoftmaxModel::step(const std::vector<int>& chosen, const std::vector<int>& rejected,
                                const LossConfig& cfg, double learning_rate) {
  const ScoredPair pair = score(chosen, rejected);
  const LossValue before = loss(pair, cfg);
  const LossGradient g = loss_gradient(pair, cfg);
  std::vector<double> grad(theta_.size(), 0.0);
  auto accumulate = [&](const std::vector<int>& tokens, const std::vector<double>& dlogp) {
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const std::size_t base = t * static_cast<std::size_t>(vocab_);
      const double* row = &theta_[base];
      const double mx = *std::max_element(row, row + vocab_);
      double z = 0.0;
      for (int v = 0; v < vocab_; ++v) z += std::exp(row[v] - mx);
      for (int v = 0; v < vocab_; ++v) {
        const double p = std::exp(row[v] - mx) / z;
        grad[base + static_cast<std::size_t>(v)] += dlogp[t] * ((v == tokens[t] ? 1.0 : 0.0) - p);
      }
    }
  };
  accumulate(chosen, g.d_chosen);
  accumulate(rejected, g.d_rejected);
  for (std::size_t i = 0; i < theta_.size(); ++i) theta_[i] -= learning_rate * grad[i];
  return before;
}

std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& path) {
  std::vector<ScoredPair> out;
  std::size_t line = 0;
  for (const Json& j : read_jsonl(path)) {
    ++line;
    const std::string ctx = path.filename().string() + ":" + std::to_string(line);
    ScoredPair p{get_field<std::vector<double>>(j, "chosen", ctx), get_field<std::vector<double>>(j, "rejected", ctx)};
    try {
      p.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::Schema, ctx + ": " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LossCheckRow> loss_check(const std::vector<ScoredPair>& pairs, const LossConfig& cfg, double epsilon) {
  std::vector<LossCheckRow> rows;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (LossVariant v : kAllLossVariants) {
      LossConfig c = cfg;
      c.variant = v;
      rows.push_back(LossCheckRow{i, v, loss(pairs[i], c), grad_check(pairs[i], c, epsilon)});
    }
  }
  return rows;
}

}  // namespace policysimp
