#include "align/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "util/log.hpp"

namespace policysimp {

namespace {

constexpr double kNonConvergenceChange = 1e-4;
constexpr double kStageTolerance = 1e-6;

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// log sum_k exp(x_k), stable.
template <typename F>
double log_sum_exp(std::size_t n, F&& term) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) hi = std::max(hi, term(k));
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(term(k) - hi);
  return hi + std::log(s);
}

struct Duals {
  std::vector<double> f, g;
};

// Gauss-Seidel sweeps at fixed eps until the largest dual change (in units of
// eps) drops below `tol` or `iters` sweeps are spent.
std::pair<int, double> run_stage(const Matrix& c, const std::vector<double>& log_a, const std::vector<double>& log_b,
                                 double eps, double lambda, double tol, int iters, Duals& d) {
  const std::size_t n = c.rows, m = c.cols;
  double change = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < iters) {
    ++it;
    change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = -lambda * eps * log_sum_exp(m, [&](std::size_t j) { return log_b[j] + (d.g[j] - c(i, j)) / eps; });
      change = std::max(change, std::abs(v - d.f[i]) / eps);
      d.f[i] = v;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double v = -lambda * eps * log_sum_exp(n, [&](std::size_t i) { return log_a[i] + (d.f[i] - c(i, j)) / eps; });
      change = std::max(change, std::abs(v - d.g[j]) / eps);
      d.g[j] = v;
    }
    if (change < tol) break;
  }
  return {it, change};
}

}  // namespace

void OtConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::Config, "ot.tau must be in (0, 1]");
  if (!(link_threshold >= 0.0 && link_threshold <= 1.0))
    throw Error(ErrorCode::Config, "ot.link_threshold must be in [0, 1]");
  if (max_iters <= 0) throw Error(ErrorCode::Config, "ot.max_iters must be positive");
  if (!(convergence_eps > 0.0)) throw Error(ErrorCode::Config, "ot.convergence_eps must be positive");
  if (!(entropic_reg > 0.0)) throw Error(ErrorCode::Config, "ot.entropic_reg must be positive");
}

std::string_view to_string(MarginalMode m) noexcept {
  return m == MarginalMode::Uniform ? "uniform" : "length_normalized";
}

MarginalMode parse_marginal_mode(std::string_view s) {
  if (s == "uniform") return MarginalMode::Uniform;
  if (s == "length_normalized") return MarginalMode::LengthNormalized;
  throw Error(ErrorCode::Config, "unknown marginal_mode '" + std::string(s) + "'");
}

Matrix cost_matrix(const std::vector<std::vector<double>>& src, const std::vector<std::vector<double>>& cand) {
  if (src.empty() || cand.empty()) throw Error(ErrorCode::Precondition, "cost matrix needs non-empty inputs");
  const std::size_t dim = src.front().size();
  std::vector<double> src_norm, cand_norm;
  for (const auto* side : {&src, &cand}) {
    auto& norms = side == &src ? src_norm : cand_norm;
    for (const auto& v : *side) {
      if (v.size() != dim)
        throw Error(ErrorCode::DimensionMismatch, "embedding dimensions differ (" + std::to_string(v.size()) +
                                                      " vs " + std::to_string(dim) + ")");
      const double nv = norm(v);
      if (nv == 0.0) throw Error(ErrorCode::ZeroVector, "zero embedding vector: cosine undefined");
      norms.push_back(nv);
    }
  }
  Matrix c(src.size(), cand.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < cand.size(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += src[i][k] * cand[j][k];
      c(i, j) = std::clamp(1.0 - dot / (src_norm[i] * cand_norm[j]), 0.0, 2.0);
    }
  return c;
}

std::pair<std::vector<double>, std::vector<double>> marginals(std::size_t n, std::size_t m, MarginalMode mode) {
  if (mode == MarginalMode::Uniform)
    return {std::vector<double>(n, 1.0 / static_cast<double>(n)), std::vector<double>(m, 1.0 / static_cast<double>(m))};
  const double w = 1.0 / static_cast<double>(std::max(n, m));
  return {std::vector<double>(n, w), std::vector<double>(m, w)};
}

SinkhornResult sinkhorn_unbalanced(const Matrix& cost, const OtConfig& cfg) {
  auto [a, b] = marginals(cost.rows, cost.cols, cfg.marginal_mode);
  return sinkhorn_unbalanced(cost, a, b, cfg);
}

SinkhornResult sinkhorn_unbalanced(const Matrix& cost, const std::vector<double>& a, const std::vector<double>& b,
                                   const OtConfig& cfg) {
  cfg.validate();
  if (cost.rows == 0 || cost.cols == 0) throw Error(ErrorCode::Precondition, "sinkhorn: empty cost matrix");
  if (a.size() != cost.rows || b.size() != cost.cols)
    throw Error(ErrorCode::DimensionMismatch, "sinkhorn: marginals do not match the cost matrix");
  double cmax = 0.0;
  for (double v : cost.data) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::Precondition, "sinkhorn: cost must be finite and >= 0");
    cmax = std::max(cmax, v);
  }
  double mass_a = 0.0, mass_b = 0.0;
  for (double x : a) {
    if (!(x > 0.0)) throw Error(ErrorCode::Precondition, "sinkhorn: marginal weights must be positive");
    mass_a += x;
  }
  for (double x : b) {
    if (!(x > 0.0)) throw Error(ErrorCode::Precondition, "sinkhorn: marginal weights must be positive");
    mass_b += x;
  }
  if (cfg.balanced() && std::abs(mass_a - mass_b) > 1e-12)
    throw Error(ErrorCode::Precondition, "balanced transport needs marginals of equal total mass");

  std::vector<double> log_a(a.size()), log_b(b.size());
  std::transform(a.begin(), a.end(), log_a.begin(), [](double x) { return std::log(x); });
  std::transform(b.begin(), b.end(), log_b.begin(), [](double x) { return std::log(x); });

  const double eps = cfg.entropic_reg;
  const double lambda = cfg.balanced() ? 1.0 : cfg.tau;
  Duals d{std::vector<double>(a.size(), 0.0), std::vector<double>(b.size(), 0.0)};

  SinkhornResult res;
  // Annealing: coarse-to-fine eps, each stage warm-started from the previous.
  for (double stage_eps = std::max(cmax, eps); stage_eps > eps * 1.0000001;) {
    res.iterations += run_stage(cost, log_a, log_b, stage_eps, lambda, kStageTolerance, cfg.max_iters, d).first;
    stage_eps = std::max(eps, stage_eps * 0.25);
    if (stage_eps == eps) break;
  }
  const auto [iters, change] = run_stage(cost, log_a, log_b, eps, lambda, cfg.convergence_eps, cfg.max_iters, d);
  res.iterations += iters;
  res.final_change = change;
  res.converged = change < cfg.convergence_eps;
  res.non_convergence = !res.converged && change > kNonConvergenceChange;
  if (res.non_convergence)
    log::warn("sinkhorn: no convergence after " + std::to_string(cfg.max_iters) + " iterations (change " +
              std::to_string(change) + ")");

  res.plan = Matrix(cost.rows, cost.cols);
  for (std::size_t i = 0; i < cost.rows; ++i)
    for (std::size_t j = 0; j < cost.cols; ++j)
      res.plan(i, j) = std::exp(log_a[i] + log_b[j] + (d.f[i] + d.g[j] - cost(i, j)) / eps);
  res.a = a;
  res.b = b;
  return res;
}

std::vector<std::pair<int, int>> threshold_links(const Matrix& plan, double threshold) {
  double top = 0.0;
  for (double v : plan.data) top = std::max(top, v);
  std::vector<std::pair<int, int>> links;
  if (!(top > 0.0)) return links;
  for (std::size_t i = 0; i < plan.rows; ++i)
    for (std::size_t j = 0; j < plan.cols; ++j) {
      const double v = plan(i, j);
      if (v > 0.0 && v / top >= threshold) links.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  return links;
}

AlignmentResult extract_links(const SinkhornResult& solved, const OtConfig& cfg) {
  AlignmentResult r;
  r.plan = solved.plan;
  r.links = threshold_links(solved.plan, cfg.link_threshold);
  r.null_mass.assign(solved.plan.rows, 0.0);
  r.candidate_null_mass.assign(solved.plan.cols, 0.0);
  for (std::size_t i = 0; i < solved.plan.rows; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < solved.plan.cols; ++j) row += solved.plan(i, j);
    r.null_mass[i] = (i < solved.a.size() ? solved.a[i] : 0.0) - row;
  }
  for (std::size_t j = 0; j < solved.plan.cols; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < solved.plan.rows; ++i) col += solved.plan(i, j);
    r.candidate_null_mass[j] = (j < solved.b.size() ? solved.b[j] : 0.0) - col;
  }
  r.converged = !solved.non_convergence;
  return r;
}

std::string format_alignment_for_judge(const AlignmentResult& result) {
  if (result.links.empty()) return "no aligned pairs";
  auto links = result.links;
  std::sort(links.begin(), links.end());
  std::string out;
  for (const auto& [i, j] : links) {
    if (!out.empty()) out += '\n';
    const auto si = static_cast<std::size_t>(i);
    const auto sj = static_cast<std::size_t>(j);
    out += si < result.source_tokens.size() ? result.source_tokens[si] : "#" + std::to_string(i);
    out += " <-> ";
    out += sj < result.candidate_tokens.size() ? result.candidate_tokens[sj] : "#" + std::to_string(j);
  }
  return out;
}

}  // namespace policysimp
