#pragma once

// Word alignment by entropic optimal transport between token embeddings.
//
// The solver works in the log domain with the product of the marginals as
// reference measure:
//
//   P_ij = a_i b_j exp((f_i + g_j - C_ij) / eps)
//   f_i <- -lambda * eps * log sum_j b_j exp((g_j - C_ij) / eps)     (and g alike)
//
// lambda = 1 is balanced transport. lambda = tau < 1 relaxes the marginals
// with a KL penalty of weight rho = eps * tau / (1 - tau), so tau controls how
// much mass may stay untransported (null alignment). Small eps is reached by
// annealing from a coarse eps to keep iteration counts low.

#include <string>
#include <utility>
#include <vector>

#include "core/model.hpp"

namespace policysimp {

enum class MarginalMode { Uniform, LengthNormalized };

struct OtConfig {
  double tau = 0.88;             // 1.0 = balanced
  double link_threshold = 0.40;  // applied to plan / max(plan)
  int max_iters = 1000;
  double convergence_eps = 1e-9;
  MarginalMode marginal_mode = MarginalMode::Uniform;
  double entropic_reg = 0.1;

  bool balanced() const noexcept { return tau >= 1.0; }
  void validate() const;
};

std::string_view to_string(MarginalMode m) noexcept;
MarginalMode parse_marginal_mode(std::string_view s);

/// C[i][j] = 1 - cos(src_i, cand_j), clipped to [0, 2].
Matrix cost_matrix(const std::vector<std::vector<double>>& src, const std::vector<std::vector<double>>& cand);

/// Source and candidate weights for an n x m problem under `mode`.
std::pair<std::vector<double>, std::vector<double>> marginals(std::size_t n, std::size_t m, MarginalMode mode);

struct SinkhornResult {
  Matrix plan;
  std::vector<double> a;
  std::vector<double> b;
  int iterations = 0;
  double final_change = 0.0;
  bool converged = false;        // final change below convergence_eps
  bool non_convergence = false;  // max_iters hit with change above 1e-4
};

SinkhornResult sinkhorn_unbalanced(const Matrix& cost, const OtConfig& cfg);
SinkhornResult sinkhorn_unbalanced(const Matrix& cost, const std::vector<double>& a,
                                   const std::vector<double>& b, const OtConfig& cfg);

/// Links (i, j) with plan_ij > 0 and plan_ij / max(plan) >= threshold, sorted.
std::vector<std::pair<int, int>> threshold_links(const Matrix& plan, double threshold);

// Fills links, plan and null masses; token vectors are left to the caller.
AlignmentResult extract_links(const SinkhornResult& solved, const OtConfig& cfg);

/// One "src <-> cand" line per link in (i, j) order, or "no aligned pairs".
std::string format_alignment_for_judge(const AlignmentResult& result);

}  // namespace policysimp
