#pragma once

#include <optional>
#include <string>
#include <vector>

#include "candidates/templates.hpp"
#include "core/error.hpp"
#include "core/model.hpp"
#include "gateway/gateway.hpp"

namespace policysimp {

/// Trims surrounding whitespace and one pair of matching surrounding quotes.
std::string normalize_candidate(std::string_view raw);

/// Heuristic: the output apologises or declines instead of rewriting.
bool looks_like_refusal(std::string_view text);

// Queries roster[k] for candidate k (concurrently). Any failure aborts the
// whole pool with GenerationFailed(k) for the lowest failing k.
CandidatePool build_pool(Gateway& gateway, const TemplateRegistry& templates, const SourceRecord& source,
                         Policy policy, const std::vector<EndpointProfile>& roster,
                         ShotMode mode = ShotMode::FewShot);

struct PoolOutcome {
  std::string source_id;
  std::optional<CandidatePool> pool;
  int failed_model = -1;
  ErrorCode error_code = ErrorCode::Internal;
  std::string error;
};

// One outcome per source, in input order, from a bounded worker pool.
std::vector<PoolOutcome> build_pools(Gateway& gateway, const TemplateRegistry& templates,
                                     const std::vector<SourceRecord>& sources, Policy policy,
                                     const std::vector<EndpointProfile>& roster, int workers,
                                     ShotMode mode = ShotMode::FewShot);

}  // namespace policysimp
