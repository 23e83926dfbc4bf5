#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "gateway/gateway.hpp"
#include "judge/guidelines.hpp"
#include "judge/verdict.hpp"

namespace policysimp {

struct JudgeOptions {
  JudgeMode mode = JudgeMode::Think;
  // Present candidates in a per-source permuted order (labels are mapped back).
  bool shuffle = false;
  std::uint64_t shuffle_seed = 0;
};

struct JudgeOutcome {
  JudgeVerdict verdict;
  std::vector<int> order;
  int requests = 1;  // 2 when the format reminder was needed
};

// One judge pass over a pool. An unusable answer is retried once with the
// format reminder appended; a second failure propagates VerdictParseError.
JudgeOutcome judge_pool(Gateway& gateway, const EndpointProfile& profile, const GuidelineTemplate& guidelines,
                        const CandidatePool& pool, const std::vector<AlignmentResult>& alignments,
                        const ParseTree& source_parse, const std::vector<ParseTree>& candidate_parses,
                        const JudgeOptions& options);

/// Throws Error(KeyMismatch) when verdict and pool describe different
/// sources, Error(DimensionMissing) or Error(DegenerateTriplet).
PreferenceTriplet select_pair(const JudgeVerdict& verdict, const CandidatePool& pool, Policy policy);

struct ModelShare {
  std::string model;
  long preferred = 0;
  long dispreferred = 0;
  double preferred_pct = 0.0;
  double dispreferred_pct = 0.0;
};

struct PreferenceDistribution {
  Dimension dimension = Dimension::Overall;
  long verdicts = 0;  // verdicts carrying the dimension
  std::vector<ModelShare> models;  // roster order
};

PreferenceDistribution preference_distribution(const std::vector<JudgeVerdict>& verdicts,
                                               const std::vector<std::string>& roster, Dimension dimension);

struct DisagreementItem {
  std::string source_id;
  Decision think;
  Decision nothink;
  bool differ = false;
  bool opposite = false;
};

struct DisagreementReport {
  Dimension dimension = Dimension::Overall;
  long items = 0;
  long disagreements = 0;
  long opposites = 0;
  double disagree_rate = 0.0;
  double opposite_rate = 0.0;
  std::vector<DisagreementItem> details;  // sorted by source_id
};

// "Opposite" means the candidate one mode prefers is the one the other mode
// rejects. Both sets must cover the same sources (KeyMismatch otherwise).
DisagreementReport disagreement_report(const std::vector<JudgeVerdict>& think,
                                       const std::vector<JudgeVerdict>& nothink, Policy policy);

}  // namespace policysimp
