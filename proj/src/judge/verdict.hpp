#pragma once

// Verdict parsing.
//
// The expected answer ends with one line per dimension:
//   Lexical: prefer <k>, disprefer <k>
// Several decisions may share a line ("Lexical: prefer 3, disprefer 1;
// Structural: ..."). Matching is case-insensitive and tolerates markdown
// emphasis; the last decision for a dimension wins. Dimensions without such a line fall back to looser
// phrasings on a line naming the dimension ("for lexical simplicity I prefer
// 2 and reject 0"). A decision on a line naming no dimension at all is bound
// to `unlabeled` when given.

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "core/model.hpp"

namespace policysimp {

// Raw label indices as written by the judge, not range-checked. Throws
// VerdictParseError(NoDecision) when nothing usable is found.
std::map<Dimension, Decision> parse_decisions(std::string_view answer,
                                              std::optional<Dimension> unlabeled = std::nullopt);

// Full parse of a judge response: reasoning is split off first (decisions
// inside <think> are ignored), labels are mapped through `order` (label p is
// pool candidate order[p]; empty = identity), indices are range-checked and
// the dimension `policy` needs must be present. The rationale keeps the raw
// text, reasoning included.
JudgeVerdict parse_verdict(std::string source_id, std::string_view raw, JudgeMode mode, int candidate_count,
                           Policy policy, const std::vector<int>& order = {});

}  // namespace policysimp
