#include "core/model.hpp"

#include <cmath>

#include "core/error.hpp"

namespace policysimp {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::Precondition: return "PreconditionError";
    case ErrorCode::Transport: return "TransportError";
    case ErrorCode::Endpoint: return "EndpointError";
    case ErrorCode::ExhaustedRetries: return "ExhaustedRetries";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::VerdictParse: return "VerdictParseError";
    case ErrorCode::DimensionMissing: return "DimensionMissing";
    case ErrorCode::DegenerateTriplet: return "DegenerateTriplet";
    case ErrorCode::PolicyMixture: return "PolicyMixture";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::EmptyReferences: return "EmptyReferences";
    case ErrorCode::Internal: return "InternalError";
  }
  return "Error";
}

std::string_view verdict_failure_name(VerdictFailure f) noexcept {
  switch (f) {
    case VerdictFailure::NoDecision: return "NoDecision";
    case VerdictFailure::IndexOutOfRange: return "IndexOutOfRange";
    case VerdictFailure::SameIndex: return "SameIndex";
    case VerdictFailure::MissingDimension: return "MissingDimension";
  }
  return "Unknown";
}

std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::LexicalParaphrasing: return "lexical-paraphrasing";
    case Policy::OverallRewriting: return "overall-rewriting";
  }
  return "";
}

std::string_view to_string(Dimension d) noexcept {
  switch (d) {
    case Dimension::Lexical: return "lexical";
    case Dimension::Structural: return "structural";
    case Dimension::Overall: return "overall";
  }
  return "";
}

std::string_view to_string(JudgeMode m) noexcept {
  return m == JudgeMode::Think ? "think" : "nothink";
}

Policy parse_policy(std::string_view s) {
  for (Policy p : kAllPolicies)
    if (s == to_string(p)) return p;
  throw Error(ErrorCode::Config, "unknown policy '" + std::string(s) +
                                     "' (expected lexical-paraphrasing or overall-rewriting)");
}

Dimension parse_dimension(std::string_view s) {
  for (Dimension d : kAllDimensions)
    if (s == to_string(d)) return d;
  throw Error(ErrorCode::Schema, "unknown dimension '" + std::string(s) + "'");
}

JudgeMode parse_judge_mode(std::string_view s) {
  if (s == "think") return JudgeMode::Think;
  if (s == "nothink" || s == "no-think") return JudgeMode::NoThink;
  throw Error(ErrorCode::Config, "unknown judge mode '" + std::string(s) + "'");
}

std::string_view to_string(FilterReason r) noexcept {
  switch (r) {
    case FilterReason::None: return "";
    case FilterReason::TooShort: return "TooShort";
    case FilterReason::TooLong: return "TooLong";
    case FilterReason::NonSentential: return "NonSentential";
    case FilterReason::Duplicate: return "Duplicate";
  }
  return "";
}

FilterReason parse_filter_reason(std::string_view s) {
  for (FilterReason r : {FilterReason::None, FilterReason::TooShort, FilterReason::TooLong,
                         FilterReason::NonSentential, FilterReason::Duplicate})
    if (s == to_string(r)) return r;
  throw Error(ErrorCode::Schema, "unknown filter reason '" + std::string(s) + "'");
}

void DecodeParams::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    throw Error(ErrorCode::Config, "temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::Config, "top_p must be in (0, 1]");
  if (top_k && *top_k <= 0) throw Error(ErrorCode::Config, "top_k must be positive or disabled");
  if (max_tokens <= 0) throw Error(ErrorCode::Config, "max_tokens must be positive");
}

DecodeParams DecodeParams::deterministic(int max_tokens) {
  return DecodeParams{0.0, 1.0, std::nullopt, max_tokens};
}

DecodeParams DecodeParams::think(int max_tokens) { return DecodeParams{0.6, 0.95, 20, max_tokens}; }

void SourceRecord::validate() const {
  if (id.empty()) throw Error(ErrorCode::Schema, "source record without id");
  if (!filtered() && text.empty())
    throw Error(ErrorCode::Schema, "unfiltered source record " + id + " has empty text");
}

CandidatePool::CandidatePool(std::string source_id, std::string source_text, Policy policy,
                             std::vector<Candidate> candidates, std::vector<std::string> roster)
    : source_id_(std::move(source_id)),
      source_text_(std::move(source_text)),
      policy_(policy),
      candidates_(std::move(candidates)),
      roster_(std::move(roster)) {
  if (candidates_.size() != roster_.size())
    throw Error(ErrorCode::Precondition, "pool " + source_id_ + ": " +
                                             std::to_string(candidates_.size()) +
                                             " candidates for a roster of " +
                                             std::to_string(roster_.size()));
  if (candidates_.size() < 2)
    throw Error(ErrorCode::Precondition, "pool " + source_id_ + " needs at least 2 candidates");
  for (std::size_t k = 0; k < candidates_.size(); ++k) {
    const Candidate& c = candidates_[k];
    if (c.index != static_cast<int>(k))
      throw Error(ErrorCode::Precondition,
                  "pool " + source_id_ + ": candidate at position " + std::to_string(k) +
                      " carries index " + std::to_string(c.index));
    if (c.model != roster_[k])
      throw Error(ErrorCode::Precondition, "pool " + source_id_ + ": candidate " +
                                               std::to_string(k) + " model '" + c.model +
                                               "' does not match roster '" + roster_[k] + "'");
    if (c.text.empty())
      throw Error(ErrorCode::Precondition,
                  "pool " + source_id_ + ": candidate " + std::to_string(k) + " is empty");
  }
}

const Candidate& CandidatePool::at(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= candidates_.size())
    throw Error(ErrorCode::Precondition, "candidate index " + std::to_string(index) +
                                             " outside pool of " +
                                             std::to_string(candidates_.size()));
  return candidates_[static_cast<std::size_t>(index)];
}

JudgeVerdict::JudgeVerdict(std::string source_id, std::map<Dimension, Decision> decisions,
                           std::string rationale, std::optional<std::string> reasoning,
                           JudgeMode mode, int candidate_count)
    : source_id_(std::move(source_id)),
      decisions_(std::move(decisions)),
      rationale_(std::move(rationale)),
      reasoning_(std::move(reasoning)),
      mode_(mode),
      candidate_count_(candidate_count) {
  for (const auto& [dim, d] : decisions_) {
    for (int idx : {d.preferred, d.dispreferred}) {
      if (idx < 0 || idx >= candidate_count_)
        throw VerdictParseError(VerdictFailure::IndexOutOfRange,
                                std::string(to_string(dim)) + " index " + std::to_string(idx) +
                                    " outside 0.." + std::to_string(candidate_count_ - 1));
    }
    if (d.preferred == d.dispreferred)
      throw VerdictParseError(VerdictFailure::SameIndex,
                              std::string(to_string(dim)) + " prefers and disprefers candidate " +
                                  std::to_string(d.preferred));
  }
}

const Decision& JudgeVerdict::decision(Dimension d) const {
  auto it = decisions_.find(d);
  if (it == decisions_.end())
    throw Error(ErrorCode::DimensionMissing,
                "verdict for " + source_id_ + " has no " + std::string(to_string(d)) + " decision");
  return it->second;
}

void JudgeVerdict::require(Policy policy) const {
  const Dimension d = derive_judge_dimension(policy);
  if (!has(d))
    throw VerdictParseError(VerdictFailure::MissingDimension,
                            "verdict lacks the " + std::string(to_string(d)) + " decision");
}

void PreferenceTriplet::validate() const {
  if (source_text.empty() || preferred_text.empty() || dispreferred_text.empty())
    throw Error(ErrorCode::Precondition, "triplet " + source_id + " has an empty text");
  if (preferred_text == dispreferred_text)
    throw Error(ErrorCode::DegenerateTriplet,
                "triplet " + source_id + ": preferred and dispreferred texts are identical");
}

Matrix Matrix::transposed() const {
  Matrix t(cols, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double OperationScores::operator[](EditOp op) const noexcept {
  switch (op) {
    case EditOp::Add: return add;
    case EditOp::Keep: return keep;
    case EditOp::Delete: return del;
  }
  return 0.0;
}

}  // namespace policysimp
