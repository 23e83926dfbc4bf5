#pragma once

// Shared domain vocabulary for the preference-data pipeline. Everything here
// is a value type, validated on construction and immutable afterwards.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace policysimp {

enum class Policy { LexicalParaphrasing, OverallRewriting };
enum class Dimension { Lexical, Structural, Overall };
enum class JudgeMode { Think, NoThink };

inline constexpr std::array<Policy, 2> kAllPolicies = {Policy::LexicalParaphrasing,
                                                       Policy::OverallRewriting};
inline constexpr std::array<Dimension, 3> kAllDimensions = {
    Dimension::Lexical, Dimension::Structural, Dimension::Overall};

/// The verdict dimension a policy consumes when building its dataset.
constexpr Dimension derive_judge_dimension(Policy policy) noexcept {
  switch (policy) {
    case Policy::LexicalParaphrasing:
      return Dimension::Lexical;
    case Policy::OverallRewriting:
      return Dimension::Overall;
  }
  return Dimension::Overall;
}

std::string_view to_string(Policy p) noexcept;
std::string_view to_string(Dimension d) noexcept;
std::string_view to_string(JudgeMode m) noexcept;
Policy parse_policy(std::string_view s);
Dimension parse_dimension(std::string_view s);
JudgeMode parse_judge_mode(std::string_view s);

struct DecodeParams {
  double temperature = 0.0;
  double top_p = 1.0;
  std::optional<int> top_k;  // nullopt = disabled
  int max_tokens = 256;

  void validate() const;

  // Generation and no-think judging.
  static DecodeParams deterministic(int max_tokens = 256);
  // Reasoning-mode judging.
  static DecodeParams think(int max_tokens = 4096);

  friend bool operator==(const DecodeParams&, const DecodeParams&) = default;
};

enum class FilterReason { None, TooShort, TooLong, NonSentential, Duplicate };
std::string_view to_string(FilterReason r) noexcept;
FilterReason parse_filter_reason(std::string_view s);

struct SourceRecord {
  std::string id;
  std::string text;
  std::size_t token_count = 0;
  std::string origin;
  FilterReason reason = FilterReason::None;

  bool filtered() const noexcept { return reason != FilterReason::None; }
  void validate() const;

  friend bool operator==(const SourceRecord&, const SourceRecord&) = default;
};

struct Candidate {
  int index = 0;
  std::string text;
  std::string model;
  DecodeParams decode;
  bool no_edit = false;  // output identical to the source
  bool refusal = false;  // output looks like a refusal rather than a rewrite

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

class CandidatePool {
 public:
  CandidatePool() = default;
  CandidatePool(std::string source_id, std::string source_text, Policy policy,
                std::vector<Candidate> candidates, std::vector<std::string> roster);

  const std::string& source_id() const noexcept { return source_id_; }
  const std::string& source_text() const noexcept { return source_text_; }
  Policy policy() const noexcept { return policy_; }
  const std::vector<Candidate>& candidates() const noexcept { return candidates_; }
  const std::vector<std::string>& roster() const noexcept { return roster_; }
  std::size_t size() const noexcept { return candidates_.size(); }
  const Candidate& at(int index) const;

  friend bool operator==(const CandidatePool&, const CandidatePool&) = default;

 private:
  std::string source_id_;
  std::string source_text_;
  Policy policy_ = Policy::LexicalParaphrasing;
  std::vector<Candidate> candidates_;
  std::vector<std::string> roster_;
};

struct Decision {
  int preferred = 0;
  int dispreferred = 0;

  friend bool operator==(const Decision&, const Decision&) = default;
};

class JudgeVerdict {
 public:
  JudgeVerdict() = default;
  // Throws VerdictParseError when an index is out of 0..candidate_count-1 or
  // preferred == dispreferred for some dimension.
  JudgeVerdict(std::string source_id, std::map<Dimension, Decision> decisions,
               std::string rationale, std::optional<std::string> reasoning, JudgeMode mode,
               int candidate_count);

  const std::string& source_id() const noexcept { return source_id_; }
  const std::map<Dimension, Decision>& decisions() const noexcept { return decisions_; }
  bool has(Dimension d) const noexcept { return decisions_.contains(d); }
  const Decision& decision(Dimension d) const;
  const std::string& rationale() const noexcept { return rationale_; }
  const std::optional<std::string>& reasoning() const noexcept { return reasoning_; }
  JudgeMode mode() const noexcept { return mode_; }
  int candidate_count() const noexcept { return candidate_count_; }

  // Throws VerdictParseError(MissingDimension) when `policy` cannot be served.
  void require(Policy policy) const;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;

 private:
  std::string source_id_;
  std::map<Dimension, Decision> decisions_;
  std::string rationale_;
  std::optional<std::string> reasoning_;
  JudgeMode mode_ = JudgeMode::Think;
  int candidate_count_ = 0;
};

struct PreferenceTriplet {
  std::string source_id;
  std::string source_text;
  std::string preferred_text;
  std::string dispreferred_text;
  Policy policy = Policy::LexicalParaphrasing;
  std::string preferred_model;
  std::string dispreferred_model;
  JudgeMode judge_mode = JudgeMode::Think;

  // DegenerateTriplet on identical texts, Precondition on empty ones.
  void validate() const;

  friend bool operator==(const PreferenceTriplet&, const PreferenceTriplet&) = default;
};

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct AlignmentResult {
  std::vector<std::string> source_tokens;
  std::vector<std::string> candidate_tokens;
  std::vector<std::pair<int, int>> links;  // sorted by (i, j)
  Matrix plan;
  // Source marginal minus transported row mass. Negative entries are possible
  // under unbalanced transport when a row absorbs surplus mass.
  std::vector<double> null_mass;
  std::vector<double> candidate_null_mass;
  bool converged = true;

  friend bool operator==(const AlignmentResult&, const AlignmentResult&) = default;
};

enum class EditOp { Add = 0, Keep = 1, Delete = 2 };

struct OperationScores {
  double add = 0.0;
  double keep = 0.0;
  double del = 0.0;

  double operator[](EditOp op) const noexcept;
  friend bool operator==(const OperationScores&, const OperationScores&) = default;
};

struct SariScore {
  double total = 0.0;          // [0, 100]
  OperationScores per_operation;  // [0, 100], mean over orders
  std::array<OperationScores, 4> per_order{};  // index n-1, [0, 100]

  friend bool operator==(const SariScore&, const SariScore&) = default;
};

}  // namespace policysimp
