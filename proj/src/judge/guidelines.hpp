#pragma once

// Judge guideline templates.
//
// A template is a plain-text file split into sections by "[[name]]" lines:
//
//   [[preamble]]       materials and task description
//   [[lexical]]        "- <op> (<mark>): text" lines, op in replace/delete/keep/add
//   [[structural]]     same, op in split/reorder/keep/replace
//   [[output_format]]  answer format instructions
//   [[instance]]       live-instance layout with {{source}} {{candidates}}
//                      {{alignments}} {{parses}} slots
//   [[shot_input]] / [[shot_verdict]]   three worked examples, in pairs
//
// Marks are ++ / + / - / -- (high reward, moderate reward, moderate penalty,
// high penalty).

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "align/ot.hpp"
#include "core/model.hpp"
#include "gateway/gateway.hpp"
#include "parse/parse.hpp"

namespace policysimp {

struct Principle {
  std::string op;
  std::string mark;
  std::string text;

  friend bool operator==(const Principle&, const Principle&) = default;
};

struct Shot {
  std::string input;
  std::string verdict;

  friend bool operator==(const Shot&, const Shot&) = default;
};

struct GuidelineTemplate {
  std::string preamble;
  std::vector<Principle> lexical_principles;
  std::vector<Principle> structural_principles;
  std::string output_format;
  std::string instance;
  std::vector<Shot> shots;

  // MissingTemplate when an operation is uncovered, a mark is unknown, a slot
  // is missing from the instance layout, or there are not exactly 3 shots.
  void validate() const;
  std::string system_text() const;

  friend bool operator==(const GuidelineTemplate&, const GuidelineTemplate&) = default;
};

GuidelineTemplate parse_guideline_template(std::string_view text);
GuidelineTemplate load_guideline_template(const std::filesystem::path& path);
std::string guideline_template_text(const GuidelineTemplate& t);
GuidelineTemplate default_guideline_template();

/// Appended to the user turn when the first answer had no usable verdict.
std::string_view format_reminder();

struct RenderedJudgePrompt {
  PromptBundle bundle;
  // order[p] = pool index shown at position p (the judge sees label p).
  std::vector<int> order;
};

// Candidates appear under their pool index unless `order` permutes them, in
// which case label p refers to pool candidate order[p]. An empty order is the
// identity.
RenderedJudgePrompt render_judge_prompt(const GuidelineTemplate& t, const CandidatePool& pool,
                                        const std::vector<AlignmentResult>& alignments,
                                        const ParseTree& source_parse, const std::vector<ParseTree>& candidate_parses,
                                        std::vector<int> order = {});

/// Deterministic permutation of 0..k-1 derived from (source_id, seed).
std::vector<int> shuffled_order(std::string_view source_id, std::uint64_t seed, int k);

}  // namespace policysimp
