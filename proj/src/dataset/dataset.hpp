#pragma once

// Policy-specific preference datasets and their trainer-facing exports.
//
// Preference lines:  {"prompt", "chosen", "rejected", "meta": {"source_id",
//                     "source_text", "preferred_model", "dispreferred_model",
//                     "judge_mode", "policy"}}
// SFT lines:         {"prompt", "completion"}
//
// prompt = the policy's zero-shot instruction, a blank line, then the
// "Sentence: <source>" user turn. Files are UTF-8 with LF line endings.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "candidates/templates.hpp"
#include "core/model.hpp"

namespace policysimp {

struct AssemblyAudit {
  long input = 0;
  long degenerate = 0;
  long duplicate_source = 0;

  friend bool operator==(const AssemblyAudit&, const AssemblyAudit&) = default;
};

struct Dataset {
  Policy policy = Policy::LexicalParaphrasing;
  std::vector<PreferenceTriplet> triplets;  // sorted by source_id
  AssemblyAudit audit;

  std::size_t size() const noexcept { return triplets.size(); }
};

// Drops degenerate triplets, then later duplicates of a source_id, and sorts
// the rest by source_id. Error(PolicyMixture) when a triplet has another
// policy.
Dataset assemble(std::vector<PreferenceTriplet> triplets, Policy policy);

struct DatasetSplit {
  Dataset train;
  Dataset dev;
};

/// Number of dev items: N * dev_fraction rounded half to even.
std::size_t dev_size(std::size_t n, double dev_fraction);

// Seeded shuffle, first dev_size() items go to dev. Both halves stay sorted by
// source_id. Precondition unless 0 < dev_fraction < 1.
DatasetSplit split(const Dataset& dataset, double dev_fraction, std::uint64_t seed);

std::string trainer_prompt(const TemplateRegistry& templates, Policy policy, std::string_view source_text);

void export_preference(const Dataset& d, const TemplateRegistry& templates, const std::filesystem::path& path);
void export_sft(const Dataset& d, const TemplateRegistry& templates, const std::filesystem::path& path);

// Reads a preference export back. The prompt field is checked for presence
// only. Schema on malformed lines, PolicyMixture when policies differ.
Dataset import_preference(const std::filesystem::path& path);

}  // namespace policysimp
