#pragma once

// SARI: n-gram (n = 1..4) scoring of ADD / KEEP / DELETE edits against the
// source and a set of references.
//
// Source and output n-grams are binary (present or not). For KEEP and DELETE
// a reference contributes fractionally: f(g) = (#references containing g)/m.
// ADD uses the union of references. Per order:
//
//   keep:   P = sum_{g in S&O} f(g) / |S&O|      R = sum_{g in S&O} f(g) / sum_{g in S} f(g)
//   delete: P = sum_{g in S-O} (1 - f(g)) / |S-O|
//   add:    P = |(O-S) & R| / |O-S|               R = |(O-S) & R| / |R-S|
//
// A ratio whose denominator set is empty is 1 when the paired set (target for
// a precision, candidate for a recall) is also empty, otherwise 0.
// The score is 100 * mean(F1_add, F1_keep, P_delete), each averaged over n.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/model.hpp"

namespace policysimp {

using Tokens = std::vector<std::string>;

inline constexpr int kSariMaxOrder = 4;

/// Throws Error(EmptyReferences) when `references` is empty.
SariScore sari(std::string_view source, std::string_view output,
               std::span<const std::string> references);
SariScore sari_tokens(const Tokens& source, const Tokens& output, std::span<const Tokens> references);

struct CorpusSari {
  double total = 0.0;
  OperationScores per_operation;
  std::vector<SariScore> sentences;
};

// Corpus SARI is the mean of sentence-level totals. references[i] holds the
// references of sentence i.
CorpusSari corpus_sari(std::span<const std::string> sources, std::span<const std::string> outputs,
                       std::span<const std::vector<std::string>> references);

struct EditReport {
  std::size_t added = 0;
  std::size_t deleted = 0;
  std::size_t kept = 0;
  bool no_edit = false;

  friend bool operator==(const EditReport&, const EditReport&) = default;
};

/// Token-level multiset differences on normalized tokens.
EditReport edit_report(std::string_view source, std::string_view output);

/// Reads a line-aligned file of real-valued scores (e.g. from an external
/// neural metric). Blank lines are rejected.
std::vector<double> load_external_scores(const std::filesystem::path& path);

/// Reads a text file as lines, dropping one trailing empty line.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace policysimp
