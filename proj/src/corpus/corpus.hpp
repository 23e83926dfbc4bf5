#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace policysimp {

enum class SourceFormat { PlainLines, JsonlField };

struct LoadOptions {
  SourceFormat format = SourceFormat::PlainLines;
  std::string text_field = "src";  // jsonl only
  std::string origin;              // defaults to the file name
};

/// One record per non-blank line (or jsonl record). Ids are
/// "<first 12 hex of the file's SHA-256>:<8-digit line number>", so reloading
/// the same file always yields the same ids.
std::vector<SourceRecord> load_sources(const std::filesystem::path& path, const LoadOptions& opts = {});

struct FilterConfig {
  std::size_t min_tokens = 8;
  std::size_t max_tokens = 80;
  bool dedup = true;
};

struct FilterResult {
  std::vector<SourceRecord> kept;
  std::vector<SourceRecord> rejected;  // reason set
};

// Length and content gates run first; dedup (on normalized tokens, first
// occurrence wins) runs over the records that passed them.
FilterResult filter_sources(const std::vector<SourceRecord>& records, const FilterConfig& cfg = {});

}  // namespace policysimp
