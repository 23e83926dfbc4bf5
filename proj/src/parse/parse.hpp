#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/serialize.hpp"
#include "gateway/gateway.hpp"

namespace policysimp {

enum class ParseIssue { None, Unbalanced, LeafMismatch, Empty };
std::string_view to_string(ParseIssue p) noexcept;
ParseIssue parse_parse_issue(std::string_view s);

struct ParseTree {
  std::string bracketed;  // raw model text when invalid
  bool valid = false;
  ParseIssue issue = ParseIssue::Empty;

  friend bool operator==(const ParseTree&, const ParseTree&) = default;
};

/// Leaves of a bracketed tree in order: atoms that do not directly follow "(".
std::vector<std::string> parse_leaves(std::string_view bracketed);

// Valid when parentheses balance and the leaves, in order, can be found in the
// sentence (case-insensitive, PTB bracket escapes mapped back). Leaves may
// split a word ("do" "n't") but may not skip backwards or invent text.
ParseTree validate_parse(std::string_view sentence, std::string_view raw);

struct ParseTemplate {
  std::string instruction;
  std::string demo_sentence;
  std::string demo_parse;
};

ParseTemplate default_parse_template();
PromptBundle render_parse_prompt(const ParseTemplate& t, std::string_view sentence);

/// Gateway errors propagate; bad parse text never throws.
ParseTree extract_parse(Gateway& gateway, const EndpointProfile& profile, std::string_view sentence,
                        const ParseTemplate& t = default_parse_template());

// Thread-safe text-hash -> parse map, persisted as JSONL
// {"hash", "text", "parse", "valid", "issue"}.
class ParseCache {
 public:
  void load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::optional<ParseTree> get(std::string_view text) const;
  void put(std::string_view text, const ParseTree& tree);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::pair<std::string, ParseTree>> entries_;  // hash -> (text, tree)
};

std::string format_parse_for_judge(const ParseTree& source, const std::vector<ParseTree>& candidates);

}  // namespace policysimp
