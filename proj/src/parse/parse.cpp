#include "parse/parse.hpp"

#include "core/error.hpp"
#include "text/tokenize.hpp"
#include "util/io.hpp"

namespace policysimp {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string unescape_leaf(const std::string& leaf) {
  static const std::map<std::string, std::string> kEscapes = {
      {"-LRB-", "("}, {"-RRB-", ")"}, {"-LSB-", "["}, {"-RSB-", "]"}, {"-LCB-", "{"},
      {"-RCB-", "}"}, {"``", "\""},   {"''", "\""},   {"-lrb-", "("}, {"-rrb-", ")"}};
  auto it = kEscapes.find(leaf);
  return it == kEscapes.end() ? leaf : it->second;
}

std::string squash(std::string_view text) {
  std::string out;
  for (char c : lowercase(text))
    if (!is_space(c)) out.push_back(c);
  return out;
}

}  // namespace

std::string_view to_string(ParseIssue p) noexcept {
  switch (p) {
    case ParseIssue::None: return "none";
    case ParseIssue::Unbalanced: return "unbalanced";
    case ParseIssue::LeafMismatch: return "leaf_mismatch";
    case ParseIssue::Empty: return "empty";
  }
  return "none";
}

ParseIssue parse_parse_issue(std::string_view s) {
  for (ParseIssue p : {ParseIssue::None, ParseIssue::Unbalanced, ParseIssue::LeafMismatch, ParseIssue::Empty})
    if (to_string(p) == s) return p;
  throw Error(ErrorCode::Schema, "unknown parse issue '" + std::string(s) + "'");
}

std::vector<std::string> parse_leaves(std::string_view s) {
  std::vector<std::string> leaves;
  bool after_open = false;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '(') {
      after_open = true;
      ++i;
    } else if (c == ')') {
      after_open = false;
      ++i;
    } else if (is_space(c)) {
      ++i;
    } else {
      const std::size_t start = i;
      while (i < s.size() && s[i] != '(' && s[i] != ')' && !is_space(s[i])) ++i;
      if (!after_open) leaves.emplace_back(s.substr(start, i - start));
      after_open = false;
    }
  }
  return leaves;
}

ParseTree validate_parse(std::string_view sentence, std::string_view raw) {
  ParseTree t;
  t.bracketed = std::string(raw);
  const auto first = raw.find('(');
  const auto last = raw.rfind(')');
  if (raw.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    t.issue = ParseIssue::Empty;
    return t;
  }
  if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
    t.issue = ParseIssue::Unbalanced;
    return t;
  }
  const std::string_view tree = raw.substr(first, last - first + 1);
  int depth = 0;
  for (char c : tree) {
    if (c == '(') ++depth;
    if (c == ')' && --depth < 0) break;
  }
  if (depth != 0) {
    t.issue = ParseIssue::Unbalanced;
    return t;
  }
  const auto leaves = parse_leaves(tree);
  if (leaves.empty()) {
    t.issue = ParseIssue::Empty;
    return t;
  }
  const std::string haystack = squash(sentence);
  std::size_t pos = 0;
  for (const auto& leaf : leaves) {
    const std::string needle = squash(unescape_leaf(leaf));
    const auto at = haystack.find(needle, pos);
    if (needle.empty() || at == std::string::npos) {
      t.issue = ParseIssue::LeafMismatch;
      return t;
    }
    pos = at + needle.size();
  }
  t.bracketed = std::string(tree);
  t.valid = true;
  t.issue = ParseIssue::None;
  return t;
}

ParseTemplate default_parse_template() {
  return ParseTemplate{
      "Give the constituency parse tree of the sentence in Penn Treebank bracketed format. Write the "
      "tree on one line, keep every word and punctuation mark of the sentence as a leaf in its "
      "original order, and output only the tree.",
      "The old dog chased a red ball.",
      "(ROOT (S (NP (DT The) (JJ old) (NN dog)) (VP (VBD chased) (NP (DT a) (JJ red) (NN ball))) (. .)))"};
}

PromptBundle render_parse_prompt(const ParseTemplate& t, std::string_view sentence) {
  PromptBundle b;
  b.system = t.instruction;
  b.shots.emplace_back("Sentence: " + t.demo_sentence, t.demo_parse);
  b.user = "Sentence: " + std::string(sentence);
  return b;
}

ParseTree extract_parse(Gateway& gateway, const EndpointProfile& profile, std::string_view sentence,
                        const ParseTemplate& t) {
  if (sentence.empty()) throw Error(ErrorCode::Precondition, "extract_parse: empty sentence");
  const ChatExchange ex = gateway.chat(profile, render_parse_prompt(t, sentence));
  return validate_parse(sentence, ex.response_text);
}

void ParseCache::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return;
  for (const Json& j : read_jsonl(path)) {
    ParseTree t;
    t.bracketed = get_field<std::string>(j, "parse", "parse cache");
    t.valid = get_field<bool>(j, "valid", "parse cache");
    t.issue = parse_parse_issue(get_field<std::string>(j, "issue", "parse cache"));
    const std::string text = get_field<std::string>(j, "text", "parse cache");
    std::lock_guard lock(mu_);
    entries_[sha256_hex(text)] = {text, t};
  }
}

void ParseCache::save(const std::filesystem::path& path) const {
  std::vector<Json> rows;
  {
    std::lock_guard lock(mu_);
    for (const auto& [hash, entry] : entries_) {
      Json j;
      j["hash"] = hash;
      j["text"] = entry.first;
      j["parse"] = entry.second.bracketed;
      j["valid"] = entry.second.valid;
      j["issue"] = to_string(entry.second.issue);
      rows.push_back(std::move(j));
    }
  }
  write_jsonl(path, rows);
}

std::optional<ParseTree> ParseCache::get(std::string_view text) const {
  const std::string h = sha256_hex(text);
  std::lock_guard lock(mu_);
  auto it = entries_.find(h);
  if (it == entries_.end()) return std::nullopt;
  return it->second.second;
}

void ParseCache::put(std::string_view text, const ParseTree& tree) {
  const std::string h = sha256_hex(text);
  std::lock_guard lock(mu_);
  entries_[h] = {std::string(text), tree};
}

std::size_t ParseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string format_parse_for_judge(const ParseTree& source, const std::vector<ParseTree>& candidates) {
  auto render = [](const ParseTree& t) { return t.valid ? t.bracketed : std::string("(parse unavailable)"); };
  std::string out = "Source parse:\n" + render(source);
  for (std::size_t k = 0; k < candidates.size(); ++k)
    out += "\nCandidate " + std::to_string(k) + " parse:\n" + render(candidates[k]);
  return out;
}

}  // namespace policysimp
