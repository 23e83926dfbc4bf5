#include "judge/guidelines.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <regex>
#include <set>

#include "core/error.hpp"
#include "util/io.hpp"

namespace policysimp {

namespace {

const std::set<std::string> kLexicalOps = {"replace", "delete", "keep", "add"};
const std::set<std::string> kStructuralOps = {"split", "reorder", "keep", "replace"};
const std::set<std::string> kMarks = {"++", "+", "-", "--"};
const char* const kSlots[] = {"{{source}}", "{{candidates}}", "{{alignments}}", "{{parses}}"};

std::string trim_block(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<Principle> parse_principles(const std::string& block, const std::string& section) {
  static const std::regex line_re(R"(^-\s*([A-Za-z]+)\s*\((\+\+|\+|--|-)\)\s*:\s*(.+?)\s*$)");
  std::vector<Principle> out;
  std::size_t pos = 0;
  while (pos <= block.size()) {
    std::size_t eol = block.find('\n', pos);
    if (eol == std::string::npos) eol = block.size();
    std::string line = block.substr(pos, eol - pos);
    pos = eol + 1;
    if (trim_block(line).empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, line_re))
      throw Error(ErrorCode::MissingTemplate, "guidelines [[" + section + "]]: malformed principle: " + line);
    out.push_back(Principle{m[1].str(), m[2].str(), m[3].str()});
  }
  return out;
}

void check_principles(const std::vector<Principle>& ps, const std::set<std::string>& ops,
                      std::string_view section) {
  std::set<std::string> covered;
  for (const Principle& p : ps) {
    if (!ops.contains(p.op))
      throw Error(ErrorCode::MissingTemplate,
                  std::string(section) + " principles: unknown operation '" + p.op + "'");
    if (!kMarks.contains(p.mark))
      throw Error(ErrorCode::MissingTemplate, std::string(section) + " principles: unknown mark '" + p.mark + "'");
    if (p.text.empty()) throw Error(ErrorCode::MissingTemplate, std::string(section) + " principles: empty text");
    covered.insert(p.op);
  }
  for (const std::string& op : ops)
    if (!covered.contains(op))
      throw Error(ErrorCode::MissingTemplate, std::string(section) + " principles do not cover '" + op + "'");
}

std::string principle_lines(const std::vector<Principle>& ps) {
  std::string out;
  for (const Principle& p : ps) {
    if (!out.empty()) out += '\n';
    out += "- " + p.op + " (" + p.mark + "): " + p.text;
  }
  return out;
}

void replace_slot(std::string& s, std::string_view slot, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = s.find(slot, pos)) != std::string::npos) {
    s.replace(pos, slot.size(), value);
    pos += value.size();
  }
}

}  // namespace

void GuidelineTemplate::validate() const {
  if (trim_block(preamble).empty()) throw Error(ErrorCode::MissingTemplate, "guidelines: empty preamble");
  if (trim_block(output_format).empty()) throw Error(ErrorCode::MissingTemplate, "guidelines: empty output format");
  check_principles(lexical_principles, kLexicalOps, "lexical");
  check_principles(structural_principles, kStructuralOps, "structural");
  for (const char* slot : kSlots)
    if (instance.find(slot) == std::string::npos)
      throw Error(ErrorCode::MissingTemplate, std::string("guidelines: instance layout lacks ") + slot);
  if (shots.size() != 3)
    throw Error(ErrorCode::MissingTemplate,
                "guidelines need exactly 3 worked examples, got " + std::to_string(shots.size()));
  for (const Shot& s : shots)
    if (s.input.empty() || s.verdict.empty())
      throw Error(ErrorCode::MissingTemplate, "guidelines: empty worked example");
}

std::string GuidelineTemplate::system_text() const {
  return preamble + "\n\nLexical principles:\n" + principle_lines(lexical_principles) +
         "\n\nStructural principles:\n" + principle_lines(structural_principles) + "\n\n" + output_format;
}

GuidelineTemplate parse_guideline_template(std::string_view text) {
  static const std::regex header_re(R"(^\[\[([a-z_]+)\]\]\s*$)");
  std::vector<std::pair<std::string, std::string>> sections;
  std::size_t pos = 0;
  const std::string s(text);
  while (pos < s.size()) {
    std::size_t eol = s.find('\n', pos);
    if (eol == std::string::npos) eol = s.size();
    std::string line = s.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, header_re)) {
      sections.emplace_back(m[1].str(), std::string());
      continue;
    }
    if (sections.empty()) {
      if (trim_block(line).empty()) continue;
      throw Error(ErrorCode::MissingTemplate, "guidelines: text before the first [[section]]");
    }
    sections.back().second += line + "\n";
  }

  GuidelineTemplate t;
  std::set<std::string> seen;
  std::optional<std::string> pending_input;
  for (auto& [name, raw] : sections) {
    std::string body = trim_block(raw);
    const bool single = name != "shot_input" && name != "shot_verdict";
    if (single && !seen.insert(name).second)
      throw Error(ErrorCode::MissingTemplate, "guidelines: duplicate section [[" + name + "]]");
    if (name == "preamble") {
      t.preamble = std::move(body);
    } else if (name == "lexical") {
      t.lexical_principles = parse_principles(body, name);
    } else if (name == "structural") {
      t.structural_principles = parse_principles(body, name);
    } else if (name == "output_format") {
      t.output_format = std::move(body);
    } else if (name == "instance") {
      t.instance = std::move(body);
    } else if (name == "shot_input") {
      if (pending_input) throw Error(ErrorCode::MissingTemplate, "guidelines: [[shot_input]] without a verdict");
      pending_input = std::move(body);
    } else if (name == "shot_verdict") {
      if (!pending_input) throw Error(ErrorCode::MissingTemplate, "guidelines: [[shot_verdict]] without an input");
      t.shots.push_back(Shot{std::move(*pending_input), std::move(body)});
      pending_input.reset();
    } else {
      throw Error(ErrorCode::MissingTemplate, "guidelines: unknown section [[" + name + "]]");
    }
  }
  if (pending_input) throw Error(ErrorCode::MissingTemplate, "guidelines: [[shot_input]] without a verdict");
  t.validate();
  return t;
}

GuidelineTemplate load_guideline_template(const std::filesystem::path& path) {
  try {
    return parse_guideline_template(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw Error(ErrorCode::MissingTemplate, e.what());
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string guideline_template_text(const GuidelineTemplate& t) {
  std::string out = "[[preamble]]\n" + t.preamble + "\n[[lexical]]\n" + principle_lines(t.lexical_principles) +
                    "\n[[structural]]\n" + principle_lines(t.structural_principles) + "\n[[output_format]]\n" +
                    t.output_format + "\n[[instance]]\n" + t.instance + "\n";
  for (const Shot& s : t.shots) out += "[[shot_input]]\n" + s.input + "\n[[shot_verdict]]\n" + s.verdict + "\n";
  return out;
}

std::string_view format_reminder() {
  return "Your previous answer could not be read. End your answer with exactly these three lines, using "
         "candidate numbers and two different candidates per line:\n"
         "Lexical: prefer <k>, disprefer <k>\n"
         "Structural: prefer <k>, disprefer <k>\n"
         "Overall: prefer <k>, disprefer <k>";
}

RenderedJudgePrompt render_judge_prompt(const GuidelineTemplate& t, const CandidatePool& pool,
                                        const std::vector<AlignmentResult>& alignments,
                                        const ParseTree& source_parse, const std::vector<ParseTree>& candidate_parses,
                                        std::vector<int> order) {
  const auto k = static_cast<int>(pool.size());
  if (static_cast<int>(alignments.size()) != k)
    throw Error(ErrorCode::ArityMismatch, pool.source_id() + ": " + std::to_string(alignments.size()) +
                                              " alignments for " + std::to_string(k) + " candidates");
  if (static_cast<int>(candidate_parses.size()) != k)
    throw Error(ErrorCode::ArityMismatch, pool.source_id() + ": " + std::to_string(candidate_parses.size()) +
                                              " candidate parses for " + std::to_string(k) + " candidates");
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  }
  {
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    bool ok = static_cast<int>(sorted.size()) == k;
    for (int i = 0; ok && i < k; ++i) ok = sorted[static_cast<std::size_t>(i)] == i;
    if (!ok) throw Error(ErrorCode::Precondition, "judge candidate order is not a permutation");
  }

  std::string candidates;
  std::string aligned;
  std::vector<ParseTree> parses;
  for (int p = 0; p < k; ++p) {
    const int idx = order[static_cast<std::size_t>(p)];
    const auto i = static_cast<std::size_t>(idx);
    if (p) {
      candidates += '\n';
      aligned += '\n';
    }
    candidates += "Candidate " + std::to_string(p) + ": " + pool.at(idx).text;
    aligned += "Candidate " + std::to_string(p) + " alignment:\n" + format_alignment_for_judge(alignments[i]);
    parses.push_back(candidate_parses[i]);
  }

  std::string user = t.instance;
  replace_slot(user, "{{source}}", pool.source_text());
  replace_slot(user, "{{candidates}}", candidates);
  replace_slot(user, "{{alignments}}", aligned);
  replace_slot(user, "{{parses}}", format_parse_for_judge(source_parse, parses));

  RenderedJudgePrompt out;
  out.bundle.system = t.system_text();
  for (const Shot& s : t.shots) out.bundle.shots.emplace_back(s.input, s.verdict);
  out.bundle.user = std::move(user);
  out.order = std::move(order);
  return out;
}

std::vector<int> shuffled_order(std::string_view source_id, std::uint64_t seed, int k) {
  const std::string digest = sha256_hex(source_id);
  const std::uint64_t id_bits = std::stoull(digest.substr(0, 16), nullptr, 16);
  std::mt19937_64 rng(seed ^ id_bits);
  std::vector<int> order(static_cast<std::size_t>(std::max(k, 0)));
  for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = k - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  return order;
}

}  // namespace policysimp
