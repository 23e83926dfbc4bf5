#include "judge/verdict.hpp"

#include <algorithm>
#include <regex>
#include <vector>

#include "core/error.hpp"
#include "gateway/gateway.hpp"
#include "text/tokenize.hpp"

namespace policysimp {

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    out.emplace_back(text.substr(pos, eol - pos));
    pos = eol + 1;
  }
  return out;
}

std::optional<Dimension> dimension_word(const std::string& word) {
  if (word.starts_with("lexical")) return Dimension::Lexical;
  if (word.starts_with("structur")) return Dimension::Structural;
  if (word == "overall") return Dimension::Overall;
  return std::nullopt;
}

// Dimensions named anywhere on a (lowercased) line.
std::vector<Dimension> dimensions_on(const std::string& line) {
  static const std::regex word_re(R"(\b(lexical(?:ly)?|structur(?:al|ally|e)|overall)\b)");
  std::vector<Dimension> out;
  for (auto it = std::sregex_iterator(line.begin(), line.end(), word_re); it != std::sregex_iterator(); ++it) {
    const auto d = dimension_word((*it)[1].str());
    if (d && std::find(out.begin(), out.end(), *d) == out.end()) out.push_back(*d);
  }
  return out;
}

int to_index(const std::string& digits) {
  if (digits.size() > 6) return 1000000;  // still out of range, without overflow
  return std::stoi(digits);
}

}  // namespace

std::map<Dimension, Decision> parse_decisions(std::string_view answer, std::optional<Dimension> unlabeled) {
  static const std::regex canonical_re(
      R"(\b(lexical|structural|overall)[\s*_]*:[\s*_]*prefer(?:red)?[\s:]*(?:candidate\s*)?#?(\d+)[\s*_]*[,;]?[\s*_]*disprefer(?:red)?[\s:]*(?:candidate\s*)?#?(\d+))");
  static const std::regex lenient_pref_re(
      R"(\b(?:prefer(?:red)?|choose|chosen)\b[^0-9\n]{0,24}?(\d+))");
  static const std::regex lenient_dispref_re(
      R"(\b(?:disprefer(?:red)?|reject(?:ed)?)\b[^0-9\n]{0,24}?(\d+))");

  std::map<Dimension, Decision> canonical;
  std::map<Dimension, Decision> lenient;
  std::optional<Decision> unlabeled_decision;

  for (const std::string& raw_line : split_lines(answer)) {
    const std::string line = lowercase(raw_line);
    bool matched = false;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), canonical_re); it != std::sregex_iterator();
         ++it) {
      const Dimension d = *dimension_word((*it)[1].str());
      canonical[d] = Decision{to_index((*it)[2].str()), to_index((*it)[3].str())};
      matched = true;
    }
    if (matched) continue;
    std::smatch pm, dm;
    if (!std::regex_search(line, pm, lenient_pref_re) || !std::regex_search(line, dm, lenient_dispref_re)) continue;
    const Decision dec{to_index(pm[1].str()), to_index(dm[1].str())};
    const auto dims = dimensions_on(line);
    if (dims.size() == 1)
      lenient[dims.front()] = dec;
    else if (dims.empty())
      unlabeled_decision = dec;
  }

  std::map<Dimension, Decision> out = canonical;
  for (const auto& [d, dec] : lenient) out.emplace(d, dec);
  if (unlabeled && unlabeled_decision) out.emplace(*unlabeled, *unlabeled_decision);
  if (out.empty()) throw VerdictParseError(VerdictFailure::NoDecision, "no prefer/disprefer decision found");
  return out;
}

JudgeVerdict parse_verdict(std::string source_id, std::string_view raw, JudgeMode mode, int candidate_count,
                           Policy policy, const std::vector<int>& order) {
  auto [answer, reasoning] = split_reasoning(raw);
  const std::map<Dimension, Decision> labels = parse_decisions(answer, derive_judge_dimension(policy));
  if (!order.empty() && static_cast<int>(order.size()) != candidate_count)
    throw Error(ErrorCode::Precondition, "candidate order does not match the candidate count");

  std::map<Dimension, Decision> decisions;
  for (const auto& [d, dec] : labels) {
    for (int idx : {dec.preferred, dec.dispreferred})
      if (idx < 0 || idx >= candidate_count)
        throw VerdictParseError(VerdictFailure::IndexOutOfRange,
                                std::string(to_string(d)) + " index " + std::to_string(idx) + " outside 0.." +
                                    std::to_string(candidate_count - 1));
    auto map = [&](int label) { return order.empty() ? label : order[static_cast<std::size_t>(label)]; };
    decisions[d] = Decision{map(dec.preferred), map(dec.dispreferred)};
  }
  JudgeVerdict v(std::move(source_id), std::move(decisions), std::string(raw), std::move(reasoning), mode,
                 candidate_count);
  v.require(policy);
  return v;
}

}  // namespace policysimp
