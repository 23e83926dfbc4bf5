#include "candidates/factory.hpp"

#include <array>

#include "text/tokenize.hpp"
#include "util/log.hpp"
#include "util/parallel.hpp"

namespace policysimp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char a = text[i];
    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a + 32);
    if (a != prefix[i]) return false;
  }
  return true;
}

}  // namespace

std::string normalize_candidate(std::string_view raw) {
  std::string s = trim(raw);
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kQuotes = {{
      {"\"", "\""}, {"'", "'"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"\xE2\x80\x98", "\xE2\x80\x99"},
  }};
  for (const auto& [open, close] : kQuotes) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      const std::string inner = s.substr(open.size(), s.size() - open.size() - close.size());
      // "a" and "b" -> leave alone: the quotes are not a single wrapping pair.
      if (inner.find(close) == std::string::npos) {
        s = trim(inner);
        break;
      }
    }
  }
  return s;
}

bool looks_like_refusal(std::string_view text) {
  static constexpr std::array<std::string_view, 7> kPrefixes = {
      "i'm sorry", "i am sorry", "sorry,", "i cannot", "i can't", "as an ai", "i'm unable"};
  for (auto p : kPrefixes)
    if (starts_with_ci(text, p)) return true;
  return false;
}

CandidatePool build_pool(Gateway& gateway, const TemplateRegistry& templates, const SourceRecord& source,
                         Policy policy, const std::vector<EndpointProfile>& roster, ShotMode mode) {
  if (roster.size() < 2) throw Error(ErrorCode::Precondition, "candidate roster needs at least 2 models");
  if (source.filtered() || source.text.empty())
    throw Error(ErrorCode::Precondition, "source " + source.id + " is filtered out");
  const PromptBundle prompt = render_generation_prompt(templates, policy, source.text, mode);
  const auto source_tokens = normalize_tokens(source.text);

  const std::size_t k_count = roster.size();
  std::vector<Candidate> cands(k_count);
  std::vector<std::optional<std::string>> failures(k_count);
  parallel_for(k_count, static_cast<int>(k_count), [&](std::size_t k) {
    try {
      const ChatExchange ex = gateway.chat(roster[k], prompt);
      Candidate c;
      c.index = static_cast<int>(k);
      c.model = roster[k].model_name;
      c.decode = roster[k].decode;
      c.text = normalize_candidate(ex.response_text);
      if (c.text.empty()) {
        failures[k] = "empty output";
        return;
      }
      c.no_edit = normalize_tokens(c.text) == source_tokens;
      c.refusal = looks_like_refusal(c.text);
      cands[k] = std::move(c);
    } catch (const Error& e) {
      failures[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < k_count; ++k)
    if (failures[k])
      throw GenerationFailed(static_cast<int>(k), "source " + source.id + ": model " + std::to_string(k) + " (" +
                                                      roster[k].model_name + "): " + *failures[k]);

  std::vector<std::string> names;
  for (const auto& p : roster) names.push_back(p.model_name);
  return CandidatePool(source.id, source.text, policy, std::move(cands), std::move(names));
}

std::vector<PoolOutcome> build_pools(Gateway& gateway, const TemplateRegistry& templates,
                                     const std::vector<SourceRecord>& sources, Policy policy,
                                     const std::vector<EndpointProfile>& roster, int workers, ShotMode mode) {
  templates.get(policy);  // fail fast on MissingTemplate
  std::vector<PoolOutcome> out(sources.size());
  parallel_for(sources.size(), workers, [&](std::size_t i) {
    PoolOutcome& o = out[i];
    o.source_id = sources[i].id;
    try {
      o.pool = build_pool(gateway, templates, sources[i], policy, roster, mode);
    } catch (const GenerationFailed& e) {
      o.failed_model = e.model_index();
      o.error_code = e.code();
      o.error = e.what();
      log::warn(std::string("generate: skipping ") + e.what());
    }
  });
  return out;
}

}  // namespace policysimp
