#include "judge/judge.hpp"

#include <map>

#include "core/error.hpp"
#include "util/log.hpp"

namespace policysimp {

namespace {

// The gateway hands back reasoning and answer separately; verdicts keep the
// raw form.
std::string raw_text(const ChatExchange& x) {
  if (!x.reasoning_text) return x.response_text;
  return "<think>" + *x.reasoning_text + "</think>" + x.response_text;
}

}  // namespace

JudgeOutcome judge_pool(Gateway& gateway, const EndpointProfile& profile, const GuidelineTemplate& guidelines,
                        const CandidatePool& pool, const std::vector<AlignmentResult>& alignments,
                        const ParseTree& source_parse, const std::vector<ParseTree>& candidate_parses,
                        const JudgeOptions& options) {
  const auto k = static_cast<int>(pool.size());
  std::vector<int> order;
  if (options.shuffle) order = shuffled_order(pool.source_id(), options.shuffle_seed, k);
  RenderedJudgePrompt rendered =
      render_judge_prompt(guidelines, pool, alignments, source_parse, candidate_parses, std::move(order));
  rendered.bundle.enable_thinking = options.mode == JudgeMode::Think;

  ChatExchange first = gateway.chat(profile, rendered.bundle);
  try {
    JudgeVerdict v = parse_verdict(pool.source_id(), raw_text(first), options.mode, k, pool.policy(),
                                   rendered.order);
    return JudgeOutcome{std::move(v), rendered.order, 1};
  } catch (const VerdictParseError& e) {
    log::warn("judge " + pool.source_id() + ": " + e.what() + "; retrying with format reminder");
  }
  PromptBundle repaired = rendered.bundle;
  repaired.user += "\n\n";
  repaired.user += format_reminder();
  ChatExchange second = gateway.chat(profile, repaired);
  JudgeVerdict v = parse_verdict(pool.source_id(), raw_text(second), options.mode, k, pool.policy(),
                                 rendered.order);
  return JudgeOutcome{std::move(v), rendered.order, 2};
}

PreferenceTriplet select_pair(const JudgeVerdict& verdict, const CandidatePool& pool, Policy policy) {
  if (verdict.source_id() != pool.source_id())
    throw Error(ErrorCode::KeyMismatch,
                "verdict for " + verdict.source_id() + " paired with pool " + pool.source_id());
  const Dimension d = derive_judge_dimension(policy);
  if (!verdict.has(d))
    throw Error(ErrorCode::DimensionMissing,
                verdict.source_id() + ": verdict has no " + std::string(to_string(d)) + " decision");
  const Decision& dec = verdict.decision(d);
  const Candidate& w = pool.at(dec.preferred);
  const Candidate& l = pool.at(dec.dispreferred);
  PreferenceTriplet t{pool.source_id(), pool.source_text(), w.text, l.text, policy, w.model, l.model,
                      verdict.mode()};
  t.validate();
  return t;
}

PreferenceDistribution preference_distribution(const std::vector<JudgeVerdict>& verdicts,
                                               const std::vector<std::string>& roster, Dimension dimension) {
  PreferenceDistribution out;
  out.dimension = dimension;
  for (const std::string& m : roster) out.models.push_back(ModelShare{m});
  for (const JudgeVerdict& v : verdicts) {
    if (!v.has(dimension)) continue;
    const Decision& d = v.decision(dimension);
    const auto k = static_cast<int>(roster.size());
    if (d.preferred >= k || d.dispreferred >= k)
      throw Error(ErrorCode::ArityMismatch, v.source_id() + ": verdict index outside the roster");
    ++out.models[static_cast<std::size_t>(d.preferred)].preferred;
    ++out.models[static_cast<std::size_t>(d.dispreferred)].dispreferred;
    ++out.verdicts;
  }
  if (out.verdicts > 0) {
    const auto n = static_cast<double>(out.verdicts);
    for (ModelShare& s : out.models) {
      s.preferred_pct = 100.0 * static_cast<double>(s.preferred) / n;
      s.dispreferred_pct = 100.0 * static_cast<double>(s.dispreferred) / n;
    }
  }
  return out;
}

DisagreementReport disagreement_report(const std::vector<JudgeVerdict>& think,
                                       const std::vector<JudgeVerdict>& nothink, Policy policy) {
  const Dimension dim = derive_judge_dimension(policy);
  std::map<std::string, const JudgeVerdict*> a, b;
  for (const JudgeVerdict& v : think) a[v.source_id()] = &v;
  for (const JudgeVerdict& v : nothink) b[v.source_id()] = &v;
  if (a.size() != think.size() || b.size() != nothink.size())
    throw Error(ErrorCode::KeyMismatch, "disagreement report: duplicate source ids");
  for (const auto& [id, v] : a)
    if (!b.contains(id)) throw Error(ErrorCode::KeyMismatch, "disagreement report: " + id + " has no no-think verdict");
  if (a.size() != b.size())
    throw Error(ErrorCode::KeyMismatch, "disagreement report: no-think verdicts cover extra sources");

  DisagreementReport out;
  out.dimension = dim;
  for (const auto& [id, tv] : a) {
    const JudgeVerdict* nv = b.at(id);
    if (!tv->has(dim) || !nv->has(dim))
      throw Error(ErrorCode::DimensionMissing, id + ": verdict lacks the " + std::string(to_string(dim)) + " decision");
    DisagreementItem item{id, tv->decision(dim), nv->decision(dim)};
    item.differ = item.think != item.nothink;
    item.opposite = item.think.preferred == item.nothink.dispreferred ||
                    item.think.dispreferred == item.nothink.preferred;
    ++out.items;
    if (item.differ) ++out.disagreements;
    if (item.opposite) ++out.opposites;
    out.details.push_back(std::move(item));
  }
  if (out.items > 0) {
    out.disagree_rate = static_cast<double>(out.disagreements) / static_cast<double>(out.items);
    out.opposite_rate = static_cast<double>(out.opposites) / static_cast<double>(out.items);
  }
  return out;
}

}  // namespace policysimp
