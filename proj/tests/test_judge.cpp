#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "core/error.hpp"
#include "core/serialize.hpp"
#include "judge/guidelines.hpp"
#include "judge/judge.hpp"
#include "judge/verdict.hpp"
#include "util/io.hpp"
#include "support/verdict_cases.hpp"

using namespace policysimp;
using testsupport::ALL;
using testsupport::LEX;
using testsupport::three;
using D = Dimension;

namespace {

CandidatePool pool4(const std::string& id = "src:00000001", Policy policy = Policy::LexicalParaphrasing) {
  std::vector<std::string> roster = {"qwen2.5-7b", "llama3.1-8b", "phi4-14b", "qwen3-32b"};
  std::vector<Candidate> cs;
  const char* texts[] = {"The boy was tired.", "The lad was weary.", "The child was sleepy.", "The boy was very tired."};
  for (int k = 0; k < 4; ++k) {
    Candidate c;
    c.index = k;
    c.text = texts[k];
    c.model = roster[static_cast<std::size_t>(k)];
    cs.push_back(c);
  }
  return CandidatePool(id, "The lad was exhausted.", policy, cs, roster);
}

AlignmentResult alignment(const std::string& tag) {
  AlignmentResult a;
  a.source_tokens = {"the", "lad"};
  a.candidate_tokens = {"the", tag};
  a.links = {{0, 0}, {1, 1}};
  a.plan = Matrix(2, 2);
  a.null_mass = {0, 0};
  a.candidate_null_mass = {0, 0};
  return a;
}

std::vector<AlignmentResult> alignments4() {
  return {alignment("boy"), alignment("lad"), alignment("child"), alignment("kid")};
}

std::vector<ParseTree> parses4() {
  return {ParseTree{"(S (NP boy))", true, ParseIssue::None}, ParseTree{"(S (NP lad))", true, ParseIssue::None},
          ParseTree{"(S", false, ParseIssue::Unbalanced}, ParseTree{"(S (NP kid))", true, ParseIssue::None}};
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Guidelines, DefaultTemplateIsComplete) {
  const GuidelineTemplate t = default_guideline_template();
  EXPECT_NO_THROW(t.validate());
  EXPECT_EQ(t.shots.size(), 3u);
  std::set<std::string> lex, str;
  for (const auto& p : t.lexical_principles) lex.insert(p.op);
  for (const auto& p : t.structural_principles) str.insert(p.op);
  EXPECT_EQ(lex, (std::set<std::string>{"replace", "delete", "keep", "add"}));
  EXPECT_EQ(str, (std::set<std::string>{"split", "reorder", "keep", "replace"}));
  // Every shot verdict ends in the canonical grammar and parses cleanly.
  for (const Shot& s : t.shots) {
    const auto d = parse_decisions(s.verdict);
    EXPECT_EQ(d.size(), 3u);
  }
}

TEST(Guidelines, TextRoundTrip) {
  const GuidelineTemplate t = default_guideline_template();
  EXPECT_EQ(parse_guideline_template(guideline_template_text(t)), t);
}

TEST(Guidelines, LoadFromFile) {
  const auto dir = std::filesystem::temp_directory_path() / "psimp_guidelines_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "g.txt", guideline_template_text(default_guideline_template()));
  EXPECT_EQ(load_guideline_template(dir / "g.txt"), default_guideline_template());
  try {
    load_guideline_template(dir / "absent.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingTemplate);
  }
  std::filesystem::remove_all(dir);
}

TEST(Guidelines, RejectsIncompleteTemplates) {
  const std::string good = guideline_template_text(default_guideline_template());
  auto expect_missing = [](const std::string& text) {
    try {
      parse_guideline_template(text);
      ADD_FAILURE() << "accepted:\n" << text.substr(0, 200);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MissingTemplate);
    }
  };
  // A lexical op disappears.
  {
    std::string t = good;
    const auto at = t.find("- add (+)");
    const auto end = t.find('\n', t.find("- add (-)"));
    t.erase(at, end - at + 1);
    expect_missing(t);
  }
  // Unknown mark.
  {
    std::string t = good;
    t.replace(t.find("- split (++)"), 12, "- split (+++)");
    expect_missing(t);
  }
  // Missing slot.
  {
    std::string t = good;
    t.replace(t.find("{{parses}}"), 10, "");
    expect_missing(t);
  }
  // Only two shots.
  {
    std::string t = good;
    t.erase(t.rfind("[[shot_input]]"));
    expect_missing(t);
  }
  expect_missing(good + "[[mystery]]\nx\n");
  expect_missing("stray text\n" + good);
}

TEST(JudgePrompt, FourCandidateSectionsAndStableRerender) {
  const GuidelineTemplate t = default_guideline_template();
  const auto pool = pool4();
  const ParseTree src{"(S (NP lad))", true, ParseIssue::None};
  const auto r1 = render_judge_prompt(t, pool, alignments4(), src, parses4());
  const auto r2 = render_judge_prompt(t, pool, alignments4(), src, parses4());
  EXPECT_EQ(r1.bundle, r2.bundle);
  EXPECT_EQ(r1.order, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(r1.bundle.shots.size(), 3u);
  const std::string& u = r1.bundle.user;
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(count(u, "Candidate " + std::to_string(k) + ": "), 1u);
    EXPECT_EQ(count(u, "Candidate " + std::to_string(k) + " alignment:"), 1u);
    EXPECT_EQ(count(u, "Candidate " + std::to_string(k) + " parse:"), 1u);
  }
  EXPECT_EQ(count(u, " alignment:\n"), 4u);
  EXPECT_NE(u.find("The lad was exhausted."), std::string::npos);
  EXPECT_NE(u.find("(parse unavailable)"), std::string::npos);
  EXPECT_NE(u.find("lad <-> child"), std::string::npos);
  EXPECT_EQ(u.find("{{"), std::string::npos);
  // Guidelines precede the shots, which precede the instance.
  EXPECT_NE(r1.bundle.system.find("Lexical principles:"), std::string::npos);
  EXPECT_NE(r1.bundle.system.find("- split (++)"), std::string::npos);
}

TEST(JudgePrompt, ArityMismatch) {
  const GuidelineTemplate t = default_guideline_template();
  auto al = alignments4();
  al.pop_back();
  const ParseTree src{"(S x)", true, ParseIssue::None};
  try {
    render_judge_prompt(t, pool4(), al, src, parses4());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ArityMismatch);
  }
  auto ps = parses4();
  ps.push_back(ps.front());
  try {
    render_judge_prompt(t, pool4(), alignments4(), src, ps);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ArityMismatch);
  }
  EXPECT_THROW(render_judge_prompt(t, pool4(), alignments4(), src, parses4(), {0, 1, 1, 3}), Error);
}

TEST(JudgePrompt, PermutedOrderRelabelsCandidates) {
  const GuidelineTemplate t = default_guideline_template();
  const ParseTree src{"(S x)", true, ParseIssue::None};
  const auto r = render_judge_prompt(t, pool4(), alignments4(), src, parses4(), {3, 2, 1, 0});
  EXPECT_NE(r.bundle.user.find("Candidate 0: The boy was very tired."), std::string::npos);
  EXPECT_NE(r.bundle.user.find("Candidate 3: The boy was tired."), std::string::npos);
  EXPECT_NE(r.bundle.user.find("Candidate 1 parse:\n(parse unavailable)"), std::string::npos);
}

TEST(JudgePrompt, ShuffledOrderIsDeterministicPermutation) {
  int non_identity = 0;
  for (int i = 0; i < 50; ++i) {
    const std::string id = "src:" + std::to_string(i);
    const auto o = shuffled_order(id, 7, 4);
    EXPECT_EQ(o, shuffled_order(id, 7, 4));
    auto s = o;
    std::sort(s.begin(), s.end());
    EXPECT_EQ(s, (std::vector<int>{0, 1, 2, 3}));
    if (o != s) ++non_identity;
  }
  EXPECT_GT(non_identity, 30);
}

TEST(VerdictParse, ThirtyCases) {
  const auto cases = testsupport::verdict_cases();
  ASSERT_EQ(cases.size(), 30u);
  for (const testsupport::VerdictCase& c : cases) {
    SCOPED_TRACE(c.name);
    if (c.failure) {
      try {
        parse_verdict("s", c.raw, JudgeMode::Think, c.k, c.policy);
        ADD_FAILURE() << "parsed";
      } catch (const VerdictParseError& e) {
        EXPECT_EQ(e.reason(), *c.failure) << e.what();
      }
      continue;
    }
    const JudgeVerdict v = parse_verdict("s", c.raw, JudgeMode::Think, c.k, c.policy);
    EXPECT_EQ(v.decisions(), c.expected);
    EXPECT_EQ(v.rationale(), c.raw);
  }
}

TEST(VerdictParse, ReasoningRetainedAndOrderMapped) {
  const std::string raw = "<think>candidate 0 keeps hard words</think>Lexical: prefer 0, disprefer 3";
  const JudgeVerdict v = parse_verdict("s", raw, JudgeMode::Think, 4, LEX, {2, 0, 3, 1});
  ASSERT_TRUE(v.reasoning().has_value());
  EXPECT_EQ(*v.reasoning(), "candidate 0 keeps hard words");
  EXPECT_NE(v.rationale().find("<think>"), std::string::npos);
  EXPECT_EQ(v.decision(D::Lexical), (Decision{2, 1}));
}

// Gateway-backed judging.

namespace {

class ScriptedJudge : public Transport {
 public:
  std::vector<std::string> answers;  // served in call order, last repeats
  std::vector<Json> bodies;

  HttpResponse post(const EndpointProfile&, const std::string&, const Json& body, int) override {
    bodies.push_back(body);
    const std::string& a = answers[std::min(bodies.size() - 1, answers.size() - 1)];
    Json resp = {{"choices", Json::array({Json{{"message", Json{{"content", a}}}}})}};
    return {200, resp.dump()};
  }
};

EndpointProfile judge_profile() {
  EndpointProfile p;
  p.model_name = "qwen3-32b";
  p.max_retries = 0;
  p.backoff_initial = 0;
  return p;
}

}  // namespace

TEST(JudgePool, ParsesFirstAnswerAndSetsThinkingFlag) {
  auto t = std::make_shared<ScriptedJudge>();
  t->answers = {"<think>hmm</think>Lexical: prefer 3, disprefer 1; Structural: prefer 2, disprefer 1; Overall: prefer 3, disprefer 0"};
  Gateway g(t);
  const ParseTree src{"(S x)", true, ParseIssue::None};
  const auto out = judge_pool(g, judge_profile(), default_guideline_template(), pool4(), alignments4(), src,
                              parses4(), JudgeOptions{JudgeMode::Think});
  EXPECT_EQ(out.requests, 1);
  EXPECT_EQ(out.verdict.decision(D::Lexical), (Decision{3, 1}));
  EXPECT_EQ(out.verdict.decision(D::Overall), (Decision{3, 0}));
  EXPECT_EQ(out.verdict.reasoning(), std::optional<std::string>("hmm"));
  ASSERT_EQ(t->bodies.size(), 1u);
  EXPECT_EQ(t->bodies[0]["chat_template_kwargs"]["enable_thinking"], true);

  auto t2 = std::make_shared<ScriptedJudge>();
  t2->answers = {"Lexical: prefer 1, disprefer 0"};
  Gateway g2(t2);
  judge_pool(g2, judge_profile(), default_guideline_template(), pool4(), alignments4(), src, parses4(),
             JudgeOptions{JudgeMode::NoThink});
  EXPECT_EQ(t2->bodies[0]["chat_template_kwargs"]["enable_thinking"], false);
}

TEST(JudgePool, RetriesOnceWithReminder) {
  auto t = std::make_shared<ScriptedJudge>();
  t->answers = {"Candidate 3 is nice.", "Lexical: prefer 3, disprefer 1"};
  Gateway g(t);
  const ParseTree src{"(S x)", true, ParseIssue::None};
  const auto out = judge_pool(g, judge_profile(), default_guideline_template(), pool4(), alignments4(), src,
                              parses4(), JudgeOptions{JudgeMode::NoThink});
  EXPECT_EQ(out.requests, 2);
  EXPECT_EQ(out.verdict.decision(D::Lexical), (Decision{3, 1}));
  ASSERT_EQ(t->bodies.size(), 2u);
  const std::string last_user = t->bodies[1]["messages"].back()["content"];
  EXPECT_NE(last_user.find(std::string(format_reminder())), std::string::npos);

  auto bad = std::make_shared<ScriptedJudge>();
  bad->answers = {"Lexical: prefer 5, disprefer 1"};
  Gateway g2(bad);
  try {
    judge_pool(g2, judge_profile(), default_guideline_template(), pool4(), alignments4(), src, parses4(),
               JudgeOptions{JudgeMode::NoThink});
    FAIL();
  } catch (const VerdictParseError& e) {
    EXPECT_EQ(e.reason(), VerdictFailure::IndexOutOfRange);
  }
  EXPECT_EQ(bad->bodies.size(), 2u);
}

TEST(JudgePool, ShuffledLabelsMapBackToPool) {
  auto t = std::make_shared<ScriptedJudge>();
  t->answers = {"Lexical: prefer 0, disprefer 1"};
  Gateway g(t);
  const ParseTree src{"(S x)", true, ParseIssue::None};
  JudgeOptions opt{JudgeMode::Think, true, 11};
  const auto out = judge_pool(g, judge_profile(), default_guideline_template(), pool4(), alignments4(), src,
                              parses4(), opt);
  EXPECT_EQ(out.order, shuffled_order(pool4().source_id(), 11, 4));
  EXPECT_EQ(out.verdict.decision(D::Lexical), (Decision{out.order[0], out.order[1]}));
}

TEST(SelectPair, PicksByPolicyDimension) {
  const JudgeVerdict v("src:00000001", three({3, 1}, {1, 0}, {2, 0}), "r", std::nullopt, JudgeMode::Think, 4);
  const auto lex = select_pair(v, pool4(), LEX);
  EXPECT_EQ(lex.preferred_text, "The boy was very tired.");
  EXPECT_EQ(lex.dispreferred_text, "The lad was weary.");
  EXPECT_EQ(lex.preferred_model, "qwen3-32b");
  EXPECT_EQ(lex.dispreferred_model, "llama3.1-8b");
  const auto all = select_pair(v, pool4(), ALL);
  EXPECT_EQ(all.preferred_text, "The child was sleepy.");
  EXPECT_EQ(all.dispreferred_text, "The boy was tired.");
  EXPECT_EQ(all.policy, ALL);
  EXPECT_EQ(select_pair(v, pool4(), ALL), all);
}

TEST(SelectPair, Errors) {
  const JudgeVerdict lexical_only("src:00000001", {{D::Lexical, {3, 1}}}, "r", std::nullopt, JudgeMode::Think, 4);
  try {
    select_pair(lexical_only, pool4(), ALL);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMissing);
  }
  // Candidates 3 and 1 with identical text.
  const auto base = pool4();
  auto cs = base.candidates();
  cs[1].text = cs[3].text;
  const CandidatePool dup(base.source_id(), base.source_text(), base.policy(), cs, base.roster());
  try {
    select_pair(lexical_only, dup, LEX);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateTriplet);
  }
  try {
    select_pair(lexical_only, pool4("other"), LEX);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KeyMismatch);
  }
}

namespace {

const std::vector<std::string> kRoster = {"qwen2.5-7b", "llama3.1-8b", "phi4-14b", "qwen3-32b"};

JudgeVerdict lex_verdict(const std::string& id, int w, int l) {
  return JudgeVerdict(id, {{D::Lexical, {w, l}}}, "r", std::nullopt, JudgeMode::Think, 4);
}

}  // namespace

TEST(PreferenceDistribution, ConstantVerdicts) {
  std::vector<JudgeVerdict> vs;
  for (int i = 0; i < 4; ++i) vs.push_back(lex_verdict("s" + std::to_string(i), 0, 1 + i % 3));
  const auto d = preference_distribution(vs, kRoster, D::Lexical);
  EXPECT_EQ(d.verdicts, 4);
  EXPECT_DOUBLE_EQ(d.models[0].preferred_pct, 100.0);
  for (int k = 1; k < 4; ++k) EXPECT_DOUBLE_EQ(d.models[static_cast<std::size_t>(k)].preferred_pct, 0.0);
}

TEST(PreferenceDistribution, CountsMatchDirectCounting) {
  // Preferred counts (3, 2, 4, 1) over 10 verdicts.
  const int pref[] = {0, 0, 0, 1, 1, 2, 2, 2, 2, 3};
  const int disp[] = {1, 2, 3, 0, 3, 0, 1, 3, 0, 2};
  std::vector<JudgeVerdict> vs;
  for (int i = 0; i < 10; ++i) vs.push_back(lex_verdict("s" + std::to_string(i), pref[i], disp[i]));
  const auto d = preference_distribution(vs, kRoster, D::Lexical);
  const double expected_pref[] = {30, 20, 40, 10};
  const double expected_disp[] = {30, 20, 20, 30};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(d.models[k].preferred_pct, expected_pref[k], 1e-12);
    EXPECT_NEAR(d.models[k].dispreferred_pct, expected_disp[k], 1e-12);
    EXPECT_EQ(d.models[k].model, kRoster[k]);
  }
}

TEST(PreferenceDistribution, PercentagesSumTo100) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 50);
    std::vector<JudgeVerdict> vs;
    for (int i = 0; i < n; ++i) {
      const int w = static_cast<int>(rng() % 4);
      const int l = (w + 1 + static_cast<int>(rng() % 3)) % 4;
      vs.push_back(lex_verdict("s" + std::to_string(i), w, l));
    }
    const auto d = preference_distribution(vs, kRoster, D::Lexical);
    double sp = 0, sd = 0;
    for (const auto& m : d.models) {
      sp += m.preferred_pct;
      sd += m.dispreferred_pct;
    }
    EXPECT_NEAR(sp, 100.0, 0.1);
    EXPECT_NEAR(sd, 100.0, 0.1);
  }
}

TEST(Disagreement, IdenticalAndReversed) {
  std::vector<JudgeVerdict> a, b;
  for (int i = 0; i < 6; ++i) {
    a.push_back(lex_verdict("s" + std::to_string(i), 3, 1));
    b.push_back(lex_verdict("s" + std::to_string(i), 1, 3));
  }
  const auto same = disagreement_report(a, a, LEX);
  EXPECT_EQ(same.disagree_rate, 0.0);
  EXPECT_EQ(same.opposite_rate, 0.0);
  const auto rev = disagreement_report(a, b, LEX);
  EXPECT_EQ(rev.disagree_rate, 1.0);
  EXPECT_EQ(rev.opposite_rate, 1.0);
}

TEST(Disagreement, TenItemFixture) {
  // 4 of 10 differ; in items 0 and 1 one mode rejects what the other prefers.
  std::vector<JudgeVerdict> think, nothink;
  const int t[10][2] = {{3, 1}, {2, 0}, {0, 1}, {1, 2}, {0, 3}, {1, 3}, {2, 3}, {3, 0}, {0, 2}, {1, 0}};
  const int n[10][2] = {{1, 3}, {0, 1}, {2, 3}, {0, 3}, {0, 3}, {1, 3}, {2, 3}, {3, 0}, {0, 2}, {1, 0}};
  for (int i = 0; i < 10; ++i) {
    think.push_back(lex_verdict("s" + std::to_string(i), t[i][0], t[i][1]));
    nothink.push_back(lex_verdict("s" + std::to_string(i), n[i][0], n[i][1]));
  }
  // Counting oracle.
  int differ = 0, opposite = 0;
  for (int i = 0; i < 10; ++i) {
    if (t[i][0] != n[i][0] || t[i][1] != n[i][1]) ++differ;
    if (t[i][0] == n[i][1] || t[i][1] == n[i][0]) ++opposite;
  }
  ASSERT_EQ(differ, 4);
  ASSERT_EQ(opposite, 2);
  const auto r = disagreement_report(think, nothink, LEX);
  EXPECT_DOUBLE_EQ(r.disagree_rate, 0.4);
  EXPECT_DOUBLE_EQ(r.opposite_rate, 0.2);
  EXPECT_EQ(r.details.size(), 10u);
}

TEST(Disagreement, OppositeNeverExceedsDisagree) {
  std::mt19937_64 rng(9);
  auto rand_pair = [&] {
    const int w = static_cast<int>(rng() % 4);
    return std::pair{w, (w + 1 + static_cast<int>(rng() % 3)) % 4};
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<JudgeVerdict> a, b;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      auto [w1, l1] = rand_pair();
      auto [w2, l2] = rand_pair();
      a.push_back(lex_verdict("s" + std::to_string(i), w1, l1));
      b.push_back(lex_verdict("s" + std::to_string(i), w2, l2));
    }
    const auto r = disagreement_report(a, b, LEX);
    EXPECT_LE(r.opposite_rate, r.disagree_rate);
  }
}

TEST(Disagreement, KeyMismatch) {
  std::vector<JudgeVerdict> a = {lex_verdict("s0", 0, 1), lex_verdict("s1", 0, 1)};
  std::vector<JudgeVerdict> b = {lex_verdict("s0", 0, 1), lex_verdict("s2", 0, 1)};
  try {
    disagreement_report(a, b, LEX);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KeyMismatch);
  }
  b.pop_back();
  EXPECT_THROW(disagreement_report(a, b, LEX), Error);
}
