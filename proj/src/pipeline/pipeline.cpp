#include "pipeline/pipeline.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <tuple>

#include "align/aligner.hpp"
#include "candidates/factory.hpp"
#include "core/error.hpp"
#include "dataset/dataset.hpp"
#include "judge/judge.hpp"
#include "parse/parse.hpp"
#include "util/io.hpp"
#include "util/log.hpp"
#include "util/parallel.hpp"

namespace policysimp {

namespace {

namespace fs = std::filesystem;

Json parse_tree_json(const ParseTree& t) {
  return Json{{"bracketed", t.bracketed}, {"valid", t.valid}, {"issue", to_string(t.issue)}};
}

ParseTree parse_tree_from_json(const Json& j) {
  return ParseTree{get_field<std::string>(j, "bracketed", "parse"), get_field<bool>(j, "valid", "parse"),
                   parse_parse_issue(get_field<std::string>(j, "issue", "parse"))};
}

Json skip_record(const std::string& source_id, const Error& e) {
  return Json{{"source_id", source_id}, {"error_code", error_code_name(e.code())}, {"error", e.what()}};
}

std::vector<Json> require_jsonl(const fs::path& path, std::string_view stage, std::string_view producer) {
  if (!fs::exists(path))
    throw Error(ErrorCode::Io, std::string(stage) + ": " + path.string() + " not found; run '" +
                                   std::string(producer) + "' first");
  return read_jsonl(path);
}

std::vector<CandidatePool> load_pools(const fs::path& dir, std::string_view stage) {
  std::vector<CandidatePool> pools;
  for (const Json& j : require_jsonl(dir / "pools.jsonl", stage, "generate")) pools.push_back(pool_from_json(j));
  return pools;
}

std::string verdict_file(JudgeMode m) { return "verdicts." + std::string(to_string(m)) + ".jsonl"; }

std::vector<JudgeVerdict> load_verdicts(const fs::path& path) {
  std::vector<JudgeVerdict> out;
  for (const Json& j : read_jsonl(path)) out.push_back(verdict_from_json(j));
  return out;
}

// Keeps results in input order regardless of which worker produced them.
template <typename T>
struct Slots {
  std::vector<std::optional<T>> ok;
  std::vector<std::optional<Json>> skipped;
  explicit Slots(std::size_t n) : ok(n), skipped(n) {}

  std::pair<std::vector<Json>, std::vector<Json>> collect(const std::function<Json(const T&)>& encode) const {
    std::vector<Json> a, b;
    for (std::size_t i = 0; i < ok.size(); ++i) {
      if (ok[i]) a.push_back(encode(*ok[i]));
      if (skipped[i]) b.push_back(*skipped[i]);
    }
    return {std::move(a), std::move(b)};
  }
};

TemplateRegistry load_templates(const PipelineConfig& c) {
  TemplateRegistry reg = TemplateRegistry::builtin();
  for (const auto& [policy, path] : c.template_files) reg.load(policy, path);
  return reg;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), gateway_(std::move(transport), config_.work_dir / "cache") {}

Json Pipeline::ingest() {
  fs::create_directories(config_.work_dir);
  const auto records = load_sources(config_.corpus_path, config_.corpus);
  const FilterResult r = filter_sources(records, config_.filter);
  std::vector<Json> kept, rejected;
  for (const auto& s : r.kept) kept.push_back(to_json(s));
  for (const auto& s : r.rejected) rejected.push_back(to_json(s));
  write_jsonl(config_.work_dir / "sources.jsonl", kept);
  write_jsonl(config_.work_dir / "sources.rejected.jsonl", rejected);
  Json reasons = Json::object();
  for (const auto& s : r.rejected) {
    const std::string key(to_string(s.reason));
    reasons[key] = reasons.value(key, 0) + 1;
  }
  return Json{{"read", records.size()}, {"kept", r.kept.size()}, {"rejected", r.rejected.size()},
              {"rejected_by_reason", reasons}};
}

Json Pipeline::generate() {
  const fs::path dir = config_.policy_dir();
  fs::create_directories(dir);
  std::vector<SourceRecord> sources;
  for (const Json& j : require_jsonl(config_.work_dir / "sources.jsonl", "generate", "ingest"))
    sources.push_back(source_record_from_json(j));
  const TemplateRegistry templates = load_templates(config_);
  const auto outcomes =
      build_pools(gateway_, templates, sources, config_.policy, config_.roster, config_.workers, config_.shot_mode);
  std::vector<Json> pools, skipped;
  for (const PoolOutcome& o : outcomes) {
    if (o.pool) {
      pools.push_back(to_json(*o.pool));
      continue;
    }
    Json s{{"source_id", o.source_id}, {"error_code", error_code_name(o.error_code)}, {"error", o.error}};
    s["failed_model"] = o.failed_model >= 0 ? Json(config_.roster[static_cast<std::size_t>(o.failed_model)].model_name)
                                            : Json(nullptr);
    skipped.push_back(std::move(s));
  }
  write_jsonl(dir / "pools.jsonl", pools);
  write_jsonl(dir / "generate.skipped.jsonl", skipped);
  return Json{{"sources", sources.size()}, {"pools", pools.size()}, {"skipped", skipped.size()}};
}

Json Pipeline::align() {
  const fs::path dir = config_.policy_dir();
  const auto pools = load_pools(dir, "align");
  Slots<std::pair<std::string, std::vector<AlignmentResult>>> slots(pools.size());
  parallel_for(pools.size(), config_.workers, [&](std::size_t i) {
    const CandidatePool& p = pools[i];
    try {
      std::vector<AlignmentResult> row;
      for (const Candidate& c : p.candidates())
        row.push_back(align_texts(gateway_, config_.embedder, p.source_text(), c.text, config_.alignment));
      slots.ok[i] = {p.source_id(), std::move(row)};
    } catch (const Error& e) {
      log::warn("align: skipping " + p.source_id() + ": " + e.what());
      slots.skipped[i] = skip_record(p.source_id(), e);
    }
  });
  long unconverged = 0;
  for (const auto& s : slots.ok)
    if (s)
      for (const auto& a : s->second) unconverged += a.converged ? 0 : 1;
  auto [ok, skipped] = slots.collect([](const auto& s) {
    Json arr = Json::array();
    for (const auto& a : s.second) arr.push_back(to_json(a));
    return Json{{"source_id", s.first}, {"alignments", std::move(arr)}};
  });
  write_jsonl(dir / "alignments.jsonl", ok);
  write_jsonl(dir / "align.skipped.jsonl", skipped);
  return Json{{"pools", pools.size()}, {"aligned", ok.size()}, {"skipped", skipped.size()},
              {"non_converged_alignments", unconverged}};
}

Json Pipeline::parse() {
  const fs::path dir = config_.policy_dir();
  const auto pools = load_pools(dir, "parse");
  const fs::path cache_path = config_.work_dir / "parse_cache.jsonl";
  ParseCache cache;
  if (fs::exists(cache_path)) cache.load(cache_path);
  auto parse_one = [&](const std::string& text) {
    if (auto hit = cache.get(text)) return *hit;
    ParseTree t = extract_parse(gateway_, config_.parser, text);
    cache.put(text, t);
    return t;
  };
  Slots<std::tuple<std::string, ParseTree, std::vector<ParseTree>>> slots(pools.size());
  parallel_for(pools.size(), config_.workers, [&](std::size_t i) {
    const CandidatePool& p = pools[i];
    try {
      ParseTree src = parse_one(p.source_text());
      std::vector<ParseTree> cands;
      for (const Candidate& c : p.candidates()) cands.push_back(parse_one(c.text));
      slots.ok[i] = {p.source_id(), std::move(src), std::move(cands)};
    } catch (const Error& e) {
      log::warn("parse: skipping " + p.source_id() + ": " + e.what());
      slots.skipped[i] = skip_record(p.source_id(), e);
    }
  });
  cache.save(cache_path);
  long invalid = 0;
  for (const auto& s : slots.ok) {
    if (!s) continue;
    invalid += std::get<1>(*s).valid ? 0 : 1;
    for (const auto& t : std::get<2>(*s)) invalid += t.valid ? 0 : 1;
  }
  auto [ok, skipped] = slots.collect([](const auto& s) {
    Json arr = Json::array();
    for (const auto& t : std::get<2>(s)) arr.push_back(parse_tree_json(t));
    return Json{{"source_id", std::get<0>(s)}, {"source", parse_tree_json(std::get<1>(s))}, {"candidates", arr}};
  });
  write_jsonl(dir / "parses.jsonl", ok);
  write_jsonl(dir / "parse.skipped.jsonl", skipped);
  return Json{{"pools", pools.size()}, {"parsed", ok.size()}, {"skipped", skipped.size()},
              {"invalid_parses", invalid}};
}

Json Pipeline::judge() {
  const fs::path dir = config_.policy_dir();
  const auto pools = load_pools(dir, "judge");
  std::map<std::string, std::vector<AlignmentResult>> alignments;
  for (const Json& j : require_jsonl(dir / "alignments.jsonl", "judge", "align")) {
    std::vector<AlignmentResult> row;
    for (const Json& a : get_field<Json>(j, "alignments", "alignments")) row.push_back(alignment_from_json(a));
    alignments[get_field<std::string>(j, "source_id", "alignments")] = std::move(row);
  }
  std::map<std::string, std::pair<ParseTree, std::vector<ParseTree>>> parses;
  for (const Json& j : require_jsonl(dir / "parses.jsonl", "judge", "parse")) {
    std::vector<ParseTree> cands;
    for (const Json& t : get_field<Json>(j, "candidates", "parses")) cands.push_back(parse_tree_from_json(t));
    parses[get_field<std::string>(j, "source_id", "parses")] = {parse_tree_from_json(get_field<Json>(j, "source", "parses")),
                                                                 std::move(cands)};
  }
  const GuidelineTemplate guidelines =
      config_.guidelines_file ? load_guideline_template(*config_.guidelines_file) : default_guideline_template();

  Json summary = Json::object();
  for (JudgeMode mode : config_.judge_modes) {
    const EndpointProfile profile = config_.judge_profile(mode);
    const JudgeOptions opts{mode, config_.judge_shuffle, config_.judge_shuffle_seed};
    Slots<JudgeVerdict> slots(pools.size());
    std::atomic<long> repaired{0};
    parallel_for(pools.size(), config_.workers, [&](std::size_t i) {
      const CandidatePool& p = pools[i];
      try {
        auto al = alignments.find(p.source_id());
        auto pa = parses.find(p.source_id());
        if (al == alignments.end() || pa == parses.end())
          throw Error(ErrorCode::Precondition, "no alignment or parse for " + p.source_id());
        JudgeOutcome out = judge_pool(gateway_, profile, guidelines, p, al->second, pa->second.first,
                                      pa->second.second, opts);
        if (out.requests > 1) ++repaired;
        slots.ok[i] = std::move(out.verdict);
      } catch (const VerdictParseError& e) {
        log::warn("judge: dropping " + p.source_id() + ": " + e.what());
        Json s = skip_record(p.source_id(), e);
        s["reason"] = verdict_failure_name(e.reason());
        slots.skipped[i] = std::move(s);
      } catch (const Error& e) {
        log::warn("judge: skipping " + p.source_id() + ": " + e.what());
        slots.skipped[i] = skip_record(p.source_id(), e);
      }
    });
    auto [ok, skipped] = slots.collect([](const JudgeVerdict& v) { return to_json(v); });
    write_jsonl(dir / verdict_file(mode), ok);
    write_jsonl(dir / ("judge." + std::string(to_string(mode)) + ".skipped.jsonl"), skipped);
    summary[std::string(to_string(mode))] =
        Json{{"pools", pools.size()}, {"verdicts", ok.size()}, {"skipped", skipped.size()}, {"repaired", repaired.load()}};
  }
  return summary;
}

Json Pipeline::build() {
  const fs::path dir = config_.policy_dir();
  const auto pools = load_pools(dir, "build");
  std::map<std::string, const CandidatePool*> by_id;
  for (const auto& p : pools) by_id[p.source_id()] = &p;
  const fs::path vpath = dir / verdict_file(config_.dataset_mode);
  if (!fs::exists(vpath)) throw Error(ErrorCode::Io, "build: " + vpath.string() + " not found; run 'judge' first");
  const auto verdicts = load_verdicts(vpath);

  std::vector<PreferenceTriplet> triplets;
  Json failures = Json::array();
  for (const JudgeVerdict& v : verdicts) {
    try {
      auto it = by_id.find(v.source_id());
      if (it == by_id.end()) throw Error(ErrorCode::KeyMismatch, "verdict for unknown pool " + v.source_id());
      triplets.push_back(select_pair(v, *it->second, config_.policy));
    } catch (const Error& e) {
      log::warn(std::string("build: ") + e.what());
      failures.push_back(skip_record(v.source_id(), e));
    }
  }
  const Dataset dataset = assemble(std::move(triplets), config_.policy);
  const DatasetSplit s = split(dataset, config_.dev_fraction, config_.split_seed);
  const TemplateRegistry templates = load_templates(config_);
  const fs::path out = dir / "dataset";
  fs::create_directories(out);
  Json files = Json::array();
  for (const auto& [name, part] : {std::pair<const char*, const Dataset*>{"train", &s.train}, {"dev", &s.dev}}) {
    if (part->triplets.empty()) {
      log::warn(std::string("build: ") + name + " split is empty; not exported");
      continue;
    }
    export_preference(*part, templates, out / (std::string(name) + ".preference.jsonl"));
    export_sft(*part, templates, out / (std::string(name) + ".sft.jsonl"));
    files.push_back(std::string("dataset/") + name + ".preference.jsonl");
    files.push_back(std::string("dataset/") + name + ".sft.jsonl");
  }
  Json report{{"policy", to_string(config_.policy)},
              {"judge_mode", to_string(config_.dataset_mode)},
              {"pools", pools.size()},
              {"verdicts", verdicts.size()},
              {"selection_failures", failures},
              {"assembled", {{"input", dataset.audit.input},
                             {"degenerate", dataset.audit.degenerate},
                             {"duplicate_source", dataset.audit.duplicate_source},
                             {"kept", dataset.size()}}},
              {"dev_fraction", config_.dev_fraction},
              {"seed", config_.split_seed},
              {"train", s.train.size()},
              {"dev", s.dev.size()},
              {"files", files}};
  write_file_atomic(dir / "build_report.json", report.dump(2) + "\n");
  return report;
}

Json Pipeline::stats() {
  const fs::path dir = config_.policy_dir();
  const Dimension dim = derive_judge_dimension(config_.policy);
  std::vector<std::string> roster;
  for (const auto& p : config_.roster) roster.push_back(p.model_name);

  std::map<JudgeMode, std::vector<JudgeVerdict>> by_mode;
  for (JudgeMode m : {JudgeMode::Think, JudgeMode::NoThink})
    if (fs::exists(dir / verdict_file(m))) by_mode[m] = load_verdicts(dir / verdict_file(m));
  if (by_mode.empty()) throw Error(ErrorCode::Io, "stats: no verdict files in " + dir.string() + "; run 'judge' first");

  Json dist = Json::object();
  for (const auto& [mode, verdicts] : by_mode) {
    const PreferenceDistribution d = preference_distribution(verdicts, roster, dim);
    Json models = Json::array();
    for (const ModelShare& s : d.models)
      models.push_back(Json{{"model", s.model},
                            {"preferred", s.preferred},
                            {"dispreferred", s.dispreferred},
                            {"preferred_pct", s.preferred_pct},
                            {"dispreferred_pct", s.dispreferred_pct}});
    dist[std::string(to_string(mode))] = Json{{"verdicts", d.verdicts}, {"models", models}};
  }
  Json report{{"policy", to_string(config_.policy)}, {"dimension", to_string(dim)}, {"distribution", dist}};

  if (by_mode.contains(JudgeMode::Think) && by_mode.contains(JudgeMode::NoThink)) {
    // Compare on the sources both modes judged; the rest is listed.
    const auto& t = by_mode[JudgeMode::Think];
    const auto& n = by_mode[JudgeMode::NoThink];
    std::map<std::string, const JudgeVerdict*> tn, nn;
    for (const auto& v : t) tn[v.source_id()] = &v;
    for (const auto& v : n) nn[v.source_id()] = &v;
    std::vector<JudgeVerdict> ts, ns;
    Json unmatched = Json::array();
    for (const auto& [id, v] : tn) {
      if (nn.contains(id)) {
        ts.push_back(*v);
        ns.push_back(*nn[id]);
      } else {
        unmatched.push_back(id);
      }
    }
    for (const auto& [id, v] : nn)
      if (!tn.contains(id)) unmatched.push_back(id);
    const DisagreementReport r = disagreement_report(ts, ns, config_.policy);
    Json items = Json::array();
    for (const auto& it : r.details)
      items.push_back(Json{{"source_id", it.source_id},
                           {"think", {it.think.preferred, it.think.dispreferred}},
                           {"nothink", {it.nothink.preferred, it.nothink.dispreferred}},
                           {"differ", it.differ},
                           {"opposite", it.opposite}});
    report["disagreement"] = Json{{"items", r.items},
                                  {"disagreements", r.disagreements},
                                  {"opposites", r.opposites},
                                  {"disagree_rate", r.disagree_rate},
                                  {"opposite_rate", r.opposite_rate},
                                  {"unmatched", unmatched},
                                  {"details", items}};
  }
  write_file_atomic(dir / "stats.json", report.dump(2) + "\n");
  return report;
}

Json Pipeline::run(std::string_view stage) {
  static const std::map<std::string_view, Json (Pipeline::*)()> stages = {
      {"ingest", &Pipeline::ingest}, {"generate", &Pipeline::generate}, {"align", &Pipeline::align},
      {"parse", &Pipeline::parse},   {"judge", &Pipeline::judge},       {"build", &Pipeline::build},
      {"stats", &Pipeline::stats}};
  if (stage == "all") return run_all();
  auto it = stages.find(stage);
  if (it == stages.end()) throw Error(ErrorCode::Config, "unknown stage '" + std::string(stage) + "'");
  const GatewayStats before = gateway_.stats();
  log::StageTimer timer{std::string(stage)};
  try {
    Json summary = (this->*(it->second))();
    const GatewayStats after = gateway_.stats();
    log::info(std::string(stage) + ": " + std::to_string(after.endpoint_calls - before.endpoint_calls) +
              " endpoint calls, " + std::to_string(after.cache_hits - before.cache_hits) + " cache hits");
    return summary;
  } catch (const Error& e) {
    const std::string prefix = std::string(stage) + ": ";
    if (std::string_view(e.what()).starts_with(prefix)) throw;
    throw Error(e.code(), prefix + e.what());
  }
}

Json Pipeline::run_all() {
  Json out = Json::object();
  for (const char* stage : kStages) out[stage] = run(stage);
  return out;
}

}  // namespace policysimp
