#include "dataset/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "core/error.hpp"
#include "core/serialize.hpp"
#include "util/io.hpp"
#include "util/log.hpp"

namespace policysimp {

namespace {

void sort_by_source(std::vector<PreferenceTriplet>& ts) {
  std::stable_sort(ts.begin(), ts.end(),
                   [](const PreferenceTriplet& a, const PreferenceTriplet& b) { return a.source_id < b.source_id; });
}

void require_non_empty(const Dataset& d, const std::filesystem::path& path) {
  if (d.triplets.empty()) throw Error(ErrorCode::Precondition, "refusing to export an empty split to " + path.string());
}

}  // namespace

Dataset assemble(std::vector<PreferenceTriplet> triplets, Policy policy) {
  Dataset d;
  d.policy = policy;
  d.audit.input = static_cast<long>(triplets.size());
  std::set<std::string> seen;
  for (PreferenceTriplet& t : triplets) {
    if (t.policy != policy)
      throw Error(ErrorCode::PolicyMixture, "triplet " + t.source_id + " belongs to " +
                                                std::string(to_string(t.policy)) + ", dataset is " +
                                                std::string(to_string(policy)));
    try {
      t.validate();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateTriplet) throw;
      log::info(std::string("assemble: dropping ") + e.what());
      ++d.audit.degenerate;
      continue;
    }
    if (!seen.insert(t.source_id).second) {
      log::info("assemble: dropping duplicate triplet for " + t.source_id);
      ++d.audit.duplicate_source;
      continue;
    }
    d.triplets.push_back(std::move(t));
  }
  sort_by_source(d.triplets);
  return d;
}

std::size_t dev_size(std::size_t n, double dev_fraction) {
  const double x = static_cast<double>(n) * dev_fraction;
  const double lo = std::floor(x);
  const double frac = x - lo;
  double r = lo;
  if (frac > 0.5 || (frac == 0.5 && std::fmod(lo, 2.0) != 0.0)) r = lo + 1.0;
  return static_cast<std::size_t>(r);
}

DatasetSplit split(const Dataset& dataset, double dev_fraction, std::uint64_t seed) {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0))
    throw Error(ErrorCode::Precondition, "dev_fraction must lie strictly between 0 and 1");
  const std::size_t n = dataset.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  const std::size_t n_dev = dev_size(n, dev_fraction);
  DatasetSplit out;
  out.train.policy = out.dev.policy = dataset.policy;
  for (std::size_t p = 0; p < n; ++p)
    (p < n_dev ? out.dev : out.train).triplets.push_back(dataset.triplets[idx[p]]);
  sort_by_source(out.train.triplets);
  sort_by_source(out.dev.triplets);
  return out;
}

std::string trainer_prompt(const TemplateRegistry& templates, Policy policy, std::string_view source_text) {
  const PromptBundle b = render_generation_prompt(templates, policy, source_text, ShotMode::ZeroShot);
  return b.system + "\n\n" + b.user;
}

void export_preference(const Dataset& d, const TemplateRegistry& templates, const std::filesystem::path& path) {
  require_non_empty(d, path);
  std::vector<Json> lines;
  lines.reserve(d.size());
  for (const PreferenceTriplet& t : d.triplets) {
    Json meta = {{"source_id", t.source_id},
                 {"source_text", t.source_text},
                 {"preferred_model", t.preferred_model},
                 {"dispreferred_model", t.dispreferred_model},
                 {"judge_mode", to_string(t.judge_mode)},
                 {"policy", to_string(t.policy)}};
    lines.push_back(Json{{"prompt", trainer_prompt(templates, t.policy, t.source_text)},
                         {"chosen", t.preferred_text},
                         {"rejected", t.dispreferred_text},
                         {"meta", std::move(meta)}});
  }
  write_jsonl(path, lines);
}

void export_sft(const Dataset& d, const TemplateRegistry& templates, const std::filesystem::path& path) {
  require_non_empty(d, path);
  std::vector<Json> lines;
  lines.reserve(d.size());
  for (const PreferenceTriplet& t : d.triplets)
    lines.push_back(Json{{"prompt", trainer_prompt(templates, t.policy, t.source_text)},
                         {"completion", t.preferred_text}});
  write_jsonl(path, lines);
}

Dataset import_preference(const std::filesystem::path& path) {
  Dataset d;
  std::size_t line = 0;
  for (const Json& j : read_jsonl(path)) {
    ++line;
    const std::string ctx = path.filename().string() + ":" + std::to_string(line);
    if (!j.is_object() || j.size() != 4)
      throw Error(ErrorCode::Schema, ctx + ": expected exactly prompt, chosen, rejected, meta");
    get_field<std::string>(j, "prompt", ctx);
    const Json meta = get_field<Json>(j, "meta", ctx);
    PreferenceTriplet t;
    t.source_id = get_field<std::string>(meta, "source_id", ctx);
    t.source_text = get_field<std::string>(meta, "source_text", ctx);
    t.preferred_text = get_field<std::string>(j, "chosen", ctx);
    t.dispreferred_text = get_field<std::string>(j, "rejected", ctx);
    t.preferred_model = get_field<std::string>(meta, "preferred_model", ctx);
    t.dispreferred_model = get_field<std::string>(meta, "dispreferred_model", ctx);
    try {
      t.judge_mode = parse_judge_mode(get_field<std::string>(meta, "judge_mode", ctx));
      t.policy = parse_policy(get_field<std::string>(meta, "policy", ctx));
    } catch (const Error& e) {
      throw Error(ErrorCode::Schema, ctx + ": " + e.what());
    }
    if (line == 1) d.policy = t.policy;
    if (t.policy != d.policy) throw Error(ErrorCode::PolicyMixture, ctx + ": policy differs from the first line");
    d.triplets.push_back(std::move(t));
  }
  d.audit.input = static_cast<long>(d.triplets.size());
  return d;
}

}  // namespace policysimp
