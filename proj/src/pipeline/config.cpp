#include "pipeline/config.hpp"

#include <algorithm>

#include "core/error.hpp"
#include "util/io.hpp"

namespace policysimp {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

const Json& object_at(const Json& j, const char* key, const Json& empty) {
  auto it = j.find(key);
  if (it == j.end()) return empty;
  if (!it->is_object()) throw Error(ErrorCode::Config, std::string("config: '") + key + "' must be an object");
  return *it;
}

DecodeParams decode_from(const Json& j, DecodeParams d, const std::string& field) {
  try {
    d.temperature = j.value("temperature", d.temperature);
    d.top_p = j.value("top_p", d.top_p);
    d.max_tokens = j.value("max_tokens", d.max_tokens);
    if (auto k = j.find("top_k"); k != j.end())
      d.top_k = (k->is_null() || k->get<int>() < 0) ? std::nullopt : std::optional<int>(k->get<int>());
    d.validate();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, "config: " + field + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, "config: " + field + ": " + e.what());
  }
  return d;
}

EndpointProfile profile_at(const Json& j, const std::string& field, const EndpointProfile& defaults) {
  try {
    return endpoint_profile_from_json(j, defaults);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, "config: " + field + ": " + e.what());
  }
}

template <typename T>
T value_at(const Json& j, const char* key, T fallback, const std::string& section) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Config, "config: " + section + "." + key + " has the wrong type");
  }
}

}  // namespace

EndpointProfile PipelineConfig::judge_profile(JudgeMode mode) const {
  EndpointProfile p = judge;
  p.decode = mode == JudgeMode::Think ? think_decode : nothink_decode;
  return p;
}

std::filesystem::path PipelineConfig::policy_dir() const { return work_dir / std::string(to_string(policy)); }

PipelineConfig pipeline_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "config: top level must be an object");
  const Json empty = Json::object();
  PipelineConfig c;

  if (!j.contains("policy")) throw Error(ErrorCode::Config, "config: missing field 'policy'");
  c.policy = parse_policy(value_at<std::string>(j, "policy", "", "config"));
  c.work_dir = resolve(base_dir, value_at<std::string>(j, "work_dir", "run", "config"));
  c.workers = value_at<int>(j, "workers", c.workers, "config");
  if (c.workers < 1) throw Error(ErrorCode::Config, "config: workers must be >= 1");

  const Json& corpus = object_at(j, "corpus", empty);
  if (!corpus.contains("path")) throw Error(ErrorCode::Config, "config: missing field 'corpus.path'");
  c.corpus_path = resolve(base_dir, value_at<std::string>(corpus, "path", "", "corpus"));
  const std::string format = value_at<std::string>(corpus, "format", "lines", "corpus");
  if (format == "lines")
    c.corpus.format = SourceFormat::PlainLines;
  else if (format == "jsonl")
    c.corpus.format = SourceFormat::JsonlField;
  else
    throw Error(ErrorCode::Config, "config: corpus.format must be 'lines' or 'jsonl'");
  c.corpus.text_field = value_at<std::string>(corpus, "text_field", c.corpus.text_field, "corpus");
  c.corpus.origin = value_at<std::string>(corpus, "origin", c.corpus.origin, "corpus");

  const Json& filter = object_at(j, "filter", empty);
  c.filter.min_tokens = value_at<std::size_t>(filter, "min_tokens", c.filter.min_tokens, "filter");
  c.filter.max_tokens = value_at<std::size_t>(filter, "max_tokens", c.filter.max_tokens, "filter");
  c.filter.dedup = value_at<bool>(filter, "dedup", c.filter.dedup, "filter");
  if (c.filter.min_tokens > c.filter.max_tokens)
    throw Error(ErrorCode::Config, "config: filter.min_tokens exceeds filter.max_tokens");

  const Json& defaults_json = object_at(j, "endpoint_defaults", empty);
  EndpointProfile defaults;
  if (!defaults_json.empty()) {
    Json d = defaults_json;
    d["model"] = "defaults";
    defaults = profile_at(d, "endpoint_defaults", EndpointProfile{});
    defaults.model_name.clear();
  }

  const Json& gen = object_at(j, "generation", empty);
  const std::string shot = value_at<std::string>(gen, "shot_mode", "few-shot", "generation");
  if (shot == "few-shot")
    c.shot_mode = ShotMode::FewShot;
  else if (shot == "zero-shot")
    c.shot_mode = ShotMode::ZeroShot;
  else
    throw Error(ErrorCode::Config, "config: generation.shot_mode must be 'few-shot' or 'zero-shot'");
  for (const auto& [name, path] : object_at(gen, "templates", empty).items()) {
    if (!path.is_string()) throw Error(ErrorCode::Config, "config: generation.templates." + name + " must be a path");
    c.template_files[parse_policy(name)] = resolve(base_dir, path.get<std::string>());
  }
  auto roster = gen.find("roster");
  if (roster == gen.end() || !roster->is_array() || roster->size() < 2)
    throw Error(ErrorCode::Config, "config: generation.roster must list at least 2 endpoint profiles");
  for (std::size_t k = 0; k < roster->size(); ++k) {
    const Json& r = (*roster)[k];
    const std::string field = "generation.roster[" + std::to_string(k) + "]";
    if (!r.is_object() || !r.contains("decode") || !r["decode"].contains("max_tokens"))
      throw Error(ErrorCode::Config, "config: " + field + ".decode.max_tokens is required");
    EndpointProfile p = profile_at(r, field, defaults);
    p.decode = decode_from(r["decode"], DecodeParams::deterministic(), field + ".decode");
    c.roster.push_back(std::move(p));
  }

  if (!j.contains("embedder")) throw Error(ErrorCode::Config, "config: missing field 'embedder'");
  c.embedder = profile_at(j["embedder"], "embedder", defaults);
  if (!j.contains("parser")) throw Error(ErrorCode::Config, "config: missing field 'parser'");
  {
    EndpointProfile pd = defaults;
    pd.decode = DecodeParams::deterministic(512);
    c.parser = profile_at(j["parser"], "parser", pd);
  }

  const Json& al = object_at(j, "alignment", empty);
  c.alignment.tau = value_at<double>(al, "tau", c.alignment.tau, "alignment");
  c.alignment.link_threshold = value_at<double>(al, "link_threshold", c.alignment.link_threshold, "alignment");
  c.alignment.max_iters = value_at<int>(al, "max_iters", c.alignment.max_iters, "alignment");
  c.alignment.convergence_eps = value_at<double>(al, "convergence_eps", c.alignment.convergence_eps, "alignment");
  c.alignment.entropic_reg = value_at<double>(al, "entropic_reg", c.alignment.entropic_reg, "alignment");
  if (al.contains("marginal_mode"))
    c.alignment.marginal_mode = parse_marginal_mode(value_at<std::string>(al, "marginal_mode", "", "alignment"));
  try {
    c.alignment.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("config: alignment: ") + e.what());
  }

  const Json& judge = object_at(j, "judge", empty);
  if (!judge.contains("profile")) throw Error(ErrorCode::Config, "config: missing field 'judge.profile'");
  c.judge = profile_at(judge["profile"], "judge.profile", defaults);
  if (auto m = judge.find("modes"); m != judge.end()) {
    if (!m->is_array() || m->empty()) throw Error(ErrorCode::Config, "config: judge.modes must be a non-empty list");
    c.judge_modes.clear();
    for (const Json& x : *m) {
      if (!x.is_string()) throw Error(ErrorCode::Config, "config: judge.modes entries must be strings");
      const JudgeMode mode = parse_judge_mode(x.get<std::string>());
      if (std::find(c.judge_modes.begin(), c.judge_modes.end(), mode) == c.judge_modes.end())
        c.judge_modes.push_back(mode);
    }
  }
  c.think_decode = decode_from(object_at(judge, "think_decode", empty), c.think_decode, "judge.think_decode");
  c.nothink_decode = decode_from(object_at(judge, "nothink_decode", empty), c.nothink_decode, "judge.nothink_decode");
  if (judge.contains("guidelines"))
    c.guidelines_file = resolve(base_dir, value_at<std::string>(judge, "guidelines", "", "judge"));
  c.judge_shuffle = value_at<bool>(judge, "shuffle", c.judge_shuffle, "judge");
  c.judge_shuffle_seed = value_at<std::uint64_t>(judge, "shuffle_seed", c.judge_shuffle_seed, "judge");

  const Json& ds = object_at(j, "dataset", empty);
  c.dataset_mode = parse_judge_mode(value_at<std::string>(ds, "judge_mode", "think", "dataset"));
  c.dev_fraction = value_at<double>(ds, "dev_fraction", c.dev_fraction, "dataset");
  if (!(c.dev_fraction > 0.0 && c.dev_fraction < 1.0))
    throw Error(ErrorCode::Config, "config: dataset.dev_fraction must lie strictly between 0 and 1");
  c.split_seed = value_at<std::uint64_t>(ds, "seed", c.split_seed, "dataset");

  const Json& loss = object_at(j, "loss", empty);
  c.loss.beta = value_at<double>(loss, "beta", c.loss.beta, "loss");
  c.loss.gamma = value_at<double>(loss, "gamma", c.loss.gamma, "loss");
  c.loss.alpha = value_at<double>(loss, "alpha", c.loss.alpha, "loss");
  c.loss.rejection_gate_scale = value_at<double>(loss, "rejection_gate_scale", c.loss.rejection_gate_scale, "loss");
  if (loss.contains("variant")) c.loss.variant = parse_loss_variant(value_at<std::string>(loss, "variant", "", "loss"));
  c.loss.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("config: ") + e.what());
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, path.string() + ": not valid JSON: " + e.what());
  }
  return pipeline_config_from_json(j, path.parent_path());
}

}  // namespace policysimp
