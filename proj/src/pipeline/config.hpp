#pragma once

// Pipeline configuration: one JSON file.
//
// {
//   "policy": "lexical-paraphrasing",
//   "work_dir": "run",
//   "workers": 4,
//   "corpus": {"path": "corpus.txt", "format": "lines" | "jsonl", "text_field": "src", "origin": "..."},
//   "filter": {"min_tokens": 8, "max_tokens": 80, "dedup": true},
//   "endpoint_defaults": {"base_url": ..., "api_key_env": ..., "max_retries": 3, ...},
//   "generation": {"shot_mode": "few-shot", "templates": {"<policy>": "file.json"},
//                  "roster": [{"model": ..., "decode": {"max_tokens": 256, ...}}, ...]},
//   "embedder": {"model": ...},
//   "parser": {"model": ...},
//   "alignment": {"tau": 0.88, "link_threshold": 0.40, "marginal_mode": "uniform", ...},
//   "judge": {"profile": {"model": ...}, "modes": ["think", "nothink"],
//             "think_decode": {...}, "nothink_decode": {...},
//             "guidelines": "file.txt", "shuffle": false, "shuffle_seed": 0},
//   "dataset": {"judge_mode": "think", "dev_fraction": 0.125, "seed": 13},
//   "loss": {"beta": 0.1, "gamma": 1.5, "alpha": 1.0, "variant": "CPO_SimPO", "rejection_gate_scale": 1.0}
// }
//
// Relative paths resolve against the config file's directory. Judge decoding
// defaults to temperature 0.6 / top-p 0.95 / top-k 20 in think mode and greedy
// decoding otherwise.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "align/ot.hpp"
#include "candidates/templates.hpp"
#include "core/model.hpp"
#include "core/serialize.hpp"
#include "corpus/corpus.hpp"
#include "gateway/gateway.hpp"
#include "loss/loss.hpp"

namespace policysimp {

struct PipelineConfig {
  Policy policy = Policy::LexicalParaphrasing;
  std::filesystem::path work_dir;
  int workers = 4;

  std::filesystem::path corpus_path;
  LoadOptions corpus;
  FilterConfig filter;

  ShotMode shot_mode = ShotMode::FewShot;
  std::map<Policy, std::filesystem::path> template_files;
  std::vector<EndpointProfile> roster;

  EndpointProfile embedder;
  EndpointProfile parser;
  OtConfig alignment;

  EndpointProfile judge;
  std::vector<JudgeMode> judge_modes = {JudgeMode::Think, JudgeMode::NoThink};
  DecodeParams think_decode = DecodeParams::think(4096);
  DecodeParams nothink_decode = DecodeParams::deterministic(4096);
  std::optional<std::filesystem::path> guidelines_file;
  bool judge_shuffle = false;
  std::uint64_t judge_shuffle_seed = 0;

  JudgeMode dataset_mode = JudgeMode::Think;
  double dev_fraction = 0.125;
  std::uint64_t split_seed = 13;

  LossConfig loss;

  // Profile used for `mode`, with that mode's decoding.
  EndpointProfile judge_profile(JudgeMode mode) const;
  // <work_dir>/<policy>
  std::filesystem::path policy_dir() const;
};

/// Error(Config) naming the offending field.
PipelineConfig pipeline_config_from_json(const Json& j, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace policysimp
