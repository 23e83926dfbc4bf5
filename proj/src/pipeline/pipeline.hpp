#pragma once

// Stage driver. Stages talk only through files:
//
//   <work_dir>/sources.jsonl, sources.rejected.jsonl         ingest
//   <work_dir>/cache/                                         gateway response cache
//   <work_dir>/parse_cache.jsonl                              parse cache
//   <work_dir>/<policy>/pools.jsonl, generate.skipped.jsonl   generate
//   <work_dir>/<policy>/alignments.jsonl, align.skipped.jsonl align
//   <work_dir>/<policy>/parses.jsonl, parse.skipped.jsonl     parse
//   <work_dir>/<policy>/verdicts.<mode>.jsonl,
//                      judge.<mode>.skipped.jsonl             judge
//   <work_dir>/<policy>/dataset/{train,dev}.{preference,sft}.jsonl,
//                      build_report.json                      build
//   <work_dir>/<policy>/stats.json                            stats
//
// Per-source failures are skipped and listed in the stage's skipped file.
// Every stage returns a JSON summary; no file carries timings.

#include <array>
#include <memory>
#include <string_view>

#include "core/serialize.hpp"
#include "gateway/gateway.hpp"
#include "pipeline/config.hpp"

namespace policysimp {

inline constexpr std::array<const char*, 7> kStages = {"ingest", "generate", "align", "parse",
                                                      "judge",  "build",    "stats"};

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::shared_ptr<Transport> transport);

  Json ingest();
  Json generate();
  Json align();
  Json parse();
  Json judge();
  Json build();
  Json stats();
  // All stages in order; the summary maps stage name to stage summary.
  Json run_all();
  // One stage by name ("all" = run_all), timed and logged. Errors carry the
  // stage name.
  Json run(std::string_view stage);

  const PipelineConfig& config() const noexcept { return config_; }
  Gateway& gateway() noexcept { return gateway_; }

 private:
  PipelineConfig config_;
  Gateway gateway_;
};

}  // namespace policysimp
