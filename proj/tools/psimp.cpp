// psimp: command-line front end. Talks to libpolicysimp through the C API
// only.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "policysimp/policysimp.h"

namespace {

struct PipelineFlags {
  std::string config;
  std::string fixtures;
  std::string policy;
  std::string work_dir;
  int workers = 0;
};

// Exit status for a failed call: the status code itself, kept below 126 so
// shells do not confuse it with signals.
int report(psimp_status st, const std::string& what) {
  std::fprintf(stderr, "psimp %s: %s: %s\n", what.c_str(), psimp_status_name(st), psimp_last_error());
  return st < 126 ? static_cast<int>(st) : 1;
}

// Flags override the config file through a merge patch.
std::string overrides(const PipelineFlags& f) {
  nlohmann::json patch = nlohmann::json::object();
  if (!f.policy.empty()) patch["policy"] = f.policy;
  // Relative to the caller, not to the config file.
  if (!f.work_dir.empty()) patch["work_dir"] = std::filesystem::absolute(f.work_dir).string();
  if (f.workers > 0) patch["workers"] = f.workers;
  return patch.dump();
}

void print_owned(char* s) {
  std::puts(s);
  psimp_string_free(s);
}

int run_stage(const PipelineFlags& f, const std::string& stage) {
  psimp_pipeline* p = nullptr;
  const std::string patch = overrides(f);
  psimp_status st = psimp_pipeline_open(f.config.c_str(), patch.c_str(),
                                        f.fixtures.empty() ? nullptr : f.fixtures.c_str(), &p);
  if (st != PSIMP_OK) return report(st, stage);
  char* summary = nullptr;
  st = psimp_pipeline_run(p, stage.c_str(), &summary);
  if (st == PSIMP_OK) {
    print_owned(summary);
    char* stats = nullptr;
    if (psimp_pipeline_gateway_stats(p, &stats) == PSIMP_OK) {
      std::fprintf(stderr, "gateway: %s\n", stats);
      psimp_string_free(stats);
    }
  }
  psimp_pipeline_close(p);
  return st == PSIMP_OK ? 0 : report(st, stage);
}

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("-c,--config", f.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--fixtures", f.fixtures, "Serve every endpoint call from recorded fixtures in this directory")
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--policy", f.policy, "lexical-paraphrasing or overall-rewriting");
  cmd->add_option("--work-dir", f.work_dir, "Output directory");
  cmd->add_option("--workers", f.workers, "Concurrent requests per stage")->check(CLI::PositiveNumber);
}

// Per-row table followed by the worst gradient error of each variant.
void print_loss_table(const std::string& json_text) {
  const auto rows = nlohmann::json::parse(json_text);
  std::printf("%-5s %-11s %14s %14s %14s %10s %12s\n", "pair", "variant", "total", "preference", "nll", "gate",
              "grad_error");
  std::map<std::string, double> worst;
  for (const auto& r : rows) {
    const auto variant = r.at("variant").get<std::string>();
    const double err = r.at("grad_error").get<double>();
    std::printf("%-5zu %-11s %14.8f %14.8f %14.8f %10.6f %12.3e\n", r.at("pair").get<std::size_t>(),
                variant.c_str(), r.at("total").get<double>(), r.at("preference").get<double>(),
                r.at("nll").get<double>(), r.at("gate").get<double>(), err);
    worst[variant] = std::max(worst[variant], err);
  }
  std::printf("\nmax grad_error per variant\n");
  for (const auto& [variant, err] : worst) std::printf("  %-11s %12.3e\n", variant.c_str(), err);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-aligned simplification preference data builder"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(psimp_version()));
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")->capture_default_str();

  PipelineFlags flags;
  std::string stage;
  const std::vector<std::pair<std::string, std::string>> stages = {
      {"ingest", "Read and filter the corpus"},
      {"generate", "Build candidate pools"},
      {"align", "Word alignments between source and candidates"},
      {"parse", "Constituency parses of sources and candidates"},
      {"judge", "Judge every pool"},
      {"build", "Assemble the dataset and write train/dev exports"},
      {"stats", "Preference distribution and think/no-think disagreement"},
      {"run", "All stages in order"},
  };
  for (const auto& [name, help] : stages) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_pipeline_flags(cmd, flags);
    cmd->callback([&stage, n = name] { stage = n == "run" ? "all" : n; });
  }

  std::string source, output, external;
  std::vector<std::string> refs;
  CLI::App* sari = app.add_subcommand("eval-sari", "SARI of an output file against line-aligned references");
  sari->add_option("--source", source, "Source sentences, one per line")->required()->check(CLI::ExistingFile);
  sari->add_option("--output", output, "System outputs, one per line")->required()->check(CLI::ExistingFile);
  sari->add_option("--ref", refs, "Reference file (repeat per reference set)")->required()->check(CLI::ExistingFile);
  sari->add_option("--external-scores", external, "Line-aligned scores from an external metric")
      ->check(CLI::ExistingFile);

  std::string pairs;
  bool as_json = false;
  psimp_loss_config lc = psimp_loss_config_default();
  double eps = 1e-5;
  CLI::App* lcheck = app.add_subcommand("loss-check", "Loss values and gradient checks on scored pairs");
  lcheck->add_option("--pairs", pairs, "JSONL of {\"chosen\": [...], \"rejected\": [...]}")
      ->required()
      ->check(CLI::ExistingFile);
  lcheck->add_option("--beta", lc.beta)->capture_default_str();
  lcheck->add_option("--gamma", lc.gamma)->capture_default_str();
  lcheck->add_option("--alpha", lc.alpha)->capture_default_str();
  lcheck->add_option("--gate-scale", lc.rejection_gate_scale)->capture_default_str();
  lcheck->add_option("--epsilon", eps, "Finite-difference step")->capture_default_str();
  lcheck->add_flag("--json", as_json, "Print JSON rows instead of a table");

  CLI11_PARSE(app, argc, argv);

  if (psimp_status st = psimp_set_log_level(log_level.c_str()); st != PSIMP_OK) return report(st, "log-level");

  if (!stage.empty()) return run_stage(flags, stage);

  if (sari->parsed()) {
    std::vector<const char*> ref_ptrs;
    for (const auto& r : refs) ref_ptrs.push_back(r.c_str());
    char* out = nullptr;
    const psimp_status st =
        psimp_sari_corpus_files(source.c_str(), output.c_str(), ref_ptrs.data(), ref_ptrs.size(),
                                external.empty() ? nullptr : external.c_str(), &out);
    if (st != PSIMP_OK) return report(st, "eval-sari");
    print_owned(out);
    return 0;
  }

  if (lcheck->parsed()) {
    char* out = nullptr;
    const psimp_status st = psimp_loss_check_file(pairs.c_str(), &lc, eps, &out);
    if (st != PSIMP_OK) return report(st, "loss-check");
    if (as_json) {
      print_owned(out);
    } else {
      print_loss_table(out);
      psimp_string_free(out);
    }
    return 0;
  }
  return 0;
}
