#include "policysimp/policysimp.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <string>
#include <vector>

#include "align/ot.hpp"
#include "core/error.hpp"
#include "core/serialize.hpp"
#include "loss/loss.hpp"
#include "pipeline/config.hpp"
#include "pipeline/pipeline.hpp"
#include "sari/sari.hpp"
#include "text/tokenize.hpp"
#include "util/io.hpp"
#include "util/log.hpp"

using namespace policysimp;

struct psimp_pipeline {
  std::unique_ptr<Pipeline> pipeline;
  Json effective_config;
};

namespace {

thread_local std::string g_last_error;

psimp_status fail(psimp_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
psimp_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return PSIMP_OK;
  } catch (const Error& e) {
    return fail(static_cast<psimp_status>(e.code()), e.what());
  } catch (const Json::exception& e) {
    return fail(PSIMP_ERR_SCHEMA, e.what());
  } catch (const std::exception& e) {
    return fail(PSIMP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PSIMP_ERR_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::Precondition, what);
}

LossConfig loss_config(const psimp_loss_config* c) {
  LossConfig cfg;
  if (c) {
    cfg.beta = c->beta;
    cfg.gamma = c->gamma;
    cfg.alpha = c->alpha;
    cfg.rejection_gate_scale = c->rejection_gate_scale;
    if (c->variant) cfg.variant = parse_loss_variant(c->variant);
  }
  cfg.validate();
  return cfg;
}

Json sari_json(const SariScore& s) {
  return Json{{"total", s.total},
              {"add", s.per_operation.add},
              {"keep", s.per_operation.keep},
              {"delete", s.per_operation.del}};
}

}  // namespace

extern "C" {

const char* psimp_version(void) { return PSIMP_VERSION; }

const char* psimp_status_name(psimp_status status) {
  switch (status) {
    case PSIMP_OK: return "ok";
    case PSIMP_ERR_INVALID_ARGUMENT: return "invalid_argument";
    default: break;
  }
  // error_code_name returns views over string literals.
  const std::string_view name = error_code_name(static_cast<ErrorCode>(status));
  return name.data();
}

const char* psimp_last_error(void) { return g_last_error.c_str(); }

void psimp_string_free(char* s) { std::free(s); }

psimp_status psimp_set_log_level(const char* level) {
  if (!level) return fail(PSIMP_ERR_INVALID_ARGUMENT, "level is NULL");
  const std::string l = level;
  log::Level v;
  if (l == "debug") v = log::Level::Debug;
  else if (l == "info") v = log::Level::Info;
  else if (l == "warn") v = log::Level::Warn;
  else if (l == "error") v = log::Level::Error;
  else if (l == "off") v = log::Level::Off;
  else return fail(PSIMP_ERR_INVALID_ARGUMENT, "unknown log level '" + l + "'");
  log::set_level(v);
  g_last_error.clear();
  return PSIMP_OK;
}

psimp_status psimp_pipeline_open(const char* config_path, const char* overrides_json, const char* fixtures_dir,
                                 psimp_pipeline** out) {
  if (!config_path || !out) return fail(PSIMP_ERR_INVALID_ARGUMENT, "config_path and out are required");
  *out = nullptr;
  return guarded([&] {
    const std::filesystem::path path = config_path;
    Json j;
    try {
      j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::Config, path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::Config, path.string() + ": config must be a JSON object");
    if (overrides_json && *overrides_json) {
      Json patch;
      try {
        patch = Json::parse(overrides_json);
      } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("overrides: ") + e.what());
      }
      j.merge_patch(patch);
    }
    PipelineConfig cfg = pipeline_config_from_json(j, path.parent_path());
    std::shared_ptr<Transport> transport;
    if (fixtures_dir) transport = std::make_shared<FixtureTransport>(fixtures_dir);
    else transport = std::make_shared<HttpTransport>();
    auto handle = std::make_unique<psimp_pipeline>();
    handle->pipeline = std::make_unique<Pipeline>(std::move(cfg), std::move(transport));
    handle->effective_config = std::move(j);
    *out = handle.release();
  });
}

psimp_status psimp_pipeline_run(psimp_pipeline* p, const char* stage, char** summary_json) {
  if (!p || !stage) return fail(PSIMP_ERR_INVALID_ARGUMENT, "pipeline and stage are required");
  return guarded([&] {
    const Json summary = p->pipeline->run(stage);
    if (summary_json) *summary_json = dup_string(summary.dump());
  });
}

psimp_status psimp_pipeline_gateway_stats(psimp_pipeline* p, char** stats_json) {
  if (!p || !stats_json) return fail(PSIMP_ERR_INVALID_ARGUMENT, "pipeline and stats_json are required");
  return guarded([&] {
    const GatewayStats s = p->pipeline->gateway().stats();
    *stats_json = dup_string(
        Json{{"endpoint_calls", s.endpoint_calls}, {"cache_hits", s.cache_hits}, {"retries", s.retries}}.dump());
  });
}

psimp_status psimp_pipeline_describe(psimp_pipeline* p, char** config_json) {
  if (!p || !config_json) return fail(PSIMP_ERR_INVALID_ARGUMENT, "pipeline and config_json are required");
  return guarded([&] { *config_json = dup_string(p->effective_config.dump(2)); });
}

void psimp_pipeline_close(psimp_pipeline* p) { delete p; }

psimp_status psimp_sari_sentence(const char* source, const char* output, const char* const* references,
                                 size_t n_references, double* total, double per_operation[3]) {
  if (!source || !output || !total || (n_references && !references))
    return fail(PSIMP_ERR_INVALID_ARGUMENT, "source, output, references and total are required");
  return guarded([&] {
    std::vector<std::string> refs;
    for (size_t i = 0; i < n_references; ++i) {
      require(references[i] != nullptr, "reference is NULL");
      refs.emplace_back(references[i]);
    }
    const SariScore s = sari(source, output, refs);
    *total = s.total;
    if (per_operation) {
      per_operation[0] = s.per_operation.add;
      per_operation[1] = s.per_operation.keep;
      per_operation[2] = s.per_operation.del;
    }
  });
}

psimp_status psimp_sari_corpus_files(const char* sources_path, const char* outputs_path,
                                     const char* const* reference_paths, size_t n_reference_paths,
                                     const char* external_scores_path, char** report_json) {
  if (!sources_path || !outputs_path || !report_json || (n_reference_paths && !reference_paths))
    return fail(PSIMP_ERR_INVALID_ARGUMENT, "sources, outputs, references and report_json are required");
  return guarded([&] {
    if (n_reference_paths == 0) throw Error(ErrorCode::EmptyReferences, "no reference files given");
    const auto sources = read_lines(sources_path);
    const auto outputs = read_lines(outputs_path);
    std::vector<std::vector<std::string>> refs(sources.size());
    for (size_t r = 0; r < n_reference_paths; ++r) {
      require(reference_paths[r] != nullptr, "reference path is NULL");
      const auto lines = read_lines(reference_paths[r]);
      if (lines.size() != sources.size())
        throw Error(ErrorCode::Precondition, std::string(reference_paths[r]) + ": " +
                                                 std::to_string(lines.size()) + " lines, expected " +
                                                 std::to_string(sources.size()));
      for (size_t i = 0; i < lines.size(); ++i) refs[i].push_back(lines[i]);
    }
    const CorpusSari c = corpus_sari(sources, outputs, refs);
    Json report{{"sentences", sources.size()},
                {"references_per_sentence", n_reference_paths},
                {"sari", sari_json(SariScore{c.total, c.per_operation, {}})}};
    Json per = Json::array();
    for (size_t i = 0; i < c.sentences.size(); ++i) {
      const EditReport e = edit_report(sources[i], outputs[i]);
      Json row = sari_json(c.sentences[i]);
      row["added"] = e.added;
      row["deleted"] = e.deleted;
      row["kept"] = e.kept;
      row["no_edit"] = e.no_edit;
      per.push_back(std::move(row));
    }
    report["per_sentence"] = std::move(per);
    if (external_scores_path) {
      const auto scores = load_external_scores(external_scores_path);
      if (scores.size() != sources.size())
        throw Error(ErrorCode::Precondition, std::string(external_scores_path) + ": " +
                                                 std::to_string(scores.size()) + " scores, expected " +
                                                 std::to_string(sources.size()));
      double sum = 0.0;
      for (double v : scores) sum += v;
      report["external_mean"] = sum / static_cast<double>(scores.size());
    }
    *report_json = dup_string(report.dump());
  });
}

psimp_status psimp_tokenize(const char* text, char** tokens_json) {
  if (!text || !tokens_json) return fail(PSIMP_ERR_INVALID_ARGUMENT, "text and tokens_json are required");
  return guarded([&] { *tokens_json = dup_string(Json(normalize_tokens(text)).dump()); });
}

psimp_status psimp_ot_align(const double* source_embeddings, size_t n, const double* candidate_embeddings, size_t m,
                            size_t dim, double tau, double link_threshold, const char* marginal_mode,
                            char** result_json) {
  if (!source_embeddings || !candidate_embeddings || !result_json)
    return fail(PSIMP_ERR_INVALID_ARGUMENT, "embeddings and result_json are required");
  return guarded([&] {
    require(n > 0 && m > 0 && dim > 0, "n, m and dim must be positive");
    auto rows = [dim](const double* data, size_t count) {
      std::vector<std::vector<double>> out(count);
      for (size_t i = 0; i < count; ++i) out[i].assign(data + i * dim, data + (i + 1) * dim);
      return out;
    };
    OtConfig cfg;
    cfg.tau = tau;
    cfg.link_threshold = link_threshold;
    if (marginal_mode) cfg.marginal_mode = parse_marginal_mode(marginal_mode);
    cfg.validate();
    const Matrix cost = cost_matrix(rows(source_embeddings, n), rows(candidate_embeddings, m));
    const AlignmentResult r = extract_links(sinkhorn_unbalanced(cost, cfg), cfg);
    *result_json = dup_string(to_json(r).dump());
  });
}

psimp_loss_config psimp_loss_config_default(void) {
  const LossConfig d;
  return psimp_loss_config{d.beta, d.gamma, d.alpha, d.rejection_gate_scale, "CPO_SimPO"};
}

psimp_status psimp_loss_eval(const double* logp_chosen, size_t n_chosen, const double* logp_rejected,
                             size_t n_rejected, const psimp_loss_config* config, psimp_loss_value* out) {
  if (!logp_chosen || !logp_rejected || !out)
    return fail(PSIMP_ERR_INVALID_ARGUMENT, "log-probabilities and out are required");
  return guarded([&] {
    ScoredPair pair{{logp_chosen, logp_chosen + n_chosen}, {logp_rejected, logp_rejected + n_rejected}};
    const LossValue v = loss(pair, loss_config(config));
    *out = psimp_loss_value{v.total, v.preference_term, v.nll_term, v.gate, v.margin};
  });
}

psimp_status psimp_loss_check_file(const char* pairs_path, const psimp_loss_config* config, double epsilon,
                                   char** report_json) {
  if (!pairs_path || !report_json) return fail(PSIMP_ERR_INVALID_ARGUMENT, "pairs_path and report_json are required");
  return guarded([&] {
    const LossConfig cfg = loss_config(config);
    const auto rows = loss_check(read_scored_pairs(pairs_path), cfg, epsilon);
    Json out = Json::array();
    for (const LossCheckRow& r : rows) {
      out.push_back(Json{{"pair", r.pair_index},
                         {"variant", std::string(to_string(r.variant))},
                         {"total", r.value.total},
                         {"preference", r.value.preference_term},
                         {"nll", r.value.nll_term},
                         {"gate", r.value.gate},
                         {"margin", r.value.margin},
                         {"grad_error", r.grad_error}});
    }
    *report_json = dup_string(out.dump());
  });
}

}  // extern "C"
