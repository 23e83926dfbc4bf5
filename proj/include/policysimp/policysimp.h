#ifndef POLICYSIMP_POLICYSIMP_H
#define POLICYSIMP_POLICYSIMP_H

/* C interface to libpolicysimp.
 *
 * Every call returns a psimp_status. On failure psimp_last_error() describes
 * the problem (per thread, valid until the next call on that thread). Strings
 * returned through char** are owned by the caller and released with
 * psimp_string_free(). Structured results are JSON text. */

#include <stddef.h>

#if defined(PSIMP_BUILDING)
#define PSIMP_API __attribute__((visibility("default")))
#else
#define PSIMP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psimp_status {
  PSIMP_OK = 0,
  PSIMP_ERR_CONFIG = 1,
  PSIMP_ERR_IO = 2,
  PSIMP_ERR_SCHEMA = 3,
  PSIMP_ERR_PRECONDITION = 4,
  PSIMP_ERR_TRANSPORT = 5,
  PSIMP_ERR_ENDPOINT = 6,
  PSIMP_ERR_EXHAUSTED_RETRIES = 7,
  PSIMP_ERR_MALFORMED_RESPONSE = 8,
  PSIMP_ERR_FIXTURE_MISSING = 9,
  PSIMP_ERR_MISSING_TEMPLATE = 10,
  PSIMP_ERR_GENERATION_FAILED = 11,
  PSIMP_ERR_DIMENSION_MISMATCH = 12,
  PSIMP_ERR_ZERO_VECTOR = 13,
  PSIMP_ERR_ARITY_MISMATCH = 14,
  PSIMP_ERR_VERDICT_PARSE = 15,
  PSIMP_ERR_DIMENSION_MISSING = 16,
  PSIMP_ERR_DEGENERATE_TRIPLET = 17,
  PSIMP_ERR_POLICY_MIXTURE = 18,
  PSIMP_ERR_KEY_MISMATCH = 19,
  PSIMP_ERR_EMPTY_REFERENCES = 20,
  PSIMP_ERR_INVALID_ARGUMENT = 98,
  PSIMP_ERR_INTERNAL = 99
} psimp_status;

typedef struct psimp_pipeline psimp_pipeline;

PSIMP_API const char* psimp_version(void);
PSIMP_API const char* psimp_status_name(psimp_status status);
PSIMP_API const char* psimp_last_error(void);
PSIMP_API void psimp_string_free(char* s);

/* level: "debug", "info", "warn", "error" or "off". */
PSIMP_API psimp_status psimp_set_log_level(const char* level);

/* Opens a pipeline from a JSON config file. overrides_json (may be NULL) is
 * a JSON object merged over the file (RFC 7386 merge patch). When
 * fixtures_dir is non-NULL every endpoint call is served from recorded
 * fixtures and the network is never touched. */
PSIMP_API psimp_status psimp_pipeline_open(const char* config_path, const char* overrides_json,
                                           const char* fixtures_dir, psimp_pipeline** out);

/* stage: ingest, generate, align, parse, judge, build, stats or all. */
PSIMP_API psimp_status psimp_pipeline_run(psimp_pipeline* p, const char* stage, char** summary_json);

/* {"endpoint_calls", "cache_hits", "retries"} since open. */
PSIMP_API psimp_status psimp_pipeline_gateway_stats(psimp_pipeline* p, char** stats_json);

/* The effective configuration after overrides, as JSON. */
PSIMP_API psimp_status psimp_pipeline_describe(psimp_pipeline* p, char** config_json);

PSIMP_API void psimp_pipeline_close(psimp_pipeline* p);

/* Sentence SARI in [0, 100]. per_operation (may be NULL) receives add, keep,
 * delete. */
PSIMP_API psimp_status psimp_sari_sentence(const char* source, const char* output, const char* const* references,
                                           size_t n_references, double* total, double per_operation[3]);

/* Corpus SARI over line-aligned files; one file per reference set.
 * external_scores_path (may be NULL) is a line-aligned file of scores from an
 * external metric whose mean is reported alongside. */
PSIMP_API psimp_status psimp_sari_corpus_files(const char* sources_path, const char* outputs_path,
                                               const char* const* reference_paths, size_t n_reference_paths,
                                               const char* external_scores_path, char** report_json);

/* Normalized metric tokens as a JSON array of strings. */
PSIMP_API psimp_status psimp_tokenize(const char* text, char** tokens_json);

/* Aligns n source and m candidate embeddings (row-major, dim columns).
 * marginal_mode: "uniform" or "length_normalized" (NULL = uniform). */
PSIMP_API psimp_status psimp_ot_align(const double* source_embeddings, size_t n, const double* candidate_embeddings,
                                      size_t m, size_t dim, double tau, double link_threshold,
                                      const char* marginal_mode, char** result_json);

typedef struct psimp_loss_config {
  double beta;
  double gamma;
  double alpha;
  double rejection_gate_scale;
  const char* variant; /* CPO, SimPO, CPO_SimPO or ARPO_SimPO */
} psimp_loss_config;

/* Defaults: beta 0.1, gamma 1.5, alpha 1, gate scale 1, CPO_SimPO. */
PSIMP_API psimp_loss_config psimp_loss_config_default(void);

typedef struct psimp_loss_value {
  double total;
  double preference_term;
  double nll_term;
  double gate;
  double margin;
} psimp_loss_value;

PSIMP_API psimp_status psimp_loss_eval(const double* logp_chosen, size_t n_chosen, const double* logp_rejected,
                                       size_t n_rejected, const psimp_loss_config* config, psimp_loss_value* out);

/* Every variant on every pair of a JSONL file of {"chosen": [...],
 * "rejected": [...]}; rows carry the loss terms and the grad-check error. */
PSIMP_API psimp_status psimp_loss_check_file(const char* pairs_path, const psimp_loss_config* config,
                                             double epsilon, char** report_json);

#ifdef __cplusplus
}
#endif

#endif
