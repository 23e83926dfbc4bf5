#include "align/aligner.hpp"

#include "core/error.hpp"
#include "text/tokenize.hpp"

namespace policysimp {

AlignmentResult align_texts(Gateway& gateway, const EndpointProfile& embedder, std::string_view source,
                            std::string_view candidate, const OtConfig& cfg) {
  auto src_tokens = normalize_tokens(source);
  auto cand_tokens = normalize_tokens(candidate);
  if (src_tokens.empty() || cand_tokens.empty())
    throw Error(ErrorCode::Precondition, "alignment needs non-empty source and candidate");
  const auto src_vecs = gateway.embed(embedder, src_tokens);
  const auto cand_vecs = gateway.embed(embedder, cand_tokens);
  AlignmentResult r = extract_links(sinkhorn_unbalanced(cost_matrix(src_vecs, cand_vecs), cfg), cfg);
  r.source_tokens = std::move(src_tokens);
  r.candidate_tokens = std::move(cand_tokens);
  return r;
}

}  // namespace policysimp
