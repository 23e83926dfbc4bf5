#pragma once

#include <string_view>

#include "align/ot.hpp"
#include "gateway/gateway.hpp"

namespace policysimp {

// Tokenizes both texts with the metric tokenizer, embeds the tokens through
// `embedder`, and aligns them with sinkhorn_unbalanced + extract_links.
AlignmentResult align_texts(Gateway& gateway, const EndpointProfile& embedder, std::string_view source,
                            std::string_view candidate, const OtConfig& cfg);

}  // namespace policysimp
