#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace policysimp {

/// Lowercases ASCII, Latin-1, Latin Extended-A, basic Greek and Cyrillic
/// capitals. Other code points pass through unchanged.
std::string lowercase(std::string_view text);

/// mteval-v13a tokenization (no lowercasing): punctuation detached, periods
/// and commas kept inside numbers, single spaces between tokens.
std::string tokenize_13a(std::string_view text);

/// The token sequence shared by SARI, corpus filtering and word alignment:
/// lowercase, then 13a, then whitespace split.
std::vector<std::string> normalize_tokens(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens, std::string_view sep = " ");

}  // namespace policysimp
