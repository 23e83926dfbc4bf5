#include "sari/sari.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "core/error.hpp"
#include "text/tokenize.hpp"
#include "util/io.hpp"

namespace policysimp {

namespace {

using NgramSet = std::set<std::string>;

NgramSet ngrams(const Tokens& tokens, int n) {
  NgramSet out;
  const auto len = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= len; ++i) {
    std::string g = tokens[static_cast<std::size_t>(i)];
    for (int k = 1; k < n; ++k) {
      g.push_back('\x1f');
      g += tokens[static_cast<std::size_t>(i + k)];
    }
    out.insert(std::move(g));
  }
  return out;
}

// Ratio with the empty-denominator convention.
double ratio(double numerator, std::size_t denominator_size, double denominator,
             bool paired_set_empty) {
  if (denominator_size == 0) return paired_set_empty ? 1.0 : 0.0;
  return numerator / denominator;
}

double f1(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

OperationScores order_scores(const Tokens& source, const Tokens& output,
                             std::span<const Tokens> references, int n) {
  const NgramSet s = ngrams(source, n);
  const NgramSet o = ngrams(output, n);
  const double m = static_cast<double>(references.size());

  std::map<std::string, int> ref_doc_freq;
  for (const Tokens& ref : references)
    for (const std::string& g : ngrams(ref, n)) ++ref_doc_freq[g];
  auto frac = [&](const std::string& g) {
    auto it = ref_doc_freq.find(g);
    return it == ref_doc_freq.end() ? 0.0 : it->second / m;
  };

  // KEEP
  std::size_t keep_sys = 0;
  double keep_good = 0.0;
  double keep_target = 0.0;
  std::size_t keep_target_size = 0;
  // DELETE
  std::size_t del_sys = 0;
  double del_good = 0.0;
  std::size_t del_target_size = 0;
  for (const std::string& g : s) {
    const double fg = frac(g);
    keep_target += fg;
    if (fg > 0.0) ++keep_target_size;
    if (fg < 1.0) ++del_target_size;
    if (o.contains(g)) {
      ++keep_sys;
      keep_good += fg;
    } else {
      ++del_sys;
      del_good += 1.0 - fg;
    }
  }
  const double keep_p = ratio(keep_good, keep_sys, static_cast<double>(keep_sys), keep_target_size == 0);
  const double keep_r = ratio(keep_good, keep_target_size, keep_target, keep_sys == 0);
  const double del_p = ratio(del_good, del_sys, static_cast<double>(del_sys), del_target_size == 0);

  // ADD
  std::size_t add_sys = 0;
  std::size_t add_good = 0;
  for (const std::string& g : o) {
    if (s.contains(g)) continue;
    ++add_sys;
    if (ref_doc_freq.contains(g)) ++add_good;
  }
  std::size_t add_ref = 0;
  for (const auto& [g, count] : ref_doc_freq)
    if (!s.contains(g)) ++add_ref;
  const double add_p = ratio(static_cast<double>(add_good), add_sys, static_cast<double>(add_sys), add_ref == 0);
  const double add_r = ratio(static_cast<double>(add_good), add_ref, static_cast<double>(add_ref), add_sys == 0);

  return OperationScores{100.0 * f1(add_p, add_r), 100.0 * f1(keep_p, keep_r), 100.0 * del_p};
}

}  // namespace

SariScore sari_tokens(const Tokens& source, const Tokens& output, std::span<const Tokens> references) {
  if (references.empty()) throw Error(ErrorCode::EmptyReferences, "SARI needs at least one reference");
  SariScore score;
  for (int n = 1; n <= kSariMaxOrder; ++n) {
    const OperationScores o = order_scores(source, output, references, n);
    score.per_order[static_cast<std::size_t>(n - 1)] = o;
    score.per_operation.add += o.add;
    score.per_operation.keep += o.keep;
    score.per_operation.del += o.del;
  }
  score.per_operation.add /= kSariMaxOrder;
  score.per_operation.keep /= kSariMaxOrder;
  score.per_operation.del /= kSariMaxOrder;
  score.total = (score.per_operation.add + score.per_operation.keep + score.per_operation.del) / 3.0;
  return score;
}

SariScore sari(std::string_view source, std::string_view output,
               std::span<const std::string> references) {
  if (references.empty()) throw Error(ErrorCode::EmptyReferences, "SARI needs at least one reference");
  std::vector<Tokens> refs;
  refs.reserve(references.size());
  for (const std::string& r : references) refs.push_back(normalize_tokens(r));
  return sari_tokens(normalize_tokens(source), normalize_tokens(output), refs);
}

CorpusSari corpus_sari(std::span<const std::string> sources, std::span<const std::string> outputs,
                       std::span<const std::vector<std::string>> references) {
  if (sources.size() != outputs.size() || sources.size() != references.size())
    throw Error(ErrorCode::Precondition, "corpus SARI: sources, outputs and references differ in length");
  if (sources.empty()) throw Error(ErrorCode::Precondition, "corpus SARI: empty corpus");
  CorpusSari out;
  out.sentences.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    SariScore s = sari(sources[i], outputs[i], references[i]);
    out.total += s.total;
    out.per_operation.add += s.per_operation.add;
    out.per_operation.keep += s.per_operation.keep;
    out.per_operation.del += s.per_operation.del;
    out.sentences.push_back(s);
  }
  const auto n = static_cast<double>(sources.size());
  out.total /= n;
  out.per_operation.add /= n;
  out.per_operation.keep /= n;
  out.per_operation.del /= n;
  return out;
}

EditReport edit_report(std::string_view source, std::string_view output) {
  const Tokens s = normalize_tokens(source);
  const Tokens o = normalize_tokens(output);
  std::map<std::string, std::size_t> cs, co;
  for (const auto& t : s) ++cs[t];
  for (const auto& t : o) ++co[t];
  EditReport r;
  for (const auto& [tok, c] : cs) {
    auto it = co.find(tok);
    if (it != co.end()) r.kept += std::min(c, it->second);
  }
  r.deleted = s.size() - r.kept;
  r.added = o.size() - r.kept;
  r.no_edit = (s == o);
  return r;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (auto bad = find_invalid_utf8(text); bad != std::string::npos)
    throw Error(ErrorCode::Io, path.string() + ": invalid UTF-8 at byte " + std::to_string(bad));
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = eol + 1;
  }
  return lines;
}

std::vector<double> load_external_scores(const std::filesystem::path& path) {
  std::vector<double> out;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t");
    const auto last = line.find_last_not_of(" \t");
    if (first == std::string::npos)
      throw Error(ErrorCode::Schema, path.string() + ":" + std::to_string(line_no) + ": blank score line");
    double v = 0.0;
    const char* b = line.data() + first;
    const char* e = line.data() + last + 1;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || !std::isfinite(v))
      throw Error(ErrorCode::Schema, path.string() + ":" + std::to_string(line_no) + ": not a real number");
    out.push_back(v);
  }
  return out;
}

}  // namespace policysimp
