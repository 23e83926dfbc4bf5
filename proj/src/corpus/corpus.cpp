#include "corpus/corpus.hpp"

#include <cstdio>
#include <unordered_set>

#include "core/error.hpp"
#include "core/serialize.hpp"
#include "text/tokenize.hpp"
#include "util/io.hpp"

namespace policysimp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(b, e - b + 1));
}

std::string make_id(const std::string& digest, std::size_t line_no) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08zu", line_no);
  return digest.substr(0, 12) + ":" + buf;
}

bool has_alphabetic_token(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens)
    for (unsigned char c : t)
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0xC0) return true;
  return false;
}

}  // namespace

std::vector<SourceRecord> load_sources(const std::filesystem::path& path, const LoadOptions& opts) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "source file not found: " + path.string());
  const std::string data = read_file(path);
  if (auto bad = find_invalid_utf8(data); bad != std::string::npos)
    throw Error(ErrorCode::Io, path.string() + ": invalid UTF-8 at byte " + std::to_string(bad));
  const std::string digest = sha256_hex(data);
  const std::string origin = opts.origin.empty() ? path.filename().string() : opts.origin;

  std::vector<SourceRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < data.size()) {
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    const std::string_view line(data.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    std::string text;
    if (opts.format == SourceFormat::PlainLines) {
      text = trim(line);
    } else {
      if (trim(line).empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(line_no);
      Json rec;
      try {
        rec = Json::parse(line);
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::Schema, where + ": not valid JSON");
      }
      text = trim(get_field<std::string>(rec, opts.text_field, where));
    }
    if (text.empty()) continue;

    SourceRecord r;
    r.id = make_id(digest, line_no);
    r.token_count = normalize_tokens(text).size();
    r.text = std::move(text);
    r.origin = origin;
    out.push_back(std::move(r));
  }
  return out;
}

FilterResult filter_sources(const std::vector<SourceRecord>& records, const FilterConfig& cfg) {
  if (cfg.min_tokens > cfg.max_tokens)
    throw Error(ErrorCode::Config, "filter: min_tokens exceeds max_tokens");
  FilterResult res;
  std::unordered_set<std::string> seen;
  for (SourceRecord r : records) {
    const auto tokens = normalize_tokens(r.text);
    r.token_count = tokens.size();
    r.reason = FilterReason::None;
    if (tokens.size() < cfg.min_tokens)
      r.reason = FilterReason::TooShort;
    else if (tokens.size() > cfg.max_tokens)
      r.reason = FilterReason::TooLong;
    else if (!has_alphabetic_token(tokens))
      r.reason = FilterReason::NonSentential;
    else if (cfg.dedup && !seen.insert(join_tokens(tokens)).second)
      r.reason = FilterReason::Duplicate;
    (r.filtered() ? res.rejected : res.kept).push_back(std::move(r));
  }
  return res;
}

}  // namespace policysimp
