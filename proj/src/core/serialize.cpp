#include "core/serialize.hpp"

namespace policysimp {

Json to_json(const DecodeParams& d) {
  Json j;
  j["temperature"] = d.temperature;
  j["top_p"] = d.top_p;
  j["top_k"] = d.top_k ? Json(*d.top_k) : Json(nullptr);
  j["max_tokens"] = d.max_tokens;
  return j;
}

DecodeParams decode_params_from_json(const Json& j) {
  DecodeParams d;
  d.temperature = get_field<double>(j, "temperature", "decode");
  d.top_p = get_field<double>(j, "top_p", "decode");
  if (auto it = j.find("top_k"); it != j.end() && !it->is_null()) {
    int k = it->get<int>();
    if (k > 0) d.top_k = k;  // -1 means disabled, as in vLLM
  }
  d.max_tokens = get_field<int>(j, "max_tokens", "decode");
  d.validate();
  return d;
}

Json to_json(const SourceRecord& r) {
  Json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["token_count"] = r.token_count;
  j["origin"] = r.origin;
  j["filtered"] = r.filtered();
  j["reason"] = r.filtered() ? Json(std::string(to_string(r.reason))) : Json(nullptr);
  return j;
}

SourceRecord source_record_from_json(const Json& j) {
  SourceRecord r;
  r.id = get_field<std::string>(j, "id", "source");
  r.text = get_field<std::string>(j, "text", "source");
  r.token_count = get_field<std::size_t>(j, "token_count", "source");
  r.origin = get_field<std::string>(j, "origin", "source");
  if (auto it = j.find("reason"); it != j.end() && !it->is_null())
    r.reason = parse_filter_reason(it->get<std::string>());
  r.validate();
  return r;
}

Json to_json(const Candidate& c) {
  Json j;
  j["index"] = c.index;
  j["model"] = c.model;
  j["text"] = c.text;
  j["no_edit"] = c.no_edit;
  j["refusal"] = c.refusal;
  j["decode"] = to_json(c.decode);
  return j;
}

Candidate candidate_from_json(const Json& j) {
  Candidate c;
  c.index = get_field<int>(j, "index", "candidate");
  c.model = get_field<std::string>(j, "model", "candidate");
  c.text = get_field<std::string>(j, "text", "candidate");
  c.no_edit = j.value("no_edit", false);
  c.refusal = j.value("refusal", false);
  c.decode = decode_params_from_json(get_field<Json>(j, "decode", "candidate"));
  return c;
}

Json to_json(const CandidatePool& p) {
  Json j;
  j["source_id"] = p.source_id();
  j["source_text"] = p.source_text();
  j["policy"] = to_string(p.policy());
  j["model_roster"] = p.roster();
  Json cands = Json::array();
  for (const Candidate& c : p.candidates()) cands.push_back(to_json(c));
  j["candidates"] = std::move(cands);
  return j;
}

CandidatePool pool_from_json(const Json& j) {
  std::vector<Candidate> cands;
  for (const Json& c : get_field<Json>(j, "candidates", "pool")) cands.push_back(candidate_from_json(c));
  return CandidatePool(get_field<std::string>(j, "source_id", "pool"),
                       get_field<std::string>(j, "source_text", "pool"),
                       parse_policy(get_field<std::string>(j, "policy", "pool")), std::move(cands),
                       get_field<std::vector<std::string>>(j, "model_roster", "pool"));
}

Json to_json(const JudgeVerdict& v) {
  Json j;
  j["source_id"] = v.source_id();
  j["judge_mode"] = to_string(v.mode());
  j["candidate_count"] = v.candidate_count();
  Json dec = Json::object();
  for (Dimension d : kAllDimensions) {
    if (!v.has(d)) continue;
    Json e;
    e["preferred"] = v.decision(d).preferred;
    e["dispreferred"] = v.decision(d).dispreferred;
    dec[std::string(to_string(d))] = std::move(e);
  }
  j["decisions"] = std::move(dec);
  j["rationale"] = v.rationale();
  j["reasoning"] = v.reasoning() ? Json(*v.reasoning()) : Json(nullptr);
  return j;
}

JudgeVerdict verdict_from_json(const Json& j) {
  std::map<Dimension, Decision> decisions;
  const Json dec = get_field<Json>(j, "decisions", "verdict");
  for (const auto& [key, val] : dec.items()) {
    decisions[parse_dimension(key)] =
        Decision{get_field<int>(val, "preferred", "decision"),
                 get_field<int>(val, "dispreferred", "decision")};
  }
  std::optional<std::string> reasoning;
  if (auto it = j.find("reasoning"); it != j.end() && !it->is_null())
    reasoning = it->get<std::string>();
  return JudgeVerdict(get_field<std::string>(j, "source_id", "verdict"), std::move(decisions),
                      get_field<std::string>(j, "rationale", "verdict"), std::move(reasoning),
                      parse_judge_mode(get_field<std::string>(j, "judge_mode", "verdict")),
                      get_field<int>(j, "candidate_count", "verdict"));
}

Json to_json(const PreferenceTriplet& t) {
  Json j;
  j["source_id"] = t.source_id;
  j["source_text"] = t.source_text;
  j["preferred_text"] = t.preferred_text;
  j["dispreferred_text"] = t.dispreferred_text;
  j["policy"] = to_string(t.policy);
  j["preferred_model"] = t.preferred_model;
  j["dispreferred_model"] = t.dispreferred_model;
  j["judge_mode"] = to_string(t.judge_mode);
  return j;
}

PreferenceTriplet triplet_from_json(const Json& j) {
  PreferenceTriplet t;
  t.source_id = get_field<std::string>(j, "source_id", "triplet");
  t.source_text = get_field<std::string>(j, "source_text", "triplet");
  t.preferred_text = get_field<std::string>(j, "preferred_text", "triplet");
  t.dispreferred_text = get_field<std::string>(j, "dispreferred_text", "triplet");
  t.policy = parse_policy(get_field<std::string>(j, "policy", "triplet"));
  t.preferred_model = get_field<std::string>(j, "preferred_model", "triplet");
  t.dispreferred_model = get_field<std::string>(j, "dispreferred_model", "triplet");
  t.judge_mode = parse_judge_mode(get_field<std::string>(j, "judge_mode", "triplet"));
  return t;
}

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Schema, "matrix: expected an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw Error(ErrorCode::Schema, "matrix: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Json to_json(const AlignmentResult& a) {
  Json j;
  j["source_tokens"] = a.source_tokens;
  j["candidate_tokens"] = a.candidate_tokens;
  Json links = Json::array();
  for (auto [i, k] : a.links) links.push_back(Json::array({i, k}));
  j["links"] = std::move(links);
  j["plan"] = to_json(a.plan);
  j["null_mass"] = a.null_mass;
  j["candidate_null_mass"] = a.candidate_null_mass;
  j["converged"] = a.converged;
  return j;
}

AlignmentResult alignment_from_json(const Json& j) {
  AlignmentResult a;
  a.source_tokens = get_field<std::vector<std::string>>(j, "source_tokens", "alignment");
  a.candidate_tokens = get_field<std::vector<std::string>>(j, "candidate_tokens", "alignment");
  for (const Json& l : get_field<Json>(j, "links", "alignment"))
    a.links.emplace_back(l.at(0).get<int>(), l.at(1).get<int>());
  a.plan = matrix_from_json(get_field<Json>(j, "plan", "alignment"));
  a.null_mass = get_field<std::vector<double>>(j, "null_mass", "alignment");
  a.candidate_null_mass = get_field<std::vector<double>>(j, "candidate_null_mass", "alignment");
  a.converged = j.value("converged", true);
  return a;
}

namespace {

Json ops_json(const OperationScores& o) {
  Json j;
  j["add"] = o.add;
  j["keep"] = o.keep;
  j["delete"] = o.del;
  return j;
}

OperationScores ops_from_json(const Json& j) {
  return OperationScores{get_field<double>(j, "add", "sari"), get_field<double>(j, "keep", "sari"),
                         get_field<double>(j, "delete", "sari")};
}

}  // namespace

Json to_json(const SariScore& s) {
  Json j;
  j["total"] = s.total;
  j["per_operation"] = ops_json(s.per_operation);
  Json orders = Json::array();
  for (const OperationScores& o : s.per_order) orders.push_back(ops_json(o));
  j["per_order"] = std::move(orders);
  return j;
}

SariScore sari_from_json(const Json& j) {
  SariScore s;
  s.total = get_field<double>(j, "total", "sari");
  s.per_operation = ops_from_json(get_field<Json>(j, "per_operation", "sari"));
  const Json& orders = get_field<Json>(j, "per_order", "sari");
  if (!orders.is_array() || orders.size() != 4)
    throw Error(ErrorCode::Schema, "sari: per_order must list 4 orders");
  for (std::size_t n = 0; n < 4; ++n) s.per_order[n] = ops_from_json(orders[n]);
  return s;
}

}  // namespace policysimp
