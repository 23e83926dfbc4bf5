#pragma once

// JSON encodings of the core types. Field order is fixed (ordered_json) so
// every file the pipeline writes is byte-stable.

#include <string>
#include <string_view>

#include <json.hpp>

#include "core/error.hpp"
#include "core/model.hpp"

namespace policysimp {

using Json = nlohmann::ordered_json;

template <typename T>
T get_field(const Json& j, std::string_view key, std::string_view context = "record") {
  if (!j.is_object())
    throw Error(ErrorCode::Schema, std::string(context) + ": expected a JSON object");
  auto it = j.find(key);
  if (it == j.end())
    throw Error(ErrorCode::Schema,
                std::string(context) + ": missing field '" + std::string(key) + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Schema,
                std::string(context) + ": field '" + std::string(key) + "' has the wrong type");
  }
}

Json to_json(const DecodeParams& d);
DecodeParams decode_params_from_json(const Json& j);

Json to_json(const SourceRecord& r);
SourceRecord source_record_from_json(const Json& j);

Json to_json(const Candidate& c);
Candidate candidate_from_json(const Json& j);

Json to_json(const CandidatePool& p);
CandidatePool pool_from_json(const Json& j);

Json to_json(const JudgeVerdict& v);
JudgeVerdict verdict_from_json(const Json& j);

Json to_json(const PreferenceTriplet& t);
PreferenceTriplet triplet_from_json(const Json& j);

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const AlignmentResult& a);
AlignmentResult alignment_from_json(const Json& j);

Json to_json(const SariScore& s);
SariScore sari_from_json(const Json& j);

}  // namespace policysimp
