#include "repute/json_io.hpp"

#include <cmath>

namespace repute {

namespace {

template <typename T>
std::optional<T> get_optional(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidField, std::string("field '") + key + "' has the wrong type");
  }
}

std::optional<Tick> get_tick(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) {
    throw Error(ErrorCode::InvalidField, std::string("field '") + key + "' must be an integer");
  }
  return it->get<Tick>();
}

std::optional<double> get_number(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    throw Error(ErrorCode::InvalidField, std::string("field '") + key + "' must be a number");
  }
  return it->get<double>();
}

}  // namespace

RawRecord raw_record_from_json(const Json& obj) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::InvalidField, "rating must be a JSON object");
  }
  RawRecord raw;
  raw.kind = get_optional<std::string>(obj, "kind");
  raw.from = get_optional<std::string>(obj, "from");
  raw.to = get_optional<std::string>(obj, "to");
  raw.time = get_tick(obj, "time");
  raw.value = get_number(obj, "value");
  raw.weight = get_number(obj, "weight");
  raw.aspect = get_optional<std::string>(obj, "aspect");
  raw.category = get_optional<std::string>(obj, "category");
  raw.event = get_optional<std::string>(obj, "event");
  return raw;
}

RatingRecord record_from_json(const Json& obj) { return validate_record(raw_record_from_json(obj)); }

Json record_to_json(const RatingRecord& rec) {
  Json obj;
  obj["kind"] = std::string(to_string(rec.kind));
  obj["from"] = rec.from.str();
  obj["to"] = rec.to.str();
  obj["time"] = rec.time;
  obj["value"] = rec.value;
  obj["weight"] = rec.weight;
  if (!rec.aspect.empty()) obj["aspect"] = rec.aspect;
  if (!rec.category.empty()) obj["category"] = rec.category;
  if (!rec.event.empty()) obj["event"] = rec.event;
  return obj;
}

std::string record_to_jsonl(const RatingRecord& rec) { return record_to_json(rec).dump(); }

Json state_to_json(const ReputationState& state) {
  Json doc;
  doc["as_of"] = state.as_of();
  doc["origin"] = state.origin();
  Json entries = Json::object();
  for (const auto& [member, value] : state.entries()) {
    entries[member.str()] = value;
  }
  doc["entries"] = std::move(entries);
  doc["hash_precision"] = state.precision();
  doc["hash"] = state.hash();
  return doc;
}

std::string state_to_snapshot(const ReputationState& state) {
  return state_to_json(state).dump(2) + "\n";
}

ReputationState state_from_json(const Json& doc) {
  try {
    const Tick as_of = doc.at("as_of").get<Tick>();
    const Tick origin = doc.at("origin").get<Tick>();
    const int precision = doc.value("hash_precision", kDefaultHashPrecision);
    const std::string stored = doc.at("hash").get<std::string>();
    ReputationMap entries;
    for (const auto& [key, value] : doc.at("entries").items()) {
      entries.emplace(MemberId(key), value.get<double>());
    }
    ReputationState state(origin, as_of, std::move(entries), precision);
    if (state.hash() != stored) {
      throw Error(ErrorCode::HashMismatch,
                  "stored hash " + stored + " does not match recomputed " + state.hash());
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::HashMismatch, std::string("malformed snapshot: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::HashMismatch) throw;
    throw Error(ErrorCode::HashMismatch, std::string("invalid snapshot content: ") + e.what());
  }
}

ReputationState state_from_snapshot(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::HashMismatch, std::string("unparseable snapshot: ") + e.what());
  }
  return state_from_json(doc);
}

Json config_to_json(const EngineConfig& config) {
  Json obj;
  obj["default_reputation"] = config.default_reputation;
  Json aspects = Json::object();
  for (const auto& [aspect, w] : config.aspect_weights) aspects[aspect] = w;
  obj["aspect_weights"] = std::move(aspects);
  obj["endorse_blend"] = config.endorse_blend;
  obj["transact_blend"] = config.transact_blend;
  obj["use_log_differential"] = config.use_log_differential;
  obj["decay_prev"] = config.decay_prev;
  obj["decay_new"] = config.decay_new;
  obj["rater_weight_floor"] = config.rater_weight_floor;
  obj["financial_log_normalize"] = config.financial_log_normalize;
  obj["hash_precision"] = config.hash_precision;
  obj["no_evidence"] = config.no_evidence == NoEvidenceRule::Hold ? "hold" : "decay";
  return obj;
}

EngineConfig config_from_json(const Json& obj, EngineConfig base) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::InvalidConfig, "engine config must be a JSON object");
  }
  try {
    for (const auto& [key, value] : obj.items()) {
      if (key == "default_reputation") {
        base.default_reputation = value.get<double>();
      } else if (key == "aspect_weights") {
        base.aspect_weights.clear();
        for (const auto& [aspect, w] : value.items()) base.aspect_weights[aspect] = w.get<double>();
      } else if (key == "endorse_blend") {
        base.endorse_blend = value.get<double>();
      } else if (key == "transact_blend") {
        base.transact_blend = value.get<double>();
      } else if (key == "use_log_differential") {
        base.use_log_differential = value.get<bool>();
      } else if (key == "decay_prev") {
        base.decay_prev = value.get<double>();
      } else if (key == "decay_new") {
        base.decay_new = value.get<double>();
      } else if (key == "rater_weight_floor") {
        base.rater_weight_floor = value.get<double>();
      } else if (key == "financial_log_normalize") {
        base.financial_log_normalize = value.get<bool>();
      } else if (key == "hash_precision") {
        base.hash_precision = value.get<int>();
      } else if (key == "no_evidence") {
        const auto rule = value.get<std::string>();
        if (rule == "hold") {
          base.no_evidence = NoEvidenceRule::Hold;
        } else if (rule == "decay") {
          base.no_evidence = NoEvidenceRule::DecayToDefault;
        } else {
          throw Error(ErrorCode::InvalidConfig, "no_evidence must be 'decay' or 'hold'");
        }
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown engine key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  base.validate();
  return base;
}

}  // namespace repute
