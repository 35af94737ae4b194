// Copyright 2026 The cbot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

// Validator for the JSON Schema subset used by the API schemas: type,
// properties, required, additionalProperties (false), items, minItems,
// minimum, minLength and const.
namespace cbot::testing {

using nlohmann::json;

inline bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

// Appends one message per violation; empty means valid.
inline void validate_schema(const json& v, const json& schema, const std::string& where,
                            std::vector<std::string>& errors) {
  if (schema.contains("type") && !type_matches(v, schema["type"].get<std::string>())) {
    errors.push_back(where + ": expected " + schema["type"].get<std::string>());
    return;
  }
  if (schema.contains("const") && v != schema["const"]) errors.push_back(where + ": expected " + schema["const"].dump());
  if (schema.contains("minimum") && v.is_number() && v.get<double>() < schema["minimum"].get<double>())
    errors.push_back(where + ": below minimum");
  if (schema.contains("maximum") && v.is_number() && v.get<double>() > schema["maximum"].get<double>())
    errors.push_back(where + ": above maximum");
  if (schema.contains("minLength") && v.is_string() && v.get<std::string>().empty() && schema["minLength"].get<int>() > 0)
    errors.push_back(where + ": empty string");
  if (v.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"])
        if (!v.contains(key.get<std::string>())) errors.push_back(where + ": missing " + key.get<std::string>());
    const json props = schema.value("properties", json::object());
    for (const auto& [key, value] : v.items()) {
      if (props.contains(key))
        validate_schema(value, props[key], where + "." + key, errors);
      else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false)
        errors.push_back(where + ": unexpected key " + key);
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      errors.push_back(where + ": too few items");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i)
        validate_schema(v[i], schema["items"], where + "[" + std::to_string(i) + "]", errors);
  }
}

inline std::vector<std::string> validate_schema(const json& v, const json& schema) {
  std::vector<std::string> errors;
  validate_schema(v, schema, "$", errors);
  return errors;
}

inline const json& chat_reply_schema() {
  static const json s = json::parse(R"({
    "type": "array",
    "items": {
      "type": "object",
      "required": ["recipient_id", "text"],
      "additionalProperties": false,
      "properties": {"recipient_id": {"type": "string"}, "text": {"type": "string"}}
    }
  })");
  return s;
}

inline const json& health_schema() {
  static const json s = json::parse(R"({
    "type": "object",
    "required": ["status", "model_fingerprint"],
    "additionalProperties": false,
    "properties": {"status": {"const": "ok"}, "model_fingerprint": {"type": "string", "minLength": 1}}
  })");
  return s;
}

inline const json& parse_schema() {
  static const json s = json::parse(R"({
    "type": "object",
    "required": ["intent_ranking", "entities"],
    "additionalProperties": false,
    "properties": {
      "intent_ranking": {
        "type": "array",
        "minItems": 1,
        "items": {
          "type": "object",
          "required": ["name", "confidence"],
          "additionalProperties": false,
          "properties": {"name": {"type": "string"}, "confidence": {"type": "number", "minimum": 0, "maximum": 1}}
        }
      },
      "entities": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["entity", "raw_value", "value", "start", "end"],
          "additionalProperties": false,
          "properties": {
            "entity": {"type": "string"},
            "raw_value": {"type": "string"},
            "value": {"type": "string"},
            "start": {"type": "integer", "minimum": 0},
            "end": {"type": "integer", "minimum": 0}
          }
        }
      }
    }
  })");
  return s;
}

inline const json& error_schema() {
  static const json s = json::parse(R"({
    "type": "object",
    "required": ["error"],
    "additionalProperties": false,
    "properties": {"error": {"type": "string", "minLength": 1}}
  })");
  return s;
}

inline const json& restart_schema() {
  static const json s = json::parse(R"({
    "type": "object",
    "required": ["sender", "status"],
    "additionalProperties": false,
    "properties": {"sender": {"type": "string"}, "status": {"const": "restarted"}}
  })");
  return s;
}

}  // namespace cbot::testing
