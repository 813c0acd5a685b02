#pragma once

#include <json.hpp>

#include "normdescent/matrix.hpp"
#include "normdescent/optimizers.hpp"

namespace normdescent {

// JSON round-trips for checkpointing. Matrices serialize as nested row
// arrays; doubles survive a dump/parse cycle exactly (shortest round-trip
// printing), which the byte-identical resume contract relies on.

void to_json(nlohmann::json& j, const Matrix& m);
void from_json(const nlohmann::json& j, Matrix& m);

NLOHMANN_JSON_SERIALIZE_ENUM(ShampooMode, {
                                              {ShampooMode::sum, "sum"},
                                              {ShampooMode::ema, "ema"},
                                          })

NLOHMANN_JSON_SERIALIZE_ENUM(LineSearchPolicy,
                             {
                                 {LineSearchPolicy::prodigy_max, "prodigy_max"},
                                 {LineSearchPolicy::doubling, "doubling"},
                                 {LineSearchPolicy::cosine_rule, "cosine_rule"},
                             })

void to_json(nlohmann::json& j, const AdamState& s);
void from_json(const nlohmann::json& j, AdamState& s);

void to_json(nlohmann::json& j, const ShampooState& s);
void from_json(const nlohmann::json& j, ShampooState& s);

void to_json(nlohmann::json& j, const ProdigyState& s);
void from_json(const nlohmann::json& j, ProdigyState& s);

void to_json(nlohmann::json& j, const LineSearchState& s);
void from_json(const nlohmann::json& j, LineSearchState& s);

}  // namespace normdescent
