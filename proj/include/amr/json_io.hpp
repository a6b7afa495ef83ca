#pragma once

#include <json.hpp>

#include "amr/graph.hpp"
#include "amr/levi.hpp"
#include "amr/sequence.hpp"

namespace amr {

nlohmann::json to_json(const AmrGraph& g);
nlohmann::json to_json(const LeviGraph& lv);
nlohmann::json to_json(const NodeSequence& seq);

AmrGraph graph_from_json(const nlohmann::json& j);
LeviGraph levi_from_json(const nlohmann::json& j);
NodeSequence sequence_from_json(const nlohmann::json& j);

}  // namespace amr
