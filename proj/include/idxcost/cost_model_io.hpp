#ifndef IDXCOST_COST_MODEL_IO_HPP
#define IDXCOST_COST_MODEL_IO_HPP

// Cost model files are JSON objects mapping opcode names to naturals, e.g.
//   {"assign": 1, "branch": 1, "jump": 1, "emit": 0,
//    "ind_reset": 1, "ind_inc": 1, "halt": 0}
// Omitted opcodes keep their default cost.

#include <string>

#include <json.hpp>

#include "idxcost/vm.hpp"

namespace idxcost {

inline CostModel parse_cost_model_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("cost model: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::Parse, "cost model: expected a JSON object");
  CostModel model = CostModel::standard();
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (Opcode op : {Opcode::Emit, Opcode::IndReset, Opcode::IndInc, Opcode::Assign,
                      Opcode::Branch, Opcode::Jump, Opcode::Halt}) {
      if (key == opcode_name(op)) {
        if (!value.is_number_unsigned())
          fail(ErrorKind::Parse, "cost model: cost of '" + key + "' must be a natural");
        model.costs[op] = value.get<std::uint64_t>();
        known = true;
        break;
      }
    }
    if (!known) fail(ErrorKind::Parse, "cost model: unknown opcode '" + key + "'");
  }
  return model;
}

inline std::string cost_model_json(const CostModel& model) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [op, cost] : model.costs) doc[opcode_name(op)] = cost;
  return doc.dump(2) + "\n";
}

}  // namespace idxcost

#endif  // IDXCOST_COST_MODEL_IO_HPP
