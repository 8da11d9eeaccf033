#pragma once

#include <string>

#include "lvl/fusion/model.hpp"

namespace lvl::fusion {

inline constexpr const char* kCheckpointSchema = "lvl-fusion/1";

// {"schema_version", "config", "arrays": {name: {"rows", "cols", "data"}}};
// includes the reference points. Doubles round-trip exactly.
std::string checkpoint_to_string(const ModelParams& p);
ModelParams checkpoint_from_string(const std::string& text, const std::string& source = "<checkpoint>");

}  // namespace lvl::fusion
