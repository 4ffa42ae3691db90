#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace reseq {

// Pretty-printed JSON with every floating-point number written with 17
// significant digits (%.17g), so artifacts are byte-stable and round-trip
// exactly. Non-finite floats become null. Output ends with a newline.
std::string dump_json(const nlohmann::ordered_json& value, int indent = 2);

}  // namespace reseq
