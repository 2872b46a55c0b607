#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "mra/ring.hpp"

namespace mra {

// {"L": ..., "format": "standard-parametrization", "first_index": ...,
//  "support": [...], "values": [...]} with values listed for every index in
// standard order. Doubles are written in shortest round-trip form, so reading
// back reproduces the signal bit for bit.
nlohmann::json signal_to_json(const Signal& s);
Signal signal_from_json(const nlohmann::json& j);

Signal read_signal(const std::filesystem::path& path);
void write_signal(const std::filesystem::path& path, const Signal& s);

// Reads and writes whole JSON documents.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace mra
