#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "nashdqn/model.hpp"

namespace nashdqn {

// Binary checkpoint: magic "NDQ1", a little-endian u32 format version, a
// little-endian u64 header length, a JSON header (agent count, network
// specs, normalization constants, curvature floor, tensor registry and the
// run configuration), then the flat parameter vector as little-endian IEEE
// doubles. Save/load round-trips parameters bit-exactly.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const NashQModel& model,
                     const nlohmann::json& run_config);

// Rebuilds the model (specs, scales, parameters). The stored run
// configuration, if requested, is written to *run_config.
std::unique_ptr<NashQModel> load_checkpoint(const std::string& path,
                                            nlohmann::json* run_config = nullptr);

}  // namespace nashdqn
