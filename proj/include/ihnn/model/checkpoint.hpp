#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihnn/core/error.hpp"
#include "ihnn/core/io.hpp"
#include "ihnn/model/param_vector.hpp"

namespace ihnn {

inline constexpr int kCheckpointFormatVersion = 1;

/// Checkpoint = JSON header plus a sibling little-endian f64 file with the flat
/// parameters. `header_path` names the .json file; the payload sits next to it.
struct CheckpointInfo {
  ParamVector params;
  std::uint64_t seed = 0;
  std::string system;  // optional, empty when unknown
};

inline void save_checkpoint(const std::filesystem::path& header_path, const ParamVector& theta, std::uint64_t seed,
                            const std::string& system = {}) {
  auto payload = header_path;
  payload.replace_extension(".f64");
  nlohmann::json h;
  h["format_version"] = kCheckpointFormatVersion;
  h["arch"] = theta.arch.widths();
  h["seed"] = seed;
  h["n_params"] = theta.size();
  h["params_file"] = payload.filename().string();
  if (!system.empty()) h["system"] = system;
  io::write_text(header_path, h.dump(2) + "\n");
  io::write_f64(payload, theta.values);
}

inline CheckpointInfo load_checkpoint(const std::filesystem::path& header_path) {
  if (!std::filesystem::exists(header_path)) throw IoError("checkpoint not found: " + header_path.string());
  const auto h = io::read_json(header_path);
  try {
    if (h.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw IoError(header_path.string() + ": unsupported checkpoint format version");
    }
    CheckpointInfo info;
    Architecture arch(h.at("arch").get<std::vector<std::size_t>>());
    auto values = io::read_f64(header_path.parent_path() / h.at("params_file").get<std::string>());
    if (values.size() != arch.param_count() || h.at("n_params").get<std::size_t>() != arch.param_count()) {
      throw IoError(header_path.string() + ": parameter count " + std::to_string(values.size()) +
                    " does not match architecture " + arch.to_string() + " (" +
                    std::to_string(arch.param_count()) + ")");
    }
    info.params = ParamVector(std::move(arch), std::move(values));
    info.seed = h.at("seed").get<std::uint64_t>();
    info.system = h.value("system", std::string{});
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(header_path.string() + ": malformed checkpoint header: " + e.what());
  }
}

}  // namespace ihnn
