#ifndef WNDUMA_CHECKPOINT_HPP
#define WNDUMA_CHECKPOINT_HPP

// Checkpoint container:
//   8 bytes   magic "WNDUMACK"
//   u32 LE    format version
//   u64 LE    header length in bytes
//   header    UTF-8 JSON: config echo, model shape, vocabulary, tensor table
//   payload   float64 little-endian values, row-major, at the offsets listed
//             in the tensor table (relative to the payload start)

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wnduma/classifier.hpp"
#include "wnduma/data.hpp"

namespace wnduma {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
    std::uint32_t format_version = kCheckpointVersion;
    /// Effective configuration of the run that wrote the file (JSON object).
    std::string config_json;
    ModelConfig model;
    data::Vocabulary vocabulary;
    std::vector<std::pair<std::string, Mat>> tensors;
};

void write_checkpoint(const std::filesystem::path& path, const Model& model, const data::Vocabulary& vocab,
                      std::string_view config_json);
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Builds a model of the recorded shape and loads every tensor by name.
Model restore_model(const CheckpointData& checkpoint);
void load_parameters(Model& model, const CheckpointData& checkpoint);

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(std::string_view text);

}  // namespace wnduma

#endif  // WNDUMA_CHECKPOINT_HPP
