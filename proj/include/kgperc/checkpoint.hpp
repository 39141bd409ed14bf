#pragma once
// Checkpoint file layout:
//
//   bytes 0..7   magic "KGUPNCK1"
//   u64 LE       header length L
//   L bytes      UTF-8 JSON header
//   rest         little-endian IEEE-754 f64 arrays, column-major, in the order
//                listed by header["arrays"] ({name, rows, cols} each)
//
// The header also records version, K, d, per-kind node counts, category count
// and the table shapes.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "kgperc/model.hpp"
#include "kgperc/trainer.hpp"

namespace kgperc {

inline constexpr char kCheckpointMagic[8] = {'K', 'G', 'U', 'P', 'N', 'C', 'K', '1'};
inline constexpr int kCheckpointVersion = 1;

struct NamedArray {
    std::string name;
    Eigen::MatrixXd values;
};

struct CheckpointFile {
    nlohmann::json header;  // without the "arrays" and "version" keys
    std::vector<NamedArray> arrays;
};

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file);
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);

struct Hyperparams {
    ModelConfig model;
    TrainConfig train;
    std::array<std::uint64_t, 3> node_counts{};  // users, news, entities
    std::uint64_t category_count = 1;

    bool operator==(const Hyperparams&) const;
};

void save_checkpoint(const ModelParams& params, const Hyperparams& hyperparams,
                     const std::filesystem::path& path);
std::pair<ModelParams, Hyperparams> load_checkpoint(const std::filesystem::path& path);

struct TransEState;
void save_transe(const TransEState& state, const std::array<std::uint64_t, 3>& node_counts,
                 const std::filesystem::path& path);
TransEState load_transe(const std::filesystem::path& path);

// JSON conversions (also used for the pipeline config file).
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace kgperc
