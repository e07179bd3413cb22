#pragma once

#include <filesystem>

#include <json.hpp>

#include "pbf/mlp.hpp"
#include "pbf/pinn.hpp"

namespace pbf {

// Raw network weights: magic "PBFM", u32 version, u32 layer-size count,
// u32 sizes, then the flat parameter vector as f64, little-endian. Loading
// validates the architecture header.
void save_mlp(const Mlp& model, const std::filesystem::path& file);
Mlp load_mlp(const std::filesystem::path& file);

// JSON fragments for the sidecar files
nlohmann::json to_json(const NormalizationSpec& norm);
NormalizationSpec normalization_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SpaceTimeBox& box);
SpaceTimeBox box_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainingMeta& meta);
TrainingMeta meta_from_json(const nlohmann::json& j);

// A trained PINN is a .pbfm weight file plus a .json sidecar carrying the
// normalization, interval box and training metadata.
void save_pinn(const PinnSurrogate& surrogate, const std::filesystem::path& pbfm_file);
PinnSurrogate load_pinn(const std::filesystem::path& pbfm_file);

}  // namespace pbf
