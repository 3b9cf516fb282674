#pragma once

#include "adlraw/sensorsim/dataset.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>

#include <json.hpp>

namespace adlraw::sensorsim {

// On-disk layout, all little-endian:
//   "ADLRAW1\0"
//   u32 version=1, count, channels=4, h, w, sensor_id
//   count x { u32 iso, f32 light_factor, u64 scene_seed, f32 noisy[4*h*w], f32 clean[4*h*w] }
//   u32 metadata length, UTF-8 JSON metadata (split, profile parameters)

enum class ParseErrorKind { bad_magic, bad_version, truncated, shape_mismatch, bad_metadata };

class DatasetParseError : public std::runtime_error {
public:
    DatasetParseError(ParseErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ParseErrorKind kind() const { return kind_; }

private:
    ParseErrorKind kind_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetFile {
    DomainDataset dataset;
    nlohmann::json metadata;
};

nlohmann::json profile_to_json(const SensorProfile& profile);
SensorProfile profile_from_json(const nlohmann::json& j);

void write_dataset(const std::filesystem::path& path, const DomainDataset& dataset,
                   const std::optional<SensorProfile>& profile = std::nullopt);
DatasetFile read_dataset(const std::filesystem::path& path);

/// Exact byte size of a dataset file for the given geometry and metadata length.
std::size_t dataset_file_size(std::size_t count, std::size_t h, std::size_t w, std::size_t metadata_bytes);

} // namespace adlraw::sensorsim
