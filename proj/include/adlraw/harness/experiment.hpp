#pragma once

#include "adlraw/adl/trainer.hpp"
#include "adlraw/modnet/denoiser.hpp"
#include "adlraw/sensorsim/dataset.hpp"
#include "adlraw/sensorsim/fleet.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace adlraw::harness {

struct FleetConfig {
    std::string preset = "default5";
    std::string data_dir;            // when set, pools are read from a `simulate` output directory
    std::size_t patch = 32;          // packed side length
    std::size_t pool_size = 64;      // pairs simulated per sensor
    std::size_t test_size = 32;      // held-out target pairs per sensor
    std::vector<int> isos;           // empty = each profile's iso set
    std::uint64_t data_seed = 7;
};

struct RunConfig {
    std::vector<int> targets{0};
    std::vector<std::string> methods{"adl", "finetune"};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t tadp_size = 16;
    std::vector<std::size_t> sizes{4, 8, 16, 32};
    std::vector<std::string> ablations{"no-pretrain", "no-dynamic-val", "no-iso-mod", "no-type-mod", "no-adl"};
    double harmful_sigma = 30.0;
    sensorsim::HarmfulMode harmful2_mode = sensorsim::HarmfulMode::shuffled_gt;
    std::filesystem::path out = "out";
    bool record_wall_clock = false;
    bool save_artifacts = true;      // checkpoints and ADL logs per cell
};

struct ExperimentConfig {
    FleetConfig fleet;
    adl::AdlConfig adl;
    modnet::DenoiserConfig model;
    RunConfig run;

    /// Throws ConfigError or ContractViolation on inconsistent settings.
    void validate() const;
};

/// Builds a config from parsed TOML. Unknown keys are errors.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Per-sensor data shared by every cell of an experiment.
struct FleetData {
    sensorsim::Fleet fleet;
    std::vector<sensorsim::DomainDataset> pools; // split = source
    std::vector<sensorsim::DomainDataset> tests; // split = test, scene seeds disjoint from pools
};

FleetData build_fleet_data(const FleetConfig& cfg);
/// Writes sensor_<i>.adlraw, test/sensor_<i>.adlraw and fleet.json.
void write_fleet_data(const FleetData& data, const std::filesystem::path& dir);
FleetData read_fleet_data(const std::filesystem::path& dir);
FleetData load_fleet_data(const FleetConfig& cfg);

enum class SourceMix { clean, harmful1, harmful2 };
std::string_view to_string(SourceMix mix);

/// Everything one training run needs.
struct CellData {
    std::vector<sensorsim::DomainDataset> sources;
    sensorsim::DomainDataset target; // T_adp
    const sensorsim::DomainDataset* test = nullptr;
    sensorsim::SensorProfile target_profile;
    std::size_t n_sensors = 0;
};

/// T_adp is a seeded draw of `size` pairs from the target pool; sources are
/// the pools of every other sensor, each followed by its harmful copy when
/// `mix` is not clean.
CellData make_cell(const FleetData& data, const ExperimentConfig& cfg, int target, std::size_t size,
                   std::uint64_t seed, SourceMix mix = SourceMix::clean);

struct ResultRecord {
    std::string method;
    int target = 0;
    std::uint64_t seed = 0;
    std::size_t tadp_size = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double accept_rate = 0.0;
    double wall_s = 0.0;
};

struct CellOutput {
    ResultRecord record;
    adl::TrainResult train;
    modnet::Denoiser model;
};

/// Trains one (method, target, seed, size) cell from a fresh model seeded by
/// `seed` and evaluates it on the target test split. Methods: adl, finetune,
/// ablation:<flags>. `label` overrides the method name in the record.
CellOutput run_cell(const ExperimentConfig& cfg, const CellData& cell, const std::string& method, int target,
                    std::uint64_t seed, const std::string& label = "");

/// Writes model_<method>_t<target>_s<seed>.bin and, for adaptive methods,
/// log_<method>_t<target>_s<seed>.jsonl under `dir`.
void save_cell_artifacts(const CellOutput& out, const std::filesystem::path& dir);

std::vector<ResultRecord> run_methods(const ExperimentConfig& cfg, const FleetData& data,
                                      const std::vector<std::string>& methods);
std::vector<ResultRecord> run_cross_validation(const ExperimentConfig& cfg, const FleetData& data);
std::vector<ResultRecord> run_ablations(const ExperimentConfig& cfg, const FleetData& data);
std::vector<ResultRecord> run_harmful(const ExperimentConfig& cfg, const FleetData& data);
std::vector<ResultRecord> run_size_sweep(const ExperimentConfig& cfg, const FleetData& data);

/// Sorts by (method, target, seed, tadp_size) and writes results.csv and
/// results.json into `dir`.
void emit_results(std::vector<ResultRecord> records, const std::filesystem::path& dir);
std::vector<ResultRecord> read_results_csv(const std::filesystem::path& path);
std::vector<ResultRecord> read_results_json(const std::filesystem::path& path);

/// Median test PSNR of the records matching method (and target when >= 0).
double median_psnr(const std::vector<ResultRecord>& records, const std::string& method, int target = -1,
                   std::size_t tadp_size = 0);

} // namespace adlraw::harness
