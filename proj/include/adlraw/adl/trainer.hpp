#pragma once

#include "adlraw/adl/queue.hpp"
#include "adlraw/modnet/denoiser.hpp"
#include "adlraw/modnet/metadata.hpp"
#include "adlraw/numcore/optim.hpp"
#include "adlraw/sensorsim/dataset.hpp"
#include "adlraw/sensorsim/profile.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace adlraw::adl {

using PairRefs = std::vector<const sensorsim::SamplePair*>;

struct AdlConfig {
    numcore::OptimizerConfig optimizer;
    std::size_t iterations = 2000;     // T, adaptive source iterations
    std::size_t queue_capacity = 10;   // M
    std::size_t batch = 4;             // B, source pairs per step
    std::size_t target_batch = 4;      // pairs per pretrain/finetune step
    double k_start = 0.2;
    double k_end = 0.5;
    std::size_t diverse_threshold = 10; // farthest-point validation below this size
    std::size_t pretrain_iterations = 500;
    std::size_t finetune_iterations = 500;
    std::uint64_t seed = 0;

    bool pretrain = true;
    bool dynamic_val = true;
    bool enforce_isolation = true; // reject source pairs carrying the target sensor id
    modnet::MetadataMask mask;

    void validate() const;
};

/// |V'| at iteration t: round(size * (k_start + (k_end - k_start) * t / T)),
/// clamped to [1, size - 1].
std::size_t k_schedule(std::size_t t, std::size_t T, std::size_t size, const AdlConfig& cfg);

struct ValidationSplit {
    std::vector<std::size_t> validation; // indices into T_adp, ascending
    std::vector<std::size_t> train;      // the complement, ascending
};

/// Uniform random split of `size` items into k validation and size - k train.
ValidationSplit uniform_split(std::size_t size, std::size_t k, std::mt19937_64& rng);

/// Farthest-point selection of k items in log-gain space. The first pick is
/// the lowest gain; ties are resolved by scanning from index `rotation % n`.
ValidationSplit diverse_split(std::span<const double> gains, std::size_t k, std::size_t rotation);

/// Diverse selection when |T_adp| < cfg.diverse_threshold, uniform otherwise.
/// gains[i] is the effective gain of T_adp item i.
ValidationSplit sample_validation_split(std::span<const double> gains, std::size_t k, std::size_t t,
                                        std::mt19937_64& rng, const AdlConfig& cfg);

/// K(iso) * light_factor per pair; iso * light_factor when no profile is given.
std::vector<double> effective_gains(const sensorsim::DomainDataset& target,
                                    const std::optional<sensorsim::SensorProfile>& profile);

enum class Decision { accepted, rejected };

struct LogRecord {
    std::size_t t = 0;
    std::size_t source_domain = 0; // index into the source list
    int source_sensor = 0;
    double eval_psnr = 0.0;
    double queue_mean = 0.0;       // before admission
    std::size_t queue_size = 0;    // before admission
    Decision decision = Decision::rejected;
    std::size_t k = 0;
};

struct AdlState {
    explicit AdlState(std::size_t capacity, std::uint64_t seed) : queue(capacity), rng(seed) {}

    EvalQueue queue;
    std::size_t t = 0;
    std::mt19937_64 rng;
    std::vector<LogRecord> log;
};

struct AdlHooks {
    /// Replaces the queue-mean rule when it returns a value.
    std::function<std::optional<bool>(std::size_t t, double eval, double queue_mean)> decide;
    std::function<void(std::size_t t, const numcore::Optimizer&)> before_step;
    std::function<void(const LogRecord&, const numcore::Optimizer&)> after_step;
};

/// One L1 step on `pairs` (mean over all pixels of all pairs).
double train_step(modnet::Denoiser& model, numcore::Optimizer& opt, std::span<const sensorsim::SamplePair* const> pairs,
                  const modnet::MetadataMask& mask);

/// Mean validation PSNR of the current model over `pairs`.
double eval_psnr(const modnet::Denoiser& model, std::span<const sensorsim::SamplePair* const> pairs,
                 const modnet::MetadataMask& mask);

/// `iterations` steps on batches of cfg.target_batch pairs drawn uniformly
/// without replacement from `target` (all pairs when it is smaller).
void train_on_target(modnet::Denoiser& model, numcore::Optimizer& opt, const sensorsim::DomainDataset& target,
                     std::size_t iterations, std::mt19937_64& rng, const AdlConfig& cfg);

/// One adaptive iteration: snapshot, step on T_train + S', evaluate V',
/// keep the step when Eval beats the queue mean, otherwise restore the
/// snapshot. Appends a log record.
Decision adl_step(AdlState& state, modnet::Denoiser& model, numcore::Optimizer& opt, const PairRefs& source_batch,
                  std::size_t source_domain, const PairRefs& train, const PairRefs& validation, std::size_t k,
                  const AdlConfig& cfg, const AdlHooks& hooks = {});

struct TrainResult {
    std::vector<LogRecord> log;
    std::size_t gradient_steps = 0;
    double accept_rate = 0.0; // accepted / T; 0 for non-adaptive methods
    double queue_seed = 0.0;
};

/// Target pretraining, T adaptive iterations, then target fine-tuning.
TrainResult adl_train(modnet::Denoiser& model, std::span<const sensorsim::DomainDataset> sources,
                      const sensorsim::DomainDataset& target, const AdlConfig& cfg,
                      const std::optional<sensorsim::SensorProfile>& target_profile = std::nullopt,
                      const AdlHooks& hooks = {});

/// Pretrain-only and finetune-only entry points with their own optimizer.
TrainResult pretrain_target(modnet::Denoiser& model, const sensorsim::DomainDataset& target, const AdlConfig& cfg);
TrainResult finetune_target(modnet::Denoiser& model, const sensorsim::DomainDataset& target, const AdlConfig& cfg);

/// pretrain + T steps on batches of B pairs drawn from the pooled sources,
/// then fine-tuning on the target. Same number of gradient steps as adl_train.
TrainResult baseline_finetune(modnet::Denoiser& model, std::span<const sensorsim::DomainDataset> sources,
                              const sensorsim::DomainDataset& target, const AdlConfig& cfg);

struct AblationFlags {
    bool no_pretrain = false;
    bool no_dynamic_val = false;
    bool no_iso_mod = false;
    bool no_type_mod = false;
    bool no_adl = false;

    /// Comma separated subset of no-pretrain, no-dynamic-val, no-iso-mod,
    /// no-type-mod, no-adl. Empty means none.
    static AblationFlags parse(const std::string& text);
    std::string to_string() const;
    void validate() const;
};

TrainResult ablation_variant(modnet::Denoiser& model, const AblationFlags& flags,
                             std::span<const sensorsim::DomainDataset> sources,
                             const sensorsim::DomainDataset& target, const AdlConfig& cfg,
                             const std::optional<sensorsim::SensorProfile>& target_profile = std::nullopt);

std::string_view to_string(Decision d);

/// JSON-lines accept/reject log.
void write_log(const std::filesystem::path& path, std::span<const LogRecord> log);
std::vector<LogRecord> read_log(const std::filesystem::path& path);

} // namespace adlraw::adl
