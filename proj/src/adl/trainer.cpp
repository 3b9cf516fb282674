#include "adlraw/adl/trainer.hpp"

#include "adlraw/metrics/eval.hpp"
#include "adlraw/modnet/batch.hpp"
#include "adlraw/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace adlraw::adl {

namespace {

// Draws `count` distinct indices from [0, n) by a partial Fisher-Yates shuffle,
// or all n in shuffled order when count >= n.
std::vector<std::size_t> draw_indices(std::size_t n, std::size_t count, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const std::size_t take = std::min(n, count);
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(take);
    return idx;
}

PairRefs refs(const sensorsim::DomainDataset& ds, std::span<const std::size_t> idx) {
    PairRefs out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(&ds.pairs[i]);
    return out;
}

void check_isolation(const PairRefs& batch, int target_sensor) {
    for (const auto* p : batch) {
        if (p->sensor_id == target_sensor) {
            throw ContractViolation("source batch holds a pair from target sensor " + std::to_string(target_sensor));
        }
    }
}

void check_inputs(std::span<const sensorsim::DomainDataset> sources, const sensorsim::DomainDataset& target) {
    if (sources.empty()) throw ContractViolation("training needs at least one source domain");
    for (const auto& s : sources) {
        if (s.pairs.empty()) throw ContractViolation("source domain " + std::to_string(s.sensor_id) + " is empty");
    }
    if (target.size() < 2) throw ContractViolation("target set needs at least 2 pairs to split");
}

} // namespace

void AdlConfig::validate() const {
    if (!(k_start > 0.0 && k_start <= k_end && k_end < 1.0)) {
        throw ContractViolation("k schedule needs 0 < k_start <= k_end < 1");
    }
    if (queue_capacity == 0) throw ContractViolation("queue capacity M must be at least 1");
    if (batch == 0 || target_batch == 0) throw ContractViolation("batch sizes must be positive");
    if (!(optimizer.lr > 0.0)) throw ContractViolation("learning rate must be positive");
}

std::size_t k_schedule(std::size_t t, std::size_t T, std::size_t size, const AdlConfig& cfg) {
    if (size < 2) throw ContractViolation("k_schedule: target set of size " + std::to_string(size) + " cannot be split");
    if (t > T) throw ContractViolation("k_schedule: t beyond T");
    const double frac = T == 0 ? 0.0 : static_cast<double>(t) / static_cast<double>(T);
    const double k = std::round(static_cast<double>(size) * (cfg.k_start + (cfg.k_end - cfg.k_start) * frac));
    return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, size - 1);
}

ValidationSplit uniform_split(std::size_t size, std::size_t k, std::mt19937_64& rng) {
    if (k < 1 || k >= size) {
        throw ContractViolation("validation size " + std::to_string(k) + " outside [1, " + std::to_string(size) + ")");
    }
    auto val = draw_indices(size, k, rng);
    std::sort(val.begin(), val.end());
    ValidationSplit split;
    split.validation = val;
    for (std::size_t i = 0, j = 0; i < size; ++i) {
        if (j < val.size() && val[j] == i) ++j;
        else split.train.push_back(i);
    }
    return split;
}

ValidationSplit diverse_split(std::span<const double> gains, std::size_t k, std::size_t rotation) {
    const std::size_t n = gains.size();
    if (k < 1 || k >= n) {
        throw ContractViolation("validation size " + std::to_string(k) + " outside [1, " + std::to_string(n) + ")");
    }
    std::vector<double> lg(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(gains[i] > 0.0)) throw ContractViolation("diverse_split: gains must be positive");
        lg[i] = std::log(gains[i]);
    }
    const std::size_t start = rotation % n;
    std::vector<bool> chosen(n, false);
    std::vector<double> dist(n, 0.0);

    std::size_t first = start;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t i = (start + s) % n;
        if (lg[i] < lg[first]) first = i;
    }
    chosen[first] = true;
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::fabs(lg[i] - lg[first]);

    for (std::size_t picked = 1; picked < k; ++picked) {
        std::size_t best = n;
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t i = (start + s) % n;
            if (chosen[i]) continue;
            if (best == n || dist[i] > dist[best]) best = i;
        }
        chosen[best] = true;
        for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], std::fabs(lg[i] - lg[best]));
    }
    ValidationSplit split;
    for (std::size_t i = 0; i < n; ++i) (chosen[i] ? split.validation : split.train).push_back(i);
    return split;
}

ValidationSplit sample_validation_split(std::span<const double> gains, std::size_t k, std::size_t t,
                                        std::mt19937_64& rng, const AdlConfig& cfg) {
    if (gains.size() < cfg.diverse_threshold) return diverse_split(gains, k, t);
    return uniform_split(gains.size(), k, rng);
}

std::vector<double> effective_gains(const sensorsim::DomainDataset& target,
                                    const std::optional<sensorsim::SensorProfile>& profile) {
    std::vector<double> out;
    out.reserve(target.size());
    for (const auto& p : target.pairs) {
        const double k = profile ? profile->gain(p.iso) : static_cast<double>(p.iso);
        out.push_back(k * static_cast<double>(p.light_factor));
    }
    return out;
}

double train_step(modnet::Denoiser& model, numcore::Optimizer& opt,
                  std::span<const sensorsim::SamplePair* const> pairs, const modnet::MetadataMask& mask) {
    auto batch = modnet::make_batch(pairs, model.config().n_sensors, mask);
    numcore::Tape tape;
    opt.zero_grad();
    auto out = model.forward(tape, batch.noisy, batch.meta);
    auto loss = numcore::ops::l1_loss(tape, out, batch.clean);
    tape.backward(loss);
    opt.step();
    return loss.item();
}

double eval_psnr(const modnet::Denoiser& model, std::span<const sensorsim::SamplePair* const> pairs,
                 const modnet::MetadataMask& mask) {
    metrics::EvalOptions opts;
    opts.with_ssim = false;
    opts.chunk = 16;
    return metrics::eval_model(model, pairs, metrics::pair_meta(model.config().n_sensors, mask), opts).mean_psnr;
}

void train_on_target(modnet::Denoiser& model, numcore::Optimizer& opt, const sensorsim::DomainDataset& target,
                     std::size_t iterations, std::mt19937_64& rng, const AdlConfig& cfg) {
    if (target.pairs.empty()) throw ContractViolation("target training on an empty dataset");
    for (std::size_t i = 0; i < iterations; ++i) {
        auto idx = draw_indices(target.size(), cfg.target_batch, rng);
        train_step(model, opt, refs(target, idx), cfg.mask);
    }
}

Decision adl_step(AdlState& state, modnet::Denoiser& model, numcore::Optimizer& opt, const PairRefs& source_batch,
                  std::size_t source_domain, const PairRefs& train, const PairRefs& validation, std::size_t k,
                  const AdlConfig& cfg, const AdlHooks& hooks) {
    if (state.queue.empty()) throw ContractViolation("adl_step: the PSNR queue must be seeded before the loop");
    if (source_batch.empty() || validation.empty()) throw ContractViolation("adl_step: empty batch or validation set");
    const int sensor = source_batch.front()->sensor_id;
    for (const auto* p : source_batch) {
        if (p->sensor_id != sensor) throw ContractViolation("adl_step: source batch mixes sensors");
    }
    const std::size_t t = state.t + 1;
    if (hooks.before_step) hooks.before_step(t, opt);

    const auto snapshot = numcore::snapshot_params(opt);
    PairRefs merged(train);
    merged.insert(merged.end(), source_batch.begin(), source_batch.end());
    train_step(model, opt, merged, cfg.mask);

    LogRecord rec;
    rec.t = t;
    rec.source_domain = source_domain;
    rec.source_sensor = sensor;
    rec.k = k;
    rec.eval_psnr = eval_psnr(model, validation, cfg.mask);
    rec.queue_mean = state.queue.mean();
    rec.queue_size = state.queue.size();
    bool accept = rec.eval_psnr > rec.queue_mean;
    if (hooks.decide) {
        if (auto forced = hooks.decide(t, rec.eval_psnr, rec.queue_mean)) accept = *forced;
    }
    if (accept) {
        state.queue.admit(rec.eval_psnr);
        rec.decision = Decision::accepted;
    } else {
        numcore::restore_params(opt, snapshot);
        rec.decision = Decision::rejected;
    }
    state.t = t;
    state.log.push_back(rec);
    if (hooks.after_step) hooks.after_step(rec, opt);
    return rec.decision;
}

TrainResult adl_train(modnet::Denoiser& model, std::span<const sensorsim::DomainDataset> sources,
                      const sensorsim::DomainDataset& target, const AdlConfig& cfg,
                      const std::optional<sensorsim::SensorProfile>& target_profile, const AdlHooks& hooks) {
    cfg.validate();
    check_inputs(sources, target);
    numcore::Optimizer opt(model.parameters(), cfg.optimizer);
    AdlState state(cfg.queue_capacity, cfg.seed);
    TrainResult result;

    if (cfg.pretrain) {
        train_on_target(model, opt, target, cfg.pretrain_iterations, state.rng, cfg);
        result.gradient_steps += cfg.pretrain_iterations;
    }

    const auto gains = effective_gains(target, target_profile);
    const std::size_t k0 = k_schedule(0, cfg.iterations, target.size(), cfg);
    const ValidationSplit initial = cfg.dynamic_val ? sample_validation_split(gains, k0, 0, state.rng, cfg)
                                                    : uniform_split(target.size(), k0, state.rng);
    result.queue_seed = eval_psnr(model, refs(target, initial.validation), cfg.mask);
    state.queue.admit(result.queue_seed);

    std::size_t accepted = 0;
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        std::uniform_int_distribution<std::size_t> pick_domain(0, sources.size() - 1);
        const std::size_t d = pick_domain(state.rng);
        const auto& domain = sources[d];
        auto batch = refs(domain, draw_indices(domain.size(), cfg.batch, state.rng));
        if (cfg.enforce_isolation) check_isolation(batch, target.sensor_id);

        std::size_t k = k0;
        ValidationSplit split = initial;
        if (cfg.dynamic_val) {
            k = k_schedule(t, cfg.iterations, target.size(), cfg);
            split = sample_validation_split(gains, k, t, state.rng, cfg);
        }
        const auto decision = adl_step(state, model, opt, batch, d, refs(target, split.train),
                                       refs(target, split.validation), k, cfg, hooks);
        if (decision == Decision::accepted) ++accepted;
    }
    result.gradient_steps += cfg.iterations;
    result.accept_rate = cfg.iterations ? static_cast<double>(accepted) / static_cast<double>(cfg.iterations) : 0.0;

    train_on_target(model, opt, target, cfg.finetune_iterations, state.rng, cfg);
    result.gradient_steps += cfg.finetune_iterations;
    result.log = std::move(state.log);
    return result;
}

TrainResult pretrain_target(modnet::Denoiser& model, const sensorsim::DomainDataset& target, const AdlConfig& cfg) {
    cfg.validate();
    numcore::Optimizer opt(model.parameters(), cfg.optimizer);
    std::mt19937_64 rng(cfg.seed);
    train_on_target(model, opt, target, cfg.pretrain_iterations, rng, cfg);
    TrainResult r;
    r.gradient_steps = cfg.pretrain_iterations;
    return r;
}

TrainResult finetune_target(modnet::Denoiser& model, const sensorsim::DomainDataset& target, const AdlConfig& cfg) {
    cfg.validate();
    numcore::Optimizer opt(model.parameters(), cfg.optimizer);
    std::mt19937_64 rng(cfg.seed);
    train_on_target(model, opt, target, cfg.finetune_iterations, rng, cfg);
    TrainResult r;
    r.gradient_steps = cfg.finetune_iterations;
    return r;
}

TrainResult baseline_finetune(modnet::Denoiser& model, std::span<const sensorsim::DomainDataset> sources,
                              const sensorsim::DomainDataset& target, const AdlConfig& cfg) {
    cfg.validate();
    check_inputs(sources, target);
    numcore::Optimizer opt(model.parameters(), cfg.optimizer);
    std::mt19937_64 rng(cfg.seed);

    std::vector<const sensorsim::SamplePair*> pool;
    for (const auto& s : sources) {
        for (const auto& p : s.pairs) pool.push_back(&p);
    }
    const std::size_t source_steps = (cfg.pretrain ? cfg.pretrain_iterations : 0) + cfg.iterations;
    for (std::size_t i = 0; i < source_steps; ++i) {
        PairRefs batch;
        for (std::size_t j : draw_indices(pool.size(), cfg.batch, rng)) batch.push_back(pool[j]);
        if (cfg.enforce_isolation) check_isolation(batch, target.sensor_id);
        train_step(model, opt, batch, cfg.mask);
    }
    train_on_target(model, opt, target, cfg.finetune_iterations, rng, cfg);
    TrainResult r;
    r.gradient_steps = source_steps + cfg.finetune_iterations;
    return r;
}

AblationFlags AblationFlags::parse(const std::string& text) {
    AblationFlags f;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty() || item == "none") continue;
        if (item == "no-pretrain") f.no_pretrain = true;
        else if (item == "no-dynamic-val") f.no_dynamic_val = true;
        else if (item == "no-iso-mod") f.no_iso_mod = true;
        else if (item == "no-type-mod") f.no_type_mod = true;
        else if (item == "no-adl") f.no_adl = true;
        else throw ContractViolation("unknown ablation flag '" + item + "'");
    }
    f.validate();
    return f;
}

std::string AblationFlags::to_string() const {
    std::vector<std::string> parts;
    if (no_pretrain) parts.push_back("no-pretrain");
    if (no_dynamic_val) parts.push_back("no-dynamic-val");
    if (no_iso_mod) parts.push_back("no-iso-mod");
    if (no_type_mod) parts.push_back("no-type-mod");
    if (no_adl) parts.push_back("no-adl");
    if (parts.empty()) return "none";
    std::string out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) out += "," + parts[i];
    return out;
}

void AblationFlags::validate() const {
    // Without the adaptive stage there is no target pretraining and no
    // validation split to freeze.
    if (no_adl && (no_pretrain || no_dynamic_val)) {
        throw ContractViolation("ablation flag no-adl cannot be combined with no-pretrain or no-dynamic-val");
    }
}

TrainResult ablation_variant(modnet::Denoiser& model, const AblationFlags& flags,
                             std::span<const sensorsim::DomainDataset> sources,
                             const sensorsim::DomainDataset& target, const AdlConfig& cfg,
                             const std::optional<sensorsim::SensorProfile>& target_profile) {
    flags.validate();
    AdlConfig c = cfg;
    if (flags.no_iso_mod) c.mask.use_iso = false;
    if (flags.no_type_mod) c.mask.use_type = false;
    if (flags.no_adl) return baseline_finetune(model, sources, target, c);
    if (flags.no_pretrain) c.pretrain = false;
    if (flags.no_dynamic_val) c.dynamic_val = false;
    return adl_train(model, sources, target, c, target_profile);
}

std::string_view to_string(Decision d) {
    return d == Decision::accepted ? "accepted" : "rejected";
}

void write_log(const std::filesystem::path& path, std::span<const LogRecord> log) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open log '" + path.string() + "' for writing");
    for (const auto& r : log) {
        nlohmann::ordered_json j;
        j["t"] = r.t;
        j["source_domain"] = r.source_domain;
        j["source_sensor"] = r.source_sensor;
        j["eval_psnr"] = r.eval_psnr;
        j["queue_mean"] = r.queue_mean;
        j["queue_size"] = r.queue_size;
        j["decision"] = std::string(to_string(r.decision));
        j["k"] = r.k;
        f << j.dump() << '\n';
    }
    if (!f) throw std::runtime_error("failed writing log '" + path.string() + "'");
}

std::vector<LogRecord> read_log(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open log '" + path.string() + "'");
    std::vector<LogRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            LogRecord r;
            r.t = j.at("t").get<std::size_t>();
            r.source_domain = j.at("source_domain").get<std::size_t>();
            r.source_sensor = j.at("source_sensor").get<int>();
            r.eval_psnr = j.at("eval_psnr").get<double>();
            r.queue_mean = j.at("queue_mean").get<double>();
            r.queue_size = j.at("queue_size").get<std::size_t>();
            const auto d = j.at("decision").get<std::string>();
            if (d != "accepted" && d != "rejected") throw std::runtime_error("bad decision '" + d + "'");
            r.decision = d == "accepted" ? Decision::accepted : Decision::rejected;
            r.k = j.at("k").get<std::size_t>();
            out.push_back(r);
        } catch (const std::exception& e) {
            throw std::runtime_error("log '" + path.string() + "' line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace adlraw::adl
