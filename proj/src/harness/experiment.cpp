#include "adlraw/harness/experiment.hpp"

#include "adlraw/harness/toml.hpp"
#include "adlraw/metrics/eval.hpp"
#include "adlraw/modnet/checkpoint.hpp"
#include "adlraw/sensorsim/dataset_io.hpp"
#include "adlraw/sensorsim/scene.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace adlraw::harness {

namespace {

using nlohmann::json;

// Pulls typed keys out of one TOML table and complains about leftovers.
class Section {
public:
    Section(const json& root, const std::string& name) : name_(name) {
        if (root.contains(name)) {
            if (!root.at(name).is_object()) throw ConfigError("[" + name + "] must be a table");
            table_ = root.at(name);
        }
    }

    template <typename V>
    void get(const std::string& key, V& out) {
        if (!table_.contains(key)) return;
        try {
            out = table_.at(key).get<V>();
        } catch (const json::exception&) {
            throw ConfigError("[" + name_ + "] " + key + ": wrong value type");
        }
        table_.erase(key);
    }

    void finish() const {
        if (!table_.empty()) throw ConfigError("[" + name_ + "] unknown key '" + table_.begin().key() + "'");
    }

private:
    std::string name_;
    json table_ = json::object();
};

std::string format4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::uint64_t cell_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return sensorsim::mix_seed(sensorsim::mix_seed(a, b), c);
}

} // namespace

void ExperimentConfig::validate() const {
    adl.validate();
    model.validate();
    if (fleet.patch == 0 || fleet.patch % 8 != 0) {
        throw ConfigError("[fleet] patch must be a positive multiple of 8, got " + std::to_string(fleet.patch));
    }
    if (fleet.pool_size < 2 || fleet.test_size < 1) throw ConfigError("[fleet] pool_size >= 2 and test_size >= 1");
    if (run.seeds.empty()) throw ConfigError("[run] seeds must not be empty");
    if (run.targets.empty()) throw ConfigError("[run] targets must not be empty");
    if (fleet.data_dir.empty()) {
        const auto n = static_cast<int>(sensorsim::fleet_preset(fleet.preset).profiles.size());
        for (int t : run.targets) {
            if (t < 0 || t >= n) {
                throw ConfigError("[run] target " + std::to_string(t) + " is not a sensor of fleet '" + fleet.preset +
                                  "'");
            }
        }
    }
    if (run.tadp_size < 2) throw ConfigError("[run] tadp_size must be at least 2");
    for (std::size_t s : run.sizes) {
        if (s < 2) throw ConfigError("[run] sizes must all be at least 2");
    }
    if (run.harmful_sigma <= 0.0) throw ConfigError("[run] harmful_sigma must be positive");
}

ExperimentConfig config_from_json(const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "fleet" && it.key() != "adl" && it.key() != "run") {
            throw ConfigError("unknown config section [" + it.key() + "]");
        }
    }
    ExperimentConfig cfg;
    {
        Section s(j, "fleet");
        s.get("preset", cfg.fleet.preset);
        s.get("data_dir", cfg.fleet.data_dir);
        s.get("patch", cfg.fleet.patch);
        s.get("pool_size", cfg.fleet.pool_size);
        s.get("test_size", cfg.fleet.test_size);
        s.get("isos", cfg.fleet.isos);
        s.get("data_seed", cfg.fleet.data_seed);
        s.finish();
    }
    {
        Section s(j, "adl");
        auto& a = cfg.adl;
        s.get("iterations", a.iterations);
        s.get("queue_capacity", a.queue_capacity);
        s.get("batch", a.batch);
        s.get("target_batch", a.target_batch);
        s.get("k_start", a.k_start);
        s.get("k_end", a.k_end);
        s.get("diverse_threshold", a.diverse_threshold);
        s.get("pretrain_iterations", a.pretrain_iterations);
        s.get("finetune_iterations", a.finetune_iterations);
        s.get("pretrain", a.pretrain);
        s.get("dynamic_val", a.dynamic_val);
        s.get("lr", a.optimizer.lr);
        s.get("beta1", a.optimizer.beta1);
        s.get("beta2", a.optimizer.beta2);
        s.get("eps", a.optimizer.eps);
        s.get("weight_decay", a.optimizer.weight_decay);
        std::string rule = "adamw";
        s.get("update_rule", rule);
        if (rule == "adamw") a.optimizer.rule = numcore::UpdateRule::adamw;
        else if (rule == "sgd") a.optimizer.rule = numcore::UpdateRule::sgd;
        else throw ConfigError("[adl] update_rule must be \"adamw\" or \"sgd\"");
        std::vector<std::size_t> widths(cfg.model.widths.begin(), cfg.model.widths.end());
        s.get("widths", widths);
        if (widths.size() != modnet::kStages) throw ConfigError("[adl] widths needs exactly 3 entries");
        std::copy(widths.begin(), widths.end(), cfg.model.widths.begin());
        s.get("modulation", cfg.model.modulation);
        s.finish();
    }
    {
        Section s(j, "run");
        auto& r = cfg.run;
        s.get("targets", r.targets);
        s.get("methods", r.methods);
        s.get("seeds", r.seeds);
        s.get("tadp_size", r.tadp_size);
        s.get("sizes", r.sizes);
        s.get("ablations", r.ablations);
        s.get("harmful_sigma", r.harmful_sigma);
        std::string mode = "shuffled-gt";
        s.get("harmful2_mode", mode);
        if (mode == "shuffled-gt") r.harmful2_mode = sensorsim::HarmfulMode::shuffled_gt;
        else if (mode == "black-gt") r.harmful2_mode = sensorsim::HarmfulMode::black_gt;
        else throw ConfigError("[run] harmful2_mode must be \"shuffled-gt\" or \"black-gt\"");
        std::string out = r.out.string();
        s.get("out", out);
        r.out = out;
        s.get("record_wall_clock", r.record_wall_clock);
        s.get("save_artifacts", r.save_artifacts);
        s.finish();
    }
    for (const auto& m : cfg.run.methods) {
        if (m != "adl" && m != "finetune" && m.rfind("ablation:", 0) != 0) {
            throw ConfigError("[run] unknown method '" + m + "'");
        }
        if (m.rfind("ablation:", 0) == 0) adl::AblationFlags::parse(m.substr(9));
    }
    for (const auto& a : cfg.run.ablations) adl::AblationFlags::parse(a);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    try {
        return config_from_json(load_toml(path));
    } catch (const ContractViolation& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.rfind(path.string(), 0) == 0) throw;
        throw ConfigError(path.string() + ": " + what);
    }
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["fleet"] = {{"preset", cfg.fleet.preset},       {"data_dir", cfg.fleet.data_dir},
                  {"patch", cfg.fleet.patch},         {"pool_size", cfg.fleet.pool_size},
                  {"test_size", cfg.fleet.test_size}, {"isos", cfg.fleet.isos},
                  {"data_seed", cfg.fleet.data_seed}};
    const auto& a = cfg.adl;
    j["adl"] = {{"iterations", a.iterations},
                {"queue_capacity", a.queue_capacity},
                {"batch", a.batch},
                {"target_batch", a.target_batch},
                {"k_start", a.k_start},
                {"k_end", a.k_end},
                {"diverse_threshold", a.diverse_threshold},
                {"pretrain_iterations", a.pretrain_iterations},
                {"finetune_iterations", a.finetune_iterations},
                {"pretrain", a.pretrain},
                {"dynamic_val", a.dynamic_val},
                {"lr", a.optimizer.lr},
                {"beta1", a.optimizer.beta1},
                {"beta2", a.optimizer.beta2},
                {"eps", a.optimizer.eps},
                {"weight_decay", a.optimizer.weight_decay},
                {"update_rule", a.optimizer.rule == numcore::UpdateRule::adamw ? "adamw" : "sgd"},
                {"widths", std::vector<std::size_t>(cfg.model.widths.begin(), cfg.model.widths.end())},
                {"modulation", cfg.model.modulation}};
    const auto& r = cfg.run;
    j["run"] = {{"targets", r.targets},
                {"methods", r.methods},
                {"seeds", r.seeds},
                {"tadp_size", r.tadp_size},
                {"sizes", r.sizes},
                {"ablations", r.ablations},
                {"harmful_sigma", r.harmful_sigma},
                {"harmful2_mode", r.harmful2_mode == sensorsim::HarmfulMode::shuffled_gt ? "shuffled-gt" : "black-gt"},
                {"out", r.out.string()},
                {"record_wall_clock", r.record_wall_clock},
                {"save_artifacts", r.save_artifacts}};
    return j;
}

FleetData build_fleet_data(const FleetConfig& cfg) {
    FleetData data{sensorsim::fleet_preset(cfg.preset), {}, {}};
    for (const auto& profile : data.fleet.profiles) {
        sensorsim::DomainSpec spec;
        spec.patch = cfg.patch;
        spec.isos = cfg.isos;
        spec.light_factors = data.fleet.light_factors;
        spec.count = cfg.pool_size;
        spec.split = sensorsim::Split::source;
        data.pools.push_back(sensorsim::build_domain(profile, spec, cfg.data_seed));
        spec.count = cfg.test_size;
        spec.split = sensorsim::Split::test;
        data.tests.push_back(sensorsim::build_domain(profile, spec, sensorsim::mix_seed(cfg.data_seed, 0x7e57)));

        std::set<std::uint64_t> seen;
        for (const auto& p : data.pools.back().pairs) seen.insert(p.scene_seed);
        for (const auto& p : data.tests.back().pairs) {
            if (seen.count(p.scene_seed)) throw std::runtime_error("test scene seed collides with the adaptation pool");
        }
    }
    return data;
}

void write_fleet_data(const FleetData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "test");
    json fleet;
    fleet["name"] = data.fleet.name;
    fleet["light_factors"] = data.fleet.light_factors;
    fleet["sensors"] = json::array();
    for (std::size_t i = 0; i < data.fleet.profiles.size(); ++i) {
        const auto& profile = data.fleet.profiles[i];
        const std::string file = "sensor_" + std::to_string(profile.sensor_id) + ".adlraw";
        sensorsim::write_dataset(dir / file, data.pools[i], profile);
        sensorsim::write_dataset(dir / "test" / file, data.tests[i], profile);
        fleet["sensors"].push_back({{"file", file}, {"profile", sensorsim::profile_to_json(profile)}});
    }
    std::ofstream f(dir / "fleet.json", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + (dir / "fleet.json").string() + "'");
    f << fleet.dump(2) << '\n';
}

FleetData read_fleet_data(const std::filesystem::path& dir) {
    std::ifstream f(dir / "fleet.json");
    if (!f) throw std::runtime_error("cannot open '" + (dir / "fleet.json").string() + "'");
    json fleet;
    try {
        fleet = json::parse(f);
    } catch (const json::exception& e) {
        throw std::runtime_error("'" + (dir / "fleet.json").string() + "': " + e.what());
    }
    FleetData data;
    data.fleet.name = fleet.value("name", std::string("custom"));
    data.fleet.light_factors = fleet.value("light_factors", std::vector<double>{1.0});
    for (const auto& s : fleet.at("sensors")) {
        const auto file = s.at("file").get<std::string>();
        data.fleet.profiles.push_back(sensorsim::profile_from_json(s.at("profile")));
        data.pools.push_back(sensorsim::read_dataset(dir / file).dataset);
        data.tests.push_back(sensorsim::read_dataset(dir / "test" / file).dataset);
    }
    for (std::size_t i = 0; i < data.fleet.profiles.size(); ++i) {
        if (data.fleet.profiles[i].sensor_id != static_cast<int>(i)) {
            throw std::runtime_error("fleet.json sensors must be listed in id order 0..n-1");
        }
    }
    return data;
}

FleetData load_fleet_data(const FleetConfig& cfg) {
    return cfg.data_dir.empty() ? build_fleet_data(cfg) : read_fleet_data(cfg.data_dir);
}

std::string_view to_string(SourceMix mix) {
    switch (mix) {
    case SourceMix::clean: return "base";
    case SourceMix::harmful1: return "harmful1";
    case SourceMix::harmful2: return "harmful2";
    }
    return "?";
}

CellData make_cell(const FleetData& data, const ExperimentConfig& cfg, int target, std::size_t size,
                   std::uint64_t seed, SourceMix mix) {
    const auto n = static_cast<int>(data.fleet.profiles.size());
    if (n < 2) throw ContractViolation("cross-domain training needs at least 2 sensors");
    if (target < 0 || target >= n) throw ContractViolation("target sensor " + std::to_string(target) + " not in fleet");
    const auto& pool = data.pools[static_cast<std::size_t>(target)];
    if (size < 2 || size > pool.size()) {
        throw ContractViolation("target set size " + std::to_string(size) + " outside [2, " +
                                std::to_string(pool.size()) + "]");
    }
    CellData cell;
    cell.target_profile = data.fleet.profiles[static_cast<std::size_t>(target)];
    cell.test = &data.tests[static_cast<std::size_t>(target)];
    cell.n_sensors = data.fleet.profiles.size();

    std::mt19937_64 rng(cell_seed(cfg.fleet.data_seed, seed, static_cast<std::uint64_t>(target)));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    cell.target.sensor_id = target;
    cell.target.split = sensorsim::Split::adaptation;
    for (std::size_t i = 0; i < size; ++i) cell.target.pairs.push_back(pool.pairs[idx[i]]);

    for (int s = 0; s < n; ++s) {
        if (s == target) continue;
        const auto& src = data.pools[static_cast<std::size_t>(s)];
        cell.sources.push_back(src);
        const std::uint64_t hseed = cell_seed(cfg.fleet.data_seed, 0x4a12, static_cast<std::uint64_t>(s));
        if (mix == SourceMix::harmful1) cell.sources.push_back(sensorsim::make_harmful1(src, cfg.run.harmful_sigma, hseed));
        if (mix == SourceMix::harmful2) cell.sources.push_back(sensorsim::make_harmful2(src, cfg.run.harmful2_mode, hseed));
    }
    return cell;
}

CellOutput run_cell(const ExperimentConfig& cfg, const CellData& cell, const std::string& method, int target,
                    std::uint64_t seed, const std::string& label) {
    modnet::DenoiserConfig mc = cfg.model;
    mc.n_sensors = cell.n_sensors;
    CellOutput out{ResultRecord{}, adl::TrainResult{}, modnet::Denoiser(mc, seed)};
    adl::AdlConfig ac = cfg.adl;
    ac.seed = sensorsim::mix_seed(seed, 0x5eed);

    modnet::MetadataMask mask = ac.mask;
    const auto start = std::chrono::steady_clock::now();
    if (method == "adl") {
        out.train = adl::adl_train(out.model, cell.sources, cell.target, ac, cell.target_profile);
    } else if (method == "finetune") {
        out.train = adl::baseline_finetune(out.model, cell.sources, cell.target, ac);
    } else if (method == "pretrain") {
        out.train = adl::pretrain_target(out.model, cell.target, ac);
    } else if (method.rfind("ablation:", 0) == 0) {
        const auto flags = adl::AblationFlags::parse(method.substr(9));
        if (flags.no_iso_mod) mask.use_iso = false;
        if (flags.no_type_mod) mask.use_type = false;
        out.train = adl::ablation_variant(out.model, flags, cell.sources, cell.target, ac, cell.target_profile);
    } else {
        throw ContractViolation("unknown method '" + method + "'");
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto report = metrics::eval_model(out.model, *cell.test, metrics::pair_meta(mc.n_sensors, mask));
    auto& r = out.record;
    r.method = label.empty() ? method : label;
    r.target = target;
    r.seed = seed;
    r.tadp_size = cell.target.size();
    r.psnr_db = report.mean_psnr;
    r.ssim = report.mean_ssim;
    r.accept_rate = out.train.accept_rate;
    r.wall_s = cfg.run.record_wall_clock ? wall : 0.0;
    return out;
}

void save_cell_artifacts(const CellOutput& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string stem = out.record.method;
    std::replace_if(stem.begin(), stem.end(), [](char c) { return c == ':' || c == ',' || c == '+' || c == '/'; }, '_');
    stem += "_t" + std::to_string(out.record.target) + "_s" + std::to_string(out.record.seed) + "_n" +
            std::to_string(out.record.tadp_size);
    modnet::save_checkpoint(dir / ("model_" + stem + ".bin"), out.model);
    if (!out.train.log.empty()) adl::write_log(dir / ("log_" + stem + ".jsonl"), out.train.log);
}

namespace {

std::vector<ResultRecord> run_grid(const ExperimentConfig& cfg, const FleetData& data,
                                   const std::vector<std::string>& methods, std::size_t size, SourceMix mix,
                                   const std::string& suffix) {
    std::vector<ResultRecord> records;
    for (int target : cfg.run.targets) {
        for (std::uint64_t seed : cfg.run.seeds) {
            const auto cell = make_cell(data, cfg, target, size, seed, mix);
            for (const auto& method : methods) {
                auto out = run_cell(cfg, cell, method, target, seed, method + suffix);
                if (cfg.run.save_artifacts) save_cell_artifacts(out, cfg.run.out / "artifacts");
                records.push_back(out.record);
            }
        }
    }
    return records;
}

} // namespace

std::vector<ResultRecord> run_methods(const ExperimentConfig& cfg, const FleetData& data,
                                      const std::vector<std::string>& methods) {
    return run_grid(cfg, data, methods, cfg.run.tadp_size, SourceMix::clean, "");
}

std::vector<ResultRecord> run_cross_validation(const ExperimentConfig& cfg, const FleetData& data) {
    if (data.fleet.profiles.size() < 2) throw ContractViolation("cross-validation needs at least 2 sensors");
    return run_methods(cfg, data, cfg.run.methods);
}

std::vector<ResultRecord> run_ablations(const ExperimentConfig& cfg, const FleetData& data) {
    std::vector<std::string> methods{"adl"};
    for (const auto& a : cfg.run.ablations) methods.push_back("ablation:" + a);
    return run_methods(cfg, data, methods);
}

std::vector<ResultRecord> run_harmful(const ExperimentConfig& cfg, const FleetData& data) {
    std::vector<ResultRecord> records;
    for (SourceMix mix : {SourceMix::clean, SourceMix::harmful1, SourceMix::harmful2}) {
        auto part = run_grid(cfg, data, {"finetune", "adl"}, cfg.run.tadp_size, mix, "+" + std::string(to_string(mix)));
        records.insert(records.end(), part.begin(), part.end());
    }
    return records;
}

std::vector<ResultRecord> run_size_sweep(const ExperimentConfig& cfg, const FleetData& data) {
    if (cfg.run.sizes.empty()) throw ContractViolation("size sweep needs at least one size");
    std::vector<ResultRecord> records;
    for (std::size_t size : cfg.run.sizes) {
        if (size < 2) throw ContractViolation("size sweep entries must be at least 2");
        auto part = run_grid(cfg, data, {"adl", "ablation:no-dynamic-val", "finetune"}, size, SourceMix::clean, "");
        records.insert(records.end(), part.begin(), part.end());
    }
    return records;
}

void emit_results(std::vector<ResultRecord> records, const std::filesystem::path& dir) {
    if (records.empty()) throw ContractViolation("emit_results: no records");
    std::stable_sort(records.begin(), records.end(), [](const ResultRecord& a, const ResultRecord& b) {
        return std::tie(a.method, a.target, a.seed, a.tadp_size) < std::tie(b.method, b.target, b.seed, b.tadp_size);
    });
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto csv_path = dir / "results.csv";
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write '" + csv_path.string() + "'");
    csv << "method,target,seed,tadp_size,psnr_db,ssim,accept_rate,wall_s\n";
    json arr = json::array();
    for (const auto& r : records) {
        const std::string psnr = format4(r.psnr_db), ssim = format4(r.ssim), acc = format4(r.accept_rate),
                          wall = format4(r.wall_s);
        csv << r.method << ',' << r.target << ',' << r.seed << ',' << r.tadp_size << ',' << psnr << ',' << ssim << ','
            << acc << ',' << wall << '\n';
        json o = json::object();
        o["method"] = r.method;
        o["target"] = r.target;
        o["seed"] = r.seed;
        o["tadp_size"] = r.tadp_size;
        o["psnr_db"] = std::stod(psnr);
        o["ssim"] = std::stod(ssim);
        o["accept_rate"] = std::stod(acc);
        o["wall_s"] = std::stod(wall);
        arr.push_back(o);
    }
    if (!csv) throw std::runtime_error("failed writing '" + csv_path.string() + "'");
    const auto json_path = dir / "results.json";
    std::ofstream js(json_path, std::ios::trunc);
    if (!js) throw std::runtime_error("cannot write '" + json_path.string() + "'");
    js << arr.dump(2) << '\n';
}

std::vector<ResultRecord> read_results_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(f, line);
    if (line != "method,target,seed,tadp_size,psnr_db,ssim,accept_rate,wall_s") {
        throw std::runtime_error("'" + path.string() + "' has an unexpected header");
    }
    std::vector<ResultRecord> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<std::string> cols;
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
        if (cols.size() != 8) throw std::runtime_error("'" + path.string() + "': malformed row '" + line + "'");
        ResultRecord r;
        r.method = cols[0];
        r.target = std::stoi(cols[1]);
        r.seed = std::stoull(cols[2]);
        r.tadp_size = std::stoul(cols[3]);
        r.psnr_db = std::stod(cols[4]);
        r.ssim = std::stod(cols[5]);
        r.accept_rate = std::stod(cols[6]);
        r.wall_s = std::stod(cols[7]);
        out.push_back(r);
    }
    return out;
}

std::vector<ResultRecord> read_results_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
    const auto arr = json::parse(f);
    std::vector<ResultRecord> out;
    for (const auto& o : arr) {
        ResultRecord r;
        r.method = o.at("method").get<std::string>();
        r.target = o.at("target").get<int>();
        r.seed = o.at("seed").get<std::uint64_t>();
        r.tadp_size = o.at("tadp_size").get<std::size_t>();
        r.psnr_db = o.at("psnr_db").get<double>();
        r.ssim = o.at("ssim").get<double>();
        r.accept_rate = o.at("accept_rate").get<double>();
        r.wall_s = o.at("wall_s").get<double>();
        out.push_back(r);
    }
    return out;
}

double median_psnr(const std::vector<ResultRecord>& records, const std::string& method, int target,
                   std::size_t tadp_size) {
    std::vector<double> v;
    for (const auto& r : records) {
        if (r.method != method) continue;
        if (target >= 0 && r.target != target) continue;
        if (tadp_size != 0 && r.tadp_size != tadp_size) continue;
        v.push_back(r.psnr_db);
    }
    if (v.empty()) throw ContractViolation("median_psnr: no records for method '" + method + "'");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace adlraw::harness
