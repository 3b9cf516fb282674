// Command-line front end: data simulation, training pipelines, evaluation
// and plotting.

#include "adlraw/harness/experiment.hpp"
#include "adlraw/harness/plot.hpp"
#include "adlraw/harness/toml.hpp"
#include "adlraw/metrics/eval.hpp"
#include "adlraw/modnet/checkpoint.hpp"
#include "adlraw/sensorsim/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace adlraw;

namespace {

struct RunOverrides {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::vector<int> targets;
    std::vector<std::string> flags;
};

void add_run_options(CLI::App* cmd, RunOverrides& o) {
    cmd->add_option("--config", o.config, "experiment TOML file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory (overrides [run] out)");
    cmd->add_option("--seeds", o.seeds, "seeds (override [run] seeds)");
    cmd->add_option("--targets", o.targets, "target sensor ids (override [run] targets)");
}

harness::ExperimentConfig resolve(const RunOverrides& o) {
    auto cfg = harness::load_config(o.config);
    if (!o.out.empty()) cfg.run.out = o.out;
    if (!o.seeds.empty()) cfg.run.seeds = o.seeds;
    if (!o.targets.empty()) cfg.run.targets = o.targets;
    if (!o.flags.empty()) cfg.run.ablations = o.flags;
    for (const auto& a : cfg.run.ablations) adl::AblationFlags::parse(a);
    cfg.validate();
    return cfg;
}

void write_resolved_config(const harness::ExperimentConfig& cfg) {
    fs::create_directories(cfg.run.out);
    std::ofstream f(cfg.run.out / "config.json", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + (cfg.run.out / "config.json").string() + "'");
    f << harness::config_to_json(cfg).dump(2) << '\n';
}

void print_summary(const std::vector<harness::ResultRecord>& records) {
    std::map<std::pair<std::string, std::size_t>, std::vector<harness::ResultRecord>> groups;
    for (const auto& r : records) groups[{r.method, r.tadp_size}].push_back(r);
    std::printf("%-36s %6s %6s %12s %9s\n", "method", "size", "runs", "median_psnr", "accept");
    for (const auto& [key, rs] : groups) {
        double acc = 0.0;
        for (const auto& r : rs) acc += r.accept_rate;
        std::printf("%-36s %6zu %6zu %12.4f %9.4f\n", key.first.c_str(), key.second, rs.size(),
                    harness::median_psnr(records, key.first, -1, key.second), acc / static_cast<double>(rs.size()));
    }
}

int finish(const harness::ExperimentConfig& cfg, const std::vector<harness::ResultRecord>& records) {
    harness::emit_results(records, cfg.run.out);
    print_summary(records);
    std::printf("results written to %s\n", (cfg.run.out / "results.csv").string().c_str());
    return 0;
}

int run_single_method(const RunOverrides& o, const std::string& method) {
    auto cfg = resolve(o);
    write_resolved_config(cfg);
    const auto data = harness::load_fleet_data(cfg.fleet);
    std::vector<harness::ResultRecord> records;
    for (int target : cfg.run.targets) {
        for (std::uint64_t seed : cfg.run.seeds) {
            const auto cell = harness::make_cell(data, cfg, target, cfg.run.tadp_size, seed);
            auto out = harness::run_cell(cfg, cell, method, target, seed);
            harness::save_cell_artifacts(out, cfg.run.out);
            std::fprintf(stderr, "%s target %d seed %llu: %.4f dB\n", method.c_str(), target,
                         static_cast<unsigned long long>(seed), out.record.psnr_db);
            records.push_back(out.record);
        }
    }
    return finish(cfg, records);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive domain learning for cross-sensor RAW denoising"};
    app.require_subcommand(1);

    std::string fleet = "default5";
    std::string sim_out;
    std::uint64_t sim_seed = 7;
    std::size_t sim_patch = 32, sim_count = 64, sim_test = 32;
    std::vector<int> sim_isos;
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic sensor fleet");
    simulate->add_option("--fleet", fleet, "fleet preset (default5, lowlight4)");
    simulate->add_option("--seed", sim_seed, "data seed");
    simulate->add_option("--out", sim_out, "output directory")->required();
    simulate->add_option("--patch", sim_patch, "packed patch side");
    simulate->add_option("--count", sim_count, "pairs per sensor");
    simulate->add_option("--test-count", sim_test, "held-out test pairs per sensor");
    simulate->add_option("--isos", sim_isos, "restrict ISO values");

    RunOverrides pre_o, adl_o, ft_o, abl_o, harm_o, sweep_o;
    auto* pretrain = app.add_subcommand("pretrain", "target-only pretraining");
    add_run_options(pretrain, pre_o);
    auto* adl_train = app.add_subcommand("adl-train", "full adaptive domain learning pipeline");
    add_run_options(adl_train, adl_o);
    auto* finetune = app.add_subcommand("finetune", "source training followed by target fine-tuning");
    add_run_options(finetune, ft_o);
    auto* ablate = app.add_subcommand("ablate", "full ADL against single-mechanism ablations");
    add_run_options(ablate, abl_o);
    ablate->add_option("--flags", abl_o.flags, "ablations to run (override [run] ablations)");
    auto* harmful = app.add_subcommand("harmful", "clean vs harmful source domains");
    add_run_options(harmful, harm_o);
    auto* sweep = app.add_subcommand("sweep-size", "PSNR against target set size");
    add_run_options(sweep, sweep_o);

    std::string model_path, data_path;
    bool no_type = false, no_iso = false;
    auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset file");
    evaluate->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);
    evaluate->add_flag("--no-type-mod", no_type, "zero the sensor one-hot");
    evaluate->add_flag("--no-iso-mod", no_iso, "zero the ISO half of the metadata");

    std::string results_path, plot_out;
    auto* plot = app.add_subcommand("plot", "render a size-sweep results file as SVG");
    plot->add_option("--results", results_path, "results.csv")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*simulate) {
            harness::FleetConfig fc;
            fc.preset = fleet;
            fc.data_seed = sim_seed;
            fc.patch = sim_patch;
            fc.pool_size = sim_count;
            fc.test_size = sim_test;
            fc.isos = sim_isos;
            if (sim_patch == 0 || sim_patch % 8 != 0) throw harness::ConfigError("--patch must be a multiple of 8");
            const auto data = harness::build_fleet_data(fc);
            harness::write_fleet_data(data, sim_out);
            std::printf("wrote %zu sensor datasets to %s\n", data.pools.size(), sim_out.c_str());
            return 0;
        }
        if (*pretrain) return run_single_method(pre_o, "pretrain");
        if (*adl_train) return run_single_method(adl_o, "adl");
        if (*finetune) return run_single_method(ft_o, "finetune");
        if (*ablate) {
            auto cfg = resolve(abl_o);
            write_resolved_config(cfg);
            return finish(cfg, harness::run_ablations(cfg, harness::load_fleet_data(cfg.fleet)));
        }
        if (*harmful) {
            auto cfg = resolve(harm_o);
            write_resolved_config(cfg);
            return finish(cfg, harness::run_harmful(cfg, harness::load_fleet_data(cfg.fleet)));
        }
        if (*sweep) {
            auto cfg = resolve(sweep_o);
            write_resolved_config(cfg);
            const auto records = harness::run_size_sweep(cfg, harness::load_fleet_data(cfg.fleet));
            harness::write_size_sweep_svg(records, cfg.run.out / "size_sweep.svg");
            return finish(cfg, records);
        }
        if (*evaluate) {
            const auto model = modnet::load_checkpoint(model_path);
            const auto file = sensorsim::read_dataset(data_path);
            const modnet::MetadataMask mask{!no_type, !no_iso};
            const auto report =
                metrics::eval_model(model, file.dataset, metrics::pair_meta(model.config().n_sensors, mask));
            std::printf("count %zu\nmean_psnr %.4f\nmean_ssim %.4f\n", report.count, report.mean_psnr,
                        report.mean_ssim);
            return 0;
        }
        if (*plot) {
            harness::write_size_sweep_svg(harness::read_results_csv(results_path), plot_out);
            std::printf("wrote %s\n", plot_out.c_str());
            return 0;
        }
    } catch (const harness::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ContractViolation& e) {
        std::cerr << "invalid arguments: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
