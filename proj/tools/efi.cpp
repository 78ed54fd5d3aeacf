#include "efi/pipeline/stages.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <string>

namespace {

using Stage = std::function<void(const efi::pipeline::RunConfig&)>;

const std::map<std::string, std::pair<Stage, std::string>>& stages() {
    using namespace efi::pipeline;
    static const std::map<std::string, std::pair<Stage, std::string>> table = {
        {"simulate", {run_simulate, "Generate a synthetic scene (plots, LiDAR, bands)"}},
        {"segment", {run_segment, "Build terrain/canopy grids, analysis cells and reporting units"}},
        {"features", {run_features, "Compute per-cell LiDAR and band features"}},
        {"compile-plots", {run_compile_plots, "Compile plot-level attributes from tree tables"}},
        {"train", {run_train, "Fit one elastic-net model per attribute with cross-validation"}},
        {"predict", {run_predict, "Predict attributes per cell and aggregate to reporting units"}},
        {"habitat", {run_habitat, "Classify owl and fisher habitat and summarise acreage"}},
        {"run", {run_all, "Run every stage after simulate"}},
        {"report", {run_report, "Write a markdown summary of metrics and acreage"}},
    };
    return table;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Enhanced forest inventory pipeline"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    app.add_option("--config", config_path, "Run configuration (key = value lines)");
    app.add_option("--seed", seed, "Override the configured seed")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out_dir, "Override the output directory");
    for (const auto& [name, entry] : stages())
        app.add_subcommand(name, entry.second);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        efi::pipeline::RunConfig cfg;
        if (!config_path.empty())
            cfg = efi::pipeline::load_config(config_path);
        if (seed >= 0)
            cfg.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty())
            cfg.output_dir = out_dir;
        cfg.validate();
        const auto* sub = app.get_subcommands().front();
        stages().at(sub->get_name()).first(cfg);
    } catch (const efi::UsageError& e) {
        std::cerr << "efi: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "efi: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
