#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tpidm/common.hpp"
#include "tpidm/config.hpp"
#include "tpidm/pipeline.hpp"

namespace {

struct Args {
    std::string config, out = ".", checkpoint, data;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int n = 16;
};

void add_common(CLI::App* cmd, Args& a, bool needs_config, bool needs_checkpoint) {
    auto* cfg = cmd->add_option("--config", a.config, "experiment config file");
    if (needs_config) cfg->required();
    cmd->add_option("--out", a.out, "output directory");
    auto* ck = cmd->add_option("--checkpoint", a.checkpoint, "checkpoint file");
    if (needs_checkpoint) ck->required();
    cmd->add_option("--data", a.data, "dataset CSV (otherwise generated from config)");
    cmd->add_option("--seed", a.seed, "seed override")->each([&a](const std::string&) {
        a.seed_set = true;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-informed diffusion anomaly detection for multivariate time series"};
    app.require_subcommand(1);

    Args a;
    auto* gen = app.add_subcommand("gen-data", "generate a labeled synthetic dataset");
    add_common(gen, a, true, false);
    auto* train = app.add_subcommand("train", "train a denoising model");
    add_common(train, a, true, false);
    auto* detect = app.add_subcommand("detect", "score windows and evaluate detection");
    add_common(detect, a, false, true);
    auto* sample = app.add_subcommand("sample", "ancestral-sample windows from a checkpoint");
    add_common(sample, a, false, true);
    sample->add_option("-n", a.n, "number of windows");
    auto* pca = app.add_subcommand("pca", "project reference and generated windows onto 2 PCs");
    add_common(pca, a, false, true);
    pca->add_option("-n", a.n, "generated windows when sampling from the checkpoint");
    auto* bench = app.add_subcommand("bench", "time scoring of n windows");
    add_common(bench, a, false, true);
    bench->add_option("-n", a.n, "number of windows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            tpidm::ExperimentConfig cfg = tpidm::load_config(a.config);
            if (a.seed_set) cfg.data_seed = a.seed;
            return tpidm::cmd_gen_data(cfg, a.out);
        }
        if (train->parsed()) {
            tpidm::ExperimentConfig cfg = tpidm::load_config(a.config);
            if (a.seed_set) cfg.train_seed = a.seed;
            return tpidm::cmd_train(cfg, a.data, a.out);
        }
        if (detect->parsed()) {
            tpidm::ExperimentConfig cfg;
            const bool have_cfg = !a.config.empty();
            if (have_cfg) cfg = tpidm::load_config(a.config);
            return tpidm::cmd_detect(a.checkpoint, a.data, have_cfg ? &cfg : nullptr, a.out,
                                     a.seed_set ? &a.seed : nullptr);
        }
        if (sample->parsed())
            return tpidm::cmd_sample(a.checkpoint, a.n, a.seed_set ? a.seed : 1234, a.out);
        if (pca->parsed())
            return tpidm::cmd_pca(a.checkpoint, a.data, a.n, a.seed_set ? a.seed : 1234, a.out);
        if (bench->parsed()) return tpidm::cmd_bench(a.checkpoint, a.n, a.out);
    } catch (const tpidm::contract_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const tpidm::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
