// inrush-relay: dataset generation, segmenter training and evaluation, relay
// simulation and report plots for inrush-immune differential protection.
//
// Exit codes: 0 success, 2 validation error, 1 runtime failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "inrush/harness.hpp"

namespace {

using inrush::RunConfig;

/// Flag values; unset optionals leave the file/default value alone.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> data, model, baseline_model, logs, train_dir, eval_dir;
    std::optional<int> epochs, patience, windows_per_scenario;
    std::optional<double> subsample, snr_db;
    bool no_attention = false;
    bool truth = false;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "JSON configuration file");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg;
    if (!o.config.empty()) cfg = inrush::load_config_file(o.config, cfg);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out = *o.out;
    if (o.data) cfg.paths.data = *o.data;
    if (o.model) cfg.paths.model = *o.model;
    if (o.baseline_model) cfg.paths.baseline_model = *o.baseline_model;
    if (o.logs) cfg.paths.logs = *o.logs;
    if (o.train_dir) cfg.paths.train_dir = *o.train_dir;
    if (o.eval_dir) cfg.paths.eval_dir = *o.eval_dir;
    if (o.epochs) cfg.train.max_epochs = *o.epochs;
    if (o.patience) cfg.train.patience = *o.patience;
    if (o.windows_per_scenario) cfg.grid.windows_per_scenario = *o.windows_per_scenario;
    if (o.subsample) cfg.grid.subsample = *o.subsample;
    if (o.snr_db) cfg.case_snr_db = *o.snr_db;
    if (o.no_attention) cfg.attention = false;
    if (o.truth) cfg.segmenter = "truth";
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inrush-immune transformer differential protection toolkit"};
    app.set_version_flag("--version", std::string(inrush::kVersion));
    app.require_subcommand(1);
    Overrides o;

    auto* gen = app.add_subcommand("gen-data", "synthesize the labeled window dataset");
    add_common(gen, o);
    gen->add_option("--windows-per-scenario", o.windows_per_scenario, "windows drawn per scenario");
    gen->add_option("--subsample", o.subsample, "fraction of grid scenarios kept");

    auto* trn = app.add_subcommand("train", "train the segmenter on a dataset");
    add_common(trn, o);
    trn->add_option("--data", o.data, "dataset directory");
    trn->add_option("--epochs", o.epochs, "maximum epochs");
    trn->add_option("--patience", o.patience, "early-stopping patience");
    trn->add_flag("--no-attention", o.no_attention, "train the plain FCN (ablation)");

    auto* ev = app.add_subcommand("eval", "score models on the held-out split");
    add_common(ev, o);
    ev->add_option("--data", o.data, "dataset directory");
    ev->add_option("--model", o.model, "model file");
    ev->add_option("--baseline-model", o.baseline_model, "second model for the ablation column");

    auto* sim = app.add_subcommand("relay-sim", "run both relays over the reference cases");
    add_common(sim, o);
    sim->add_option("--model", o.model, "model file");
    sim->add_flag("--truth", o.truth, "segment with the synthesis ground truth instead of a model");
    sim->add_option("--snr-db", o.snr_db, "measurement noise level");

    auto* rep = app.add_subcommand("report", "plots and summary from relay-sim logs");
    add_common(rep, o);
    rep->add_option("--logs", o.logs, "relay-sim output directory");
    rep->add_option("--train-dir", o.train_dir, "train output directory (loss curves)");
    rep->add_option("--eval-dir", o.eval_dir, "eval output directory (metrics)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig cfg = resolve(o);
        if (*gen) inrush::cmd_gen_data(cfg, std::cout);
        else if (*trn) inrush::cmd_train(cfg, std::cout);
        else if (*ev) inrush::cmd_eval(cfg, std::cout);
        else if (*sim) inrush::cmd_relay_sim(cfg, std::cout);
        else if (*rep) inrush::cmd_report(cfg, std::cout);
    } catch (const inrush::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
