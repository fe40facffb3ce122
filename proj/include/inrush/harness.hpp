#pragma once

// Command layer behind the inrush-relay CLI: resolved run configuration,
// provenance stamping, and the five batch commands. Every command is a pure
// function of (config, input files); nothing time- or host-dependent reaches
// an output file.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "inrush/dataset.hpp"
#include "inrush/scenarios.hpp"
#include "inrush/svg.hpp"
#include "inrush/training.hpp"

namespace inrush {

struct RunPaths {
    std::string data;            ///< dataset directory (gen-data output)
    std::string model;           ///< model file (train output)
    std::string baseline_model;  ///< second model for the ablation column
    std::string logs;            ///< relay-sim output directory
    std::string train_dir;       ///< optional, for loss curves in report
    std::string eval_dir;        ///< optional, for metrics in report
};

struct RunConfig {
    std::uint64_t seed = 0;
    double fs = 2000.0;
    GridSpec grid;
    ArchSpec arch;
    bool attention = true;
    TrainConfig train;
    RelayConfig relay;
    double case_duration = 0.4;
    double case_snr_db = std::numeric_limits<double>::infinity();
    std::vector<int> cases{1, 2, 3, 4, 5, 6, 7};
    std::string segmenter = "model";  ///< "model" or "truth"
    int progress_every = 10;          ///< epochs between progress lines
    RunPaths paths;
    std::string out = "out";  ///< not part of the echoed configuration

    ArchSpec effective_arch() const { return attention ? arch : arch.plain(); }

    void validate() const {
        if (!(fs > 0.0)) throw ValidationError("config: fs must be > 0");
        grid.validate();
        samples_in(grid.window, fs);
        effective_arch().validate();
        train.validate();
        relay.validate(fs);
        if (segmenter != "model" && segmenter != "truth") {
            throw ValidationError("config: segmenter must be 'model' or 'truth'");
        }
        for (int c : cases) {
            if (c < 1 || c > 7) throw ValidationError("config: case numbers run from 1 to 7");
        }
        if (!(case_duration >= relay.window)) throw ValidationError("config: case duration shorter than a window");
        samples_in(case_duration, fs);
        if (out.empty()) throw ValidationError("config: --out must not be empty");
    }
};

inline nlohmann::ordered_json relay_to_json(const RelayConfig& r) {
    return {{"K", r.K},
            {"I_op0", r.I_op0},
            {"I_res_knee", r.I_res_knee},
            {"window", r.window},
            {"update_proposed", r.update_proposed},
            {"update_dft", r.update_dft},
            {"shr_threshold", r.shr_threshold},
            {"min_fit_support", r.min_fit_support}};
}

inline nlohmann::ordered_json train_to_json(const TrainConfig& t) {
    return {{"lr0", t.lr0},         {"l2_lambda", t.l2_lambda}, {"max_epochs", t.max_epochs},
            {"patience", t.patience}, {"batch_size", t.batch_size}, {"beta1", t.beta1},
            {"beta2", t.beta2},     {"eps", t.eps}};
}

/// The resolved configuration as echoed into every output bundle.
inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["fs"] = c.fs;
    j["grid"] = grid_to_json(c.grid);
    j["arch"] = arch_to_json(c.arch);
    j["attention"] = c.attention;
    j["train"] = train_to_json(c.train);
    j["relay"] = relay_to_json(c.relay);
    j["cases"] = {{"select", c.cases},
                  {"duration", c.case_duration},
                  {"snr_db", std::isfinite(c.case_snr_db) ? nlohmann::ordered_json(c.case_snr_db) : nlohmann::ordered_json(nullptr)},
                  {"segmenter", c.segmenter}};
    j["progress_every"] = c.progress_every;
    j["paths"] = {{"data", c.paths.data},           {"model", c.paths.model},
                  {"baseline_model", c.paths.baseline_model}, {"logs", c.paths.logs},
                  {"train_dir", c.paths.train_dir}, {"eval_dir", c.paths.eval_dir}};
    return j;
}

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ValidationError("config: '" + where + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* key : keys) known = known || k == key;
        if (!known) throw ValidationError("config: unknown key '" + where + k + "'");
    }
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& field) {
    if (j.contains(key)) j.at(key).get_to(field);
}

} // namespace detail

/// Overlays a (possibly partial) JSON config on `base`. Unknown keys are errors.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
    using detail::read_key;
    try {
        detail::reject_unknown(j, {"seed", "fs", "grid", "arch", "attention", "train", "relay", "cases",
                                   "progress_every", "paths"},
                               "");
        read_key(j, "seed", base.seed);
        read_key(j, "fs", base.fs);
        if (j.contains("grid")) base.grid = grid_from_json(j.at("grid"), base.grid);
        if (j.contains("arch")) {
            nlohmann::json a = arch_to_json(base.arch);
            a.update(j.at("arch"));
            base.arch = arch_from_json(a);
        }
        read_key(j, "attention", base.attention);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            detail::reject_unknown(t, {"lr0", "l2_lambda", "max_epochs", "patience", "batch_size", "beta1",
                                       "beta2", "eps"},
                                   "train.");
            read_key(t, "lr0", base.train.lr0);
            read_key(t, "l2_lambda", base.train.l2_lambda);
            read_key(t, "max_epochs", base.train.max_epochs);
            read_key(t, "patience", base.train.patience);
            read_key(t, "batch_size", base.train.batch_size);
            read_key(t, "beta1", base.train.beta1);
            read_key(t, "beta2", base.train.beta2);
            read_key(t, "eps", base.train.eps);
        }
        if (j.contains("relay")) {
            const auto& r = j.at("relay");
            detail::reject_unknown(r, {"K", "I_op0", "I_res_knee", "window", "update_proposed", "update_dft",
                                       "shr_threshold", "min_fit_support"},
                                   "relay.");
            read_key(r, "K", base.relay.K);
            read_key(r, "I_op0", base.relay.I_op0);
            read_key(r, "I_res_knee", base.relay.I_res_knee);
            read_key(r, "window", base.relay.window);
            read_key(r, "update_proposed", base.relay.update_proposed);
            read_key(r, "update_dft", base.relay.update_dft);
            read_key(r, "shr_threshold", base.relay.shr_threshold);
            read_key(r, "min_fit_support", base.relay.min_fit_support);
        }
        if (j.contains("cases")) {
            const auto& c = j.at("cases");
            detail::reject_unknown(c, {"select", "duration", "snr_db", "segmenter"}, "cases.");
            read_key(c, "select", base.cases);
            read_key(c, "duration", base.case_duration);
            if (c.contains("snr_db")) {
                base.case_snr_db = c.at("snr_db").is_null() ? std::numeric_limits<double>::infinity()
                                                            : c.at("snr_db").get<double>();
            }
            read_key(c, "segmenter", base.segmenter);
        }
        read_key(j, "progress_every", base.progress_every);
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            detail::reject_unknown(p, {"data", "model", "baseline_model", "logs", "train_dir", "eval_dir"},
                                   "paths.");
            read_key(p, "data", base.paths.data);
            read_key(p, "model", base.paths.model);
            read_key(p, "baseline_model", base.paths.baseline_model);
            read_key(p, "logs", base.paths.logs);
            read_key(p, "train_dir", base.paths.train_dir);
            read_key(p, "eval_dir", base.paths.eval_dir);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return base;
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
    if (!std::filesystem::is_regular_file(path)) throw ValidationError("config: no such file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return config_from_json(j, base);
}

inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(config_to_json(c).dump()); }

inline nlohmann::ordered_json provenance(const std::string& command, const RunConfig& c) {
    return {{"tool", "inrush-relay"},
            {"version", kVersion},
            {"arch_version", kArchVersion},
            {"command", command},
            {"seed", c.seed},
            {"config_hash", config_hash(c)}};
}

// --- file helpers ------------------------------------------------------------

namespace detail {

inline std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw RuntimeError("cannot create output directory '" + dir + "'");
}

inline void require_path(const std::string& path, const std::string& what) {
    if (path.empty()) throw ValidationError("missing " + what + " (no path given)");
    if (!std::filesystem::exists(path)) throw ValidationError("missing " + what + ": '" + path + "'");
}

inline std::string csv_with_provenance(const nlohmann::ordered_json& prov, const std::string& body) {
    return "# " + prov.dump() + "\n" + body;
}

inline void write_json(const std::string& path, const nlohmann::ordered_json& j) {
    write_file(path, j.dump(2) + "\n");
}

inline void write_config_echo(const std::string& dir, const std::string& command, const RunConfig& c) {
    write_json(join(dir, "config.json"), {{"provenance", provenance(command, c)}, {"config", config_to_json(c)}});
}

inline void write_chart(const std::string& dir, const std::string& stem, const svg::Chart& chart,
                        const nlohmann::ordered_json& prov) {
    write_file(join(dir, stem + ".svg"), svg::render(chart, prov.dump()));
    write_file(join(dir, stem + ".csv"), svg::to_csv(chart, prov.dump()));
}

/// Parsed numeric CSV: header names and rows; empty cells read as NaN.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw RuntimeError("csv: missing column '" + name + "'");
    }
    std::vector<double> column(const std::string& name) const {
        const auto c = col(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
};

inline Table read_table(const std::string& path) {
    const std::string text = read_file(path);
    const auto lines = data_lines(text);
    if (lines.empty()) throw RuntimeError("csv: empty file '" + path + "'");
    Table t;
    for (auto f : split_csv_line(lines[0])) t.header.emplace_back(f);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_csv_line(lines[i]);
        if (f.size() != t.header.size()) throw RuntimeError("csv: ragged row in '" + path + "'");
        std::vector<double> row;
        for (auto v : f) row.push_back(v.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(v));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline nlohmann::ordered_json metrics_json(const MetricsReport& r) {
    return {{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
            {"tp", r.tp},             {"fp", r.fp},               {"tn", r.tn},         {"fn", r.fn}};
}

inline nlohmann::ordered_json optional_time(const std::optional<double>& t) {
    return t ? nlohmann::ordered_json(*t) : nlohmann::ordered_json(nullptr);
}

} // namespace detail

// --- commands ----------------------------------------------------------------

struct GenDataSummary {
    std::size_t scenarios = 0;
    std::size_t windows = 0;
    std::string csv_hash;
};

inline GenDataSummary cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    detail::ensure_dir(cfg.out);
    const auto prov = provenance("gen-data", cfg);
    const Dataset ds = build_dataset(cfg.grid, cfg.fs, cfg.seed);
    GenDataSummary s;
    s.scenarios = ds.scenarios.size();
    s.windows = ds.windows.size();
    s.csv_hash = save_dataset(ds, cfg.out, prov);
    detail::write_config_echo(cfg.out, "gen-data", cfg);
    log << "gen-data: " << s.scenarios << " scenarios, " << s.windows
        << " windows, " << ds.skipped_zero_windows << " all-zero windows skipped\n";
    return s;
}

struct TrainSummary {
    TrainReport report;
    MetricsReport test_metrics;
    std::string model_path;
};

inline TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    detail::require_path(cfg.paths.data, "dataset");
    const Dataset ds = load_dataset(cfg.paths.data);
    detail::ensure_dir(cfg.out);
    const auto prov = provenance("train", cfg);

    const auto tr = make_examples(ds, Split::kTrain);
    const auto te = make_examples(ds, Split::kTest);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const auto arch = cfg.effective_arch();
    log << "train: " << tr.size() << " train / " << te.size() << " test windows, "
        << (cfg.attention ? "with" : "without") << " attention\n";
    auto [model, rep] = train(init_model(arch, cfg.seed), tr, te, tc, [&](int ep, double a, double b) {
        if (cfg.progress_every > 0 && (ep + 1) % cfg.progress_every == 0) {
            log << "  epoch " << ep + 1 << " train " << fmt_fixed(a, 5) << " test " << fmt_fixed(b, 5) << "\n";
        }
    });

    TrainSummary s;
    s.report = rep;
    s.test_metrics = evaluate(model, te);
    s.model_path = detail::join(cfg.out, "model.bin");

    nlohmann::ordered_json summary;
    summary["epochs_run"] = rep.test_loss_curve.size();
    summary["best_epoch"] = rep.best_epoch;
    summary["best_test_loss"] = rep.best_test_loss;
    summary["stopped_early"] = rep.stopped_early;
    summary["test_metrics"] = detail::metrics_json(s.test_metrics);

    nlohmann::ordered_json info;
    info["provenance"] = prov;
    info["dataset_csv_hash"] = fnv1a_hex(read_file(detail::join(cfg.paths.data, "dataset.csv")));
    info["attention"] = model.has_attention();
    info["train"] = summary;
    save_model(model, s.model_path, info);
    write_file(detail::join(cfg.out, "training_log.csv"), detail::csv_with_provenance(prov, training_log_csv(rep)));
    detail::write_json(detail::join(cfg.out, "train_report.json"),
                       {{"provenance", prov}, {"config", config_to_json(cfg)}, {"dataset", info["dataset_csv_hash"]},
                        {"report", summary}});
    detail::write_config_echo(cfg.out, "train", cfg);
    log << "train: best epoch " << rep.best_epoch + 1 << " of " << rep.test_loss_curve.size()
        << (rep.stopped_early ? " (stopped early)" : "") << ", test accuracy " << fmt_fixed(s.test_metrics.accuracy, 4)
        << ", F1 " << fmt_fixed(s.test_metrics.f1, 4) << "\n";
    return s;
}

struct EvalSummary {
    MetricsReport model;
    std::optional<MetricsReport> baseline;
};

inline EvalSummary cmd_eval(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    detail::require_path(cfg.paths.model, "model");
    detail::require_path(cfg.paths.data, "dataset");
    if (!cfg.paths.baseline_model.empty()) detail::require_path(cfg.paths.baseline_model, "baseline model");
    const Dataset ds = load_dataset(cfg.paths.data);
    const auto te = make_examples(ds, Split::kTest);
    if (te.empty()) throw ValidationError("eval: dataset has no test windows");

    auto check_arch = [&](const SegmenterModel& m, const std::string& path) {
        if (te.front().x.size() < m.min_length()) {
            throw ValidationError("eval: model '" + path + "' needs windows of at least " +
                                  std::to_string(m.min_length()) + " samples");
        }
    };
    const auto m = load_model(cfg.paths.model);
    check_arch(m, cfg.paths.model);
    EvalSummary s;
    s.model = evaluate(m, te);
    std::optional<SegmenterModel> base;
    if (!cfg.paths.baseline_model.empty()) {
        base = load_model(cfg.paths.baseline_model);
        check_arch(*base, cfg.paths.baseline_model);
        s.baseline = evaluate(*base, te);
    }

    detail::ensure_dir(cfg.out);
    const auto prov = provenance("eval", cfg);
    const auto variant = [](const SegmenterModel& x) { return x.has_attention() ? "a_fcn" : "fcn"; };
    const std::string name = variant(m);
    std::string base_name = base ? variant(*base) : "";
    if (base_name == name) base_name = "baseline_" + base_name;
    std::string csv = "metric," + name + (base ? "," + base_name : std::string()) + "\n";
    auto row = [&](const std::string& name, auto get) {
        csv += name + "," + get(s.model) + (s.baseline ? "," + get(*s.baseline) : std::string()) + "\n";
    };
    row("accuracy", [](const MetricsReport& r) { return fmt_double(r.accuracy); });
    row("precision", [](const MetricsReport& r) { return fmt_double(r.precision); });
    row("recall", [](const MetricsReport& r) { return fmt_double(r.recall); });
    row("f1", [](const MetricsReport& r) { return fmt_double(r.f1); });
    row("tp", [](const MetricsReport& r) { return std::to_string(r.tp); });
    row("fp", [](const MetricsReport& r) { return std::to_string(r.fp); });
    row("tn", [](const MetricsReport& r) { return std::to_string(r.tn); });
    row("fn", [](const MetricsReport& r) { return std::to_string(r.fn); });
    row("threshold", [](const MetricsReport&) { return std::string("0.5"); });
    write_file(detail::join(cfg.out, "metrics.csv"), detail::csv_with_provenance(prov, csv));

    nlohmann::ordered_json j;
    j["provenance"] = prov;
    j["config"] = config_to_json(cfg);
    j["test_windows"] = te.size();
    j["threshold"] = 0.5;
    j[name] = detail::metrics_json(s.model);
    if (s.baseline) j[base_name] = detail::metrics_json(*s.baseline);
    detail::write_json(detail::join(cfg.out, "metrics.json"), j);
    detail::write_config_echo(cfg.out, "eval", cfg);

    log << "eval: " << name << " accuracy " << fmt_fixed(s.model.accuracy, 4) << " F1 " << fmt_fixed(s.model.f1, 4);
    if (s.baseline) {
        log << " | " << base_name << " accuracy " << fmt_fixed(s.baseline->accuracy, 4) << " F1 "
            << fmt_fixed(s.baseline->f1, 4);
    }
    log << "\n";
    return s;
}

/// First-window fundamental estimates of one case, for the DFT comparison.
struct FirstCycle {
    double I_dft = 0.0;
    double I_ext = 0.0;
    double I_tru = 0.0;
};

inline FirstCycle first_cycle(const CaseSpec& c, const CaseResult& r, const RelayConfig& cfg) {
    FirstCycle f;
    if (!r.conventional.decisions.empty()) f.I_dft = r.conventional.decisions.front().i1_rms;
    if (!r.proposed.decisions.empty()) f.I_ext = r.proposed.decisions.front().i1_rms;
    const std::size_t win = samples_in(cfg.window, c.i1.fs);
    if (c.i1.meta && c.i1.meta->true_rms.size() >= win) f.I_tru = c.i1.meta->true_rms[win - 1];
    return f;
}

inline std::string signals_csv(const CaseSpec& c) {
    std::string out = "t,i1,i2,true_rms,true_mask\n";
    for (std::size_t k = 0; k < c.i1.size(); ++k) {
        const bool meta = c.i1.meta.has_value();
        out += fmt_double(c.i1.time_at(k)) + "," + fmt_double(c.i1.samples[k]) + "," + fmt_double(c.i2.samples[k]) +
               "," + (meta ? fmt_double(c.i1.meta->true_rms[k]) : std::string()) + "," +
               (meta ? (c.i1.meta->true_mask[k] ? "1" : "0") : std::string()) + "\n";
    }
    return out;
}

struct RelaySimSummary {
    std::vector<CaseResult> results;
    std::vector<FirstCycle> first_cycles;
};

inline RelaySimSummary cmd_relay_sim(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    std::optional<SegmenterModel> model;
    WindowSegmenter seg;
    if (cfg.segmenter == "truth") {
        seg = truth_segmenter();
    } else {
        detail::require_path(cfg.paths.model, "model");
        model = load_model(cfg.paths.model);
        if (samples_in(cfg.relay.window, cfg.fs) < model->min_length()) {
            throw ValidationError("relay-sim: relay window shorter than the model's receptive field");
        }
        seg = model_segmenter(*model);
    }
    detail::ensure_dir(cfg.out);
    const auto prov = provenance("relay-sim", cfg);

    CaseOptions o;
    o.fs = cfg.fs;
    o.duration = cfg.case_duration;
    o.snr_db = cfg.case_snr_db;
    o.seed = cfg.seed;
    o.circuit = cfg.grid.circuit;

    RelaySimSummary s;
    double compute_s = 0.0;
    std::size_t windows = 0;
    auto cases_json = nlohmann::ordered_json::array();
    for (const auto& c : reference_cases(o)) {
        if (std::find(cfg.cases.begin(), cfg.cases.end(), c.number) == cfg.cases.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        auto r = run_case(c, seg, cfg.relay);
        compute_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        windows += r.proposed.decisions.size() + r.conventional.decisions.size();
        const auto fc = first_cycle(c, r, cfg.relay);
        const std::string stem = "case" + std::to_string(c.number);
        write_file(detail::join(cfg.out, stem + "_conventional.csv"),
                   detail::csv_with_provenance(prov, trip_log_csv(r.conventional)));
        write_file(detail::join(cfg.out, stem + "_proposed.csv"),
                   detail::csv_with_provenance(prov, trip_log_csv(r.proposed)));
        write_file(detail::join(cfg.out, stem + "_signals.csv"), detail::csv_with_provenance(prov, signals_csv(c)));
        nlohmann::ordered_json cj;
        cj["case"] = c.number;
        cj["description"] = c.description;
        cj["internal_fault"] = c.internal_fault;
        cj["conventional_trip_s"] = detail::optional_time(r.conventional.first_trip_time);
        cj["proposed_trip_s"] = detail::optional_time(r.proposed.first_trip_time);
        cj["conventional_longest_block_s"] = r.longest_block;
        std::size_t fallbacks = 0;
        for (const auto& d : r.proposed.decisions) fallbacks += d.fallback_used ? 1 : 0;
        cj["proposed_fallback_windows"] = fallbacks;
        cj["first_cycle"] = {{"I_dft", fc.I_dft}, {"I_ext", fc.I_ext}, {"I_tru", fc.I_tru}};
        cases_json.push_back(cj);
        s.results.push_back(std::move(r));
        s.first_cycles.push_back(fc);
    }
    write_file(detail::join(cfg.out, "trip_table.csv"),
               detail::csv_with_provenance(prov, trip_table_csv(s.results, cfg.case_duration)));
    write_file(detail::join(cfg.out, "trip_table.txt"),
               "# " + prov.dump() + "\n" + trip_table_text(s.results, cfg.case_duration));
    detail::write_json(detail::join(cfg.out, "suite.json"), {{"provenance", prov},
                                                             {"config", config_to_json(cfg)},
                                                             {"segmenter", cfg.segmenter},
                                                             {"horizon_s", cfg.case_duration},
                                                             {"cases", cases_json}});
    detail::write_config_echo(cfg.out, "relay-sim", cfg);
    log << trip_table_text(s.results, cfg.case_duration);
    if (windows > 0) {
        // Host-dependent; printed only, never written to an output file.
        log << "relay-sim: mean compute per relay decision " << fmt_fixed(1e3 * compute_s / windows, 3) << " ms\n";
    }
    return s;
}

struct ReportSummary {
    std::vector<std::string> files;
};

inline ReportSummary cmd_report(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    detail::require_path(cfg.paths.logs, "relay-sim logs");
    const std::string suite_path = detail::join(cfg.paths.logs, "suite.json");
    detail::require_path(suite_path, "relay-sim suite summary");
    nlohmann::ordered_json suite;
    try {
        suite = nlohmann::ordered_json::parse(read_file(suite_path));
    } catch (const nlohmann::json::exception& e) {
        throw RuntimeError(std::string("report: ") + e.what());
    }
    ReportSummary s;
    const auto& cases = suite.at("cases");
    if (cases.empty()) {
        log << "report: no scenarios in '" << cfg.paths.logs << "'; nothing to do\n";
        return s;
    }
    detail::ensure_dir(cfg.out);
    const auto prov = provenance("report", cfg);
    const double omega = kTwoPi * kSystemFrequency;
    auto emit = [&](const std::string& stem, const svg::Chart& chart) {
        detail::write_chart(cfg.out, stem, chart, prov);
        s.files.push_back(stem + ".svg");
        s.files.push_back(stem + ".csv");
    };

    auto case_rows = nlohmann::ordered_json::array();
    for (const auto& cj : cases) {
        const int n = cj.at("case").get<int>();
        const std::string stem = "case" + std::to_string(n);
        const std::string title = "Case " + std::to_string(n) + ": " + cj.at("description").get<std::string>();
        const auto sig = detail::read_table(detail::join(cfg.paths.logs, stem + "_signals.csv"));
        const auto conv = detail::read_table(detail::join(cfg.paths.logs, stem + "_conventional.csv"));
        const auto prop = detail::read_table(detail::join(cfg.paths.logs, stem + "_proposed.csv"));
        const auto t = sig.column("t");
        const auto i1 = sig.column("i1");
        const auto true_rms = sig.column("true_rms");
        const double fs = t.size() > 1 ? 1.0 / (t[1] - t[0]) : cfg.fs;

        // Measured current with the fitted fundamental of each proposed window
        // drawn over the stretch that window newly covers.
        svg::Chart wave{title + " - measured and extracted", "time (s)", "current (p.u.)", {}, {}};
        wave.series.push_back({"measured", t, i1, false});
        svg::Series ext{"extracted", {}, {}, false};
        const auto pt = prop.column("t"), prms = prop.column("i1_rms"), pph = prop.column("i1_phase");
        for (std::size_t d = 0; d < pt.size(); ++d) {
            const double t_start = pt[d] - cfg.relay.window;
            const double from = d == 0 ? t_start : pt[d - 1];
            for (std::size_t k = 0; k < t.size(); ++k) {
                if (t[k] < from - 0.5 / fs || t[k] >= pt[d] - 0.5 / fs) continue;
                ext.x.push_back(t[k]);
                ext.y.push_back(kSqrt2 * prms[d] * std::cos(omega * (t[k] - t_start) + pph[d]));
            }
        }
        wave.series.push_back(std::move(ext));
        emit(stem + "_waveform", wave);

        svg::Chart rmsc{title + " - fundamental rms", "time (s)", "rms (p.u.)", {}, {}};
        rmsc.series.push_back({"I_dft", conv.column("t"), conv.column("i1_rms"), false});
        rmsc.series.push_back({"I_ext", pt, prms, false});
        svg::Series tru{"I_tru", {}, {}, false};
        for (double td : pt) {
            const auto k = static_cast<std::size_t>(std::llround(td * fs)) - 1;
            if (k < true_rms.size() && std::isfinite(true_rms[k])) {
                tru.x.push_back(td);
                tru.y.push_back(true_rms[k]);
            }
        }
        rmsc.series.push_back(std::move(tru));
        emit(stem + "_rms", rmsc);

        svg::Chart trip{title + " - SHR and trip signals", "time (s)", "ratio / flag", {}, {cfg.relay.shr_threshold}};
        const auto ct = conv.column("t");
        auto shr = conv.column("shr");
        for (auto& v : shr) v = std::min(v, 2.0);  // clip the +inf of silent windows for display
        trip.series.push_back({"SHR", ct, shr, false});
        trip.series.push_back({"conventional trip", ct, conv.column("trip"), true});
        trip.series.push_back({"proposed trip", pt, prop.column("trip"), true});
        emit(stem + "_trip", trip);

        nlohmann::ordered_json row = cj;
        const auto& fc = cj.at("first_cycle");
        const double I_tru = fc.at("I_tru").get<double>();
        if (I_tru > 0.0) {
            row["first_cycle"]["dft_over_true"] = fc.at("I_dft").get<double>() / I_tru;
            row["first_cycle"]["ext_rel_error"] = std::abs(fc.at("I_ext").get<double>() - I_tru) / I_tru;
        }
        case_rows.push_back(row);
    }

    nlohmann::ordered_json bundle;
    bundle["provenance"] = prov;
    bundle["config"] = config_to_json(cfg);
    bundle["source_provenance"] = suite.value("provenance", nlohmann::ordered_json());
    bundle["cases"] = case_rows;

    if (!cfg.paths.train_dir.empty()) {
        const auto tl = detail::read_table(detail::join(cfg.paths.train_dir, "training_log.csv"));
        auto ep = tl.column("epoch");
        for (auto& e : ep) e += 1;
        svg::Chart loss{"Training and test loss", "epoch", "MSE", {}, {}};
        loss.series.push_back({"train", ep, tl.column("train_loss"), false});
        loss.series.push_back({"test", ep, tl.column("test_loss"), false});
        emit("loss_curve", loss);
    }
    if (!cfg.paths.eval_dir.empty()) {
        const auto mpath = detail::join(cfg.paths.eval_dir, "metrics.json");
        detail::require_path(mpath, "eval metrics");
        auto m = nlohmann::ordered_json::parse(read_file(mpath));
        m.erase("config");
        bundle["metrics"] = m;
    }
    bundle["files"] = s.files;
    detail::write_json(detail::join(cfg.out, "report.json"), bundle);
    detail::write_config_echo(cfg.out, "report", cfg);
    log << "report: " << s.files.size() << " plot files for " << cases.size() << " scenarios in '" << cfg.out << "'\n";
    return s;
}

} // namespace inrush
