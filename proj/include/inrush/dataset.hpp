#pragma once

// Training-set generation: traverses an energization/fault scenario grid,
// cuts one-cycle windows from each synthesized record and labels every sample
// against the never-saturating reference current.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "inrush/labeling.hpp"
#include "inrush/synthesis.hpp"
#include "inrush/util.hpp"
#include "inrush/waveform.hpp"

namespace inrush {

enum class ScenarioClass { kInrushOnly = 0, kSeriousFault = 1, kSlightFaultWithInrush = 2 };

inline const char* to_string(ScenarioClass c) {
    switch (c) {
    case ScenarioClass::kInrushOnly: return "inrush_only";
    case ScenarioClass::kSeriousFault: return "serious_fault";
    case ScenarioClass::kSlightFaultWithInrush: return "slight_fault_with_inrush";
    }
    return "unknown";
}

enum class InrushVariant { kNone, kStandard, kSymmetrical, kCtSaturated };

inline const char* to_string(InrushVariant v) {
    switch (v) {
    case InrushVariant::kNone: return "none";
    case InrushVariant::kStandard: return "standard";
    case InrushVariant::kSymmetrical: return "symmetrical";
    case InrushVariant::kCtSaturated: return "ct_saturated";
    }
    return "unknown";
}

enum class Split : std::uint8_t { kTrain = 0, kTest = 1 };

inline const char* to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

inline std::vector<double> arange(double first, double last, double step) {
    std::vector<double> v;
    const auto n = static_cast<int>(std::floor((last - first) / step + 1e-9)) + 1;
    for (int k = 0; k < n; ++k) v.push_back(first + step * k);
    return v;
}

struct GridSpec {
    SourceCircuit circuit;
    std::vector<double> closing_angles_deg = arange(0.0, 330.0, 30.0);
    std::vector<double> remanence = arange(0.0, 0.8, 0.1);
    std::vector<double> overexcitation = arange(1.0, 1.5, 0.1);
    double psi_s = 1.15;
    double tau_decay = 0.3;

    /// Peak fundamental of slight faults coexisting with inrush (p.u.).
    std::vector<double> slight_fault_amplitudes{0.5, 1.0, 2.0, 3.4};
    std::vector<double> slight_fault_overexcitation{1.0};
    /// Peak fundamental of serious faults; inrush is suppressed.
    std::vector<double> serious_fault_amplitudes{15.0, 25.0};
    /// Ds = scale * As * cos(alpha); 1.0 gives a zero-current start.
    std::vector<double> fault_dc_scales{1.0};
    double fault_Ts = 0.05;

    bool include_symmetrical = true;
    /// Over-excitation levels for the alternating-polarity variant.
    std::vector<double> symmetrical_overexcitation{1.0, 1.3};
    bool include_ct_saturation = true;
    /// Saturation severities (lower saturates harder) for the CT variant.
    std::vector<double> ct_sat_levels{3.0, 4.0, 5.0};
    double ct_tau = 0.005;

    int windows_per_scenario = 6;
    double window = 0.02;
    double window_start_max = 0.2;
    /// First window of every scenario starts at energization (t = 0), the
    /// cycle a relay must judge first.
    bool anchor_first_window = true;
    /// Fraction of scenarios kept (seeded selection).
    double subsample = 1.0;

    void validate() const {
        circuit.validate();
        if (closing_angles_deg.empty() || remanence.empty() || overexcitation.empty()) {
            throw ValidationError("grid: empty scenario grid");
        }
        if (windows_per_scenario < 1) throw ValidationError("grid: windows_per_scenario < 1");
        if (!(window > 0.0)) throw ValidationError("grid: window must be > 0");
        if (!(window_start_max >= 0.0)) throw ValidationError("grid: window_start_max < 0");
        if (!(subsample > 0.0 && subsample <= 1.0)) {
            throw ValidationError("grid: subsample must lie in (0, 1]");
        }
        for (double level : ct_sat_levels) {
            if (!(level > 0.0)) throw ValidationError("grid: ct_sat_levels must be > 0");
        }
    }
};

struct Scenario {
    int id = 0;
    ScenarioClass cls = ScenarioClass::kInrushOnly;
    InrushVariant variant = InrushVariant::kStandard;
    InrushParams inrush;
    FaultParams fault;
    double ct_sat_level = 0.0;  ///< CT variant only
};

struct WindowRecord {
    int window_id = 0;
    int scenario_id = 0;
    double t_start = 0.0;
    std::vector<double> current;   ///< measured (i1)
    std::vector<double> ideal;     ///< never-saturating reference (i2)
    LabelSequence label;
    std::vector<std::uint8_t> true_mask;  ///< synthesis ground truth; empty when loaded
    Split split = Split::kTrain;
};

struct Dataset {
    double fs = 2000.0;
    std::uint64_t seed = 0;
    GridSpec grid;
    std::vector<Scenario> scenarios;
    std::vector<WindowRecord> windows;
    std::size_t skipped_zero_windows = 0;

    std::vector<const WindowRecord*> split(Split s) const {
        std::vector<const WindowRecord*> out;
        for (const auto& w : windows) {
            if (w.split == s) out.push_back(&w);
        }
        return out;
    }
};

/// Enumerates the Cartesian scenario grid in a fixed order.
inline std::vector<Scenario> enumerate_scenarios(const GridSpec& g) {
    std::vector<Scenario> out;
    auto make_inrush = [&](double alpha_deg, double rem, double ox) {
        InrushParams p;
        p.alpha = alpha_deg * kPi / 180.0;
        p.psi_r = rem;
        p.psi_s = g.psi_s;
        p.overexcitation = ox;
        p.tau_decay = g.tau_decay;
        return p;
    };
    // Fault current lags the source voltage by a quarter cycle.
    auto make_fault = [&](double alpha_deg, double amp, double dc_scale) {
        FaultParams f;
        const double a = alpha_deg * kPi / 180.0;
        f.As = amp;
        f.alpha = a + kPi;
        f.Ds = dc_scale * amp * std::cos(a);
        f.Ts = g.fault_Ts;
        return f;
    };
    auto push = [&](ScenarioClass cls, InrushVariant var, InrushParams ip, FaultParams fp, double ct = 0.0) {
        Scenario s;
        s.id = static_cast<int>(out.size());
        s.cls = cls;
        s.variant = var;
        s.inrush = ip;
        s.fault = fp;
        s.ct_sat_level = ct;
        out.push_back(s);
    };

    for (double a : g.closing_angles_deg)
        for (double rem : g.remanence)
            for (double ox : g.overexcitation)
                push(ScenarioClass::kInrushOnly, InrushVariant::kStandard, make_inrush(a, rem, ox), {});
    if (g.include_symmetrical) {
        for (double a : g.closing_angles_deg)
            for (double rem : g.remanence)
                for (double ox : g.symmetrical_overexcitation)
                    push(ScenarioClass::kInrushOnly, InrushVariant::kSymmetrical,
                         make_inrush(a, rem, ox), {});
    }
    if (g.include_ct_saturation) {
        for (double level : g.ct_sat_levels)
            for (double a : g.closing_angles_deg)
                for (double rem : g.remanence)
                    push(ScenarioClass::kInrushOnly, InrushVariant::kCtSaturated,
                         make_inrush(a, rem, 1.0), {}, level);
    }
    for (double a : g.closing_angles_deg)
        for (double amp : g.serious_fault_amplitudes)
            for (double dc : g.fault_dc_scales)
                push(ScenarioClass::kSeriousFault, InrushVariant::kNone, {}, make_fault(a, amp, dc));
    for (double a : g.closing_angles_deg)
        for (double rem : g.remanence)
            for (double ox : g.slight_fault_overexcitation)
                for (double amp : g.slight_fault_amplitudes)
                    for (double dc : g.fault_dc_scales)
                        push(ScenarioClass::kSlightFaultWithInrush, InrushVariant::kStandard,
                             make_inrush(a, rem, ox), make_fault(a, amp, dc));
    return out;
}

/// Synthesizes a scenario's measured current and its ideal reference.
inline std::pair<Waveform, Waveform> synthesize(const GridSpec& g, const Scenario& s, double fs,
                                                double duration) {
    Waveform measured;
    switch (s.cls) {
    case ScenarioClass::kSeriousFault:
        measured = gen_fault(s.fault, fs, duration);
        break;
    case ScenarioClass::kSlightFaultWithInrush:
        measured = gen_mixed(g.circuit, s.inrush, s.fault, fs, duration);
        break;
    case ScenarioClass::kInrushOnly:
        if (s.variant == InrushVariant::kSymmetrical) {
            measured = gen_symmetrical_inrush(g.circuit, s.inrush, fs, duration);
        } else {
            measured = gen_inrush(g.circuit, s.inrush, fs, duration);
            if (s.variant == InrushVariant::kCtSaturated) {
                measured = apply_ct_saturation(measured, s.ct_sat_level, g.ct_tau);
            }
        }
        break;
    }
    Waveform ideal;
    if (s.cls == ScenarioClass::kInrushOnly) {
        ideal.fs = fs;
        ideal.samples.assign(measured.size(), 0.0);
    } else {
        ideal = gen_fault(s.fault, fs, duration);
    }
    return {std::move(measured), std::move(ideal)};
}

/// Builds the windowed, labeled dataset. Splits 70/30 per scenario class at
/// scenario granularity so windows of one record never straddle the split.
inline Dataset build_dataset(const GridSpec& grid, double fs, std::uint64_t seed) {
    grid.validate();
    if (!(fs > 0.0)) throw ValidationError("dataset: fs must be > 0");
    Dataset ds;
    ds.fs = fs;
    ds.seed = seed;
    ds.grid = grid;

    auto all = enumerate_scenarios(grid);
    if (all.empty()) throw ValidationError("grid: empty scenario grid");
    if (grid.subsample < 1.0) {
        std::vector<Scenario> kept;
        for (const auto& s : all) {
            std::mt19937_64 rng(mix_seed(seed, 0x5ab5a3b1eULL + static_cast<std::uint64_t>(s.id)));
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < grid.subsample) {
                kept.push_back(s);
            }
        }
        if (kept.empty()) kept.push_back(all.front());
        all = std::move(kept);
    }
    ds.scenarios = all;

    // Per-class scenario split.
    std::vector<Split> split_of(all.size(), Split::kTrain);
    for (int c = 0; c < 3; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (static_cast<int>(all[i].cls) == c) idx.push_back(i);
        }
        if (idx.empty()) continue;
        std::mt19937_64 rng(mix_seed(seed, 0x5b117ULL + static_cast<std::uint64_t>(c)));
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(idx.size()))));
        for (std::size_t j = n_train; j < idx.size(); ++j) split_of[idx[j]] = Split::kTest;
    }

    const std::size_t win_len = samples_in(grid.window, fs);
    const auto max_start = static_cast<std::size_t>(std::floor(grid.window_start_max * fs + 1e-9));
    const std::size_t total = max_start + win_len;
    const double duration = static_cast<double>(total) / fs;

    int next_window = 0;
    for (std::size_t si = 0; si < all.size(); ++si) {
        const Scenario& s = all[si];
        const auto [measured, ideal] = synthesize(grid, s, fs, duration);
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(s.id)));
        std::uniform_int_distribution<std::size_t> pick(0, max_start);
        for (int w = 0; w < grid.windows_per_scenario; ++w) {
            const std::size_t drawn = pick(rng);
            const std::size_t start = (w == 0 && grid.anchor_first_window) ? 0 : drawn;
            const Waveform mw = slice(measured, start, win_len);
            const Waveform iw = slice(ideal, start, win_len);
            if (max_abs(mw.samples) == 0.0) {
                ++ds.skipped_zero_windows;
                continue;
            }
            WindowRecord rec;
            rec.window_id = next_window++;
            rec.scenario_id = s.id;
            rec.t_start = mw.t0;
            rec.current = mw.samples;
            rec.ideal = iw.samples;
            rec.label = label_window(mw, iw);
            if (mw.meta) rec.true_mask = mw.meta->true_mask;
            rec.split = split_of[si];
            ds.windows.push_back(std::move(rec));
        }
    }
    return ds;
}

// --- persistence -----------------------------------------------------------

inline nlohmann::ordered_json grid_to_json(const GridSpec& g) {
    nlohmann::ordered_json j;
    j["circuit"] = {{"Um", g.circuit.Um}, {"omega", g.circuit.omega}, {"r", g.circuit.r},
                    {"L", g.circuit.L}};
    j["closing_angles_deg"] = g.closing_angles_deg;
    j["remanence"] = g.remanence;
    j["overexcitation"] = g.overexcitation;
    j["psi_s"] = g.psi_s;
    j["tau_decay"] = g.tau_decay;
    j["slight_fault_amplitudes"] = g.slight_fault_amplitudes;
    j["slight_fault_overexcitation"] = g.slight_fault_overexcitation;
    j["serious_fault_amplitudes"] = g.serious_fault_amplitudes;
    j["fault_dc_scales"] = g.fault_dc_scales;
    j["fault_Ts"] = g.fault_Ts;
    j["include_symmetrical"] = g.include_symmetrical;
    j["symmetrical_overexcitation"] = g.symmetrical_overexcitation;
    j["include_ct_saturation"] = g.include_ct_saturation;
    j["ct_sat_levels"] = g.ct_sat_levels;
    j["ct_tau"] = g.ct_tau;
    j["windows_per_scenario"] = g.windows_per_scenario;
    j["window"] = g.window;
    j["window_start_max"] = g.window_start_max;
    j["anchor_first_window"] = g.anchor_first_window;
    j["subsample"] = g.subsample;
    return j;
}

/// Reads a (possibly partial) grid description; absent keys keep `base` values.
inline GridSpec grid_from_json(const nlohmann::json& j, GridSpec base = {}) {
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    if (j.contains("circuit")) {
        const auto& c = j.at("circuit");
        if (c.contains("Um")) c.at("Um").get_to(base.circuit.Um);
        if (c.contains("omega")) c.at("omega").get_to(base.circuit.omega);
        if (c.contains("r")) c.at("r").get_to(base.circuit.r);
        if (c.contains("L")) c.at("L").get_to(base.circuit.L);
    }
    get("closing_angles_deg", base.closing_angles_deg);
    get("remanence", base.remanence);
    get("overexcitation", base.overexcitation);
    get("psi_s", base.psi_s);
    get("tau_decay", base.tau_decay);
    get("slight_fault_amplitudes", base.slight_fault_amplitudes);
    get("slight_fault_overexcitation", base.slight_fault_overexcitation);
    get("serious_fault_amplitudes", base.serious_fault_amplitudes);
    get("fault_dc_scales", base.fault_dc_scales);
    get("fault_Ts", base.fault_Ts);
    get("include_symmetrical", base.include_symmetrical);
    get("symmetrical_overexcitation", base.symmetrical_overexcitation);
    get("include_ct_saturation", base.include_ct_saturation);
    get("ct_sat_levels", base.ct_sat_levels);
    get("ct_tau", base.ct_tau);
    get("windows_per_scenario", base.windows_per_scenario);
    get("window", base.window);
    get("window_start_max", base.window_start_max);
    get("anchor_first_window", base.anchor_first_window);
    get("subsample", base.subsample);
    return base;
}

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["class"] = to_string(s.cls);
    j["variant"] = to_string(s.variant);
    if (s.cls != ScenarioClass::kSeriousFault) {
        j["alpha_deg"] = s.inrush.alpha * 180.0 / kPi;
        j["psi_r"] = s.inrush.psi_r;
        j["overexcitation"] = s.inrush.overexcitation;
    }
    if (s.variant == InrushVariant::kCtSaturated) j["ct_sat_level"] = s.ct_sat_level;
    if (s.cls != ScenarioClass::kInrushOnly) {
        j["fault_As"] = s.fault.As;
        j["fault_Ds"] = s.fault.Ds;
        j["fault_Ts"] = s.fault.Ts;
        j["fault_alpha"] = s.fault.alpha;
    }
    return j;
}

/// Per-sample CSV body: window_id,t,i1,i2,label,scenario_id,split.
inline std::string dataset_csv(const Dataset& ds) {
    std::string out = "window_id,t,i1,i2,label,scenario_id,split\n";
    for (const auto& w : ds.windows) {
        const std::string wid = std::to_string(w.window_id);
        const std::string sid = std::to_string(w.scenario_id);
        const char* sp = to_string(w.split);
        for (std::size_t k = 0; k < w.current.size(); ++k) {
            out += wid;
            out += ',';
            out += fmt_double(w.t_start + static_cast<double>(k) / ds.fs);
            out += ',';
            out += fmt_double(w.current[k]);
            out += ',';
            out += fmt_double(w.ideal[k]);
            out += ',';
            out += w.label.labels[k] ? '1' : '0';
            out += ',';
            out += sid;
            out += ',';
            out += sp;
            out += '\n';
        }
    }
    return out;
}

inline std::string dataset_hash(const Dataset& ds) { return fnv1a_hex(dataset_csv(ds)); }

inline nlohmann::ordered_json dataset_sidecar(const Dataset& ds, const std::string& csv_hash) {
    nlohmann::ordered_json j;
    j["format"] = "inrush-dataset/1";
    j["version"] = kVersion;
    j["fs"] = ds.fs;
    j["seed"] = ds.seed;
    j["window_samples"] = ds.windows.empty() ? 0 : ds.windows.front().current.size();
    j["grid"] = grid_to_json(ds.grid);
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    for (const auto& w : ds.windows) (w.split == Split::kTrain ? n_train : n_test)++;
    j["counts"] = {{"scenarios", ds.scenarios.size()},
                   {"windows", ds.windows.size()},
                   {"train", n_train},
                   {"test", n_test},
                   {"skipped_zero_windows", ds.skipped_zero_windows}};
    j["csv_hash"] = csv_hash;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : ds.scenarios) arr.push_back(scenario_to_json(s));
    j["scenarios"] = std::move(arr);
    return j;
}

/// Writes <dir>/dataset.csv and <dir>/dataset.json. A non-empty `provenance`
/// is embedded in the sidecar and as a leading '#' line of the CSV. Returns the
/// hash of the CSV file as written.
inline std::string save_dataset(const Dataset& ds, const std::string& dir,
                                const nlohmann::ordered_json& provenance = {}) {
    std::string csv = dataset_csv(ds);
    if (!provenance.is_null()) csv = "# " + provenance.dump() + "\n" + csv;
    const std::string hash = fnv1a_hex(csv);
    auto side = dataset_sidecar(ds, hash);
    if (!provenance.is_null()) side["provenance"] = provenance;
    write_file(dir + "/dataset.csv", csv);
    write_file(dir + "/dataset.json", side.dump(2) + "\n");
    return hash;
}

inline Dataset load_dataset(const std::string& dir) {
    const std::string csv = read_file(dir + "/dataset.csv");
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(read_file(dir + "/dataset.json"));
    } catch (const nlohmann::json::exception& e) {
        throw RuntimeError(std::string("dataset sidecar: ") + e.what());
    }
    if (side.value("format", "") != "inrush-dataset/1") {
        throw RuntimeError("dataset sidecar: unknown format");
    }
    if (side.value("csv_hash", "") != fnv1a_hex(csv)) {
        throw RuntimeError("dataset: csv hash does not match sidecar");
    }
    Dataset ds;
    ds.fs = side.at("fs").get<double>();
    ds.seed = side.at("seed").get<std::uint64_t>();
    ds.grid = grid_from_json(side.at("grid"));
    ds.skipped_zero_windows = side.at("counts").at("skipped_zero_windows").get<std::size_t>();

    const auto lines = data_lines(csv);
    if (lines.empty()) throw RuntimeError("dataset: empty csv");
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto f = split_csv_line(lines[li]);
        if (f.size() != 7) throw RuntimeError("dataset: malformed row " + std::to_string(li));
        const int wid = static_cast<int>(parse_int(f[0]));
        if (ds.windows.empty() || ds.windows.back().window_id != wid) {
            WindowRecord rec;
            rec.window_id = wid;
            rec.scenario_id = static_cast<int>(parse_int(f[5]));
            rec.t_start = parse_double(f[1]);
            rec.split = f[6] == "test" ? Split::kTest : Split::kTrain;
            ds.windows.push_back(std::move(rec));
        }
        auto& rec = ds.windows.back();
        rec.current.push_back(parse_double(f[2]));
        rec.ideal.push_back(parse_double(f[3]));
        rec.label.labels.push_back(f[4] == "1" ? 1 : 0);
    }
    for (const auto& js : side.at("scenarios")) {
        Scenario s;
        s.id = js.at("id").get<int>();
        const auto cls = js.at("class").get<std::string>();
        s.cls = cls == "serious_fault"              ? ScenarioClass::kSeriousFault
                : cls == "slight_fault_with_inrush" ? ScenarioClass::kSlightFaultWithInrush
                                                    : ScenarioClass::kInrushOnly;
        const auto var = js.at("variant").get<std::string>();
        s.variant = var == "symmetrical"    ? InrushVariant::kSymmetrical
                    : var == "ct_saturated" ? InrushVariant::kCtSaturated
                    : var == "none"         ? InrushVariant::kNone
                                            : InrushVariant::kStandard;
        if (js.contains("ct_sat_level")) s.ct_sat_level = js.at("ct_sat_level").get<double>();
        if (js.contains("alpha_deg")) {
            s.inrush.alpha = js.at("alpha_deg").get<double>() * kPi / 180.0;
            s.inrush.psi_r = js.at("psi_r").get<double>();
            s.inrush.overexcitation = js.at("overexcitation").get<double>();
            s.inrush.psi_s = ds.grid.psi_s;
            s.inrush.tau_decay = ds.grid.tau_decay;
        }
        if (js.contains("fault_As")) {
            s.fault.As = js.at("fault_As").get<double>();
            s.fault.Ds = js.at("fault_Ds").get<double>();
            s.fault.Ts = js.at("fault_Ts").get<double>();
            s.fault.alpha = js.at("fault_alpha").get<double>();
        }
        ds.scenarios.push_back(s);
    }
    return ds;
}

} // namespace inrush
