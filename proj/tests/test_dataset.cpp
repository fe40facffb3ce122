#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "inrush/dataset.hpp"

using namespace inrush;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.closing_angles_deg = {0.0, 90.0, 180.0};
    g.remanence = {0.0, 0.5};
    g.overexcitation = {1.0, 1.3};
    g.slight_fault_amplitudes = {0.5, 2.0};
    g.serious_fault_amplitudes = {15.0};
    g.windows_per_scenario = 2;
    return g;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("inrush_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST(Dataset, SingleScenarioGoesToTrain) {
    GridSpec g;
    g.closing_angles_deg = {0.0};
    g.remanence = {0.8};
    g.overexcitation = {1.0};
    g.include_symmetrical = false;
    g.include_ct_saturation = false;
    g.slight_fault_amplitudes.clear();
    g.serious_fault_amplitudes.clear();
    g.windows_per_scenario = 1;
    const auto ds = build_dataset(g, 2000.0, 1);
    ASSERT_EQ(ds.scenarios.size(), 1u);
    ASSERT_EQ(ds.windows.size(), 1u);
    EXPECT_EQ(ds.windows[0].split, Split::kTrain);
    EXPECT_EQ(ds.windows[0].current.size(), 40u);
}

TEST(Dataset, EmptyGridIsAnError) {
    GridSpec g;
    g.closing_angles_deg.clear();
    EXPECT_THROW(build_dataset(g, 2000.0, 1), ValidationError);
}

TEST(Dataset, DefaultGridCardinality) {
    const auto scen = enumerate_scenarios(GridSpec{});
    std::map<ScenarioClass, int> per_class;
    for (const auto& s : scen) per_class[s.cls]++;
    EXPECT_EQ(per_class[ScenarioClass::kInrushOnly], 12 * 9 * 6 + 2 * 12 * 9 + 3 * 12 * 9);
    EXPECT_EQ(per_class[ScenarioClass::kSeriousFault], 12 * 2);
    EXPECT_EQ(per_class[ScenarioClass::kSlightFaultWithInrush], 12 * 9 * 4);
    // Six windows per scenario gives a corpus of several thousand windows.
    const auto windows = scen.size() * 6;
    EXPECT_GT(windows, 7000u);
    EXPECT_LT(windows, 10000u);
}

TEST(Dataset, SameSeedSameSplit) {
    const auto a = build_dataset(small_grid(), 2000.0, 42);
    const auto b = build_dataset(small_grid(), 2000.0, 42);
    ASSERT_EQ(a.windows.size(), b.windows.size());
    for (std::size_t i = 0; i < a.windows.size(); ++i) {
        EXPECT_EQ(a.windows[i].split, b.windows[i].split);
        EXPECT_EQ(a.windows[i].current, b.windows[i].current);
        EXPECT_EQ(a.windows[i].label.labels, b.windows[i].label.labels);
    }
    EXPECT_EQ(dataset_hash(a), dataset_hash(b));
    EXPECT_NE(dataset_hash(a), dataset_hash(build_dataset(small_grid(), 2000.0, 43)));
}

TEST(Dataset, SplitIsSeventyThirtyPerClassAtScenarioLevel) {
    const auto ds = build_dataset(small_grid(), 2000.0, 7);
    std::map<int, Split> scen_split;
    for (const auto& w : ds.windows) {
        auto [it, inserted] = scen_split.emplace(w.scenario_id, w.split);
        EXPECT_EQ(it->second, w.split) << "scenario straddles the split";
    }
    std::map<ScenarioClass, std::pair<int, int>> counts;
    for (const auto& s : ds.scenarios) {
        // Scenarios whose windows were all zero have no entry; count by class.
        auto it = scen_split.find(s.id);
        if (it == scen_split.end()) continue;
        (it->second == Split::kTrain ? counts[s.cls].first : counts[s.cls].second)++;
    }
    for (const auto& [cls, c] : counts) {
        const double frac = static_cast<double>(c.first) / (c.first + c.second);
        EXPECT_NEAR(frac, 0.7, 0.15) << to_string(cls);
    }
}

TEST(Dataset, EmitsAllThreeClassesAndLabelsMatchTruth) {
    const auto ds = build_dataset(small_grid(), 2000.0, 3);
    std::set<ScenarioClass> seen;
    std::map<int, ScenarioClass> cls;
    for (const auto& s : ds.scenarios) cls[s.id] = s.cls;
    std::size_t agree = 0, total = 0;
    for (const auto& w : ds.windows) {
        seen.insert(cls[w.scenario_id]);
        ASSERT_EQ(w.true_mask.size(), w.label.size());
        for (std::size_t k = 0; k < w.label.size(); ++k) agree += w.label.labels[k] == w.true_mask[k];
        total += w.label.size();
        EXPECT_GT(max_abs(w.current), 0.0);
    }
    EXPECT_EQ(seen.size(), 3u);
    EXPECT_GE(static_cast<double>(agree) / static_cast<double>(total), 0.97);
}

TEST(Dataset, SeriousFaultWindowsAreAllNonInrush) {
    const auto ds = build_dataset(small_grid(), 2000.0, 3);
    std::map<int, ScenarioClass> cls;
    for (const auto& s : ds.scenarios) cls[s.id] = s.cls;
    int checked = 0;
    for (const auto& w : ds.windows) {
        if (cls[w.scenario_id] != ScenarioClass::kSeriousFault) continue;
        EXPECT_EQ(w.label.count_ones(), w.label.size());
        ++checked;
    }
    EXPECT_GT(checked, 0);
}

TEST(Dataset, SaveLoadRoundTrip) {
    const auto ds = build_dataset(small_grid(), 2000.0, 11);
    const auto dir = temp_dir("roundtrip");
    const auto hash = save_dataset(ds, dir.string());
    const auto back = load_dataset(dir.string());
    EXPECT_EQ(hash, dataset_hash(back));
    ASSERT_EQ(back.windows.size(), ds.windows.size());
    for (std::size_t i = 0; i < ds.windows.size(); ++i) {
        EXPECT_EQ(back.windows[i].current, ds.windows[i].current);
        EXPECT_EQ(back.windows[i].ideal, ds.windows[i].ideal);
        EXPECT_EQ(back.windows[i].label.labels, ds.windows[i].label.labels);
        EXPECT_EQ(back.windows[i].split, ds.windows[i].split);
        EXPECT_EQ(back.windows[i].t_start, ds.windows[i].t_start);
    }
    EXPECT_EQ(back.scenarios.size(), ds.scenarios.size());
    EXPECT_EQ(back.seed, 11u);
}

TEST(Dataset, TamperedCsvIsRejected) {
    const auto ds = build_dataset(small_grid(), 2000.0, 11);
    const auto dir = temp_dir("tamper");
    save_dataset(ds, dir.string());
    auto csv = read_file((dir / "dataset.csv").string());
    csv[csv.size() / 2] = csv[csv.size() / 2] == '1' ? '2' : '1';
    write_file((dir / "dataset.csv").string(), csv);
    EXPECT_THROW(load_dataset(dir.string()), RuntimeError);
}

TEST(Dataset, SubsampleIsSeededAndPartial) {
    GridSpec g;
    g.subsample = 0.1;
    g.windows_per_scenario = 1;
    const auto a = enumerate_scenarios(g).size();
    const auto ds1 = build_dataset(g, 2000.0, 5);
    const auto ds2 = build_dataset(g, 2000.0, 5);
    EXPECT_LT(ds1.scenarios.size(), a / 5);
    EXPECT_GT(ds1.scenarios.size(), a / 20);
    EXPECT_EQ(dataset_hash(ds1), dataset_hash(ds2));
}

TEST(Dataset, GridJsonRoundTrip) {
    auto g = small_grid();
    g.ct_sat_levels = {7.5};
    const auto back = grid_from_json(nlohmann::json::parse(grid_to_json(g).dump()));
    EXPECT_EQ(grid_to_json(back).dump(), grid_to_json(g).dump());
}
