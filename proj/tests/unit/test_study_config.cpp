#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "titecrm/study_config.hpp"

using namespace titecrm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {
fs::path write_temp(const std::string& name, const std::string& content) {
  const auto dir = fs::temp_directory_path() / "titecrm_study_test";
  fs::create_directories(dir);
  std::ofstream(dir / name) << content;
  return dir / name;
}
}  // namespace

TEST_SUITE("study_config") {
  TEST_CASE("presets") {
    const auto names = preset_names();
    CHECK(names.size() == 6);
    const auto p = preset("paper-n24-phi050");
    CHECK(p.design.sample_size == 24);
    CHECK(p.design.halfwidth == 0.10);
    CHECK(p.phis == std::vector<double>{0.5});
    CHECK(p.replicates == 10000);
    CHECK(p.options.weekly_assessment);
    CHECK(p.scenarios.size() == 55);
    CHECK(preset("paper-n18-phi075").design.sample_size == 18);
    CHECK_THROWS_AS(preset("nope"), ValidationError);
  }

  TEST_CASE("shipped preset files match the built-in presets") {
    for (const auto& name : preset_names()) {
      CAPTURE(name);
      const fs::path file = fs::path(TITECRM_SOURCE_DIR) / "presets" / (name + ".yaml");
      REQUIRE(fs::exists(file));
      const auto from_file = load_study_file(file);
      const auto built_in = preset(name);
      CHECK(study_to_json(from_file) == study_to_json(built_in));
    }
  }

  TEST_CASE("flat YAML config") {
    const auto scen = write_temp("extra.yaml", "label: extra\ntox_probs: [0.05, 0.25, 0.5]\nprog_probs: [0.3, 0.3, 0.3]\n");
    const auto cfg = load_study_file(write_temp("study.yaml",
                                                "name: small\n"
                                                "num_doses: 3\n"
                                                "prior_mtd: 2\n"
                                                "sample_size: 12\n"
                                                "strategies: [B, C]\n"
                                                "phi: 0.25\n"
                                                "replicates: 7\n"
                                                "seed: 99\n"
                                                "weekly_assessment: false\n"
                                                "scenarios:\n"
                                                "  - {label: inline, tox_probs: [0.1, 0.25, 0.4], prog_probs: [0, 0.5, 0]}\n"
                                                "scenario_files: [extra.yaml]\n"));
    CHECK(cfg.design.num_doses == 3);
    CHECK(cfg.design.sample_size == 12);
    CHECK(cfg.strategies == std::vector<Strategy>{Strategy::B, Strategy::C});
    CHECK(cfg.phis == std::vector<double>{0.25});
    CHECK(cfg.replicates == 7);
    CHECK(cfg.base_seed == 99);
    CHECK_FALSE(cfg.options.weekly_assessment);
    REQUIRE(cfg.scenarios.size() == 2);
    CHECK(cfg.scenarios[0].label == "inline");
    CHECK(cfg.scenarios[1].label == "extra");
    CHECK(cfg.scenarios[1].true_mtd == 2);
  }

  TEST_CASE("defaults use the scenario library") {
    const auto cfg = load_study_file(write_temp("min.yaml", "replicates: 3\n"));
    CHECK(cfg.scenarios.size() == 55);
    CHECK(cfg.strategies.size() == 3);
  }

  TEST_CASE("manifest round trip reproduces the study") {
    auto cfg = preset("paper-n18-phi025");
    cfg.replicates = 12;
    const json manifest{{"tool", "titecrm"}, {"study", study_to_json(cfg)}};
    const auto path = write_temp("manifest.json", manifest.dump(2));
    const auto back = load_study_file(path);
    CHECK(study_to_json(back) == study_to_json(cfg));
    CHECK(back.scenarios == cfg.scenarios);
    CHECK(back.design == cfg.design);
  }

  TEST_CASE("rejections") {
    CHECK_THROWS_AS(load_study_file(write_temp("typo.yaml", "replicatse: 3\n")), ValidationError);
    CHECK_THROWS_AS(load_study_file(write_temp("neg.yaml", "replicates: 0\n")), ValidationError);
    CHECK_THROWS_AS(load_study_file(write_temp("theta.yaml", "target: 1.2\n")), ValidationError);
    CHECK_THROWS_AS(load_study_file(write_temp("strat.yaml", "strategies: [D]\n")), ValidationError);
    CHECK_THROWS_AS(load_study_file(write_temp("seed.yaml", "seed: -4\n")), ValidationError);
    CHECK_THROWS_AS(load_study_file(write_temp("scen.yaml", "scenarios: everything\n")), ValidationError);
    CHECK_THROWS_AS(load_study_file(write_temp("broken.yaml", "a: [1, 2\n")), ValidationError);
    CHECK_THROWS_AS(load_study_file("/nonexistent/study.yaml"), ValidationError);
    CHECK_THROWS_AS(resolve_study("not-a-preset-or-file"), ValidationError);
  }
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_SUITE("study_config") {
  TEST_CASE("golden tables line up with the scenario library") {
    const auto lib = scenario_library();
    for (const auto& [file, n] : {std::pair{"table_n24_phi050.csv", 24}, std::pair{"table_n18_phi050.csv", 18}}) {
      CAPTURE(file);
      const auto rows = read_csv(fs::path(TITECRM_SOURCE_DIR) / "tables" / file);
      REQUIRE(rows.size() == 91);
      CHECK(rows[0] == std::vector<std::string>{"scenario_label", "tox_row", "tox_probs", "prog_probs", "strategy",
                                                "phi", "N", "PCS", "POS", "mean_added", "pct_added"});
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        REQUIRE(r.size() == 11);
        const auto it = std::find_if(lib.begin(), lib.end(), [&](const ScenarioSpec& s) { return s.label == r[0]; });
        REQUIRE(it != lib.end());
        CHECK(std::stoi(r[1]) == it->tox_row);
        CHECK(std::stoi(r[6]) == n);
        // POS is blank exactly when the top dose is the MTD.
        CHECK(r[8].empty() == (it->true_mtd == 5));
        if (r[4] == "A" || !it->has_progression()) CHECK(std::stod(r[9]) == 0.0);
      }
    }
    const auto rows = read_csv(fs::path(TITECRM_SOURCE_DIR) / "tables" / "table_n24_phi050.csv");
    const auto find = [&](const std::string& label, const std::string& strategy) {
      for (const auto& r : rows)
        if (r[0] == label && r[4] == strategy) return r;
      FAIL("missing row");
      return rows[0];
    };
    const auto c = find("tox3_prog60-60-60-60-60", "C");
    CHECK(c[7] == "61.9");
    CHECK(c[8] == "18.4");
    CHECK(c[9] == "6.5");
    for (const char* s : {"A", "B", "C"}) CHECK(find("tox5_prog00-00-00-00-00", s)[7] == "68.5");
  }
}
