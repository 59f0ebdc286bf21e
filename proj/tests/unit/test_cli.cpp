#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "sdglmc/csv.hpp"
#include "sdglmc/model_core.hpp"
#include "sdglmc/random.hpp"

using namespace sdglmc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// data lines of a CSV, header dropped
std::vector<std::vector<std::string>> text_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / "sdglmc_cli_test";
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& s) const { return (root / s).string(); }
};

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "sdglmc");
  return cli::run(args);
}

std::vector<std::string> fit_args(const Workspace& w, const std::string& out,
                                  std::vector<std::string> extra = {}) {
  std::vector<std::string> a{"fit", "--panel", w / "sim/rep_000/panel.csv", "--edges", w / "sim/graph.edges",
                             "--coords", w / "sim/coords.csv", "--truth", w / "sim/rep_000/truth.csv",
                             "--iterations", "120", "--burn-in", "60", "--out", w / out};
  if (std::find(extra.begin(), extra.end(), "--interaction") == extra.end()) extra.insert(extra.end(), {"--interaction", "T2"});
  a.insert(a.end(), extra.begin(), extra.end());
  return a;
}

}  // namespace

TEST_CASE("command line workflow") {
  Workspace w;
  REQUIRE(run({"simulate", "--scenario", "S1", "--desk", "--rows", "3", "--cols", "3", "--T", "30",
               "--replicates", "2", "--seed", "9", "--out", w / "sim"}) == 0);

  SUBCASE("simulate writes one panel and one truth file per replicate") {
    for (const char* r : {"rep_000", "rep_001"}) {
      CHECK(fs::exists(w.root / "sim" / r / "panel.csv"));
      CHECK(fs::exists(w.root / "sim" / r / "truth.csv"));
    }
    CHECK(!fs::exists(w.root / "sim" / "rep_002"));
    const auto m = manifest(w.root / "sim");
    CHECK(m["scenario"]["phi_x_S"] == 0.2);
    CHECK(m["scenario"]["phi_z_S"] == 0.98);
    CHECK(m["scenario"]["phi_x_T"] == 0.2);
    CHECK(m["scenario"]["phi_z_T"] == 0.98);
    CHECK(m["replicates"].size() == 2);
    CHECK(m["replicates"][0]["seed"] != m["replicates"][1]["seed"]);
    CHECK(slurp(w.root / "sim/rep_000/panel.csv") != slurp(w.root / "sim/rep_001/panel.csv"));
  }

  SUBCASE("T1 fit has no interaction block") {
    REQUIRE(run(fit_args(w, "t1", {"--interaction", "T1"})) == 0);
    CHECK(!fs::exists(w.root / "t1/chain_0/interaction_mean.csv"));
    const auto m = manifest(w.root / "t1");
    for (const auto& b : m["blocks"]) CHECK(b != "gamma1");
    REQUIRE(run(fit_args(w, "t5", {"--interaction", "T5"})) == 0);
    CHECK(fs::exists(w.root / "t5/chain_0/interaction_mean.csv"));
    CHECK(fs::exists(w.root / "t5/chain_0/star_variances.csv"));
  }

  SUBCASE("same seed gives identical draw files, and run.ini reproduces them") {
    REQUIRE(run(fit_args(w, "a", {"--seed", "4"})) == 0);
    REQUIRE(run(fit_args(w, "b", {"--seed", "4"})) == 0);
    REQUIRE(run({"fit", "--config", w / "a/run.ini", "--out", w / "c"}) == 0);
    for (const char* f : {"chain_0/scalars.csv", "chain_0/temporal1.csv", "chain_0/cells.csv", "effect_cells.csv"}) {
      CAPTURE(f);
      CHECK(slurp(w.root / "a" / f) == slurp(w.root / "b" / f));
      CHECK(slurp(w.root / "a" / f) == slurp(w.root / "c" / f));
    }
    REQUIRE(run(fit_args(w, "d", {"--seed", "5"})) == 0);
    CHECK(slurp(w.root / "a/chain_0/scalars.csv") != slurp(w.root / "d/chain_0/scalars.csv"));
  }

  SUBCASE("compare: one-row table, equal DIC for identical fits, missing truth") {
    REQUIRE(run(fit_args(w, "a", {"--seed", "4"})) == 0);
    REQUIRE(run({"compare", "--runs", w / "a", "--out", w / "cmp1"}) == 0);
    CHECK(text_rows(w.root / "cmp1/dic_table.csv").size() == 1);
    REQUIRE(run(fit_args(w, "b", {"--seed", "4"})) == 0);
    REQUIRE(run({"compare", "--runs", w / "a", w / "b", "--out", w / "cmp2", "--metrics"}) == 0);
    const auto two = text_rows(w.root / "cmp2/dic_table.csv");
    REQUIRE(two.size() == 2);
    CHECK(two[0][4] == two[1][4]);
    CHECK(fs::exists(w.root / "cmp2/metrics.csv"));

    std::vector<std::string> no_truth{"fit", "--panel", w / "sim/rep_000/panel.csv", "--edges",
                                      w / "sim/graph.edges", "--model", "Null", "--iterations", "60",
                                      "--burn-in", "30", "--out", w / "nt"};
    REQUIRE(run(no_truth) == 0);
    CHECK(run({"compare", "--runs", w / "nt", "--metrics", "--out", w / "cmp3"}) == 1);
    CHECK(run({"compare", "--runs", w / "nt", "--metrics", "--truth", w / "sim/rep_000/truth.csv", "--out",
               w / "cmp3"}) == 0);
  }

  SUBCASE("diagnose: R-hat from two chains, effect paths by time and unit") {
    REQUIRE(run(fit_args(w, "two", {"--chains", "2"})) == 0);
    REQUIRE(run({"diagnose", "--runs", w / "two"}) == 0);
    const auto rh = text_rows(w.root / "two/rhat.csv");
    REQUIRE(!rh.empty());
    for (const auto& row : rh) CHECK(std::isfinite(std::stod(row.at(1))));
    const CsvTable et = read_csv(w / "two/effect_temporal.csv");
    CHECK(et.rows.size() == 30);
    const CsvTable es = read_csv(w / "two/effect_spatial.csv");
    REQUIRE(es.rows.size() == 9);
    for (size_t i = 0; i < es.rows.size(); ++i) CHECK(es.rows[i][es.column_index("unit")] == double(i));
    for (const auto& row : et.rows) {
      CHECK(row[et.column_index("total_lower")] <= row[et.column_index("total_mean")]);
      CHECK(row[et.column_index("total_mean")] <= row[et.column_index("total_upper")]);
    }
    const auto d = nlohmann::json::parse(slurp(w.root / "two/diagnostics.json"));
    CHECK(d["pvalue_mean"].get<double>() > 0.0);
    CHECK(d["pvalue_mean"].get<double>() < 1.0);
  }

  SUBCASE("competitor fits") {
    for (const char* k : {"Null", "GLMadj", "Periodic", "JDZ", "GLMint", "GLMintSmooth"}) {
      CAPTURE(k);
      CHECK(run(fit_args(w, std::string("c_") + k, {"--model", k})) == 0);
      CHECK(fs::exists(w.root / (std::string("c_") + k) / "chain_0/pooled_path.csv"));
    }
    CHECK(run(fit_args(w, "dummy", {"--model", "Dummy"})) == 1);
    CHECK(run(fit_args(w, "dummy", {"--model", "Dummy", "--calendar-start-day", "0"})) == 0);
    REQUIRE(run({"diagnose", "--runs", w / "c_Null"}) == 0);
    CHECK(read_csv(w / "c_Null/effect_temporal.csv").rows.size() == 30);
  }
}

TEST_CASE("confounder columns follow the variant") {
  Workspace w;
  Rng rng(3);
  PanelData d;
  d.graph = make_lattice(2, 3);
  const Index n = 6, T = 25;
  d.offset = MatrixXd::Constant(n, T, std::log(40.0));
  d.X.resize(n, T);
  d.M.assign(1, MatrixXd(n, T));
  d.Y.resize(n, T);
  for (Index k = 0; k < d.Y.size(); ++k) {
    d.X.data()[k] = std_normal(rng);
    d.M[0].data()[k] = std_normal(rng);
    d.Y.data()[k] = draw_poisson(40.0, rng);
  }
  write_panel_csv(w / "panel.csv", d);
  write_edge_list(w / "graph.edges", d.graph);
  const auto fit = [&](const char* variant, const char* out) {
    return run({"fit", "--panel", w / "panel.csv", "--edges", w / "graph.edges", "--variant", variant,
                "--interaction", "T1", "--iterations", "60", "--burn-in", "30", "--out", w / out});
  };
  REQUIRE(fit("full", "full") == 0);
  REQUIRE(fit("no_confounders", "noconf") == 0);
  CHECK(read_csv(w / "full/chain_0/scalars.csv").find_column("alpha1").has_value());
  CHECK(!read_csv(w / "noconf/chain_0/scalars.csv").find_column("alpha1").has_value());
  CHECK(manifest(w.root / "noconf")["label"] == "SDGLMC_noconf");
}

TEST_CASE("exit codes") {
  Workspace w;
  CHECK(run({}) == 1);
  CHECK(run({"fit", "--panel", w / "missing.csv"}) == 1);
  CHECK(run({"fit", "--iterations", "abc"}) == 1);
  CHECK(run({"simulate", "--scenario", "S9", "--out", w / "x"}) == 1);
  // log(1e20) > 30 trips the overflow guard, a numerical failure
  CHECK(run({"simulate", "--rows", "2", "--cols", "2", "--T", "5", "--expected", "1e20", "--out", w / "y"}) == 2);
  CHECK(run({"simulate", "--help"}) == 0);
}
