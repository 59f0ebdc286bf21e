#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sdglmc::cli {

/// Everything a command needs. Flags and config-file keys share these names.
struct RunConfig {
  std::string command;

  // paths
  std::string panel, edges, coords, truth, out;
  std::vector<std::string> runs;

  // model selection
  std::string model = "sdglmc";  // or a competitor name (Null, GLMadj, ...)
  std::string variant = "full";
  std::string interaction = "T5";
  std::string label;

  // sampler
  int iterations = 2000;
  int burn_in = 1000;
  int thin = 1;
  int chains = 1;
  std::uint64_t seed = 1;
  int spatial_df = 3;
  int temporal_df = 10;
  int max_pvalue_draws = 2000;

  // competitors
  int df_time = 6;
  double period = 365.0;
  int smooth_df = 15;
  int calendar_start_day = -1;  // Dummy needs a value >= 0

  // simulation
  std::string scenario = "S1";
  bool desk = false;
  std::string effect;  // empty keeps the preset surface
  int replicates = 1;
  bool no_confounder = false;
  long long T = 0, rows = 0, cols = 0;  // 0 keeps the preset
  double tau_x2 = 0.0;
  double expected = 0.0;

  // compare
  bool metrics = false;
};

/// 0 success, 1 validation failure, 2 numerical failure.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

void cmd_simulate(const RunConfig& cfg);
void cmd_fit(const RunConfig& cfg);
void cmd_compare(const RunConfig& cfg);
void cmd_diagnose(const RunConfig& cfg);

}  // namespace sdglmc::cli
