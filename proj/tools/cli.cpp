#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "sdglmc/competitors.hpp"
#include "sdglmc/csv.hpp"
#include "sdglmc/diagnostics.hpp"
#include "sdglmc/error.hpp"
#include "sdglmc/sampler.hpp"
#include "sdglmc/simulator.hpp"

namespace sdglmc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

fs::path make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  require(!ec && fs::is_directory(p), ErrorCode::Io, "cannot create directory " + p.string());
  return p;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + p.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::Io, p.string() + ": " + e.what());
  }
}

MatrixXd table_matrix(const CsvTable& t) {
  MatrixXd m(static_cast<Index>(t.rows.size()), static_cast<Index>(t.header.size()));
  for (size_t r = 0; r < t.rows.size(); ++r)
    for (size_t c = 0; c < t.header.size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = t.rows[r][c];
  return m;
}

std::vector<std::string> indexed(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  for (Index k = 0; k < count; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

/// Long format `unit,time,<names...>` from n x T matrices.
void write_cells(const fs::path& p, const std::vector<std::string>& names,
                 const std::vector<const MatrixXd*>& fields) {
  const Index n = fields.at(0)->rows(), T = fields.at(0)->cols();
  MatrixXd rows(n * T, static_cast<Index>(fields.size()) + 2);
  Index r = 0;
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < T; ++t, ++r) {
      rows(r, 0) = static_cast<double>(i);
      rows(r, 1) = static_cast<double>(t);
      for (size_t k = 0; k < fields.size(); ++k) rows(r, static_cast<Index>(k) + 2) = (*fields[k])(i, t);
    }
  std::vector<std::string> header{"unit", "time"};
  header.insert(header.end(), names.begin(), names.end());
  write_csv(p.string(), header, rows);
}

MatrixXd read_cells(const fs::path& p, const std::string& column, Index n, Index T) {
  const CsvTable t = read_csv(p.string());
  const size_t cu = t.column_index("unit"), ct = t.column_index("time"), cv = t.column_index(column);
  MatrixXd m = MatrixXd::Constant(n, T, kNaN);
  for (const auto& row : t.rows) {
    const auto i = static_cast<Index>(row[cu]), tt = static_cast<Index>(row[ct]);
    require(i >= 0 && i < n && tt >= 0 && tt < T, ErrorCode::InvalidIndex, p.string() + ": cell out of range");
    m(i, tt) = row[cv];
  }
  return m;
}

void write_indexed(const fs::path& p, const std::string& key, const std::vector<std::string>& names,
                   const std::vector<VectorXd>& cols) {
  const Index len = cols.at(0).size();
  MatrixXd m(len, static_cast<Index>(cols.size()) + 1);
  m.col(0) = VectorXd::LinSpaced(len, 0.0, static_cast<double>(len - 1));
  for (size_t k = 0; k < cols.size(); ++k) m.col(static_cast<Index>(k) + 1) = cols[k];
  std::vector<std::string> header{key};
  header.insert(header.end(), names.begin(), names.end());
  write_csv(p.string(), header, m);
}

Index count_units(const std::string& panel) {
  const CsvTable t = read_csv(panel);
  const size_t cu = t.column_index("unit");
  double mx = -1;
  for (const auto& row : t.rows) mx = std::max(mx, row[cu]);
  return static_cast<Index>(mx) + 1;
}

PanelData load_panel(const RunConfig& c) {
  require(!c.panel.empty(), ErrorCode::InvalidConfig, "--panel is required");
  require(!c.edges.empty(), ErrorCode::InvalidConfig, "--edges is required");
  const Index n = count_units(c.panel);
  const SpatialGraph g = read_edge_list(c.edges, n);
  PanelData d = read_panel_csv(c.panel, g);
  if (!c.coords.empty()) d.coords = read_coords_csv(c.coords, n);
  d.validate();
  return d;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return kNaN;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

json config_json(const RunConfig& c) {
  return {{"command", c.command},
          {"panel", c.panel},
          {"edges", c.edges},
          {"coords", c.coords},
          {"truth", c.truth},
          {"out", c.out},
          {"runs", c.runs},
          {"model", c.model},
          {"variant", c.variant},
          {"interaction", c.interaction},
          {"label", c.label},
          {"iterations", c.iterations},
          {"burn-in", c.burn_in},
          {"thin", c.thin},
          {"chains", c.chains},
          {"seed", c.seed},
          {"spatial-df", c.spatial_df},
          {"temporal-df", c.temporal_df},
          {"max-pvalue-draws", c.max_pvalue_draws},
          {"df-time", c.df_time},
          {"period", c.period},
          {"smooth-df", c.smooth_df},
          {"calendar-start-day", c.calendar_start_day},
          {"scenario", c.scenario},
          {"desk", c.desk},
          {"effect", c.effect},
          {"replicates", c.replicates},
          {"no-confounder", c.no_confounder},
          {"T", c.T},
          {"rows", c.rows},
          {"cols", c.cols},
          {"tau-x2", c.tau_x2},
          {"expected", c.expected},
          {"metrics", c.metrics}};
}

std::vector<std::string> command_keys(const std::string& command) {
  if (command == "simulate")
    return {"scenario", "desk", "effect", "replicates", "no-confounder", "T", "rows", "cols", "tau-x2",
            "expected", "seed", "out"};
  if (command == "fit")
    return {"panel", "edges", "coords", "truth", "out", "model", "variant", "interaction", "label",
            "iterations", "burn-in", "thin", "chains", "seed", "spatial-df", "temporal-df",
            "max-pvalue-draws", "df-time", "period", "smooth-df", "calendar-start-day"};
  if (command == "compare") return {"runs", "truth", "metrics", "out"};
  return {"runs", "out"};
}

json command_json(const RunConfig& c) {
  const json all = config_json(c);
  json out = json::object();
  for (const auto& k : command_keys(c.command)) out[k] = all.at(k);
  return out;
}

/// `[command]` section readable by `--config`.
void write_ini(const fs::path& p, const RunConfig& c) {
  const json j = config_json(c);
  const std::vector<std::string> keys = command_keys(c.command);
  std::ofstream out(p);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + p.string());
  out << '[' << c.command << "]\n" << std::setprecision(17);
  for (const auto& k : keys) {
    const json& v = j.at(k);
    if (v.is_string()) {
      if (!v.get<std::string>().empty()) out << k << '=' << std::quoted(v.get<std::string>()) << '\n';
    } else if (v.is_array()) {
      if (v.empty()) continue;
      out << k << "=[";
      for (size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << std::quoted(v[i].get<std::string>());
      out << "]\n";
    } else if (v.is_boolean()) {
      out << k << '=' << (v.get<bool>() ? "true" : "false") << '\n';
    } else if (v.is_number_float()) {
      out << k << '=' << v.get<double>() << '\n';
    } else {
      out << k << '=' << v.dump() << '\n';
    }
  }
}

FitOptions fit_options(const RunConfig& c) {
  FitOptions o;
  o.variant = parse_variant(c.variant);
  o.interaction = parse_interaction(c.interaction);
  o.iterations = c.iterations;
  o.burn_in = c.burn_in;
  o.thin = c.thin;
  o.n_chains = c.chains;
  o.seed = c.seed;
  o.spatial_df = c.spatial_df;
  o.temporal_df = c.temporal_df;
  o.max_pvalue_draws = c.max_pvalue_draws;
  o.validate();
  return o;
}

bool is_sdglmc(const std::string& model) { return model == "sdglmc" || model == "SDGLMC"; }

std::string default_label(const RunConfig& c) {
  if (!c.label.empty()) return c.label;
  if (!is_sdglmc(c.model)) return c.model;
  const Variant v = parse_variant(c.variant);
  if (v == Variant::SingleStep) return "SDGLMC_single";
  if (v == Variant::NoConfounders) return "SDGLMC_noconf";
  return "SDGLMC";
}

json dic_json(const DicResult& d) { return {{"dic", d.dic}, {"d_bar", d.d_bar}, {"p_d", d.p_d}}; }

void write_components(const fs::path& dir, const EffectComponents& e) {
  write_cells(dir / "effect_cells.csv", {"percent"}, {&e.overall});
  write_indexed(dir / "effect_temporal_component.csv", "time", {"percent"}, {e.temporal});
  write_indexed(dir / "effect_spatial_component.csv", "unit", {"percent"}, {e.spatial});
}

EffectComponents read_components(const fs::path& dir, const json& manifest) {
  const Index n = manifest.at("n").get<Index>(), T = manifest.at("T").get<Index>();
  EffectComponents e;
  e.overall = read_cells(dir / "effect_cells.csv", "percent", n, T);
  e.baseline = manifest.at("percent_baseline").get<double>();
  e.temporal = table_matrix(read_csv((dir / "effect_temporal_component.csv").string())).col(1);
  e.spatial = table_matrix(read_csv((dir / "effect_spatial_component.csv").string())).col(1);
  return e;
}

void write_sdglmc_chain(const fs::path& dir, const PosteriorDraws& d) {
  make_dir(dir);
  const Index n = d.spatial0.cols(), T = d.temporal0.cols();
  write_csv((dir / "scalars.csv").string(), d.scalar_names, d.scalars);
  write_csv((dir / "temporal0.csv").string(), indexed("t", T), d.temporal0);
  write_csv((dir / "temporal1.csv").string(), indexed("t", T), d.temporal1);
  write_csv((dir / "spatial0.csv").string(), indexed("u", n), d.spatial0);
  write_csv((dir / "spatial1.csv").string(), indexed("u", n), d.spatial1);
  write_csv((dir / "deviance.csv").string(), {"deviance"}, d.deviance);
  if (d.star_variances.size()) write_csv((dir / "star_variances.csv").string(), indexed("u", n), d.star_variances);
  if (d.interaction_mean.size()) write_cells(dir / "interaction_mean.csv", {"mean"}, {&d.interaction_mean});
  write_cells(dir / "cells.csv",
              {"latent_mean", "mu_mean", "beta1_mean", "percent_mean", "pvalue", "acceptance", "proposal_multiplier"},
              {&d.latent_mean, &d.mu_mean, &d.beta1_mean, &d.percent_overall_mean, &d.pvalues, &d.acceptance,
               &d.proposal_multiplier});
}

void write_competitor_chain(const fs::path& dir, const HierarchicalDraws& d, const CompetitorSpec& spec) {
  make_dir(dir);
  std::vector<std::string> names;
  for (const auto& a : d.a_names) names.push_back("mu_" + a);
  names.emplace_back("tau2");
  MatrixXd sc(d.draws(), static_cast<Index>(names.size()));
  sc.leftCols(d.mu_a.cols()) = d.mu_a;
  sc.col(sc.cols() - 1) = d.tau2;
  write_csv((dir / "scalars.csv").string(), names, sc);
  std::vector<std::string> snames;
  const Index pa = spec.pa();
  for (Index c = 0; c < pa; ++c)
    for (Index r = 0; r < pa; ++r) snames.push_back("s_" + std::to_string(r) + "_" + std::to_string(c));
  write_csv((dir / "sigma_a.csv").string(), snames, d.sigma_a);
  write_csv((dir / "deviance.csv").string(), {"deviance"}, d.deviance);
  write_cells(dir / "cells.csv", {"latent_mean", "mu_mean", "percent_mean", "pvalue", "acceptance"},
              {&d.latent_mean, &d.mu_mean, &d.percent_overall_mean, &d.pvalues, &d.acceptance});
  const EffectPath path = pooled_effect_path(d, spec);
  write_indexed(dir / "pooled_path.csv", "time",
                {"mean", "lower", "upper", "percent_mean", "percent_lower", "percent_upper"},
                {path.mean, path.lower, path.upper, path.percent_mean, path.percent_lower, path.percent_upper});
  std::vector<std::string> anames;
  std::vector<VectorXd> acols;
  for (Index k = 0; k < pa; ++k) {
    anames.push_back("a_" + d.a_names[static_cast<size_t>(k)]);
    acols.emplace_back(d.a_mean.col(k));
  }
  anames.emplace_back("percent_spatial");
  acols.push_back(d.percent_spatial_mean);
  write_indexed(dir / "area_effects.csv", "unit", anames, acols);
}

EffectComponents average(const std::vector<EffectComponents>& v) {
  EffectComponents out = v.at(0);
  for (size_t k = 1; k < v.size(); ++k) {
    out.overall += v[k].overall;
    out.baseline += v[k].baseline;
    out.temporal += v[k].temporal;
    out.spatial += v[k].spatial;
  }
  const double inv = 1.0 / static_cast<double>(v.size());
  out.overall *= inv;
  out.baseline *= inv;
  out.temporal *= inv;
  out.spatial *= inv;
  return out;
}

}  // namespace

void cmd_simulate(const RunConfig& c) {
  require(!c.out.empty(), ErrorCode::InvalidConfig, "--out is required");
  require(c.replicates >= 1, ErrorCode::InvalidConfig, "--replicates must be at least 1");
  ScenarioConfig sc = scenario_preset(c.scenario);
  if (c.desk) sc = desk_scale(sc);
  if (!c.effect.empty()) sc.effect.kind = parse_effect(c.effect);
  if (c.T > 0) sc.T = c.T;
  if (c.rows > 0) sc.rows = c.rows;
  if (c.cols > 0) sc.cols = c.cols;
  if (c.tau_x2 > 0) sc.tau_x2 = c.tau_x2;
  if (c.expected > 0) sc.expected = c.expected;
  sc.include_confounder = !c.no_confounder;
  sc.seed = c.seed;
  sc.validate();

  const fs::path out = make_dir(c.out);
  const SpatialGraph g = sc.lattice();
  const MatrixXd coords = sc.lattice_coords();
  write_edge_list((out / "graph.edges").string(), g);
  write_coords_csv((out / "coords.csv").string(), coords);

  json reps = json::array();
  for (int r = 0; r < c.replicates; ++r) {
    const std::uint64_t seed = derive_seed(c.seed, static_cast<std::uint64_t>(r));
    Rng rng(seed);
    const SimulatedPanel sim = simulate_panel(sc, g, coords, rng);
    char name[32];
    std::snprintf(name, sizeof name, "rep_%03d", r);
    const fs::path dir = make_dir(out / name);
    write_panel_csv((dir / "panel.csv").string(), sim.data);
    write_truth_csv((dir / "truth.csv").string(), sim);
    reps.push_back({{"index", r}, {"seed", seed}, {"panel", (dir / "panel.csv").string()},
                    {"truth", (dir / "truth.csv").string()}});
  }

  json scen = {{"name", sc.name},
               {"rows", sc.rows},
               {"cols", sc.cols},
               {"n", sc.rows * sc.cols},
               {"T", sc.T},
               {"phi_x_S", sc.phi_x_S},
               {"phi_z_S", sc.phi_z_S},
               {"phi_x_T", sc.phi_x_T},
               {"phi_z_T", sc.phi_z_T},
               {"rho_xz", sc.rho_xz},
               {"tau_x2", sc.tau_x2},
               {"tau_z2", sc.tau_z2},
               {"tau_u2", sc.tau_u2},
               {"beta0", sc.beta0},
               {"expected", sc.expected},
               {"include_confounder", sc.include_confounder},
               {"mean_x", {{"level", sc.mean_x.level}, {"sin", sc.mean_x.sin_amp}, {"cos", sc.mean_x.cos_amp}, {"period", sc.mean_x.period}}},
               {"mean_z", {{"level", sc.mean_z.level}, {"sin", sc.mean_z.sin_amp}, {"cos", sc.mean_z.cos_amp}, {"period", sc.mean_z.period}}},
               {"effect", {{"kind", to_string(sc.effect.kind)},
                           {"baseline", sc.effect.baseline},
                           {"temporal_amplitude", sc.effect.temporal_amplitude},
                           {"temporal_period", sc.effect.temporal_period},
                           {"spatial_amplitude", sc.effect.spatial_amplitude},
                           {"cubic", {sc.effect.g0, sc.effect.g1, sc.effect.g2, sc.effect.g3}}}}};
  write_json(out / "manifest.json", {{"command", "simulate"},
                                     {"config", command_json(c)},
                                     {"scenario", scen},
                                     {"edges", (out / "graph.edges").string()},
                                     {"coords", (out / "coords.csv").string()},
                                     {"replicates", reps}});
  write_ini(out / "run.ini", c);
  std::cout << "simulated " << c.replicates << " replicate(s) of " << sc.name << " into " << out.string() << '\n';
}

void cmd_fit(const RunConfig& c) {
  require(!c.out.empty(), ErrorCode::InvalidConfig, "--out is required");
  const PanelData data = load_panel(c);
  const FitOptions opt = fit_options(c);
  const fs::path out = make_dir(c.out);

  json m = {{"command", "fit"}, {"config", command_json(c)}, {"label", default_label(c)},
            {"model", c.model}, {"n", data.n()}, {"T", data.T()}, {"p", data.p()},
            {"truth", c.truth}};
  EffectComponents comp;
  if (is_sdglmc(c.model)) {
    const FitResult fr = fit_sdglmc(data, PriorConfig{}, opt);
    json chains = json::array();
    for (size_t k = 0; k < fr.chains.size(); ++k) {
      const auto& d = fr.chains[k];
      write_sdglmc_chain(out / ("chain_" + std::to_string(k)), d);
      chains.push_back({{"chain", k}, {"draws", d.draws()}, {"seconds", d.seconds},
                        {"mean_acceptance", d.mean_acceptance()}, {"pvalue_draws", d.pvalue_draws}});
    }
    std::vector<std::string> blocks{"gamma2", "gamma3", "gamma4"};
    if (opt.interaction != InteractionType::T1) blocks.insert(blocks.begin(), "gamma1");
    m["model"] = "sdglmc";
    m["variant"] = to_string(opt.variant);
    m["interaction"] = to_string(opt.interaction);
    m["blocks"] = blocks;
    m["scalar_names"] = fr.chains[0].scalar_names;
    m["chains"] = chains;
    m["dic"] = dic_json(dic(fr.chains, data));
    m["pvalue_mean"] = bayes_pvalues(fr.chains).mean;
    comp = components_from(fr.chains);
  } else {
    CompetitorOptions co;
    co.kind = parse_competitor(c.model);
    co.df_time = c.df_time;
    co.period = c.period;
    co.smooth_df = c.smooth_df;
    if (c.calendar_start_day >= 0) co.calendar = SeasonCalendar{c.calendar_start_day};
    std::optional<TrendFit> trend;
    if (co.kind == CompetitorKind::JDZ) trend = overall_temporal_trend(data, c.df_time);
    const CompetitorSpec spec = build_design(data, co, trend ? &*trend : nullptr);
    std::vector<HierarchicalDraws> draws;
    json chains = json::array();
    for (int k = 0; k < opt.n_chains; ++k) {
      draws.push_back(fit_hierarchical(spec, data, opt, k));
      write_competitor_chain(out / ("chain_" + std::to_string(k)), draws.back(), spec);
      chains.push_back({{"chain", k}, {"draws", draws.back().draws()}, {"seconds", draws.back().seconds},
                        {"mean_acceptance", draws.back().acceptance.mean()}});
    }
    Index total = 0;
    for (const auto& d : draws) total += d.deviance.size();
    VectorXd dev(total);
    MatrixXd mu = MatrixXd::Zero(data.n(), data.T());
    MatrixXd pv = MatrixXd::Zero(data.n(), data.T());
    Index off = 0;
    std::vector<EffectComponents> parts;
    for (const auto& d : draws) {
      dev.segment(off, d.deviance.size()) = d.deviance;
      off += d.deviance.size();
      mu += static_cast<double>(d.deviance.size()) * d.mu_mean;
      pv += d.pvalues;
      parts.push_back(components_from(d));
    }
    m["model"] = to_string(co.kind);
    m["a_names"] = spec.a_names;
    m["c_names"] = spec.c_names;
    m["chains"] = chains;
    m["dic"] = dic_json(dic(dev, poisson_deviance(data.Y, mu / static_cast<double>(total))));
    m["pvalue_mean"] = pv.mean() / static_cast<double>(draws.size());
    comp = average(parts);
  }
  m["percent_baseline"] = comp.baseline;
  write_components(out, comp);
  write_json(out / "manifest.json", m);
  write_ini(out / "run.ini", c);
  std::cout << m["label"].get<std::string>() << ": DIC " << m["dic"]["dic"].get<double>()
            << ", baseline percent change " << comp.baseline << '\n';
}

void cmd_compare(const RunConfig& c) {
  require(!c.runs.empty(), ErrorCode::InvalidConfig, "--runs needs at least one fit directory");
  const fs::path out = make_dir(c.out.empty() ? fs::path(".") : fs::path(c.out));
  std::vector<json> manifests;
  for (const auto& r : c.runs) manifests.push_back(read_json(fs::path(r) / "manifest.json"));

  {
    std::ofstream f(out / "dic_table.csv");
    require(static_cast<bool>(f), ErrorCode::Io, "cannot write dic_table.csv");
    f << "run,label,model,interaction,dic,d_bar,p_d\n" << std::setprecision(12);
    size_t best = 0;
    for (size_t k = 0; k < manifests.size(); ++k) {
      const json& m = manifests[k];
      f << c.runs[k] << ',' << m.at("label").get<std::string>() << ',' << m.at("model").get<std::string>()
        << ',' << m.value("interaction", "") << ',' << m["dic"]["dic"].get<double>() << ','
        << m["dic"]["d_bar"].get<double>() << ',' << m["dic"]["p_d"].get<double>() << '\n';
      if (m["dic"]["dic"].get<double>() < manifests[best]["dic"]["dic"].get<double>()) best = k;
    }
    std::cout << std::left << std::setw(18) << "label" << std::setw(6) << "type" << std::right << std::setw(16)
              << "DIC" << std::setw(12) << "p_D" << '\n'
              << std::fixed << std::setprecision(2);
    for (size_t k = 0; k < manifests.size(); ++k) {
      const json& m = manifests[k];
      std::cout << std::left << std::setw(18) << m.at("label").get<std::string>() << std::setw(6)
                << m.value("interaction", "-") << std::right << std::setw(16) << m["dic"]["dic"].get<double>()
                << std::setw(12) << m["dic"]["p_d"].get<double>() << (k == best ? "  *" : "") << '\n';
    }
    std::cout.unsetf(std::ios::floatfield);
  }

  if (!c.metrics) return;
  std::vector<std::string> labels;
  std::map<std::string, std::vector<EffectComponents>> est, truth;
  for (size_t k = 0; k < manifests.size(); ++k) {
    const json& m = manifests[k];
    std::string tpath = c.truth.empty() ? m.value("truth", "") : c.truth;
    require(!tpath.empty(), ErrorCode::MissingTruth,
            "run " + c.runs[k] + " has no truth file; pass --truth or fit with --truth");
    SimulatedPanel sim;
    sim.data.Y.resize(m.at("n").get<Index>(), m.at("T").get<Index>());
    read_truth_csv(tpath, sim);
    const std::string label = m.at("label").get<std::string>();
    if (!est.count(label)) labels.push_back(label);
    est[label].push_back(read_components(c.runs[k], m));
    truth[label].push_back(truth_components(sim.beta1));
  }
  std::vector<MetricReport> reports;
  for (const auto& l : labels) reports.push_back(study_metrics(est[l], truth[l]));
  write_metric_csv((out / "metrics.csv").string(), labels, reports);
  print_metric_table(std::cout, labels, reports);
}

void cmd_diagnose(const RunConfig& c) {
  require(c.runs.size() == 1, ErrorCode::InvalidConfig, "diagnose takes exactly one fit directory");
  const fs::path run = c.runs[0];
  const json m = read_json(run / "manifest.json");
  const fs::path out = make_dir(c.out.empty() ? run : fs::path(c.out));
  const Index n = m.at("n").get<Index>(), T = m.at("T").get<Index>();
  const size_t K = m.at("chains").size();
  const bool sd = m.at("model").get<std::string>() == "sdglmc";

  // R-hat per scalar column
  std::vector<MatrixXd> scalars;
  std::vector<std::string> names;
  for (size_t k = 0; k < K; ++k) {
    const CsvTable t = read_csv((run / ("chain_" + std::to_string(k)) / "scalars.csv").string());
    names = t.header;
    scalars.push_back(table_matrix(t));
  }
  std::vector<std::pair<std::string, double>> rhat;
  Index L = scalars[0].rows();
  for (const auto& s : scalars) L = std::min(L, s.rows());
  const auto rhat_of = [&](const std::vector<MatrixXd>& mats, Index col) {
    if (K < 2 || L < 2) return kNaN;
    std::vector<VectorXd> seqs;
    for (const auto& s : mats) seqs.push_back(s.col(col).head(L));
    return gelman_rubin(seqs);
  };
  for (size_t j = 0; j < names.size(); ++j) rhat.emplace_back(names[j], rhat_of(scalars, static_cast<Index>(j)));

  std::vector<MatrixXd> t1, s1;
  if (sd) {
    for (size_t k = 0; k < K; ++k) {
      const fs::path cd = run / ("chain_" + std::to_string(k));
      t1.push_back(table_matrix(read_csv((cd / "temporal1.csv").string())));
      s1.push_back(table_matrix(read_csv((cd / "spatial1.csv").string())));
    }
    for (const auto& [label, mats] : {std::pair{"max_temporal1", &t1}, std::pair{"max_spatial1", &s1}}) {
      double worst = K < 2 ? kNaN : 0.0;
      for (Index j = 0; K >= 2 && j < (*mats)[0].cols(); ++j) worst = std::max(worst, rhat_of(*mats, j));
      rhat.emplace_back(label, worst);
    }
  }
  {
    std::ofstream f(out / "rhat.csv");
    require(static_cast<bool>(f), ErrorCode::Io, "cannot write rhat.csv");
    f << "name,rhat\n" << std::setprecision(10);
    for (const auto& [name, v] : rhat) f << name << ',' << v << '\n';
  }

  // posterior predictive p-values, averaged over chains
  MatrixXd pv = MatrixXd::Zero(n, T);
  for (size_t k = 0; k < K; ++k)
    pv += read_cells(run / ("chain_" + std::to_string(k)) / "cells.csv", "pvalue", n, T);
  pv /= static_cast<double>(K);
  write_cells(out / "pvalues.csv", {"p"}, {&pv});

  // effect paths: component and baseline + component, mean and 95% interval
  const auto pc = [](double b) { return percent_change(b); };
  const std::vector<std::string> cols{"component_mean", "component_lower", "component_upper",
                                      "total_mean", "total_lower", "total_upper"};
  if (sd) {
    std::vector<double> base;
    const auto it = std::find(names.begin(), names.end(), "baseline1");
    const auto bcol = static_cast<Index>(it - names.begin());
    for (const auto& s : scalars)
      for (Index r = 0; r < s.rows(); ++r) base.push_back(s(r, bcol));
    const auto path = [&](const std::vector<MatrixXd>& mats, Index len) {
      std::vector<VectorXd> res(6, VectorXd(len));
      for (Index j = 0; j < len; ++j) {
        std::vector<double> comp, tot;
        size_t b = 0;
        for (const auto& mat : mats)
          for (Index r = 0; r < mat.rows(); ++r, ++b) {
            comp.push_back(pc(mat(r, j)));
            tot.push_back(pc(base[b] + mat(r, j)));
          }
        const auto mean = [](const std::vector<double>& v) {
          double s = 0;
          for (double x : v) s += x;
          return s / static_cast<double>(v.size());
        };
        res[0][j] = mean(comp);
        res[1][j] = quantile(comp, 0.025);
        res[2][j] = quantile(comp, 0.975);
        res[3][j] = mean(tot);
        res[4][j] = quantile(tot, 0.025);
        res[5][j] = quantile(tot, 0.975);
      }
      return res;
    };
    write_indexed(out / "effect_temporal.csv", "time", cols, path(t1, T));
    write_indexed(out / "effect_spatial.csv", "unit", cols, path(s1, n));
  } else {
    MatrixXd pooled = MatrixXd::Zero(T, 7);
    MatrixXd area = MatrixXd::Zero(n, 0);
    for (size_t k = 0; k < K; ++k) {
      const fs::path cd = run / ("chain_" + std::to_string(k));
      pooled += table_matrix(read_csv((cd / "pooled_path.csv").string()));
      const MatrixXd a = table_matrix(read_csv((cd / "area_effects.csv").string()));
      area = area.size() ? MatrixXd(area + a) : a;
    }
    pooled /= static_cast<double>(K);
    area /= static_cast<double>(K);
    const double global = pooled.col(4).mean();
    std::vector<VectorXd> tcols{pooled.col(4).array() - global, pooled.col(5).array() - global,
                                pooled.col(6).array() - global, pooled.col(4), pooled.col(5), pooled.col(6)};
    write_indexed(out / "effect_temporal.csv", "time", cols, tcols);
    const VectorXd sp = area.col(area.cols() - 1), nan = VectorXd::Constant(n, kNaN);
    write_indexed(out / "effect_spatial.csv", "unit", cols,
                  {sp, nan, nan, (sp.array() + global).matrix(), nan, nan});
  }

  double rmax = kNaN;
  for (const auto& r : rhat)
    if (std::isfinite(r.second)) rmax = std::isfinite(rmax) ? std::max(rmax, r.second) : r.second;
  write_json(out / "diagnostics.json", {{"run", run.string()},
                                        {"chains", K},
                                        {"pvalue_mean", pv.mean()},
                                        {"rhat_max", std::isfinite(rmax) ? json(rmax) : json(nullptr)},
                                        {"dic", m.at("dic")}});
  std::cout << "chains " << K << ", mean p-value " << pv.mean();
  if (std::isfinite(rmax)) std::cout << ", max R-hat " << rmax;
  std::cout << '\n';
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Spatio-temporal dynamic Poisson regression with confounding adjustment"};
  app.require_subcommand(1);
  RunConfig c;

  auto* sim = app.add_subcommand("simulate", "Generate synthetic panels and truth files");
  auto* fit = app.add_subcommand("fit", "Fit SDGLMC or a competitor to a panel");
  auto* cmp = app.add_subcommand("compare", "DIC and error-metric tables across fits");
  auto* dia = app.add_subcommand("diagnose", "R-hat, p-values and effect paths of one fit");
  app.set_config("--config", "", "INI file; options go under a [command] section");
  for (auto* s : {sim, fit, cmp, dia}) s->fallthrough();

  sim->add_option("--scenario", c.scenario, "S1, S2 or S3")->capture_default_str();
  sim->add_flag("--desk", c.desk, "8 x 8 lattice, T = 200 desk-scale settings");
  sim->add_option("--effect", c.effect, "constant, periodic or cubic");
  sim->add_option("--replicates", c.replicates)->capture_default_str();
  sim->add_flag("--no-confounder", c.no_confounder, "set Z = 0");
  sim->add_option("--T", c.T);
  sim->add_option("--rows", c.rows);
  sim->add_option("--cols", c.cols);
  sim->add_option("--tau-x2", c.tau_x2);
  sim->add_option("--expected", c.expected);

  fit->add_option("--panel", c.panel, "panel CSV")->check(CLI::ExistingFile);
  fit->add_option("--edges", c.edges, "edge list")->check(CLI::ExistingFile);
  fit->add_option("--coords", c.coords, "centroid CSV")->check(CLI::ExistingFile);
  fit->add_option("--truth", c.truth, "truth CSV recorded for compare --metrics")->check(CLI::ExistingFile);
  fit->add_option("--model", c.model, "sdglmc or Null, GLMadj, Dummy, Periodic, JDZ, GLMint, GLMintSmooth")
      ->capture_default_str();
  fit->add_option("--variant", c.variant, "full, single_step or no_confounders")->capture_default_str();
  fit->add_option("--interaction", c.interaction, "T1 to T5")->capture_default_str();
  fit->add_option("--label", c.label, "row name in comparison tables");
  fit->add_option("--iterations", c.iterations)->capture_default_str();
  fit->add_option("--burn-in", c.burn_in)->capture_default_str();
  fit->add_option("--thin", c.thin)->capture_default_str();
  fit->add_option("--chains", c.chains)->capture_default_str();
  fit->add_option("--spatial-df", c.spatial_df)->capture_default_str();
  fit->add_option("--temporal-df", c.temporal_df)->capture_default_str();
  fit->add_option("--max-pvalue-draws", c.max_pvalue_draws)->capture_default_str();
  fit->add_option("--df-time", c.df_time)->capture_default_str();
  fit->add_option("--period", c.period)->capture_default_str();
  fit->add_option("--smooth-df", c.smooth_df)->capture_default_str();
  fit->add_option("--calendar-start-day", c.calendar_start_day, "day of year of t = 0 (Dummy)");

  for (auto* s : {sim, fit}) {
    s->add_option("--seed", c.seed)->capture_default_str();
    s->add_option("--out", c.out, "output directory");
  }
  for (auto* s : {cmp, dia}) {
    s->add_option("--runs", c.runs, "fit output directories")->required();
    s->add_option("--out", c.out, "output directory");
  }
  cmp->add_option("--truth", c.truth, "truth CSV shared by every run")->check(CLI::ExistingFile);
  cmp->add_flag("--metrics", c.metrics, "error metrics against truth files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      c.command = "simulate";
      cmd_simulate(c);
    } else if (fit->parsed()) {
      c.command = "fit";
      cmd_fit(c);
    } else if (cmp->parsed()) {
      c.command = "compare";
      cmd_compare(c);
    } else {
      c.command = "diagnose";
      cmd_diagnose(c);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return is_numerical(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sdglmc::cli
