// mralab: command line front end for the mra library.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mra/beltway.hpp"
#include "mra/dataset_io.hpp"
#include "mra/experiments.hpp"
#include "mra/gensig.hpp"
#include "mra/model.hpp"
#include "mra/parallel.hpp"
#include "mra/probes.hpp"
#include "mra/signal_io.hpp"
#include "mra/stats.hpp"

namespace {

using mra::Index;
using nlohmann::json;

// A signal given inline as a JSON object or as a path to one.
mra::Signal load_signal(const json& j) {
  if (j.is_string()) return mra::read_signal(j.get<std::string>());
  return mra::signal_from_json(j);
}

// Power spectrum from "index,value" CSV rows (frequency in any representative)
// or from a signal JSON indexed by frequency.
mra::Signal load_power(const std::string& path) {
  if (!path.ends_with(".csv")) return mra::read_signal(path);
  std::ifstream in(path);
  if (!in) throw mra::Error("cannot read " + path);
  std::vector<std::pair<Index, double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw mra::InvalidArgument("bad power spectrum row: " + line);
    try {
      rows.emplace_back(std::stol(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      if (rows.empty()) continue;  // header
      throw mra::InvalidArgument("bad power spectrum row: " + line);
    }
  }
  if (rows.empty()) throw mra::InvalidArgument("empty power spectrum");
  mra::Signal p(rows.size());
  for (const auto& [xi, v] : rows) p(xi) = v;
  return p;
}

mra::DiluteClassSpec class_from_json(const json& j) {
  mra::DiluteClassSpec spec;
  spec.length = j.at("L").get<std::size_t>();
  spec.sparsity = j.at("s").get<std::size_t>();
  spec.floor_m = j.value("m", 1.0);
  spec.cap_M = j.value("M", spec.floor_m);
  spec.slack = j.value("epsilon", 0.0);
  return spec;
}

// Adds the config hash, seed and verdict, then prints.
int emit(json report, const json& config, std::uint64_t seed, bool pass,
         const std::string& out_path) {
  report["config_hash"] = mra::config_hash(config);
  report["seed"] = seed;
  report["pass"] = pass;
  if (out_path.empty()) std::cout << report.dump(2) << '\n';
  else mra::write_json(out_path, report);
  return pass ? 0 : 1;
}

int probe(const std::string& which, const std::string& config_path, const std::string& out) {
  const json cfg = mra::read_json(config_path);
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
  mra::Rng gen = mra::make_rng(seed, 0x5167);

  if (which == "dilute-lb") {
    const auto spec = class_from_json(cfg.at("class"));
    const mra::Signal theta0 =
        cfg.contains("signal") ? load_signal(cfg["signal"]) : mra::gen_collision_free(spec, gen);
    mra::DiluteCheckOptions opt;
    opt.trials = cfg.value("trials", opt.trials);
    if (cfg.contains("h_norm")) opt.h_norm = cfg["h_norm"].get<double>();
    opt.slack = cfg.value("slack", opt.slack);
    opt.enforce_class = cfg.value("enforce_class", opt.enforce_class);
    const auto rep = mra::dilute_lower_bound_check(theta0, spec, seed, opt);
    json j = rep.to_json();
    j["signal"] = mra::signal_to_json(theta0);
    return emit(j, cfg, seed, rep.pass, out);
  }
  if (which == "adversarial") {
    mra::Signal theta0;
    if (cfg.contains("signal")) {
      theta0 = load_signal(cfg["signal"]);
    } else {
      const auto L = cfg.at("L").get<std::size_t>();
      const auto band = cfg.value("band", std::vector<double>{1.0, 2.0});
      std::uniform_real_distribution<double> mag(band.at(0), band.at(1));
      theta0 = mra::Signal(L);
      for (double& v : theta0.values()) v = mag(gen);
    }
    const auto dir = mra::adversarial_direction(theta0, cfg.value("delta", 1e-3));
    const auto check = mra::check_adversarial(theta0, dir.h);
    json j = check.to_json();
    j["probe"] = "adversarial";
    j["h"] = mra::signal_to_json(dir.h);
    j["skipped"] = dir.skipped;
    j["warnings"] = dir.warnings;
    return emit(j, cfg, seed, check.pass, out);
  }
  if (which == "uup") {
    const auto L = cfg.at("L").get<std::size_t>();
    const auto lambda = cfg.value("full", false)
                            ? mra::uup_sample(L, static_cast<double>(L), seed)
                            : mra::uup_sample(L, cfg.at("a").get<double>(), seed);
    const auto r = mra::uup_check(lambda, cfg.at("s").get<std::size_t>(),
                                  cfg.value("trials", std::size_t{10000}), seed + 1);
    const double c1_min = cfg.value("c1_min", 0.05), c2_max = cfg.value("c2_max", 20.0);
    json j = {{"probe", "uup"},       {"L", L},           {"lambda_size", lambda.members.size()},
              {"c1_hat", r.c1_hat},   {"c2_hat", r.c2_hat}, {"c1_min", c1_min},
              {"c2_max", c2_max}};
    return emit(j, cfg, seed, r.c1_hat >= c1_min && r.c2_hat <= c2_max, out);
  }
  if (which == "lambda" || which == "moderate-lb") {
    mra::Signal theta;
    std::size_t s = 0;
    if (cfg.contains("signal")) {
      theta = load_signal(cfg["signal"]);
      s = cfg.value("s", theta.support().size());
    } else {
      const auto L = cfg.at("L").get<std::size_t>();
      s = cfg.at("s").get<std::size_t>();
      theta = mra::gen_symm_bernoulli_gaussian(L, static_cast<double>(s), cfg.value("zeta", 1.0), gen)
                  .signal;
    }
    mra::LambdaOptions lo;
    lo.floor_c = cfg.value("floor_c", lo.floor_c);
    lo.tau = cfg.value("tau", lo.tau);
    lo.uup_trials = cfg.value("uup_trials", lo.uup_trials);
    lo.c1_min = cfg.value("c1_min", lo.c1_min);
    lo.c2_max = cfg.value("c2_max", lo.c2_max);
    const double a = cfg.value("a", static_cast<double>(theta.size()) / 2.0);
    mra::FrequencySet lambda;
    try {
      lambda = mra::lambda_construct(theta, s, a, cfg.value("max_tries", std::size_t{50}), seed, lo);
    } catch (const mra::LambdaConstructionError& e) {
      json j = {{"probe", which},
                {"error", e.what()},
                {"best", e.best.to_json()},
                {"floor_failures", e.floor_failures},
                {"uup_failures", e.uup_failures}};
      return emit(j, cfg, seed, false, out);
    }
    if (which == "lambda") {
      json j = lambda.to_json();
      j["probe"] = "lambda";
      j["floor"] = mra::lambda_floor(s, lo);
      return emit(j, cfg, seed, true, out);
    }
    mra::ModerateCheckOptions mo;
    mo.slack = cfg.value("slack", mo.slack);
    const auto rep = mra::moderate_curvature_check(
        theta, lambda, cfg.value("trials", std::size_t{200}), cfg.value("h_norm", 1e-3), seed + 1, mo);
    json j = rep.to_json();
    j["lambda"] = lambda.to_json();
    return emit(j, cfg, seed, rep.pass && rep.chain_holds, out);
  }
  if (which == "sandwich") {
    const auto sigma = cfg.at("sigma").get<std::vector<double>>();
    const auto rep = mra::moment_sandwich_probe(load_signal(cfg.at("theta")), load_signal(cfg.at("phi")),
                                                sigma, cfg.value("n_mc", std::size_t{100000}), seed);
    return emit(rep.to_json(), cfg, seed, rep.pass, out);
  }
  throw mra::InvalidArgument("unknown probe '" + which + "'");
}

int scan(const std::string& scenario_family, const std::string& config_path, const std::string& csv,
         const std::string& summary) {
  auto cfg = mra::ExperimentConfig::from_json(mra::read_json(config_path));
  if (!csv.empty()) cfg.csv_path = csv;
  if (!summary.empty()) cfg.summary_path = summary;
  const bool ok = (scenario_family == "rate-scan" &&
                   (cfg.scenario == "dilute-rate" || cfg.scenario == "fullsupport-rate")) ||
                  (scenario_family == "sparsity-scan" && cfg.scenario == "sparsity-scan") ||
                  (scenario_family == "kl-scan" && cfg.scenario == "kl-curvature-scan");
  if (!ok) throw mra::InvalidArgument(scenario_family + " cannot run scenario " + cfg.scenario);
  const auto result = mra::run_experiment(cfg);
  result.save();
  std::cout << result.summary().dump(2) << '\n';
  return result.pass ? 0 : 1;
}

mra::GroupKind parse_group(const std::string& g) {
  if (g == "cyclic") return mra::GroupKind::cyclic;
  if (g == "dihedral") return mra::GroupKind::dihedral;
  throw mra::InvalidArgument("group must be cyclic or dihedral");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-reference alignment toolkit"};
  app.require_subcommand(1);
  std::size_t workers = 0;
  app.add_option("--workers", workers, "Worker threads (0 = hardware concurrency)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw observations y = G theta + sigma z");
  std::string sim_signal, sim_out, sim_group = "cyclic";
  double sim_sigma = 1.0;
  std::size_t sim_n = 0, sim_length = 0;
  std::uint64_t sim_seed = 0;
  sim->add_option("--signal", sim_signal, "Signal JSON")->required();
  sim->add_option("--L", sim_length, "Expected signal length (checked)");
  sim->add_option("--sigma", sim_sigma)->required();
  sim->add_option("-n,--count", sim_n)->required();
  sim->add_option("--seed", sim_seed);
  sim->add_option("--group", sim_group);
  sim->add_option("-o,--out", sim_out, "Output dataset (.csv for text, binary otherwise)")->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "Restricted maximum likelihood by EM");
  std::string est_data, est_init, est_class, est_out, est_diag, est_group = "cyclic",
      est_policy = "user";
  std::vector<double> est_band;
  std::size_t est_s = 0, est_iters = 1000;
  double est_tol = 1e-8;
  bool est_accel = false;
  est->add_option("--data", est_data)->required();
  est->add_option("--init", est_init, "Initial signal JSON");
  est->add_option("--init-policy", est_policy, "user | power-spectrum");
  est->add_option("--class", est_class, "Restricted class JSON");
  est->add_option("--s", est_s, "Sparsity hint for power-spectrum init");
  est->add_option("--band", est_band, "Magnitude band m M for power-spectrum init")->expected(2);
  est->add_option("--max-iters", est_iters);
  est->add_option("--tol", est_tol);
  est->add_flag("--accelerate", est_accel);
  est->add_option("--group", est_group);
  est->add_option("-o,--out", est_out, "Estimate JSON")->required();
  est->add_option("--diagnostics", est_diag, "Diagnostics JSON (stdout when omitted)");

  // beltway-solve
  auto* bw = app.add_subcommand("beltway-solve", "Supports with a given difference multiset");
  std::string bw_profile;
  std::size_t bw_s = 0, bw_budget = 200'000'000;
  bw->add_option("--profile", bw_profile, "Difference profile JSON")->required();
  bw->add_option("--s", bw_s)->required();
  bw->add_option("--node-budget", bw_budget);

  // pr-recover
  auto* pr = app.add_subcommand("pr-recover", "Dilute signals from a power spectrum");
  std::string pr_power, pr_out;
  std::size_t pr_s = 0;
  double pr_m = 1.0, pr_M = 1.0;
  std::optional<double> pr_threshold;
  pr->add_option("--power", pr_power, "Power spectrum: index,value CSV or signal JSON")->required();
  pr->add_option("--s", pr_s)->required();
  pr->add_option("--m", pr_m);
  pr->add_option("--M", pr_M);
  pr->add_option("--threshold", pr_threshold);
  pr->add_option("-o,--out", pr_out);

  // probe
  auto* pb = app.add_subcommand("probe", "Curvature and frequency-set probes");
  std::string pb_which, pb_config, pb_out;
  pb->add_option("which", pb_which, "dilute-lb | adversarial | uup | lambda | moderate-lb | sandwich")
      ->required()
      ->check(CLI::IsMember({"dilute-lb", "adversarial", "uup", "lambda", "moderate-lb", "sandwich"}));
  pb->add_option("--config", pb_config)->required();
  pb->add_option("-o,--out", pb_out);

  // scans
  std::string sc_config, sc_csv, sc_summary;
  std::vector<CLI::App*> scans;
  for (const char* name : {"rate-scan", "sparsity-scan", "kl-scan"}) {
    auto* sc = app.add_subcommand(name, "Run an experiment config");
    sc->add_option("--config", sc_config)->required();
    sc->add_option("--csv", sc_csv);
    sc->add_option("--summary", sc_summary);
    scans.push_back(sc);
  }

  CLI11_PARSE(app, argc, argv);
  if (workers > 0) mra::set_worker_count(workers);

  try {
    if (*sim) {
      const mra::Signal theta = mra::read_signal(sim_signal);
      if (sim_length != 0 && sim_length != theta.size()) throw mra::LengthMismatch(sim_length, theta.size());
      const mra::MraConfig cfg{theta.size(), sim_sigma, parse_group(sim_group)};
      mra::Rng rng = mra::make_rng(sim_seed);
      mra::write_dataset(sim_out, mra::simulate(theta, cfg, sim_n, rng));
      return 0;
    }
    if (*est) {
      const mra::Dataset data = mra::read_dataset(est_data, parse_group(est_group));
      mra::RestrictedClass cls =
          est_class.empty() ? mra::RestrictedClass::none() : mra::RestrictedClass::from_json(mra::read_json(est_class));
      mra::Signal init;
      if (est_policy == "power-spectrum") {
        if (est_s == 0 || est_band.size() != 2)
          throw mra::InvalidArgument("power-spectrum init needs --s and --band");
        mra::DiluteClassSpec spec{data.config.length, est_s, est_band[0], est_band[1], 0.0};
        init = mra::init_from_power_spectrum(data, spec);
        if (est_class.empty()) cls = mra::RestrictedClass::magnitude_band(est_band[0], est_band[1], init.support());
      } else {
        if (est_init.empty()) throw mra::InvalidArgument("--init is required with --init-policy user");
        init = mra::read_signal(est_init);
      }
      mra::EmOptions opt;
      opt.max_iters = est_iters;
      opt.tol = est_tol;
      opt.accelerate = est_accel;
      opt.init_policy = est_policy;
      const auto result = mra::em_restricted_mle(data, cls, init, opt);
      mra::write_signal(est_out, result.estimate);
      json diag = result.diagnostics.to_json();
      diag["class"] = cls.to_json();
      if (est_diag.empty()) std::cout << diag.dump(2) << '\n';
      else mra::write_json(est_diag, diag);
      return 0;
    }
    if (*bw) {
      const auto profile = mra::DifferenceProfile::from_json(mra::read_json(bw_profile));
      mra::BeltwayStats stats;
      const auto sols = mra::solve_beltway(profile, bw_s, {bw_budget}, &stats);
      std::cout << json{{"solutions", sols}, {"nodes", stats.nodes}}.dump(2) << '\n';
      return 0;
    }
    if (*pr) {
      mra::DiluteClassSpec hint{0, pr_s, pr_m, pr_M, 0.0};
      const mra::Signal power = load_power(pr_power);
      hint.length = power.size();
      mra::PhaseRetrievalOptions opt;
      opt.threshold = pr_threshold;
      json out = json::array();
      for (const auto& c : mra::recover_from_power_spectrum(power, hint, opt))
        out.push_back({{"signal", mra::signal_to_json(c.signal)}, {"residual", c.residual}});
      if (pr_out.empty()) std::cout << out.dump(2) << '\n';
      else mra::write_json(pr_out, out);
      return out.empty() ? 1 : 0;
    }
    if (*pb) return probe(pb_which, pb_config, pb_out);
    for (auto* sc : scans)
      if (*sc) return scan(sc->get_name(), sc_config, sc_csv, sc_summary);
  } catch (const std::exception& e) {
    std::cerr << "mralab: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
