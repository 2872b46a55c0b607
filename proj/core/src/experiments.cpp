#include "mra/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mra/error.hpp"
#include "mra/gensig.hpp"
#include "mra/model.hpp"
#include "mra/parallel.hpp"
#include "mra/probes.hpp"
#include "mra/rng.hpp"
#include "mra/stats.hpp"

namespace mra {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json bound_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

nlohmann::json window_json(std::pair<double, double> w) {
  return nlohmann::json::array({bound_json(w.first), bound_json(w.second)});
}

std::pair<double, double> window_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("window must be [lo, hi]");
  return {j[0].is_null() ? -kInf : j[0].get<double>(), j[1].is_null() ? kInf : j[1].get<double>()};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidArgument("bad number in CSV: " + s);
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidArgument("bad integer in CSV: " + s);
  return v;
}

std::string label_join(const std::string& head, std::size_t L, std::optional<std::size_t> s,
                       std::optional<double> sigma, std::optional<std::size_t> n) {
  std::ostringstream out;
  if (!head.empty()) out << head << ' ';
  out << "L=" << L;
  if (s) out << " s=" << *s;
  if (sigma) out << " sigma=" << format_double(*sigma);
  if (n) out << " n=" << *n;
  return out.str();
}

std::size_t cell_n(const ExperimentConfig& cfg, double sigma, std::size_t n_index) {
  if (cfg.n_scale) return static_cast<std::size_t>(std::llround(*cfg.n_scale * std::pow(sigma, 4)));
  return cfg.n[n_index];
}

// Grid cell plus trial, with the label of the slice its fit belongs to.
struct Job {
  std::size_t cell = 0;
  std::string cls;
  double sigma = 0.0;
  std::size_t n = 0, s = 0, L = 0, trial = 0;
  std::string signal_key;  // jobs sharing a key share theta0
};

Rng signal_rng(const ExperimentConfig& cfg, const std::string& key) {
  return make_rng(cfg.seed, fnv("signal:" + key));
}

std::vector<Index> standard_support(const std::vector<Index>& support, std::size_t L) {
  std::vector<Index> out;
  for (Index i : support) out.push_back(standard(i, L));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DiluteClassSpec dilute_spec(const ExperimentConfig& cfg, std::size_t L, std::size_t s) {
  DiluteClassSpec spec;
  spec.length = L;
  spec.sparsity = s;
  spec.floor_m = cfg.band.first;
  spec.cap_M = cfg.band.second;
  spec.slack = cfg.epsilon;
  return spec;
}

Signal dilute_signal(const ExperimentConfig& cfg, std::size_t L, std::size_t s, Rng& rng) {
  const DiluteClassSpec spec = dilute_spec(cfg, L, s);
  if (!cfg.support) return gen_collision_free(spec, rng);
  const auto support = standard_support(*cfg.support, L);
  std::uniform_real_distribution<double> mag(spec.floor_m, spec.cap_M);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> values;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const double m = mag(rng);
    values.push_back(sign(rng) ? m : -m);
  }
  return Signal::from_support(L, support, values);
}

Signal full_support_signal(const ExperimentConfig& cfg, std::size_t L, Rng& rng) {
  std::uniform_real_distribution<double> mag(cfg.full_band.first, cfg.full_band.second);
  Signal out(L);
  for (double& v : out.values()) v = mag(rng);
  return out;
}

Signal scaled(Signal h, double norm) {
  const double current = h.norm();
  if (current == 0.0) throw NumericalError("direction vanished");
  h *= norm / current;
  return h;
}

std::size_t dilute_sparsity(const ExperimentConfig& cfg, std::size_t L, std::size_t s) {
  return cfg.support ? standard_support(*cfg.support, L).size() : s;
}

// Runs jobs in grid order. Small jobs run concurrently; jobs whose dataset
// would exceed the memory threshold run one at a time with inner parallelism.
template <class Fn>
std::vector<ExperimentRecord> run_jobs(const ExperimentConfig& cfg, const std::vector<Job>& jobs,
                                       Fn&& body) {
  const std::string hash = cfg.hash();
  std::vector<ExperimentRecord> records(jobs.size());
  auto run_one = [&](std::size_t j) {
    const Job& job = jobs[j];
    ExperimentRecord& r = records[j];
    r.cell = job.cell;
    r.cls = job.cls;
    r.sigma = job.sigma;
    r.n = job.n;
    r.s = job.s;
    r.L = job.L;
    r.trial = job.trial;
    r.seed = cfg.seed;
    r.config_hash = hash;
    const auto start = std::chrono::steady_clock::now();
    try {
      Rng rng = make_rng(splitmix64(cfg.seed) ^ job.cell, job.trial);
      body(job, rng, r);
    } catch (const std::exception& e) {
      r.failed = true;
      r.message = e.what();
    }
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  constexpr std::size_t kLargeJobBytes = std::size_t{256} << 20;
  std::vector<std::size_t> small, large;
  for (std::size_t j = 0; j < jobs.size(); ++j)
    (jobs[j].n * jobs[j].L * sizeof(double) > kLargeJobBytes ? large : small).push_back(j);
  for_each_chunk(small.size(), 1, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) run_one(small[k]);
  });
  for (std::size_t j : large) run_one(j);
  return records;
}

EmOptions em_options(const ExperimentConfig& cfg, const std::string& init) {
  EmOptions o;
  o.max_iters = cfg.estimator.max_iters;
  o.tol = cfg.estimator.tol;
  o.accelerate = cfg.estimator.accelerate;
  o.init_policy = init;
  return o;
}

void fill_em(ExperimentRecord& r, const EmResult& em, const Signal& theta0) {
  r.error = varrho(em.estimate, theta0);
  r.iterations = em.diagnostics.iterations;
  r.converged = em.diagnostics.converged;
}

// One EM fit in the dilute class; returns the record with error = varrho.
void dilute_em_job(const ExperimentConfig& cfg, const Job& job, const Signal& theta0, Rng& rng,
                   ExperimentRecord& r) {
  const MraConfig mc{job.L, job.sigma, GroupKind::cyclic};
  const Dataset data = simulate(theta0, mc, job.n, rng);
  const std::string policy = cfg.estimator.init.empty() ? "power-spectrum" : cfg.estimator.init;
  const DiluteClassSpec spec = dilute_spec(cfg, job.L, job.s);
  Signal init;
  if (policy == "truth") init = theta0;
  else if (policy == "power-spectrum") init = init_from_power_spectrum(data, spec);
  else throw InvalidArgument("unknown init policy for dilute scans: " + policy);
  const RestrictedClass cls = RestrictedClass::magnitude_band(spec.floor_m, spec.cap_M, init.support());
  fill_em(r, em_restricted_mle(data, cls, init, em_options(cfg, policy)), theta0);
}

std::vector<Signal> slice_signals(const std::vector<Job>& jobs,
                                  const std::function<Signal(const Job&)>& make,
                                  std::map<std::string, std::size_t>& index) {
  std::vector<Signal> out;
  for (const Job& job : jobs) {
    if (index.count(job.signal_key)) continue;
    index[job.signal_key] = out.size();
    out.push_back(make(job));
  }
  return out;
}

}  // namespace

// ---- config ----

void ExperimentConfig::validate() const {
  if (schema != 1) throw InvalidArgument("unsupported config schema " + std::to_string(schema));
  static const std::vector<std::string> scenarios{"dilute-rate", "fullsupport-rate",
                                                  "sparsity-scan", "kl-curvature-scan"};
  if (std::find(scenarios.begin(), scenarios.end(), scenario) == scenarios.end())
    throw InvalidArgument("unknown scenario '" + scenario + "'");
  if (trials == 0) throw InvalidArgument("trials must be at least 1");
  if (L.empty()) throw InvalidArgument("L grid is empty");
  for (std::size_t l : L)
    if (l < 2) throw InvalidArgument("L must be at least 2");
  const bool moderate = scenario == "sparsity-scan" && branch == "moderate";
  if (scenario == "sparsity-scan" && branch != "dilute" && branch != "moderate")
    throw InvalidArgument("sparsity-scan branch must be dilute or moderate");
  if (!moderate) {
    if (sigma.empty()) throw InvalidArgument("sigma grid is empty");
    for (double v : sigma)
      if (!(v > 0.0)) throw InvalidArgument("sigma values must be positive");
  }
  const bool needs_n = scenario != "kl-curvature-scan" && !moderate;
  if (needs_n && !n_scale && n.empty()) throw InvalidArgument("n grid is empty and n_scale unset");
  if (n_scale && !(*n_scale > 0.0)) throw InvalidArgument("n_scale must be positive");
  const bool needs_s = scenario == "sparsity-scan" || (scenario == "dilute-rate" && !support);
  if (needs_s && s.empty()) throw InvalidArgument("s grid is empty");
  if (scenario == "kl-curvature-scan") {
    if (s.size() > 1) throw InvalidArgument("kl-curvature-scan takes at most one s");
    if (classes.empty()) throw InvalidArgument("no classes for kl-curvature-scan");
    for (const auto& c : classes)
      if (c != "dilute" && c != "adversarial") throw InvalidArgument("unknown class '" + c + "'");
    if (!(h_norm > 0.0)) throw InvalidArgument("h_norm must be positive (h = 0 is excluded)");
    if (n_mc < 2) throw InvalidArgument("n_mc must be at least 2");
  }
  if (!(band.first > 0.0 && band.second >= band.first)) throw InvalidArgument("band needs 0 < m <= M");
  if (!(full_band.first > 0.0 && full_band.second >= full_band.first))
    throw InvalidArgument("full_band needs 0 < m <= M");
  if (bootstrap == 0) throw InvalidArgument("bootstrap must be positive");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json grid = {{"sigma", sigma}, {"n", n}, {"s", s}, {"L", L}};
  grid["n_scale"] = n_scale ? nlohmann::json(*n_scale) : nlohmann::json();
  nlohmann::json win = nlohmann::json::object();
  for (const auto& [k, w] : windows) win[k] = window_json(w);
  nlohmann::json sig = {{"band", {band.first, band.second}},
                        {"full_band", {full_band.first, full_band.second}},
                        {"epsilon", epsilon},
                        {"zeta", zeta}};
  sig["support"] = support ? nlohmann::json(*support) : nlohmann::json();
  return {{"schema", schema},
          {"scenario", scenario},
          {"grid", grid},
          {"trials", trials},
          {"seed", seed},
          {"estimator",
           {{"max_iters", estimator.max_iters},
            {"tol", estimator.tol},
            {"accelerate", estimator.accelerate},
            {"init", estimator.init}}},
          {"signal", sig},
          {"branch", branch},
          {"init_offset", init_offset},
          {"kl", {{"n_mc", n_mc}, {"h_norm", h_norm}, {"classes", classes}}},
          {"bootstrap", bootstrap},
          {"windows", win}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.schema = j.value("schema", 0);
  c.scenario = j.at("scenario").get<std::string>();
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    c.sigma = g.value("sigma", std::vector<double>{});
    c.n = g.value("n", std::vector<std::size_t>{});
    c.s = g.value("s", std::vector<std::size_t>{});
    c.L = g.value("L", std::vector<std::size_t>{});
    if (g.contains("n_scale") && !g["n_scale"].is_null()) c.n_scale = g["n_scale"].get<double>();
  }
  c.trials = j.value("trials", std::size_t{1});
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("estimator")) {
    const auto& e = j["estimator"];
    c.estimator.max_iters = e.value("max_iters", c.estimator.max_iters);
    c.estimator.tol = e.value("tol", c.estimator.tol);
    c.estimator.accelerate = e.value("accelerate", c.estimator.accelerate);
    c.estimator.init = e.value("init", c.estimator.init);
  }
  if (j.contains("signal")) {
    const auto& s = j["signal"];
    if (s.contains("support") && !s["support"].is_null())
      c.support = s["support"].get<std::vector<Index>>();
    if (s.contains("band")) c.band = {s["band"].at(0).get<double>(), s["band"].at(1).get<double>()};
    if (s.contains("full_band"))
      c.full_band = {s["full_band"].at(0).get<double>(), s["full_band"].at(1).get<double>()};
    c.epsilon = s.value("epsilon", c.epsilon);
    c.zeta = s.value("zeta", c.zeta);
  }
  c.branch = j.value("branch", c.branch);
  c.init_offset = j.value("init_offset", c.init_offset);
  if (j.contains("kl")) {
    const auto& k = j["kl"];
    c.n_mc = k.value("n_mc", c.n_mc);
    c.h_norm = k.value("h_norm", c.h_norm);
    c.classes = k.value("classes", c.classes);
  }
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  if (j.contains("windows"))
    for (const auto& [k, w] : j["windows"].items()) c.windows[k] = window_from_json(w);
  if (j.contains("output")) {
    c.csv_path = j["output"].value("csv", "");
    c.summary_path = j["output"].value("summary", "");
  }
  c.validate();
  return c;
}

std::string ExperimentConfig::hash() const { return config_hash(to_json()); }

std::pair<double, double> ExperimentConfig::window(const std::string& label) const {
  if (auto it = windows.find(label); it != windows.end()) return it->second;
  const std::string head = label.substr(0, label.find(' '));
  if (auto it = windows.find(head); it != windows.end()) return it->second;
  if (auto it = windows.find("*"); it != windows.end()) return it->second;
  if (scenario == "dilute-rate") return {1.6, 2.6};
  if (scenario == "fullsupport-rate") return {2.6, kInf};
  if (scenario == "sparsity-scan") return branch == "moderate" ? std::pair{-kInf, 4.0} : std::pair{-0.3, 0.3};
  if (head == "adversarial") return {-6.8, -5.2};
  return {-4.6, -3.4};
}

// ---- records ----

bool ExperimentRecord::same_result(const ExperimentRecord& o) const {
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  return cell == o.cell && cls == o.cls && same(sigma, o.sigma) && n == o.n && s == o.s &&
         L == o.L && trial == o.trial && same(error, o.error) && same(metric, o.metric) &&
         same(metric_se, o.metric_se) && iterations == o.iterations && converged == o.converged &&
         failed == o.failed && message == o.message && seed == o.seed &&
         config_hash == o.config_hash;
}

namespace {
constexpr const char* kCsvHeader =
    "cell,class,sigma,n,s,L,trial,error,metric,metric_se,wall_time,iterations,converged,failed,"
    "message,seed,config_hash";

std::string clean_message(std::string m) {
  for (char& c : m)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return m;
}
}  // namespace

void ExperimentResult::write_csv(std::ostream& out) const {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.cell << ',' << r.cls << ',' << format_double(r.sigma) << ',' << r.n << ',' << r.s
        << ',' << r.L << ',' << r.trial << ',' << format_double(r.error) << ','
        << format_double(r.metric) << ',' << format_double(r.metric_se) << ','
        << format_double(r.wall_time) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
        << ',' << (r.failed ? 1 : 0) << ',' << clean_message(r.message) << ',' << r.seed << ','
        << r.config_hash << '\n';
  }
}

std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InvalidArgument("unexpected CSV header");
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 17) throw InvalidArgument("CSV row has " + std::to_string(f.size()) + " fields");
    ExperimentRecord r;
    r.cell = parse_u64(f[0]);
    r.cls = f[1];
    r.sigma = parse_double(f[2]);
    r.n = parse_u64(f[3]);
    r.s = parse_u64(f[4]);
    r.L = parse_u64(f[5]);
    r.trial = parse_u64(f[6]);
    r.error = parse_double(f[7]);
    r.metric = parse_double(f[8]);
    r.metric_se = parse_double(f[9]);
    r.wall_time = parse_double(f[10]);
    r.iterations = parse_u64(f[11]);
    r.converged = f[12] == "1";
    r.failed = f[13] == "1";
    r.message = f[14];
    r.seed = parse_u64(f[15]);
    r.config_hash = f[16];
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json ExperimentResult::summary() const {
  nlohmann::json fit_list = nlohmann::json::array();
  auto opt = [](const std::optional<double>& v) {
    return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json();
  };
  for (const auto& f : fits)
    fit_list.push_back({{"label", f.label},
                        {"x", f.x_name},
                        {"x_values", f.x},
                        {"medians", f.median},
                        {"slope", opt(f.slope)},
                        {"ci_low", opt(f.ci_low)},
                        {"ci_high", opt(f.ci_high)},
                        {"r_squared", opt(f.r_squared)},
                        {"window", window_json(f.window)},
                        {"pass", f.pass},
                        {"note", f.note}});
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.failed ? 1 : 0;
  return {{"schema", 1},
          {"scenario", config.scenario},
          {"config", config.to_json()},
          {"config_hash", config_hash},
          {"seed", config.seed},
          {"records", records.size()},
          {"failed_records", failed},
          {"failure_rate", failure_rate},
          {"max_failure_rate", kMaxCellFailureRate},
          {"fits", fit_list},
          {"pass", pass}};
}

void ExperimentResult::save() const {
  if (!config.csv_path.empty()) {
    std::ofstream out(config.csv_path);
    if (!out) throw Error("cannot write " + config.csv_path);
    write_csv(out);
  }
  if (!config.summary_path.empty()) {
    std::ofstream out(config.summary_path);
    if (!out) throw Error("cannot write " + config.summary_path);
    out << summary().dump(2) << '\n';
  }
}

// ---- fitting ----

namespace {

std::string slice_label(const ExperimentConfig& cfg, const ExperimentRecord& r) {
  const bool explicit_n = !cfg.n_scale;
  if (cfg.scenario == "kl-curvature-scan") return label_join(r.cls, r.L, std::nullopt, std::nullopt, std::nullopt);
  if (cfg.scenario == "sparsity-scan") {
    if (cfg.branch == "moderate") return label_join("", r.L, std::nullopt, std::nullopt, std::nullopt);
    return label_join("", r.L, std::nullopt, r.sigma, explicit_n ? std::optional(r.n) : std::nullopt);
  }
  return label_join("", r.L, r.s, std::nullopt, explicit_n ? std::optional(r.n) : std::nullopt);
}

}  // namespace

void fit_records(ExperimentResult& result) {
  const ExperimentConfig& cfg = result.config;
  const bool over_s = cfg.scenario == "sparsity-scan";
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::vector<const ExperimentRecord*>>> slices;
  std::size_t failed = 0;
  for (const auto& r : result.records) {
    if (r.failed) ++failed;
    const std::string label = slice_label(cfg, r);
    if (!slices.count(label)) order.push_back(label);
    auto& cells = slices[label][over_s ? static_cast<double>(r.s) : r.sigma];
    if (!r.failed) cells.push_back(&r);
  }
  result.failure_rate =
      result.records.empty() ? 0.0 : static_cast<double>(failed) / static_cast<double>(result.records.size());

  result.fits.clear();
  for (const std::string& label : order) {
    SliceFit fit;
    fit.label = label;
    fit.x_name = over_s ? "s" : "sigma";
    fit.window = cfg.window(label);
    std::vector<std::vector<const ExperimentRecord*>> cells;
    std::ostringstream note;
    for (const auto& [x, recs] : slices[label]) {
      if (recs.empty()) {
        note << "no successful trials at " << fit.x_name << '=' << format_double(x) << "; ";
        continue;
      }
      std::vector<double> m;
      for (const auto* r : recs) m.push_back(r->metric);
      const double med = median(m);
      if (!(med > 0.0)) {
        note << "nonpositive median at " << fit.x_name << '=' << format_double(x) << "; ";
        continue;
      }
      fit.x.push_back(x);
      fit.median.push_back(med);
      cells.push_back(recs);
    }
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < fit.x.size(); ++k) {
      lx.push_back(std::log(fit.x[k]));
      ly.push_back(std::log(fit.median[k]));
    }
    const auto lf = linear_fit(lx, ly);
    if (!lf) {
      note << "slope undefined: fewer than two grid points";
      fit.note = note.str();
      result.fits.push_back(std::move(fit));
      continue;
    }
    fit.slope = lf->slope;
    fit.r_squared = lf->r_squared;

    // Bootstrap: resample trials within each cell; single-trial cells with a
    // Monte-Carlo error are perturbed by it instead.
    Rng rng = make_rng(cfg.seed, fnv("bootstrap:" + label));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> slopes;
    slopes.reserve(cfg.bootstrap);
    std::vector<double> by(cells.size());
    for (std::size_t b = 0; b < cfg.bootstrap; ++b) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& recs = cells[c];
        std::vector<double> sample;
        if (recs.size() == 1) {
          const double v = recs[0]->metric + recs[0]->metric_se * gauss(rng);
          sample.push_back(std::max(v, 1e-300));
        } else {
          std::uniform_int_distribution<std::size_t> pick(0, recs.size() - 1);
          for (std::size_t k = 0; k < recs.size(); ++k) sample.push_back(recs[pick(rng)]->metric);
        }
        by[c] = std::log(std::max(median(sample), 1e-300));
      }
      if (const auto bf = linear_fit(lx, by)) slopes.push_back(bf->slope);
    }
    if (!slopes.empty()) {
      fit.ci_low = quantile(slopes, 0.025);
      fit.ci_high = quantile(slopes, 0.975);
    }
    fit.pass = *fit.slope >= fit.window.first && *fit.slope <= fit.window.second;
    fit.note = note.str();
    result.fits.push_back(std::move(fit));
  }
  bool all = !result.fits.empty();
  for (const auto& f : result.fits) all = all && f.pass;
  result.pass = all && result.failure_rate <= kMaxCellFailureRate;
}

// ---- scans ----

ExperimentResult run_rate_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  const bool dilute = cfg.scenario == "dilute-rate";
  if (!dilute && cfg.scenario != "fullsupport-rate")
    throw InvalidArgument("run_rate_scan needs a rate scenario");
  const std::size_t n_points = cfg.n_scale ? 1 : cfg.n.size();
  const std::vector<std::size_t> s_grid =
      dilute ? (cfg.support ? std::vector<std::size_t>{0} : cfg.s) : std::vector<std::size_t>{0};

  std::vector<Job> jobs;
  std::size_t cell = 0;
  for (std::size_t L : cfg.L)
    for (std::size_t s0 : s_grid)
      for (std::size_t ni = 0; ni < n_points; ++ni)
        for (double sigma : cfg.sigma) {
          const std::size_t s = dilute ? dilute_sparsity(cfg, L, s0) : L;
          for (std::size_t t = 0; t < cfg.trials; ++t)
            jobs.push_back({cell, dilute ? "dilute" : "full-support", sigma, cell_n(cfg, sigma, ni),
                            s, L, t, label_join("", L, s, std::nullopt, std::nullopt)});
          ++cell;
        }

  std::map<std::string, std::size_t> index;
  const auto signals = slice_signals(jobs, [&](const Job& job) {
    Rng rng = signal_rng(cfg, job.signal_key);
    return dilute ? dilute_signal(cfg, job.L, job.s, rng) : full_support_signal(cfg, job.L, rng);
  }, index);
  // Adversarial offsets for full-support fits, one per slice.
  std::vector<Signal> offsets(signals.size());
  if (!dilute)
    for (std::size_t k = 0; k < signals.size(); ++k)
      offsets[k] = scaled(adversarial_direction(signals[k], 1.0).h, cfg.init_offset);

  ExperimentResult result;
  result.config = cfg;
  result.config_hash = cfg.hash();
  result.records = run_jobs(cfg, jobs, [&](const Job& job, Rng& rng, ExperimentRecord& r) {
    const std::size_t k = index.at(job.signal_key);
    const Signal& theta0 = signals[k];
    if (dilute) {
      dilute_em_job(cfg, job, theta0, rng, r);
    } else {
      const MraConfig mc{job.L, job.sigma, GroupKind::cyclic};
      const Dataset data = simulate(theta0, mc, job.n, rng);
      const std::string policy = cfg.estimator.init.empty() ? "adversarial" : cfg.estimator.init;
      Signal init;
      if (policy == "truth") init = theta0;
      else if (policy == "adversarial") init = theta0 + offsets[k];
      else throw InvalidArgument("unknown init policy for full-support scans: " + policy);
      fill_em(r, em_restricted_mle(data, RestrictedClass::none(), init, em_options(cfg, policy)),
              theta0);
    }
    r.metric = std::sqrt(static_cast<double>(job.n)) * r.error;
  });
  fit_records(result);
  return result;
}

ExperimentResult run_sparsity_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.scenario != "sparsity-scan") throw InvalidArgument("run_sparsity_scan needs sparsity-scan");
  const bool moderate = cfg.branch == "moderate";
  std::vector<Job> jobs;
  std::size_t cell = 0;
  if (moderate) {
    for (std::size_t L : cfg.L)
      for (std::size_t s : cfg.s) {
        for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({cell, "moderate", 0.0, 0, s, L, t, ""});
        ++cell;
      }
  } else {
    if (cfg.support) throw InvalidArgument("sparsity-scan draws its own supports");
    const std::size_t n_points = cfg.n_scale ? 1 : cfg.n.size();
    for (std::size_t L : cfg.L)
      for (std::size_t ni = 0; ni < n_points; ++ni)
        for (double sigma : cfg.sigma)
          for (std::size_t s : cfg.s) {
            for (std::size_t t = 0; t < cfg.trials; ++t)
              jobs.push_back({cell, "dilute", sigma, cell_n(cfg, sigma, ni), s, L, t,
                              label_join("", L, s, std::nullopt, std::nullopt)});
            ++cell;
          }
  }

  std::map<std::string, std::size_t> index;
  std::vector<Signal> signals;
  if (!moderate)
    signals = slice_signals(jobs, [&](const Job& job) {
      Rng rng = signal_rng(cfg, job.signal_key);
      return dilute_signal(cfg, job.L, job.s, rng);
    }, index);

  ExperimentResult result;
  result.config = cfg;
  result.config_hash = cfg.hash();
  result.records = run_jobs(cfg, jobs, [&](const Job& job, Rng& rng, ExperimentRecord& r) {
    if (moderate) {
      // Curvature proxy: the smallest leading-order ||Delta_2||_F per unit
      // symmetric in-class perturbation; the local rate scales like
      // 1 / (sqrt(L) kappa).
      SymmetricSample f;
      for (int tries = 0; tries < 100; ++tries) {
        f = gen_symm_bernoulli_gaussian(job.L, static_cast<double>(job.s), cfg.zeta, rng);
        if (!f.empty_support) break;
      }
      if (f.empty_support) throw NumericalError("symmetric Bernoulli draws kept coming up empty");
      const double kappa = min_linear_curvature(f.signal, f.signal.support(), true);
      r.error = kappa;
      r.metric = 1.0 / (std::sqrt(static_cast<double>(job.L)) * kappa);
      return;
    }
    dilute_em_job(cfg, job, signals[index.at(job.signal_key)], rng, r);
    r.metric = std::sqrt(static_cast<double>(job.n)) * r.error / (job.sigma * job.sigma);
  });
  fit_records(result);
  return result;
}

ExperimentResult run_kl_curvature_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.scenario != "kl-curvature-scan")
    throw InvalidArgument("run_kl_curvature_scan needs kl-curvature-scan");
  std::vector<Job> jobs;
  std::size_t cell = 0;
  const std::size_t s_hint = cfg.s.empty() ? 3 : cfg.s.front();
  for (const std::string& cls : cfg.classes)
    for (std::size_t L : cfg.L)
      for (double sigma : cfg.sigma) {
        const std::size_t s = cls == "dilute" ? dilute_sparsity(cfg, L, s_hint) : L;
        for (std::size_t t = 0; t < cfg.trials; ++t)
          jobs.push_back({cell, cls, sigma, cfg.n_mc, s, L, t,
                          label_join(cls, L, std::nullopt, std::nullopt, std::nullopt)});
        ++cell;
      }

  // theta0 and the direction h are fixed per slice.
  std::map<std::string, std::size_t> index;
  std::vector<std::pair<Signal, Signal>> pairs;
  for (const Job& job : jobs) {
    if (index.count(job.signal_key)) continue;
    index[job.signal_key] = pairs.size();
    Rng rng = signal_rng(cfg, job.signal_key);
    if (job.cls == "dilute") {
      const Signal theta0 = dilute_signal(cfg, job.L, job.s, rng);
      const auto support = theta0.support();
      if (support.size() < 2) throw InvalidArgument("dilute KL direction needs |support| >= 2");
      // Generic direction on the support with mean zero, so the first moments agree.
      Signal h(job.L);
      for (Index i : support) h(i) = standard_normal(rng);
      const double mean = h.sum() / static_cast<double>(support.size());
      for (Index i : support) h(i) -= mean;
      pairs.emplace_back(theta0, scaled(h, cfg.h_norm));
    } else {
      const Signal theta0 = full_support_signal(cfg, job.L, rng);
      pairs.emplace_back(theta0, scaled(adversarial_direction(theta0, 1.0).h, cfg.h_norm));
    }
  }

  ExperimentResult result;
  result.config = cfg;
  result.config_hash = cfg.hash();
  result.records = run_jobs(cfg, jobs, [&](const Job& job, Rng& rng, ExperimentRecord& r) {
    const auto& [theta0, h] = pairs[index.at(job.signal_key)];
    const double h2 = h.squared_norm();
    const KlEstimate kl = kl_monte_carlo(theta0, theta0 + h, job.sigma, job.n, rng);
    r.error = kl.estimate;
    r.metric = kl.estimate / h2;
    r.metric_se = kl.standard_error / h2;
  });
  fit_records(result);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.scenario == "sparsity-scan") return run_sparsity_scan(cfg);
  if (cfg.scenario == "kl-curvature-scan") return run_kl_curvature_scan(cfg);
  return run_rate_scan(cfg);
}

}  // namespace mra
