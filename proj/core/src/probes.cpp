#include "mra/probes.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mra/model.hpp"
#include "mra/parallel.hpp"
#include "mra/rng.hpp"
#include "mra/spectral.hpp"

namespace mra {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// NaN is not valid JSON; write it as null.
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

Signal random_direction(std::size_t length, std::span<const Index> support, double norm,
                        bool symmetric, Rng& rng) {
  Signal h(length);
  for (Index i : support) {
    if (symmetric && h(i) != 0.0) continue;
    const double v = standard_normal(rng);
    h(i) = v;
    if (symmetric) h(-i) = v;
  }
  const double current = h.norm();
  if (current == 0.0) throw NumericalError("random direction has zero norm");
  h *= norm / current;
  return h;
}

std::vector<Index> random_subset(std::size_t length, std::size_t s, Rng& rng) {
  std::vector<Index> pool(length);
  std::iota(pool.begin(), pool.end(), Index{0});
  for (std::size_t k = 0; k < s; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, length - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  std::vector<Index> out;
  out.reserve(s);
  for (std::size_t k = 0; k < s; ++k) out.push_back(standard(pool[k], length));
  std::sort(out.begin(), out.end());
  return out;
}

bool is_symmetric(const Signal& v) {
  for (Index i = v.first(); i <= v.last(); ++i)
    if (v(i) != v(-i)) return false;
  return true;
}

// fn(t) for every trial, computed in parallel.
template <class Fn>
std::vector<double> per_trial(std::size_t trials, Fn&& fn) {
  std::vector<double> out(trials);
  for_each_chunk(trials, 16, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) out[t] = fn(t);
  });
  return out;
}

double min_of(const std::vector<double>& v) {
  return v.empty() ? kNaN : *std::min_element(v.begin(), v.end());
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? kNaN : *std::max_element(v.begin(), v.end());
}

}  // namespace

// ---- dilute ----

double delta2_frobenius(const Signal& theta0, const Signal& h) {
  const auto e = second_moment_difference_expansion(theta0, h);
  return (e.linear + e.quadratic).frobenius_norm();
}

double min_linear_curvature(const Signal& theta0, std::span<const Index> support,
                            bool symmetric_directions) {
  const std::size_t L = theta0.size();
  std::vector<Signal> basis;
  for (Index i : support) {
    const Index k = standard(i, L);
    if (symmetric_directions) {
      const Index mirror = standard(-k, L);
      if (mirror < k) continue;
      Signal e(L);
      e(k) = 1.0;
      e(mirror) = 1.0;
      e *= 1.0 / e.norm();
      basis.push_back(std::move(e));
    } else {
      basis.push_back(Signal::delta(L, k));
    }
  }
  if (basis.empty()) throw InvalidArgument("empty support for curvature");
  if (basis.size() > L) return 0.0;
  Eigen::MatrixXd map(L, basis.size());
  const double root_l = std::sqrt(static_cast<double>(L));
  for (std::size_t c = 0; c < basis.size(); ++c) {
    const auto e = second_moment_difference_expansion(theta0, basis[c]);
    const Signal& j = e.linear.generator();
    for (std::size_t r = 0; r < L; ++r)
      map(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = root_l * j.values()[r];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(map);
  return svd.singularValues().minCoeff();
}

nlohmann::json DiluteCheckReport::to_json() const {
  nlohmann::json sens = nlohmann::json::array();
  for (const auto& [norm, ratio] : sensitivity) sens.push_back({{"h_norm", norm}, {"min_ratio", number(ratio)}});
  return {{"probe", "dilute-lb"},
          {"trials", trials},
          {"h_norm", h_norm},
          {"slack", slack},
          {"epsilon", epsilon},
          {"floor_m", floor_m},
          {"bound", bound},
          {"threshold", bound * (1.0 - slack)},
          {"min_ratio", number(min_ratio)},
          {"worst_direction_ratio", number(worst_direction_ratio)},
          {"class_ok", class_ok},
          {"pass", pass},
          {"sensitivity", sens},
          {"seed", seed}};
}

DiluteCheckReport dilute_lower_bound_check(const Signal& theta0, const DiluteClassSpec& spec,
                                           std::uint64_t seed, const DiluteCheckOptions& options) {
  const std::size_t L = theta0.size();
  const std::vector<Index> support = theta0.support();
  if (support.empty()) throw InvalidArgument("dilute check needs a nonzero signal");
  if (options.trials == 0) throw InvalidArgument("dilute check needs at least one trial");

  std::ostringstream problems;
  if (spec.length != L) problems << " length " << L << " != " << spec.length << ";";
  if (support.size() != spec.sparsity)
    problems << " support size " << support.size() << " != " << spec.sparsity << ";";
  if (!is_collision_free(support, L)) problems << " support is not collision-free;";
  for (Index i : support) {
    const double a = std::fabs(theta0(i));
    if (a < spec.floor_m * (1 - 1e-12) || a > spec.cap_M * (1 + 1e-12)) {
      problems << " magnitude " << a << " at " << i << " outside [m, M];";
      break;
    }
  }
  if (!spec.admissible()) problems << " slack exceeds s m^2 / M^2 - 2;";

  DiluteCheckReport report;
  report.class_ok = problems.str().empty();
  if (options.enforce_class && !report.class_ok)
    throw InvalidArgument("class-check failure:" + problems.str());

  const double eps = spec.slack;
  report.trials = options.trials;
  report.h_norm = options.h_norm.value_or(1e-3 * spec.floor_m);
  if (!(report.h_norm > 0.0)) throw InvalidArgument("h_norm must be positive");
  report.slack = options.slack;
  report.epsilon = eps;
  report.floor_m = spec.floor_m;
  report.bound = spec.floor_m * std::sqrt(2.0 * eps / (2.0 + eps));
  report.seed = seed;

  const double scale = std::sqrt(static_cast<double>(support.size()) / static_cast<double>(L));
  auto sweep = [&](double norm) {
    return min_of(per_trial(options.trials, [&](std::size_t t) {
      Rng rng = make_rng(seed, t);
      const Signal h = random_direction(L, support, norm, false, rng);
      return delta2_frobenius(theta0, h) / (scale * norm);
    }));
  };
  report.min_ratio = sweep(report.h_norm);
  for (double factor : options.sensitivity) {
    const double norm = factor * spec.floor_m;
    report.sensitivity.emplace_back(norm, sweep(norm));
  }
  report.worst_direction_ratio =
      options.worst_direction ? min_linear_curvature(theta0, support) / scale : kNaN;
  report.pass = report.min_ratio >= report.bound * (1.0 - report.slack);
  return report;
}

// ---- adversarial ----

AdversarialDirection adversarial_direction(const Signal& theta0, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be positive");
  const std::size_t L = theta0.size();
  const Spectrum t = dft(theta0);
  double peak = 0.0;
  for (const Complex& c : t.values()) peak = std::max(peak, std::abs(c));
  AdversarialDirection out;
  if (theta0.support().size() != L)
    out.warnings.push_back("theta0 does not have full support");
  Spectrum hat{std::vector<Complex>(L)};
  // 0 < xi < L/2; xi = 0 and xi = L/2 stay zero.
  for (Index xi = 1; 2 * xi < static_cast<Index>(L); ++xi) {
    const Complex c = t(xi);
    const double mag = std::abs(c);
    if (mag <= 1e-12 * peak) {
      out.skipped.push_back(xi);
      out.warnings.push_back("hat theta0 vanishes at frequency " + std::to_string(xi) + "; skipped");
      continue;
    }
    const Complex v = Complex(0.0, delta) * (c / mag);
    hat(xi) = v;
    hat(-xi) = std::conj(v);
  }
  out.h = idft(hat);
  return out;
}

nlohmann::json AdversarialCheck::to_json() const {
  return {{"linear_relative", linear_relative},
          {"linear_tolerance", kAdversarialLinearTolerance},
          {"mean", mean},
          {"delta2", delta2},
          {"quadratic_bound", quadratic_bound},
          {"pass", pass}};
}

AdversarialCheck check_adversarial(const Signal& theta0, const Signal& h) {
  if (theta0.size() != h.size()) throw LengthMismatch(theta0.size(), h.size());
  const double L = static_cast<double>(theta0.size());
  const auto e = second_moment_difference_expansion(theta0, h);
  AdversarialCheck c;
  const double scale = std::sqrt(L) * theta0.norm() * h.norm();
  c.linear_relative = scale > 0.0 ? e.linear.frobenius_norm() / scale : 0.0;
  c.mean = h.mean();
  c.delta2 = (e.linear + e.quadratic).frobenius_norm();
  c.quadratic_bound = L * h.squared_norm();
  // The mean and quadratic checks hold up to rounding of sums over L terms.
  c.pass = c.linear_relative <= kAdversarialLinearTolerance &&
           std::fabs(c.mean) <= 1e-12 * std::max(1.0, h.norm()) &&
           c.delta2 <= c.quadratic_bound * (1.0 + 1e-12);
  return c;
}

// ---- frequency sets ----

nlohmann::json FrequencySet::to_json() const {
  nlohmann::json j = {{"L", length},   {"members", members}, {"a", a},
                      {"c1_hat", c1_hat}, {"c2_hat", c2_hat}, {"rounds", rounds}};
  j["spectral_floor"] = spectral_floor ? nlohmann::json(*spectral_floor) : nlohmann::json();
  return j;
}

FrequencySet uup_sample(std::size_t length, double a, std::uint64_t seed) {
  if (length == 0) throw InvalidArgument("uup_sample needs L >= 1");
  if (!(a > 0.0) || a > static_cast<double>(length))
    throw InvalidArgument("uup_sample needs 0 < a <= L");
  Rng rng = make_rng(seed);
  const double p = a / static_cast<double>(length);
  FrequencySet out;
  out.length = length;
  out.a = a;
  for (Index xi = first_index(length); xi <= last_index(length); ++xi)
    if (uniform01(rng) < p) out.members.push_back(xi);
  return out;
}

double uup_ratio(const FrequencySet& lambda, const Signal& h) {
  if (h.size() != lambda.length) throw LengthMismatch(h.size(), lambda.length);
  if (lambda.members.empty()) throw InvalidArgument("empty frequency set");
  const Signal p = power_spectrum(h);
  // Both sums run in ascending frequency order, so Lambda = Z_L gives exactly 1.
  double total = 0.0;
  for (double v : p.values()) total += v;
  double part = 0.0;
  for (Index xi : lambda.members) part += p(xi);
  const double l = static_cast<double>(lambda.length);
  const double m = static_cast<double>(lambda.members.size());
  return (part / m) / (total / l);
}

UupRatios uup_check(const FrequencySet& lambda, std::size_t s, std::size_t trials,
                    std::uint64_t seed) {
  if (lambda.members.empty()) throw InvalidArgument("empty frequency set");
  if (s == 0 || s > lambda.length) throw InvalidArgument("uup_check needs 1 <= s <= L");
  if (trials == 0) throw InvalidArgument("uup_check needs at least one trial");
  const auto ratios = per_trial(trials, [&](std::size_t t) {
    Rng rng = make_rng(seed, t);
    const auto support = random_subset(lambda.length, s, rng);
    return uup_ratio(lambda, random_direction(lambda.length, support, 1.0, false, rng));
  });
  return {min_of(ratios), max_of(ratios)};
}

UupRatios uup_check_on_support(const FrequencySet& lambda, std::span<const Index> support,
                               std::size_t trials, std::uint64_t seed, bool symmetric_directions) {
  if (lambda.members.empty()) throw InvalidArgument("empty frequency set");
  if (support.empty()) throw InvalidArgument("empty support");
  if (trials == 0) throw InvalidArgument("uup_check needs at least one trial");
  const auto ratios = per_trial(trials, [&](std::size_t t) {
    Rng rng = make_rng(seed, t);
    return uup_ratio(lambda,
                     random_direction(lambda.length, support, 1.0, symmetric_directions, rng));
  });
  return {min_of(ratios), max_of(ratios)};
}

// ---- good sets ----

void GoodSetParams::validate() const {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0, 1)");
  if (!(zeta > 0.0)) throw InvalidArgument("zeta must be positive");
}

double negative_moment_constant(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0, 1)");
  // E|Z|^{-eta} = 2^{-eta/2} Gamma((1 - eta)/2) / sqrt(pi)
  const double moment =
      std::pow(2.0, -eta / 2.0) * std::tgamma((1.0 - eta) / 2.0) / std::sqrt(std::numbers::pi);
  return (1.0 - eta) * moment;
}

nlohmann::json GoodSetReport::to_json() const {
  return {{"good_set_size", good_set.size()},
          {"threshold", threshold},
          {"fraction", fraction},
          {"C", constant_C},
          {"frak_a", number(frak_a)},
          {"floor", number(floor)},
          {"meets_floor", meets_floor}};
}

GoodSetReport good_set_report(const Signal& f, const GoodSetParams& params) {
  params.validate();
  const std::vector<Index> xi = f.support();
  if (xi.empty()) throw InvalidArgument("good_set_report needs a nonempty support");
  const std::size_t L = f.size();
  const double size = static_cast<double>(xi.size());
  GoodSetReport r;
  r.threshold = std::pow(size, -params.kappa);
  const Spectrum hat = dft(f);
  for (Index k = first_index(L); k <= last_index(L); ++k)
    if (std::abs(hat(k)) >= r.threshold) r.good_set.push_back(k);
  r.fraction = static_cast<double>(r.good_set.size()) / static_cast<double>(L);

  double min_v = std::numeric_limits<double>::infinity();
  for (Index a = first_index(L); a <= last_index(L); ++a)
    min_v = std::min(min_v, cosine_functional(xi, a, L));
  r.constant_C = negative_moment_constant(params.eta);
  r.frak_a = r.constant_C / (1.0 - params.eta) * std::pow(params.zeta, -params.eta) *
             std::pow(min_v, -params.eta / 2.0);
  r.floor = 1.0 - r.frak_a * std::pow(size, -params.kappa * params.eta / 2.0);
  r.meets_floor = r.fraction >= r.floor;
  return r;
}

nlohmann::json GoodSetResampleReport::to_json() const {
  return {{"draws", draws},
          {"empty_draws", empty_draws},
          {"fractions", fractions},
          {"share_meeting_floor", share_meeting_floor},
          {"bound_probability", bound_probability}};
}

GoodSetResampleReport good_set_resample(std::size_t length, double s, const GoodSetParams& params,
                                        std::size_t draws, std::uint64_t seed) {
  params.validate();
  if (draws == 0) throw InvalidArgument("good_set_resample needs at least one draw");
  std::vector<GoodSetReport> reports(draws);
  std::vector<char> empty(draws, 0);
  for_each_chunk(draws, 4, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      Rng rng = make_rng(seed, d);
      const SymmetricSample f = gen_symm_bernoulli_gaussian(length, s, params.zeta, rng);
      if (f.empty_support) {
        empty[d] = 1;
        continue;
      }
      reports[d] = good_set_report(f.signal, params);
    }
  });
  GoodSetResampleReport out;
  out.draws = draws;
  std::size_t meeting = 0, used = 0;
  double prob = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    if (empty[d]) {
      ++out.empty_draws;
      continue;
    }
    ++used;
    out.fractions.push_back(reports[d].fraction);
    if (reports[d].meets_floor) ++meeting;
    prob += std::max(0.0, reports[d].floor);
  }
  if (used > 0) {
    out.share_meeting_floor = static_cast<double>(meeting) / static_cast<double>(used);
    out.bound_probability = prob / static_cast<double>(used);
  }
  return out;
}

// ---- Lambda ----

double lambda_floor(std::size_t s, const LambdaOptions& options) {
  if (s == 0) throw InvalidArgument("sparsity must be positive");
  return options.floor_c * std::min(std::pow(static_cast<double>(s), options.tau - 4.0), 1.0);
}

FrequencySet lambda_construct(const Signal& theta, std::size_t s, double a, std::size_t max_tries,
                              std::uint64_t seed, const LambdaOptions& options) {
  if (!is_symmetric(theta)) throw InvalidArgument("lambda_construct needs a symmetric signal");
  const std::vector<Index> support = theta.support();
  if (support.empty()) throw InvalidArgument("lambda_construct needs a nonzero signal");
  if (max_tries == 0) throw InvalidArgument("max_tries must be positive");
  const double floor = lambda_floor(s, options);
  const Spectrum hat = dft(theta);

  FrequencySet best;
  double best_min = -1.0;
  std::size_t floor_failures = 0, uup_failures = 0;
  for (std::size_t round = 1; round <= max_tries; ++round) {
    FrequencySet lambda = uup_sample(theta.size(), a, splitmix64(seed) ^ round);
    lambda.rounds = round;
    if (lambda.members.empty()) {
      ++uup_failures;
      continue;
    }
    double min_abs = std::numeric_limits<double>::infinity();
    for (Index xi : lambda.members) min_abs = std::min(min_abs, std::abs(hat(xi)));
    lambda.spectral_floor = min_abs;
    const bool floor_ok = min_abs >= floor;
    if (floor_ok) {
      const UupRatios r = uup_check_on_support(lambda, support, options.uup_trials,
                                               splitmix64(seed + round));
      lambda.c1_hat = r.c1_hat;
      lambda.c2_hat = r.c2_hat;
      if (r.c1_hat >= options.c1_min && r.c2_hat <= options.c2_max) return lambda;
      ++uup_failures;
    } else {
      ++floor_failures;
    }
    const double score = floor_ok ? std::numeric_limits<double>::infinity() : min_abs;
    if (score > best_min) {
      best_min = score;
      best = lambda;
    }
  }
  std::ostringstream msg;
  msg << "lambda_construct exhausted " << max_tries << " tries (floor failures " << floor_failures
      << ", UUP failures " << uup_failures << ")";
  throw LambdaConstructionError(msg.str(), best, floor_failures, uup_failures);
}

// ---- moderate ----

nlohmann::json ModerateCheckReport::to_json() const {
  return {{"probe", "moderate-lb"},
          {"trials", trials},
          {"h_norm", h_norm},
          {"spectral_floor", spectral_floor},
          {"c1_hat", c1_hat},
          {"c2_hat", c2_hat},
          {"c3", c3},
          {"c4", c4},
          {"min_ratio", number(min_ratio)},
          {"min_chain_ratio", number(min_chain_ratio)},
          {"chain_holds", chain_holds},
          {"pass", pass},
          {"seed", seed}};
}

ModerateCheckReport moderate_curvature_check(const Signal& theta0, const FrequencySet& lambda,
                                             std::size_t trials, double h_norm,
                                             std::uint64_t seed,
                                             const ModerateCheckOptions& options) {
  const std::size_t L = theta0.size();
  if (lambda.length != L) throw LengthMismatch(lambda.length, L);
  if (lambda.members.empty()) throw InvalidArgument("empty frequency set");
  if (!is_symmetric(theta0)) throw InvalidArgument("class-check failure: theta0 is not symmetric");
  if (trials == 0) throw InvalidArgument("moderate check needs at least one trial");
  if (!(h_norm > 0.0)) throw InvalidArgument("h_norm must be positive");
  const std::vector<Index> support = theta0.support();
  if (support.empty()) throw InvalidArgument("class-check failure: theta0 is zero");

  const Spectrum hat = dft(theta0);
  double floor = std::numeric_limits<double>::infinity();
  for (Index xi : lambda.members) floor = std::min(floor, std::abs(hat(xi)));
  if (!(floor > 0.0)) throw InvalidArgument("hat theta0 vanishes on Lambda");

  struct Trial {
    double ratio, energy, h_ratio, g_ratio;
  };
  std::vector<Trial> out(trials);
  const double root_l = std::sqrt(static_cast<double>(L));
  for_each_chunk(trials, 16, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      Rng rng = make_rng(seed, t);
      const Signal h = random_direction(L, support, h_norm, true, rng);
      const double d2 = delta2_frobenius(theta0, h);
      const double r = rho(theta0 + h, theta0).distance;
      const Signal g = convolve(theta0, h);
      // (1/L) sum |hat theta hat h|^2 = ||theta * h||^2
      out[t] = {d2 * root_l / (floor * r), g.squared_norm() / h.squared_norm(),
                uup_ratio(lambda, h), uup_ratio(lambda, g)};
    }
  });

  ModerateCheckReport rep;
  rep.trials = trials;
  rep.h_norm = h_norm;
  rep.spectral_floor = floor;
  rep.seed = seed;
  // The constants cover both the Lambda calibration and every tested direction.
  double c1 = lambda.c1_hat > 0.0 ? lambda.c1_hat : std::numeric_limits<double>::infinity();
  double c2 = lambda.c2_hat;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (const Trial& t : out) {
    c1 = std::min(c1, t.h_ratio);
    c2 = std::max(c2, t.g_ratio);
    min_ratio = std::min(min_ratio, t.ratio);
  }
  rep.c1_hat = c1;
  rep.c2_hat = c2;
  rep.c3 = std::sqrt(c1 / c2);
  rep.c4 = 2.0 * rep.c3;
  rep.min_ratio = min_ratio;
  double min_chain = std::numeric_limits<double>::infinity();
  for (const Trial& t : out)
    min_chain = std::min(min_chain, t.energy / (rep.c3 * rep.c3 * floor * floor));
  rep.min_chain_ratio = min_chain;
  rep.chain_holds = min_chain >= 1.0 - 1e-12;
  rep.pass = rep.min_ratio >= rep.c4 * (1.0 - options.slack);
  return rep;
}

// ---- sandwich ----

nlohmann::json SandwichReport::to_json() const {
  nlohmann::json table = nlohmann::json::array();
  for (const SandwichRow& r : rows)
    table.push_back({{"sigma", r.sigma},
                     {"kl", r.kl},
                     {"kl_se", r.kl_se},
                     {"delta1", r.delta1},
                     {"delta2", r.delta2},
                     {"delta3", r.delta3},
                     {"lower_series", r.lower_series},
                     {"ratio", number(r.ratio)},
                     {"pass", r.pass}});
  return {{"probe", "sandwich"},
          {"rows", table},
          {"fitted_lower_constant", number(fitted_lower_constant)},
          {"pass", pass},
          {"seed", seed}};
}

SandwichReport moment_sandwich_probe(const Signal& theta, const Signal& phi,
                                     std::span<const double> sigma_grid, std::size_t n_mc,
                                     std::uint64_t seed) {
  if (theta.size() != phi.size()) throw LengthMismatch(theta.size(), phi.size());
  if (theta.size() > kSandwichGuard)
    throw SizeGuardError("moment sandwich needs L <= " + std::to_string(kSandwichGuard));
  auto centered = [](const Signal& v) {
    return std::fabs(v.mean()) <= 1e-12 * std::max(1.0, v.norm());
  };
  if (!centered(theta) || !centered(phi)) throw InvalidArgument("sandwich inputs must be centered");
  if (sigma_grid.empty()) throw InvalidArgument("empty sigma grid");

  const double d[3] = {delta_m(theta, phi, 1).frobenius_norm(),
                       delta_m(theta, phi, 2).frobenius_norm(),
                       delta_m(theta, phi, 3).frobenius_norm()};
  SandwichReport rep;
  rep.seed = seed;
  rep.pass = true;
  rep.fitted_lower_constant = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sigma_grid.size(); ++k) {
    const double sigma = sigma_grid[k];
    Rng rng = make_rng(seed, k);
    const KlEstimate kl = kl_monte_carlo(theta, phi, sigma, n_mc, rng);
    SandwichRow row;
    row.sigma = sigma;
    row.kl = kl.estimate;
    row.kl_se = kl.standard_error;
    row.delta1 = d[0];
    row.delta2 = d[1];
    row.delta3 = d[2];
    double factorial = 1.0;
    for (int m = 1; m <= 3; ++m) {
      factorial *= m;
      row.lower_series += d[m - 1] * d[m - 1] / (std::pow(3.0 * sigma * sigma, m) * factorial);
    }
    if (row.lower_series > 0.0) {
      row.ratio = row.kl / row.lower_series;
      row.pass = row.ratio >= 1.0 - 3.0 * row.kl_se / row.lower_series;
      rep.fitted_lower_constant = std::min(rep.fitted_lower_constant, row.ratio);
    } else {
      row.ratio = kNaN;
      row.pass = row.kl <= 3.0 * row.kl_se + 1e-12;
    }
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  if (!std::isfinite(rep.fitted_lower_constant)) rep.fitted_lower_constant = kNaN;
  return rep;
}

}  // namespace mra
