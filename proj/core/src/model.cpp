#include "mra/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mra/beltway.hpp"
#include "mra/error.hpp"
#include "mra/parallel.hpp"
#include "mra/spectral.hpp"
#include "numeric.hpp"

namespace mra {

void MraConfig::validate() const {
  if (length == 0) throw InvalidArgument("MRA config needs L >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("MRA config needs sigma > 0");
}

void Dataset::append(const Dataset& other) {
  if (other.config.length != config.length) throw LengthMismatch(config.length, other.config.length);
  observations.insert(observations.end(), other.observations.begin(), other.observations.end());
  latent.insert(latent.end(), other.latent.begin(), other.latent.end());
  count += other.count;
}

Dataset simulate(const Signal& theta0, const MraConfig& config, std::size_t n, Rng& rng) {
  if (theta0.size() != config.length) throw LengthMismatch(theta0.size(), config.length);
  if (!(config.sigma >= 0.0)) throw InvalidArgument("sigma must be nonnegative");
  Dataset data;
  data.config = config;
  data.count = n;
  data.truth = theta0;
  data.observations.resize(n * config.length);
  data.latent.reserve(n);
  const auto L = static_cast<Index>(config.length);
  std::uniform_int_distribution<Index> pick_shift(0, L - 1);
  std::bernoulli_distribution pick_flip(0.5);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    GroupElement g{standard(pick_shift(rng), config.length), false};
    if (config.group == GroupKind::dihedral) g.flip = pick_flip(rng);
    data.latent.push_back(g);
    const Signal moved = act(g, theta0);
    double* row = data.observations.data() + i * config.length;
    for (std::size_t k = 0; k < config.length; ++k)
      row[k] = moved.values()[k] + config.sigma * noise(rng);
  }
  return data;
}

namespace {

double log_normalizer(std::size_t length, double sigma, GroupKind group) {
  return -0.5 * static_cast<double>(length) * std::log(2.0 * std::numbers::pi * sigma * sigma) -
         std::log(static_cast<double>(group_order(length, group)));
}

// Per-observation work shared by the likelihood, EM and KL estimators. Uses
// direct O(L^2) correlations for short signals and FFTs otherwise.
class Kernel {
 public:
  // With `canonical` set, evaluate() is exactly invariant under theta -> G theta
  // for L <= 64 at the cost of a sort per call.
  Kernel(const Signal& theta, double sigma, GroupKind group, bool canonical = false)
      : n_(theta.size()), group_(group), inv_var_(1.0 / (sigma * sigma)),
        theta_(theta.values().begin(), theta.values().end()),
        theta_signal_(theta), x_(group_order(n_, group)), canonical_(canonical) {
    std::vector<double> sq(theta_);
    for (double& v : sq) v *= v;
    theta_norm2_ = detail::canonical_sum(sq);
    const Signal r = reflect(theta);
    reflected_.assign(r.values().begin(), r.values().end());
    first_ = first_index(n_);
  }

  double theta_norm2() const { return theta_norm2_; }

  // Fills x = <y, G theta> / sigma^2 and returns log sum exp(x).
  double evaluate(std::span<const double> y) {
    if (n_ <= 64) {
      correlate(y, theta_, x_.data());
      if (group_ == GroupKind::dihedral) correlate(y, reflected_, x_.data() + n_);
    } else {
      x_ = orbit_inner_products(y, theta_signal_, group_);
    }
    double top = -std::numeric_limits<double>::infinity();
    for (double& v : x_) {
      v *= inv_var_;
      top = std::max(top, v);
    }
    if (canonical_) {
      scratch_ = x_;
      return detail::log_sum_exp(scratch_);
    }
    double acc = 0.0;
    for (double v : x_) acc += std::exp(v - top);
    return top + std::log(acc);
  }

  // acc += sum_G w_G G^{-1} y with posterior weights from the last evaluate.
  void accumulate(std::span<const double> y, double lse, double* acc) const {
    const auto n = static_cast<Index>(n_);
    for (Index g = 0; g < n; ++g) {
      const double w = std::exp(x_[static_cast<std::size_t>(g)] - lse);
      // (shift(y, -g))(j) = y(j - g): storage index k - g.
      for (Index k = 0; k < n; ++k) {
        Index src = k - g;
        if (src < 0) src += n;
        acc[k] += w * y[static_cast<std::size_t>(src)];
      }
    }
    if (group_ != GroupKind::dihedral) return;
    for (Index g = 0; g < n; ++g) {
      const double w = std::exp(x_[static_cast<std::size_t>(n + g)] - lse);
      // Reflections are involutions: (G y)(j) = y(-j - g).
      for (Index k = 0; k < n; ++k) {
        const Index src = residue(-k - 2 * first_ - g, n_);
        acc[k] += w * y[static_cast<std::size_t>(src)];
      }
    }
  }

 private:
  void correlate(std::span<const double> y, const std::vector<double>& t, double* out) const {
    for (std::size_t g = 0; g < n_; ++g) {
      double s = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        std::size_t j = k + g;
        if (j >= n_) j -= n_;
        s += y[k] * t[j];
      }
      out[g] = s;
    }
  }

  std::size_t n_;
  GroupKind group_;
  double inv_var_;
  std::vector<double> theta_, reflected_;
  double theta_norm2_;
  Signal theta_signal_;
  std::vector<double> x_, scratch_;
  bool canonical_ = false;
  Index first_ = 0;
};

double squared(std::span<const double> y) {
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return acc;
}

constexpr std::size_t kChunk = 2048;

}  // namespace

double log_density(const Signal& theta, std::span<const double> y, double sigma, GroupKind group) {
  if (y.size() != theta.size()) throw LengthMismatch(y.size(), theta.size());
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  auto x = orbit_inner_products(y, theta, group);
  const double inv_var = 1.0 / (sigma * sigma);
  for (double& v : x) v *= inv_var;
  // Canonical-order sums keep the value exactly orbit invariant.
  std::vector<double> sq(theta.values().begin(), theta.values().end());
  for (double& v : sq) v *= v;
  const double theta_norm2 = detail::canonical_sum(sq);
  return log_normalizer(theta.size(), sigma, group) -
         0.5 * inv_var * (squared(y) + theta_norm2) + detail::log_sum_exp(x);
}

double log_likelihood(const Signal& theta, const Dataset& data) {
  if (theta.size() != data.config.length) throw LengthMismatch(theta.size(), data.config.length);
  std::vector<double> partial(chunk_count(data.count, kChunk), 0.0);
  for_each_chunk(data.count, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i)
      acc += log_density(theta, data.observation(i), data.config.sigma, data.config.group);
    partial[c] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// ---- KL ----

namespace {

// r + expm1(-r) without cancellation for small r.
double ratio_control_term(double r) {
  if (std::fabs(r) < 1e-3) {
    const double r2 = r * r;
    return r2 * (0.5 - r / 6.0 + r2 / 24.0 - r2 * r / 120.0);
  }
  return r + std::expm1(-r);
}

}  // namespace

KlEstimate kl_monte_carlo(const Signal& theta0, const Signal& theta, double sigma,
                          std::size_t n_mc, Rng& rng, const KlOptions& options) {
  if (theta0.size() != theta.size()) throw LengthMismatch(theta0.size(), theta.size());
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (n_mc < 2) throw InvalidArgument("KL Monte Carlo needs at least two samples");
  const std::size_t L = theta0.size();
  const std::size_t blocks = std::clamp<std::size_t>(options.jackknife_blocks, 2, n_mc);
  const std::size_t block_size = (n_mc + blocks - 1) / blocks;
  const std::size_t block_count = chunk_count(n_mc, block_size);
  const std::uint64_t base_seed = rng();
  const double inv_var = 1.0 / (sigma * sigma);

  std::vector<double> block_sum(block_count, 0.0);
  for_each_chunk(n_mc, block_size, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Rng local = make_rng(base_seed, c);
    Kernel k0(theta0, sigma, options.group, true);
    Kernel k1(theta, sigma, options.group, true);
    const double offset = 0.5 * inv_var * (k1.theta_norm2() - k0.theta_norm2());
    std::uniform_int_distribution<Index> pick_shift(0, static_cast<Index>(L) - 1);
    std::bernoulli_distribution pick_flip(0.5);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> y(L);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      GroupElement g{standard(pick_shift(local), L), false};
      if (options.group == GroupKind::dihedral) g.flip = pick_flip(local);
      const Signal moved = act(g, theta0);
      for (std::size_t k = 0; k < L; ++k) y[k] = moved.values()[k] + sigma * noise(local);
      // The ||y||^2 terms cancel in the log ratio.
      const double r = offset + k0.evaluate(y) - k1.evaluate(y);
      acc += options.estimator == KlEstimator::naive ? r : ratio_control_term(r);
    }
    block_sum[c] = acc;
  });

  double total = 0.0;
  for (double b : block_sum) total += b;
  KlEstimate out;
  out.samples = n_mc;
  out.estimate = total / static_cast<double>(n_mc);
  // Delete-one-block jackknife.
  std::vector<double> loo(block_count);
  double loo_mean = 0.0;
  for (std::size_t c = 0; c < block_count; ++c) {
    const std::size_t size = std::min(n_mc, (c + 1) * block_size) - c * block_size;
    loo[c] = (total - block_sum[c]) / static_cast<double>(n_mc - size);
    loo_mean += loo[c];
  }
  loo_mean /= static_cast<double>(block_count);
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  out.standard_error =
      std::sqrt(static_cast<double>(block_count - 1) / static_cast<double>(block_count) * ss);
  return out;
}

// ---- restricted class ----

RestrictedClass RestrictedClass::support_fixed(std::vector<Index> support) {
  RestrictedClass c;
  c.support = std::move(support);
  return c;
}

RestrictedClass RestrictedClass::symmetric_support_fixed(std::vector<Index> support) {
  RestrictedClass c;
  c.support = std::move(support);
  c.symmetric = true;
  return c;
}

RestrictedClass RestrictedClass::magnitude_band(double m, double M,
                                                std::optional<std::vector<Index>> support) {
  if (!(m > 0.0) || !(M >= m)) throw InvalidArgument("magnitude band needs 0 < m <= M");
  RestrictedClass c;
  c.floor_m = m;
  c.cap_M = M;
  c.support = std::move(support);
  return c;
}

RestrictedClass RestrictedClass::dilute(const Signal& theta0, const DiluteClassSpec& spec) {
  return magnitude_band(spec.floor_m, spec.cap_M, theta0.support());
}

std::string RestrictedClass::kind() const {
  if (floor_m || cap_M) return "magnitude-band";
  if (support && symmetric) return "symmetric-support-fixed";
  if (support) return "support-fixed";
  if (symmetric) return "symmetric";
  return "none";
}

Signal RestrictedClass::project(const Signal& theta, bool* clamped) const {
  Signal out = theta;
  const std::size_t n = theta.size();
  std::vector<char> on_support;
  if (support) {
    on_support.assign(n, 0);
    for (Index i : *support) on_support[static_cast<std::size_t>(residue(i - first_index(n), n))] = 1;
    for (std::size_t k = 0; k < n; ++k)
      if (!on_support[k]) out.values()[k] = 0.0;
  }
  if (symmetric) {
    const Signal before = out;
    for (Index i = out.first(); i <= out.last(); ++i) out(i) = 0.5 * (before(i) + before(-i));
  }
  bool changed = false;
  if (floor_m || cap_M) {
    const double lo = floor_m.value_or(0.0);
    const double hi = cap_M.value_or(std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < n; ++k) {
      double& v = out.values()[k];
      const bool active = support ? on_support[k] != 0 : v != 0.0;
      if (!active) continue;
      const double mag = std::clamp(std::fabs(v), lo, hi);
      const double nv = std::signbit(v) ? -mag : mag;
      if (nv != v) changed = true;
      v = nv;
    }
  }
  if (clamped) *clamped = changed;
  return out;
}

nlohmann::json RestrictedClass::to_json() const {
  nlohmann::json j{{"kind", kind()}, {"symmetric", symmetric}};
  if (support) j["support"] = *support;
  if (floor_m || cap_M)
    j["band"] = {floor_m.value_or(0.0), cap_M.value_or(std::numeric_limits<double>::max())};
  return j;
}

RestrictedClass RestrictedClass::from_json(const nlohmann::json& j) {
  RestrictedClass c;
  if (j.contains("support")) c.support = j.at("support").get<std::vector<Index>>();
  c.symmetric = j.value("symmetric", false);
  const std::string kind = j.value("kind", std::string());
  if (kind == "symmetric-support-fixed") c.symmetric = true;
  if (j.contains("band")) {
    const auto band = j.at("band").get<std::vector<double>>();
    if (band.size() != 2 || !(band[0] > 0.0) || !(band[1] >= band[0]))
      throw InvalidArgument("class band must be [m, M] with 0 < m <= M");
    c.floor_m = band[0];
    c.cap_M = band[1];
  }
  if ((kind == "support-fixed" || kind == "symmetric-support-fixed") && !c.support)
    throw InvalidArgument("class kind " + kind + " needs a support");
  if (kind == "magnitude-band" && !c.floor_m)
    throw InvalidArgument("class kind magnitude-band needs a band");
  return c;
}

// ---- EM ----

nlohmann::json EmDiagnostics::to_json() const {
  return {{"iterations", iterations},
          {"e_steps", e_steps},
          {"final_log_likelihood", final_log_likelihood},
          {"steps", steps},
          {"log_likelihood", log_likelihood},
          {"pre_projection_log_likelihood", pre_projection_log_likelihood},
          {"converged", converged},
          {"clamp_activated", clamp_activated},
          {"accelerated", accelerated},
          {"init_policy", init_policy}};
}

EmStep em_step(const Dataset& data, const Signal& theta) {
  const std::size_t L = data.config.length;
  if (theta.size() != L) throw LengthMismatch(theta.size(), L);
  if (data.count == 0) throw InvalidArgument("EM needs at least one observation");
  const double sigma = data.config.sigma;
  const std::size_t chunks = chunk_count(data.count, kChunk);
  std::vector<std::vector<double>> acc(chunks);
  std::vector<double> ll(chunks, 0.0);
  for_each_chunk(data.count, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Kernel kernel(theta, sigma, data.config.group);
    std::vector<double> local(L, 0.0);
    double ll_local = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto y = data.observation(i);
      const double lse = kernel.evaluate(y);
      kernel.accumulate(y, lse, local.data());
      ll_local += lse - 0.5 * squared(y) / (sigma * sigma);
    }
    acc[c] = std::move(local);
    ll[c] = ll_local;
  });
  std::vector<double> sum(L, 0.0);
  double total_ll = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < L; ++k) sum[k] += acc[c][k];
    total_ll += ll[c];
  }
  const double n = static_cast<double>(data.count);
  for (double& v : sum) v /= n;
  total_ll += n * (log_normalizer(L, sigma, data.config.group) -
                   0.5 * theta.squared_norm() / (sigma * sigma));
  if (!std::isfinite(total_ll)) throw NumericalError("non-finite log-likelihood in EM");
  return {Signal(std::move(sum)), total_ll};
}

EmResult em_restricted_mle(const Dataset& data, const RestrictedClass& cls, const Signal& init,
                           const EmOptions& options) {
  if (init.size() != data.config.length) throw LengthMismatch(init.size(), data.config.length);
  data.config.validate();
  EmDiagnostics diag;
  diag.init_policy = options.init_policy;
  diag.accelerated = options.accelerate;

  bool clamped = false;
  Signal current = cls.project(init, &clamped);
  diag.clamp_activated = clamped;

  auto projected_step = [&](const Signal& theta, double* ll_at_theta) {
    EmStep step = em_step(data, theta);
    ++diag.e_steps;
    if (ll_at_theta) *ll_at_theta = step.log_likelihood;
    if (options.track_monotonicity) {
      diag.pre_projection_log_likelihood.push_back(log_likelihood(step.m_step, data));
      if (!std::isfinite(diag.pre_projection_log_likelihood.back()))
        throw NumericalError("non-finite log-likelihood in EM");
    }
    bool c = false;
    Signal next = cls.project(step.m_step, &c);
    diag.clamp_activated = diag.clamp_activated || c;
    return next;
  };

  Signal best = current;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    double ll = 0.0;
    Signal next;
    if (!options.accelerate) {
      next = projected_step(current, &ll);
    } else {
      // SQUAREM: two EM steps, a squared extrapolation, then a stabilizing
      // EM step; falls back to the plain double step if the likelihood drops.
      double ll1 = 0.0, ll_extra = 0.0;
      const Signal t1 = projected_step(current, &ll);
      const Signal t2 = projected_step(t1, &ll1);
      const Signal r = t1 - current;
      const Signal v = (t2 - t1) - r;
      const double rn = r.norm(), vn = v.norm();
      next = t2;
      if (vn > 0.0 && rn > 0.0) {
        const double alpha = std::min(-rn / vn, -1.0);
        Signal extra = current - (2.0 * alpha) * r + (alpha * alpha) * v;
        extra = cls.project(extra);
        const Signal stabilized = projected_step(extra, &ll_extra);
        if (ll_extra >= ll1) next = stabilized;
      }
    }
    diag.log_likelihood.push_back(ll);
    if (ll > best_ll) {
      best_ll = ll;
      best = current;
    }
    const double step = varrho(current, next, data.config.group);
    diag.steps.push_back(step);
    current = std::move(next);
    diag.iterations = it + 1;
    if (step < options.tol) {
      diag.converged = true;
      break;
    }
  }
  const double final_ll = log_likelihood(current, data);
  if (!std::isfinite(final_ll)) throw NumericalError("non-finite log-likelihood in EM");
  if (!diag.converged && best_ll > final_ll) {
    current = best;
    diag.final_log_likelihood = best_ll;
  } else {
    diag.final_log_likelihood = final_ll;
  }
  return {std::move(current), std::move(diag)};
}

Signal estimate_power_spectrum(const Dataset& data) {
  const std::size_t L = data.config.length;
  const MomentTensor m2 = empirical_moments(data.observations, L, 2, data.config.sigma);
  Signal a(L);
  for (Index k = first_index(L); k <= last_index(L); ++k) {
    double acc = 0.0;
    for (Index i = first_index(L); i <= last_index(L); ++i) acc += m2.at(i, i + k);
    a(k) = acc;
  }
  // A is even for real signals.
  Signal sym(L);
  for (Index k = a.first(); k <= a.last(); ++k) sym(k) = 0.5 * (a(k) + a(-k));
  const Spectrum p = dft(sym);
  std::vector<double> out(L);
  for (std::size_t k = 0; k < L; ++k) out[k] = p.values()[k].real();
  return Signal(std::move(out));
}

Signal init_from_power_spectrum(const Dataset& data, const DiluteClassSpec& spec) {
  PhaseRetrievalOptions options;
  options.tolerance = std::numeric_limits<double>::infinity();
  const auto candidates = recover_from_power_spectrum(estimate_power_spectrum(data), spec, options);
  if (candidates.empty()) throw NumericalError("phase retrieval produced no EM starting point");
  // Score variants on a bounded subsample to keep the cost independent of n.
  Dataset probe;
  probe.config = data.config;
  probe.count = std::min<std::size_t>(data.count, 20000);
  probe.observations.assign(data.observations.begin(),
                            data.observations.begin() +
                                static_cast<std::ptrdiff_t>(probe.count * data.config.length));
  Signal best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    for (const Signal& variant : {c.signal, -1.0 * c.signal, reflect(c.signal),
                                  -1.0 * reflect(c.signal)}) {
      const double ll = log_likelihood(variant, probe);
      if (ll > best_ll) {
        best_ll = ll;
        best = variant;
      }
    }
  }
  return best;
}

}  // namespace mra
