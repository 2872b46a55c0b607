#include "mra/beltway.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "difference_table.hpp"
#include "mra/error.hpp"
#include "mra/spectral.hpp"

namespace mra {

// ---- DifferenceProfile ----

DifferenceProfile DifferenceProfile::of_support(std::span<const Index> support,
                                                std::size_t length) {
  return {length, difference_multiset(support, length)};
}

std::size_t DifferenceProfile::total() const {
  std::size_t acc = 0;
  for (const auto& [d, m] : multiplicity) acc += m;
  return acc;
}

bool DifferenceProfile::symmetric() const {
  for (const auto& [d, m] : multiplicity) {
    auto it = multiplicity.find(standard(-d, length));
    if (it == multiplicity.end() || it->second != m) return false;
  }
  return true;
}

nlohmann::json DifferenceProfile::to_json() const {
  nlohmann::json diffs = nlohmann::json::array();
  for (const auto& [d, m] : multiplicity)
    if (m > 0) diffs.push_back({d, m});
  return {{"L", length}, {"differences", diffs}};
}

DifferenceProfile DifferenceProfile::from_json(const nlohmann::json& j) {
  DifferenceProfile p;
  p.length = j.at("L").get<std::size_t>();
  if (p.length < 2) throw InvalidArgument("difference profile needs L >= 2");
  for (const auto& entry : j.at("differences")) {
    const auto d = entry.at(0).get<Index>();
    const auto m = entry.at(1).get<std::size_t>();
    if (residue(d, p.length) == 0) throw InvalidArgument("difference profile contains 0");
    p.multiplicity[standard(d, p.length)] += m;
  }
  return p;
}

// ---- canonical orbit ----

std::vector<Index> canonical_orbit(std::span<const Index> support, std::size_t length) {
  std::vector<Index> best, image(support.size());
  for (int flip = 0; flip < 2; ++flip) {
    for (Index t = 0; t < static_cast<Index>(length); ++t) {
      for (std::size_t k = 0; k < support.size(); ++k)
        image[k] = residue((flip ? -support[k] : support[k]) + t, length);
      std::sort(image.begin(), image.end());
      if (best.empty() || image < best) best = image;
    }
  }
  for (Index& i : best) i = standard(i, length);
  std::sort(best.begin(), best.end());
  return best;
}

// ---- beltway solver ----

namespace {

class BeltwaySearch {
 public:
  BeltwaySearch(const DifferenceProfile& profile, std::size_t s, const BeltwayOptions& options)
      : length_(profile.length), target_(s), budget_(options.node_budget),
        remaining_(profile.length, 0) {
    for (const auto& [d, m] : profile.multiplicity)
      remaining_[residue(d, length_)] += static_cast<long>(m);
  }

  void run() {
    points_.push_back(0);
    descend(1);
  }

  std::size_t nodes() const { return nodes_; }
  const std::set<std::vector<Index>>& found() const { return found_; }

 private:
  // Points are added in increasing residue order with 0 as the anchor, so each
  // translate of a solution that contains 0 is visited exactly once.
  void descend(Index start) {
    if (points_.size() == target_) {
      found_.insert(canonical_orbit(points_, length_));
      return;
    }
    const auto n = static_cast<Index>(length_);
    for (Index x = start; x < n; ++x) {
      if (remaining_[x] <= 0) continue;
      if (++nodes_ > budget_)
        throw BudgetExceeded("beltway search exceeded " + std::to_string(budget_) + " nodes");
      if (!consume(x)) continue;
      points_.push_back(x);
      descend(x + 1);
      points_.pop_back();
      release(x);
    }
  }

  bool consume(Index x) {
    std::size_t done = 0;
    bool ok = true;
    for (; done < points_.size(); ++done) {
      const Index p = points_[done];
      --remaining_[residue(x - p, length_)];
      --remaining_[residue(p - x, length_)];
      if (remaining_[residue(x - p, length_)] < 0 || remaining_[residue(p - x, length_)] < 0) {
        ++done;
        ok = false;
        break;
      }
    }
    if (!ok) {
      for (std::size_t k = 0; k < done; ++k) {
        const Index p = points_[k];
        ++remaining_[residue(x - p, length_)];
        ++remaining_[residue(p - x, length_)];
      }
    }
    return ok;
  }

  void release(Index x) {
    for (Index p : points_) {
      ++remaining_[residue(x - p, length_)];
      ++remaining_[residue(p - x, length_)];
    }
  }

  std::size_t length_;
  std::size_t target_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<long> remaining_;
  std::vector<Index> points_;
  std::set<std::vector<Index>> found_;
};

}  // namespace

std::vector<std::vector<Index>> solve_beltway(const DifferenceProfile& profile, std::size_t s,
                                              const BeltwayOptions& options,
                                              BeltwayStats* stats) {
  if (profile.length < 1) throw InvalidArgument("difference profile without length");
  if (s == 0) throw InvalidArgument("target size must be positive");
  if (profile.total() != s * (s - 1))
    throw InvalidArgument("difference profile has " + std::to_string(profile.total()) +
                          " differences but s(s-1) = " + std::to_string(s * (s - 1)));
  if (s > profile.length || !profile.symmetric()) return {};
  BeltwaySearch search(profile, s, options);
  search.run();
  if (stats) stats->nodes = search.nodes();
  return {search.found().begin(), search.found().end()};
}

// ---- phase retrieval ----

double power_spectrum_residual(const Signal& theta, const Signal& power) {
  const Signal p = power_spectrum(theta);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p.values()[k] - power.values()[k];
    num += d * d;
    den += power.values()[k] * power.values()[k];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

Signal refine_on_support(const Signal& start, const Signal& power, int iterations) {
  const std::size_t n = start.size();
  if (power.size() != n) throw LengthMismatch(power.size(), n);
  const auto support = start.support();
  const auto s = static_cast<Eigen::Index>(support.size());
  if (s == 0) return start;
  const auto L = static_cast<Index>(n);
  // phase[xi][k] = exp(-2 pi i xi p_k / L)
  std::vector<Complex> phase(n * support.size());
  for (Index xi = first_index(n); xi <= last_index(n); ++xi)
    for (std::size_t k = 0; k < support.size(); ++k) {
      const Index r = residue(xi * support[k], n);
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(L);
      phase[static_cast<std::size_t>(xi - first_index(n)) * support.size() + k] =
          std::polar(1.0, angle);
    }

  auto cost_of = [&](const Signal& theta, Eigen::VectorXd* residual, Spectrum* spec) {
    Spectrum t = dft(theta);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) r(static_cast<Eigen::Index>(k)) =
        std::norm(t.values()[k]) - power.values()[k];
    const double c = r.squaredNorm();
    if (residual) *residual = std::move(r);
    if (spec) *spec = std::move(t);
    return c;
  };

  Signal current = start;
  Eigen::VectorXd r;
  Spectrum spec;
  double cost = cost_of(current, &r, &spec);
  double lambda = 1e-3;
  for (int it = 0; it < iterations && cost > 0.0; ++it) {
    Eigen::MatrixXd J(static_cast<Eigen::Index>(n), s);
    for (std::size_t row = 0; row < n; ++row)
      for (Eigen::Index k = 0; k < s; ++k)
        J(static_cast<Eigen::Index>(row), k) =
            2.0 * (std::conj(spec.values()[row]) * phase[row * support.size() + static_cast<std::size_t>(k)]).real();
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-300);
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      Signal trial = current;
      for (Eigen::Index k = 0; k < s; ++k) trial(support[static_cast<std::size_t>(k)]) += step(k);
      Eigen::VectorXd r_trial;
      Spectrum s_trial;
      const double c_trial = cost_of(trial, &r_trial, &s_trial);
      if (c_trial < cost) {
        const double rel_step = step.norm() / std::max(current.norm(), 1e-300);
        current = std::move(trial);
        r = std::move(r_trial);
        spec = std::move(s_trial);
        cost = c_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = rel_step > 1e-15;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  return current;
}

namespace {

Signal canonical_sign(Signal s) {
  for (double v : s.values()) {
    if (v == 0.0) continue;
    if (v < 0.0) s *= -1.0;
    break;
  }
  return s;
}

// Initial values on a collision-free support from autocorrelation lags:
// A(p_j - p_i) = theta(p_i) theta(p_j). Magnitudes by least squares on
// log|theta(p_i)| + log|theta(p_j)| = log|A|, signs relative to p_0.
std::vector<Signal> initial_values(const std::vector<Index>& support, const Signal& autocorr) {
  const std::size_t n = autocorr.size();
  const std::size_t s = support.size();
  std::vector<Signal> out;
  if (s == 1) {
    out.push_back(Signal::delta(n, support[0], std::sqrt(std::max(autocorr(0), 0.0))));
    return out;
  }
  if (s == 2) {
    const double c = autocorr(support[1] - support[0]);
    const double a0 = std::max(autocorr(0), 0.0);
    const double disc = std::sqrt(std::max(a0 * a0 - 4.0 * c * c, 0.0));
    const double big = std::sqrt((a0 + disc) / 2.0);
    const double small = std::sqrt(std::max(a0 - big * big, 0.0));
    const double sign = c < 0.0 ? -1.0 : 1.0;
    Signal first(n), second(n);
    first(support[0]) = big;
    first(support[1]) = sign * small;
    second(support[0]) = small;
    second(support[1]) = sign * big;
    out.push_back(first);
    if (second != first) out.push_back(second);
    return out;
  }
  const auto rows = static_cast<Eigen::Index>(s * (s - 1) / 2);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(s));
  Eigen::VectorXd b(rows);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j) {
      M(row, static_cast<Eigen::Index>(i)) = 1.0;
      M(row, static_cast<Eigen::Index>(j)) = 1.0;
      b(row) = std::log(std::max(std::fabs(autocorr(support[j] - support[i])), 1e-300));
      ++row;
    }
  const Eigen::VectorXd u = M.colPivHouseholderQr().solve(b);
  Signal theta(n);
  theta(support[0]) = std::exp(u(0));
  for (std::size_t j = 1; j < s; ++j) {
    const double sign = autocorr(support[j] - support[0]) < 0.0 ? -1.0 : 1.0;
    theta(support[j]) = sign * std::exp(u(static_cast<Eigen::Index>(j)));
  }
  out.push_back(theta);
  return out;
}

}  // namespace

std::vector<PhaseRetrievalCandidate> recover_from_power_spectrum(
    const Signal& power, const DiluteClassSpec& class_hint, const PhaseRetrievalOptions& options) {
  const std::size_t n = power.size();
  if (class_hint.length != 0 && class_hint.length != n) throw LengthMismatch(class_hint.length, n);
  // Real signals have P(xi) = P(-xi); average to suppress asymmetric noise.
  Signal p = power;
  for (Index xi = p.first(); xi <= p.last(); ++xi) p(xi) = 0.5 * (power(xi) + power(-xi));
  const Signal autocorr = idft(Spectrum(std::vector<Complex>(p.values().begin(), p.values().end())));

  const double threshold =
      options.threshold.value_or(0.5 * class_hint.floor_m * class_hint.floor_m);
  DifferenceProfile profile{n, {}};
  for (Index l = autocorr.first(); l <= autocorr.last(); ++l)
    if (residue(l, n) != 0 && std::fabs(autocorr(l)) > threshold) profile.multiplicity[l] = 1;
  const std::size_t count = profile.total();
  std::size_t s = 1;
  while (s * (s - 1) < count) ++s;
  if (s * (s - 1) != count)
    throw NumericalError("autocorrelation thresholding found " + std::to_string(count) +
                         " lags, which is not s(s-1) for any s; lower or raise the threshold");
  if (class_hint.sparsity != 0 && class_hint.sparsity != s)
    throw NumericalError("autocorrelation implies s = " + std::to_string(s) +
                         " but the class hint has s = " + std::to_string(class_hint.sparsity));

  std::vector<std::vector<Index>> supports;
  if (s == 1) {
    supports.push_back({0});
  } else {
    supports = solve_beltway(profile, s, options.beltway);
  }

  std::vector<PhaseRetrievalCandidate> out;
  for (const auto& support : supports) {
    for (const Signal& start : initial_values(support, autocorr)) {
      Signal refined = canonical_sign(refine_on_support(start, p, options.refine_iterations));
      const double residual = power_spectrum_residual(refined, power);
      if (residual <= options.tolerance) out.push_back({std::move(refined), residual});
    }
  }
  return out;
}

// ---- local uniqueness ----

namespace {

double delta2_norm(const Signal& theta0, const Signal& h) {
  const auto parts = second_moment_difference_expansion(theta0, h);
  return (parts.linear + parts.quadratic).frobenius_norm();
}

}  // namespace

nlohmann::json LocalUniquenessReport::to_json() const {
  return {{"trials", trials},
          {"radius", radius},
          {"min_ratio", min_ratio},
          {"min_normalized_ratio", min_normalized},
          {"curvature_floor", curvature_floor},
          {"max_observed_varrho", max_observed_varrho}};
}

LocalUniquenessReport local_uniqueness_probe(const Signal& theta0, const DiluteClassSpec& spec,
                                             double radius, std::size_t trials, Rng& rng) {
  const auto support = theta0.support();
  if (support.empty()) throw InvalidArgument("local uniqueness probe needs a nonzero signal");
  if (!is_collision_free(support, theta0.size()))
    throw InvalidArgument("local uniqueness probe needs a collision-free support");
  const double L = static_cast<double>(theta0.size());
  const double s = static_cast<double>(support.size());
  LocalUniquenessReport report;
  report.trials = trials;
  report.radius = radius;
  report.min_ratio = std::numeric_limits<double>::infinity();
  const double eps = spec.slack;
  report.curvature_floor = spec.floor_m * std::sqrt(2.0 * eps / (2.0 + eps)) * std::sqrt(s / L);
  std::size_t done = 0;
  while (done < trials) {
    Signal theta = theta0;
    Signal dir(theta0.size());
    for (Index i : support) dir(i) = standard_normal(rng);
    const double scale = uniform01(rng) * radius * std::sqrt(L) / std::max(dir.norm(), 1e-300);
    for (Index i : support) {
      double v = theta0(i) + scale * dir(i);
      // Stay in the magnitude band, keeping the sign of theta0.
      const double mag = std::clamp(std::fabs(v), spec.floor_m, spec.cap_M);
      v = theta0(i) < 0.0 ? -mag : mag;
      theta(i) = v;
    }
    const double r = rho(theta, theta0).distance;
    if (!(r > 0.0)) continue;
    const double ratio = delta2_norm(theta0, theta - theta0) / r;
    report.min_ratio = std::min(report.min_ratio, ratio);
    report.max_observed_varrho = std::max(report.max_observed_varrho, r / std::sqrt(L));
    ++done;
  }
  report.min_normalized = report.min_ratio * std::sqrt(L / s);
  return report;
}

std::vector<double> uniqueness_ratio_along(const Signal& theta0, const Signal& direction,
                                           std::span<const double> steps) {
  std::vector<double> out;
  for (double t : steps) {
    const Signal h = t * direction;
    const double r = rho(theta0 + h, theta0).distance;
    out.push_back(r > 0.0 ? delta2_norm(theta0, h) / r : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

// ---- collision-free sizes ----

namespace {

void max_cf_search(detail::DifferenceTable& table, Index start, std::size_t length,
                   std::size_t ceiling, std::size_t& best) {
  best = std::max(best, table.size());
  if (best >= ceiling) return;
  std::vector<Index> candidates;
  for (Index x = start; x < static_cast<Index>(length); ++x)
    if (table.can_add(x)) candidates.push_back(x);
  if (table.size() + candidates.size() <= best) return;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (table.size() + (candidates.size() - k) <= best) return;
    if (!table.try_add(candidates[k])) continue;
    max_cf_search(table, candidates[k] + 1, length, ceiling, best);
    table.pop();
    if (best >= ceiling) return;
  }
}

}  // namespace

std::size_t max_collision_free_size(std::size_t length) {
  if (length == 0) throw InvalidArgument("L must be positive");
  if (length > kMaxCollisionFreeGuard)
    throw SizeGuardError("exact collision-free search is limited to L <= " +
                         std::to_string(kMaxCollisionFreeGuard));
  // s(s-1) <= L - 1 caps the answer.
  std::size_t ceiling = 1;
  while ((ceiling + 1) * ceiling <= length - 1) ++ceiling;
  detail::DifferenceTable table(length);
  table.try_add(0);  // translation invariance: anchor at 0
  std::size_t best = 1;
  max_cf_search(table, 1, length, ceiling, best);
  return best;
}

ProbabilityEstimate collision_free_probability(std::size_t length, std::size_t s,
                                               std::size_t samples, Rng& rng) {
  if (s == 0 || s > length) throw InvalidArgument("need 1 <= s <= L");
  if (samples == 0) throw InvalidArgument("need at least one sample");
  double sum = 0.0, sum_sq = 0.0;
  std::vector<Index> valid;
  for (std::size_t n = 0; n < samples; ++n) {
    detail::DifferenceTable table(length);
    double weight = 1.0;
    for (std::size_t k = 0; k < s; ++k) {
      valid.clear();
      for (Index x = 0; x < static_cast<Index>(length); ++x)
        if (table.can_add(x)) valid.push_back(x);
      weight *= static_cast<double>(valid.size()) / static_cast<double>(length - k);
      if (valid.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
      table.try_add(valid[pick(rng)]);
    }
    sum += weight;
    sum_sq += weight * weight;
  }
  const double m = sum / static_cast<double>(samples);
  const double var = std::max(sum_sq / static_cast<double>(samples) - m * m, 0.0);
  return {m, std::sqrt(var / static_cast<double>(samples))};
}

}  // namespace mra
