#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mra {

// FNV-1a 64 over the compact dump of j (keys are sorted by nlohmann::json),
// as 16 lowercase hex digits.
std::string config_hash(const nlohmann::json& j);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least squares y = intercept + slope x. Empty when fewer than two distinct x.
std::optional<LinearFit> linear_fit(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> values);

// Sample quantile with linear interpolation, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace mra
