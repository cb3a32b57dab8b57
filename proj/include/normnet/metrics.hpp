#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "normnet/normal_map.hpp"

namespace normnet {

// Per-pixel angular errors in degrees over jointly valid pixels.
std::vector<double> angular_error_map(const NormalMap& pred, const NormalMap& gt);

inline constexpr std::array<double, 3> kPgpThresholds = {11.25, 22.5, 30.0};

struct MetricSummary {
  std::size_t count = 0;
  double mean = 0;
  double median = 0;
  double rmse = 0;
  std::vector<double> thresholds;
  std::vector<double> pgp;  // fraction of errors <= threshold, aligned with `thresholds`
};

// Pooled-population statistics; median of an even count is the lower middle
// element. Throws on an empty population.
MetricSummary summarize(std::vector<double> errors,
                        std::span<const double> thresholds = kPgpThresholds);

std::string eval_header(const std::string& label_col = "method");
std::string eval_row(const std::string& name, const MetricSummary& m);

}  // namespace normnet
