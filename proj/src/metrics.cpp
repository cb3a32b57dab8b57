#include "normnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace normnet {

std::vector<double> angular_error_map(const NormalMap& pred, const NormalMap& gt) {
  if (pred.w != gt.w || pred.h != gt.h) {
    throw std::invalid_argument("prediction and ground truth resolutions differ");
  }
  std::vector<double> out;
  out.reserve(pred.n.size());
  for (std::size_t i = 0; i < pred.n.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    out.push_back(angle_deg(pred.n[i], gt.n[i]));
  }
  return out;
}

MetricSummary summarize(std::vector<double> errors, std::span<const double> thresholds) {
  if (errors.empty()) throw std::invalid_argument("cannot summarize an empty error population");
  MetricSummary m;
  m.count = errors.size();
  m.thresholds.assign(thresholds.begin(), thresholds.end());
  m.pgp.assign(thresholds.size(), 0.0);
  double sum = 0, sumsq = 0;
  std::vector<std::size_t> hits(thresholds.size(), 0);
  for (const double e : errors) {
    sum += e;
    sumsq += e * e;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      if (e <= thresholds[t]) ++hits[t];
    }
  }
  const double n = double(errors.size());
  m.mean = sum / n;
  m.rmse = std::sqrt(sumsq / n);
  std::sort(errors.begin(), errors.end());
  m.median = errors[(errors.size() - 1) / 2];
  for (std::size_t t = 0; t < thresholds.size(); ++t) m.pgp[t] = double(hits[t]) / n;
  return m;
}

std::string eval_header(const std::string& label_col) {
  std::ostringstream out;
  out << std::left << std::setw(14) << label_col << std::right;
  static constexpr const char* kCols[6] = {"Mean", "Median", "RMSE", "11.25", "22.5", "30"};
  for (const char* col : kCols) out << std::setw(9) << col;
  return out.str();
}

std::string eval_row(const std::string& name, const MetricSummary& m) {
  std::ostringstream out;
  out << std::left << std::setw(14) << name << std::right << std::fixed << std::setprecision(2);
  out << std::setw(9) << m.mean << std::setw(9) << m.median << std::setw(9) << m.rmse;
  for (std::size_t t = 0; t < m.pgp.size() && t < 3; ++t) out << std::setw(9) << m.pgp[t] * 100.0;
  return out.str();
}

}  // namespace normnet
