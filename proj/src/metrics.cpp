#include "ppm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ppm/error.hpp"

namespace ppm {
namespace {

void check_pair(const FloatRaster& pred, const FloatRaster& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height() || pred.channels() != 1 || gt.channels() != 1)
    throw ShapeError("metrics: prediction and ground truth shapes differ");
}

void check_sequence(std::span<const FloatRaster> pred, std::span<const FloatRaster> gt) {
  if (pred.size() != gt.size()) throw ShapeError("metrics: prediction and ground truth lengths differ");
  if (pred.size() < 2) throw DataError("metrics: temporal metrics need at least two frames");
  for (std::size_t t = 0; t < pred.size(); ++t) check_pair(pred[t], gt[t]);
}

struct Accumulator {
  double sum = 0.0;
  std::size_t count = 0;
};

// Per-pixel sums of temporal errors over valid transitions.
std::vector<Accumulator> temporal_errors(std::span<const FloatRaster> pred, std::span<const FloatRaster> gt,
                                         std::vector<double>* all = nullptr) {
  check_sequence(pred, gt);
  std::vector<Accumulator> acc(pred.front().size());
  for (std::size_t t = 0; t + 1 < pred.size(); ++t) {
    const auto p0 = pred[t].data(), p1 = pred[t + 1].data();
    const auto g0 = gt[t].data(), g1 = gt[t + 1].data();
    for (std::size_t i = 0; i < acc.size(); ++i) {
      if (!std::isfinite(g0[i]) || !std::isfinite(g1[i])) continue;
      const double e = std::abs((static_cast<double>(p1[i]) - p0[i]) - (static_cast<double>(g1[i]) - g0[i]));
      acc[i].sum += e;
      ++acc[i].count;
      if (all) all->push_back(e);
    }
  }
  return acc;
}

}  // namespace

double epe(const FloatRaster& pred, const FloatRaster& gt) {
  check_pair(pred, gt);
  Accumulator a;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!std::isfinite(gt.data()[i])) continue;
    a.sum += std::abs(static_cast<double>(pred.data()[i]) - gt.data()[i]);
    ++a.count;
  }
  return a.count ? a.sum / static_cast<double>(a.count) : 0.0;
}

double delta_npx(const FloatRaster& pred, const FloatRaster& gt, double n) {
  check_pair(pred, gt);
  std::size_t bad = 0, valid = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!std::isfinite(gt.data()[i])) continue;
    ++valid;
    if (std::abs(static_cast<double>(pred.data()[i]) - gt.data()[i]) > n) ++bad;
  }
  return valid ? static_cast<double>(bad) / static_cast<double>(valid) : 0.0;
}

double tepe(std::span<const FloatRaster> pred, std::span<const FloatRaster> gt) {
  Accumulator total;
  for (const auto& a : temporal_errors(pred, gt)) {
    total.sum += a.sum;
    total.count += a.count;
  }
  return total.count ? total.sum / static_cast<double>(total.count) : 0.0;
}

double delta_t_npx(std::span<const FloatRaster> pred, std::span<const FloatRaster> gt, double n,
                   TemporalAggregation aggregation) {
  if (aggregation == TemporalAggregation::kPerTransition) {
    std::vector<double> all;
    temporal_errors(pred, gt, &all);
    std::size_t bad = 0;
    for (double e : all) bad += e > n;
    return all.empty() ? 0.0 : static_cast<double>(bad) / static_cast<double>(all.size());
  }
  std::size_t bad = 0, valid = 0;
  for (const auto& a : temporal_errors(pred, gt)) {
    if (a.count == 0) continue;
    ++valid;
    if (a.sum / static_cast<double>(a.count) > n) ++bad;
  }
  return valid ? static_cast<double>(bad) / static_cast<double>(valid) : 0.0;
}

MetricsReport evaluate_sequence(std::span<const FloatRaster> pred, std::span<const FloatRaster> gt,
                                const std::vector<double>& thresholds, TemporalAggregation aggregation) {
  if (pred.size() != gt.size() || pred.empty()) throw ShapeError("metrics: prediction and ground truth lengths differ");
  MetricsReport r;
  r.frames = static_cast<int>(pred.size());
  Accumulator err;
  std::map<double, std::size_t> bad;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    check_pair(pred[t], gt[t]);
    for (std::size_t i = 0; i < gt[t].size(); ++i) {
      const float g = gt[t].data()[i];
      if (!std::isfinite(g)) continue;
      const double e = std::abs(static_cast<double>(pred[t].data()[i]) - g);
      err.sum += e;
      ++err.count;
      for (double n : thresholds) bad[n] += e > n;
    }
  }
  r.valid_pixels = err.count;
  r.epe = err.count ? err.sum / static_cast<double>(err.count) : 0.0;
  for (double n : thresholds) r.delta_npx[n] = err.count ? static_cast<double>(bad[n]) / static_cast<double>(err.count) : 0.0;
  if (pred.size() >= 2) {
    r.tepe = tepe(pred, gt);
    for (double n : thresholds) r.delta_t_npx[n] = delta_t_npx(pred, gt, n, aggregation);
    for (const auto& a : temporal_errors(pred, gt)) r.valid_temporal_pixels += a.count > 0;
  }
  return r;
}

namespace {
std::string threshold_key(double n) {
  std::ostringstream s;
  s << n;
  return s.str();
}
}  // namespace

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json delta = nlohmann::json::object(), delta_t = nlohmann::json::object();
  for (const auto& [n, v] : r.delta_npx) delta[threshold_key(n)] = v;
  for (const auto& [n, v] : r.delta_t_npx) delta_t[threshold_key(n)] = v;
  return {{"frames", r.frames},     {"epe", r.epe},
          {"delta_npx", delta},     {"tepe", r.tepe},
          {"delta_t_npx", delta_t}, {"valid_pixels", r.valid_pixels},
          {"valid_temporal_pixels", r.valid_temporal_pixels}};
}

std::string report_table(const MetricsReport& r) {
  std::ostringstream out;
  char line[96];
  auto row = [&](const std::string& name, double value) {
    std::snprintf(line, sizeof(line), "%-16s %12.6f\n", name.c_str(), value);
    out << line;
  };
  std::snprintf(line, sizeof(line), "%-16s %12d\n", "frames", r.frames);
  out << line;
  row("EPE", r.epe);
  for (const auto& [n, v] : r.delta_npx) row("delta_" + threshold_key(n) + "px", v);
  row("TEPE", r.tepe);
  for (const auto& [n, v] : r.delta_t_npx) row("delta^t_" + threshold_key(n) + "px", v);
  return out.str();
}

}  // namespace ppm
