#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "normnet/metrics.hpp"
#include "normnet/rng.hpp"

using namespace normnet;
using doctest::Approx;

namespace {

std::vector<double> random_errors(int count, Rng& rng) {
  std::vector<double> e(static_cast<std::size_t>(count));
  for (double& v : e) v = rng.uniform(0.0, 180.0);
  return e;
}

// Independent reference: sort a copy and scan.
MetricSummary reference_summary(std::vector<double> e) {
  MetricSummary s;
  s.count = e.size();
  std::sort(e.begin(), e.end());
  double sum = 0, sq = 0;
  for (double v : e) {
    sum += v;
    sq += v * v;
  }
  s.mean = sum / double(e.size());
  s.rmse = std::sqrt(sq / double(e.size()));
  s.median = e[(e.size() - 1) / 2];
  for (double t : kPgpThresholds) {
    std::size_t hits = 0;
    for (double v : e)
      if (v <= t) ++hits;
    s.thresholds.push_back(t);
    s.pgp.push_back(double(hits) / double(e.size()));
  }
  return s;
}

}  // namespace

TEST_CASE("two-pixel population at 0 and 90 degrees") {
  MetricSummary s = summarize({0.0, 90.0});
  CHECK(s.count == 2);
  CHECK(s.mean == Approx(45.0).epsilon(1e-9));
  CHECK(s.median == 0.0);  // lower middle of an even count
  CHECK(s.rmse == Approx(90.0 / std::sqrt(2.0)).epsilon(1e-9));
  REQUIRE(s.pgp.size() == 3);
  CHECK(s.pgp[0] == Approx(0.5));  // 11.25
  CHECK(s.pgp[1] == Approx(0.5));  // 22.5
  CHECK(s.pgp[2] == Approx(0.5));  // 30 is inclusive, but 90 is out either way
}

TEST_CASE("constant population collapses every statistic onto the constant") {
  MetricSummary s = summarize(std::vector<double>(37, 10.0));
  CHECK(s.mean == Approx(10.0));
  CHECK(s.median == 10.0);
  CHECK(s.rmse == Approx(10.0));
  for (double f : s.pgp) CHECK(f == 1.0);
}

TEST_CASE("pgp thresholds are inclusive") {
  MetricSummary s = summarize({11.25, 22.5, 30.0, 100.0});
  CHECK(s.pgp[0] == Approx(0.25));
  CHECK(s.pgp[1] == Approx(0.5));
  CHECK(s.pgp[2] == Approx(0.75));
}

TEST_CASE("summarize agrees with a sort-and-scan reference on random populations") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int count = 1 + rng.uniform_int(500);
    std::vector<double> e = random_errors(count, rng);
    MetricSummary got = summarize(e);
    MetricSummary ref = reference_summary(e);
    CHECK(got.count == ref.count);
    CHECK(got.mean == Approx(ref.mean).epsilon(1e-12));
    CHECK(got.median == ref.median);
    CHECK(got.rmse == Approx(ref.rmse).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i) CHECK(got.pgp[i] == Approx(ref.pgp[i]).epsilon(1e-12));
  }
}

TEST_CASE("pgp is monotone non-decreasing in the threshold") {
  Rng rng(43);
  const std::vector<double> e = random_errors(400, rng);
  const double custom[] = {1.0, 5.0, 11.25, 22.5, 30.0, 45.0, 90.0, 180.0};
  MetricSummary s = summarize(e, custom);
  REQUIRE(s.pgp.size() == 8);
  for (std::size_t i = 1; i < s.pgp.size(); ++i) CHECK(s.pgp[i] >= s.pgp[i - 1]);
  CHECK(s.pgp.back() == 1.0);
}

TEST_CASE("summarize rejects an empty population") {
  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}

TEST_CASE("angular_error_map hits exact anchors") {
  NormalMap pred(4, 3), gt(4, 3);
  // Default-constructed maps are all (0,0,-1): zero error everywhere.
  std::vector<double> zero = angular_error_map(pred, gt);
  REQUIRE(zero.size() == 12);
  for (double e : zero) CHECK(e == Approx(0.0).epsilon(1e-9));

  pred.at(0, 0) = Vec3{1, 0, 0};  // perpendicular to gt
  pred.at(0, 1) = Vec3{0, 0, 1};  // opposite
  std::vector<double> e = angular_error_map(pred, gt);
  std::sort(e.begin(), e.end());
  CHECK(e[10] == Approx(90.0).epsilon(1e-9));
  CHECK(e[11] == Approx(180.0).epsilon(1e-9));
}

TEST_CASE("angular_error_map clamps dot products instead of producing NaN") {
  NormalMap pred(1, 1), gt(1, 1);
  // Slightly over-unit vectors whose dot exceeds 1 in float.
  pred.at(0, 0) = Vec3{0.0f, 0.0f, -1.0000001f};
  gt.at(0, 0) = Vec3{0.0f, 0.0f, -1.0000001f};
  std::vector<double> e = angular_error_map(pred, gt);
  REQUIRE(e.size() == 1);
  CHECK(std::isfinite(e[0]));
  CHECK(e[0] <= 0.1);
}

TEST_CASE("invalid pixels are excluded and their contents are irrelevant") {
  Rng rng(47);
  NormalMap pred(20, 15), gt(20, 15);
  for (int r = 0; r < 15; ++r)
    for (int c = 0; c < 20; ++c) {
      const double phi = rng.uniform(0.0, 2.0 * kPi);
      const double z = -rng.uniform();
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      pred.at(r, c) = Vec3{float(rad * std::cos(phi)), float(rad * std::sin(phi)), float(z)};
    }
  // Invalidate a scattered subset on each side.
  for (int i = 0; i < 40; ++i) pred.valid[std::size_t(rng.uniform_int(300))] = 0;
  for (int i = 0; i < 40; ++i) gt.valid[std::size_t(rng.uniform_int(300))] = 0;

  std::vector<double> base = angular_error_map(pred, gt);
  std::size_t joint = 0;
  for (std::size_t i = 0; i < pred.valid.size(); ++i)
    if (pred.valid[i] && gt.valid[i]) ++joint;
  CHECK(base.size() == joint);

  // Garbage in invalid pixels must not change the population.
  NormalMap scrambled = pred;
  for (std::size_t i = 0; i < scrambled.valid.size(); ++i)
    if (!scrambled.valid[i] || !gt.valid[i]) scrambled.n[i] = Vec3{9.0f, -3.0f, 0.5f};
  std::vector<double> after = angular_error_map(scrambled, gt);
  CHECK(after == base);
}

TEST_CASE("angular_error_map rejects mismatched resolutions") {
  NormalMap a(4, 4), b(5, 4);
  CHECK_THROWS_AS(angular_error_map(a, b), std::invalid_argument);

  // No jointly valid pixels yields an empty population, which summarize rejects.
  NormalMap c(2, 2), d(2, 2);
  for (auto& v : c.valid) v = 0;
  std::vector<double> e = angular_error_map(c, d);
  CHECK(e.empty());
  CHECK_THROWS_AS(summarize(e), std::invalid_argument);
}

TEST_CASE("eval table columns are Mean, Median, RMSE, 11.25, 22.5, 30") {
  const std::string header = eval_header();
  const auto pos = [&](const std::string& s) { return header.find(s); };
  REQUIRE(pos("Mean") != std::string::npos);
  CHECK(pos("Mean") < pos("Median"));
  CHECK(pos("Median") < pos("RMSE"));
  CHECK(pos("RMSE") < pos("11.25"));
  CHECK(pos("11.25") < pos("22.5"));
  CHECK(pos("22.5") < pos("30"));

  MetricSummary s = summarize({0.0, 90.0});
  const std::string row = eval_row("full", s);
  CHECK(row.find("full") != std::string::npos);
  CHECK(row.find("45.0") != std::string::npos);   // mean
  CHECK(row.find("63.6") != std::string::npos);   // rmse 90/sqrt(2)
  CHECK(row.find("50.0") != std::string::npos);   // pgp as percentages
}
