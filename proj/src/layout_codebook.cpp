#include "normnet/layout_codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "normnet/errors.hpp"
#include "normnet/io.hpp"

namespace normnet {

double layout_distance(const NormalMap& a, const NormalMap& b) {
  if (a.w != b.w || a.h != b.h) throw DataError("layout resolution mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.n.size(); ++i) {
    if (!a.valid[i] || !b.valid[i]) continue;
    sum += angle_deg(a.n[i], b.n[i]);
    ++count;
  }
  if (count == 0) throw DataError("layouts share no valid pixels");
  return sum / double(count);
}

namespace {

struct Assignment {
  std::vector<int> nearest;        // medoid slot index per point
  std::vector<double> d_nearest;
  std::vector<double> d_second;
};

Assignment assign_points(const std::vector<std::vector<double>>& d, const std::vector<int>& medoids) {
  const int n = int(d.size());
  Assignment a;
  a.nearest.assign(std::size_t(n), 0);
  a.d_nearest.assign(std::size_t(n), 0.0);
  a.d_second.assign(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double d1 = std::numeric_limits<double>::max(), d2 = std::numeric_limits<double>::max();
    int slot = 0;
    for (int s = 0; s < int(medoids.size()); ++s) {
      const double dist = d[std::size_t(i)][std::size_t(medoids[std::size_t(s)])];
      if (dist < d1) {
        d2 = d1;
        d1 = dist;
        slot = s;
      } else if (dist < d2) {
        d2 = dist;
      }
    }
    a.nearest[std::size_t(i)] = slot;
    a.d_nearest[std::size_t(i)] = d1;
    a.d_second[std::size_t(i)] = d2;
  }
  return a;
}

}  // namespace

LayoutCodebook build_layout_codebook(std::span<const NormalMap> corpus, int k, std::uint64_t seed) {
  (void)seed;  // the procedure is fully deterministic; seed kept for interface stability
  const int n = int(corpus.size());
  if (k <= 0) throw DataError("layout codebook needs K >= 1");
  if (n < k) throw DataError("layout corpus smaller than K");

  std::vector<std::vector<double>> d(std::size_t(n), std::vector<double>(std::size_t(n), 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d[std::size_t(i)][std::size_t(j)] = d[std::size_t(j)][std::size_t(i)] = layout_distance(corpus[std::size_t(i)], corpus[std::size_t(j)]);

  // init: most central point first, then farthest-point additions
  std::vector<int> medoids;
  std::vector<char> is_medoid(std::size_t(n), 0);
  {
    int best = 0;
    double best_sum = std::numeric_limits<double>::max();
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += d[std::size_t(i)][std::size_t(j)];
      if (s < best_sum) {
        best_sum = s;
        best = i;
      }
    }
    medoids.push_back(best);
    is_medoid[std::size_t(best)] = 1;
  }
  while (int(medoids.size()) < k) {
    int far = -1;
    double far_d = -1.0;
    for (int i = 0; i < n; ++i) {
      if (is_medoid[std::size_t(i)]) continue;
      double nearest = std::numeric_limits<double>::max();
      for (int m : medoids) nearest = std::min(nearest, d[std::size_t(i)][std::size_t(m)]);
      if (nearest > far_d) {
        far_d = nearest;
        far = i;
      }
    }
    medoids.push_back(far);
    is_medoid[std::size_t(far)] = 1;
  }

  // best-single-swap descent
  for (int sweep = 0; sweep < 100; ++sweep) {
    const Assignment a = assign_points(d, medoids);
    double best_delta = -1e-12;
    int best_slot = -1, best_o = -1;
    for (int slot = 0; slot < k; ++slot) {
      for (int o = 0; o < n; ++o) {
        if (is_medoid[std::size_t(o)]) continue;
        double delta = 0.0;
        for (int i = 0; i < n; ++i) {
          const double cur = a.d_nearest[std::size_t(i)];
          const double to_o = d[std::size_t(i)][std::size_t(o)];
          if (a.nearest[std::size_t(i)] == slot)
            delta += std::min(a.d_second[std::size_t(i)], to_o) - cur;
          else if (to_o < cur)
            delta += to_o - cur;
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_slot = slot;
          best_o = o;
        }
      }
    }
    if (best_slot < 0) break;
    is_medoid[std::size_t(medoids[std::size_t(best_slot)])] = 0;
    medoids[std::size_t(best_slot)] = best_o;
    is_medoid[std::size_t(best_o)] = 1;
  }

  std::sort(medoids.begin(), medoids.end());
  LayoutCodebook lcb;
  lcb.k = k;
  lcb.grid_w = corpus[0].w;
  lcb.grid_h = corpus[0].h;
  lcb.medoids.reserve(std::size_t(k));
  for (int m : medoids) lcb.medoids.push_back(corpus[std::size_t(m)]);
  return lcb;
}

int encode_layout(const LayoutCodebook& lcb, const NormalMap& layout) {
  if (layout.w != lcb.grid_w || layout.h != lcb.grid_h)
    throw DataError("layout resolution does not match codebook grid");
  int best = 0;
  double bd = std::numeric_limits<double>::max();
  for (int i = 0; i < lcb.k; ++i) {
    const double dist = layout_distance(lcb.medoids[std::size_t(i)], layout);
    if (dist < bd) {
      bd = dist;
      best = i;
    }
  }
  return best;
}

const NormalMap& decode_layout(const LayoutCodebook& lcb, int idx) {
  if (idx < 0 || idx >= lcb.k) throw DataError("layout class out of range");
  return lcb.medoids[std::size_t(idx)];
}

void save_layout_codebook(const std::filesystem::path& p, const LayoutCodebook& lcb) {
  std::ostringstream os;
  os << "LCB1 " << lcb.k << ' ' << lcb.grid_w << ' ' << lcb.grid_h << '\n';
  for (const NormalMap& m : lcb.medoids)
    for (const Vec3& v : m.n)
      os << float_text(v.x) << ' ' << float_text(v.y) << ' ' << float_text(v.z) << '\n';
  write_file_text(p, os.str());
}

LayoutCodebook load_layout_codebook(const std::filesystem::path& p) {
  std::istringstream is(read_file_text(p));
  std::string magic;
  LayoutCodebook lcb;
  if (!(is >> magic >> lcb.k >> lcb.grid_w >> lcb.grid_h) || magic != "LCB1")
    throw DataError("bad layout codebook header: " + p.string());
  if (lcb.k <= 0 || lcb.grid_w <= 0 || lcb.grid_h <= 0)
    throw DataError("bad layout codebook sizes: " + p.string());
  lcb.medoids.assign(std::size_t(lcb.k), NormalMap(lcb.grid_w, lcb.grid_h));
  for (NormalMap& m : lcb.medoids) {
    for (Vec3& v : m.n) {
      std::string a, b, c;
      if (!(is >> a >> b >> c)) throw DataError("truncated layout codebook: " + p.string());
      v = Vec3{parse_float(a, p.string()), parse_float(b, p.string()), parse_float(c, p.string())};
    }
  }
  return lcb;
}

}  // namespace normnet
