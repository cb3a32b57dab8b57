#include "normnet/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "normnet/errors.hpp"
#include "normnet/io.hpp"
#include "normnet/rng.hpp"

namespace normnet {

Vec2 stereo_project(const Vec3& n) {
  const double d = 1.0 - double(n.z);
  return Vec2{double(n.x) / d, double(n.y) / d};
}

namespace {

void require_unit_facing(const Vec3& n) {
  if (!is_unit(n)) throw DataError("normal is not unit length");
  if (n.z > 1e-6f) throw DataError("normal is not camera-facing (z > 0)");
}

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// d strictly inside the circumcircle of ccw triangle (a,b,c).
bool in_circumcircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double ax = a.x - d.x, ay = a.y - d.y;
  const double bx = b.x - d.x, by = b.y - d.y;
  const double cx = c.x - d.x, cy = c.y - d.y;
  const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                     (bx * bx + by * by) * (ax * cy - cx * ay) +
                     (cx * cx + cy * cy) * (ax * by - bx * ay);
  return det > 0.0;
}

// Spherical k-means: k-means++ seeding by squared chord distance, assignment
// by max dot product, centroids renormalized means.
std::vector<Vec3> spherical_kmeans(std::span<const Vec3> samples, int k, Rng& rng) {
  const int n = int(samples.size());
  std::vector<Vec3> centers;
  centers.reserve(std::size_t(k));
  centers.push_back(samples[rng.uniform_int(n)]);
  std::vector<double> d2(std::size_t(n), 0.0);
  while (int(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const Vec3& c : centers) {
        const Vec3 diff = samples[std::size_t(i)] - c;
        best = std::min(best, dot(diff, diff));
      }
      d2[std::size_t(i)] = best;
      total += best;
    }
    int pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (int i = 0; i < n; ++i) {
        r -= d2[std::size_t(i)];
        if (r <= 0.0) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = rng.uniform_int(n);
    }
    centers.push_back(samples[std::size_t(pick)]);
  }

  std::vector<int> assign(std::size_t(n), 0);
  for (int iter = 0; iter < 60; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = -2.0;
      for (int j = 0; j < k; ++j) {
        const double d = dot(samples[std::size_t(i)], centers[std::size_t(j)]);
        if (d > bd) {
          bd = d;
          best = j;
        }
      }
      if (assign[std::size_t(i)] != best) {
        assign[std::size_t(i)] = best;
        changed = true;
      }
    }
    std::vector<Vec3> sum(std::size_t(k), Vec3{0, 0, 0});
    std::vector<int> count(std::size_t(k), 0);
    for (int i = 0; i < n; ++i) {
      sum[std::size_t(assign[std::size_t(i)])] = sum[std::size_t(assign[std::size_t(i)])] + samples[std::size_t(i)];
      ++count[std::size_t(assign[std::size_t(i)])];
    }
    for (int j = 0; j < k; ++j) {
      if (count[std::size_t(j)] > 0 && norm(sum[std::size_t(j)]) > 1e-12) {
        centers[std::size_t(j)] = normalized(sum[std::size_t(j)]);
      } else {
        // empty cluster: grab the sample farthest from its own center
        int far = 0;
        double worst = 2.0;
        for (int i = 0; i < n; ++i) {
          const double d = dot(samples[std::size_t(i)], centers[std::size_t(assign[std::size_t(i)])]);
          if (d < worst) {
            worst = d;
            far = i;
          }
        }
        centers[std::size_t(j)] = samples[std::size_t(far)];
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }
  return centers;
}

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(std::span<const Vec2> pts) {
  const int n = int(pts.size());
  if (n < 3) throw DataError("triangulation needs at least 3 points");

  double lo_x = pts[0].x, hi_x = pts[0].x, lo_y = pts[0].y, hi_y = pts[0].y;
  for (const Vec2& p : pts) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  const double cx = (lo_x + hi_x) / 2, cy = (lo_y + hi_y) / 2;
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1.0}) * 64.0;

  std::vector<Vec2> v(pts.begin(), pts.end());
  v.push_back(Vec2{cx - span, cy - span});      // super-triangle, indices n..n+2
  v.push_back(Vec2{cx + span, cy - span});
  v.push_back(Vec2{cx, cy + span});

  struct Tri {
    int a, b, c;  // ccw
    bool alive = true;
  };
  std::vector<Tri> tris;
  tris.push_back({n, n + 1, n + 2});

  for (int p = 0; p < n; ++p) {
    // cavity: triangles whose circumcircle contains the new point
    std::vector<int> bad;
    for (int t = 0; t < int(tris.size()); ++t) {
      if (!tris[std::size_t(t)].alive) continue;
      const Tri& tr = tris[std::size_t(t)];
      if (in_circumcircle(v[std::size_t(tr.a)], v[std::size_t(tr.b)], v[std::size_t(tr.c)], v[std::size_t(p)]))
        bad.push_back(t);
    }
    // boundary = edges appearing exactly once among cavity triangles
    struct Edge {
      int a, b;
    };
    std::vector<Edge> edges;
    for (int t : bad) {
      const Tri& tr = tris[std::size_t(t)];
      const Edge e[3] = {{tr.a, tr.b}, {tr.b, tr.c}, {tr.c, tr.a}};
      for (const Edge& ed : e) {
        bool dup = false;
        for (std::size_t i = 0; i < edges.size(); ++i) {
          if (edges[i].a == ed.b && edges[i].b == ed.a) {
            edges.erase(edges.begin() + long(i));
            dup = true;
            break;
          }
        }
        if (!dup) edges.push_back(ed);
      }
      tris[std::size_t(t)].alive = false;
    }
    for (const Edge& ed : edges) {
      Tri nt{ed.a, ed.b, p};
      if (orient2d(v[std::size_t(nt.a)], v[std::size_t(nt.b)], v[std::size_t(nt.c)]) < 0.0)
        std::swap(nt.b, nt.c);
      tris.push_back(nt);
    }
  }

  std::vector<std::array<int, 3>> out;
  for (const Tri& tr : tris) {
    if (!tr.alive) continue;
    if (tr.a >= n || tr.b >= n || tr.c >= n) continue;
    std::array<int, 3> t{tr.a, tr.b, tr.c};
    std::sort(t.begin(), t.end());
    out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("triangulation degenerate (collinear points?)");
  return out;
}

NormalCodebook build_normal_codebook(std::span<const Vec3> samples, int k, std::uint64_t seed) {
  if (k < 3) throw DataError("normal codebook needs K >= 3");
  if (int(samples.size()) < k) throw DataError("fewer samples than codewords");
  for (const Vec3& s : samples) require_unit_facing(s);

  Rng rng(seed);
  NormalCodebook cb;
  cb.k = k;
  cb.codewords = spherical_kmeans(samples, k, rng);

  int distinct = 0;
  for (int i = 0; i < k; ++i) {
    bool dup = false;
    for (int j = 0; j < i; ++j)
      if (angle_deg(cb.codewords[std::size_t(i)], cb.codewords[std::size_t(j)]) < 1e-6) dup = true;
    if (!dup) ++distinct;
  }
  if (distinct < 3) throw DataError("codewords collapsed below 3 distinct points");

  std::vector<Vec2> proj(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) proj[std::size_t(i)] = stereo_project(cb.codewords[std::size_t(i)]);
  cb.triangles = delaunay_triangulate(proj);
  return cb;
}

namespace {

// Barycentric coordinates of q in triangle (a,b,c); returns false if degenerate.
bool barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& q, double w[3]) {
  const double det = (b.y - c.y) * (a.x - c.x) + (c.x - b.x) * (a.y - c.y);
  if (std::abs(det) < 1e-18) return false;
  w[0] = ((b.y - c.y) * (q.x - c.x) + (c.x - b.x) * (q.y - c.y)) / det;
  w[1] = ((c.y - a.y) * (q.x - c.x) + (a.x - c.x) * (q.y - c.y)) / det;
  w[2] = 1.0 - w[0] - w[1];
  return true;
}

void check_distribution(const NormalCodebook& cb, std::span<const float> dist) {
  if (int(dist.size()) != cb.k) throw DataError("distribution size does not match codebook");
  double sum = 0.0;
  for (float p : dist) {
    if (p < 0.0f) throw DataError("distribution has negative mass");
    sum += p;
  }
  if (sum <= 0.0) throw DataError("all-zero distribution");
  if (std::abs(sum - 1.0) > 1e-4) throw DataError("distribution does not sum to 1");
}

}  // namespace

std::vector<float> encode_normal(const NormalCodebook& cb, const Vec3& n) {
  require_unit_facing(n);
  std::vector<float> out(std::size_t(cb.k), 0.0f);
  const Vec2 q = stereo_project(n);
  std::vector<Vec2> proj(std::size_t(cb.k));
  for (int i = 0; i < cb.k; ++i) proj[std::size_t(i)] = stereo_project(cb.codewords[std::size_t(i)]);

  constexpr double kEps = 1e-9;
  for (const auto& t : cb.triangles) {
    double w[3];
    if (!barycentric(proj[std::size_t(t[0])], proj[std::size_t(t[1])], proj[std::size_t(t[2])], q, w)) continue;
    if (w[0] >= -kEps && w[1] >= -kEps && w[2] >= -kEps) {
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        w[i] = std::max(w[i], 0.0);
        sum += w[i];
      }
      for (int i = 0; i < 3; ++i) out[std::size_t(t[std::size_t(i)])] = float(w[i] / sum);
      return out;
    }
  }
  // outside the hull: nearest codeword by angle
  int best = 0;
  double bd = -2.0;
  for (int i = 0; i < cb.k; ++i) {
    const double d = dot(n, cb.codewords[std::size_t(i)]);
    if (d > bd) {
      bd = d;
      best = i;
    }
  }
  out[std::size_t(best)] = 1.0f;
  return out;
}

Vec3 decode_triangle(const NormalCodebook& cb, std::span<const float> dist) {
  check_distribution(cb, dist);
  int best = -1;
  double best_score = -1.0;
  for (int t = 0; t < int(cb.triangles.size()); ++t) {
    const auto& tri = cb.triangles[std::size_t(t)];
    const double s = double(dist[std::size_t(tri[0])]) + double(dist[std::size_t(tri[1])]) +
                     double(dist[std::size_t(tri[2])]);
    if (s > best_score) {
      best_score = s;
      best = t;
    }
  }
  if (best < 0 || best_score <= 0.0) throw DataError("no triangle holds probability mass");
  const auto& tri = cb.triangles[std::size_t(best)];
  Vec3 acc{0, 0, 0};
  for (int i = 0; i < 3; ++i) {
    const double w = double(dist[std::size_t(tri[std::size_t(i)])]) / best_score;
    acc = acc + cb.codewords[std::size_t(tri[std::size_t(i)])] * float(w);
  }
  if (norm(acc) < 1e-12) throw DataError("triangle decode cancelled to zero");
  return normalized(acc);
}

Vec3 decode_soft(const NormalCodebook& cb, std::span<const float> dist) {
  check_distribution(cb, dist);
  Vec3 acc{0, 0, 0};
  for (int i = 0; i < cb.k; ++i) acc = acc + cb.codewords[std::size_t(i)] * dist[std::size_t(i)];
  if (norm(acc) < 1e-6) throw DataError("soft decode cancelled to zero");
  return normalized(acc);
}

void save_normal_codebook(const std::filesystem::path& p, const NormalCodebook& cb) {
  std::ostringstream os;
  os << "NCB1 " << cb.k << " stereo 0 0 1\n";
  for (const Vec3& c : cb.codewords)
    os << float_text(c.x) << ' ' << float_text(c.y) << ' ' << float_text(c.z) << '\n';
  os << cb.triangles.size() << '\n';
  for (const auto& t : cb.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  write_file_text(p, os.str());
}

NormalCodebook load_normal_codebook(const std::filesystem::path& p) {
  std::istringstream is(read_file_text(p));
  std::string magic, proj;
  NormalCodebook cb;
  int px, py, pz;
  if (!(is >> magic >> cb.k >> proj >> px >> py >> pz) || magic != "NCB1" || proj != "stereo")
    throw DataError("bad normal codebook header: " + p.string());
  if (cb.k < 3) throw DataError("bad codebook size: " + p.string());
  cb.codewords.resize(std::size_t(cb.k));
  for (Vec3& c : cb.codewords) {
    std::string a, b, d;
    if (!(is >> a >> b >> d)) throw DataError("truncated codebook: " + p.string());
    c = Vec3{parse_float(a, p.string()), parse_float(b, p.string()), parse_float(d, p.string())};
  }
  std::size_t t_count = 0;
  if (!(is >> t_count)) throw DataError("truncated codebook: " + p.string());
  cb.triangles.resize(t_count);
  for (auto& t : cb.triangles) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw DataError("truncated codebook: " + p.string());
    for (int i : t)
      if (i < 0 || i >= cb.k) throw DataError("triangle index out of range: " + p.string());
  }
  return cb;
}

double median_edge_spacing_deg(const NormalCodebook& cb) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& t : cb.triangles) {
    const std::pair<int, int> e[3] = {{t[0], t[1]}, {t[0], t[2]}, {t[1], t[2]}};
    for (const auto& ed : e)
      if (std::find(edges.begin(), edges.end(), ed) == edges.end()) edges.push_back(ed);
  }
  std::vector<double> lens;
  lens.reserve(edges.size());
  for (const auto& ed : edges)
    lens.push_back(angle_deg(cb.codewords[std::size_t(ed.first)], cb.codewords[std::size_t(ed.second)]));
  std::sort(lens.begin(), lens.end());
  return lens[(lens.size() - 1) / 2];
}

}  // namespace normnet
