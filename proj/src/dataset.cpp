#include "normnet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "normnet/errors.hpp"
#include "normnet/io.hpp"

namespace normnet {
namespace {

int read_ppm_token(std::istream& in) {
  // Whitespace-separated token with '#' comments, per the plain P6 header rules.
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF) throw DataError("truncated ppm header");
  int value = 0;
  bool any = false;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    any = true;
    ch = in.get();
  }
  if (!any) throw DataError("malformed ppm header token");
  return value;
}

}  // namespace

void save_ppm(const std::filesystem::path& path, const Image8& img) {
  if (img.w <= 0 || img.h <= 0 || img.rgb.size() != std::size_t(img.w) * img.h * 3) {
    throw DataError("ppm image has inconsistent dimensions");
  }
  std::ofstream out = open_out_binary(path);
  out << "P6\n" << img.w << " " << img.h << "\n255\n";
  write_bytes(out, img.rgb);
  if (!out) throw DataError("failed writing " + path.string());
}

Image8 load_ppm(const std::filesystem::path& path) {
  std::ifstream in = open_in_binary(path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || m1 != '6') throw DataError("not a P6 ppm: " + path.string());
  Image8 img;
  img.w = read_ppm_token(in);
  img.h = read_ppm_token(in);
  const int maxval = read_ppm_token(in);
  if (img.w <= 0 || img.h <= 0) throw DataError("bad ppm dimensions in " + path.string());
  if (maxval != 255) throw DataError("only maxval 255 ppm supported: " + path.string());
  // A single whitespace byte separates the header from the raster.
  img.rgb.resize(std::size_t(img.w) * img.h * 3);
  read_bytes(in, img.rgb);
  return img;
}

void save_depth(const std::filesystem::path& path, int w, int h, const std::vector<float>& z) {
  if (w <= 0 || h <= 0 || z.size() != std::size_t(w) * h) {
    throw DataError("depth map has inconsistent dimensions");
  }
  std::ofstream out = open_out_binary(path);
  write_magic(out, "DPT1");
  write_u32le(out, std::uint32_t(w));
  write_u32le(out, std::uint32_t(h));
  write_f32le_array(out, z);
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<float> load_depth(const std::filesystem::path& path, int* w, int* h) {
  std::ifstream in = open_in_binary(path);
  expect_magic(in, "DPT1", path.string());
  const std::uint32_t uw = read_u32le(in);
  const std::uint32_t uh = read_u32le(in);
  if (uw == 0 || uh == 0 || uw > (1u << 20) || uh > (1u << 20)) {
    throw DataError("bad depth dimensions in " + path.string());
  }
  std::vector<float> z(std::size_t(uw) * uh);
  read_f32le_array(in, z);
  if (!in) throw DataError("truncated depth file: " + path.string());
  if (w) *w = int(uw);
  if (h) *h = int(uh);
  return z;
}

std::string scene_stem(int index) {
  if (index < 0 || index > 9999) throw DataError("scene index out of range");
  std::string s = std::to_string(index);
  return std::string(4 - s.size(), '0') + s;
}

void save_scene(const std::filesystem::path& dir, int index, const SceneSample& s) {
  std::filesystem::create_directories(dir);
  const std::string stem = scene_stem(index);
  save_ppm(dir / (stem + ".ppm"), Image8{s.img_w, s.img_h, s.image});
  save_normal_map(dir / (stem + ".nrm"), s.normals);
  save_depth(dir / (stem + ".dpt"), s.img_w, s.img_h, s.depth);
  std::ostringstream meta;
  meta << "layout_class " << s.layout_class << "\n";
  for (int i = 0; i < 3; ++i) {
    meta << "vp" << i << " " << double_text(s.vps[i].x) << " " << double_text(s.vps[i].y) << " "
         << double_text(s.vps[i].z) << "\n";
  }
  meta << "focal " << double_text(s.focal) << "\n";
  meta << "edges " << s.edge_rows << " " << s.edge_cols << "\n";
  for (int r = 0; r < s.edge_rows; ++r) {
    for (int c = 0; c < s.edge_cols; ++c) meta << edge_char(s.edge_at(r, c));
    meta << "\n";
  }
  if (!s.layout_gt.n.empty()) {
    const NormalMap grid = downsample_normals(s.layout_gt, kLayoutGrid, kLayoutGrid);
    meta << "layout " << grid.h << " " << grid.w << "\n";
    for (const Vec3& n : grid.n) {
      meta << double_text(n.x) << " " << double_text(n.y) << " " << double_text(n.z) << "\n";
    }
  } else {
    meta << "layout 0 0\n";
  }
  write_file_text(dir / (stem + ".meta"), meta.str());
}

SceneSample load_scene(const std::filesystem::path& dir, int index) {
  const std::string stem = scene_stem(index);
  SceneSample s;
  Image8 img = load_ppm(dir / (stem + ".ppm"));
  s.img_w = img.w;
  s.img_h = img.h;
  s.image = std::move(img.rgb);
  s.normals = load_normal_map(dir / (stem + ".nrm"));
  if (s.normals.w != s.img_w || s.normals.h != s.img_h) {
    throw DataError("normal map size mismatch for scene " + stem);
  }
  int dw = 0, dh = 0;
  s.depth = load_depth(dir / (stem + ".dpt"), &dw, &dh);
  if (dw != s.img_w || dh != s.img_h) throw DataError("depth size mismatch for scene " + stem);

  const std::string meta = read_file_text(dir / (stem + ".meta"));
  std::istringstream in(meta);
  std::string key;
  if (!(in >> key) || key != "layout_class" || !(in >> s.layout_class)) {
    throw DataError("bad meta header for scene " + stem);
  }
  for (int i = 0; i < 3; ++i) {
    std::string vx, vy, vz;
    if (!(in >> key >> vx >> vy >> vz) || key != "vp" + std::to_string(i)) {
      throw DataError("bad vp line in meta for scene " + stem);
    }
    s.vps[i] = Vec3{parse_float(vx), parse_float(vy), parse_float(vz)};
  }
  std::string ftext;
  if (!(in >> key >> ftext) || key != "focal") throw DataError("bad focal line for scene " + stem);
  s.focal = parse_float(ftext);
  if (!(in >> key >> s.edge_rows >> s.edge_cols) || key != "edges" || s.edge_rows < 0 ||
      s.edge_cols < 0) {
    throw DataError("bad edge header for scene " + stem);
  }
  s.edges.assign(std::size_t(s.edge_rows) * s.edge_cols, EdgeLabel::NoEdge);
  for (int r = 0; r < s.edge_rows; ++r) {
    std::string row;
    if (!(in >> row) || int(row.size()) != s.edge_cols) {
      throw DataError("bad edge row in meta for scene " + stem);
    }
    for (int c = 0; c < s.edge_cols; ++c) {
      s.edges[std::size_t(r) * s.edge_cols + c] = edge_from_char(row[c]);
    }
  }
  int gh = 0, gw = 0;
  if (!(in >> key >> gh >> gw) || key != "layout" || gh < 0 || gw < 0) {
    throw DataError("bad layout header in meta for scene " + stem);
  }
  if (gh > 0 && gw > 0) {
    s.layout_gt = NormalMap(gw, gh);
    for (std::size_t i = 0; i < s.layout_gt.n.size(); ++i) {
      std::string nx, ny, nz;
      if (!(in >> nx >> ny >> nz)) throw DataError("truncated layout grid for scene " + stem);
      s.layout_gt.n[i] = Vec3{parse_float(nx), parse_float(ny), parse_float(nz)};
      s.layout_gt.valid[i] = 1;
    }
  }
  return s;
}

std::vector<int> list_scene_ids(const std::filesystem::path& dir) {
  std::vector<int> ids;
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ppm") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.size() != 4 || !std::all_of(stem.begin(), stem.end(),
                                         [](unsigned char c) { return std::isdigit(c); })) {
      continue;
    }
    ids.push_back(std::stoi(stem));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace normnet
