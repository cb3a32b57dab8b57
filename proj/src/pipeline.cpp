#include "normnet/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "normnet/dataset.hpp"
#include "normnet/errors.hpp"
#include "normnet/infer.hpp"
#include "normnet/io.hpp"
#include "normnet/metrics.hpp"

namespace fs = std::filesystem;

namespace normnet {

namespace {

std::uint64_t named_seed(const PipelineConfig& cfg, const std::string& name) {
  return sub_seed(cfg.seed, name);
}

void require_exists(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p))
    throw DataError("missing artifact: " + p.string() + " (" + hint + ")");
}

int scene_layout_class(const SceneSample& s, const LayoutCodebook& lcb) {
  if (s.layout_class >= 0) return s.layout_class;
  if (s.layout_gt.w <= 0) throw DataError("scene carries no layout ground truth");
  if (s.layout_gt.w == lcb.grid_w && s.layout_gt.h == lcb.grid_h)
    return encode_layout(lcb, s.layout_gt);
  return layout_class_of(lcb, s.layout_gt);
}

std::vector<int> require_scene_ids(const fs::path& dir, const std::string& hint) {
  std::vector<int> ids;
  if (fs::exists(dir)) ids = list_scene_ids(dir);
  if (ids.empty()) throw DataError("no scenes in " + dir.string() + " (" + hint + ")");
  return ids;
}

SceneSample load_training_scene(const PipelineConfig& cfg, const fs::path& dir, int id,
                                const LayoutCodebook* lcb) {
  SceneSample s = load_scene(dir, id);
  if (cfg.augment_data)
    s = augment(s, named_seed(cfg, "augment/" + scene_stem(id)), lcb);
  return s;
}

// Site (r, c) of a gh x gw grid reads the full-resolution pixel under its
// center (same rule as resize_nearest).
std::pair<int, int> site_pixel(int r, int c, int gh, int gw, int h, int w) {
  return {((2 * r + 1) * h) / (2 * gh), ((2 * c + 1) * w) / (2 * gw)};
}

struct EpochLog {
  std::string net;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::vector<double> loss;
};

void write_manifest(const fs::path& p, const EpochLog& log) {
  std::ostringstream os;
  os << "net " << log.net << "\n";
  os << "seed " << log.seed << "\n";
  os << "samples " << log.samples << "\n";
  os << "epochs " << log.loss.size() << "\n";
  for (std::size_t i = 0; i < log.loss.size(); ++i)
    os << "epoch " << i << " " << double_text(log.loss[i]) << "\n";
  write_file_text(p, os.str());
}

std::array<Vec3, 3> meta_vps(const fs::path& p) {
  std::array<Vec3, 3> vps{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  std::istringstream is(read_file_text(p));
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key.size() == 3 && key.compare(0, 2, "vp") == 0 && key[2] >= '0' && key[2] <= '2') {
      Vec3& v = vps[key[2] - '0'];
      if (!(ls >> v.x >> v.y >> v.z))
        throw DataError(p.string() + ": malformed " + key + " line");
    }
    if (key == "edges") break;  // grids follow; nothing else to read
  }
  return vps;
}

std::vector<int> nrm_ids(const fs::path& dir) {
  if (!fs::exists(dir)) throw DataError("missing directory: " + dir.string());
  std::vector<int> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".nrm") continue;
    const std::string stem = e.path().stem().string();
    if (stem.size() != 4 ||
        !std::all_of(stem.begin(), stem.end(), [](unsigned char ch) { return std::isdigit(ch); }))
      continue;
    ids.push_back(std::stoi(stem));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

void apply_tiny_preset(PipelineConfig& cfg) {
  cfg.scene.img_w = 78;
  cfg.scene.img_h = 65;
  cfg.train_count = 24;
  cfg.test_count = 8;
  cfg.normal_samples = 4000;
  cfg.layout_corpus = 360;
  cfg.train_topdown.epochs = 8;
  cfg.train_bottomup.epochs = 6;
  cfg.train_fusion.epochs = 5;
  cfg.train_baseline.epochs = 8;
  cfg.train_topdown.batch = 8;
  cfg.train_bottomup.batch = 8;
  cfg.train_fusion.batch = 8;
  cfg.train_baseline.batch = 8;
  cfg.patches_per_scene = 3;
  cfg.windows_per_scene = 2;
  cfg.tiny_nets = true;
}

PipelineConfig pipeline_config_from(const Config& f) {
  PipelineConfig c;
  c.data_dir = config_str(f, "paths", "data_dir", c.data_dir.string());
  c.test_dir = config_str(f, "paths", "test_dir", c.test_dir.string());
  c.artifacts_dir = config_str(f, "paths", "artifacts_dir", c.artifacts_dir.string());

  c.scene.img_w = int(config_int(f, "scene", "img_w", c.scene.img_w));
  c.scene.img_h = int(config_int(f, "scene", "img_h", c.scene.img_h));
  c.train_count = int(config_int(f, "scene", "train_count", c.train_count));
  c.test_count = int(config_int(f, "scene", "test_count", c.test_count));
  c.scene.cuboid_min = int(config_int(f, "scene", "cuboid_min", c.scene.cuboid_min));
  c.scene.cuboid_max = int(config_int(f, "scene", "cuboid_max", c.scene.cuboid_max));
  c.scene.noise_sigma = config_double(f, "scene", "noise_sigma", c.scene.noise_sigma);
  c.scene.axis_aligned_prob =
      config_double(f, "scene", "axis_aligned_prob", c.scene.axis_aligned_prob);
  c.scene.hfov_deg = config_double(f, "scene", "hfov_deg", c.scene.hfov_deg);

  c.k_coarse = int(config_int(f, "codebook", "k_coarse", c.k_coarse));
  c.k_local = int(config_int(f, "codebook", "k_local", c.k_local));
  c.k_layout = int(config_int(f, "codebook", "k_layout", c.k_layout));
  c.normal_samples = int(config_int(f, "codebook", "normal_samples", c.normal_samples));
  c.layout_corpus = int(config_int(f, "codebook", "layout_corpus", c.layout_corpus));

  auto read_train = [&f](const std::string& sec, TrainConfig& t) {
    t.learning_rate = float(config_double(f, sec, "lr", t.learning_rate));
    t.epochs = int(config_int(f, sec, "epochs", t.epochs));
    t.batch = int(config_int(f, sec, "batch", t.batch));
  };
  read_train("train.topdown", c.train_topdown);
  read_train("train.bottomup", c.train_bottomup);
  read_train("train.fusion", c.train_fusion);
  read_train("train.baseline", c.train_baseline);
  c.patches_per_scene =
      int(config_int(f, "train.bottomup", "patches_per_scene", c.patches_per_scene));
  c.windows_per_scene =
      int(config_int(f, "train.fusion", "windows_per_scene", c.windows_per_scene));
  c.augment_data = config_bool(f, "train", "augment", c.augment_data);
  c.tiny_nets = config_bool(f, "train", "tiny", c.tiny_nets);

  c.vp_tau_deg = config_double(f, "fusion", "tau_deg", c.vp_tau_deg);
  const std::string decode = config_str(f, "fusion", "decode", c.soft_decode ? "soft" : "triangle");
  if (decode != "triangle" && decode != "soft")
    throw DataError("[fusion] decode must be triangle or soft, got " + decode);
  c.soft_decode = decode == "soft";
  c.toggles.layout = config_bool(f, "fusion", "layout", c.toggles.layout);
  c.toggles.edge = config_bool(f, "fusion", "edge", c.toggles.edge);
  c.toggles.vp = config_bool(f, "fusion", "vp", c.toggles.vp);

  c.seed = std::uint64_t(config_int(f, "run", "seed", long(c.seed)));
  return c;
}

Config pipeline_config_to(const PipelineConfig& c) {
  Config f;
  f.set("paths", "data_dir", c.data_dir.string());
  f.set("paths", "test_dir", c.test_dir.string());
  f.set("paths", "artifacts_dir", c.artifacts_dir.string());

  f.set("scene", "img_w", std::to_string(c.scene.img_w));
  f.set("scene", "img_h", std::to_string(c.scene.img_h));
  f.set("scene", "train_count", std::to_string(c.train_count));
  f.set("scene", "test_count", std::to_string(c.test_count));
  f.set("scene", "cuboid_min", std::to_string(c.scene.cuboid_min));
  f.set("scene", "cuboid_max", std::to_string(c.scene.cuboid_max));
  f.set("scene", "noise_sigma", double_text(c.scene.noise_sigma));
  f.set("scene", "axis_aligned_prob", double_text(c.scene.axis_aligned_prob));
  f.set("scene", "hfov_deg", double_text(c.scene.hfov_deg));

  f.set("codebook", "k_coarse", std::to_string(c.k_coarse));
  f.set("codebook", "k_local", std::to_string(c.k_local));
  f.set("codebook", "k_layout", std::to_string(c.k_layout));
  f.set("codebook", "normal_samples", std::to_string(c.normal_samples));
  f.set("codebook", "layout_corpus", std::to_string(c.layout_corpus));

  auto write_train = [&f](const std::string& sec, const TrainConfig& t) {
    f.set(sec, "lr", float_text(t.learning_rate));
    f.set(sec, "epochs", std::to_string(t.epochs));
    f.set(sec, "batch", std::to_string(t.batch));
  };
  write_train("train.topdown", c.train_topdown);
  write_train("train.bottomup", c.train_bottomup);
  f.set("train.bottomup", "patches_per_scene", std::to_string(c.patches_per_scene));
  write_train("train.fusion", c.train_fusion);
  f.set("train.fusion", "windows_per_scene", std::to_string(c.windows_per_scene));
  write_train("train.baseline", c.train_baseline);
  f.set("train", "augment", c.augment_data ? "true" : "false");
  f.set("train", "tiny", c.tiny_nets ? "true" : "false");

  f.set("fusion", "tau_deg", double_text(c.vp_tau_deg));
  f.set("fusion", "decode", c.soft_decode ? "soft" : "triangle");
  f.set("fusion", "layout", c.toggles.layout ? "true" : "false");
  f.set("fusion", "edge", c.toggles.edge ? "true" : "false");
  f.set("fusion", "vp", c.toggles.vp ? "true" : "false");

  f.set("run", "seed", std::to_string(c.seed));
  return f;
}

fs::path coarse_codebook_path(const PipelineConfig& cfg) { return cfg.artifacts_dir / "coarse.ncb"; }
fs::path local_codebook_path(const PipelineConfig& cfg) { return cfg.artifacts_dir / "local.ncb"; }
fs::path layout_codebook_path(const PipelineConfig& cfg) { return cfg.artifacts_dir / "layout.lcb"; }

fs::path weights_path(const PipelineConfig& cfg, NetworkKind kind) {
  return cfg.artifacts_dir / (network_kind_name(kind) + ".nfw");
}

std::uint64_t scene_seed(const PipelineConfig& cfg, bool test_split, int index) {
  return named_seed(cfg, (test_split ? "scene/test/" : "scene/train/") + scene_stem(index));
}

void cmd_scenegen(const PipelineConfig& cfg, bool test_split, std::ostream& out) {
  const fs::path dir = test_split ? cfg.test_dir : cfg.data_dir;
  const int count = test_split ? cfg.test_count : cfg.train_count;
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i)
    save_scene(dir, i, generate_scene(cfg.scene, scene_seed(cfg, test_split, i)));
  out << "wrote " << count << " scenes to " << dir.string() << "\n";
}

void cmd_codebook(const PipelineConfig& cfg, std::ostream& out) {
  const std::vector<int> ids = require_scene_ids(cfg.data_dir, "run scenegen first");
  fs::create_directories(cfg.artifacts_dir);

  // Normal corpus: half sampled from the dataset, half spread uniformly over
  // the hemisphere so clustering and triangulation stay well conditioned even
  // when scene normals concentrate on a few directions.
  std::vector<Vec3> corpus;
  corpus.reserve(std::size_t(cfg.normal_samples));
  const int from_scenes = cfg.normal_samples / 2;
  const int per_scene = std::max(1, from_scenes / int(ids.size()));
  for (int id : ids) {
    const SceneSample s = load_scene(cfg.data_dir, id);
    const std::size_t total = s.normals.n.size();
    const std::size_t stride = std::max<std::size_t>(1, total / std::size_t(per_scene));
    for (std::size_t i = 0; i < total && int(corpus.size()) < from_scenes; i += stride)
      if (s.normals.valid[i]) corpus.push_back(s.normals.n[i]);
  }
  Rng filler(named_seed(cfg, "codebook/fillers"));
  while (int(corpus.size()) < cfg.normal_samples) {
    const double z = -filler.uniform();                 // area-uniform in z
    const double phi = 2.0 * kPi * filler.uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    corpus.push_back(Vec3{float(r * std::cos(phi)), float(r * std::sin(phi)), float(z)});
  }

  const NormalCodebook coarse =
      build_normal_codebook(corpus, cfg.k_coarse, named_seed(cfg, "codebook/coarse"));
  save_normal_codebook(coarse_codebook_path(cfg), coarse);
  out << "coarse codebook: k=" << coarse.k << " -> " << coarse_codebook_path(cfg).string() << "\n";

  const NormalCodebook local =
      build_normal_codebook(corpus, cfg.k_local, named_seed(cfg, "codebook/local"));
  save_normal_codebook(local_codebook_path(cfg), local);
  out << "local codebook: k=" << local.k << " -> " << local_codebook_path(cfg).string() << "\n";

  // Layout corpus: freshly rendered empty rooms, reduced to the layout grid.
  if (cfg.layout_corpus < cfg.k_layout)
    throw DataError("layout_corpus must be >= k_layout");
  SceneConfig room_cfg = cfg.scene;
  room_cfg.cuboid_min = 0;
  room_cfg.cuboid_max = 0;
  std::vector<NormalMap> layouts;
  layouts.reserve(std::size_t(cfg.layout_corpus));
  for (int i = 0; i < cfg.layout_corpus; ++i) {
    const SceneSample s =
        generate_scene(room_cfg, named_seed(cfg, "codebook/layout/" + scene_stem(i)));
    layouts.push_back(downsample_normals(s.layout_gt, kLayoutGrid, kLayoutGrid));
  }
  const LayoutCodebook lcb =
      build_layout_codebook(layouts, cfg.k_layout, named_seed(cfg, "codebook/medoids"));
  save_layout_codebook(layout_codebook_path(cfg), lcb);
  out << "layout codebook: k=" << lcb.k << " -> " << layout_codebook_path(cfg).string() << "\n";
}

TrainSample topdown_sample(const SceneSample& s, const NormalCodebook& coarse_cb,
                           const LayoutCodebook& lcb) {
  const NetworkSpec probe = build_network(NetworkKind::TopDown);
  const HeadSpec& grid = probe.heads[0];

  TrainSample t;
  t.input = resize_nearest(image_to_tensor(s.image, s.img_h, s.img_w), probe.input_h, probe.input_w);
  std::vector<int> labels(std::size_t(grid.sites_h) * grid.sites_w, 0);
  std::vector<std::uint8_t> valid(labels.size(), 1);
  for (int r = 0; r < grid.sites_h; ++r)
    for (int c = 0; c < grid.sites_w; ++c) {
      const auto [pr, pc] = site_pixel(r, c, grid.sites_h, grid.sites_w, s.img_h, s.img_w);
      const std::size_t site = std::size_t(r) * grid.sites_w + c;
      const std::size_t pix = std::size_t(pr) * s.img_w + pc;
      if (s.normals.valid[pix])
        labels[site] = normal_class(coarse_cb, s.normals.n[pix]);
      else
        valid[site] = 0;
    }
  t.y.labels = {std::move(labels), {scene_layout_class(s, lcb)}};
  t.y.valid = {std::move(valid), {1}};
  t.y.reg_targets.resize(2);
  return t;
}

std::vector<TrainSample> bottomup_samples(const SceneSample& s, const NormalCodebook& local_cb,
                                          int count, std::uint64_t seed) {
  std::vector<Patch> patches = sample_patches(s, local_cb, count, 55, seed);
  std::vector<TrainSample> out;
  out.reserve(patches.size());
  for (Patch& p : patches) {
    TrainSample t;
    t.input = std::move(p.image);
    t.y.labels = {std::move(p.normal_labels), {int(p.edge)}};
    t.y.valid = {std::move(p.label_valid), {1}};
    t.y.reg_targets.resize(2);
    out.push_back(std::move(t));
  }
  return out;
}

TrainSample baseline_sample(const SceneSample& s) {
  const NetworkSpec probe = build_network(NetworkKind::BaselineRegression);
  const HeadSpec& grid = probe.heads[0];

  TrainSample t;
  t.input = resize_nearest(image_to_tensor(s.image, s.img_h, s.img_w), probe.input_h, probe.input_w);
  std::vector<Vec3> targets(std::size_t(grid.sites_h) * grid.sites_w, Vec3{0, 0, -1});
  std::vector<std::uint8_t> valid(targets.size(), 1);
  for (int r = 0; r < grid.sites_h; ++r)
    for (int c = 0; c < grid.sites_w; ++c) {
      const auto [pr, pc] = site_pixel(r, c, grid.sites_h, grid.sites_w, s.img_h, s.img_w);
      const std::size_t site = std::size_t(r) * grid.sites_w + c;
      const std::size_t pix = std::size_t(pr) * s.img_w + pc;
      if (s.normals.valid[pix])
        targets[site] = s.normals.n[pix];
      else
        valid[site] = 0;
    }
  t.y.labels.resize(1);
  t.y.valid = {std::move(valid)};
  t.y.reg_targets = {std::move(targets)};
  return t;
}

SceneOutputs run_input_networks(const SceneSample& s, const NetworkSpec& td_spec,
                                NetworkState& td_state, const NetworkSpec& bu_spec,
                                NetworkState& bu_state) {
  const Tensor img = image_to_tensor(s.image, s.img_h, s.img_w);
  TopDownOut td = infer_topdown(td_spec, td_state, resize_nearest(img, td_spec.input_h, td_spec.input_w));
  SlidingOut bu = infer_sliding(bu_spec, bu_state, img);
  SceneOutputs o;
  o.coarse_dist = std::move(td.normal_dist);
  o.layout_dist = std::move(td.layout_dist);
  o.pixel_dist = std::move(bu.pixel_dist);
  o.edge_dist = std::move(bu.edge_dist);
  return o;
}

Tensor scene_fusion_stack(const SceneSample& s, const SceneOutputs& outs,
                          const NormalCodebook& coarse_cb, const LayoutCodebook& lcb,
                          const NormalCodebook& local_cb, const FusionToggles& toggles,
                          double tau_deg) {
  return assemble(coarse_cb, lcb, local_cb, outs.coarse_dist, outs.layout_dist, outs.pixel_dist,
                  outs.edge_dist, s.vps, image_to_tensor(s.image, s.img_h, s.img_w), toggles,
                  tau_deg);
}

std::vector<TrainSample> fusion_samples(const Tensor& stack, const NormalMap& gt,
                                        const NormalCodebook& local_cb, int max_windows,
                                        std::uint64_t seed) {
  if (stack.h != gt.h || stack.w != gt.w)
    throw DataError("fusion stack and ground truth sizes differ");
  const SlidingGeometry g = sliding_geometry(stack.h, stack.w);

  std::vector<std::pair<int, int>> cells;
  for (int r = g.row_lo; r <= g.row_hi; ++r)
    for (int c = g.col_lo; c <= g.col_hi; ++c) cells.emplace_back(r, c);
  Rng rng(seed);
  for (std::size_t i = cells.size(); i > 1; --i)
    std::swap(cells[i - 1], cells[std::size_t(rng.uniform_int(int(i)))]);
  if (max_windows >= 0 && cells.size() > std::size_t(max_windows)) cells.resize(std::size_t(max_windows));

  std::vector<TrainSample> out;
  out.reserve(cells.size());
  for (const auto& [r, c] : cells) {
    const int top = g.top_left_row(r), left = g.top_left_col(c);
    TrainSample t;
    t.input = Tensor(g.window, g.window, stack.c);
    for (int y = 0; y < g.window; ++y)
      for (int x = 0; x < g.window; ++x)
        for (int ch = 0; ch < stack.c; ++ch)
          t.input.at(y, x, ch) = stack.at(top + y, left + x, ch);
    std::vector<int> labels(std::size_t(g.cell) * g.cell, 0);
    std::vector<std::uint8_t> valid(labels.size(), 1);
    for (int y = 0; y < g.cell; ++y)
      for (int x = 0; x < g.cell; ++x) {
        const std::size_t pix = std::size_t(g.cell * r + y) * gt.w + (g.cell * c + x);
        if (gt.valid[pix])
          labels[std::size_t(y) * g.cell + x] = normal_class(local_cb, gt.n[pix]);
        else
          valid[std::size_t(y) * g.cell + x] = 0;
      }
    t.y.labels = {std::move(labels)};
    t.y.valid = {std::move(valid)};
    t.y.reg_targets.resize(1);
    out.push_back(std::move(t));
  }
  return out;
}

void zero_disabled_channels(Tensor& stack, const FusionToggles& toggles) {
  if (stack.c != kFusionChannels)
    throw DataError("fusion stack must have 18 channels, got " + std::to_string(stack.c));
  auto zero3 = [&stack](int c0) {
    for (int y = 0; y < stack.h; ++y)
      for (int x = 0; x < stack.w; ++x)
        for (int ch = c0; ch < c0 + 3; ++ch) stack.at(y, x, ch) = 0.0f;
  };
  if (!toggles.layout) zero3(3);
  if (!toggles.edge) zero3(9);
  if (!toggles.vp) zero3(12);
}

void cmd_train(const PipelineConfig& cfg, NetworkKind kind, std::ostream& out) {
  const std::string name = network_kind_name(kind);
  const std::vector<int> ids = require_scene_ids(cfg.data_dir, "run scenegen first");
  fs::create_directories(cfg.artifacts_dir);

  NormalCodebook coarse_cb, local_cb;
  LayoutCodebook lcb;
  if (kind == NetworkKind::TopDown || kind == NetworkKind::Fusion) {
    require_exists(coarse_codebook_path(cfg), "run codebook first");
    require_exists(layout_codebook_path(cfg), "run codebook first");
    coarse_cb = load_normal_codebook(coarse_codebook_path(cfg));
    lcb = load_layout_codebook(layout_codebook_path(cfg));
  }
  if (kind == NetworkKind::BottomUp || kind == NetworkKind::Fusion) {
    require_exists(local_codebook_path(cfg), "run codebook first");
    local_cb = load_normal_codebook(local_codebook_path(cfg));
  }

  const NetworkSpec spec = build_network(kind, cfg.tiny_nets);
  std::vector<TrainSample> samples;
  switch (kind) {
    case NetworkKind::TopDown:
      for (int id : ids)
        samples.push_back(topdown_sample(load_training_scene(cfg, cfg.data_dir, id, &lcb), coarse_cb, lcb));
      break;
    case NetworkKind::BottomUp:
      for (int id : ids) {
        const SceneSample s = load_training_scene(cfg, cfg.data_dir, id, nullptr);
        auto ps = bottomup_samples(s, local_cb, cfg.patches_per_scene,
                                   named_seed(cfg, "patches/" + scene_stem(id)));
        std::move(ps.begin(), ps.end(), std::back_inserter(samples));
      }
      break;
    case NetworkKind::Fusion: {
      require_exists(weights_path(cfg, NetworkKind::TopDown), "train --net topdown first");
      require_exists(weights_path(cfg, NetworkKind::BottomUp), "train --net bottomup first");
      const NetworkSpec td_spec = build_network(NetworkKind::TopDown, cfg.tiny_nets);
      const NetworkSpec bu_spec = build_network(NetworkKind::BottomUp, cfg.tiny_nets);
      NetworkState td_state, bu_state;
      load_weights(weights_path(cfg, NetworkKind::TopDown), td_spec, td_state);
      load_weights(weights_path(cfg, NetworkKind::BottomUp), bu_spec, bu_state);
      for (int id : ids) {
        const SceneSample s = load_training_scene(cfg, cfg.data_dir, id, &lcb);
        const SceneOutputs outs = run_input_networks(s, td_spec, td_state, bu_spec, bu_state);
        const Tensor stack =
            scene_fusion_stack(s, outs, coarse_cb, lcb, local_cb, cfg.toggles, cfg.vp_tau_deg);
        auto ws = fusion_samples(stack, s.normals, local_cb, cfg.windows_per_scene,
                                 named_seed(cfg, "windows/" + scene_stem(id)));
        std::move(ws.begin(), ws.end(), std::back_inserter(samples));
      }
      break;
    }
    case NetworkKind::BaselineRegression:
      for (int id : ids)
        samples.push_back(baseline_sample(load_training_scene(cfg, cfg.data_dir, id, nullptr)));
      break;
  }

  Rng init_rng(named_seed(cfg, "init/" + name));
  NetworkState state = init_network(spec, init_rng);
  TrainConfig tc = kind == NetworkKind::TopDown    ? cfg.train_topdown
                   : kind == NetworkKind::BottomUp ? cfg.train_bottomup
                   : kind == NetworkKind::Fusion   ? cfg.train_fusion
                                                   : cfg.train_baseline;
  tc.seed = named_seed(cfg, "train/" + name);
  const TrainResult result = train_joint(spec, state, samples, tc);
  save_weights(weights_path(cfg, kind), spec, state);

  EpochLog log{name, cfg.seed, samples.size(), result.epoch_loss};
  write_manifest(cfg.artifacts_dir / (name + "_train.txt"), log);

  out << "trained " << name << " on " << samples.size() << " samples, " << tc.epochs
      << " epochs\n";
  if (!result.epoch_loss.empty()) {
    out << "first epoch loss " << double_text(result.epoch_loss.front()) << "\n";
    out << "final epoch loss " << double_text(result.epoch_loss.back()) << "\n";
  }
  out << "weights -> " << weights_path(cfg, kind).string() << "\n";
}

void cmd_predict(const PipelineConfig& cfg, const fs::path& image_path,
                 const std::optional<fs::path>& meta_path, const fs::path& out_path,
                 const std::optional<fs::path>& viz_path, std::ostream& out) {
  require_exists(coarse_codebook_path(cfg), "run codebook first");
  require_exists(local_codebook_path(cfg), "run codebook first");
  require_exists(layout_codebook_path(cfg), "run codebook first");
  for (NetworkKind k : {NetworkKind::TopDown, NetworkKind::BottomUp, NetworkKind::Fusion})
    require_exists(weights_path(cfg, k), "train --net " + network_kind_name(k) + " first");

  const NormalCodebook coarse_cb = load_normal_codebook(coarse_codebook_path(cfg));
  const NormalCodebook local_cb = load_normal_codebook(local_codebook_path(cfg));
  const LayoutCodebook lcb = load_layout_codebook(layout_codebook_path(cfg));

  const Image8 img8 = load_ppm(image_path);
  SceneSample s;
  s.img_w = img8.w;
  s.img_h = img8.h;
  s.image = img8.rgb;
  if (meta_path) {
    require_exists(*meta_path, "meta file named on the command line");
    s.vps = meta_vps(*meta_path);
  } else {
    fs::path sibling = image_path;
    sibling.replace_extension(".meta");
    if (fs::exists(sibling)) s.vps = meta_vps(sibling);
  }

  const NetworkSpec td_spec = build_network(NetworkKind::TopDown, cfg.tiny_nets);
  const NetworkSpec bu_spec = build_network(NetworkKind::BottomUp, cfg.tiny_nets);
  const NetworkSpec f_spec = build_network(NetworkKind::Fusion, cfg.tiny_nets);
  NetworkState td_state, bu_state, f_state;
  load_weights(weights_path(cfg, NetworkKind::TopDown), td_spec, td_state);
  load_weights(weights_path(cfg, NetworkKind::BottomUp), bu_spec, bu_state);
  load_weights(weights_path(cfg, NetworkKind::Fusion), f_spec, f_state);

  const SceneOutputs outs = run_input_networks(s, td_spec, td_state, bu_spec, bu_state);
  const Tensor stack =
      scene_fusion_stack(s, outs, coarse_cb, lcb, local_cb, cfg.toggles, cfg.vp_tau_deg);
  const NormalMap pred = fuse_predict(f_spec, f_state, local_cb, stack, cfg.soft_decode);

  save_normal_map(out_path, pred);
  out << "normals -> " << out_path.string() << "\n";
  if (viz_path) {
    save_ppm(*viz_path, Image8{pred.w, pred.h, normal_viz(pred)});
    out << "viz -> " << viz_path->string() << "\n";
  }
}

void cmd_eval(const PipelineConfig&, const fs::path& pred_dir, const fs::path& gt_dir,
              const std::string& name, bool key_value, std::ostream& out) {
  const std::vector<int> ids = nrm_ids(gt_dir);
  if (ids.empty()) throw DataError("no ground-truth normal maps in " + gt_dir.string());

  std::string missing;
  for (int id : ids)
    if (!fs::exists(pred_dir / (scene_stem(id) + ".nrm"))) missing += " " + scene_stem(id);
  if (!missing.empty()) throw DataError("missing predictions for ids:" + missing);

  std::vector<double> errors;
  for (int id : ids) {
    const NormalMap gt = load_normal_map(gt_dir / (scene_stem(id) + ".nrm"));
    const NormalMap pred = load_normal_map(pred_dir / (scene_stem(id) + ".nrm"));
    const std::vector<double> e = angular_error_map(pred, gt);
    errors.insert(errors.end(), e.begin(), e.end());
  }
  const MetricSummary m = summarize(std::move(errors));

  out << eval_header() << "\n" << eval_row(name, m) << "\n";
  if (key_value) {
    out << "count " << m.count << "\n";
    out << "mean " << double_text(m.mean) << "\n";
    out << "median " << double_text(m.median) << "\n";
    out << "rmse " << double_text(m.rmse) << "\n";
    for (std::size_t t = 0; t < m.pgp.size(); ++t)
      out << "pgp" << double_text(m.thresholds[t]) << " " << double_text(m.pgp[t]) << "\n";
  }
}

void cmd_ablate(const PipelineConfig& cfg, std::ostream& out) {
  const std::vector<int> train_ids = require_scene_ids(cfg.data_dir, "run scenegen first");
  const std::vector<int> test_ids = require_scene_ids(cfg.test_dir, "run scenegen --test first");
  require_exists(coarse_codebook_path(cfg), "run codebook first");
  require_exists(local_codebook_path(cfg), "run codebook first");
  require_exists(layout_codebook_path(cfg), "run codebook first");

  const NormalCodebook coarse_cb = load_normal_codebook(coarse_codebook_path(cfg));
  const NormalCodebook local_cb = load_normal_codebook(local_codebook_path(cfg));
  const LayoutCodebook lcb = load_layout_codebook(layout_codebook_path(cfg));
  const fs::path ablate_dir = cfg.artifacts_dir / "ablate";
  fs::create_directories(ablate_dir);

  // Input networks, trained once and shared by every fusion variant.
  const NetworkSpec td_spec = build_network(NetworkKind::TopDown, cfg.tiny_nets);
  const NetworkSpec bu_spec = build_network(NetworkKind::BottomUp, cfg.tiny_nets);
  NetworkState td_state, bu_state;
  {
    std::vector<TrainSample> td_samples, bu_samples;
    for (int id : train_ids) {
      const SceneSample s = load_training_scene(cfg, cfg.data_dir, id, &lcb);
      td_samples.push_back(topdown_sample(s, coarse_cb, lcb));
      auto ps = bottomup_samples(s, local_cb, cfg.patches_per_scene,
                                 named_seed(cfg, "patches/" + scene_stem(id)));
      std::move(ps.begin(), ps.end(), std::back_inserter(bu_samples));
    }
    Rng td_init(named_seed(cfg, "init/topdown"));
    td_state = init_network(td_spec, td_init);
    TrainConfig tc = cfg.train_topdown;
    tc.seed = named_seed(cfg, "train/topdown");
    train_joint(td_spec, td_state, td_samples, tc);
    save_weights(ablate_dir / "topdown.nfw", td_spec, td_state);

    Rng bu_init(named_seed(cfg, "init/bottomup"));
    bu_state = init_network(bu_spec, bu_init);
    tc = cfg.train_bottomup;
    tc.seed = named_seed(cfg, "train/bottomup");
    train_joint(bu_spec, bu_state, bu_samples, tc);
    save_weights(ablate_dir / "bottomup.nfw", bu_spec, bu_state);
  }

  // Training windows cut once from all-channels-on stacks; each variant sees
  // the same windows with its disabled channel groups zeroed.
  const FusionToggles all_on{true, true, true};
  std::vector<TrainSample> base_windows;
  for (int id : train_ids) {
    const SceneSample s = load_training_scene(cfg, cfg.data_dir, id, &lcb);
    const SceneOutputs outs = run_input_networks(s, td_spec, td_state, bu_spec, bu_state);
    const Tensor stack =
        scene_fusion_stack(s, outs, coarse_cb, lcb, local_cb, all_on, cfg.vp_tau_deg);
    auto ws = fusion_samples(stack, s.normals, local_cb, cfg.windows_per_scene,
                             named_seed(cfg, "windows/" + scene_stem(id)));
    std::move(ws.begin(), ws.end(), std::back_inserter(base_windows));
  }

  struct Variant {
    const char* row;
    const char* file;
    FusionToggles toggles;
  };
  const std::array<Variant, 5> variants{{{"Fusion", "fusion_plain.nfw", {false, false, false}},
                                         {"+Layout", "fusion_layout.nfw", {true, false, false}},
                                         {"+Edge", "fusion_edge.nfw", {false, true, false}},
                                         {"+VP", "fusion_vp.nfw", {false, false, true}},
                                         {"Full", "fusion_full.nfw", {true, true, true}}}};
  const NetworkSpec f_spec = build_network(NetworkKind::Fusion, cfg.tiny_nets);
  std::array<NetworkState, 5> f_states;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::vector<TrainSample> data = base_windows;
    for (TrainSample& t : data) zero_disabled_channels(t.input, variants[v].toggles);
    Rng init(named_seed(cfg, "init/fusion"));
    f_states[v] = init_network(f_spec, init);
    TrainConfig tc = cfg.train_fusion;
    tc.seed = named_seed(cfg, "train/fusion");
    train_joint(f_spec, f_states[v], data, tc);
    save_weights(ablate_dir / variants[v].file, f_spec, f_states[v]);
  }

  // Rows: Top-down, Bottom-up, the five variants, then soft decoding of Full.
  std::array<std::vector<double>, 8> errors;
  for (int id : test_ids) {
    const SceneSample s = load_scene(cfg.test_dir, id);
    const SceneOutputs outs = run_input_networks(s, td_spec, td_state, bu_spec, bu_state);
    const Tensor full =
        scene_fusion_stack(s, outs, coarse_cb, lcb, local_cb, all_on, cfg.vp_tau_deg);

    auto pool = [&s](std::vector<double>& into, const NormalMap& pred) {
      const std::vector<double> e = angular_error_map(pred, s.normals);
      into.insert(into.end(), e.begin(), e.end());
    };
    pool(errors[0], coarse_to_map(coarse_cb, outs.coarse_dist, s.img_w, s.img_h));
    pool(errors[1], decode_pixel_dist(local_cb, outs.pixel_dist, false));
    for (std::size_t v = 0; v < variants.size(); ++v) {
      Tensor stack = full;
      zero_disabled_channels(stack, variants[v].toggles);
      pool(errors[2 + v], fuse_predict(f_spec, f_states[v], local_cb, stack, false));
    }
    pool(errors[7], fuse_predict(f_spec, f_states[4], local_cb, full, true));
  }

  const std::array<std::string, 8> rows{"Top-down", "Bottom-up", "Fusion",    "+Layout",
                                        "+Edge",    "+VP",       "Full",      "Full(Soft)"};
  std::ostringstream report;
  report << eval_header() << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    report << eval_row(rows[i], summarize(std::move(errors[i]))) << "\n";
  write_file_text(ablate_dir / "report.txt", report.str());
  out << report.str();
  out << "report -> " << (ablate_dir / "report.txt").string() << "\n";
}

}  // namespace normnet
