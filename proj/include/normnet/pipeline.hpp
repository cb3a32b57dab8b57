#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "normnet/config.hpp"
#include "normnet/fusion.hpp"
#include "normnet/scene.hpp"
#include "normnet/train.hpp"

namespace normnet {

struct PipelineConfig {
  std::filesystem::path data_dir = "data/train";
  std::filesystem::path test_dir = "data/test";
  std::filesystem::path artifacts_dir = "artifacts";

  SceneConfig scene;
  int train_count = 200;
  int test_count = 50;

  int k_coarse = 20;
  int k_local = 40;
  int k_layout = 300;
  int normal_samples = 20000;
  int layout_corpus = 600;

  TrainConfig train_topdown{3e-4f, 30, 16, 1};
  TrainConfig train_bottomup{3e-4f, 20, 16, 1};
  TrainConfig train_fusion{3e-4f, 12, 16, 1};
  TrainConfig train_baseline{3e-4f, 30, 16, 1};
  int patches_per_scene = 4;
  int windows_per_scene = 4;
  bool augment_data = false;

  FusionToggles toggles;
  double vp_tau_deg = 30.0;
  bool soft_decode = false;

  bool tiny_nets = true;  // full-width networks are config-enabled, not default
  std::uint64_t seed = 1;
};

// Small images, few scenes, short schedules; used by --tiny.
void apply_tiny_preset(PipelineConfig& cfg);

PipelineConfig pipeline_config_from(const Config& file);
Config pipeline_config_to(const PipelineConfig& cfg);

// Artifact locations inside artifacts_dir.
std::filesystem::path coarse_codebook_path(const PipelineConfig& cfg);
std::filesystem::path local_codebook_path(const PipelineConfig& cfg);
std::filesystem::path layout_codebook_path(const PipelineConfig& cfg);
std::filesystem::path weights_path(const PipelineConfig& cfg, NetworkKind kind);

// Commands. Each throws UsageError/DataError; printing goes to `out`.
void cmd_scenegen(const PipelineConfig& cfg, bool test_split, std::ostream& out);
void cmd_codebook(const PipelineConfig& cfg, std::ostream& out);
void cmd_train(const PipelineConfig& cfg, NetworkKind kind, std::ostream& out);
void cmd_predict(const PipelineConfig& cfg, const std::filesystem::path& image_path,
                 const std::optional<std::filesystem::path>& meta_path,
                 const std::filesystem::path& out_path,
                 const std::optional<std::filesystem::path>& viz_path, std::ostream& out);
void cmd_eval(const PipelineConfig& cfg, const std::filesystem::path& pred_dir,
              const std::filesystem::path& gt_dir, const std::string& name, bool key_value,
              std::ostream& out);
void cmd_ablate(const PipelineConfig& cfg, std::ostream& out);

// Shared building blocks (used by commands, tests, and the acceptance gate).
TrainSample topdown_sample(const SceneSample& s, const NormalCodebook& coarse_cb,
                           const LayoutCodebook& lcb);
std::vector<TrainSample> bottomup_samples(const SceneSample& s, const NormalCodebook& local_cb,
                                          int count, std::uint64_t seed);
TrainSample baseline_sample(const SceneSample& s);

struct SceneOutputs {
  Tensor coarse_dist;              // (20, 20, K_t)
  std::vector<float> layout_dist;  // K_l
  Tensor pixel_dist;               // (H, W, K_b)
  Tensor edge_dist;                // (cells_h, cells_w, 4)
};
SceneOutputs run_input_networks(const SceneSample& s, const NetworkSpec& td_spec,
                                NetworkState& td_state, const NetworkSpec& bu_spec,
                                NetworkState& bu_state);

Tensor scene_fusion_stack(const SceneSample& s, const SceneOutputs& outs,
                          const NormalCodebook& coarse_cb, const LayoutCodebook& lcb,
                          const NormalCodebook& local_cb, const FusionToggles& toggles,
                          double tau_deg);

// Aligned training windows (inputs from the stack, labels from gt normals).
std::vector<TrainSample> fusion_samples(const Tensor& stack, const NormalMap& gt,
                                        const NormalCodebook& local_cb, int max_windows,
                                        std::uint64_t seed);

// Zero out the channel groups a variant disables (stack stays 18 channels).
void zero_disabled_channels(Tensor& stack, const FusionToggles& toggles);

// Deterministic per-purpose seeds.
std::uint64_t scene_seed(const PipelineConfig& cfg, bool test_split, int index);

}  // namespace normnet
