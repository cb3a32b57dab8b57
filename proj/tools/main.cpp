#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "normnet/errors.hpp"
#include "normnet/io.hpp"
#include "normnet/pipeline.hpp"

namespace {

void apply_channels(const std::string& list, normnet::FusionToggles& t) {
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = list.find(',', pos);
    const std::string tok =
        list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!tok.empty()) {
      if (tok.size() < 2 || (tok[0] != '+' && tok[0] != '-'))
        throw normnet::UsageError("channel toggles look like +vp or -edge, got " + tok);
      const bool on = tok[0] == '+';
      const std::string name = tok.substr(1);
      if (name == "layout")
        t.layout = on;
      else if (name == "edge")
        t.edge = on;
      else if (name == "vp")
        t.vp = on;
      else
        throw normnet::UsageError("unknown channel group: " + tok);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace normnet;

  CLI::App app{"synthetic-scene surface normal estimation pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool tiny = false;
  std::string decode;
  std::string channels;
  app.add_option("--config", config_path, "config file (key = value sections)");
  app.add_option("--seed", seed, "root seed for data, init, and training order");
  app.add_flag("--tiny", tiny, "small images, few scenes, short schedules");
  app.add_option("--decode", decode, "normal decoding mode")
      ->check(CLI::IsMember({"triangle", "soft"}));
  app.add_option("--channels", channels,
                 "fusion channel toggles, e.g. --channels=+vp,-edge,+layout");

  CLI::App* sg = app.add_subcommand("scenegen", "render a synthetic scene split");
  bool test_split = false;
  sg->add_flag("--test", test_split, "write the held-out test split");

  CLI::App* cb = app.add_subcommand("codebook", "build normal and layout codebooks");

  CLI::App* tr = app.add_subcommand("train", "train one network");
  std::string net;
  tr->add_option("--net", net, "which network")
      ->required()
      ->check(CLI::IsMember({"topdown", "bottomup", "fusion", "baseline"}));

  CLI::App* pr = app.add_subcommand("predict", "predict normals for one image");
  std::string image_path, meta_path, out_path = "pred.nrm", viz_path;
  pr->add_option("--image", image_path, "input PPM image")->required();
  pr->add_option("--meta", meta_path, "scene meta file carrying vanishing points");
  pr->add_option("--out", out_path, "output normal map path");
  pr->add_option("--viz", viz_path, "also write a color-coded PPM");

  CLI::App* ev = app.add_subcommand("eval", "compare predicted and ground-truth normal maps");
  std::string pred_dir, gt_dir, row_name = "method";
  bool key_value = false;
  ev->add_option("--pred", pred_dir, "directory of predicted .nrm files")->required();
  ev->add_option("--gt", gt_dir, "directory of ground-truth .nrm files")->required();
  ev->add_option("--name", row_name, "row label for the table");
  ev->add_flag("--kv", key_value, "also print machine-readable key-value lines");

  CLI::App* ab = app.add_subcommand("ablate", "train and compare all fusion variants");

  for (CLI::App* sub : {sg, cb, tr, pr, ev, ab}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = pipeline_config_from(parse_config(read_file_text(config_path)));
    if (tiny) apply_tiny_preset(cfg);
    if (app.count("--seed") > 0) cfg.seed = seed;
    if (!decode.empty()) cfg.soft_decode = decode == "soft";
    if (!channels.empty()) apply_channels(channels, cfg.toggles);

    if (app.got_subcommand(sg)) {
      cmd_scenegen(cfg, test_split, std::cout);
    } else if (app.got_subcommand(cb)) {
      cmd_codebook(cfg, std::cout);
    } else if (app.got_subcommand(tr)) {
      cmd_train(cfg, network_kind_from_name(net), std::cout);
    } else if (app.got_subcommand(pr)) {
      std::optional<std::filesystem::path> meta, viz;
      if (!meta_path.empty()) meta = meta_path;
      if (!viz_path.empty()) viz = viz_path;
      cmd_predict(cfg, image_path, meta, out_path, viz, std::cout);
    } else if (app.got_subcommand(ev)) {
      cmd_eval(cfg, pred_dir, gt_dir, row_name, key_value, std::cout);
    } else if (app.got_subcommand(ab)) {
      cmd_ablate(cfg, std::cout);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
