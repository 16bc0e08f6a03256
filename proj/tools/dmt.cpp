#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dmt/checkpoint.hpp"
#include "dmt/config.hpp"
#include "dmt/dataset.hpp"
#include "dmt/evalkit.hpp"
#include "dmt/histmatch.hpp"
#include "dmt/regions.hpp"
#include "dmt/service.hpp"
#include "dmt/synth.hpp"
#include "dmt/trainer.hpp"
#include "dmt/transfer.hpp"

namespace fs = std::filesystem;

namespace {

void save_outputs(const dmt::GeneratorOutput& out, const dmt::FaceImage& source, const fs::path& path,
                  bool extras) {
  auto composed = dmt::first_image(out.composed).to(torch::kFloat32);
  dmt::save_image(composed, path);
  if (!extras) return;
  auto stem = path.parent_path() / path.stem();
  dmt::save_image(dmt::first_image(out.mask).squeeze(0).to(torch::kFloat32), stem.string() + "_mask.png");
  dmt::save_image(dmt::residual(source.pixels, composed), stem.string() + "_residual.png");
}

std::vector<dmt::FaceImage> load_images(const std::vector<std::string>& paths) {
  std::vector<dmt::FaceImage> out;
  for (const auto& p : paths) out.push_back(dmt::load_image(p));
  return out;
}

std::vector<dmt::FaceImage> images_in(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<dmt::FaceImage> out;
  for (const auto& f : files) out.push_back(dmt::load_image(f));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disentangled makeup transfer: training, inference, evaluation and serving."};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a procedurally generated face dataset");
  fs::path synth_out;
  int synth_makeup = 120, synth_bare = 120, synth_size = 64;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Dataset root")->required();
  synth->add_option("--makeup", synth_makeup, "Number of makeup faces");
  synth->add_option("--nonmakeup", synth_bare, "Number of non-makeup faces");
  synth->add_option("--size", synth_size, "Image side length");
  synth->add_option("--seed", synth_seed, "Generator seed");

  // train
  auto* train = app.add_subcommand("train", "Train a model from a config file");
  fs::path train_config;
  std::vector<std::string> train_overrides;
  train->add_option("--config", train_config, "Config file (key = value lines)")->required()->check(CLI::ExistingFile);
  train->add_option("--set", train_overrides, "Extra key=value overrides, applied last");

  // ground-truth
  auto* gt = app.add_subcommand("ground-truth", "Histogram-matched makeup target x_y for a pair");
  std::string gt_x, gt_xm, gt_y, gt_ym, gt_mapping;
  fs::path gt_out;
  double gt_margin = dmt::kDefaultEyeMargin;
  gt->add_option("--x", gt_x, "Source image")->required();
  gt->add_option("--x-mask", gt_xm, "Source label map")->required();
  gt->add_option("--y", gt_y, "Reference image")->required();
  gt->add_option("--y-mask", gt_ym, "Reference label map")->required();
  gt->add_option("--out", gt_out, "Output PNG")->required();
  gt->add_option("--label-mapping", gt_mapping, "raw:canonical overrides");
  gt->add_option("--eye-margin", gt_margin, "Eye box margin as a fraction of its size");

  // shared inference options
  fs::path checkpoint;
  std::string source;
  bool extras = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
    sub->add_option("--source", source, "Source face x")->required();
  };

  auto* transfer = app.add_subcommand("transfer", "Pair-wise transfer of y's makeup onto x");
  std::string reference;
  fs::path out_path;
  add_common(transfer);
  transfer->add_option("--reference", reference, "Reference face y")->required();
  transfer->add_option("--out", out_path, "Output PNG")->required();
  transfer->add_flag("--extras", extras, "Also write <out>_mask.png and <out>_residual.png");

  auto* interp = app.add_subcommand("interpolate", "Interpolated transfer at several alphas");
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  fs::path out_dir;
  bool extrapolate = false;
  add_common(interp);
  interp->add_option("--reference", reference, "Reference face y")->required();
  interp->add_option("--alphas", alphas, "Comma separated alphas")->delimiter(',');
  interp->add_option("--out-dir", out_dir, "Output directory")->required();
  interp->add_flag("--extrapolate", extrapolate, "Allow alpha outside [0,1]");
  interp->add_flag("--extras", extras, "Also write masks and residuals");

  auto* hybrid = app.add_subcommand("hybrid", "Blend the makeup of several references");
  std::vector<std::string> references;
  std::vector<double> weights;
  add_common(hybrid);
  hybrid->add_option("--references", references, "Comma separated reference faces")->required()->delimiter(',');
  hybrid->add_option("--weights", weights, "Comma separated weights summing to 1")->required()->delimiter(',');
  hybrid->add_option("--out", out_path, "Output PNG")->required();
  hybrid->add_flag("--extras", extras, "Also write mask and residual");

  auto* sample = app.add_subcommand("sample", "Multi-modal transfer with codes drawn from N(0, I)");
  int sample_n = 4;
  std::uint64_t sample_seed = 0;
  add_common(sample);
  sample->add_option("--n", sample_n, "Number of samples");
  sample->add_option("--seed", sample_seed, "Sampling seed");
  sample->add_option("--out-dir", out_dir, "Output directory")->required();
  sample->add_flag("--extras", extras, "Also write masks and residuals");

  auto* eval = app.add_subcommand("eval", "Reconstruction benchmark on a dataset's test split");
  fs::path eval_root, eval_json;
  std::size_t eval_tm = 250, eval_tn = 100, eval_pairs = 0;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", eval_root, "Dataset root")->required();
  eval->add_option("--test-makeup", eval_tm, "Held-out makeup images");
  eval->add_option("--test-nonmakeup", eval_tn, "Held-out non-makeup images");
  eval->add_option("--split-seed", eval_seed, "Split seed used for training");
  eval->add_option("--max-pairs", eval_pairs, "Limit the number of (non-makeup, makeup) pairs");
  eval->add_option("--json", eval_json, "Also write the report as JSON");

  auto* codes = app.add_subcommand("export-codes", "Write makeup codes of a directory of faces as CSV");
  fs::path codes_dir, codes_out;
  codes->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  codes->add_option("--images", codes_dir, "Directory of faces")->required()->check(CLI::ExistingDirectory);
  codes->add_option("--out", codes_out, "CSV path")->required();

  auto* sweep = app.add_subcommand("sweep", "Vary one makeup code dimension");
  int sweep_dim = 0, sweep_count = 5;
  double sweep_lo = -2.0, sweep_hi = 2.0;
  add_common(sweep);
  sweep->add_option("--dim", sweep_dim, "Code dimension")->required();
  sweep->add_option("--lo", sweep_lo, "Lowest value");
  sweep->add_option("--hi", sweep_hi, "Highest value");
  sweep->add_option("--count", sweep_count, "Number of values");
  sweep->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP inference service");
  dmt::ServiceConfig service_config;
  serve->add_option("--checkpoint", checkpoint, "Model checkpoint to load at startup")->check(CLI::ExistingFile);
  serve->add_option("--port", service_config.port, "Port (DMT_PORT overrides)");
  serve->add_option("--host", service_config.host, "Bind address");
  serve->add_option("--cache-capacity", service_config.cache_capacity, "Session cache size (DMT_CACHE_CAPACITY overrides)");
  serve->add_option("--max-upload-bytes", service_config.max_upload_bytes, "Upload size limit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      dmt::write_synthetic_dataset(synth_out, synth_makeup, synth_bare, synth_size, synth_seed);
      std::cout << "wrote " << synth_makeup + synth_bare << " faces to " << synth_out.string() << '\n';
    } else if (*train) {
      std::ifstream in(train_config);
      std::stringstream text;
      text << in.rdbuf() << '\n';
      for (const auto& kv : train_overrides) text << kv << '\n';
      auto config = dmt::parse_config(text.str());
      auto final_model = dmt::fit(config);
      std::cout << "final model: " << final_model.string() << '\n';
    } else if (*gt) {
      auto mapping = gt_mapping.empty() ? dmt::LabelMapping{} : dmt::LabelMapping::parse(gt_mapping);
      auto x = dmt::load_image(gt_x);
      auto y = dmt::load_image(gt_y);
      auto rx = dmt::extract_cosmetic_regions(dmt::load_label_map(gt_xm, mapping), gt_margin);
      auto ry = dmt::extract_cosmetic_regions(dmt::load_label_map(gt_ym, mapping), gt_margin);
      auto result = dmt::makeup_ground_truth(x, y, rx, ry);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      dmt::save_image(result.image.pixels, gt_out);
    } else if (*transfer) {
      auto model = dmt::load_model(checkpoint);
      auto x = dmt::load_image(source);
      auto y = dmt::load_image(reference);
      save_outputs(dmt::pairwise(model, x, y), x, out_path, extras);
    } else if (*interp) {
      auto model = dmt::load_model(checkpoint);
      auto x = dmt::load_image(source);
      auto y = dmt::load_image(reference);
      fs::create_directories(out_dir);
      for (std::size_t i = 0; i < alphas.size(); ++i) {
        auto out = dmt::interpolated(model, x, y, alphas[i], extrapolate);
        std::ostringstream name;
        name << "alpha_" << i << "_" << alphas[i] << ".png";
        save_outputs(out, x, out_dir / name.str(), extras);
      }
    } else if (*hybrid) {
      auto model = dmt::load_model(checkpoint);
      auto x = dmt::load_image(source);
      auto refs = load_images(references);
      save_outputs(dmt::hybrid(model, x, refs, weights), x, out_path, extras);
    } else if (*sample) {
      auto model = dmt::load_model(checkpoint);
      auto x = dmt::load_image(source);
      fs::create_directories(out_dir);
      auto outs = dmt::sample_multimodal(model, x, sample_n, sample_seed);
      for (std::size_t i = 0; i < outs.size(); ++i) {
        save_outputs(outs[i], x, out_dir / ("sample_" + std::to_string(i) + ".png"), extras);
      }
    } else if (*eval) {
      auto model = dmt::load_model(checkpoint);
      auto index = dmt::load_dataset(eval_root, {eval_tm, eval_tn, eval_seed});
      std::size_t n = std::min(index.test_makeup.size(), index.test_nonmakeup.size());
      if (eval_pairs > 0) n = std::min(n, eval_pairs);
      if (n == 0) throw std::runtime_error("test split has no (non-makeup, makeup) pairs");
      std::vector<std::pair<dmt::FaceImage, dmt::FaceImage>> pairs;
      for (std::size_t i = 0; i < n; ++i) {
        pairs.emplace_back(dmt::load_image(index.test_nonmakeup[i].image), dmt::load_image(index.test_makeup[i].image));
        pairs.back().first.source_id = index.test_nonmakeup[i].id();
        pairs.back().second.source_id = index.test_makeup[i].id();
      }
      auto report = dmt::reconstruction_benchmark(pairs, dmt::model_reconstructor(model));
      std::cout << report.to_table();
      if (!eval_json.empty()) std::ofstream(eval_json) << report.to_json() << '\n';
    } else if (*codes) {
      auto model = dmt::load_model(checkpoint);
      auto rows = dmt::export_makeup_codes(model, images_in(codes_dir));
      dmt::write_code_table(rows, codes_out);
      std::cout << rows.size() << " codes written to " << codes_out.string() << '\n';
    } else if (*sweep) {
      auto model = dmt::load_model(checkpoint);
      auto x = dmt::load_image(source);
      fs::create_directories(out_dir);
      auto items = dmt::dimension_sweep(model, x, sweep_dim, dmt::linspace(sweep_lo, sweep_hi, sweep_count));
      for (std::size_t i = 0; i < items.size(); ++i) {
        std::ostringstream name;
        name << "dim" << sweep_dim << "_" << i << "_" << items[i].value << (items[i].nearest_to_input ? "_input" : "")
             << ".png";
        save_outputs(items[i].output, x, out_dir / name.str(), false);
      }
    } else if (*serve) {
      dmt::InferenceService service(service_config.with_env_overrides());
      if (!checkpoint.empty()) service.load_checkpoint(checkpoint);
      const auto& cfg = service.config();
      std::cout << "serving on http://" << cfg.host << ":" << cfg.port << std::endl;
      if (!service.listen()) {
        std::cerr << "cannot bind " << cfg.host << ":" << cfg.port << '\n';
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
