#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "dmt/image.hpp"
#include "dmt/nets.hpp"

namespace dmt {

/// PSNR reported for identical images.
inline constexpr double kPsnrCap = 100.0;

double mse(const torch::Tensor& a, const torch::Tensor& b);
/// 10 log10(peak^2 / mse), capped at kPsnrCap.
double psnr_from_mse(double mse, double peak = 1.0);
double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak = 1.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean SSIM over all fully contained windows of the channel-mean grayscale
/// images, computed in double precision. Accepts [H,W], [C,H,W] or [1,C,H,W].
/// Throws std::invalid_argument when an image is smaller than the window.
double ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& options = {});

struct ImageMetrics {
  std::string id;
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct BenchmarkReport {
  std::vector<ImageMetrics> images;
  double mean_mse = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;

  std::string to_table() const;
  std::string to_json() const;
};

/// Produces the reconstruction of one image, [3,H,W] in [0,1].
using Reconstructor = std::function<torch::Tensor(const FaceImage&)>;

/// Reconstructs both images of every pair and averages per-image metrics.
/// N pairs give 2N rows, x before y.
BenchmarkReport reconstruction_benchmark(const std::vector<std::pair<FaceImage, FaceImage>>& pairs,
                                         const Reconstructor& reconstruct);

/// G(E_i(x), E_m(x)) composed against x.
Reconstructor model_reconstructor(Model& model);

struct CodeRow {
  std::string id;
  std::vector<double> code;
};

std::vector<CodeRow> export_makeup_codes(Model& model, const std::vector<FaceImage>& images);
/// CSV with header "id,m0,...,m{d-1}".
void write_code_table(const std::vector<CodeRow>& rows, std::ostream& out);
void write_code_table(const std::vector<CodeRow>& rows, const std::filesystem::path& path);

struct SweepItem {
  double value = 0.0;
  GeneratorOutput output;
  /// Set on the one item whose value is closest to the input's own code entry.
  bool nearest_to_input = false;
};

/// Decodes x with its own makeup code, dimension `dim` replaced by each value.
std::vector<SweepItem> dimension_sweep(Model& model, const FaceImage& x, int dim, const std::vector<double>& values);

/// `count` evenly spaced values over [lo, hi].
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace dmt
