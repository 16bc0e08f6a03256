#include "dmt/evalkit.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "dmt/transfer.hpp"

namespace dmt {

namespace {

torch::Tensor as_double(const torch::Tensor& t) { return t.detach().to(torch::kFloat64); }

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.defined() || !b.defined() || a.sizes() != b.sizes()) {
    throw std::invalid_argument("metric inputs must have identical shapes");
  }
}

torch::Tensor grayscale(const torch::Tensor& t) {
  auto x = as_double(t);
  if (x.dim() == 4) {
    if (x.size(0) != 1) throw std::invalid_argument("ssim: batch must hold one image");
    x = x.squeeze(0);
  }
  if (x.dim() == 3) return x.mean(0);
  if (x.dim() == 2) return x;
  throw std::invalid_argument("ssim: expected [H,W], [C,H,W] or [1,C,H,W]");
}

torch::Tensor gaussian_window(int size, double sigma) {
  auto coords = torch::arange(size, torch::kFloat64) - (size - 1) / 2.0;
  auto g = torch::exp(-(coords * coords) / (2.0 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g).view({1, 1, size, size});
}

}  // namespace

double mse(const torch::Tensor& a, const torch::Tensor& b) {
  check_same_shape(a, b);
  return (as_double(a) - as_double(b)).pow(2).mean().item<double>();
}

double psnr_from_mse(double m, double peak) {
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak) { return psnr_from_mse(mse(a, b), peak); }

double ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& o) {
  check_same_shape(a, b);
  auto x = grayscale(a);
  auto y = grayscale(b);
  if (x.size(0) < o.window || x.size(1) < o.window) {
    throw std::invalid_argument("ssim: image smaller than the " + std::to_string(o.window) + "x" +
                                std::to_string(o.window) + " window");
  }
  const double c1 = std::pow(o.k1 * o.peak, 2);
  const double c2 = std::pow(o.k2 * o.peak, 2);
  auto w = gaussian_window(o.window, o.sigma);
  auto filter = [&](const torch::Tensor& t) { return torch::conv2d(t.view({1, 1, t.size(0), t.size(1)}), w); };
  auto mu_x = filter(x);
  auto mu_y = filter(y);
  auto sxx = filter(x * x) - mu_x * mu_x;
  auto syy = filter(y * y) - mu_y * mu_y;
  auto sxy = filter(x * y) - mu_x * mu_y;
  auto map = ((2 * mu_x * mu_y + c1) * (2 * sxy + c2)) / ((mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2));
  return map.mean().item<double>();
}

std::string BenchmarkReport::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(24) << "id" << std::right << std::setw(14) << "mse" << std::setw(10) << "psnr"
      << std::setw(10) << "ssim" << '\n';
  out << std::fixed;
  for (const auto& m : images) {
    out << std::left << std::setw(24) << m.id << std::right << std::setprecision(6) << std::setw(14) << m.mse
        << std::setprecision(3) << std::setw(10) << m.psnr << std::setprecision(4) << std::setw(10) << m.ssim << '\n';
  }
  out << std::left << std::setw(24) << "mean" << std::right << std::setprecision(6) << std::setw(14) << mean_mse
      << std::setprecision(3) << std::setw(10) << mean_psnr << std::setprecision(4) << std::setw(10) << mean_ssim
      << '\n';
  return out.str();
}

std::string BenchmarkReport::to_json() const {
  nlohmann::json j;
  j["mean"] = {{"mse", mean_mse}, {"psnr", mean_psnr}, {"ssim", mean_ssim}};
  j["images"] = nlohmann::json::array();
  for (const auto& m : images) j["images"].push_back({{"id", m.id}, {"mse", m.mse}, {"psnr", m.psnr}, {"ssim", m.ssim}});
  return j.dump(2);
}

BenchmarkReport reconstruction_benchmark(const std::vector<std::pair<FaceImage, FaceImage>>& pairs,
                                         const Reconstructor& reconstruct) {
  BenchmarkReport report;
  auto measure = [&](const FaceImage& image) {
    auto out = reconstruct(image);
    ImageMetrics m;
    m.id = image.source_id;
    m.mse = mse(out, image.pixels);
    m.psnr = psnr_from_mse(m.mse);
    m.ssim = ssim(out, image.pixels);
    report.images.push_back(m);
  };
  for (const auto& [x, y] : pairs) {
    measure(x);
    measure(y);
  }
  if (!report.images.empty()) {
    for (const auto& m : report.images) {
      report.mean_mse += m.mse;
      report.mean_psnr += m.psnr;
      report.mean_ssim += m.ssim;
    }
    const auto n = static_cast<double>(report.images.size());
    report.mean_mse /= n;
    report.mean_psnr /= n;
    report.mean_ssim /= n;
  }
  return report;
}

Reconstructor model_reconstructor(Model& model) {
  return [&model](const FaceImage& x) { return first_image(reconstruct(model, x).composed).to(torch::kFloat32); };
}

std::vector<CodeRow> export_makeup_codes(Model& model, const std::vector<FaceImage>& images) {
  std::vector<CodeRow> rows;
  for (const auto& image : images) {
    auto code = encode(model, image).makeup.values.to(torch::kFloat64).contiguous();
    CodeRow row{image.source_id, {}};
    auto* p = code.data_ptr<double>();
    row.code.assign(p, p + code.numel());
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_code_table(const std::vector<CodeRow>& rows, std::ostream& out) {
  const std::size_t dims = rows.empty() ? 0 : rows.front().code.size();
  out << "id";
  for (std::size_t d = 0; d < dims; ++d) out << ",m" << d;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& row : rows) {
    if (row.code.size() != dims) throw std::invalid_argument("code rows differ in length");
    out << row.id;
    for (double v : row.code) out << ',' << v;
    out << '\n';
  }
}

void write_code_table(const std::vector<CodeRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_code_table(rows, out);
}

std::vector<SweepItem> dimension_sweep(Model& model, const FaceImage& x, int dim, const std::vector<double>& values) {
  const int dims = model.arch().code_dim;
  if (dim < 0 || dim >= dims) {
    throw std::out_of_range("sweep dimension " + std::to_string(dim) + " outside [0," + std::to_string(dims) + ")");
  }
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  auto ex = encode(model, x);
  const double own = ex.makeup.values[0][dim].item<double>();
  std::vector<SweepItem> items;
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto code = ex.makeup.values.clone();
    code[0][dim] = values[i];
    items.push_back({values[i], decode_with(model, ex, {code}), false});
    if (std::abs(values[i] - own) < std::abs(values[nearest] - own)) nearest = i;
  }
  items[nearest].nearest_to_input = true;
  return items;
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("linspace: count must be >= 1");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
  return out;
}

}  // namespace dmt
