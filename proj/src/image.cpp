#include "dmt/image.hpp"

#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace dmt {

namespace {

// 8-bit BGR/gray mat -> float [3,H,W] RGB in [0,1].
torch::Tensor mat_to_tensor(const cv::Mat& mat) {
  cv::Mat rgb;
  if (mat.channels() == 1) {
    cv::cvtColor(mat, rgb, cv::COLOR_GRAY2RGB);
  } else if (mat.channels() == 4) {
    cv::cvtColor(mat, rgb, cv::COLOR_BGRA2RGB);
  } else {
    cv::cvtColor(mat, rgb, cv::COLOR_BGR2RGB);
  }
  if (rgb.depth() == CV_16U) rgb.convertTo(rgb, CV_8U, 1.0 / 257.0);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0).contiguous();
}

cv::Mat tensor_to_mat(const torch::Tensor& image) {
  auto t = image.detach().to(torch::kCPU).to(torch::kFloat32);
  if (t.dim() == 3 && t.size(0) == 1) t = t.squeeze(0);
  if (t.dim() == 2) {
    auto u8 = t.clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8).contiguous();
    cv::Mat mat(static_cast<int>(u8.size(0)), static_cast<int>(u8.size(1)), CV_8UC1, u8.data_ptr());
    return mat.clone();
  }
  if (t.dim() != 3 || t.size(0) != 3) {
    throw std::invalid_argument("expected a [3,H,W] or [H,W] image tensor");
  }
  auto hwc = t.clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_8UC3, hwc.data_ptr());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

}  // namespace

void validate(const FaceImage& image) {
  const auto& p = image.pixels;
  if (!p.defined() || p.dim() != 3 || p.size(0) != 3) {
    throw std::invalid_argument("face image must be a [3,H,W] tensor");
  }
  if (!p.is_floating_point()) throw std::invalid_argument("face image must be floating point");
  if (p.numel() > 0 && (p.min().item<double>() < 0.0 || p.max().item<double>() > 1.0)) {
    throw std::invalid_argument("face image values must lie in [0,1]");
  }
}

void validate(const LabelMap& labels) {
  const auto& l = labels.labels;
  if (!l.defined() || l.dim() != 2 || l.scalar_type() != torch::kUInt8) {
    throw std::invalid_argument("label map must be a uint8 [H,W] tensor");
  }
  if (l.numel() > 0 && l.max().item<int>() >= kNumParts) {
    throw std::invalid_argument("label map contains a non-canonical part id");
  }
}

void validate_aligned(const FaceImage& image, const LabelMap& labels) {
  if (image.height() != labels.height() || image.width() != labels.width()) {
    throw std::invalid_argument("image and label map differ in spatial size");
  }
}

FaceImage make_image(torch::Tensor pixels, std::string source_id, bool has_makeup) {
  FaceImage image{pixels.to(torch::kFloat32).contiguous(), std::move(source_id), has_makeup};
  validate(image);
  return image;
}

LabelMap make_labels(torch::Tensor labels) {
  LabelMap map{labels.to(torch::kUInt8).contiguous()};
  validate(map);
  return map;
}

FaceImage load_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (mat.empty()) throw std::runtime_error("cannot read image: " + path.string());
  return FaceImage{mat_to_tensor(mat), path.stem().string(), false};
}

LabelMap load_label_map(const std::filesystem::path& path, const LabelMapping& mapping) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (mat.empty()) throw std::runtime_error("cannot read label map: " + path.string());
  auto raw = torch::from_blob(mat.data, {mat.rows, mat.cols}, torch::kUInt8).clone();
  auto* data = raw.data_ptr<std::uint8_t>();
  for (std::int64_t i = 0; i < raw.numel(); ++i) {
    auto mapped = mapping(data[i]);
    if (mapped == kUnmapped) {
      throw std::runtime_error("label map " + path.string() + " contains unmapped value " +
                               std::to_string(data[i]));
    }
    data[i] = mapped;
  }
  return LabelMap{raw};
}

std::pair<int, int> probe_size(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw std::runtime_error("cannot read image: " + path.string());
  return {mat.rows, mat.cols};
}

torch::Tensor decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw std::runtime_error("empty image payload");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat mat = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (mat.empty()) throw std::runtime_error("undecodable image payload");
  return mat_to_tensor(mat);
}

std::vector<std::uint8_t> encode_png(const torch::Tensor& image) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", tensor_to_mat(image), out)) throw std::runtime_error("png encoding failed");
  return out;
}

void save_image(const torch::Tensor& image, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), tensor_to_mat(image))) {
    throw std::runtime_error("cannot write image: " + path.string());
  }
}

void save_labels(const LabelMap& labels, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto l = labels.labels.contiguous();
  cv::Mat mat(static_cast<int>(l.size(0)), static_cast<int>(l.size(1)), CV_8UC1, l.data_ptr());
  if (!cv::imwrite(path.string(), mat)) throw std::runtime_error("cannot write labels: " + path.string());
}

torch::Tensor resize_bilinear(const torch::Tensor& image, std::int64_t height, std::int64_t width) {
  if (image.size(1) == height && image.size(2) == width) return image.clone();
  auto hwc = image.detach().to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  const int channels = static_cast<int>(hwc.size(2));
  cv::Mat src(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_32FC(channels),
              hwc.data_ptr());
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
             cv::INTER_LINEAR);
  auto out = torch::from_blob(dst.data, {height, width, channels}, torch::kFloat32).clone();
  return out.permute({2, 0, 1}).clamp_(0.0, 1.0).contiguous();
}

torch::Tensor resize_nearest(const torch::Tensor& labels, std::int64_t height, std::int64_t width) {
  if (labels.size(0) == height && labels.size(1) == width) return labels.clone();
  auto l = labels.contiguous();
  cv::Mat src(static_cast<int>(l.size(0)), static_cast<int>(l.size(1)), CV_8UC1, l.data_ptr());
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
             cv::INTER_NEAREST_EXACT);
  return torch::from_blob(dst.data, {height, width}, torch::kUInt8).clone();
}

}  // namespace dmt
