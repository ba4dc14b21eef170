// SPDX-License-Identifier: Apache-2.0

// Pretrained backbones exported as ONNX with the classification top removed
// (e.g. keras.applications.VGG16(include_top=False) converted with tf2onnx),
// executed through OpenCV DNN. Inference only.

#include <mutex>

#include <opencv2/dnn.hpp>

#include "colorguard/backbone.hpp"
#include "colorguard/error.hpp"
#include "colorguard/hash.hpp"

namespace colorguard {

namespace {

class OnnxBackbone final : public Backbone {
 public:
  OnnxBackbone(BackboneId id, std::filesystem::path path, cv::dnn::Net net, FeatureShape shape,
               std::string fingerprint)
      : id_(id), path_(std::move(path)), net_(std::move(net)), shape_(shape),
        fingerprint_(std::move(fingerprint)) {}

  BackboneId id() const override { return id_; }
  FeatureShape output_shape() const override { return shape_; }
  std::string fingerprint() const override { return fingerprint_; }
  std::filesystem::path weights_path() const override { return path_; }

  std::vector<float> extract(const float* images, std::size_t n, int height,
                             int width) const override {
    const auto d = shape_.flat_size();
    std::vector<float> out(n * d);
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < n; ++i) {
      const cv::Mat out_blob = run(images + i * static_cast<std::size_t>(height) * width * 3, height, width);
      if (out_blob.total() != d) {
        throw Error(ErrorCode::kShapeMismatch, std::string(to_string(id_.name)) + " produced " +
                                                   std::to_string(out_blob.total()) +
                                                   " features, expected " + std::to_string(d));
      }
      const auto* src = out_blob.ptr<float>();
      std::copy(src, src + d, out.data() + i * d);
    }
    return out;
  }

  // HWC image -> raw network output (NCHW or NC).
  cv::Mat run(const float* image, int height, int width) const {
    const int dims[] = {1, 3, height, width};
    cv::Mat blob(4, dims, CV_32F);
    float* dst = blob.ptr<float>();
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    for (std::size_t p = 0; p < plane; ++p) {
      for (int c = 0; c < 3; ++c) dst[c * plane + p] = image[p * 3 + c];
    }
    net_.setInput(blob);
    cv::Mat result = net_.forward();
    return result.isContinuous() ? result : result.clone();
  }

 private:
  BackboneId id_;
  std::filesystem::path path_;
  mutable cv::dnn::Net net_;
  mutable std::mutex mu_;
  FeatureShape shape_;
  std::string fingerprint_;
};

FeatureShape shape_of(const cv::Mat& blob) {
  if (blob.dims == 4) return {blob.size[2], blob.size[3], blob.size[1], true};
  if (blob.dims == 2) return {1, 1, blob.size[1], false};
  return {1, 1, static_cast<int>(blob.total()), false};
}

}  // namespace

std::unique_ptr<Backbone> load_onnx_backbone(const BackboneId& id, const BackboneLoadOptions& options) {
  const auto dir = resolve_weights_cache(options);
  const auto path = dir / weights_file_name(id.name);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kWeightsUnavailable,
                std::string(to_string(id.name)) + " weights not found at " + path.string() +
                    " (set COLORGUARD_CACHE to the directory holding " + weights_file_name(id.name) + ")");
  }
  cv::dnn::Net net;
  try {
    net = cv::dnn::readNetFromONNX(path.string());
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kWeightsUnavailable, "cannot load " + path.string() + ": " + e.what());
  }
  if (net.empty()) throw Error(ErrorCode::kWeightsUnavailable, "empty network in " + path.string());

  // Shape oracle: one pass on a zero tensor.
  auto probe = std::make_unique<OnnxBackbone>(id, path, net, FeatureShape{}, sha256_file(path));
  const std::vector<float> zeros(static_cast<std::size_t>(options.input_height) * options.input_width * 3, 0.0f);
  cv::Mat raw;
  try {
    raw = probe->run(zeros.data(), options.input_height, options.input_width);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kShapeMismatch, "probe forward failed for " + path.string() + ": " + e.what());
  }
  const FeatureShape got = shape_of(raw);
  if (options.input_height == 224 && options.input_width == 224) {
    const FeatureShape want = reference_output_shape(id.name);
    if (got.flat_size() != want.flat_size() || got.spatial != want.spatial) {
      throw Error(ErrorCode::kShapeMismatch,
                  std::string(to_string(id.name)) + " output " + std::to_string(got.height) + "x" +
                      std::to_string(got.width) + "x" + std::to_string(got.channels) +
                      " does not match the expected top-removed shape");
    }
  }
  return std::make_unique<OnnxBackbone>(id, path, std::move(net), got, sha256_file(path));
}

}  // namespace colorguard
