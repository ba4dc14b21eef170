// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace colorguard {

enum class BackboneName { kVgg16, kResnet50, kMobilenetV2, kEfficientnet, kTinyCnn, kTinyCnn2 };
enum class WeightsOrigin { kImagenetPretrained, kRandom };

std::string_view to_string(BackboneName name);    // "VGG16", "TINY_CNN", ...
std::string_view to_string(WeightsOrigin origin); // "IMAGENET_PRETRAINED", "RANDOM"
BackboneName parse_backbone_name(std::string_view text);
WeightsOrigin parse_weights_origin(std::string_view text);

struct BackboneId {
  BackboneName name = BackboneName::kTinyCnn;
  WeightsOrigin weights = WeightsOrigin::kRandom;

  bool is_desk_scale() const {
    return name == BackboneName::kTinyCnn || name == BackboneName::kTinyCnn2;
  }
  // Desk-scale backbones only exist with random weights; the pretrained
  // ones only with ImageNet weights.
  void validate() const;
  bool operator==(const BackboneId&) const = default;
};

void to_json(nlohmann::json& j, const BackboneId& id);
void from_json(const nlohmann::json& j, BackboneId& id);

// Output of a backbone for one image: a spatial map (h, w, c) or, when
// spatial is false, a feature vector of length c.
struct FeatureShape {
  int height = 1;
  int width = 1;
  int channels = 0;
  bool spatial = false;

  std::size_t flat_size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool operator==(const FeatureShape&) const = default;
};

// Known top-removed output shape for a 224x224 input, used to verify
// loaded weights: VGG16 7x7x512, RESNET50 7x7x2048, MOBILENET_V2 and
// EFFICIENTNET (B0) pooled 1280, TINY_CNN 32, TINY_CNN2 48.
FeatureShape reference_output_shape(BackboneName name);

// File expected under the weights cache for a pretrained backbone.
std::string weights_file_name(BackboneName name);

struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<float> value;
  bool trainable = true;
};

// A feature extractor with its classification top removed.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual BackboneId id() const = 0;
  virtual FeatureShape output_shape() const = 0;

  // images: n normalized NHWC images -> n * output_shape().flat_size()
  // floats, each sample's features contiguous.
  virtual std::vector<float> extract(const float* images, std::size_t n, int height,
                                     int width) const = 0;

  // Parameters owned by this process (empty for externally loaded weights).
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::vector<const Parameter*> parameters() const { return {}; }

  // Whether gradients can flow through this backbone.
  virtual bool supports_training() const { return false; }

  // Content hash of the weights.
  virtual std::string fingerprint() const = 0;

  // Where external weights came from; empty for in-process weights.
  virtual std::filesystem::path weights_path() const { return {}; }
};

struct BackboneLoadOptions {
  // Directory holding pretrained ONNX files. Empty means $COLORGUARD_CACHE,
  // falling back to ~/.cache/colorguard.
  std::filesystem::path cache_dir;
  int input_height = 224;
  int input_width = 224;
};

std::filesystem::path resolve_weights_cache(const BackboneLoadOptions& options);

// Desk-scale backbones are built in-process from init_seed. Pretrained ones
// are read from the weights cache (WeightsUnavailable when absent) and probed
// once on a zero tensor (ShapeMismatch when the output differs from the
// reference shape).
std::unique_ptr<Backbone> load_backbone(const BackboneId& id, std::uint64_t init_seed,
                                        const BackboneLoadOptions& options = {});

}  // namespace colorguard
