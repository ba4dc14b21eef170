// SPDX-License-Identifier: Apache-2.0

#include "colorguard/backbone.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "colorguard/error.hpp"
#include "colorguard/tiny_cnn.hpp"

namespace colorguard {

std::unique_ptr<Backbone> load_onnx_backbone(const BackboneId& id, const BackboneLoadOptions& options);

namespace {

constexpr std::array<BackboneName, 6> kAllNames = {
    BackboneName::kVgg16,        BackboneName::kResnet50, BackboneName::kMobilenetV2,
    BackboneName::kEfficientnet, BackboneName::kTinyCnn,  BackboneName::kTinyCnn2};

}  // namespace

std::string_view to_string(BackboneName name) {
  switch (name) {
    case BackboneName::kVgg16: return "VGG16";
    case BackboneName::kResnet50: return "RESNET50";
    case BackboneName::kMobilenetV2: return "MOBILENET_V2";
    case BackboneName::kEfficientnet: return "EFFICIENTNET";
    case BackboneName::kTinyCnn: return "TINY_CNN";
    case BackboneName::kTinyCnn2: return "TINY_CNN2";
  }
  return "TINY_CNN";
}

std::string_view to_string(WeightsOrigin origin) {
  return origin == WeightsOrigin::kRandom ? "RANDOM" : "IMAGENET_PRETRAINED";
}

BackboneName parse_backbone_name(std::string_view text) {
  for (auto n : kAllNames) {
    if (to_string(n) == text) return n;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown backbone '" + std::string(text) + "'");
}

WeightsOrigin parse_weights_origin(std::string_view text) {
  if (text == "RANDOM") return WeightsOrigin::kRandom;
  if (text == "IMAGENET_PRETRAINED") return WeightsOrigin::kImagenetPretrained;
  throw Error(ErrorCode::kInvalidArgument, "unknown weights origin '" + std::string(text) + "'");
}

void BackboneId::validate() const {
  if (is_desk_scale() && weights != WeightsOrigin::kRandom) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(to_string(name)) + " has no pretrained weights; use RANDOM");
  }
  if (!is_desk_scale() && weights != WeightsOrigin::kImagenetPretrained) {
    throw Error(ErrorCode::kWeightsUnavailable,
                std::string(to_string(name)) +
                    " is only available with IMAGENET_PRETRAINED weights loaded from the cache");
  }
}

void to_json(nlohmann::json& j, const BackboneId& id) {
  j = nlohmann::json{{"name", to_string(id.name)}, {"weights", to_string(id.weights)}};
}

void from_json(const nlohmann::json& j, BackboneId& id) {
  id.name = parse_backbone_name(j.at("name").get<std::string>());
  if (j.contains("weights")) {
    id.weights = parse_weights_origin(j.at("weights").get<std::string>());
  } else {
    id.weights = id.is_desk_scale() ? WeightsOrigin::kRandom : WeightsOrigin::kImagenetPretrained;
  }
}

FeatureShape reference_output_shape(BackboneName name) {
  switch (name) {
    case BackboneName::kVgg16: return {7, 7, 512, true};
    case BackboneName::kResnet50: return {7, 7, 2048, true};
    case BackboneName::kMobilenetV2: return {1, 1, 1280, false};
    case BackboneName::kEfficientnet: return {1, 1, 1280, false};
    case BackboneName::kTinyCnn: return {1, 1, 32, false};
    case BackboneName::kTinyCnn2: return {1, 1, 48, false};
  }
  return {};
}

std::string weights_file_name(BackboneName name) {
  switch (name) {
    case BackboneName::kVgg16: return "vgg16_notop.onnx";
    case BackboneName::kResnet50: return "resnet50_notop.onnx";
    case BackboneName::kMobilenetV2: return "mobilenet_v2_feature_vector.onnx";
    case BackboneName::kEfficientnet: return "efficientnet_b0_feature_vector.onnx";
    default: return {};
  }
}

std::filesystem::path resolve_weights_cache(const BackboneLoadOptions& options) {
  if (!options.cache_dir.empty()) return options.cache_dir;
  if (const char* env = std::getenv("COLORGUARD_CACHE"); env != nullptr && *env != '\0') {
    return env;
  }
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    return std::filesystem::path(home) / ".cache" / "colorguard";
  }
  return std::filesystem::path(".colorguard_cache");
}

std::unique_ptr<Backbone> load_backbone(const BackboneId& id, std::uint64_t init_seed,
                                        const BackboneLoadOptions& options) {
  id.validate();
  if (id.is_desk_scale()) return std::make_unique<TinyCnn>(id.name, init_seed);
  return load_onnx_backbone(id, options);
}

}  // namespace colorguard
