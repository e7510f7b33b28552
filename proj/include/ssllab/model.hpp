#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ssllab/tensor.hpp"

namespace ssllab {

// CNN topology descriptor. Blocks of 3x3 same-padding convolutions
// (each followed by batchnorm + relu) with 2x2 maxpooling between blocks,
// then global average pooling and a dense classifier head.
struct ModelConfig {
  std::vector<std::pair<int, int>> blocks;  // (conv_count, channel_width)
  int num_classes = 14;
  int input_h = 32;
  int input_w = 32;
  std::string preset;  // optional preset name for config echoes

  int conv_layer_count() const;
  int maxpool_count() const { return int(blocks.size()) - 1; }
  void validate() const;

  // 15 convolutions / 4 maxpools, VGG-like doubling widths from 32.
  static ModelConfig sononet_full(int num_classes, int h = 224, int w = 288);
  // Desk-scale variant: 7 convolutions / 2 maxpools at 32x32.
  static ModelConfig sononet_mini(int num_classes, int h = 32, int w = 32);
  static ModelConfig from_preset(const std::string& name, int num_classes);

  bool operator==(const ModelConfig&) const = default;
};

struct ParamEntry {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

// Ordered, uniquely named parameter collection for one model instance.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(ModelConfig config) : config_(std::move(config)) {}

  const ModelConfig& config() const { return config_; }
  std::vector<ParamEntry>& entries() { return entries_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  void add(const std::string& name, Tensor t, bool trainable);

  // Allocates and zeroes gradient buffers on every trainable parameter.
  void zero_grads();

  int64_t parameter_count() const;  // trainable scalars

 private:
  ModelParams(ModelConfig config, std::vector<ParamEntry> entries)
      : config_(std::move(config)), entries_(std::move(entries)) {}
  ModelConfig config_;
  std::vector<ParamEntry> entries_;
};

// Deterministic He-uniform initialization from the seed.
ModelParams build_model(const ModelConfig& config, uint64_t seed);

// Forward pass over a batch [N,1,H,W] to logits [N,num_classes]. Train mode
// uses batch statistics in batchnorm (and updates running stats); eval mode
// is a pure function of (params, batch).
Tensor model_forward(ModelParams& params, const Tensor& batch, bool train);

// Versioned binary checkpoint of the named parameter arrays (little-endian,
// fixed-width headers, byte-stable layout).
void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace ssllab
