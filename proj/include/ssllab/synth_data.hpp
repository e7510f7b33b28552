#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ssllab/image.hpp"

namespace ssllab {

// Structural analog of the paper's class layout: well-separated "distinct"
// shape families, one confusable cluster of subtle variants of a shared base
// shape, and an oversized heterogeneous background class mixing texture
// fields with distorted near-class lookalikes.
struct DatasetSpec {
  int num_distinct_classes = 9;
  int confusable_cluster_size = 4;
  bool include_background = true;
  // Train/test image counts by class index; empty maps take the desk-scale
  // defaults (200/60 per anatomical class, 600/180 for background).
  std::map<int, int> train_per_class;
  std::map<int, int> test_per_class;
  int image_h = 32;
  int image_w = 32;
  float noise_sigma = 0.08f;
  uint64_t seed = 1;

  int total_classes() const {
    return num_distinct_classes + confusable_cluster_size +
           (include_background ? 1 : 0);
  }
  int background_index() const {
    return include_background ? total_classes() - 1 : -1;
  }
  std::vector<std::string> class_names() const;
  // Fills empty count maps with defaults and validates consistency.
  void finalize();

  bool operator==(const DatasetSpec&) const = default;
};

enum class Split { train, test };

struct Sample {
  Image image;
  int label = 0;
  Split split = Split::train;
  bool is_labelled = true;
};

struct Dataset {
  DatasetSpec spec;  // finalized echo
  std::vector<std::string> class_names;
  std::vector<Sample> samples;

  int num_classes() const { return int(class_names.size()); }
  int background_index() const;        // -1 when absent
  std::vector<int> cluster_indices() const;
  std::vector<int> split_indices(Split split) const;
  std::vector<int> class_counts(Split split) const;

  // FNV-1a over class names, labels, splits and quantized pixels.
  uint64_t content_hash() const;

  // Copy with background samples and the background class removed.
  Dataset without_background() const;
};

// Deterministic in spec.seed; pixel values are quantized to the 8-bit grid
// so that disk round-trips are lossless.
Dataset generate_dataset(DatasetSpec spec);

// Stratified labelled subset of the train split: exactly per_class labelled
// sample indices per class, the rest unlabelled. Unlabelled labels stay in
// the dataset for diagnostics but training must not read them.
struct LabelSplit {
  std::vector<int> labelled;
  std::vector<int> unlabelled;
};
LabelSplit subset_labels(const Dataset& ds, int per_class, uint64_t seed);

// Directory layout: root/{train,test}/<class_name>/img_#####.pgm plus
// root/manifest.csv. Externally produced datasets in the same layout load
// through the same path.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// 8-bit binary PGM (P5) IO.
void write_pgm(const Image& img, const std::filesystem::path& path);
Image read_pgm(const std::filesystem::path& path);

}  // namespace ssllab
