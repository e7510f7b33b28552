#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssllab/model.hpp"
#include "ssllab/synth_data.hpp"

namespace ssllab {

// Evaluation protocol: overall accuracy over samples whose true class is
// anatomical (background-true rows keep their confusion entries but are
// excluded from accuracy), plus a grouped score where any intra-cluster
// confusion counts as correct.
struct MetricsReport {
  std::vector<std::string> class_names;
  std::vector<std::vector<int64_t>> confusion;  // rows truth, cols prediction
  double overall_accuracy_anatomical = 0.0;
  double grouped_cluster_accuracy = 0.0;
  std::vector<std::optional<double>> per_class_recall;  // absent if no truth rows
  bool background_included = false;
  std::vector<int> cluster;      // class indices scored as one group
  int background_index = -1;

  int64_t total_count() const;
  bool operator==(const MetricsReport&) const = default;
};

// Eval-mode forward over the test split. cluster holds the confusable class
// indices; background_index is -1 when no background class exists.
MetricsReport evaluate(ModelParams& params, const Dataset& test,
                       const std::vector<int>& cluster, int background_index);

// evaluate() restricted to explicit sample indices (train-split probes etc.).
MetricsReport evaluate_indices(ModelParams& params, const Dataset& ds,
                               const std::vector<int>& indices,
                               const std::vector<int>& cluster,
                               int background_index);

// Writes confusion.csv, summary.json, confusion.svg and accuracy_bars.svg
// into dir. SVGs are self-contained (rect + text only).
void export_report(const MetricsReport& report,
                   const std::filesystem::path& dir);

// One completed run's scores, as extracted from its record for comparison.
struct RunScore {
  std::string config_hash;
  std::string mode;  // "supervised" | "ssl"
  int labelled_per_class = 0;
  bool include_background = false;
  uint64_t seed = 0;
  uint64_t dataset_hash = 0;
  double overall = 0.0;
  double grouped = 0.0;
};

// Per-(budget, background) deltas of seed-averaged SSL minus supervised
// scores. Negative deltas are flagged. Mixing runs from different datasets
// is a comparison error.
struct ComparisonRow {
  int labelled_per_class = 0;
  bool include_background = false;
  int ssl_runs = 0;
  int supervised_runs = 0;
  double supervised_overall = 0.0, ssl_overall = 0.0, delta_overall = 0.0;
  double supervised_grouped = 0.0, ssl_grouped = 0.0, delta_grouped = 0.0;
  bool detrimental = false;  // delta_overall < 0
};

struct ComparisonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<ComparisonRow> compare_runs(const std::vector<RunScore>& scores);
void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path);
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace ssllab
