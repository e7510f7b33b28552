#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ssllab/augment.hpp"
#include "ssllab/eval.hpp"
#include "ssllab/model.hpp"
#include "ssllab/ssl_objectives.hpp"
#include "ssllab/synth_data.hpp"

namespace ssllab {

enum class TrainMode { supervised, ssl };
std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

enum class OptimizerKind { adam, momentum, sgd_cyclic };
std::string to_string(OptimizerKind k);
OptimizerKind optimizer_kind_from_string(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  float lr = 1e-3f;
  // cyclic schedule range (triangular, lr_min at cycle start)
  float lr_min = 7e-3f;
  float lr_max = 5e-2f;

  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

// Parameter updater over a fixed tensor list. Adam (beta1 0.9, beta2 0.999,
// eps 1e-8, bias correction), classical momentum (0.9), or plain SGD under a
// triangular cyclic learning rate.
class Optimizer {
 public:
  Optimizer(std::vector<Tensor> params, OptimizerConfig config,
            int64_t cyclic_cycle_steps = 0);

  // Applies one update from the parameters' gradient buffers.
  void step();
  int64_t steps_taken() const { return t_; }
  // Schedule introspection (cyclic kind; constant otherwise).
  double learning_rate_at(int64_t step) const;

 private:
  std::vector<Tensor> params_;
  OptimizerConfig config_;
  int64_t cycle_steps_ = 0;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;  // adam moments / momentum buffer
};

struct TrainConfig {
  TrainMode mode = TrainMode::supervised;
  OptimizerConfig optimizer;
  int epochs = 50;
  int batch_size = 32;
  int labelled_per_class = 20;  // <= 0 uses every training label
  bool include_background = true;
  SslConfig ssl;
  AugmentPolicy augment;
  ModelConfig model = ModelConfig::sononet_mini(14);
  uint64_t seed = 1;
  int cyclic_epochs = 10;  // cycle length of the cyclic schedule

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochStats {
  int epoch = 0;
  double sup_loss = 0.0;
  double cons_loss = 0.0;
  double ent_term = 0.0;
  double eta_tsa = std::numeric_limits<double>::quiet_NaN();  // at epoch start
  double tsa_keep_frac = 1.0;
  double cbm_keep_frac = 0.0;
  std::vector<double> cbm_keep_per_class;  // by predicted class; NaN = no rows
  double test_overall = 0.0;
  double test_grouped = 0.0;
};

struct RunRecord {
  TrainConfig config;
  std::string config_hash;
  uint64_t dataset_hash = 0;
  std::string status;  // "complete" or "failed: ..."
  std::vector<EpochStats> epochs;
  MetricsReport final_metrics;
  double wall_seconds = 0.0;
};

// Equality up to wall-clock time.
bool equivalent(const RunRecord& a, const RunRecord& b);

// Stable hash of the canonical config JSON plus the dataset content hash.
std::string config_hash(const TrainConfig& cfg, uint64_t dataset_hash);

using ProgressFn = std::function<void(const std::string&)>;

// Cross-entropy training over augmented labelled batches; evaluates the test
// split every epoch. Deterministic in cfg.seed.
RunRecord train_supervised(const TrainConfig& cfg, const Dataset& ds,
                           const std::vector<int>& labelled,
                           const ProgressFn& progress = {},
                           ModelParams* params_out = nullptr);

// UDA-style loop: every step pairs a labelled batch with an unlabelled batch
// (one epoch is a pass over the unlabelled pool). With lambda, entropy
// weight and TSA all disabled this delegates to train_supervised and is
// bit-identical to it. Unlabelled sample labels are never read.
RunRecord train_ssl(const TrainConfig& cfg, const Dataset& ds,
                    const std::vector<int>& labelled,
                    const std::vector<int>& unlabelled,
                    const ProgressFn& progress = {},
                    ModelParams* params_out = nullptr);

// Applies include_background filtering and the labelled-budget split, then
// dispatches on cfg.mode. `checkpoint_out`, when set, receives the final
// parameters.
RunRecord run_training(const TrainConfig& cfg, const Dataset& full,
                       const ProgressFn& progress = {},
                       ModelParams* params_out = nullptr);

// Experiment grid: cartesian product over the populated axes (empty axis =
// keep the base config's value). Results are written incrementally under
// out_dir/<config_hash>/ and completed runs are skipped on resume. Per-run
// failures are recorded and do not abort the grid.
struct GridAxes {
  std::vector<int> labelled_per_class;
  std::vector<bool> include_background;
  std::vector<TrainMode> modes;
  std::vector<TsaSchedule> tsa_schedules;
  std::vector<OptimizerConfig> optimizers;
  // Cluster-wide CBM threshold overrides; NaN entry = no override.
  std::vector<float> cluster_thresholds;
  std::vector<uint64_t> seeds;
};

std::vector<RunRecord> run_grid(const TrainConfig& base, const GridAxes& axes,
                                const Dataset& data,
                                const std::vector<int>& cluster,
                                const std::filesystem::path& out_dir,
                                const ProgressFn& progress = {});

// Run directory IO (record.json + metrics.csv + checkpoint.bin).
void save_run(const RunRecord& record, const ModelParams* params,
              const std::filesystem::path& run_dir);
RunRecord load_run_record(const std::filesystem::path& run_dir);
void write_metrics_csv(const RunRecord& record,
                       const std::filesystem::path& path);

RunScore run_score(const RunRecord& record);

}  // namespace ssllab
