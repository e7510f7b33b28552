#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssllab/ops.hpp"
#include "ssllab/tensor.hpp"

namespace ssllab {

enum class TsaSchedule { disabled, linear, log, exp };

std::string to_string(TsaSchedule s);
TsaSchedule tsa_schedule_from_string(const std::string& s);

// Knobs of the unsupervised branch: consistency weight, training signal
// annealing, confidence-based masking (with optional per-class threshold
// overrides keyed by the predicted class), entropy minimization weight and
// the sharpening temperature for the consistency target.
struct SslConfig {
  float lambda = 0.5f;
  TsaSchedule tsa_schedule = TsaSchedule::linear;
  float eta_cbm_default = 0.75f;
  std::map<int, float> eta_cbm_per_class;  // > 1 disables that class
  float temperature = 0.8f;
  float entropy_weight = 0.1f;
  int64_t total_steps = 0;
  // Literal reading of the annealing inequality: keep rows whose ground
  // truth probability EXCEEDS the threshold (off by default; see tsa_mask).
  bool tsa_literal = false;

  void validate() const;
  bool operator==(const SslConfig&) const = default;
};

struct StepContext {
  int64_t step = 0;
  int64_t total_steps = 1;
  int num_classes = 2;
};

// Annealing threshold eta = alpha * (1 - 1/C) + 1/C with
// alpha = t/T (linear), 1 - exp(-5 t/T) (log), exp(5 (t/T - 1)) (exp).
// Monotone nondecreasing in t; disabled returns 1.
double tsa_threshold(const StepContext& ctx, TsaSchedule schedule);

// Row mask for the supervised loss. Default semantics drop rows whose
// ground-truth probability already exceeds eta (annealed suppression of
// confident examples); literal=true inverts the comparison.
std::vector<uint8_t> tsa_mask(const Tensor& probs,
                              const std::vector<int>& labels, double eta,
                              bool literal = false);

// Row mask for the consistency loss: keep row i iff max_c p_i(c) exceeds the
// threshold of the predicted (argmax) class.
std::vector<uint8_t> cbm_mask(const Tensor& probs_orig, const SslConfig& cfg);

// Masked mean KL between the sharpened, gradient-stopped prediction for the
// original image and the T=1 prediction for the augmented copy. The mask is
// computed from the unsharpened original-branch probabilities.
Tensor consistency_loss(const Tensor& logits_orig, const Tensor& logits_aug,
                        const SslConfig& cfg);

// L = sup_ce + lambda * consistency + entropy_weight * ent. Zero-weight
// terms are dropped from the graph entirely.
Tensor total_loss(const Tensor& sup_ce, const Tensor& consistency,
                  const Tensor& ent, const SslConfig& cfg);

}  // namespace ssllab
