#include "ssllab/ssl_objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace ssllab {

std::string to_string(TsaSchedule s) {
  switch (s) {
    case TsaSchedule::disabled: return "disabled";
    case TsaSchedule::linear: return "linear";
    case TsaSchedule::log: return "log";
    case TsaSchedule::exp: return "exp";
  }
  return "disabled";
}

TsaSchedule tsa_schedule_from_string(const std::string& s) {
  if (s == "disabled") return TsaSchedule::disabled;
  if (s == "linear") return TsaSchedule::linear;
  if (s == "log") return TsaSchedule::log;
  if (s == "exp") return TsaSchedule::exp;
  throw std::invalid_argument("unknown TSA schedule: " + s);
}

void SslConfig::validate() const {
  if (lambda < 0.0f || lambda > 1.0f)
    throw std::invalid_argument("ssl: lambda must be in [0,1]");
  if (temperature <= 0.0f)
    throw std::invalid_argument("ssl: temperature must be positive");
  if (entropy_weight < 0.0f)
    throw std::invalid_argument("ssl: entropy_weight must be nonnegative");
  auto check_thr = [](float t) {
    // in [0,1], or > 1 meaning disabled
    if (t < 0.0f) throw std::invalid_argument("ssl: negative cbm threshold");
  };
  check_thr(eta_cbm_default);
  for (const auto& [cls, thr] : eta_cbm_per_class) {
    if (cls < 0) throw std::invalid_argument("ssl: negative class index");
    check_thr(thr);
  }
}

double tsa_threshold(const StepContext& ctx, TsaSchedule schedule) {
  if (ctx.total_steps <= 0)
    throw std::invalid_argument("tsa_threshold: total_steps must be positive");
  if (ctx.step < 0 || ctx.step > ctx.total_steps)
    throw std::invalid_argument(
        "tsa_threshold: step " + std::to_string(ctx.step) +
        " outside [0, " + std::to_string(ctx.total_steps) + "]");
  if (ctx.num_classes < 2)
    throw std::invalid_argument("tsa_threshold: need at least two classes");
  if (schedule == TsaSchedule::disabled) return 1.0;

  const double r = double(ctx.step) / double(ctx.total_steps);
  double alpha = 0.0;
  switch (schedule) {
    case TsaSchedule::linear: alpha = r; break;
    case TsaSchedule::log: alpha = 1.0 - std::exp(-5.0 * r); break;
    case TsaSchedule::exp: alpha = std::exp(5.0 * (r - 1.0)); break;
    case TsaSchedule::disabled: break;
  }
  const double inv_c = 1.0 / double(ctx.num_classes);
  return alpha * (1.0 - inv_c) + inv_c;
}

std::vector<uint8_t> tsa_mask(const Tensor& probs,
                              const std::vector<int>& labels, double eta,
                              bool literal) {
  if (probs.ndim() != 2)
    throw std::invalid_argument("tsa_mask: probs must be [N,C]");
  const int n = probs.dim(0), c = probs.dim(1);
  if (int(labels.size()) != n)
    throw std::invalid_argument("tsa_mask: label count mismatch");
  std::vector<uint8_t> mask(size_t(n));
  const auto& p = probs.data();
  for (int i = 0; i < n; ++i) {
    const int y = labels[size_t(i)];
    if (y < 0 || y >= c)
      throw std::invalid_argument("tsa_mask: label out of range");
    const double py = double(p[size_t(i) * c + y]);
    mask[size_t(i)] = literal ? (py > eta ? 1 : 0) : (py <= eta ? 1 : 0);
  }
  return mask;
}

std::vector<uint8_t> cbm_mask(const Tensor& probs_orig, const SslConfig& cfg) {
  if (probs_orig.ndim() != 2)
    throw std::invalid_argument("cbm_mask: probs must be [N,C]");
  const int n = probs_orig.dim(0), c = probs_orig.dim(1);
  std::vector<uint8_t> mask(size_t(n));
  const auto& p = probs_orig.data();
  for (int i = 0; i < n; ++i) {
    int best = 0;
    float bv = p[size_t(i) * c];
    for (int j = 1; j < c; ++j)
      if (p[size_t(i) * c + j] > bv) {
        bv = p[size_t(i) * c + j];
        best = j;
      }
    auto it = cfg.eta_cbm_per_class.find(best);
    const float thr =
        it != cfg.eta_cbm_per_class.end() ? it->second : cfg.eta_cbm_default;
    mask[size_t(i)] = bv > thr ? 1 : 0;
  }
  return mask;
}

Tensor consistency_loss(const Tensor& logits_orig, const Tensor& logits_aug,
                        const SslConfig& cfg) {
  if (logits_orig.shape() != logits_aug.shape())
    throw std::invalid_argument("consistency_loss: shape mismatch " +
                                shape_str(logits_orig.shape()) + " vs " +
                                shape_str(logits_aug.shape()));
  cfg.validate();
  const Tensor target_logits = logits_orig.detach();
  const Tensor probs_t1 = softmax(target_logits, 1.0f);
  const auto mask = cbm_mask(probs_t1, cfg);
  const Tensor p = softmax(target_logits, cfg.temperature);
  const Tensor q = softmax(logits_aug, 1.0f);
  return kl_divergence(p, q, &mask);
}

Tensor total_loss(const Tensor& sup_ce, const Tensor& consistency,
                  const Tensor& ent, const SslConfig& cfg) {
  Tensor out = sup_ce;
  if (cfg.lambda != 0.0f) out = add(out, scale(consistency, cfg.lambda));
  if (cfg.entropy_weight != 0.0f)
    out = add(out, scale(ent, cfg.entropy_weight));
  return out;
}

}  // namespace ssllab
