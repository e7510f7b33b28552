#include "ssllab/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ssllab/json_io.hpp"
#include "ssllab/ops.hpp"
#include "ssllab/rng.hpp"

namespace ssllab {

std::string to_string(TrainMode m) {
  return m == TrainMode::supervised ? "supervised" : "ssl";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "supervised") return TrainMode::supervised;
  if (s == "ssl") return TrainMode::ssl;
  throw std::invalid_argument("unknown train mode: " + s);
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::momentum: return "momentum";
    case OptimizerKind::sgd_cyclic: return "sgd_cyclic";
  }
  return "adam";
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "momentum") return OptimizerKind::momentum;
  if (s == "sgd_cyclic") return OptimizerKind::sgd_cyclic;
  throw std::invalid_argument("unknown optimizer: " + s);
}

void OptimizerConfig::validate() const {
  if (kind == OptimizerKind::sgd_cyclic) {
    if (lr_min <= 0.0f || lr_max <= 0.0f)
      throw std::invalid_argument("optimizer: cyclic rates must be positive");
    if (lr_min >= lr_max)
      throw std::invalid_argument("optimizer: lr_min must be below lr_max");
  } else if (lr <= 0.0f) {
    throw std::invalid_argument("optimizer: learning rate must be positive");
  }
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw std::invalid_argument("train: epochs must be positive");
  if (batch_size <= 0)
    throw std::invalid_argument("train: batch_size must be positive");
  if (cyclic_epochs <= 0)
    throw std::invalid_argument("train: cyclic_epochs must be positive");
  optimizer.validate();
  ssl.validate();
  augment.validate();
}

Optimizer::Optimizer(std::vector<Tensor> params, OptimizerConfig config,
                     int64_t cyclic_cycle_steps)
    : params_(std::move(params)),
      config_(config),
      cycle_steps_(cyclic_cycle_steps) {
  config_.validate();
  if (config_.kind == OptimizerKind::sgd_cyclic && cycle_steps_ <= 0)
    throw std::invalid_argument("optimizer: cyclic schedule needs cycle steps");
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(size_t(params_[i].numel()), 0.0f);
    v_[i].assign(size_t(params_[i].numel()), 0.0f);
  }
}

double Optimizer::learning_rate_at(int64_t step) const {
  if (config_.kind != OptimizerKind::sgd_cyclic) return double(config_.lr);
  const double phase =
      double(step % cycle_steps_) / double(cycle_steps_);
  const double tri = 1.0 - std::fabs(2.0 * phase - 1.0);
  return double(config_.lr_min) +
         (double(config_.lr_max) - double(config_.lr_min)) * tri;
}

void Optimizer::step() {
  ++t_;
  const float lr = float(learning_rate_at(t_ - 1));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad())
      throw std::runtime_error("optimizer: missing gradient for parameter " +
                               std::to_string(i));
    const auto& g = p.grad();
    auto& w = p.data();
    switch (config_.kind) {
      case OptimizerKind::adam: {
        constexpr float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
        const float bc1 = 1.0f - float(std::pow(double(beta1), double(t_)));
        const float bc2 = 1.0f - float(std::pow(double(beta2), double(t_)));
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < w.size(); ++j) {
          m[j] = beta1 * m[j] + (1.0f - beta1) * g[j];
          v[j] = beta2 * v[j] + (1.0f - beta2) * g[j] * g[j];
          const float mhat = m[j] / bc1;
          const float vhat = v[j] / bc2;
          w[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        break;
      }
      case OptimizerKind::momentum: {
        constexpr float mu = 0.9f;
        auto& v = m_[i];
        for (size_t j = 0; j < w.size(); ++j) {
          v[j] = mu * v[j] + g[j];
          w[j] -= lr * v[j];
        }
        break;
      }
      case OptimizerKind::sgd_cyclic: {
        for (size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
        break;
      }
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> shuffled(std::vector<int> v, RngStream rng) {
  for (int i = int(v.size()) - 1; i > 0; --i)
    std::swap(v[size_t(i)], v[size_t(rng.uniform_int(i + 1))]);
  return v;
}

std::vector<Tensor> trainable_tensors(ModelParams& params) {
  std::vector<Tensor> out;
  for (auto& e : params.entries())
    if (e.trainable) out.push_back(e.tensor);
  return out;
}

// Builds [B,1,H,W] from dataset samples; augments per sample when a policy
// is given, with a stream keyed by (seed, dataset index, epoch).
Tensor make_batch(const Dataset& ds, const std::vector<int>& order,
                  size_t begin, size_t end, const AugmentPolicy* policy,
                  uint64_t seed, int epoch, std::vector<int>* labels_out) {
  const int b = int(end - begin);
  const int H = ds.spec.image_h, W = ds.spec.image_w;
  std::vector<float> px(size_t(b) * H * W);
  if (labels_out) labels_out->resize(size_t(b));
  for (int i = 0; i < b; ++i) {
    const int idx = order[begin + size_t(i)];
    const Sample& s = ds.samples[size_t(idx)];
    if (labels_out) (*labels_out)[size_t(i)] = s.label;
    if (policy) {
      auto rng = derive_stream(seed, uint64_t(idx), epoch);
      const Image aug = augment(s.image, *policy, rng);
      std::copy(aug.pixels.begin(), aug.pixels.end(),
                px.begin() + size_t(i) * H * W);
    } else {
      std::copy(s.image.pixels.begin(), s.image.pixels.end(),
                px.begin() + size_t(i) * H * W);
    }
  }
  return Tensor::from_data({b, 1, H, W}, std::move(px));
}

double mask_fraction(const std::vector<uint8_t>& mask) {
  if (mask.empty()) return 0.0;
  double s = 0.0;
  for (auto m : mask) s += m ? 1.0 : 0.0;
  return s / double(mask.size());
}

struct RunTimer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

ModelConfig resolve_model_config(const TrainConfig& cfg, const Dataset& ds) {
  ModelConfig mc = cfg.model;
  mc.num_classes = ds.num_classes();
  if (mc.input_h != ds.spec.image_h || mc.input_w != ds.spec.image_w)
    throw std::invalid_argument(
        "train: model input " + std::to_string(mc.input_h) + "x" +
        std::to_string(mc.input_w) + " does not match dataset " +
        std::to_string(ds.spec.image_h) + "x" + std::to_string(ds.spec.image_w));
  mc.validate();
  return mc;
}

void emit(const ProgressFn& progress, const std::string& line) {
  if (progress) progress(line);
}

std::string epoch_line(const EpochStats& st, TrainMode mode) {
  char buf[256];
  if (mode == TrainMode::supervised) {
    std::snprintf(buf, sizeof(buf),
                  "epoch %3d  sup_loss %.4f  test_overall %.4f  test_grouped %.4f",
                  st.epoch, st.sup_loss, st.test_overall, st.test_grouped);
  } else {
    std::snprintf(buf, sizeof(buf),
                  "epoch %3d  sup_loss %.4f  cons %.4f  ent %.4f  eta %.3f  "
                  "tsa_keep %.2f  cbm_keep %.2f  test_overall %.4f  "
                  "test_grouped %.4f",
                  st.epoch, st.sup_loss, st.cons_loss, st.ent_term, st.eta_tsa,
                  st.tsa_keep_frac, st.cbm_keep_frac, st.test_overall,
                  st.test_grouped);
  }
  return buf;
}

}  // namespace

RunRecord train_supervised(const TrainConfig& cfg, const Dataset& ds,
                           const std::vector<int>& labelled,
                           const ProgressFn& progress,
                           ModelParams* params_out) {
  cfg.validate();
  if (labelled.empty())
    throw std::invalid_argument("train_supervised: empty labelled set");

  RunTimer timer;
  RunRecord rec;
  rec.config = cfg;
  rec.dataset_hash = ds.content_hash();
  rec.config_hash = config_hash(cfg, rec.dataset_hash);

  const ModelConfig mc = resolve_model_config(cfg, ds);
  ModelParams params = build_model(mc, cfg.seed);
  const int64_t steps_per_epoch =
      (int64_t(labelled.size()) + cfg.batch_size - 1) / cfg.batch_size;
  Optimizer opt(trainable_tensors(params), cfg.optimizer,
                int64_t(cfg.cyclic_epochs) * steps_per_epoch);

  const auto test_idx = ds.split_indices(Split::test);
  const auto cluster = ds.cluster_indices();
  const int bg = ds.background_index();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled(
        labelled, derive_stream(cfg.seed, StreamPurpose::batch_order, 0,
                                uint64_t(epoch)));
    EpochStats st;
    st.epoch = epoch;
    st.cbm_keep_per_class.assign(size_t(ds.num_classes()),
                                 std::numeric_limits<double>::quiet_NaN());
    double loss_sum = 0.0;
    int64_t steps = 0;
    for (size_t pos = 0; pos < order.size(); pos += size_t(cfg.batch_size)) {
      const size_t end = std::min(order.size(), pos + size_t(cfg.batch_size));
      std::vector<int> labels;
      Tensor batch = make_batch(ds, order, pos, end, &cfg.augment, cfg.seed,
                                epoch, &labels);
      Tensor logits = model_forward(params, batch, /*train=*/true);
      Tensor probs = softmax(logits, 1.0f);
      Tensor loss = cross_entropy(probs, labels);
      if (!std::isfinite(loss.item()))
        throw std::runtime_error("train_supervised: non-finite loss at epoch " +
                                 std::to_string(epoch));
      params.zero_grads();
      loss.backward();
      opt.step();
      loss_sum += double(loss.item());
      ++steps;
    }
    st.sup_loss = loss_sum / double(steps);
    const MetricsReport report = evaluate_indices(params, ds, test_idx,
                                                  cluster, bg);
    st.test_overall = report.overall_accuracy_anatomical;
    st.test_grouped = report.grouped_cluster_accuracy;
    rec.epochs.push_back(st);
    rec.final_metrics = report;
    emit(progress, epoch_line(st, TrainMode::supervised));
  }
  rec.status = "complete";
  rec.wall_seconds = timer.seconds();
  if (params_out) *params_out = std::move(params);
  return rec;
}

RunRecord train_ssl(const TrainConfig& cfg, const Dataset& ds,
                    const std::vector<int>& labelled,
                    const std::vector<int>& unlabelled,
                    const ProgressFn& progress, ModelParams* params_out) {
  cfg.validate();
  // Fully degenerate SSL is the supervised baseline, bit for bit.
  if (cfg.ssl.lambda == 0.0f && cfg.ssl.entropy_weight == 0.0f &&
      cfg.ssl.tsa_schedule == TsaSchedule::disabled) {
    return train_supervised(cfg, ds, labelled, progress, params_out);
  }
  if (labelled.empty())
    throw std::invalid_argument("train_ssl: empty labelled set");
  if (unlabelled.empty())
    throw std::invalid_argument("train_ssl: empty unlabelled set");

  RunTimer timer;
  RunRecord rec;
  rec.config = cfg;
  rec.dataset_hash = ds.content_hash();
  rec.config_hash = config_hash(cfg, rec.dataset_hash);

  const ModelConfig mc = resolve_model_config(cfg, ds);
  ModelParams params = build_model(mc, cfg.seed);
  const int C = mc.num_classes;
  const int64_t steps_per_epoch =
      (int64_t(unlabelled.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t total_steps = steps_per_epoch * cfg.epochs;
  SslConfig ssl = cfg.ssl;
  ssl.total_steps = total_steps;

  Optimizer opt(trainable_tensors(params), cfg.optimizer,
                int64_t(cfg.cyclic_epochs) * steps_per_epoch);

  const auto test_idx = ds.split_indices(Split::test);
  const auto cluster = ds.cluster_indices();
  const int bg = ds.background_index();

  const bool need_aug = ssl.lambda > 0.0f || ssl.entropy_weight > 0.0f;
  const bool need_orig = ssl.lambda > 0.0f;

  // labelled batches cycle with a reshuffle at every wrap
  std::vector<int> lab_order;
  size_t lab_pos = 0;
  uint64_t lab_wraps = 0;
  const size_t lab_batch = std::min(size_t(cfg.batch_size), labelled.size());
  auto next_labelled = [&]() {
    std::vector<int> out;
    out.reserve(lab_batch);
    while (out.size() < lab_batch) {
      if (lab_pos >= lab_order.size()) {
        lab_order = shuffled(
            labelled, derive_stream(cfg.seed, StreamPurpose::batch_order, 1,
                                    lab_wraps++));
        lab_pos = 0;
      }
      out.push_back(lab_order[lab_pos++]);
    }
    return out;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto du_order = shuffled(
        unlabelled, derive_stream(cfg.seed, StreamPurpose::batch_order, 0,
                                  uint64_t(epoch)));
    EpochStats st;
    st.epoch = epoch;
    st.eta_tsa = tsa_threshold(
        {epoch * steps_per_epoch, total_steps, C}, ssl.tsa_schedule);
    double sup_sum = 0.0, cons_sum = 0.0, ent_sum = 0.0;
    double tsa_keep_sum = 0.0, cbm_keep_sum = 0.0;
    std::vector<int64_t> cbm_kept(size_t(C), 0), cbm_seen(size_t(C), 0);
    int64_t steps = 0;

    for (size_t pos = 0; pos < du_order.size();
         pos += size_t(cfg.batch_size)) {
      const size_t end = std::min(du_order.size(), pos + size_t(cfg.batch_size));
      const int64_t global_step = epoch * steps_per_epoch + steps;

      // labelled branch with annealed masking
      const auto lab_batch_idx = next_labelled();
      std::vector<int> labels;
      Tensor lab_images = make_batch(ds, lab_batch_idx, 0, lab_batch_idx.size(),
                                     &cfg.augment, cfg.seed, epoch, &labels);
      Tensor logits_l = model_forward(params, lab_images, /*train=*/true);
      Tensor probs_l = softmax(logits_l, 1.0f);
      const double eta =
          tsa_threshold({global_step, total_steps, C}, ssl.tsa_schedule);
      const auto keep =
          tsa_mask(probs_l, labels, eta, ssl.tsa_literal);
      Tensor sup = cross_entropy(probs_l, labels, &keep);

      // unlabelled branches
      Tensor cons = Tensor::scalar(0.0f);
      Tensor ent = Tensor::scalar(0.0f);
      if (need_aug) {
        Tensor logits_orig;
        if (need_orig) {
          NoGradGuard no_grad;
          Tensor orig = make_batch(ds, du_order, pos, end, nullptr, cfg.seed,
                                   epoch, nullptr);
          logits_orig = model_forward(params, orig, /*train=*/true);
        }
        Tensor aug_images = make_batch(ds, du_order, pos, end, &cfg.augment,
                                       cfg.seed, epoch, nullptr);
        Tensor logits_aug = model_forward(params, aug_images, /*train=*/true);
        if (need_orig) {
          cons = consistency_loss(logits_orig, logits_aug, ssl);
          const auto cbm = cbm_mask(softmax(logits_orig.detach(), 1.0f), ssl);
          const auto preds = argmax_rows(logits_orig);
          for (size_t i = 0; i < cbm.size(); ++i) {
            cbm_seen[size_t(preds[i])]++;
            if (cbm[i]) cbm_kept[size_t(preds[i])]++;
          }
          cbm_keep_sum += mask_fraction(cbm);
        }
        if (ssl.entropy_weight > 0.0f)
          ent = entropy(softmax(logits_aug, 1.0f));
      }

      Tensor loss = total_loss(sup, cons, ent, ssl);
      if (!std::isfinite(loss.item()))
        throw std::runtime_error("train_ssl: non-finite loss at epoch " +
                                 std::to_string(epoch));
      params.zero_grads();
      loss.backward();
      opt.step();

      sup_sum += double(sup.item());
      cons_sum += double(cons.item());
      ent_sum += double(ent.item());
      tsa_keep_sum += mask_fraction(keep);
      ++steps;
    }

    st.sup_loss = sup_sum / double(steps);
    st.cons_loss = cons_sum / double(steps);
    st.ent_term = ent_sum / double(steps);
    st.tsa_keep_frac = tsa_keep_sum / double(steps);
    st.cbm_keep_frac = need_orig ? cbm_keep_sum / double(steps) : 0.0;
    st.cbm_keep_per_class.assign(size_t(C),
                                 std::numeric_limits<double>::quiet_NaN());
    for (int c = 0; c < C; ++c)
      if (cbm_seen[size_t(c)] > 0)
        st.cbm_keep_per_class[size_t(c)] =
            double(cbm_kept[size_t(c)]) / double(cbm_seen[size_t(c)]);

    const MetricsReport report =
        evaluate_indices(params, ds, test_idx, cluster, bg);
    st.test_overall = report.overall_accuracy_anatomical;
    st.test_grouped = report.grouped_cluster_accuracy;
    rec.epochs.push_back(st);
    rec.final_metrics = report;
    emit(progress, epoch_line(st, TrainMode::ssl));
  }
  rec.status = "complete";
  rec.wall_seconds = timer.seconds();
  if (params_out) *params_out = std::move(params);
  return rec;
}

RunRecord run_training(const TrainConfig& cfg, const Dataset& full,
                       const ProgressFn& progress, ModelParams* params_out) {
  cfg.validate();
  const Dataset local =
      cfg.include_background ? full : full.without_background();

  LabelSplit split;
  if (cfg.labelled_per_class > 0) {
    split = subset_labels(local, cfg.labelled_per_class, cfg.seed);
  } else {
    split.labelled = local.split_indices(Split::train);
  }

  if (cfg.mode == TrainMode::supervised)
    return train_supervised(cfg, local, split.labelled, progress, params_out);
  return train_ssl(cfg, local, split.labelled, split.unlabelled, progress,
                   params_out);
}

// ---------------------------------------------------------------------------

bool equivalent(const RunRecord& a, const RunRecord& b) {
  RunRecord c = b;
  c.wall_seconds = a.wall_seconds;
  nlohmann::json ja, jc;
  to_json(ja, a);
  to_json(jc, c);
  return ja == jc;
}

RunScore run_score(const RunRecord& record) {
  RunScore s;
  s.config_hash = record.config_hash;
  s.mode = to_string(record.config.mode);
  s.labelled_per_class = record.config.labelled_per_class;
  s.include_background = record.config.include_background;
  s.seed = record.config.seed;
  s.dataset_hash = record.dataset_hash;
  s.overall = record.final_metrics.overall_accuracy_anatomical;
  s.grouped = record.final_metrics.grouped_cluster_accuracy;
  return s;
}

namespace {
std::string fmt_csv_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}
}  // namespace

void write_metrics_csv(const RunRecord& record,
                       const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "epoch,sup_loss,cons_loss,ent_term,eta_tsa,tsa_keep_frac,"
        "cbm_keep_frac,test_overall,test_grouped";
  const size_t classes = record.epochs.empty()
                             ? 0
                             : record.epochs.front().cbm_keep_per_class.size();
  for (size_t c = 0; c < classes; ++c) os << ",cbm_keep_c" << c;
  os << "\n";
  for (const auto& st : record.epochs) {
    os << st.epoch << "," << fmt_csv_double(st.sup_loss) << ","
       << fmt_csv_double(st.cons_loss) << "," << fmt_csv_double(st.ent_term)
       << "," << fmt_csv_double(st.eta_tsa) << ","
       << fmt_csv_double(st.tsa_keep_frac) << ","
       << fmt_csv_double(st.cbm_keep_frac) << ","
       << fmt_csv_double(st.test_overall) << ","
       << fmt_csv_double(st.test_grouped);
    for (size_t c = 0; c < classes; ++c)
      os << "," << fmt_csv_double(st.cbm_keep_per_class[c]);
    os << "\n";
  }
}

void save_run(const RunRecord& record, const ModelParams* params,
              const std::filesystem::path& run_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(run_dir);
  {
    nlohmann::json j;
    to_json(j, record);
    std::ofstream os(run_dir / "record.json");
    if (!os) throw std::runtime_error("cannot write record.json in " +
                                      run_dir.string());
    os << j.dump(2) << "\n";
  }
  write_metrics_csv(record, run_dir / "metrics.csv");
  if (record.status == "complete") {
    nlohmann::json j;
    to_json(j, record.final_metrics);
    std::ofstream os(run_dir / "summary.json");
    os << j.dump(2) << "\n";
  }
  if (params) save_checkpoint(*params, run_dir / "checkpoint.bin");
}

RunRecord load_run_record(const std::filesystem::path& run_dir) {
  std::ifstream is(run_dir / "record.json");
  if (!is)
    throw std::runtime_error("no record.json in " + run_dir.string());
  nlohmann::json j = nlohmann::json::parse(is);
  RunRecord rec;
  from_json(j, rec);
  return rec;
}

std::vector<RunRecord> run_grid(const TrainConfig& base, const GridAxes& axes,
                                const Dataset& data,
                                const std::vector<int>& cluster,
                                const std::filesystem::path& out_dir,
                                const ProgressFn& progress) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  auto or_default = [](auto axis, auto fallback) {
    using T = typename decltype(axis)::value_type;
    if (axis.empty()) return std::vector<T>{fallback};
    return axis;
  };
  const auto budgets = or_default(axes.labelled_per_class,
                                  base.labelled_per_class);
  const auto backgrounds =
      or_default(axes.include_background, base.include_background);
  const auto modes = or_default(axes.modes, base.mode);
  const auto schedules = or_default(axes.tsa_schedules, base.ssl.tsa_schedule);
  const auto optimizers = or_default(axes.optimizers, base.optimizer);
  const auto thresholds =
      or_default(axes.cluster_thresholds,
                 std::numeric_limits<float>::quiet_NaN());
  const auto seeds = or_default(axes.seeds, base.seed);

  // Dataset hash depends on the background filter; compute each at most once.
  uint64_t hash_with = 0, hash_without = 0;
  bool have_with = false, have_without = false;
  auto dataset_hash_for = [&](bool include_background) {
    if (include_background) {
      if (!have_with) {
        hash_with = data.content_hash();
        have_with = true;
      }
      return hash_with;
    }
    if (!have_without) {
      hash_without = data.without_background().content_hash();
      have_without = true;
    }
    return hash_without;
  };

  std::vector<RunRecord> records;
  for (int budget : budgets)
    for (bool bg : backgrounds)
      for (TrainMode mode : modes)
        for (TsaSchedule sched : schedules)
          for (const OptimizerConfig& optc : optimizers)
            for (float thr : thresholds)
              for (uint64_t seed : seeds) {
                TrainConfig cfg = base;
                cfg.labelled_per_class = budget;
                cfg.include_background = bg;
                cfg.mode = mode;
                cfg.ssl.tsa_schedule = sched;
                cfg.optimizer = optc;
                cfg.seed = seed;
                if (!std::isnan(thr))
                  for (int c : cluster) cfg.ssl.eta_cbm_per_class[c] = thr;

                const std::string hash =
                    config_hash(cfg, dataset_hash_for(cfg.include_background));
                const fs::path run_dir = out_dir / hash;
                if (fs::exists(run_dir / "record.json")) {
                  RunRecord rec = load_run_record(run_dir);
                  if (rec.status == "complete") {
                    emit(progress, "skip " + hash + " (complete)");
                    records.push_back(std::move(rec));
                    continue;
                  }
                }
                emit(progress,
                     "run  " + hash + "  [mode=" + to_string(mode) +
                         " labels=" + std::to_string(budget) +
                         " bg=" + (cfg.include_background ? "yes" : "no") +
                         " seed=" + std::to_string(seed) + "]");
                RunRecord rec;
                ModelParams params;
                bool have_params = false;
                try {
                  rec = run_training(cfg, data, progress, &params);
                  have_params = true;
                } catch (const std::exception& e) {
                  rec.config = cfg;
                  rec.config_hash = hash;
                  rec.dataset_hash = dataset_hash_for(cfg.include_background);
                  rec.status = std::string("failed: ") + e.what();
                  emit(progress, rec.status);
                }
                save_run(rec, have_params ? &params : nullptr, run_dir);
                records.push_back(std::move(rec));
              }
  return records;
}

}  // namespace ssllab
