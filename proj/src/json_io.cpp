#include "ssllab/json_io.hpp"

#include <cmath>
#include <cstdio>

namespace ssllab {

namespace {

// NaN is not representable in JSON; per-class CBM fractions use null.
nlohmann::json opt_double(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double opt_double_from(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const AugmentPolicy& p) {
  j = {{"flip_prob", p.flip_prob},
       {"contrast", {p.contrast_min, p.contrast_max}},
       {"rotation", {p.rotation_min, p.rotation_max}},
       {"crop", {p.crop_min, p.crop_max}}};
}

void from_json(const nlohmann::json& j, AugmentPolicy& p) {
  p.flip_prob = j.at("flip_prob").get<float>();
  p.contrast_min = j.at("contrast").at(0).get<float>();
  p.contrast_max = j.at("contrast").at(1).get<float>();
  p.rotation_min = j.at("rotation").at(0).get<float>();
  p.rotation_max = j.at("rotation").at(1).get<float>();
  p.crop_min = j.at("crop").at(0).get<float>();
  p.crop_max = j.at("crop").at(1).get<float>();
}

void to_json(nlohmann::json& j, const SslConfig& c) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, thr] : c.eta_cbm_per_class)
    per_class[std::to_string(cls)] = thr;
  j = {{"lambda", c.lambda},
       {"tsa_schedule", to_string(c.tsa_schedule)},
       {"eta_cbm_default", c.eta_cbm_default},
       {"eta_cbm_per_class", per_class},
       {"temperature", c.temperature},
       {"entropy_weight", c.entropy_weight},
       {"total_steps", c.total_steps},
       {"tsa_literal", c.tsa_literal}};
}

void from_json(const nlohmann::json& j, SslConfig& c) {
  c.lambda = j.at("lambda").get<float>();
  c.tsa_schedule = tsa_schedule_from_string(j.at("tsa_schedule").get<std::string>());
  c.eta_cbm_default = j.at("eta_cbm_default").get<float>();
  c.eta_cbm_per_class.clear();
  if (j.contains("eta_cbm_per_class"))
    for (const auto& [key, value] : j.at("eta_cbm_per_class").items())
      c.eta_cbm_per_class[std::stoi(key)] = value.get<float>();
  c.temperature = j.value("temperature", 0.8f);
  c.entropy_weight = j.value("entropy_weight", 0.1f);
  c.total_steps = j.value("total_steps", int64_t(0));
  c.tsa_literal = j.value("tsa_literal", false);
}

void to_json(nlohmann::json& j, const OptimizerConfig& c) {
  j = {{"kind", to_string(c.kind)},
       {"lr", c.lr},
       {"lr_min", c.lr_min},
       {"lr_max", c.lr_max}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& c) {
  c.kind = optimizer_kind_from_string(j.at("kind").get<std::string>());
  c.lr = j.value("lr", 1e-3f);
  c.lr_min = j.value("lr_min", 7e-3f);
  c.lr_max = j.value("lr_max", 5e-2f);
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (auto [n, w] : c.blocks) blocks.push_back({n, w});
  j = {{"blocks", blocks},
       {"num_classes", c.num_classes},
       {"input_h", c.input_h},
       {"input_w", c.input_w},
       {"preset", c.preset}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (j.contains("preset") && !j.at("preset").get<std::string>().empty() &&
      !j.contains("blocks")) {
    c = ModelConfig::from_preset(j.at("preset").get<std::string>(),
                                 j.value("num_classes", 14));
    c.input_h = j.value("input_h", c.input_h);
    c.input_w = j.value("input_w", c.input_w);
    return;
  }
  c.blocks.clear();
  for (const auto& b : j.at("blocks"))
    c.blocks.emplace_back(b.at(0).get<int>(), b.at(1).get<int>());
  c.num_classes = j.at("num_classes").get<int>();
  c.input_h = j.at("input_h").get<int>();
  c.input_w = j.at("input_w").get<int>();
  c.preset = j.value("preset", "");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"mode", to_string(c.mode)},
       {"optimizer", c.optimizer},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"labelled_per_class", c.labelled_per_class},
       {"include_background", c.include_background},
       {"ssl", c.ssl},
       {"augment", c.augment},
       {"model", c.model},
       {"seed", c.seed},
       {"cyclic_epochs", c.cyclic_epochs}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.mode = train_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("optimizer")) c.optimizer = j.at("optimizer").get<OptimizerConfig>();
  c.epochs = j.value("epochs", 50);
  c.batch_size = j.value("batch_size", 32);
  c.labelled_per_class = j.value("labelled_per_class", 20);
  c.include_background = j.value("include_background", true);
  if (j.contains("ssl")) c.ssl = j.at("ssl").get<SslConfig>();
  if (j.contains("augment")) c.augment = j.at("augment").get<AugmentPolicy>();
  if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
  c.seed = j.value("seed", uint64_t(1));
  c.cyclic_epochs = j.value("cyclic_epochs", 10);
}

void to_json(nlohmann::json& j, const DatasetSpec& s) {
  auto map_json = [](const std::map<int, int>& m) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : m) out[std::to_string(k)] = v;
    return out;
  };
  j = {{"num_distinct_classes", s.num_distinct_classes},
       {"confusable_cluster_size", s.confusable_cluster_size},
       {"include_background", s.include_background},
       {"train_per_class", map_json(s.train_per_class)},
       {"test_per_class", map_json(s.test_per_class)},
       {"image_h", s.image_h},
       {"image_w", s.image_w},
       {"noise_sigma", s.noise_sigma},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, DatasetSpec& s) {
  s.num_distinct_classes = j.value("num_distinct_classes", 9);
  s.confusable_cluster_size = j.value("confusable_cluster_size", 4);
  s.include_background = j.value("include_background", true);
  auto map_from = [](const nlohmann::json& obj) {
    std::map<int, int> out;
    for (const auto& [k, v] : obj.items()) out[std::stoi(k)] = v.get<int>();
    return out;
  };
  if (j.contains("train_per_class"))
    s.train_per_class = map_from(j.at("train_per_class"));
  if (j.contains("test_per_class"))
    s.test_per_class = map_from(j.at("test_per_class"));
  s.image_h = j.value("image_h", 32);
  s.image_w = j.value("image_w", 32);
  s.noise_sigma = j.value("noise_sigma", 0.08f);
  s.seed = j.value("seed", uint64_t(1));
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  nlohmann::json recall = nlohmann::json::array();
  for (const auto& v : r.per_class_recall)
    recall.push_back(v.has_value() ? nlohmann::json(*v) : nlohmann::json());
  j = {{"class_names", r.class_names},
       {"confusion", r.confusion},
       {"overall_accuracy_anatomical", r.overall_accuracy_anatomical},
       {"grouped_cluster_accuracy", r.grouped_cluster_accuracy},
       {"per_class_recall", recall},
       {"background_included", r.background_included},
       {"cluster", r.cluster},
       {"background_index", r.background_index}};
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  r.class_names = j.at("class_names").get<std::vector<std::string>>();
  r.confusion = j.at("confusion").get<std::vector<std::vector<int64_t>>>();
  r.overall_accuracy_anatomical = j.at("overall_accuracy_anatomical").get<double>();
  r.grouped_cluster_accuracy = j.at("grouped_cluster_accuracy").get<double>();
  r.per_class_recall.clear();
  for (const auto& v : j.at("per_class_recall"))
    r.per_class_recall.push_back(v.is_null()
                                     ? std::optional<double>()
                                     : std::optional<double>(v.get<double>()));
  r.background_included = j.at("background_included").get<bool>();
  r.cluster = j.at("cluster").get<std::vector<int>>();
  r.background_index = j.at("background_index").get<int>();
}

void to_json(nlohmann::json& j, const EpochStats& e) {
  nlohmann::json per_class = nlohmann::json::array();
  for (double v : e.cbm_keep_per_class) per_class.push_back(opt_double(v));
  j = {{"epoch", e.epoch},
       {"sup_loss", e.sup_loss},
       {"cons_loss", e.cons_loss},
       {"ent_term", e.ent_term},
       {"eta_tsa", opt_double(e.eta_tsa)},
       {"tsa_keep_frac", e.tsa_keep_frac},
       {"cbm_keep_frac", e.cbm_keep_frac},
       {"cbm_keep_per_class", per_class},
       {"test_overall", e.test_overall},
       {"test_grouped", e.test_grouped}};
}

void from_json(const nlohmann::json& j, EpochStats& e) {
  e.epoch = j.at("epoch").get<int>();
  e.sup_loss = j.at("sup_loss").get<double>();
  e.cons_loss = j.at("cons_loss").get<double>();
  e.ent_term = j.at("ent_term").get<double>();
  e.eta_tsa = opt_double_from(j.at("eta_tsa"));
  e.tsa_keep_frac = j.at("tsa_keep_frac").get<double>();
  e.cbm_keep_frac = j.at("cbm_keep_frac").get<double>();
  e.cbm_keep_per_class.clear();
  for (const auto& v : j.at("cbm_keep_per_class"))
    e.cbm_keep_per_class.push_back(opt_double_from(v));
  e.test_overall = j.at("test_overall").get<double>();
  e.test_grouped = j.at("test_grouped").get<double>();
}

void to_json(nlohmann::json& j, const RunRecord& r) {
  j = {{"config", r.config},
       {"config_hash", r.config_hash},
       {"dataset_hash", r.dataset_hash},
       {"status", r.status},
       {"epochs", r.epochs},
       {"final_metrics", nlohmann::json()},
       {"wall_seconds", r.wall_seconds}};
  if (r.status == "complete") {
    nlohmann::json fm;
    to_json(fm, r.final_metrics);
    j["final_metrics"] = fm;
  }
}

void from_json(const nlohmann::json& j, RunRecord& r) {
  r.config = j.at("config").get<TrainConfig>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.dataset_hash = j.at("dataset_hash").get<uint64_t>();
  r.status = j.at("status").get<std::string>();
  r.epochs = j.at("epochs").get<std::vector<EpochStats>>();
  if (!j.at("final_metrics").is_null())
    from_json(j.at("final_metrics"), r.final_metrics);
  r.wall_seconds = j.at("wall_seconds").get<double>();
}

std::string canonical_json(const TrainConfig& cfg) {
  nlohmann::json j;
  to_json(j, cfg);
  return j.dump();
}

std::string config_hash(const TrainConfig& cfg, uint64_t dataset_hash) {
  const std::string canonical = canonical_json(cfg);
  uint64_t h = 0xCBF29CE484222325ull;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 0x100000001B3ull;
  };
  for (char c : canonical) mix(uint64_t(uint8_t(c)));
  for (int i = 0; i < 8; ++i) mix((dataset_hash >> (8 * i)) & 0xFF);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

TrainConfig parse_train_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  try {
    TrainConfig cfg = j.get<TrainConfig>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config field error: ") + e.what());
  }
}

DatasetSpec parse_dataset_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("spec parse error: ") + e.what());
  }
  try {
    DatasetSpec spec = j.get<DatasetSpec>();
    spec.finalize();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("spec field error: ") + e.what());
  }
}

}  // namespace ssllab
