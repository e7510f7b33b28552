#include "ssllab/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "ssllab/ops.hpp"
#include "ssllab/rng.hpp"

namespace ssllab {

namespace {

constexpr uint32_t kCheckpointMagic = 0x4B434C53;  // "SLCK"
constexpr uint32_t kCheckpointVersion = 1;

Tensor he_uniform(Shape shape, int fan_in, RngStream& rng) {
  const float limit = std::sqrt(6.0f / float(fan_in));
  std::vector<float> data(size_t(shape_numel(shape)));
  for (auto& v : data) v = rng.uniform(-limit, limit);
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (auto [n, w] : c.blocks) blocks.push_back({n, w});
  return {{"blocks", blocks},
          {"num_classes", c.num_classes},
          {"input_h", c.input_h},
          {"input_w", c.input_w},
          {"preset", c.preset}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.blocks.clear();
  for (const auto& b : j.at("blocks"))
    c.blocks.emplace_back(b.at(0).get<int>(), b.at(1).get<int>());
  c.num_classes = j.at("num_classes").get<int>();
  c.input_h = j.at("input_h").get<int>();
  c.input_w = j.at("input_w").get<int>();
  c.preset = j.value("preset", "");
  return c;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

int ModelConfig::conv_layer_count() const {
  int n = 0;
  for (auto [count, width] : blocks) n += count;
  return n;
}

void ModelConfig::validate() const {
  if (blocks.empty()) throw std::invalid_argument("model: no blocks");
  for (auto [count, width] : blocks)
    if (count <= 0 || width <= 0)
      throw std::invalid_argument("model: block conv counts and widths must be positive");
  if (num_classes <= 1)
    throw std::invalid_argument("model: need at least two classes");
  const int pools = maxpool_count();
  const int div = 1 << pools;
  if (input_h % div != 0 || input_w % div != 0)
    throw std::invalid_argument(
        "model: input " + std::to_string(input_h) + "x" +
        std::to_string(input_w) + " not divisible by 2^" +
        std::to_string(pools) + " maxpool stages");
}

ModelConfig ModelConfig::sononet_full(int num_classes, int h, int w) {
  ModelConfig c;
  c.blocks = {{3, 32}, {3, 64}, {3, 128}, {3, 256}, {3, 512}};
  c.num_classes = num_classes;
  c.input_h = h;
  c.input_w = w;
  c.preset = "sononet_full";
  return c;
}

ModelConfig ModelConfig::sononet_mini(int num_classes, int h, int w) {
  ModelConfig c;
  c.blocks = {{2, 16}, {2, 32}, {3, 64}};
  c.num_classes = num_classes;
  c.input_h = h;
  c.input_w = w;
  c.preset = "sononet_mini";
  return c;
}

ModelConfig ModelConfig::from_preset(const std::string& name,
                                     int num_classes) {
  if (name == "sononet_full") return sononet_full(num_classes);
  if (name == "sononet_mini") return sononet_mini(num_classes);
  throw std::invalid_argument("unknown model preset: " + name);
}

Tensor& ModelParams::at(const std::string& name) {
  for (auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw std::out_of_range("model parameter not found: " + name);
}

const Tensor& ModelParams::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw std::out_of_range("model parameter not found: " + name);
}

void ModelParams::add(const std::string& name, Tensor t, bool trainable) {
  for (const auto& e : entries_)
    if (e.name == name)
      throw std::invalid_argument("duplicate model parameter: " + name);
  entries_.push_back({name, std::move(t), trainable});
}

void ModelParams::zero_grads() {
  for (auto& e : entries_)
    if (e.trainable) e.tensor.zero_grad();
}

int64_t ModelParams::parameter_count() const {
  int64_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.tensor.numel();
  return n;
}

ModelParams build_model(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelParams params(config);
  // Each parameter draws from its own substream so initialization is a pure
  // function of (seed, parameter ordinal).
  uint64_t ordinal = 0;
  auto next_stream = [&] {
    return derive_stream(seed, StreamPurpose::model_init, ordinal++);
  };

  int in_ch = 1;
  for (size_t b = 0; b < config.blocks.size(); ++b) {
    const auto [conv_count, width] = config.blocks[b];
    for (int j = 0; j < conv_count; ++j) {
      const std::string base =
          "b" + std::to_string(b) + ".conv" + std::to_string(j);
      auto rng = next_stream();
      params.add(base + ".kernel",
                 he_uniform({width, in_ch, 3, 3}, in_ch * 9, rng), true);
      params.add(base + ".bias", Tensor::zeros({width}, true), true);
      const std::string bn =
          "b" + std::to_string(b) + ".bn" + std::to_string(j);
      params.add(bn + ".gamma", Tensor::full({width}, 1.0f, true), true);
      params.add(bn + ".beta", Tensor::zeros({width}, true), true);
      params.add(bn + ".run_mean", Tensor::zeros({width}, false), false);
      params.add(bn + ".run_var", Tensor::full({width}, 1.0f, false), false);
      in_ch = width;
    }
  }
  auto rng = next_stream();
  params.add("head.weight",
             he_uniform({in_ch, config.num_classes}, in_ch, rng), true);
  params.add("head.bias", Tensor::zeros({config.num_classes}, true), true);
  return params;
}

Tensor model_forward(ModelParams& params, const Tensor& batch, bool train) {
  const auto& cfg = params.config();
  if (batch.ndim() != 4 || batch.dim(1) != 1 || batch.dim(2) != cfg.input_h ||
      batch.dim(3) != cfg.input_w) {
    throw std::invalid_argument(
        "model_forward: batch " + shape_str(batch.shape()) +
        " does not match configured input [N,1," + std::to_string(cfg.input_h) +
        "," + std::to_string(cfg.input_w) + "]");
  }
  Tensor x = batch;
  for (size_t b = 0; b < cfg.blocks.size(); ++b) {
    const int conv_count = cfg.blocks[b].first;
    for (int j = 0; j < conv_count; ++j) {
      const std::string base =
          "b" + std::to_string(b) + ".conv" + std::to_string(j);
      const std::string bn = "b" + std::to_string(b) + ".bn" + std::to_string(j);
      x = conv2d(x, params.at(base + ".kernel"), params.at(base + ".bias"),
                 Padding::same);
      x = batchnorm2d(x, params.at(bn + ".gamma"), params.at(bn + ".beta"),
                      params.at(bn + ".run_mean"), params.at(bn + ".run_var"),
                      train);
      x = relu(x);
    }
    if (b + 1 < cfg.blocks.size()) x = maxpool2(x);
  }
  x = global_avg_pool(x);
  return dense(x, params.at("head.weight"), params.at("head.bias"));
}

void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path.string());
  write_pod(os, kCheckpointMagic);
  write_pod(os, kCheckpointVersion);
  const std::string cfg = config_to_json(params.config()).dump();
  write_pod(os, uint32_t(cfg.size()));
  os.write(cfg.data(), std::streamsize(cfg.size()));
  write_pod(os, uint32_t(params.entries().size()));
  for (const auto& e : params.entries()) {
    write_pod(os, uint32_t(e.name.size()));
    os.write(e.name.data(), std::streamsize(e.name.size()));
    write_pod(os, uint8_t(e.trainable ? 1 : 0));
    write_pod(os, uint32_t(e.tensor.ndim()));
    for (int d = 0; d < e.tensor.ndim(); ++d)
      write_pod(os, uint32_t(e.tensor.dim(d)));
    os.write(reinterpret_cast<const char*>(e.tensor.data().data()),
             std::streamsize(sizeof(float) * e.tensor.data().size()));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  if (read_pod<uint32_t>(is) != kCheckpointMagic)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const uint32_t version = read_pod<uint32_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  const uint32_t cfg_len = read_pod<uint32_t>(is);
  std::string cfg_str(cfg_len, '\0');
  is.read(cfg_str.data(), cfg_len);
  if (!is) throw std::runtime_error("checkpoint: truncated config");
  ModelParams params(config_from_json(nlohmann::json::parse(cfg_str)));
  const uint32_t count = read_pod<uint32_t>(is);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_pod<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const bool trainable = read_pod<uint8_t>(is) != 0;
    const uint32_t ndim = read_pod<uint32_t>(is);
    Shape shape(ndim);
    for (auto& d : shape) d = int(read_pod<uint32_t>(is));
    std::vector<float> data(size_t(shape_numel(shape)));
    is.read(reinterpret_cast<char*>(data.data()),
            std::streamsize(sizeof(float) * data.size()));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor " + name);
    params.add(name, Tensor::from_data(std::move(shape), std::move(data),
                                       trainable),
               trainable);
  }
  return params;
}

}  // namespace ssllab
