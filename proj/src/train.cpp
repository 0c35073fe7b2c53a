#include "bubbleseg/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "bubbleseg/io.hpp"
#include "json.hpp"

namespace bubbleseg::mtnet {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::ConfigInvalid, "train config: learning_rate must be positive");
  if (epochs < 1) throw Error(ErrorCode::ConfigInvalid, "train config: epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::ConfigInvalid, "train config: batch_size must be >= 1");
  if (!(lr_decay_gamma > 0.0 && lr_decay_gamma <= 1.0))
    throw Error(ErrorCode::ConfigInvalid, "train config: lr_decay_gamma must be in (0,1]");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "train config: weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw Error(ErrorCode::ConfigInvalid, "train config: betas must be in [0,1)");
  if (!(adam_eps > 0.0)) throw Error(ErrorCode::ConfigInvalid, "train config: adam_eps must be positive");
}

double TrainConfig::lr_at(int epoch) const { return learning_rate * std::pow(lr_decay_gamma, epoch); }

BinaryMask boundary_target(const AnnotationSet& ann) {
  const int w = ann.width, h = ann.height;
  std::vector<int> owner(static_cast<std::size_t>(w) * h, 0);
  for (std::size_t i = 0; i < ann.instances.size(); ++i)
    for (auto p : ann.instances[i].pixels()) owner[p] = static_cast<int>(i) + 1;
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int self = owner[static_cast<std::size_t>(y) * w + x];
      if (!self) continue;
      bool edge = false;
      for (int dy = -1; dy <= 1 && !edge; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (owner[static_cast<std::size_t>(ny) * w + nx] != self) {
            edge = true;
            break;
          }
        }
      out(x, y) = edge ? 1 : 0;
    }
  return out;
}

Sample make_sample(const GrayImage& img, const AnnotationSet& ann) {
  if (img.width() != ann.width || img.height() != ann.height)
    throw Error(ErrorCode::ShapeMismatch, "make_sample: image and annotation sizes differ");
  return {img, ann.union_mask(), boundary_target(ann)};
}

namespace {

struct AdamState {
  std::vector<std::vector<float>> m, v;
  long step = 0;
};

void adamw_step(NetParams& params, const NetParams& grads, AdamState& st, const TrainConfig& tc, double lr) {
  ++st.step;
  const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(st.step));
  const double decay = 1.0 - lr * tc.weight_decay;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    auto& w = params.tensors[t].data;
    const auto& g = grads.tensors[t].data;
    auto& m = st.m[t];
    auto& v = st.v[t];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = tc.beta1 * m[i] + (1.0 - tc.beta1) * gi;
      const double vi = tc.beta2 * v[i] + (1.0 - tc.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double upd = (mi / bc1) / (std::sqrt(vi / bc2) + tc.adam_eps);
      w[i] = static_cast<float>(w[i] * decay - lr * upd);
    }
  }
}

}  // namespace

NetParams train(const std::vector<Sample>& dataset, const TrainConfig& tc, const LossConfig& lc, const NetConfig& nc,
                const AugmentConfig& ac, std::vector<EpochLog>* log, const EpochCallback& on_epoch) {
  tc.validate();
  lc.validate();
  nc.validate();
  ac.validate();
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "train: dataset is empty");
  for (const auto& s : dataset) {
    if (s.image.width() != nc.input_size || s.image.height() != nc.input_size)
      throw Error(ErrorCode::ShapeMismatch,
                  fmt::format("train: sample is {}x{}, network expects {}", s.image.width(), s.image.height(), nc.input_size));
    require_same_shape(s.image, s.region, "train");
    require_same_shape(s.image, s.boundary, "train");
  }

  NetParams params = init_params<float>(nc, tc.seed);
  NetParams grads = zero_params<float>(nc);
  AdamState st;
  for (const auto& t : params.tensors) {
    st.m.emplace_back(t.size(), 0.0f);
    st.v.emplace_back(t.size(), 0.0f);
  }
  std::mt19937_64 rng(tc.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = tc.lr_at(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double dice = 0.0, wbce = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      grads.set_zero();
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const Sample& base = dataset[order[k]];
        LossBreakdown lb;
        if (tc.augment) {
          const Sample s = augment(base, ac, rng);
          lb = backward(params, s.image, s.region, s.boundary, lc, grads, scale);
        } else {
          lb = backward(params, base.image, base.region, base.boundary, lc, grads, scale);
        }
        if (!std::isfinite(lb.total()))
          throw Error(ErrorCode::DivergenceDetected, fmt::format("train: non-finite loss in epoch {}", epoch + 1));
        dice += lb.dice;
        wbce += lb.wbce;
      }
      adamw_step(params, grads, st, tc, lr);
    }
    if (!params.all_finite())
      throw Error(ErrorCode::DivergenceDetected, fmt::format("train: non-finite parameters after epoch {}", epoch + 1));
    const double n = static_cast<double>(dataset.size());
    EpochLog entry{epoch + 1, lr, dice / n, wbce / n, (dice + wbce) / n};
    if (log) log->push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return params;
}

void write_train_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::string out = "epoch,lr,dice_loss,wbce_loss,total\n";
  for (const auto& e : log) out += fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g}\n", e.epoch, e.lr, e.dice, e.wbce, e.total);
  io::write_atomic(path, out);
}

namespace {

constexpr char kMagic[4] = {'M', 'T', 'N', 'P'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  Reader(const std::string& bytes, std::string context) : bytes_(bytes), ctx_(std::move(context)) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::string take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::CorruptFile, ctx_ + ": truncated checkpoint");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32() {
    const std::string s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

 private:
  const std::string& bytes_;
  std::string ctx_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const NetParams& params, const std::filesystem::path& path) {
  const nlohmann::json cfg = {{"input_size", params.config.input_size},
                              {"encoder_levels", params.config.encoder_levels},
                              {"base_channels", params.config.base_channels},
                              {"kernel_size", params.config.kernel_size}};
  const std::string cfg_text = cfg.dump();
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
  out += cfg_text;
  for (const auto& t : params.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (int d : t.dims) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : t.data) put_f32(out, f);
  }
  io::write_atomic(path, out);
}

NetParams load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw Error(ErrorCode::CheckpointNotFound, "checkpoint not found: " + path.string());
  const auto raw = io::read_bytes(path);
  const std::string bytes(raw.begin(), raw.end());
  Reader r(bytes, path.string());
  if (r.take(4) != std::string(kMagic, 4)) throw Error(ErrorCode::CorruptFile, path.string() + ": bad checkpoint magic");
  NetConfig nc;
  try {
    const auto cfg = nlohmann::json::parse(r.take(r.u32()));
    nc.input_size = cfg.at("input_size").get<int>();
    nc.encoder_levels = cfg.at("encoder_levels").get<int>();
    nc.base_channels = cfg.at("base_channels").get<int>();
    nc.kernel_size = cfg.at("kernel_size").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": bad checkpoint config: " + e.what());
  }
  nc.validate();
  NetParams params = zero_params<float>(nc);
  std::size_t index = 0;
  while (!r.done()) {
    if (index >= params.tensors.size()) throw Error(ErrorCode::CorruptFile, path.string() + ": unexpected extra tensor");
    auto& t = params.tensors[index++];
    const std::string name = r.take(r.u32());
    if (name != t.name)
      throw Error(ErrorCode::CorruptFile, fmt::format("{}: expected tensor {}, found {}", path.string(), t.name, name));
    const std::uint32_t rank = r.u32();
    std::vector<int> dims(rank);
    for (auto& d : dims) d = static_cast<int>(r.u32());
    if (dims != t.dims) throw Error(ErrorCode::CorruptFile, path.string() + ": shape mismatch for " + name);
    for (auto& f : t.data) f = r.f32();
  }
  if (index != params.tensors.size()) throw Error(ErrorCode::CorruptFile, path.string() + ": missing tensors");
  if (!params.all_finite()) throw Error(ErrorCode::CorruptFile, path.string() + ": non-finite weights");
  return params;
}

}  // namespace bubbleseg::mtnet
