#include "bubbleseg/mtnet.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "bubbleseg/loss.hpp"

namespace bubbleseg::mtnet {

void NetConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigInvalid, "net config: " + m); };
  if (encoder_levels < 1 || encoder_levels > 6) fail("encoder_levels must be in [1, 6]");
  if (base_channels < 1) fail("base_channels must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) fail("kernel_size must be odd");
  if (input_size <= 0 || input_size % (1 << encoder_levels) != 0)
    fail("input_size must be a positive multiple of 2^encoder_levels");
}

namespace {

// Fixed alignment keeps Eigen's vectorized reductions in the same order on
// every run; heap addresses would otherwise decide where the peeling starts.
template <typename T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
struct Feature {
  int c = 0, h = 0, w = 0;
  Buffer<T> v;

  void reset(int channels, int height, int width) {
    c = channels;
    h = height;
    w = width;
    v.assign(static_cast<std::size_t>(c) * h * w, T(0));
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  T* ch(int i) { return v.data() + i * plane(); }
  const T* ch(int i) const { return v.data() + i * plane(); }
};

struct ConvRef {
  int weight = -1;
  int bias = -1;
  int cin = 0;
  int cout = 0;
  int k = 0;
};

struct DecoderRef {
  std::vector<ConvRef> up, c1, c2;  // indexed by level
  ConvRef head;
};

struct Layout {
  std::vector<ConvRef> enc1, enc2;
  ConvRef bott1, bott2;
  DecoderRef dec[2];
};

struct TensorSpec {
  std::string name;
  std::vector<int> dims;
  int fan_in = 0;
  bool is_bias = false;
};

Layout build_layout(const NetConfig& cfg, std::vector<TensorSpec>& specs) {
  cfg.validate();
  const int L = cfg.encoder_levels, k = cfg.kernel_size;
  auto add = [&](const std::string& name, int cin, int cout, int ksize) {
    ConvRef r{static_cast<int>(specs.size()), static_cast<int>(specs.size()) + 1, cin, cout, ksize};
    specs.push_back({name + ".weight", {cout, cin, ksize, ksize}, cin * ksize * ksize, false});
    specs.push_back({name + ".bias", {cout}, cin * ksize * ksize, true});
    return r;
  };
  Layout lay;
  int cin = 1;
  for (int l = 0; l < L; ++l) {
    const int c = cfg.channels(l);
    lay.enc1.push_back(add("encoder" + std::to_string(l) + ".conv1", cin, c, k));
    lay.enc2.push_back(add("encoder" + std::to_string(l) + ".conv2", c, c, k));
    cin = c;
  }
  lay.bott1 = add("bottleneck.conv1", cin, cfg.channels(L), k);
  lay.bott2 = add("bottleneck.conv2", cfg.channels(L), cfg.channels(L), k);
  const char* names[2] = {"region", "boundary"};
  for (int d = 0; d < 2; ++d) {
    auto& dec = lay.dec[d];
    dec.up.resize(L);
    dec.c1.resize(L);
    dec.c2.resize(L);
    for (int l = L - 1; l >= 0; --l) {
      const std::string p = std::string(names[d]) + ".level" + std::to_string(l);
      const int c = cfg.channels(l);
      dec.up[l] = add(p + ".up", cfg.channels(l + 1), c, k);
      dec.c1[l] = add(p + ".conv1", 2 * c, c, k);
      dec.c2[l] = add(p + ".conv2", c, c, k);
    }
    dec.head = add(std::string(names[d]) + ".head", cfg.channels(0), 1, 1);
  }
  return lay;
}

Layout build_layout(const NetConfig& cfg) {
  std::vector<TensorSpec> specs;
  return build_layout(cfg, specs);
}

template <typename T>
struct Scratch {
  Buffer<T> cols;
  Buffer<T> dcols;
};

// Zero-padded patch matrix: rows are (channel, ky, kx), columns are pixels.
template <typename T>
void im2col(const Feature<T>& in, int k, Buffer<T>& cols) {
  const int pad = k / 2, H = in.h, W = in.w;
  const std::size_t HW = in.plane();
  cols.assign(static_cast<std::size_t>(in.c) * k * k * HW, T(0));
  T* dst = cols.data();
  for (int c = 0; c < in.c; ++c) {
    const T* src = in.ch(c);
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx, dst += HW) {
        const int oy = ky - pad, ox = kx - pad;
        const int x0 = std::max(0, -ox), x1 = std::min(W, W - ox);
        for (int y = std::max(0, -oy); y < std::min(H, H - oy); ++y)
          std::memcpy(dst + static_cast<std::size_t>(y) * W + x0, src + static_cast<std::size_t>(y + oy) * W + x0 + ox,
                      sizeof(T) * static_cast<std::size_t>(x1 - x0));
      }
  }
}

template <typename T>
void col2im_add(const Buffer<T>& cols, int k, Feature<T>& out) {
  const int pad = k / 2, H = out.h, W = out.w;
  const std::size_t HW = out.plane();
  const T* src = cols.data();
  for (int c = 0; c < out.c; ++c) {
    T* dst = out.ch(c);
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx, src += HW) {
        const int oy = ky - pad, ox = kx - pad;
        const int x0 = std::max(0, -ox), x1 = std::min(W, W - ox);
        for (int y = std::max(0, -oy); y < std::min(H, H - oy); ++y) {
          T* d = dst + static_cast<std::size_t>(y + oy) * W + ox;
          const T* s = src + static_cast<std::size_t>(y) * W;
          for (int x = x0; x < x1; ++x) d[x] += s[x];
        }
      }
  }
}

template <typename T>
void conv_forward(const BasicParams<T>& P, const ConvRef& r, const Feature<T>& in, Feature<T>& out, bool relu,
                  Scratch<T>& s) {
  const auto HW = static_cast<Eigen::Index>(in.plane());
  out.reset(r.cout, in.h, in.w);
  ConstMatMap<T> W(P.tensors[r.weight].data.data(), r.cout, static_cast<Eigen::Index>(r.cin) * r.k * r.k);
  MatMap<T> O(out.v.data(), r.cout, HW);
  if (r.k == 1) {
    O.noalias() = W * ConstMatMap<T>(in.v.data(), r.cin, HW);
  } else {
    im2col(in, r.k, s.cols);
    O.noalias() = W * ConstMatMap<T>(s.cols.data(), static_cast<Eigen::Index>(r.cin) * r.k * r.k, HW);
  }
  const auto& b = P.tensors[r.bias].data;
  for (int c = 0; c < r.cout; ++c) O.row(c).array() += b[c];
  if (relu) O = O.cwiseMax(T(0));
}

// dout is consumed as the gradient w.r.t. the conv output (post-mask).
template <typename T>
void conv_backward(const BasicParams<T>& P, BasicParams<T>& G, const ConvRef& r, const Feature<T>& in,
                   const Feature<T>& dout, Feature<T>* din, Scratch<T>& s) {
  const auto HW = static_cast<Eigen::Index>(in.plane());
  const auto K = static_cast<Eigen::Index>(r.cin) * r.k * r.k;
  ConstMatMap<T> W(P.tensors[r.weight].data.data(), r.cout, K);
  MatMap<T> dW(G.tensors[r.weight].data.data(), r.cout, K);
  ConstMatMap<T> dO(dout.v.data(), r.cout, HW);
  auto& db = G.tensors[r.bias].data;
  for (int c = 0; c < r.cout; ++c) db[c] += dO.row(c).sum();
  if (r.k == 1) {
    ConstMatMap<T> X(in.v.data(), r.cin, HW);
    dW.noalias() += dO * X.transpose();
    if (din) {
      din->reset(in.c, in.h, in.w);
      MatMap<T>(din->v.data(), r.cin, HW).noalias() = W.transpose() * dO;
    }
    return;
  }
  im2col(in, r.k, s.cols);
  dW.noalias() += dO * ConstMatMap<T>(s.cols.data(), K, HW).transpose();
  if (din) {
    s.dcols.resize(static_cast<std::size_t>(K * HW));
    MatMap<T>(s.dcols.data(), K, HW).noalias() = W.transpose() * dO;
    din->reset(in.c, in.h, in.w);
    col2im_add(s.dcols, r.k, *din);
  }
}

template <typename T>
void relu_mask(Feature<T>& grad, const Feature<T>& out) {
  for (std::size_t i = 0; i < grad.v.size(); ++i)
    if (!(out.v[i] > T(0))) grad.v[i] = T(0);
}

template <typename T>
void maxpool_forward(const Feature<T>& in, Feature<T>& out, std::vector<std::int32_t>& arg) {
  out.reset(in.c, in.h / 2, in.w / 2);
  arg.assign(out.v.size(), 0);
  std::size_t o = 0;
  for (int c = 0; c < in.c; ++c) {
    const T* src = in.ch(c);
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x, ++o) {
        std::int32_t best = (2 * y) * in.w + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::int32_t idx = (2 * y + dy) * in.w + 2 * x + dx;
            if (src[idx] > src[best]) best = idx;
          }
        out.v[o] = src[best];
        arg[o] = best;
      }
  }
}

template <typename T>
void maxpool_backward(const Feature<T>& dout, const std::vector<std::int32_t>& arg, Feature<T>& din) {
  std::size_t o = 0;
  for (int c = 0; c < dout.c; ++c) {
    T* dst = din.ch(c);
    for (std::size_t i = 0; i < dout.plane(); ++i, ++o) dst[arg[o]] += dout.v[o];
  }
}

template <typename T>
void upsample_forward(const Feature<T>& in, Feature<T>& out) {
  out.reset(in.c, in.h * 2, in.w * 2);
  for (int c = 0; c < in.c; ++c) {
    const T* src = in.ch(c);
    T* dst = out.ch(c);
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) dst[y * out.w + x] = src[(y / 2) * in.w + x / 2];
  }
}

template <typename T>
void upsample_backward(const Feature<T>& dout, Feature<T>& din, int c, int h, int w) {
  din.reset(c, h, w);
  for (int ch = 0; ch < c; ++ch) {
    const T* src = dout.ch(ch);
    T* dst = din.ch(ch);
    for (int y = 0; y < dout.h; ++y)
      for (int x = 0; x < dout.w; ++x) dst[(y / 2) * w + x / 2] += src[y * dout.w + x];
  }
}

template <typename T>
void concat(const Feature<T>& a, const Feature<T>& b, Feature<T>& out) {
  out.c = a.c + b.c;
  out.h = a.h;
  out.w = a.w;
  out.v.resize(a.v.size() + b.v.size());
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()));
}

template <typename T>
struct Cache {
  std::vector<Feature<T>> enc_in, enc_mid, enc_out;
  std::vector<std::vector<std::int32_t>> pool_arg;
  Feature<T> bott_mid, bott_out;
  struct Dec {
    std::vector<Feature<T>> up, upc, cat, mid, out;
    Feature<T> logits;
    std::vector<T> prob;
  } dec[2];
};

template <typename T>
class Network {
 public:
  Network(const BasicParams<T>& params) : P_(params), lay_(build_layout(params.config)) {
    std::vector<TensorSpec> specs;
    build_layout(params.config, specs);
    if (specs.size() != params.tensors.size()) throw Error(ErrorCode::ShapeMismatch, "network parameters do not match config");
    for (std::size_t i = 0; i < specs.size(); ++i)
      if (specs[i].dims != params.tensors[i].dims || specs[i].name != params.tensors[i].name)
        throw Error(ErrorCode::ShapeMismatch, "parameter tensor '" + params.tensors[i].name + "' does not match config");
  }

  void forward(const GrayImage& img, Cache<T>& C) {
    const auto& cfg = P_.config;
    if (img.width() != cfg.input_size || img.height() != cfg.input_size)
      throw Error(ErrorCode::ShapeMismatch, "forward: image is " + std::to_string(img.width()) + "x" +
                                                std::to_string(img.height()) + ", network expects " +
                                                std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_size));
    const int L = cfg.encoder_levels;
    C.enc_in.resize(L);
    C.enc_mid.resize(L);
    C.enc_out.resize(L);
    C.pool_arg.resize(L);
    C.enc_in[0].reset(1, img.height(), img.width());
    std::transform(img.data().begin(), img.data().end(), C.enc_in[0].v.begin(), [](float v) { return static_cast<T>(v); });

    Feature<T> pooled;
    for (int l = 0; l < L; ++l) {
      conv_forward(P_, lay_.enc1[l], C.enc_in[l], C.enc_mid[l], true, s_);
      conv_forward(P_, lay_.enc2[l], C.enc_mid[l], C.enc_out[l], true, s_);
      maxpool_forward(C.enc_out[l], pooled, C.pool_arg[l]);
      if (l + 1 < L) C.enc_in[l + 1] = pooled;
    }
    bott_in_ = std::move(pooled);
    conv_forward(P_, lay_.bott1, bott_in_, C.bott_mid, true, s_);
    conv_forward(P_, lay_.bott2, C.bott_mid, C.bott_out, true, s_);

    for (int d = 0; d < 2; ++d) {
      auto& D = C.dec[d];
      const auto& R = lay_.dec[d];
      D.up.resize(L);
      D.upc.resize(L);
      D.cat.resize(L);
      D.mid.resize(L);
      D.out.resize(L);
      const Feature<T>* x = &C.bott_out;
      for (int l = L - 1; l >= 0; --l) {
        upsample_forward(*x, D.up[l]);
        conv_forward(P_, R.up[l], D.up[l], D.upc[l], true, s_);
        concat(D.upc[l], C.enc_out[l], D.cat[l]);
        conv_forward(P_, R.c1[l], D.cat[l], D.mid[l], true, s_);
        conv_forward(P_, R.c2[l], D.mid[l], D.out[l], true, s_);
        x = &D.out[l];
      }
      conv_forward(P_, R.head, D.out[0], D.logits, false, s_);
      D.prob.resize(D.logits.v.size());
      for (std::size_t i = 0; i < D.prob.size(); ++i) D.prob[i] = T(1) / (T(1) + std::exp(-D.logits.v[i]));
    }
  }

  // dlogits[d] holds d loss / d logit for each head.
  void backward(const Cache<T>& C, const Buffer<T> (&dlogits)[2], BasicParams<T>& G) {
    const int L = P_.config.encoder_levels;
    std::vector<Feature<T>> dskip(L);
    for (int l = 0; l < L; ++l) dskip[l].reset(C.enc_out[l].c, C.enc_out[l].h, C.enc_out[l].w);
    Feature<T> dbott;
    dbott.reset(C.bott_out.c, C.bott_out.h, C.bott_out.w);

    Feature<T> dy, dmid, dcat, dupc, dup, dx;
    for (int d = 0; d < 2; ++d) {
      const auto& D = C.dec[d];
      const auto& R = lay_.dec[d];
      Feature<T> dlog;
      dlog.c = 1;
      dlog.h = D.logits.h;
      dlog.w = D.logits.w;
      dlog.v = dlogits[d];
      conv_backward(P_, G, R.head, D.out[0], dlog, &dy, s_);
      for (int l = 0; l < L; ++l) {
        relu_mask(dy, D.out[l]);
        conv_backward(P_, G, R.c2[l], D.mid[l], dy, &dmid, s_);
        relu_mask(dmid, D.mid[l]);
        conv_backward(P_, G, R.c1[l], D.cat[l], dmid, &dcat, s_);
        const int c = D.upc[l].c;
        const std::size_t split = static_cast<std::size_t>(c) * D.upc[l].plane();
        dupc.c = c;
        dupc.h = D.upc[l].h;
        dupc.w = D.upc[l].w;
        dupc.v.assign(dcat.v.begin(), dcat.v.begin() + static_cast<std::ptrdiff_t>(split));
        for (std::size_t i = 0; i < dskip[l].v.size(); ++i) dskip[l].v[i] += dcat.v[split + i];
        relu_mask(dupc, D.upc[l]);
        conv_backward(P_, G, R.up[l], D.up[l], dupc, &dup, s_);
        const Feature<T>& below = l + 1 < L ? D.out[l + 1] : C.bott_out;
        upsample_backward(dup, dx, below.c, below.h, below.w);
        std::swap(dy, dx);
      }
      for (std::size_t i = 0; i < dbott.v.size(); ++i) dbott.v[i] += dy.v[i];
    }

    relu_mask(dbott, C.bott_out);
    conv_backward(P_, G, lay_.bott2, C.bott_mid, dbott, &dmid, s_);
    relu_mask(dmid, C.bott_mid);
    Feature<T> dcur;
    conv_backward(P_, G, lay_.bott1, bott_in_, dmid, &dcur, s_);

    Feature<T> dout;
    for (int l = L - 1; l >= 0; --l) {
      dout = dskip[l];
      maxpool_backward(dcur, C.pool_arg[l], dout);
      relu_mask(dout, C.enc_out[l]);
      conv_backward(P_, G, lay_.enc2[l], C.enc_mid[l], dout, &dmid, s_);
      relu_mask(dmid, C.enc_mid[l]);
      conv_backward(P_, G, lay_.enc1[l], C.enc_in[l], dmid, l > 0 ? &dcur : nullptr, s_);
    }
  }

 private:
  const BasicParams<T>& P_;
  Layout lay_;
  Scratch<T> s_;
  Feature<T> bott_in_;
};

template <typename T>
LossBreakdown run(const BasicParams<T>& params, const GrayImage& img, const BinaryMask& y1, const BinaryMask& y2,
                  const LossConfig& cfg, BasicParams<T>* grads, double grad_scale) {
  cfg.validate();
  require_same_shape(img, y1, "backward (region target)");
  require_same_shape(img, y2, "backward (boundary target)");
  Network<T> net(params);
  Cache<T> C;
  net.forward(img, C);
  const auto dice = dice_loss<T>(y1.data(), std::span<const T>(C.dec[0].prob), cfg);
  const auto wbce = wbce_loss<T>(y2.data(), std::span<const T>(C.dec[1].prob), cfg);
  LossBreakdown out{dice.loss, wbce.loss};
  if (!grads) return out;
  Buffer<T> dlogits[2];
  const LossResult<T>* parts[2] = {&dice, &wbce};
  for (int d = 0; d < 2; ++d) {
    const auto& p = C.dec[d].prob;
    dlogits[d].resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      dlogits[d][i] = static_cast<T>(grad_scale) * parts[d]->grad[i] * p[i] * (T(1) - p[i]);
  }
  net.backward(C, dlogits, *grads);
  return out;
}

}  // namespace

template <typename T>
std::size_t BasicParams<T>::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

template <typename T>
bool BasicParams<T>::all_finite() const {
  for (const auto& t : tensors)
    for (auto v : t.data)
      if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
void BasicParams<T>::set_zero() {
  for (auto& t : tensors) std::fill(t.data.begin(), t.data.end(), T(0));
}

template <typename T>
const Tensor<T>* BasicParams<T>::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

template <typename T>
BasicParams<T> zero_params(const NetConfig& cfg) {
  std::vector<TensorSpec> specs;
  build_layout(cfg, specs);
  BasicParams<T> p;
  p.config = cfg;
  for (const auto& s : specs) {
    std::size_t n = 1;
    for (int d : s.dims) n *= static_cast<std::size_t>(d);
    p.tensors.push_back({s.name, s.dims, std::vector<T>(n, T(0))});
  }
  return p;
}

template <typename T>
BasicParams<T> init_params(const NetConfig& cfg, std::uint64_t seed) {
  std::vector<TensorSpec> specs;
  build_layout(cfg, specs);
  BasicParams<T> p = zero_params<T>(cfg);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].is_bias) continue;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / specs[i].fan_in));
    for (auto& v : p.tensors[i].data) v = static_cast<T>(dist(rng));
  }
  return p;
}

std::size_t parameter_count(const NetConfig& cfg) { return zero_params<float>(cfg).count(); }

template <typename T>
RawOutput<T> forward_raw(const BasicParams<T>& params, const GrayImage& img) {
  Network<T> net(params);
  Cache<T> C;
  net.forward(img, C);
  return {std::move(C.dec[0].prob), std::move(C.dec[1].prob)};
}

namespace {
template <typename T>
Prediction to_prediction(RawOutput<T> raw, int w, int h) {
  auto conv = [](const std::vector<T>& v) {
    std::vector<float> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](T x) { return static_cast<float>(x); });
    return out;
  };
  return {ProbMap(w, h, conv(raw.region)), ProbMap(w, h, conv(raw.boundary))};
}
}  // namespace

Prediction forward(const NetParams& params, const GrayImage& img) {
  return to_prediction(forward_raw(params, img), img.width(), img.height());
}

Prediction forward(const BasicParams<double>& params, const GrayImage& img) {
  return to_prediction(forward_raw(params, img), img.width(), img.height());
}

template <typename T>
std::uint64_t activation_pattern(const BasicParams<T>& params, const GrayImage& img) {
  Network<T> net(params);
  Cache<T> C;
  net.forward(img, C);
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  auto gates = [&](const Feature<T>& f) {
    for (auto v : f.v) mix(v > T(0) ? 1 : 2);
  };
  for (std::size_t l = 0; l < C.enc_mid.size(); ++l) {
    gates(C.enc_mid[l]);
    gates(C.enc_out[l]);
    for (auto a : C.pool_arg[l]) mix(static_cast<std::uint64_t>(a) + 3);
  }
  gates(C.bott_mid);
  gates(C.bott_out);
  for (const auto& D : C.dec)
    for (std::size_t l = 0; l < D.out.size(); ++l) {
      gates(D.upc[l]);
      gates(D.mid[l]);
      gates(D.out[l]);
    }
  return h;
}

template <typename T>
LossBreakdown backward(const BasicParams<T>& params, const GrayImage& img, const BinaryMask& y1, const BinaryMask& y2,
                       const LossConfig& cfg, BasicParams<T>& grads, double grad_scale) {
  if (grads.tensors.size() != params.tensors.size()) grads = zero_params<T>(params.config);
  return run(params, img, y1, y2, cfg, &grads, grad_scale);
}

template <typename T>
LossBreakdown evaluate_loss(const BasicParams<T>& params, const GrayImage& img, const BinaryMask& y1,
                            const BinaryMask& y2, const LossConfig& cfg) {
  return run<T>(params, img, y1, y2, cfg, nullptr, 1.0);
}

template struct BasicParams<float>;
template struct BasicParams<double>;
template BasicParams<float> zero_params(const NetConfig&);
template BasicParams<double> zero_params(const NetConfig&);
template BasicParams<float> init_params(const NetConfig&, std::uint64_t);
template BasicParams<double> init_params(const NetConfig&, std::uint64_t);
template RawOutput<float> forward_raw(const BasicParams<float>&, const GrayImage&);
template RawOutput<double> forward_raw(const BasicParams<double>&, const GrayImage&);
template std::uint64_t activation_pattern(const BasicParams<float>&, const GrayImage&);
template std::uint64_t activation_pattern(const BasicParams<double>&, const GrayImage&);
template LossBreakdown backward(const BasicParams<float>&, const GrayImage&, const BinaryMask&, const BinaryMask&,
                                const LossConfig&, BasicParams<float>&, double);
template LossBreakdown backward(const BasicParams<double>&, const GrayImage&, const BinaryMask&, const BinaryMask&,
                                const LossConfig&, BasicParams<double>&, double);
template LossBreakdown evaluate_loss(const BasicParams<float>&, const GrayImage&, const BinaryMask&, const BinaryMask&,
                                     const LossConfig&);
template LossBreakdown evaluate_loss(const BasicParams<double>&, const GrayImage&, const BinaryMask&,
                                     const BinaryMask&, const LossConfig&);

}  // namespace bubbleseg::mtnet
