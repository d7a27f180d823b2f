#ifndef HEXWAR_NNET_HPP
#define HEXWAR_NNET_HPP

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "hexwar/error.hpp"
#include "hexwar/rng.hpp"

namespace hexwar {

/// Fully connected network: ReLU hidden layers, linear output.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mlp() = default;

  /// All parameters zero.
  explicit Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw ShapeError("an MLP needs at least input and output sizes");
    for (int s : sizes_) {
      if (s < 1) throw ShapeError("layer sizes must be >= 1");
    }
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.push_back(Matrix::Zero(sizes_[l + 1], sizes_[l]));
      biases_.push_back(Vector::Zero(sizes_[l + 1]));
    }
  }

  /// Xavier-uniform weights, zero biases.
  static Mlp xavier(std::vector<int> layer_sizes, std::uint64_t seed) {
    Mlp m(std::move(layer_sizes));
    Rng rng(seed);
    for (auto& w : m.weights_) {
      const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          w(i, j) = static_cast<Scalar>((2.0 * uniform_unit(rng) - 1.0) * a);
        }
      }
    }
    return m;
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int layers() const { return static_cast<int>(weights_.size()); }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  Matrix& weight(int l) { return weights_[l]; }
  const Matrix& weight(int l) const { return weights_[l]; }
  Vector& bias(int l) { return biases_[l]; }
  const Vector& bias(int l) const { return biases_[l]; }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (int l = 0; l < layers(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  bool all_finite() const {
    for (int l = 0; l < layers(); ++l) {
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    }
    return true;
  }

  bool operator==(const Mlp& o) const {
    if (sizes_ != o.sizes_) return false;
    for (int l = 0; l < layers(); ++l) {
      if (weights_[l] != o.weights_[l] || biases_[l] != o.biases_[l]) return false;
    }
    return true;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Matrix> weights_;  ///< out x in
  std::vector<Vector> biases_;
};

using MlpD = Mlp<double>;

/// Batch forward pass; columns of `inputs` are samples.
template <typename Scalar>
typename Mlp<Scalar>::Matrix forward_batch(const Mlp<Scalar>& m,
                                           const typename Mlp<Scalar>::Matrix& inputs) {
  if (inputs.rows() != m.input_size()) {
    throw ShapeError("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                     std::to_string(m.input_size()));
  }
  typename Mlp<Scalar>::Matrix a = inputs;
  for (int l = 0; l < m.layers(); ++l) {
    typename Mlp<Scalar>::Matrix z = m.weight(l) * a;
    z.colwise() += m.bias(l);
    if (l + 1 < m.layers()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
  }
  return a;
}

template <typename Scalar, typename Derived>
typename Mlp<Scalar>::Vector forward(const Mlp<Scalar>& m, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != m.input_size()) {
    throw ShapeError("input has " + std::to_string(x.size()) + " values, network expects " +
                     std::to_string(m.input_size()));
  }
  typename Mlp<Scalar>::Vector a = x.template cast<Scalar>();
  for (int l = 0; l < m.layers(); ++l) {
    typename Mlp<Scalar>::Vector z = m.weight(l) * a + m.bias(l);
    if (l + 1 < m.layers()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
  }
  return a;
}

/// Regression batch. `mask`, when non-empty, weights each output's error
/// (used to regress only the taken action's Q-value).
template <typename Scalar>
struct Batch {
  typename Mlp<Scalar>::Matrix inputs;   ///< in x N
  typename Mlp<Scalar>::Matrix targets;  ///< out x N
  typename Mlp<Scalar>::Matrix mask;     ///< out x N or empty

  Eigen::Index size() const { return inputs.cols(); }
};

template <typename Scalar>
struct Gradients {
  std::vector<typename Mlp<Scalar>::Matrix> weights;
  std::vector<typename Mlp<Scalar>::Vector> biases;

  static Gradients zeros_like(const Mlp<Scalar>& m) {
    Gradients g;
    for (int l = 0; l < m.layers(); ++l) {
      g.weights.push_back(Mlp<Scalar>::Matrix::Zero(m.weight(l).rows(), m.weight(l).cols()));
      g.biases.push_back(Mlp<Scalar>::Vector::Zero(m.bias(l).size()));
    }
    return g;
  }

  Scalar squared_norm() const {
    Scalar n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      n += weights[l].squaredNorm() + biases[l].squaredNorm();
    }
    return n;
  }
};

/// Mean squared error (1/N) sum (mask * (out - target))^2; fills `grads` by
/// backpropagation when non-null.
template <typename Scalar>
Scalar mse_loss(const Mlp<Scalar>& m, const Batch<Scalar>& batch,
                std::type_identity_t<Gradients<Scalar>>* grads = nullptr) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  const Eigen::Index n = batch.size();
  if (n == 0) throw ShapeError("empty batch");
  if (batch.inputs.rows() != m.input_size() || batch.targets.rows() != m.output_size() ||
      batch.targets.cols() != n ||
      (batch.mask.size() != 0 && (batch.mask.rows() != m.output_size() || batch.mask.cols() != n))) {
    throw ShapeError("batch shapes do not match the network");
  }

  std::vector<Matrix> pre(m.layers());
  std::vector<Matrix> act(m.layers() + 1);
  act[0] = batch.inputs;
  for (int l = 0; l < m.layers(); ++l) {
    pre[l] = m.weight(l) * act[l];
    pre[l].colwise() += m.bias(l);
    act[l + 1] = l + 1 < m.layers() ? Matrix(pre[l].cwiseMax(Scalar(0))) : pre[l];
  }

  Matrix diff = act.back() - batch.targets;
  if (batch.mask.size() != 0) diff = diff.cwiseProduct(batch.mask);
  const Scalar loss = diff.squaredNorm() / static_cast<Scalar>(n);
  if (grads == nullptr) return loss;

  *grads = Gradients<Scalar>::zeros_like(m);
  Matrix delta = diff * (Scalar(2) / static_cast<Scalar>(n));
  if (batch.mask.size() != 0) delta = delta.cwiseProduct(batch.mask);
  for (int l = m.layers() - 1; l >= 0; --l) {
    if (l + 1 < m.layers()) {
      delta = delta.cwiseProduct((pre[l].array() > Scalar(0)).matrix().template cast<Scalar>());
    }
    grads->weights[l].noalias() = delta * act[l].transpose();
    grads->biases[l] = delta.rowwise().sum();
    if (l > 0) delta = m.weight(l).transpose() * delta;
  }
  return loss;
}

enum class Optimizer { momentum, adam };

struct SgdConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;  ///< also Adam's beta1
  int batch_size = 32;
  std::uint64_t seed = 0;
  double max_grad_norm = 0.0;  ///< global-norm clipping; 0 disables
  Optimizer optimizer = Optimizer::momentum;
  double beta2 = 0.999;  ///< Adam only
  double adam_epsilon = 1e-8;
  double final_lr_fraction = 1.0;  ///< fit() cosine-anneals to lr * this by the last epoch
};

/// Optimizer buffers matching a network's shape.
template <typename Scalar>
struct SgdState {
  Gradients<Scalar> velocity;
  Gradients<Scalar> second_moment;  ///< Adam only
  long steps = 0;

  explicit SgdState(const Mlp<Scalar>& m)
      : velocity(Gradients<Scalar>::zeros_like(m)), second_moment(Gradients<Scalar>::zeros_like(m)) {}
};

/// One optimizer step on MSE (classical momentum by default); returns the
/// pre-step loss.
template <typename Scalar>
Scalar train_step(Mlp<Scalar>& m, SgdState<Scalar>& state, const Batch<Scalar>& batch,
                  const SgdConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw ConfigError("learning rate must be >= 0 and momentum in [0, 1)");
  }
  Gradients<Scalar> g;
  const Scalar loss = mse_loss(m, batch, &g);
  if (!std::isfinite(static_cast<double>(loss))) throw DivergenceError("non-finite training loss");
  Scalar scale = Scalar(1);
  if (cfg.max_grad_norm > 0.0) {
    const double norm = std::sqrt(static_cast<double>(g.squared_norm()));
    if (norm > cfg.max_grad_norm) scale = static_cast<Scalar>(cfg.max_grad_norm / norm);
  }
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto mu = static_cast<Scalar>(cfg.momentum);
  auto& v = state.velocity;
  ++state.steps;
  if (cfg.optimizer == Optimizer::adam) {
    const auto b2 = static_cast<Scalar>(cfg.beta2);
    const auto eps = static_cast<Scalar>(cfg.adam_epsilon);
    const auto c1 = static_cast<Scalar>(1.0 - std::pow(cfg.momentum, static_cast<double>(state.steps)));
    const auto c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.steps)));
    auto& s2 = state.second_moment;
    auto update = [&](auto& param, auto& m1, auto& m2, const auto& grad) {
      m1 = mu * m1 + (Scalar(1) - mu) * scale * grad;
      m2 = b2 * m2 + (Scalar(1) - b2) * (scale * grad).cwiseAbs2();
      param.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
    };
    for (int l = 0; l < m.layers(); ++l) {
      update(m.weight(l), v.weights[l], s2.weights[l], g.weights[l]);
      update(m.bias(l), v.biases[l], s2.biases[l], g.biases[l]);
    }
  } else {
    for (int l = 0; l < m.layers(); ++l) {
      v.weights[l] = mu * v.weights[l] - (lr * scale) * g.weights[l];
      v.biases[l] = mu * v.biases[l] - (lr * scale) * g.biases[l];
      m.weight(l) += v.weights[l];
      m.bias(l) += v.biases[l];
    }
  }
  if (!m.all_finite()) throw DivergenceError("non-finite parameter after update");
  return loss;
}

/// Shuffled minibatch epochs over (inputs, targets); returns mean loss per epoch.
template <typename Scalar>
std::vector<Scalar> fit(Mlp<Scalar>& m, const typename Mlp<Scalar>::Matrix& inputs,
                        const typename Mlp<Scalar>::Matrix& targets, const SgdConfig& cfg,
                        int epochs) {
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  const Eigen::Index n = inputs.cols();
  if (n == 0) throw ShapeError("empty dataset");
  SgdState<Scalar> state(m);
  Rng rng(cfg.seed);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<Scalar> history;
  SgdConfig epoch_cfg = cfg;
  for (int e = 0; e < epochs; ++e) {
    if (epochs > 1) {
      const double t = static_cast<double>(e) / (epochs - 1);
      const double f = cfg.final_lr_fraction + (1.0 - cfg.final_lr_fraction) * 0.5 * (1.0 + std::cos(M_PI * t));
      epoch_cfg.learning_rate = cfg.learning_rate * f;
    }
    for (Eigen::Index i = n - 1; i > 0; --i) {
      std::swap(order[i], order[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
    }
    Scalar total = 0;
    Eigen::Index batches = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Batch<Scalar> b;
      b.inputs.resize(inputs.rows(), len);
      b.targets.resize(targets.rows(), len);
      for (Eigen::Index k = 0; k < len; ++k) {
        b.inputs.col(k) = inputs.col(order[start + k]);
        b.targets.col(k) = targets.col(order[start + k]);
      }
      total += train_step(m, state, b, epoch_cfg);
      ++batches;
    }
    history.push_back(total / static_cast<Scalar>(batches));
  }
  return history;
}

template <typename Scalar>
using GradientFn = std::function<Gradients<Scalar>(const Mlp<Scalar>&, const Batch<Scalar>&)>;

template <typename Scalar>
Gradients<Scalar> backprop_gradients(const Mlp<Scalar>& m, const Batch<Scalar>& b) {
  Gradients<Scalar> g;
  mse_loss(m, b, &g);
  return g;
}

/// Max relative error between `analytic` gradients and central finite
/// differences of the MSE over every parameter, for one (x, y) sample.
template <typename Scalar>
double gradient_check(const Mlp<Scalar>& m, const typename Mlp<Scalar>::Vector& x,
                      const typename Mlp<Scalar>::Vector& y, double epsilon = 1e-5,
                      const GradientFn<Scalar>& analytic = backprop_gradients<Scalar>) {
  Batch<Scalar> b;
  b.inputs = x;
  b.targets = y;
  const Gradients<Scalar> g = analytic(m, b);
  Mlp<Scalar> probe = m;
  double worst = 0.0;
  auto compare = [&](Scalar& param, Scalar grad) {
    const Scalar saved = param;
    param = saved + static_cast<Scalar>(epsilon);
    const double up = static_cast<double>(mse_loss(probe, b, nullptr));
    param = saved - static_cast<Scalar>(epsilon);
    const double down = static_cast<double>(mse_loss(probe, b, nullptr));
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = static_cast<double>(grad);
    const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-6);
    worst = std::max(worst, std::abs(a - numeric) / denom);
  };
  for (int l = 0; l < probe.layers(); ++l) {
    for (Eigen::Index j = 0; j < probe.weight(l).cols(); ++j) {
      for (Eigen::Index i = 0; i < probe.weight(l).rows(); ++i) {
        compare(probe.weight(l)(i, j), g.weights[l](i, j));
      }
    }
    for (Eigen::Index i = 0; i < probe.bias(l).size(); ++i) compare(probe.bias(l)(i), g.biases[l](i));
  }
  return worst;
}

// Weight file: "HXNN", u32 version, u32 layer-size count, u32 sizes, then per
// layer the weights row-major and the biases, all little-endian float64.
inline constexpr std::uint32_t kMlpFormatVersion = 1;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated weight file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated weight file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

template <typename Scalar>
void write_mlp(std::ostream& out, const Mlp<Scalar>& m) {
  out.write("HXNN", 4);
  detail::put_u32(out, kMlpFormatVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(m.layer_sizes().size()));
  for (int s : m.layer_sizes()) detail::put_u32(out, static_cast<std::uint32_t>(s));
  for (int l = 0; l < m.layers(); ++l) {
    for (Eigen::Index i = 0; i < m.weight(l).rows(); ++i) {
      for (Eigen::Index j = 0; j < m.weight(l).cols(); ++j) {
        detail::put_f64(out, static_cast<double>(m.weight(l)(i, j)));
      }
    }
    for (Eigen::Index i = 0; i < m.bias(l).size(); ++i) {
      detail::put_f64(out, static_cast<double>(m.bias(l)(i)));
    }
  }
}

template <typename Scalar>
Mlp<Scalar> read_mlp(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "HXNN") {
    throw FormatError("not a weight file (bad magic)");
  }
  const std::uint32_t version = detail::get_u32(in);
  if (version != kMlpFormatVersion) {
    throw FormatError("weight file version " + std::to_string(version) + " is not supported");
  }
  const std::uint32_t count = detail::get_u32(in);
  if (count < 2 || count > 64) throw FormatError("implausible layer count in weight file");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t s = detail::get_u32(in);
    if (s < 1 || s > (1u << 24)) throw FormatError("implausible layer size in weight file");
    sizes.push_back(static_cast<int>(s));
  }
  Mlp<Scalar> m(sizes);
  for (int l = 0; l < m.layers(); ++l) {
    for (Eigen::Index i = 0; i < m.weight(l).rows(); ++i) {
      for (Eigen::Index j = 0; j < m.weight(l).cols(); ++j) {
        m.weight(l)(i, j) = static_cast<Scalar>(detail::get_f64(in));
      }
    }
    for (Eigen::Index i = 0; i < m.bias(l).size(); ++i) {
      m.bias(l)(i) = static_cast<Scalar>(detail::get_f64(in));
    }
  }
  return m;
}

template <typename Scalar>
void save_weights(const Mlp<Scalar>& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_mlp(out, m);
  if (!out) throw FormatError("failed writing " + path.string());
}

template <typename Scalar = double>
Mlp<Scalar> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  Mlp<Scalar> m = read_mlp<Scalar>(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after weights in " + path.string());
  }
  return m;
}

}  // namespace hexwar

#endif  // HEXWAR_NNET_HPP
