#pragma once

// Dense feed-forward network with hand-written backpropagation.
//
// Layers map row-batched inputs: a batch is a (samples x features) matrix,
// each layer computes Z = H W^T + 1 b^T and applies its activation. Hidden
// layers use the rectifier, the final layer is identity with one output.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rankmbo/error.hpp"
#include "rankmbo/rng.hpp"

namespace rankmbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { relu, identity };

inline const char* activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "identity";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw InvalidInput("unknown activation '" + name + "'");
}

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::identity;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

// Parameters and their gradients share this layout; the activation tag of a
// gradient entry mirrors the layer it belongs to.
using ParamSet = std::vector<DenseLayer>;

// Intermediate values kept by a batched forward pass for backpropagation.
struct ForwardCache {
  std::vector<Matrix> pre;   // Z per layer
  std::vector<Matrix> post;  // input followed by H per layer
};

class DenseNet {
 public:
  DenseNet() = default;

  explicit DenseNet(ParamSet layers) : layers_(std::move(layers)) { validate(); }

  // Rectifier MLP d -> hidden... -> 1 with uniform fan-in scaled weights.
  static DenseNet initialized(int input_dim, const std::vector<int>& hidden,
                              std::uint64_t seed) {
    require(input_dim >= 1, "input dimension must be positive");
    Rng rng(seed);
    ParamSet layers;
    int fan_in = input_dim;
    auto make_layer = [&](int out, Activation act) {
      DenseLayer layer;
      layer.weight.resize(out, fan_in);
      layer.bias.resize(out);
      const double w_bound = std::sqrt(6.0 / fan_in);
      const double b_bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
          layer.weight(r, c) = rng.uniform(-w_bound, w_bound);
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
        layer.bias(r) = rng.uniform(-b_bound, b_bound);
      layer.activation = act;
      layers.push_back(std::move(layer));
      fan_in = out;
    };
    for (int width : hidden) {
      require(width >= 1, "hidden width must be positive");
      make_layer(width, Activation::relu);
    }
    make_layer(1, Activation::identity);
    return DenseNet(std::move(layers));
  }

  // Single affine layer f(x) = w.x + b.
  static DenseNet affine(const Vector& weights, double bias) {
    DenseLayer layer;
    layer.weight = weights.transpose();
    layer.bias = Vector::Constant(1, bias);
    layer.activation = Activation::identity;
    return DenseNet(ParamSet{std::move(layer)});
  }

  Eigen::Index input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  const ParamSet& layers() const { return layers_; }

  // Direct parameter access for optimizers; call validate() after edits
  // that could change shapes.
  ParamSet& parameters() { return layers_; }

  std::size_t parameter_count() const {
    std::size_t count = 0;
    for (const auto& l : layers_) count += l.weight.size() + l.bias.size();
    return count;
  }

  void validate() const {
    require(!layers_.empty(), "network needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      require(l.weight.rows() == l.bias.size(), "bias length must equal layer output width");
      require(l.weight.cols() >= 1 && l.weight.rows() >= 1, "layer dimensions must be positive");
      if (i + 1 < layers_.size())
        require(l.out_dim() == layers_[i + 1].in_dim(), "consecutive layer dimensions must chain");
    }
    require(layers_.back().out_dim() == 1, "network output dimension must be 1");
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  double forward(const Eigen::Ref<const Vector>& x) const {
    check_input(x.size());
    Matrix row = x.transpose();
    return forward_batch(row)(0);
  }

  // One prediction per design row.
  Vector forward_batch(const Eigen::Ref<const Matrix>& designs,
                       ForwardCache* cache = nullptr) const {
    check_input(designs.cols());
    if (cache) {
      cache->pre.clear();
      cache->post.clear();
      cache->post.emplace_back(designs);
    }
    Matrix h = designs;
    for (const auto& layer : layers_) {
      Matrix z = h * layer.weight.transpose();
      z.rowwise() += layer.bias.transpose();
      if (layer.activation == Activation::relu) {
        h = z.cwiseMax(0.0);
      } else {
        h = z;
      }
      if (cache) {
        cache->pre.push_back(std::move(z));
        cache->post.push_back(h);
      }
    }
    return h.col(0);
  }

  // Gradient of sum_i output_grads[i] * f(designs_i) with respect to every
  // parameter.
  ParamSet grad_params(const Eigen::Ref<const Matrix>& designs,
                       const Eigen::Ref<const Vector>& output_grads) const {
    require(designs.rows() >= 1, "grad_params needs a nonempty batch");
    require(output_grads.size() == designs.rows(),
            "output gradient length must equal batch size");
    ForwardCache cache;
    forward_batch(designs, &cache);
    return backward(cache, output_grads);
  }

  ParamSet backward(const ForwardCache& cache, const Eigen::Ref<const Vector>& output_grads) const {
    require(cache.pre.size() == layers_.size(), "forward cache does not match network");
    require(output_grads.size() == cache.post.front().rows(),
            "output gradient length must equal batch size");
    ParamSet grads(layers_.size());
    Matrix delta = output_grads;
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& layer = layers_[li];
      if (layer.activation == Activation::relu) {
        // Subgradient at 0 is 0.
        delta = delta.cwiseProduct((cache.pre[li].array() > 0.0).cast<double>().matrix());
      }
      auto& g = grads[li];
      g.weight = delta.transpose() * cache.post[li];
      g.bias = delta.colwise().sum().transpose();
      g.activation = layer.activation;
      if (li > 0) delta = delta * layer.weight;
    }
    return grads;
  }

  Vector grad_input(const Eigen::Ref<const Vector>& x) const {
    check_input(x.size());
    ForwardCache cache;
    Matrix row = x.transpose();
    forward_batch(row, &cache);
    Matrix delta = Matrix::Ones(1, 1);
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& layer = layers_[li];
      if (layer.activation == Activation::relu)
        delta = delta.cwiseProduct((cache.pre[li].array() > 0.0).cast<double>().matrix());
      delta = delta * layer.weight;
    }
    return delta.row(0).transpose();
  }

  // Text checkpoint:
  //   rankmbo-densenet 1
  //   layers <L>
  //   layer <in> <out> <activation>      (L times, each followed by)
  //   <out rows of in weights>, then one row of out biases
  void save(std::ostream& os) const {
    os << "rankmbo-densenet 1\n";
    os << "layers " << layers_.size() << "\n";
    os << std::setprecision(17);
    for (const auto& l : layers_) {
      os << "layer " << l.in_dim() << " " << l.out_dim() << " " << activation_name(l.activation)
         << "\n";
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) os << (c ? " " : "") << l.weight(r, c);
        os << "\n";
      }
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) os << (r ? " " : "") << l.bias(r);
      os << "\n";
    }
  }

  static DenseNet load(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    require(is && magic == "rankmbo-densenet", "not a rankmbo-densenet checkpoint");
    require(version == 1, "unsupported checkpoint version " + std::to_string(version));
    std::string token;
    std::size_t count = 0;
    is >> token >> count;
    require(is && token == "layers" && count >= 1, "malformed checkpoint layer count");
    ParamSet layers;
    for (std::size_t i = 0; i < count; ++i) {
      Eigen::Index in = 0, out = 0;
      std::string act;
      is >> token >> in >> out >> act;
      require(is && token == "layer" && in >= 1 && out >= 1, "malformed checkpoint layer header");
      DenseLayer l;
      l.weight.resize(out, in);
      l.bias.resize(out);
      l.activation = parse_activation(act);
      for (Eigen::Index r = 0; r < out; ++r)
        for (Eigen::Index c = 0; c < in; ++c) is >> l.weight(r, c);
      for (Eigen::Index r = 0; r < out; ++r) is >> l.bias(r);
      require(static_cast<bool>(is), "truncated checkpoint");
      layers.push_back(std::move(l));
    }
    return DenseNet(std::move(layers));
  }

  void save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    save(os);
    if (!os) throw IoError("failed writing checkpoint '" + path + "'");
  }

  static DenseNet load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open checkpoint '" + path + "'");
    return load(is);
  }

 private:
  void check_input(Eigen::Index dim) const {
    require(!layers_.empty(), "network is empty");
    if (dim != input_dim())
      throw InvalidInput("input dimension " + std::to_string(dim) + " does not match network input " +
                         std::to_string(input_dim()));
  }

  ParamSet layers_;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled; applied to weight matrices only
};

// Adam moment accumulators for one parameter set.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {
    require(config_.learning_rate > 0.0, "learning rate must be positive");
    require(config_.weight_decay >= 0.0, "weight decay must be non-negative");
  }

  const AdamConfig& config() const { return config_; }
  long steps() const { return steps_; }

  // Minimization step: params -= lr * m_hat / (sqrt(v_hat) + eps), preceded
  // by params *= (1 - lr * weight_decay) on weight matrices.
  void step(ParamSet& params, const ParamSet& grads) {
    require(params.size() == grads.size(), "gradient layer count does not match parameters");
    std::vector<Eigen::Index> sizes;
    for (std::size_t i = 0; i < params.size(); ++i) {
      require(params[i].weight.rows() == grads[i].weight.rows() &&
                  params[i].weight.cols() == grads[i].weight.cols() &&
                  params[i].bias.size() == grads[i].bias.size(),
              "gradient shape does not match parameters");
      sizes.push_back(params[i].weight.size());
      sizes.push_back(params[i].bias.size());
    }
    for (const auto& g : grads)
      if (!g.weight.allFinite() || !g.bias.allFinite())
        throw TrainingAborted("non-finite gradient passed to Adam at step " +
                              std::to_string(steps_ + 1));
    prepare(sizes);
    ++steps_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      update(params[i].weight.data(), grads[i].weight.data(), 2 * i, true);
      update(params[i].bias.data(), grads[i].bias.data(), 2 * i + 1, false);
    }
  }

  void step(Vector& params, const Vector& grads) {
    require(params.size() == grads.size(), "gradient length does not match parameters");
    if (!grads.allFinite())
      throw TrainingAborted("non-finite gradient passed to Adam at step " +
                            std::to_string(steps_ + 1));
    prepare({params.size()});
    ++steps_;
    update(params.data(), grads.data(), 0, true);
  }

 private:
  void prepare(const std::vector<Eigen::Index>& sizes) {
    if (first_.empty()) {
      for (auto n : sizes) {
        first_.push_back(Vector::Zero(n));
        second_.push_back(Vector::Zero(n));
      }
      return;
    }
    require(first_.size() == sizes.size(), "parameter layout changed between Adam steps");
    for (std::size_t i = 0; i < sizes.size(); ++i)
      require(first_[i].size() == sizes[i], "parameter layout changed between Adam steps");
  }

  void update(double* p, const double* g, std::size_t block, bool decay) {
    Vector& m = first_[block];
    Vector& v = second_[block];
    const double lr = config_.learning_rate;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    const double shrink = decay ? 1.0 - lr * config_.weight_decay : 1.0;
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      m(k) = b1 * m(k) + (1.0 - b1) * g[k];
      v(k) = b2 * v(k) + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m(k) / c1;
      const double v_hat = v(k) / c2;
      p[k] = p[k] * shrink - lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }

  AdamConfig config_;
  long steps_ = 0;
  std::vector<Vector> first_;
  std::vector<Vector> second_;
};

// Elementwise a += scale * b over matching parameter sets.
inline void accumulate(ParamSet& into, const ParamSet& from, double scale) {
  require(into.size() == from.size(), "parameter sets differ in layer count");
  for (std::size_t i = 0; i < into.size(); ++i) {
    into[i].weight += scale * from[i].weight;
    into[i].bias += scale * from[i].bias;
  }
}

inline ParamSet zeros_like(const ParamSet& params) {
  ParamSet out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    out[i].weight = Matrix::Zero(params[i].weight.rows(), params[i].weight.cols());
    out[i].bias = Vector::Zero(params[i].bias.size());
    out[i].activation = params[i].activation;
  }
  return out;
}

}  // namespace rankmbo
