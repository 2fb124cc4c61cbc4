#include "dmsconfig/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dmsconfig/error.hpp"

namespace dmsconfig::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double range, Rng& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Eigen::Index layer_in(const Layer& l) {
  return std::visit(Overloaded{[](const Dense& d) { return d.weight.cols(); },
                               [](const Act&) { return Eigen::Index{-1}; },
                               [](const BatchNorm& b) { return b.gamma.cols(); }},
                    l);
}

Eigen::Index layer_out(const Layer& l) {
  return std::visit(Overloaded{[](const Dense& d) { return d.weight.rows(); },
                               [](const Act&) { return Eigen::Index{-1}; },
                               [](const BatchNorm& b) { return b.gamma.cols(); }},
                    l);
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

Activation activation_from(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw FormatError("unknown activation '" + s + "'");
}

}  // namespace

Dense make_dense(Eigen::Index in, Eigen::Index out, Rng& rng, std::optional<double> range) {
  const double r = range.value_or(1.0 / std::sqrt(static_cast<double>(in)));
  Dense d;
  d.weight = uniform_matrix(out, in, r, rng);
  d.bias = uniform_matrix(1, out, r, rng);
  return d;
}

BatchNorm make_batch_norm(Eigen::Index dim, double momentum, double eps) {
  BatchNorm b;
  b.gamma = Matrix::Ones(1, dim);
  b.beta = Matrix::Zero(1, dim);
  b.running_mean = Matrix::Zero(1, dim);
  b.running_var = Matrix::Ones(1, dim);
  b.momentum = momentum;
  b.eps = eps;
  return b;
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  Eigen::Index width = -1;
  for (const auto& l : layers_) {
    const auto in = layer_in(l);
    if (in >= 0 && width >= 0 && in != width)
      throw DimensionMismatch("layer expects width " + std::to_string(in) + ", previous layer emits " +
                              std::to_string(width));
    if (const auto out = layer_out(l); out >= 0) width = out;
  }
}

Eigen::Index Network::input_dim() const {
  for (const auto& l : layers_)
    if (const auto in = layer_in(l); in >= 0) return in;
  return -1;
}

Eigen::Index Network::output_dim() const {
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    if (const auto out = layer_out(*it); out >= 0) return out;
  return -1;
}

Matrix Network::forward(const Matrix& x) { return run(x, &cache_, mode_ == Mode::train); }

Matrix Network::infer(const Matrix& x) const {
  return const_cast<Network*>(this)->run(x, nullptr, false);
}

Matrix Network::run(const Matrix& x, std::vector<Cache>* cache, bool update_stats) {
  if (const auto in = input_dim(); in >= 0 && x.cols() != in)
    throw DimensionMismatch("network input has " + std::to_string(x.cols()) + " columns, expected " +
                            std::to_string(in));
  if (cache) cache->assign(layers_.size(), Cache{});
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Cache* c = cache ? &(*cache)[i] : nullptr;
    if (c) c->input = h;
    std::visit(Overloaded{
                   [&](const Dense& d) { h = (h * d.weight.transpose()).rowwise() + d.bias.row(0); },
                   [&](const Act& a) {
                     if (a.fn == Activation::relu)
                       h = h.cwiseMax(0.0);
                     else if (a.fn == Activation::sigmoid)
                       h = (1.0 + (-h.array()).exp()).inverse().matrix();
                   },
                   [&](BatchNorm& b) {
                     const bool batch_stats = mode_ == Mode::train && h.rows() >= 2;
                     Eigen::RowVectorXd mean, var;
                     if (batch_stats) {
                       mean = h.colwise().mean();
                       var = (h.rowwise() - mean).array().square().colwise().mean();
                       if (update_stats) {
                         b.running_mean = (1.0 - b.momentum) * b.running_mean + b.momentum * Matrix(mean);
                         b.running_var = (1.0 - b.momentum) * b.running_var + b.momentum * Matrix(var);
                       }
                     } else {
                       mean = b.running_mean.row(0);
                       var = b.running_var.row(0);
                     }
                     const Eigen::RowVectorXd inv_std = (var.array() + b.eps).rsqrt();
                     Matrix xhat = ((h.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
                     h = ((xhat.array().rowwise() * b.gamma.row(0).array()).rowwise() + b.beta.row(0).array())
                             .matrix();
                     if (c) {
                       c->xhat = std::move(xhat);
                       c->inv_std = inv_std;
                       c->batch_stats = batch_stats;
                     }
                   }},
               layers_[i]);
    if (c) c->output = h;
  }
  return h;
}

GradientSet Network::backward(const Matrix& upstream) const {
  if (cache_.size() != layers_.size() || layers_.empty() || cache_.front().input.size() == 0)
    throw std::logic_error("backward() called without a recorded forward pass");
  const auto& last = cache_.back().output;
  if (upstream.rows() != last.rows() || upstream.cols() != last.cols())
    throw DimensionMismatch("upstream gradient shape does not match the network output");

  std::vector<std::vector<Matrix>> per_layer(layers_.size());
  Matrix g = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Cache& c = cache_[k];
    std::visit(Overloaded{
                   [&](const Dense& d) {
                     per_layer[k].push_back(g.transpose() * c.input);
                     per_layer[k].push_back(g.colwise().sum());
                     g = g * d.weight;
                   },
                   [&](const Act& a) {
                     if (a.fn == Activation::relu)
                       g = (c.input.array() > 0.0).select(g, 0.0);
                     else if (a.fn == Activation::sigmoid)
                       g = (g.array() * c.output.array() * (1.0 - c.output.array())).matrix();
                   },
                   [&](const BatchNorm& b) {
                     per_layer[k].push_back((g.array() * c.xhat.array()).colwise().sum().matrix());
                     per_layer[k].push_back(g.colwise().sum());
                     const Matrix dxhat = (g.array().rowwise() * b.gamma.row(0).array()).matrix();
                     if (c.batch_stats) {
                       const auto n = static_cast<double>(g.rows());
                       const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
                       const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * c.xhat.array()).colwise().sum();
                       Matrix centered = (n * dxhat.array()).matrix().rowwise() - sum_dxhat;
                       centered -= (c.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
                       g = ((centered.array().rowwise() * c.inv_std.array()) / n).matrix();
                     } else {
                       g = (dxhat.array().rowwise() * c.inv_std.array()).matrix();
                     }
                   }},
               layers_[k]);
  }
  GradientSet out;
  for (auto& grads : per_layer)
    for (auto& m : grads) out.params.push_back(std::move(m));
  out.input = std::move(g);
  return out;
}

std::vector<Matrix*> Network::parameters() {
  std::vector<Matrix*> out;
  for (auto& l : layers_) {
    if (auto* d = std::get_if<Dense>(&l)) {
      out.push_back(&d->weight);
      out.push_back(&d->bias);
    } else if (auto* b = std::get_if<BatchNorm>(&l)) {
      out.push_back(&b->gamma);
      out.push_back(&b->beta);
    }
  }
  return out;
}

std::vector<const Matrix*> Network::parameters() const {
  auto ps = const_cast<Network*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::vector<Matrix*> Network::buffers() {
  std::vector<Matrix*> out;
  for (auto& l : layers_)
    if (auto* b = std::get_if<BatchNorm>(&l)) {
      out.push_back(&b->running_mean);
      out.push_back(&b->running_var);
    }
  return out;
}

std::vector<const Matrix*> Network::buffers() const {
  auto bs = const_cast<Network*>(this)->buffers();
  return {bs.begin(), bs.end()};
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

bool Network::same_architecture(const Network& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].index() != other.layers_[i].index()) return false;
    if (layer_in(layers_[i]) != layer_in(other.layers_[i]) || layer_out(layers_[i]) != layer_out(other.layers_[i]))
      return false;
    if (const auto* a = std::get_if<Act>(&layers_[i]); a && a->fn != std::get<Act>(other.layers_[i]).fn)
      return false;
  }
  return true;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               double learning_rate, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw DimensionMismatch("adam: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw DimensionMismatch("adam: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols() ||
        state.m[i].rows() != grads[i].rows() || state.m[i].cols() != grads[i].cols())
      throw DimensionMismatch("adam: gradient shape mismatch at parameter " + std::to_string(i));

  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i].cwiseProduct(grads[i]);
    const auto m_hat = state.m[i].array() / c1;
    const auto v_hat = state.v[i].array() / c2;
    params[i]->array() -= learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
  }
}

void adam_step(Network& net, const GradientSet& grads, AdamState& state, double learning_rate,
               const AdamConfig& cfg) {
  const auto params = net.parameters();
  adam_step(params, grads.params, state, learning_rate, cfg);
}

void soft_update(const Network& online, Network& target, double tau) {
  if (!online.same_architecture(target)) throw DimensionMismatch("soft_update: architectures differ");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must be in [0,1]");
  auto blend = [tau](const std::vector<const Matrix*>& from, const std::vector<Matrix*>& to) {
    for (std::size_t i = 0; i < from.size(); ++i) {
      if (tau == 1.0)
        *to[i] = *from[i];
      else if (tau > 0.0)
        *to[i] = tau * *from[i] + (1.0 - tau) * *to[i];
    }
  };
  blend(online.parameters(), target.parameters());
  blend(online.buffers(), target.buffers());
}

double finite_diff_check(const Network& net, const Matrix& inputs, const Matrix& targets, double epsilon) {
  if (net.parameter_count() >= 10000) throw std::invalid_argument("finite_diff_check: network too large");
  Network work = net;
  const auto rows = static_cast<double>(inputs.rows());
  auto loss = [&](const Network& n) { return 0.5 * (n.infer(inputs) - targets).squaredNorm() / rows; };

  const Matrix out = work.forward(inputs);
  if (out.rows() != targets.rows() || out.cols() != targets.cols())
    throw DimensionMismatch("finite_diff_check: target shape mismatch");
  const auto grads = work.backward((out - targets) / rows);

  double worst = 0.0;
  auto params = work.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& m = *params[p];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + epsilon;
      const double up = loss(work);
      m.data()[i] = saved - epsilon;
      const double down = loss(work);
      m.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = grads.params[p].data()[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw FormatError("matrix data size mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data.at(k++).get<double>();
  return m;
}

nlohmann::json to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    std::visit(Overloaded{[&](const Dense& d) {
                            layers.push_back({{"type", "dense"},
                                              {"weight", matrix_to_json(d.weight)},
                                              {"bias", matrix_to_json(d.bias)}});
                          },
                          [&](const Act& a) {
                            layers.push_back({{"type", "activation"}, {"fn", activation_name(a.fn)}});
                          },
                          [&](const BatchNorm& b) {
                            layers.push_back({{"type", "batch_norm"},
                                              {"gamma", matrix_to_json(b.gamma)},
                                              {"beta", matrix_to_json(b.beta)},
                                              {"running_mean", matrix_to_json(b.running_mean)},
                                              {"running_var", matrix_to_json(b.running_var)},
                                              {"momentum", b.momentum},
                                              {"eps", b.eps}});
                          }},
               l);
  }
  return {{"mode", net.mode() == Mode::train ? "train" : "eval"}, {"layers", layers}};
}

Network network_from_json(const nlohmann::json& j) {
  std::vector<Layer> layers;
  for (const auto& l : j.at("layers")) {
    const auto type = l.at("type").get<std::string>();
    if (type == "dense") {
      layers.push_back(Dense{matrix_from_json(l.at("weight")), matrix_from_json(l.at("bias"))});
    } else if (type == "activation") {
      layers.push_back(Act{activation_from(l.at("fn").get<std::string>())});
    } else if (type == "batch_norm") {
      layers.push_back(BatchNorm{matrix_from_json(l.at("gamma")), matrix_from_json(l.at("beta")),
                                 matrix_from_json(l.at("running_mean")), matrix_from_json(l.at("running_var")),
                                 l.at("momentum").get<double>(), l.at("eps").get<double>()});
    } else {
      throw FormatError("unknown layer type '" + type + "'");
    }
  }
  Network net(std::move(layers));
  net.set_mode(j.at("mode").get<std::string>() == "train" ? Mode::train : Mode::eval);
  return net;
}

nlohmann::json to_json(const AdamState& s) {
  nlohmann::json m = nlohmann::json::array(), v = nlohmann::json::array();
  for (const auto& x : s.m) m.push_back(matrix_to_json(x));
  for (const auto& x : s.v) v.push_back(matrix_to_json(x));
  return {{"step", s.step}, {"m", m}, {"v", v}};
}

AdamState adam_from_json(const nlohmann::json& j) {
  AdamState s;
  s.step = j.at("step").get<long long>();
  for (const auto& x : j.at("m")) s.m.push_back(matrix_from_json(x));
  for (const auto& x : j.at("v")) s.v.push_back(matrix_from_json(x));
  return s;
}

}  // namespace dmsconfig::nn
