#pragma once

// Small feed-forward networks with hand-written reverse-mode gradients.
// Batches are row-major: one sample per row.

#include <Eigen/Dense>
#include <json.hpp>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dmsconfig/random.hpp"

namespace dmsconfig::nn {

using Matrix = Eigen::MatrixXd;

enum class Activation { identity, relu, sigmoid };
enum class Mode { train, eval };

struct Dense {
  Matrix weight;  // out x in
  Matrix bias;    // 1 x out
};

struct Act {
  Activation fn = Activation::identity;
};

struct BatchNorm {
  Matrix gamma;  // 1 x dim
  Matrix beta;
  Matrix running_mean;
  Matrix running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

using Layer = std::variant<Dense, Act, BatchNorm>;

/// Weights and biases uniform in +-range; range defaults to 1/sqrt(in).
Dense make_dense(Eigen::Index in, Eigen::Index out, Rng& rng, std::optional<double> range = {});
BatchNorm make_batch_norm(Eigen::Index dim, double momentum = 0.1, double eps = 1e-5);

/// Gradients aligned with Network::parameters(), plus the gradient w.r.t. the input batch.
struct GradientSet {
  std::vector<Matrix> params;
  Matrix input;
};

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Layer> layers);

  /// Evaluates and records intermediates for backward(). In train mode,
  /// batch-norm layers use batch statistics (batch >= 2) and update their
  /// running statistics; single-row batches always use running statistics.
  Matrix forward(const Matrix& x);

  /// Same arithmetic as forward() but records nothing and never touches running statistics.
  Matrix infer(const Matrix& x) const;

  /// Gradients of sum(output .* upstream) for the batch of the last forward().
  GradientSet backward(const Matrix& upstream) const;

  void set_mode(Mode m) { mode_ = m; }
  Mode mode() const { return mode_; }

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  /// Running statistics of batch-norm layers (not trained by gradients).
  std::vector<Matrix*> buffers();
  std::vector<const Matrix*> buffers() const;
  std::size_t parameter_count() const;

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  bool same_architecture(const Network& other) const;

 private:
  struct Cache {
    Matrix input;
    Matrix output;
    Matrix xhat;
    Eigen::RowVectorXd inv_std;
    bool batch_stats = false;
  };

  Matrix run(const Matrix& x, std::vector<Cache>* cache, bool update_stats);

  std::vector<Layer> layers_;
  Mode mode_ = Mode::train;
  std::vector<Cache> cache_;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long long step = 0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One in-place Adam update; the state is lazily shaped on first use.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               double learning_rate, const AdamConfig& cfg = {});
void adam_step(Network& net, const GradientSet& grads, AdamState& state, double learning_rate,
               const AdamConfig& cfg = {});

/// target <- tau * online + (1 - tau) * target, over parameters and running statistics.
void soft_update(const Network& online, Network& target, double tau);

/// Max relative error between backward() and central differences of
/// 0.5 * mean-over-rows squared error against `targets`.
double finite_diff_check(const Network& net, const Matrix& inputs, const Matrix& targets, double epsilon = 1e-5);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AdamState& s);
AdamState adam_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace dmsconfig::nn
