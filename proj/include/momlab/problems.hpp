#pragma once

#include "momlab/common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace momlab {

struct EvalResult {
  double loss = 0.0;
  VectorXd grad;
};

/// An objective f with its gradient. Implementations are immutable after
/// construction, so evaluation is safe from concurrent workers.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual Eigen::Index dimension() const = 0;

  /// Full objective and gradient.
  virtual EvalResult eval_grad(const VectorXd& w) const = 0;

  /// Objective and gradient over a subset of samples. Problems without data
  /// ignore the batch and return the full objective.
  virtual EvalResult eval_grad(const VectorXd& w, std::span<const std::size_t> batch) const {
    (void)batch;
    return eval_grad(w);
  }

  double evaluate(const VectorXd& w) const { return eval_grad(w).loss; }

  /// Number of training samples; zero for data-free problems.
  virtual std::size_t n_samples() const { return 0; }

  virtual std::optional<VectorXd> optimum_hint() const { return std::nullopt; }

  /// Seeded starting point.
  virtual VectorXd initial_point(std::uint64_t seed) const = 0;

  /// Held-out classification accuracy at w, when the problem has a held-out split.
  virtual std::optional<double> heldout_accuracy(const VectorXd& w) const {
    (void)w;
    return std::nullopt;
  }

 protected:
  void check_dimension(const VectorXd& w) const;
};

// ---------------------------------------------------------------------------
// Quadratics f(w) = w^T A w

class QuadraticProblem final : public Problem {
 public:
  /// A is symmetrized on construction; eigenvalues are sorted ascending.
  QuadraticProblem(MatrixXd matrix, VectorXd eigenvalues, std::uint64_t seed);

  Eigen::Index dimension() const override { return matrix_.rows(); }
  EvalResult eval_grad(const VectorXd& w) const override;
  std::optional<VectorXd> optimum_hint() const override { return VectorXd::Zero(dimension()); }

  /// Standard Gaussian point.
  VectorXd initial_point(std::uint64_t seed) const override;

  const MatrixXd& matrix() const { return matrix_; }
  const VectorXd& eigenvalues() const { return eigenvalues_; }
  double lambda_min() const { return eigenvalues_(0); }
  double lambda_max() const { return eigenvalues_(eigenvalues_.size() - 1); }
  double condition_number() const { return lambda_max() / lambda_min(); }
  std::uint64_t seed() const { return seed_; }

 private:
  MatrixXd matrix_;
  VectorXd eigenvalues_;
  std::uint64_t seed_;
};

/// A = Q diag(lambda) Q^T with Q the orthogonal factor of a seeded Gaussian
/// matrix and lambda log-spaced on [1, condition_number].
QuadraticProblem make_quadratic(Eigen::Index dim, double condition_number, std::uint64_t seed);

/// loss = w^T A w, grad = 2 A w.
template <typename Derived>
EvalResult quadratic_eval_grad(const QuadraticProblem& p, const Eigen::MatrixBase<Derived>& w) {
  if (w.size() != p.dimension())
    throw InvalidArgument("quadratic_eval_grad: dimension mismatch");
  VectorXd aw = p.matrix() * w;
  EvalResult r;
  r.loss = w.dot(aw);
  r.grad = 2.0 * aw;
  return r;
}

// ---------------------------------------------------------------------------
// Datasets

enum class DatasetKind { two_gaussians, two_moons, random_labels };

DatasetKind parse_dataset_kind(const std::string& name);
std::string to_string(DatasetKind kind);

struct Dataset {
  MatrixXd inputs;  // n_samples x n_features
  std::vector<int> labels;
  int n_classes = 2;
  DatasetKind kind = DatasetKind::two_gaussians;
  double noise = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  void validate() const;

  /// Samples selected by index, in order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

Dataset make_dataset(DatasetKind kind, std::size_t n_samples, double noise, std::uint64_t seed);
Dataset make_dataset(const std::string& kind, std::size_t n_samples, double noise, std::uint64_t seed);

/// Deterministic split: the last `heldout` samples of a seeded permutation.
std::pair<Dataset, Dataset> split_heldout(const Dataset& data, std::size_t heldout, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Multilayer perceptron with softmax cross-entropy

enum class Activation { tanh, relu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

class MlpModel {
 public:
  explicit MlpModel(std::vector<int> layer_sizes, Activation activation = Activation::tanh);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  Eigen::Index parameter_count() const { return n_params_; }
  int n_inputs() const { return sizes_.front(); }
  int n_classes() const { return sizes_.back(); }

  /// Weights N(0, 1/fan_in), biases zero.
  VectorXd initialize(std::uint64_t seed) const;

  /// Class probabilities, one column per sample.
  MatrixXd predict_proba(const VectorXd& w, const MatrixXd& inputs) const;

  /// Mean cross-entropy over `batch` and its exact gradient.
  EvalResult eval_grad(const VectorXd& w, const Dataset& batch) const;

  /// Same, over selected rows of `data` without copying them out first.
  EvalResult eval_grad(const VectorXd& w, const Dataset& data, std::span<const std::size_t> rows) const;

  double accuracy(const VectorXd& w, const Dataset& data) const;

 private:
  struct LayerView {
    Eigen::Index weight_offset;
    Eigen::Index bias_offset;
    int fan_in;
    int fan_out;
  };

  EvalResult eval_grad_inputs(const VectorXd& w, const MatrixXd& x, std::span<const int> labels) const;

  std::vector<int> sizes_;
  Activation activation_;
  std::vector<LayerView> layers_;
  Eigen::Index n_params_ = 0;
};

/// Toy network bound to a training set (and optional held-out set).
class MlpProblem final : public Problem {
 public:
  MlpProblem(MlpModel model, Dataset train, std::optional<Dataset> heldout = std::nullopt);

  Eigen::Index dimension() const override { return model_.parameter_count(); }
  EvalResult eval_grad(const VectorXd& w) const override;
  EvalResult eval_grad(const VectorXd& w, std::span<const std::size_t> batch) const override;
  std::size_t n_samples() const override { return train_.size(); }
  VectorXd initial_point(std::uint64_t seed) const override { return model_.initialize(seed); }
  std::optional<double> heldout_accuracy(const VectorXd& w) const override;

  const MlpModel& model() const { return model_; }
  const Dataset& train_set() const { return train_; }

 private:
  MlpModel model_;
  Dataset train_;
  std::optional<Dataset> heldout_;
};

// ---------------------------------------------------------------------------
// JSON golden-file form

nlohmann::json to_json(const QuadraticProblem& p);
QuadraticProblem quadratic_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Dataset& d);
Dataset dataset_from_json(const nlohmann::json& j);

}  // namespace momlab
