#include "momlab/problems.hpp"

#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace momlab {

namespace {

MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  // Fill in a fixed (row-major) order so results don't depend on storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Fisher-Yates with our own index draws; std::shuffle's sequence is
  // implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  return idx;
}

}  // namespace

void Problem::check_dimension(const VectorXd& w) const {
  if (w.size() != dimension())
    throw InvalidArgument("parameter vector has length " + std::to_string(w.size()) +
                          ", problem dimension is " + std::to_string(dimension()));
}

// ---------------------------------------------------------------------------

QuadraticProblem::QuadraticProblem(MatrixXd matrix, VectorXd eigenvalues, std::uint64_t seed)
    : matrix_(std::move(matrix)), eigenvalues_(std::move(eigenvalues)), seed_(seed) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1)
    throw InvalidArgument("quadratic: matrix must be square and non-empty");
  if (eigenvalues_.size() != matrix_.rows())
    throw InvalidArgument("quadratic: eigenvalue count does not match dimension");
  std::sort(eigenvalues_.data(), eigenvalues_.data() + eigenvalues_.size());
  if (!(eigenvalues_(0) > 0.0)) throw InvalidArgument("quadratic: eigenvalues must be positive");
  matrix_ = 0.5 * (matrix_ + matrix_.transpose()).eval();
}

EvalResult QuadraticProblem::eval_grad(const VectorXd& w) const { return quadratic_eval_grad(*this, w); }

VectorXd QuadraticProblem::initial_point(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  return gaussian_matrix(dimension(), 1, rng);
}

QuadraticProblem make_quadratic(Eigen::Index dim, double condition_number, std::uint64_t seed) {
  if (dim < 2) throw InvalidArgument("make_quadratic: dim must be >= 2");
  if (!(condition_number >= 1.0) || !std::isfinite(condition_number))
    throw InvalidArgument("make_quadratic: condition_number must be >= 1");

  std::mt19937_64 rng(seed);
  const MatrixXd g = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  // Sign-fix columns against diag(R) so Q is Haar distributed.
  const MatrixXd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);

  VectorXd lambda(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    lambda(i) = std::pow(condition_number, static_cast<double>(i) / static_cast<double>(dim - 1));
  lambda(0) = 1.0;
  lambda(dim - 1) = condition_number;

  MatrixXd a = q * lambda.asDiagonal() * q.transpose();
  return QuadraticProblem(std::move(a), std::move(lambda), seed);
}

// ---------------------------------------------------------------------------

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "two_gaussians") return DatasetKind::two_gaussians;
  if (name == "two_moons") return DatasetKind::two_moons;
  if (name == "random_labels") return DatasetKind::random_labels;
  throw InvalidArgument("unknown dataset kind '" + name + "'");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::two_gaussians: return "two_gaussians";
    case DatasetKind::two_moons: return "two_moons";
    case DatasetKind::random_labels: return "random_labels";
  }
  return "?";
}

void Dataset::validate() const {
  if (labels.empty()) throw InvalidArgument("dataset: no samples");
  if (n_classes < 1) throw InvalidArgument("dataset: n_classes must be positive");
  if (static_cast<std::size_t>(inputs.rows()) != labels.size())
    throw InvalidArgument("dataset: inputs and labels disagree in length");
  if (!inputs.allFinite()) throw InvalidArgument("dataset: non-finite input");
  for (int y : labels)
    if (y < 0 || y >= n_classes) throw InvalidArgument("dataset: label out of range");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(indices.size()), inputs.cols());
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(static_cast<Eigen::Index>(indices[k]));
    out.labels.push_back(labels[indices[k]]);
  }
  out.n_classes = n_classes;
  out.kind = kind;
  out.noise = noise;
  out.seed = seed;
  return out;
}

Dataset make_dataset(DatasetKind kind, std::size_t n_samples, double noise, std::uint64_t seed) {
  if (n_samples < 2) throw InvalidArgument("make_dataset: n_samples must be >= 2");
  if (!(noise >= 0.0)) throw InvalidArgument("make_dataset: noise must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double pi = std::acos(-1.0);

  const std::size_t n0 = n_samples / 2;
  MatrixXd x(static_cast<Eigen::Index>(n_samples), 2);
  std::vector<int> y(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const int label = i < n0 ? 0 : 1;
    const auto row = static_cast<Eigen::Index>(i);
    y[i] = label;
    switch (kind) {
      case DatasetKind::two_gaussians:
        x(row, 0) = label == 0 ? -1.0 : 1.0;
        x(row, 1) = 0.0;
        break;
      case DatasetKind::two_moons: {
        const double t = pi * uniform(rng);
        if (label == 0) {
          x(row, 0) = std::cos(t);
          x(row, 1) = std::sin(t);
        } else {
          x(row, 0) = 1.0 - std::cos(t);
          x(row, 1) = 0.5 - std::sin(t);
        }
        break;
      }
      case DatasetKind::random_labels:
        x(row, 0) = normal(rng);
        x(row, 1) = normal(rng);
        break;
    }
    x(row, 0) += noise * normal(rng);
    x(row, 1) += noise * normal(rng);
  }

  // Random labels: a balanced label vector in random order, independent of x.
  if (kind == DatasetKind::random_labels) {
    const auto perm = permutation(n_samples, rng);
    std::vector<int> shuffled(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) shuffled[i] = y[perm[i]];
    y = std::move(shuffled);
  }

  // Interleave classes so the sample order carries no information.
  const auto order = permutation(n_samples, rng);
  Dataset d;
  d.inputs.resize(x.rows(), 2);
  d.labels.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    d.inputs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(order[i]));
    d.labels[i] = y[order[i]];
  }
  d.n_classes = 2;
  d.kind = kind;
  d.noise = noise;
  d.seed = seed;
  d.validate();
  return d;
}

Dataset make_dataset(const std::string& kind, std::size_t n_samples, double noise, std::uint64_t seed) {
  return make_dataset(parse_dataset_kind(kind), n_samples, noise, seed);
}

std::pair<Dataset, Dataset> split_heldout(const Dataset& data, std::size_t heldout, std::uint64_t seed) {
  if (heldout == 0 || heldout >= data.size())
    throw InvalidArgument("split_heldout: held-out size must be in [1, n_samples)");
  std::mt19937_64 rng(seed);
  const auto perm = permutation(data.size(), rng);
  const std::size_t n_train = data.size() - heldout;
  std::span<const std::size_t> all(perm);
  return {data.subset(all.first(n_train)), data.subset(all.subspan(n_train))};
}

// ---------------------------------------------------------------------------

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw InvalidArgument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

MlpModel::MlpModel(std::vector<int> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw InvalidArgument("mlp: need at least input and output layer");
  for (int s : sizes_)
    if (s < 1) throw InvalidArgument("mlp: layer sizes must be positive");
  if (sizes_.back() < 2) throw InvalidArgument("mlp: need at least two output classes");
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    LayerView v{offset, offset + Eigen::Index{sizes_[l + 1]} * sizes_[l], sizes_[l], sizes_[l + 1]};
    offset = v.bias_offset + sizes_[l + 1];
    layers_.push_back(v);
  }
  n_params_ = offset;
}

VectorXd MlpModel::initialize(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd w = VectorXd::Zero(n_params_);
  for (const auto& l : layers_) {
    const double s = 1.0 / std::sqrt(static_cast<double>(l.fan_in));
    for (Eigen::Index i = 0; i < Eigen::Index{l.fan_in} * l.fan_out; ++i) w(l.weight_offset + i) = s * normal(rng);
  }
  return w;
}

MatrixXd MlpModel::predict_proba(const VectorXd& w, const MatrixXd& inputs) const {
  if (w.size() != n_params_) throw InvalidArgument("mlp: parameter vector has wrong length");
  if (inputs.cols() != n_inputs()) throw InvalidArgument("mlp: input width mismatch");
  MatrixXd h = inputs.transpose();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& lv = layers_[l];
    Eigen::Map<const MatrixXd> wm(w.data() + lv.weight_offset, lv.fan_out, lv.fan_in);
    Eigen::Map<const VectorXd> b(w.data() + lv.bias_offset, lv.fan_out);
    MatrixXd z = (wm * h).colwise() + b;
    if (l + 1 < layers_.size())
      h = activation_ == Activation::tanh ? MatrixXd(z.array().tanh()) : MatrixXd(z.array().max(0.0));
    else
      h = std::move(z);
  }
  const Eigen::RowVectorXd mx = h.colwise().maxCoeff();
  MatrixXd p = (h.rowwise() - mx).array().exp();
  const Eigen::RowVectorXd sums = p.colwise().sum();
  for (Eigen::Index j = 0; j < p.cols(); ++j) p.col(j) /= sums(j);
  return p;
}

EvalResult MlpModel::eval_grad_inputs(const VectorXd& w, const MatrixXd& x, std::span<const int> labels) const {
  const Eigen::Index n = x.cols();
  std::vector<MatrixXd> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& lv = layers_[l];
    Eigen::Map<const MatrixXd> wm(w.data() + lv.weight_offset, lv.fan_out, lv.fan_in);
    Eigen::Map<const VectorXd> b(w.data() + lv.bias_offset, lv.fan_out);
    MatrixXd z = (wm * acts.back()).colwise() + b;
    if (l + 1 < layers_.size())
      acts.push_back(activation_ == Activation::tanh ? MatrixXd(z.array().tanh()) : MatrixXd(z.array().max(0.0)));
    else
      acts.push_back(std::move(z));
  }

  // Softmax cross-entropy; delta holds dL/dlogits.
  const MatrixXd& logits = acts.back();
  MatrixXd delta(logits.rows(), n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mx = logits.col(j).maxCoeff();
    const VectorXd e = (logits.col(j).array() - mx).exp();
    const double s = e.sum();
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= logits.rows()) throw InvalidArgument("mlp: label out of range for model");
    loss -= logits(y, j) - mx - std::log(s);
    delta.col(j) = e / s;
    delta(y, j) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  delta *= inv_n;

  EvalResult r;
  r.loss = loss * inv_n;
  r.grad = VectorXd::Zero(n_params_);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& lv = layers_[l];
    Eigen::Map<MatrixXd> gw(r.grad.data() + lv.weight_offset, lv.fan_out, lv.fan_in);
    Eigen::Map<VectorXd> gb(r.grad.data() + lv.bias_offset, lv.fan_out);
    gw.noalias() = delta * acts[l].transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      Eigen::Map<const MatrixXd> wm(w.data() + lv.weight_offset, lv.fan_out, lv.fan_in);
      MatrixXd back = wm.transpose() * delta;
      const MatrixXd& a = acts[l];
      if (activation_ == Activation::tanh)
        delta = back.array() * (1.0 - a.array().square());
      else
        delta = back.array() * (a.array() > 0.0).cast<double>();
    }
  }
  return r;
}

EvalResult MlpModel::eval_grad(const VectorXd& w, const Dataset& batch) const {
  if (w.size() != n_params_) throw InvalidArgument("mlp: parameter vector has wrong length");
  if (batch.size() == 0) throw InvalidArgument("mlp: empty batch");
  if (batch.inputs.cols() != n_inputs()) throw InvalidArgument("mlp: input width mismatch");
  return eval_grad_inputs(w, batch.inputs.transpose(), batch.labels);
}

EvalResult MlpModel::eval_grad(const VectorXd& w, const Dataset& data, std::span<const std::size_t> rows) const {
  if (w.size() != n_params_) throw InvalidArgument("mlp: parameter vector has wrong length");
  if (rows.empty()) throw InvalidArgument("mlp: empty batch");
  if (data.inputs.cols() != n_inputs()) throw InvalidArgument("mlp: input width mismatch");
  MatrixXd x(data.inputs.cols(), static_cast<Eigen::Index>(rows.size()));
  std::vector<int> y(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= data.size()) throw InvalidArgument("mlp: batch index out of range");
    x.col(static_cast<Eigen::Index>(k)) = data.inputs.row(static_cast<Eigen::Index>(rows[k])).transpose();
    y[k] = data.labels[rows[k]];
  }
  return eval_grad_inputs(w, x, y);
}

double MlpModel::accuracy(const VectorXd& w, const Dataset& data) const {
  const MatrixXd p = predict_proba(w, data.inputs);
  std::size_t correct = 0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    Eigen::Index arg = 0;
    p.col(j).maxCoeff(&arg);
    if (arg == data.labels[static_cast<std::size_t>(j)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

MlpProblem::MlpProblem(MlpModel model, Dataset train, std::optional<Dataset> heldout)
    : model_(std::move(model)), train_(std::move(train)), heldout_(std::move(heldout)) {
  train_.validate();
  if (train_.n_classes > model_.n_classes()) throw InvalidArgument("mlp: dataset has more classes than outputs");
  if (train_.inputs.cols() != model_.n_inputs()) throw InvalidArgument("mlp: dataset width does not match input layer");
  if (heldout_) heldout_->validate();
}

EvalResult MlpProblem::eval_grad(const VectorXd& w) const {
  check_dimension(w);
  return model_.eval_grad(w, train_);
}

EvalResult MlpProblem::eval_grad(const VectorXd& w, std::span<const std::size_t> batch) const {
  check_dimension(w);
  return model_.eval_grad(w, train_, batch);
}

std::optional<double> MlpProblem::heldout_accuracy(const VectorXd& w) const {
  if (!heldout_) return std::nullopt;
  return model_.accuracy(w, *heldout_);
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const QuadraticProblem& p) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.dimension(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(p.dimension()));
    for (Eigen::Index j = 0; j < p.dimension(); ++j) row[static_cast<std::size_t>(j)] = p.matrix()(i, j);
    rows.push_back(row);
  }
  std::vector<double> ev(p.eigenvalues().data(), p.eigenvalues().data() + p.eigenvalues().size());
  return {{"version", 1}, {"kind", "quadratic"}, {"seed", p.seed()}, {"matrix", rows}, {"eigenvalues", ev}};
}

QuadraticProblem quadratic_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "quadratic") throw InvalidArgument("quadratic json: kind must be 'quadratic'");
  if (j.value("version", 0) != 1) throw InvalidArgument("quadratic json: unsupported version");
  const auto& rows = j.at("matrix");
  const auto d = static_cast<Eigen::Index>(rows.size());
  MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != d) throw InvalidArgument("quadratic json: matrix not square");
    for (Eigen::Index k = 0; k < d; ++k) a(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  const auto ev = j.at("eigenvalues").get<std::vector<double>>();
  VectorXd lambda = Eigen::Map<const VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  return QuadraticProblem(std::move(a), std::move(lambda), j.at("seed").get<std::uint64_t>());
}

nlohmann::json to_json(const Dataset& d) {
  nlohmann::json inputs = nlohmann::json::array();
  for (Eigen::Index i = 0; i < d.inputs.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(d.inputs.cols()));
    for (Eigen::Index k = 0; k < d.inputs.cols(); ++k) row[static_cast<std::size_t>(k)] = d.inputs(i, k);
    inputs.push_back(row);
  }
  return {{"version", 1},       {"kind", to_string(d.kind)}, {"seed", d.seed},     {"noise", d.noise},
          {"n_classes", d.n_classes}, {"inputs", inputs},          {"labels", d.labels}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != 1) throw InvalidArgument("dataset json: unsupported version");
  Dataset d;
  d.kind = parse_dataset_kind(j.at("kind").get<std::string>());
  d.seed = j.at("seed").get<std::uint64_t>();
  d.noise = j.at("noise").get<double>();
  d.n_classes = j.at("n_classes").get<int>();
  d.labels = j.at("labels").get<std::vector<int>>();
  const auto& rows = j.at("inputs");
  const auto cols = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
  d.inputs.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index k = 0; k < cols; ++k)
      d.inputs(static_cast<Eigen::Index>(i), k) = rows.at(i).at(static_cast<std::size_t>(k)).get<double>();
  d.validate();
  return d;
}

}  // namespace momlab
