#pragma once

#include <cstdint>
#include <vector>

#include "fairbfl/data.hpp"

namespace fairbfl {

// Client id carried by a globally aggregated gradient.
constexpr int64_t kGlobalClient = -1;

enum class ModelKind { linear, logistic, mlp };

struct ModelLayout {
  ModelKind kind = ModelKind::logistic;
  int input_dim = 0;
  int class_count = 0;
  int hidden_width = 0;  // mlp only

  size_t param_count() const {
    const size_t d = static_cast<size_t>(input_dim);
    const size_t k = static_cast<size_t>(class_count);
    const size_t h = static_cast<size_t>(hidden_width);
    switch (kind) {
      case ModelKind::linear:
        return d + 1;  // single output plus bias
      case ModelKind::logistic:
        return k * d + k;
      case ModelKind::mlp:
        return h * d + h + k * h + k;
    }
    return 0;
  }
};

struct ModelParams {
  ModelLayout layout;
  std::vector<double> values;

  static ModelParams zeros(const ModelLayout& layout) {
    return {layout, std::vector<double>(layout.param_count(), 0.0)};
  }
};

struct GradientVector {
  std::vector<double> values;
  int64_t client_id = 0;
  int64_t round = 0;
};

struct HyperParams {
  double eta = 0.01;
  int epochs = 5;
  int batch_size = 10;
  double mu = 0.0;  // L2 coefficient, loss adds mu/2 * ||w||^2
};

struct LocalUpdateStats {
  int steps = 0;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

// E epochs of mini-batch SGD over the shard; returns new params minus old.
// The seed drives batch shuffling only.
GradientVector local_update(const ModelParams& params, const DataSet& ds,
                            const DataShard& shard, const HyperParams& hp,
                            uint64_t seed, int64_t round = 0,
                            LocalUpdateStats* stats = nullptr);

Evaluation evaluate(const ModelParams& params, const DataSet& ds,
                    const std::vector<size_t>& indices, double mu = 0.0);
Evaluation evaluate(const ModelParams& params, const DataSet& ds, double mu = 0.0);

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

// Mean loss gradient over the given samples, plus the L2 term.
std::vector<double> full_batch_gradient(const ModelParams& params, const DataSet& ds,
                                        const std::vector<size_t>& indices, double mu);

// Reference minimizer: full-batch gradient descent with step 1/L run to a
// gradient-norm tolerance. Returns the optimum; out_loss gets its loss.
ModelParams full_batch_optimum(const ModelLayout& layout, const DataSet& ds, double mu,
                               int max_iters, double tol, double* out_loss = nullptr);

// Largest eigenvalue of X^T X / n over the dataset's features (power iteration).
double max_gram_eigenvalue(const DataSet& ds);

}  // namespace fairbfl
