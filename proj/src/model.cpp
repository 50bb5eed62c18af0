#include "fairbfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fairbfl/errors.hpp"
#include "fairbfl/rng.hpp"

namespace fairbfl {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (const double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Adds one sample's loss gradient (unscaled) into grad and returns its loss.
// pred_out, when given, receives the predicted class (or rounded value for
// the linear model).
double sample_gradient(const ModelLayout& layout, const std::vector<double>& w,
                       std::span<const double> x, int y, std::vector<double>* grad,
                       int* pred_out = nullptr) {
  const size_t d = static_cast<size_t>(layout.input_dim);
  const size_t k = static_cast<size_t>(layout.class_count);

  if (layout.kind == ModelKind::linear) {
    double z = w[d];
    for (size_t f = 0; f < d; ++f) z += w[f] * x[f];
    const double r = z - y;
    if (grad) {
      for (size_t f = 0; f < d; ++f) (*grad)[f] += r * x[f];
      (*grad)[d] += r;
    }
    if (pred_out) *pred_out = static_cast<int>(std::lround(z));
    return 0.5 * r * r;
  }

  if (layout.kind == ModelKind::logistic) {
    std::vector<double> z(k);
    for (size_t c = 0; c < k; ++c) {
      double s = w[k * d + c];
      const double* row = w.data() + c * d;
      for (size_t f = 0; f < d; ++f) s += row[f] * x[f];
      z[c] = s;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (size_t c = 0; c < k; ++c) {
      z[c] = std::exp(z[c] - zmax);
      denom += z[c];
    }
    int argmax = 0;
    for (size_t c = 0; c < k; ++c) {
      z[c] /= denom;
      if (z[c] > z[argmax]) argmax = static_cast<int>(c);
    }
    if (pred_out) *pred_out = argmax;
    if (grad) {
      for (size_t c = 0; c < k; ++c) {
        const double g = z[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
        double* row = grad->data() + c * d;
        for (size_t f = 0; f < d; ++f) row[f] += g * x[f];
        (*grad)[k * d + c] += g;
      }
    }
    return -std::log(std::max(z[static_cast<size_t>(y)], 1e-300));
  }

  // mlp: tanh hidden layer, softmax output
  const size_t h = static_cast<size_t>(layout.hidden_width);
  const size_t w1 = 0, b1 = h * d, w2 = h * d + h, b2 = h * d + h + k * h;

  std::vector<double> a(h);
  for (size_t j = 0; j < h; ++j) {
    double s = w[b1 + j];
    const double* row = w.data() + w1 + j * d;
    for (size_t f = 0; f < d; ++f) s += row[f] * x[f];
    a[j] = std::tanh(s);
  }
  std::vector<double> z(k);
  for (size_t c = 0; c < k; ++c) {
    double s = w[b2 + c];
    const double* row = w.data() + w2 + c * h;
    for (size_t j = 0; j < h; ++j) s += row[j] * a[j];
    z[c] = s;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (size_t c = 0; c < k; ++c) {
    z[c] = std::exp(z[c] - zmax);
    denom += z[c];
  }
  int argmax = 0;
  for (size_t c = 0; c < k; ++c) {
    z[c] /= denom;
    if (z[c] > z[argmax]) argmax = static_cast<int>(c);
  }
  if (pred_out) *pred_out = argmax;
  if (grad) {
    std::vector<double> ga(h, 0.0);
    for (size_t c = 0; c < k; ++c) {
      const double g = z[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
      double* row = grad->data() + w2 + c * h;
      for (size_t j = 0; j < h; ++j) {
        row[j] += g * a[j];
        ga[j] += g * w[w2 + c * h + j];
      }
      (*grad)[b2 + c] += g;
    }
    for (size_t j = 0; j < h; ++j) {
      const double gpre = ga[j] * (1.0 - a[j] * a[j]);
      double* row = grad->data() + w1 + j * d;
      for (size_t f = 0; f < d; ++f) row[f] += gpre * x[f];
      (*grad)[b1 + j] += gpre;
    }
  }
  return -std::log(std::max(z[static_cast<size_t>(y)], 1e-300));
}

// Mean gradient over the index range [begin, end) plus the L2 term; returns
// the regularized mean loss.
double batch_gradient(const ModelLayout& layout, const std::vector<double>& w,
                      const DataSet& ds, const std::vector<size_t>& idx, size_t begin,
                      size_t end, double mu, std::vector<double>& grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (size_t i = begin; i < end; ++i) {
    loss += sample_gradient(layout, w, ds.sample(idx[i]), ds.labels[idx[i]], &grad);
  }
  const double inv = 1.0 / static_cast<double>(end - begin);
  loss *= inv;
  double reg = 0.0;
  for (size_t p = 0; p < w.size(); ++p) {
    grad[p] = grad[p] * inv + mu * w[p];
    reg += w[p] * w[p];
  }
  return loss + 0.5 * mu * reg;
}

}  // namespace

GradientVector local_update(const ModelParams& params, const DataSet& ds,
                            const DataShard& shard, const HyperParams& hp,
                            uint64_t seed, int64_t round, LocalUpdateStats* stats) {
  if (shard.indices.empty()) throw EmptyData("local_update: empty shard");

  std::vector<double> w = params.values;
  std::vector<double> grad(w.size());
  std::vector<size_t> idx = shard.indices;
  Rng rng(seed);
  const size_t b = static_cast<size_t>(hp.batch_size);
  int steps = 0;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(idx);
    for (size_t begin = 0; begin < idx.size(); begin += b) {
      const size_t end = std::min(begin + b, idx.size());
      const double loss =
          batch_gradient(params.layout, w, ds, idx, begin, end, hp.mu, grad);
      for (size_t p = 0; p < w.size(); ++p) w[p] -= hp.eta * grad[p];
      ++steps;
      if (!std::isfinite(loss) || !all_finite(w)) {
        throw NumericalDivergence("local_update diverged at epoch " +
                                  std::to_string(epoch + 1) + ", batch " +
                                  std::to_string(begin / b + 1));
      }
    }
  }
  if (stats) stats->steps = steps;

  GradientVector delta;
  delta.client_id = shard.owner;
  delta.round = round;
  delta.values.resize(w.size());
  for (size_t p = 0; p < w.size(); ++p) delta.values[p] = w[p] - params.values[p];
  return delta;
}

Evaluation evaluate(const ModelParams& params, const DataSet& ds,
                    const std::vector<size_t>& indices, double mu) {
  if (indices.empty()) throw EmptyData("evaluate: empty shard");
  double loss = 0.0;
  size_t correct = 0;
  for (const size_t i : indices) {
    int pred = 0;
    loss += sample_gradient(params.layout, params.values, ds.sample(i), ds.labels[i],
                            nullptr, &pred);
    if (pred == ds.labels[i]) ++correct;
  }
  loss /= static_cast<double>(indices.size());
  if (mu != 0.0) {
    double reg = 0.0;
    for (const double v : params.values) reg += v * v;
    loss += 0.5 * mu * reg;
  }
  return {loss, static_cast<double>(correct) / static_cast<double>(indices.size())};
}

Evaluation evaluate(const ModelParams& params, const DataSet& ds, double mu) {
  std::vector<size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  return evaluate(params, ds, all, mu);
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_distance: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine_distance: zero vector");
  const double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(d, 0.0, 2.0);
}

std::vector<double> full_batch_gradient(const ModelParams& params, const DataSet& ds,
                                        const std::vector<size_t>& indices, double mu) {
  if (indices.empty()) throw EmptyData("full_batch_gradient: empty shard");
  std::vector<double> grad(params.values.size());
  batch_gradient(params.layout, params.values, ds, indices, 0, indices.size(), mu,
                 grad);
  return grad;
}

ModelParams full_batch_optimum(const ModelLayout& layout, const DataSet& ds, double mu,
                               int max_iters, double tol, double* out_loss) {
  if (ds.size() == 0) throw EmptyData("full_batch_optimum: empty dataset");
  std::vector<size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);

  // 1/L step with L bounded by mu + lambda_max of the bias-augmented Gram
  const double step = 1.0 / (mu + max_gram_eigenvalue(ds) + 1.0);
  ModelParams w = ModelParams::zeros(layout);
  for (int it = 0; it < max_iters; ++it) {
    const auto g = full_batch_gradient(w, ds, all, mu);
    double gmax = 0.0;
    for (const double x : g) gmax = std::max(gmax, std::fabs(x));
    if (gmax < tol) break;
    for (size_t p = 0; p < w.values.size(); ++p) w.values[p] -= step * g[p];
  }
  if (out_loss) *out_loss = evaluate(w, ds, all, mu).loss;
  return w;
}

double max_gram_eigenvalue(const DataSet& ds) {
  if (ds.size() == 0) throw EmptyData("max_gram_eigenvalue: empty dataset");
  const size_t d = ds.dim;
  std::vector<double> gram(d * d, 0.0);
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.sample(i);
    for (size_t a = 0; a < d; ++a) {
      for (size_t b = 0; b < d; ++b) gram[a * d + b] += x[a] * x[b];
    }
  }
  const double inv = 1.0 / static_cast<double>(ds.size());
  for (double& g : gram) g *= inv;

  // power iteration; start vector slightly tilted so it cannot be orthogonal
  // to the leading eigenvector by symmetry
  std::vector<double> v(d), gv(d);
  for (size_t a = 0; a < d; ++a) v[a] = 1.0 + 1e-3 * static_cast<double>(a);
  double lambda = 0.0;
  for (int it = 0; it < 2000; ++it) {
    for (size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (size_t b = 0; b < d; ++b) s += gram[a * d + b] * v[b];
      gv[a] = s;
    }
    double norm = 0.0, ray = 0.0;
    for (size_t a = 0; a < d; ++a) {
      norm += gv[a] * gv[a];
      ray += gv[a] * v[a];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (size_t a = 0; a < d; ++a) v[a] = gv[a] / norm;
    if (it > 10 && std::fabs(ray - lambda) <= 1e-12 * std::max(1.0, std::fabs(ray))) {
      lambda = ray;
      break;
    }
    lambda = ray;
  }
  return lambda;
}

}  // namespace fairbfl
