#include "fairbfl/incentive.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fairbfl/errors.hpp"

namespace fairbfl {

namespace {

// Pairwise distance with the zero-vector fallback: a gradient carrying no
// information is maximally distant from everything.
double gradient_distance(const std::vector<double>& a, const std::vector<double>& b,
                         ClusterMetric metric) {
  if (metric == ClusterMetric::euclidean) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  try {
    return cosine_distance(a, b);
  } catch (const ZeroVector&) {
    return 2.0;
  }
}

double theta_of(const GradientVector& g, const GradientVector& reference) {
  try {
    return cosine_distance(g.values, reference.values);
  } catch (const ZeroVector&) {
    return 2.0;
  }
}

}  // namespace

Clustering cluster(const std::vector<GradientVector>& gradients,
                   const ClusterParams& params) {
  const int n = static_cast<int>(gradients.size());
  if (n == 0) throw EmptyData("cluster: no gradients");
  for (const GradientVector& g : gradients) {
    if (g.values.size() != gradients[0].values.size()) {
      throw ShapeError("cluster: gradient dimension mismatch");
    }
  }

  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (gradient_distance(gradients[i].values, gradients[j].values,
                            params.metric) <= params.eps) {
        neighbors[i].push_back(j);
      }
    }
  }
  std::vector<bool> core(n);
  for (int i = 0; i < n; ++i) {
    core[i] = static_cast<int>(neighbors[i].size()) >= params.min_pts;
  }

  // Density-connected expansion in ascending index order; border points join
  // the first cluster that reaches them (the documented tie-break).
  constexpr int kUnvisited = -2, kNoise = -1;
  std::vector<int> label(n, kUnvisited);
  int next_cluster = 0;
  for (int i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    if (!core[i]) {
      label[i] = kNoise;
      continue;
    }
    const int id = next_cluster++;
    label[i] = id;
    std::deque<int> queue{i};
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      for (const int q : neighbors[p]) {
        if (label[q] == kNoise) {
          label[q] = id;
        } else if (label[q] == kUnvisited) {
          label[q] = id;
          if (core[q]) queue.push_back(q);
        }
      }
    }
  }

  Clustering out;
  out.clusters.resize(static_cast<size_t>(next_cluster));
  for (int i = 0; i < n; ++i) {
    if (label[i] == kNoise) {
      out.noise.push_back(i);
    } else {
      out.clusters[static_cast<size_t>(label[i])].push_back(i);
    }
  }
  return out;
}

std::pair<ContributionReport, GradientSet> identify_contributions(
    const GradientSet& gset, const ClusterParams& params, Strategy strategy,
    double base) {
  if (!gset.global.has_value()) {
    throw ProtocolViolation("identify_contributions: global gradient missing");
  }
  if (gset.entries.empty()) {
    throw EmptyAggregation("identify_contributions: no uploads");
  }

  std::vector<int64_t> ids;
  std::vector<GradientVector> points;
  ids.reserve(gset.entries.size());
  points.reserve(gset.entries.size() + 1);
  for (const auto& [id, g] : gset.entries) {
    ids.push_back(id);
    points.push_back(g);
  }
  const int global_idx = static_cast<int>(points.size());
  points.push_back(*gset.global);

  const Clustering clustering = cluster(points, params);

  const std::vector<int>* global_cluster = nullptr;
  for (const auto& c : clustering.clusters) {
    if (std::find(c.begin(), c.end(), global_idx) != c.end()) {
      global_cluster = &c;
      break;
    }
  }

  ContributionReport report;
  std::vector<int64_t> high_ids;
  // Fallbacks per the algorithm's blind spots: a global in noise, everything
  // in one cluster, or a cluster holding the global alone all label everyone
  // high rather than stalling the round.
  const bool all_in_one = global_cluster != nullptr &&
                          global_cluster->size() == points.size();
  const bool global_alone = global_cluster != nullptr && global_cluster->size() == 1;
  if (global_cluster == nullptr || all_in_one || global_alone) {
    report.degenerate = true;
    high_ids = ids;
  } else {
    for (const int idx : *global_cluster) {
      if (idx != global_idx) high_ids.push_back(ids[static_cast<size_t>(idx)]);
    }
    std::sort(high_ids.begin(), high_ids.end());
  }

  for (const int64_t id : ids) report.labels[id] = ContributionLabel::low;
  for (const int64_t id : high_ids) report.labels[id] = ContributionLabel::high;

  double theta_sum = 0.0;
  for (const int64_t id : high_ids) {
    const double t = theta_of(gset.entries.at(id), *gset.global);
    report.thetas[id] = t;
    theta_sum += t;
  }
  for (const int64_t id : high_ids) {
    double amount;
    if (theta_sum > 0.0) {
      amount = report.thetas.at(id) / theta_sum * base;
    } else {
      report.zero_theta_fallback = true;
      amount = base / static_cast<double>(high_ids.size());
    }
    report.rewards.push_back({id, amount});
  }

  GradientSet updated = gset;
  if (strategy == Strategy::discard) {
    for (const auto& [id, label] : report.labels) {
      if (label == ContributionLabel::low) {
        report.dropped.insert(id);
        updated.entries.erase(id);
      }
    }
  }
  return {std::move(report), std::move(updated)};
}

GradientVector simple_average(const GradientSet& gset) {
  if (gset.entries.empty()) throw EmptyAggregation("simple_average: empty set");
  GradientVector out;
  out.client_id = kGlobalClient;
  out.round = gset.round;
  out.values.assign(gset.entries.begin()->second.values.size(), 0.0);
  for (const auto& [id, g] : gset.entries) {
    if (g.values.size() != out.values.size()) {
      throw ShapeError("simple_average: gradient dimension mismatch");
    }
    for (size_t p = 0; p < out.values.size(); ++p) out.values[p] += g.values[p];
  }
  const double inv = 1.0 / static_cast<double>(gset.entries.size());
  for (double& v : out.values) v *= inv;
  return out;
}

std::map<int64_t, double> aggregation_thetas(const GradientSet& gset,
                                             const GradientVector& reference) {
  std::map<int64_t, double> thetas;
  for (const auto& [id, g] : gset.entries) thetas[id] = theta_of(g, reference);
  return thetas;
}

GradientVector fair_aggregate(const GradientSet& gset,
                              const std::map<int64_t, double>& thetas, double scale,
                              bool* zero_theta_fallback) {
  if (gset.entries.empty()) throw EmptyAggregation("fair_aggregate: empty set");
  if (thetas.size() != gset.entries.size()) {
    throw ShapeError("fair_aggregate: thetas do not cover the surviving entries");
  }
  double theta_sum = 0.0;
  for (const auto& [id, t] : thetas) {
    if (gset.entries.count(id) == 0) {
      throw ShapeError("fair_aggregate: theta for absent client " + std::to_string(id));
    }
    theta_sum += t;
  }
  if (zero_theta_fallback) *zero_theta_fallback = false;
  if (theta_sum <= 0.0) {
    if (zero_theta_fallback) *zero_theta_fallback = true;
    return simple_average(gset);
  }

  GradientVector out;
  out.client_id = kGlobalClient;
  out.round = gset.round;
  out.values.assign(gset.entries.begin()->second.values.size(), 0.0);
  for (const auto& [id, g] : gset.entries) {
    if (g.values.size() != out.values.size()) {
      throw ShapeError("fair_aggregate: gradient dimension mismatch");
    }
    const double p = thetas.at(id) / theta_sum;
    for (size_t k = 0; k < out.values.size(); ++k) out.values[k] += p * g.values[k];
  }
  for (double& v : out.values) v *= scale;
  return out;
}

double detection_rate(const std::set<int64_t>& attackers,
                      const std::set<int64_t>& dropped) {
  if (attackers.empty()) {
    throw EmptyData("detection_rate: attacker set is empty");
  }
  size_t caught = 0;
  for (const int64_t a : attackers) caught += dropped.count(a);
  return static_cast<double>(caught) / static_cast<double>(attackers.size());
}

}  // namespace fairbfl
