#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fairbfl/ledger.hpp"
#include "fairbfl/model.hpp"

namespace fairbfl {

// Canonical client-id order (std::map) so every miner computing over the
// same uploads walks entries identically.
struct GradientSet {
  int64_t round = 0;
  std::map<int64_t, GradientVector> entries;
  std::optional<GradientVector> global;
};

enum class ClusterMetric { cosine, euclidean };

struct ClusterParams {
  double eps = 0.25;
  int min_pts = 2;
  ClusterMetric metric = ClusterMetric::cosine;
};

struct Clustering {
  std::vector<std::vector<int>> clusters;  // member indices, ascending
  std::vector<int> noise;
};

enum class Strategy { keep, discard };

enum class ContributionLabel { high, low };

struct ContributionReport {
  std::map<int64_t, ContributionLabel> labels;
  std::map<int64_t, double> thetas;  // high-contribution clients only
  std::vector<RewardEntry> rewards;  // high clients, ascending id
  std::set<int64_t> dropped;
  bool degenerate = false;           // global in noise or single all-in cluster
  bool zero_theta_fallback = false;  // all thetas zero, rewards split equally
};

Clustering cluster(const std::vector<GradientVector>& gradients,
                   const ClusterParams& params);

// Algorithm: cluster locals plus the global, label the global's cluster high,
// score high clients by cosine distance to the global, split base by theta.
// Under discard, low clients leave the returned set and land in dropped.
std::pair<ContributionReport, GradientSet> identify_contributions(
    const GradientSet& gset, const ClusterParams& params, Strategy strategy,
    double base);

GradientVector simple_average(const GradientSet& gset);

// Weights every surviving entry by its distance to the reference gradient,
// with zero vectors scored maximally distant.
std::map<int64_t, double> aggregation_thetas(const GradientSet& gset,
                                             const GradientVector& reference);

// Normalized theta-weighted mean (sum of (theta_i / sum theta) * w_i), then
// scaled; scale 1/lambda reproduces the literal printed formula. All-zero
// thetas fall back to the simple average.
GradientVector fair_aggregate(const GradientSet& gset,
                              const std::map<int64_t, double>& thetas,
                              double scale = 1.0,
                              bool* zero_theta_fallback = nullptr);

double detection_rate(const std::set<int64_t>& attackers,
                      const std::set<int64_t>& dropped);

}  // namespace fairbfl
