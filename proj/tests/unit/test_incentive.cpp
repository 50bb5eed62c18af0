#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "fairbfl/errors.hpp"
#include "fairbfl/incentive.hpp"
#include "fairbfl/rng.hpp"
#include "oracles/reference_dbscan.hpp"

using namespace fairbfl;

namespace {

GradientVector vec(std::vector<double> values, int64_t client = 0) {
  GradientVector g;
  g.values = std::move(values);
  g.client_id = client;
  return g;
}

GradientSet set_of(std::vector<GradientVector> entries) {
  GradientSet gset;
  for (GradientVector& g : entries) {
    const int64_t id = g.client_id;
    gset.entries.emplace(id, std::move(g));
  }
  return gset;
}

bool same_clustering(const Clustering& got, const oracle::RefClustering& want) {
  if (got.noise != want.noise) return false;
  if (got.clusters.size() != want.clusters.size()) return false;
  for (size_t c = 0; c < got.clusters.size(); ++c) {
    if (got.clusters[c] != want.clusters[c]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("two separated blobs form two clusters") {
  std::vector<GradientVector> pts;
  for (int i = 0; i < 4; ++i) {
    pts.push_back(vec({0.0 + 0.1 * i, 0.0 + 0.05 * i}));
  }
  for (int i = 0; i < 4; ++i) {
    pts.push_back(vec({10.0 + 0.1 * i, 10.0 - 0.05 * i}));
  }
  ClusterParams params{1.0, 2, ClusterMetric::euclidean};
  const Clustering got = cluster(pts, params);
  REQUIRE(got.clusters.size() == 2);
  CHECK(got.clusters[0] == std::vector<int>{0, 1, 2, 3});
  CHECK(got.clusters[1] == std::vector<int>{4, 5, 6, 7});
  CHECK(got.noise.empty());
}

TEST_CASE("identical points form a single cluster") {
  std::vector<GradientVector> pts(5, vec({1.0, 2.0}));
  const Clustering got = cluster(pts, {0.25, 2, ClusterMetric::cosine});
  REQUIRE(got.clusters.size() == 1);
  CHECK(got.clusters[0] == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(got.noise.empty());
}

TEST_CASE("min_pts beyond the point count marks everything noise") {
  std::vector<GradientVector> pts(4, vec({1.0, 2.0}));
  const Clustering got = cluster(pts, {0.25, 5, ClusterMetric::cosine});
  CHECK(got.clusters.empty());
  CHECK(got.noise == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("dimension mismatches are rejected") {
  CHECK_THROWS_AS(cluster({vec({1.0, 2.0}), vec({1.0})}, ClusterParams{}),
                  ShapeError);
}

TEST_CASE("clustering matches the brute-force reference on random fixtures") {
  Rng rng(20260816);
  for (int fixture = 0; fixture < 100; ++fixture) {
    const int n = 1 + static_cast<int>(rng.next_below(50));
    const size_t dim = 2 + rng.next_below(6);
    const int blobs = 1 + static_cast<int>(rng.next_below(4));
    std::vector<std::vector<double>> centers(static_cast<size_t>(blobs),
                                             std::vector<double>(dim));
    for (auto& c : centers) {
      for (double& x : c) x = 4.0 * rng.normal();
    }
    std::vector<GradientVector> pts;
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < n; ++i) {
      const auto& c = centers[rng.next_below(static_cast<uint64_t>(blobs))];
      std::vector<double> p(dim);
      for (size_t f = 0; f < dim; ++f) p[f] = c[f] + 0.3 * rng.normal();
      if (rng.next_below(20) == 0) p.assign(dim, 0.0);  // occasional zero vector
      raw.push_back(p);
      pts.push_back(vec(std::move(p), i));
    }
    const bool cosine = rng.next_below(2) == 0;
    ClusterParams params;
    params.metric = cosine ? ClusterMetric::cosine : ClusterMetric::euclidean;
    params.eps = cosine ? 0.05 + 0.85 * rng.next_double()
                        : 0.2 + 2.8 * rng.next_double();
    params.min_pts = 1 + static_cast<int>(rng.next_below(5));

    const Clustering got = cluster(pts, params);
    const auto want =
        oracle::reference_dbscan(raw, params.eps, params.min_pts, cosine);
    CHECK(same_clustering(got, want));
  }
}

TEST_CASE("a negated scaled attacker is dropped at full detection") {
  // nine near-identical honest gradients; the attacker uploads -5x their mean
  GradientSet gset;
  std::vector<double> mean(2, 0.0);
  for (int i = 0; i < 9; ++i) {
    const std::vector<double> h = {1.0 + 0.001 * i, 0.5 - 0.001 * i};
    mean[0] += h[0];
    mean[1] += h[1];
    gset.entries.emplace(i + 1, vec(h, i + 1));
  }
  mean[0] /= 9.0;
  mean[1] /= 9.0;
  gset.entries.emplace(0, vec({-5.0 * mean[0], -5.0 * mean[1]}, 0));
  gset.global = simple_average(gset);

  const auto [report, updated] =
      identify_contributions(gset, {0.25, 2, ClusterMetric::cosine},
                             Strategy::discard, 1.0);
  CHECK(report.labels.at(0) == ContributionLabel::low);
  for (int i = 1; i <= 9; ++i) CHECK(report.labels.at(i) == ContributionLabel::high);
  CHECK(report.dropped == std::set<int64_t>{0});
  CHECK(updated.entries.count(0) == 0);
  CHECK(updated.entries.size() == 9);
  CHECK(detection_rate({0}, report.dropped) == 1.0);
}

TEST_CASE("hand-computed three-vector contribution fixture") {
  // entries h1=(3,1), h2=(0,1), forged f=(-1,-1); global = mean = (2/3, 1/3).
  // Cosine distances to the global direction (2,1):
  //   theta_h1 = 1 - 7/(5*sqrt(2)),  theta_h2 = 1 - 1/sqrt(5),  theta_f = 2.
  // h1-h2 distance is 1 - 1/sqrt(10) ~= 0.684, so eps 0.7 groups h1, h2 and
  // the global while f (~1.9 from everything) stays noise.
  GradientSet gset = set_of({vec({3.0, 1.0}, 1), vec({0.0, 1.0}, 2),
                             vec({-1.0, -1.0}, 5)});
  gset.global = simple_average(gset);
  REQUIRE(gset.global->values[0] == doctest::Approx(2.0 / 3.0));

  const auto [report, updated] = identify_contributions(
      gset, {0.7, 2, ClusterMetric::cosine}, Strategy::discard, 1.0);

  CHECK(report.labels.at(1) == ContributionLabel::high);
  CHECK(report.labels.at(2) == ContributionLabel::high);
  CHECK(report.labels.at(5) == ContributionLabel::low);
  CHECK(report.dropped == std::set<int64_t>{5});
  CHECK(!report.degenerate);

  const double t1 = 1.0 - 7.0 / (5.0 * std::sqrt(2.0));
  const double t2 = 1.0 - 1.0 / std::sqrt(5.0);
  CHECK(std::abs(report.thetas.at(1) - t1) <= 1e-12);
  CHECK(std::abs(report.thetas.at(2) - t2) <= 1e-12);
  REQUIRE(report.rewards.size() == 2);
  CHECK(report.rewards[0].client == 1);
  CHECK(std::abs(report.rewards[0].amount - t1 / (t1 + t2)) <= 1e-12);
  CHECK(report.rewards[1].client == 2);
  CHECK(std::abs(report.rewards[1].amount - t2 / (t1 + t2)) <= 1e-12);
  CHECK(report.rewards[0].amount + report.rewards[1].amount ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("keep strategy labels without removing anyone") {
  GradientSet gset = set_of({vec({3.0, 1.0}, 1), vec({0.0, 1.0}, 2),
                             vec({-1.0, -1.0}, 5)});
  gset.global = simple_average(gset);
  const auto [report, updated] = identify_contributions(
      gset, {0.7, 2, ClusterMetric::cosine}, Strategy::keep, 1.0);
  CHECK(report.labels.at(5) == ContributionLabel::low);
  CHECK(report.dropped.empty());
  CHECK(updated.entries.size() == 3);
  CHECK(updated.entries.count(5) == 1);
}

TEST_CASE("identical uploads fall back to an equal split") {
  // axis-aligned vectors so the cosine distances are exactly zero
  GradientSet gset;
  for (int i = 0; i < 4; ++i) gset.entries.emplace(i, vec({1.0, 0.0}, i));
  gset.global = simple_average(gset);
  const auto [report, updated] = identify_contributions(
      gset, {0.25, 2, ClusterMetric::cosine}, Strategy::discard, 2.0);
  CHECK(report.zero_theta_fallback);
  CHECK(report.dropped.empty());
  REQUIRE(report.rewards.size() == 4);
  for (const RewardEntry& r : report.rewards) {
    CHECK(r.amount == doctest::Approx(0.5).epsilon(1e-12));  // base 2 over 4
  }
}

TEST_CASE("a global landing in noise degenerates to all-high") {
  // three mutually distant directions, min_pts 3: nothing is core
  GradientSet gset = set_of({vec({1.0, 0.0}, 1), vec({0.0, 1.0}, 2),
                             vec({-1.0, 0.0}, 3)});
  gset.global = vec({0.5, 0.5}, kGlobalClient);
  const auto [report, updated] = identify_contributions(
      gset, {0.05, 3, ClusterMetric::cosine}, Strategy::discard, 1.0);
  CHECK(report.degenerate);
  CHECK(report.dropped.empty());
  CHECK(report.labels.size() == 3);
  for (const auto& [id, label] : report.labels) {
    CHECK(label == ContributionLabel::high);
  }
  CHECK(updated.entries.size() == 3);
}

TEST_CASE("missing global or empty entries are protocol errors") {
  GradientSet no_global = set_of({vec({1.0}, 1)});
  CHECK_THROWS_AS(
      identify_contributions(no_global, ClusterParams{}, Strategy::keep, 1.0),
      ProtocolViolation);
  GradientSet empty;
  empty.global = vec({1.0}, kGlobalClient);
  CHECK_THROWS_AS(
      identify_contributions(empty, ClusterParams{}, Strategy::keep, 1.0),
      EmptyAggregation);
}

TEST_CASE("simple_average covers the arithmetic examples") {
  GradientSet single = set_of({vec({4.0, -2.0}, 3)});
  CHECK(simple_average(single).values == std::vector<double>{4.0, -2.0});

  GradientSet cancel = set_of({vec({1.0, -3.0}, 1), vec({-1.0, 3.0}, 2)});
  CHECK(simple_average(cancel).values == std::vector<double>{0.0, 0.0});

  GradientSet pair = set_of({vec({1.0, 2.0}, 1), vec({3.0, 4.0}, 2)});
  CHECK(simple_average(pair).values == std::vector<double>{2.0, 3.0});

  GradientSet empty;
  CHECK_THROWS_AS(simple_average(empty), EmptyAggregation);

  GradientSet ragged = set_of({vec({1.0, 2.0}, 1), vec({1.0}, 2)});
  CHECK_THROWS_AS(simple_average(ragged), ShapeError);
}

TEST_CASE("fair_aggregate with uniform thetas equals the simple average") {
  GradientSet gset = set_of({vec({0.5, -1.0, 2.0}, 1), vec({1.5, 0.0, -0.5}, 2),
                             vec({-0.25, 0.75, 1.0}, 4)});
  const GradientVector avg = simple_average(gset);
  const GradientVector fair =
      fair_aggregate(gset, {{1, 0.4}, {2, 0.4}, {4, 0.4}});
  for (size_t i = 0; i < avg.values.size(); ++i) {
    CHECK(std::abs(fair.values[i] - avg.values[i]) <= 1e-12);
  }
}

TEST_CASE("fair_aggregate weights unit basis vectors by theta") {
  GradientSet gset = set_of({vec({1.0, 0.0, 0.0}, 1), vec({0.0, 1.0, 0.0}, 2),
                             vec({0.0, 0.0, 1.0}, 3)});
  const GradientVector out =
      fair_aggregate(gset, {{1, 0.1}, {2, 0.2}, {3, 0.7}});
  CHECK(out.values[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(out.values[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out.values[2] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("fair_aggregate matches a direct summation oracle") {
  Rng rng(77);
  GradientSet gset;
  std::map<int64_t, double> thetas;
  const size_t dim = 6;
  for (int64_t c = 0; c < 5; ++c) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    gset.entries.emplace(c, vec(std::move(v), c));
    thetas[c] = 0.1 + rng.next_double();
  }
  double total = 0.0;
  for (const auto& [c, t] : thetas) total += t;
  std::vector<double> expected(dim, 0.0);
  for (const auto& [c, g] : gset.entries) {
    for (size_t i = 0; i < dim; ++i) {
      expected[i] += thetas.at(c) / total * g.values[i];
    }
  }
  const GradientVector out = fair_aggregate(gset, thetas);
  for (size_t i = 0; i < dim; ++i) {
    CHECK(std::abs(out.values[i] - expected[i]) <= 1e-12);
  }
}

TEST_CASE("fair_aggregate scale knob multiplies the weighted mean") {
  GradientSet gset = set_of({vec({1.0, 2.0}, 1), vec({3.0, 4.0}, 2)});
  const GradientVector base = fair_aggregate(gset, {{1, 0.5}, {2, 0.5}});
  const GradientVector scaled = fair_aggregate(gset, {{1, 0.5}, {2, 0.5}}, 10.0);
  CHECK(scaled.values[0] == doctest::Approx(10.0 * base.values[0]));
  CHECK(scaled.values[1] == doctest::Approx(10.0 * base.values[1]));
}

TEST_CASE("all-zero thetas fall back to the simple average") {
  GradientSet gset = set_of({vec({2.0, 0.0}, 1), vec({0.0, 2.0}, 2)});
  bool fell_back = false;
  const GradientVector out = fair_aggregate(gset, {{1, 0.0}, {2, 0.0}}, 1.0,
                                            &fell_back);
  CHECK(fell_back);
  CHECK(out.values == simple_average(gset).values);
}

TEST_CASE("thetas must cover the surviving entries exactly") {
  GradientSet gset = set_of({vec({1.0}, 1), vec({2.0}, 2)});
  CHECK_THROWS_AS(fair_aggregate(gset, {{1, 0.5}}), ShapeError);
  CHECK_THROWS_AS(fair_aggregate(gset, {{1, 0.5}, {2, 0.5}, {3, 0.5}}),
                  ShapeError);
}

TEST_CASE("detection_rate reproduces the published rounds") {
  CHECK(detection_rate({3, 7}, {2, 4, 5, 6}) == 0.0);
  CHECK(detection_rate({3, 6, 2}, {2, 6}) == doctest::Approx(2.0 / 3.0));
  CHECK(detection_rate({0}, {0}) == 1.0);
  CHECK(detection_rate({1, 2}, {}) == 0.0);
  CHECK_THROWS_AS(detection_rate({}, {1}), EmptyData);
}

TEST_CASE("reward lists stay non-negative and sum to base") {
  Rng rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    GradientSet gset;
    const int n = 3 + static_cast<int>(rng.next_below(8));
    for (int c = 0; c < n; ++c) {
      std::vector<double> v(3);
      for (double& x : v) x = rng.normal();
      gset.entries.emplace(c, vec(std::move(v), c));
    }
    gset.global = simple_average(gset);
    const double base = 0.5 + rng.next_double() * 3.0;
    const auto [report, updated] = identify_contributions(
        gset, {0.6, 2, ClusterMetric::cosine}, Strategy::keep, base);
    double sum = 0.0;
    for (const RewardEntry& r : report.rewards) {
      CHECK(r.amount >= 0.0);
      sum += r.amount;
    }
    if (!report.rewards.empty()) {
      CHECK(sum == doctest::Approx(base).epsilon(1e-9));
    }
  }
}
