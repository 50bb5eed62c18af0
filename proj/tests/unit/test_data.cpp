#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "fairbfl/data.hpp"
#include "fairbfl/errors.hpp"

using namespace fairbfl;

namespace {

// Fixture bytes are assembled by hand from the IDX wire format (big-endian
// u32 headers, u8 payload) so the loader is checked against the format spec
// rather than against itself.
void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

std::string write_temp(const std::string& name, const std::vector<uint8_t>& bytes) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  return path.string();
}

std::vector<uint8_t> idx_images(uint32_t count, const std::vector<uint8_t>& pixels) {
  std::vector<uint8_t> bytes;
  put_be32(bytes, 0x00000803);
  put_be32(bytes, count);
  put_be32(bytes, 2);  // rows
  put_be32(bytes, 2);  // cols
  bytes.insert(bytes.end(), pixels.begin(), pixels.end());
  return bytes;
}

std::vector<uint8_t> idx_labels(uint32_t count, const std::vector<uint8_t>& labels) {
  std::vector<uint8_t> bytes;
  put_be32(bytes, 0x00000801);
  put_be32(bytes, count);
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  return bytes;
}

// Nearest-centroid classification, the simplest rule that benefits from
// class separation. Used as an independent difficulty probe for synth data.
double nearest_centroid_accuracy(const DataSet& ds) {
  std::vector<std::vector<double>> centroids(
      static_cast<size_t>(ds.class_count), std::vector<double>(ds.dim, 0.0));
  std::vector<int> counts(static_cast<size_t>(ds.class_count), 0);
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.sample(i);
    auto& c = centroids[static_cast<size_t>(ds.labels[i])];
    for (size_t f = 0; f < ds.dim; ++f) c[f] += x[f];
    ++counts[static_cast<size_t>(ds.labels[i])];
  }
  for (int k = 0; k < ds.class_count; ++k) {
    for (double& v : centroids[static_cast<size_t>(k)]) {
      v /= std::max(1, counts[static_cast<size_t>(k)]);
    }
  }
  int hit = 0;
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.sample(i);
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < ds.class_count; ++k) {
      double d = 0.0;
      for (size_t f = 0; f < ds.dim; ++f) {
        const double diff = x[f] - centroids[static_cast<size_t>(k)][f];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best == ds.labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(ds.size());
}

std::map<int, double> class_proportions(const DataSet& ds,
                                        const std::vector<size_t>& indices) {
  std::map<int, double> prop;
  for (const size_t i : indices) prop[ds.labels[i]] += 1.0;
  for (auto& [label, count] : prop) count /= static_cast<double>(indices.size());
  return prop;
}

}  // namespace

TEST_CASE("load_idx reads the four-sample fixture") {
  const std::vector<uint8_t> pixels = {0,   51,  102, 153,   // sample 0
                                       255, 204, 153, 102,   // sample 1
                                       1,   2,   3,   4,     // sample 2
                                       250, 0,   250, 0};    // sample 3
  const auto img_path = write_temp("fixture-images.idx", idx_images(4, pixels));
  const auto lab_path = write_temp("fixture-labels.idx", idx_labels(4, {0, 1, 2, 1}));

  const DataSet ds = load_idx(img_path, lab_path);
  CHECK(ds.size() == 4);
  CHECK(ds.dim == 4);
  CHECK(ds.class_count == 3);
  CHECK(ds.labels == std::vector<int>{0, 1, 2, 1});
  CHECK(ds.features[0] == 0.0);
  CHECK(ds.features[1] == doctest::Approx(51.0 / 255.0));
  CHECK(ds.features[4] == 1.0);
  CHECK(ds.sample(3)[0] == doctest::Approx(250.0 / 255.0));
}

TEST_CASE("load_idx rejects malformed inputs") {
  const std::vector<uint8_t> pixels(16, 7);
  const auto img_path = write_temp("ok-images.idx", idx_images(4, pixels));

  SUBCASE("label count mismatch") {
    const auto lab_path = write_temp("short-labels.idx", idx_labels(3, {0, 1, 2}));
    CHECK_THROWS_AS(load_idx(img_path, lab_path), FormatError);
  }
  SUBCASE("empty file") {
    const auto empty_path = write_temp("empty.idx", {});
    CHECK_THROWS_AS(load_idx(empty_path, empty_path), FormatError);
  }
  SUBCASE("bad magic") {
    auto bad = idx_images(4, pixels);
    bad[3] = 0x99;
    const auto bad_path = write_temp("bad-magic.idx", bad);
    const auto lab_path = write_temp("labels4.idx", idx_labels(4, {0, 0, 0, 0}));
    CHECK_THROWS_AS(load_idx(bad_path, lab_path), FormatError);
  }
  SUBCASE("truncated pixel payload") {
    std::vector<uint8_t> truncated(16, 1);
    truncated.pop_back();
    const auto trunc_path = write_temp("trunc-images.idx", idx_images(4, truncated));
    const auto lab_path = write_temp("labels4b.idx", idx_labels(4, {0, 0, 0, 0}));
    CHECK_THROWS_AS(load_idx(trunc_path, lab_path), FormatError);
  }
}

TEST_CASE("synth_classification is deterministic per seed") {
  const DataSet a = synth_classification(200, 8, 4, 1.5, 99);
  const DataSet b = synth_classification(200, 8, 4, 1.5, 99);
  const DataSet c = synth_classification(200, 8, 4, 1.5, 100);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features != c.features);
}

TEST_CASE("large separation makes classes trivially separable") {
  const DataSet ds = synth_classification(2000, 10, 5, 100.0, 7);
  CHECK(nearest_centroid_accuracy(ds) >= 0.99);
}

TEST_CASE("zero separation leaves classes indistinguishable") {
  const DataSet ds = synth_classification(2000, 10, 2, 0.0, 7);
  const double acc = nearest_centroid_accuracy(ds);
  CHECK(acc < 0.65);  // chance is 0.5; train-set reuse buys only a little
}

TEST_CASE("labels cycle through every class") {
  const DataSet ds = synth_classification(10, 3, 4, 1.0, 1);
  CHECK(ds.labels == std::vector<int>{0, 1, 2, 3, 0, 1, 2, 3, 0, 1});
}

TEST_CASE("single client receives the whole dataset") {
  const DataSet ds = synth_classification(50, 4, 2, 1.0, 3);
  const auto shards = partition(ds, 1, PartitionMode::iid, 2, 5);
  REQUIRE(shards.size() == 1);
  CHECK(shards[0].owner == 0);
  CHECK(shards[0].indices.size() == 50);
}

TEST_CASE("iid partition is balanced and label-representative") {
  const DataSet ds = synth_classification(1000, 4, 10, 2.0, 11);
  const auto shards = partition(ds, 10, PartitionMode::iid, 2, 13);
  REQUIRE(shards.size() == 10);

  std::vector<size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  const auto global = class_proportions(ds, all);

  for (const auto& shard : shards) {
    CHECK(shard.indices.size() == 100);
    const auto local = class_proportions(ds, shard.indices);
    for (const auto& [label, p] : global) {
      const auto it = local.find(label);
      const double lp = it == local.end() ? 0.0 : it->second;
      CHECK(std::abs(lp - p) <= 0.10);
    }
  }
}

TEST_CASE("noniid partition skews labels per client") {
  const DataSet ds = synth_classification(1000, 4, 10, 2.0, 11);
  const auto shards = partition(ds, 10, PartitionMode::noniid, 2, 13);
  REQUIRE(shards.size() == 10);
  for (const auto& shard : shards) {
    std::set<int> labels;
    for (const size_t i : shard.indices) labels.insert(ds.labels[i]);
    // two contiguous label-sorted slices touch at most four label values
    CHECK(labels.size() <= 4);
  }
}

TEST_CASE("partitions are disjoint and cover the dataset") {
  const DataSet ds = synth_classification(600, 4, 6, 2.0, 21);
  for (const PartitionMode mode : {PartitionMode::iid, PartitionMode::noniid}) {
    const auto shards = partition(ds, 12, mode, 2, 23);
    std::set<size_t> seen;
    size_t total = 0;
    for (const auto& shard : shards) {
      CHECK(!shard.indices.empty());
      CHECK(std::is_sorted(shard.indices.begin(), shard.indices.end()));
      for (const size_t i : shard.indices) {
        CHECK(i < ds.size());
        CHECK(seen.insert(i).second);  // no index appears twice
      }
      total += shard.indices.size();
    }
    CHECK(total == ds.size());
  }
}

TEST_CASE("partition is deterministic per seed") {
  const DataSet ds = synth_classification(300, 4, 3, 2.0, 31);
  const auto a = partition(ds, 6, PartitionMode::noniid, 2, 37);
  const auto b = partition(ds, 6, PartitionMode::noniid, 2, 37);
  const auto c = partition(ds, 6, PartitionMode::noniid, 2, 38);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].indices == b[i].indices);
  bool any_differ = false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].indices != c[i].indices) any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("undersized datasets are rejected") {
  const DataSet ds = synth_classification(5, 4, 2, 1.0, 41);
  CHECK_THROWS_AS(partition(ds, 6, PartitionMode::iid, 2, 43), PartitionError);
  CHECK_THROWS_AS(partition(ds, 3, PartitionMode::noniid, 2, 43), PartitionError);
  CHECK_THROWS_AS(partition(ds, 0, PartitionMode::iid, 2, 43), PartitionError);
}

TEST_CASE("corrupt_labels flips only the shard's labels") {
  DataSet ds = synth_classification(100, 4, 5, 1.0, 51);
  const auto original = ds.labels;
  const auto shards = partition(ds, 4, PartitionMode::iid, 2, 53);

  corrupt_labels(ds, shards[1], 1.0, 57);
  for (const size_t i : shards[1].indices) {
    CHECK(ds.labels[i] != original[i]);  // rate 1 changes every label
    CHECK(ds.labels[i] >= 0);
    CHECK(ds.labels[i] < ds.class_count);
  }
  for (const auto& shard : {shards[0], shards[2], shards[3]}) {
    for (const size_t i : shard.indices) CHECK(ds.labels[i] == original[i]);
  }
}

TEST_CASE("corrupt_labels at rate zero is a no-op") {
  DataSet ds = synth_classification(60, 4, 3, 1.0, 61);
  const auto original = ds.labels;
  const auto shards = partition(ds, 2, PartitionMode::iid, 2, 63);
  corrupt_labels(ds, shards[0], 0.0, 67);
  CHECK(ds.labels == original);
}
