#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fairbfl {

struct DataSet {
  std::vector<double> features;  // row-major, size() * dim entries
  std::vector<int> labels;
  size_t dim = 0;
  int class_count = 0;

  size_t size() const { return labels.size(); }
  std::span<const double> sample(size_t i) const {
    return {features.data() + i * dim, dim};
  }
};

struct DataShard {
  int64_t owner = 0;
  std::vector<size_t> indices;
};

enum class PartitionMode { iid, noniid };

DataSet load_idx(const std::string& images_path, const std::string& labels_path);

DataSet synth_classification(int n_samples, int n_features, int class_count,
                             double separation, uint64_t seed);

std::vector<DataShard> partition(const DataSet& ds, int n_clients, PartitionMode mode,
                                 int noniid_shards_per_client, uint64_t seed);

// Relabels each sample of the shard with the given probability to a uniformly
// random different class. Shards are disjoint, so this only affects the owner.
void corrupt_labels(DataSet& ds, const DataShard& shard, double rate, uint64_t seed);

}  // namespace fairbfl
