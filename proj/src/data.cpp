#include "fairbfl/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fairbfl/errors.hpp"
#include "fairbfl/rng.hpp"

namespace fairbfl {

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

uint32_t be32(const std::vector<uint8_t>& buf, size_t offset, const std::string& path) {
  if (offset + 4 > buf.size()) {
    throw FormatError(path + ": truncated at byte offset " + std::to_string(offset));
  }
  return (static_cast<uint32_t>(buf[offset]) << 24) |
         (static_cast<uint32_t>(buf[offset + 1]) << 16) |
         (static_cast<uint32_t>(buf[offset + 2]) << 8) |
         static_cast<uint32_t>(buf[offset + 3]);
}

}  // namespace

DataSet load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  const uint32_t img_magic = be32(img, 0, images_path);
  if (img_magic != 0x00000803) {
    throw FormatError(images_path + ": bad magic at byte offset 0 (expected 0x00000803)");
  }
  const uint32_t n_images = be32(img, 4, images_path);
  const uint32_t rows = be32(img, 8, images_path);
  const uint32_t cols = be32(img, 12, images_path);
  const size_t pixels = static_cast<size_t>(rows) * cols;
  if (img.size() != 16 + static_cast<size_t>(n_images) * pixels) {
    throw FormatError(images_path + ": truncated at byte offset " +
                      std::to_string(img.size()) + " (expected " +
                      std::to_string(16 + static_cast<size_t>(n_images) * pixels) +
                      " bytes)");
  }

  const uint32_t lab_magic = be32(lab, 0, labels_path);
  if (lab_magic != 0x00000801) {
    throw FormatError(labels_path + ": bad magic at byte offset 0 (expected 0x00000801)");
  }
  const uint32_t n_labels = be32(lab, 4, labels_path);
  if (lab.size() != 8 + static_cast<size_t>(n_labels)) {
    throw FormatError(labels_path + ": truncated at byte offset " +
                      std::to_string(lab.size()));
  }
  if (n_labels != n_images) {
    throw FormatError(labels_path + ": label count " + std::to_string(n_labels) +
                      " at byte offset 4 does not match image count " +
                      std::to_string(n_images));
  }

  DataSet ds;
  ds.dim = pixels;
  ds.features.resize(static_cast<size_t>(n_images) * pixels);
  ds.labels.resize(n_images);
  int max_label = 0;
  for (uint32_t i = 0; i < n_images; ++i) {
    for (size_t p = 0; p < pixels; ++p) {
      ds.features[i * pixels + p] = img[16 + i * pixels + p] / 255.0;
    }
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.class_count = max_label + 1;
  return ds;
}

DataSet synth_classification(int n_samples, int n_features, int class_count,
                             double separation, uint64_t seed) {
  if (n_samples <= 0 || n_features <= 0 || class_count <= 0) {
    throw FormatError("synth_classification: counts must be positive");
  }
  Rng rng(derive_seed(seed, "synth"));

  // One Gaussian centroid per class, scaled by the separation knob; samples
  // get unit isotropic noise around their class centroid.
  std::vector<double> centroids(static_cast<size_t>(class_count) * n_features);
  for (double& c : centroids) c = separation * rng.normal();

  DataSet ds;
  ds.dim = static_cast<size_t>(n_features);
  ds.class_count = class_count;
  ds.features.resize(static_cast<size_t>(n_samples) * n_features);
  ds.labels.resize(static_cast<size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const int label = i % class_count;
    ds.labels[i] = label;
    for (int f = 0; f < n_features; ++f) {
      ds.features[static_cast<size_t>(i) * n_features + f] =
          centroids[static_cast<size_t>(label) * n_features + f] + rng.normal();
    }
  }
  return ds;
}

std::vector<DataShard> partition(const DataSet& ds, int n_clients, PartitionMode mode,
                                 int noniid_shards_per_client, uint64_t seed) {
  if (n_clients < 1) throw PartitionError("n_clients must be at least 1");
  const size_t n = ds.size();
  if (n < static_cast<size_t>(n_clients)) {
    throw PartitionError("dataset of " + std::to_string(n) +
                         " samples cannot cover " + std::to_string(n_clients) +
                         " clients");
  }

  std::vector<DataShard> shards(static_cast<size_t>(n_clients));
  for (int c = 0; c < n_clients; ++c) shards[c].owner = c;

  auto slice_evenly = [n](size_t parts, size_t part,
                          const std::vector<size_t>& order) {
    // part sizes differ by at most one; remainders go to the earliest parts
    const size_t base = n / parts;
    const size_t extra = n % parts;
    const size_t begin = part * base + std::min(part, extra);
    const size_t len = base + (part < extra ? 1 : 0);
    return std::vector<size_t>(order.begin() + begin, order.begin() + begin + len);
  };

  if (mode == PartitionMode::iid) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "partition-iid"));
    rng.shuffle(order);
    for (int c = 0; c < n_clients; ++c) {
      shards[c].indices = slice_evenly(static_cast<size_t>(n_clients),
                                       static_cast<size_t>(c), order);
      std::sort(shards[c].indices.begin(), shards[c].indices.end());
    }
    return shards;
  }

  if (noniid_shards_per_client < 1) {
    throw PartitionError("noniid_shards_per_client must be at least 1");
  }
  const size_t total_slices =
      static_cast<size_t>(n_clients) * noniid_shards_per_client;
  if (n < total_slices) {
    throw PartitionError("dataset too small for " + std::to_string(total_slices) +
                         " label-sorted slices");
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&ds](size_t a, size_t b) { return ds.labels[a] < ds.labels[b]; });

  std::vector<size_t> slice_ids(total_slices);
  std::iota(slice_ids.begin(), slice_ids.end(), 0);
  Rng rng(derive_seed(seed, "partition-noniid"));
  rng.shuffle(slice_ids);

  for (int c = 0; c < n_clients; ++c) {
    for (int s = 0; s < noniid_shards_per_client; ++s) {
      const size_t slice = slice_ids[static_cast<size_t>(c) * noniid_shards_per_client + s];
      auto part = slice_evenly(total_slices, slice, order);
      shards[c].indices.insert(shards[c].indices.end(), part.begin(), part.end());
    }
    std::sort(shards[c].indices.begin(), shards[c].indices.end());
  }
  return shards;
}

void corrupt_labels(DataSet& ds, const DataShard& shard, double rate, uint64_t seed) {
  if (ds.class_count < 2 || rate <= 0.0) return;
  Rng rng(derive_seed(seed, "label-noise", static_cast<uint64_t>(shard.owner)));
  for (const size_t i : shard.indices) {
    if (rng.next_double() >= rate) continue;
    const int shift = 1 + static_cast<int>(rng.next_below(
                              static_cast<uint64_t>(ds.class_count - 1)));
    ds.labels[i] = (ds.labels[i] + shift) % ds.class_count;
  }
}

}  // namespace fairbfl
