#pragma once

#include <string>
#include <vector>

#include "priorforge/tensor.hpp"

namespace pf {

// Immutable after load. Images are N x C x 32 x 32 in [-1, 1]; labels, when
// present, lie in [0, num_classes).
struct DatasetHandle {
  Tensor images;
  std::vector<int> labels;  // empty when unlabeled
  int num_classes = 0;
  std::string name;

  int64_t size() const { return images.numel() ? images.dim(0) : 0; }
  bool labeled() const { return !labels.empty(); }
};

// IDX pair (train-images-idx3-ubyte / train-labels-idx1-ubyte) under `dir`.
// 28x28 inputs are zero-padded by 2 on each side and mapped by x/127.5 - 1.
DatasetHandle load_mnist(const std::string& dir);
DatasetHandle load_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: 3073-byte records, channel-planar pixels. `path`
// is one .bin file or a directory of data_batch_*.bin (+ test_batch.bin).
DatasetHandle load_cifar10(const std::string& path);

// Directory of PNG files; per-subdirectory class labels when subdirectories
// exist. Center-crop to square, bilinear-resize to 32x32.
DatasetHandle load_image_folder(const std::string& path, int channels);

// Procedural 1 x 32 x 32 corpus: class-dependent geometric primitives
// (bars / disks / crosses / checkers), deterministic per seed, labels
// assigned round-robin.
DatasetHandle synthetic_dataset(int64_t n, int num_classes, uint64_t seed);

// Seeded shuffle per (seed, epoch); the final partial batch is dropped.
std::vector<std::vector<int>> epoch_batches(int64_t n, int batch_size, uint64_t seed, int epoch);

Tensor gather_images(const DatasetHandle& data, const std::vector<int>& idx);
std::vector<int> gather_labels(const DatasetHandle& data, const std::vector<int>& idx);

Tensor one_hot(const std::vector<int>& labels, int num_classes);

// Writes a labeled 28x28 grayscale corpus as an IDX pair (MNIST wire
// format); used by tooling and tests to exercise the loader end to end.
void write_idx_pair(const std::string& images_path, const std::string& labels_path,
                    const std::vector<uint8_t>& pixels28, const std::vector<uint8_t>& labels);

}  // namespace pf
