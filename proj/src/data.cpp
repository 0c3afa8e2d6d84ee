#include "priorforge/data.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "priorforge/errors.hpp"
#include "priorforge/image_io.hpp"
#include "priorforge/rng.hpp"

namespace fs = std::filesystem;

namespace pf {

namespace {

uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("truncated file while reading " + what);
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void write_be32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<char*>(b), 4);
}

float to_signed_unit(uint8_t v) { return static_cast<float>(v) / 127.5f - 1.0f; }

}  // namespace

DatasetHandle load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  if (!fi) throw DataError("cannot open IDX images file: " + images_path);
  if (read_be32(fi, "image magic") != 0x00000803u)
    throw DataError("bad IDX image magic in " + images_path);
  uint32_t n = read_be32(fi, "image count");
  uint32_t rows = read_be32(fi, "rows"), cols = read_be32(fi, "cols");
  if (rows != 28 || cols != 28)
    throw DataError("expected 28x28 IDX images, got " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  std::vector<uint8_t> pix(static_cast<size_t>(n) * 28 * 28);
  fi.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
  if (static_cast<size_t>(fi.gcount()) != pix.size())
    throw DataError("truncated IDX image data in " + images_path);

  std::ifstream fl(labels_path, std::ios::binary);
  if (!fl) throw DataError("cannot open IDX labels file: " + labels_path);
  if (read_be32(fl, "label magic") != 0x00000801u)
    throw DataError("bad IDX label magic in " + labels_path);
  uint32_t nl = read_be32(fl, "label count");
  if (nl != n)
    throw DataError("image/label count mismatch: " + std::to_string(n) + " vs " +
                    std::to_string(nl));
  std::vector<uint8_t> lab(n);
  fl.read(reinterpret_cast<char*>(lab.data()), n);
  if (static_cast<size_t>(fl.gcount()) != lab.size())
    throw DataError("truncated IDX label data in " + labels_path);

  DatasetHandle d;
  d.name = "mnist";
  d.num_classes = 10;
  d.images = Tensor::full({static_cast<int>(n), 1, 32, 32}, -1.0f);  // zero pixels map to -1
  d.labels.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    if (lab[i] > 9) throw DataError("IDX label out of range");
    d.labels[i] = lab[i];
    float* dst = d.images.ptr() + static_cast<int64_t>(i) * 32 * 32;
    const uint8_t* src = pix.data() + static_cast<int64_t>(i) * 28 * 28;
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) dst[(r + 2) * 32 + (c + 2)] = to_signed_unit(src[r * 28 + c]);
  }
  return d;
}

DatasetHandle load_mnist(const std::string& dir) {
  return load_idx((fs::path(dir) / "train-images-idx3-ubyte").string(),
                  (fs::path(dir) / "train-labels-idx1-ubyte").string());
}

void write_idx_pair(const std::string& images_path, const std::string& labels_path,
                    const std::vector<uint8_t>& pixels28, const std::vector<uint8_t>& labels) {
  if (pixels28.size() != labels.size() * 28 * 28)
    throw DataError("write_idx_pair: pixel/label count mismatch");
  std::ofstream fi(images_path, std::ios::binary);
  write_be32(fi, 0x00000803u);
  write_be32(fi, static_cast<uint32_t>(labels.size()));
  write_be32(fi, 28);
  write_be32(fi, 28);
  fi.write(reinterpret_cast<const char*>(pixels28.data()),
           static_cast<std::streamsize>(pixels28.size()));
  std::ofstream fl(labels_path, std::ios::binary);
  write_be32(fl, 0x00000801u);
  write_be32(fl, static_cast<uint32_t>(labels.size()));
  fl.write(reinterpret_cast<const char*>(labels.data()),
           static_cast<std::streamsize>(labels.size()));
}

namespace {

void append_cifar_file(const std::string& path, FloatVec& images,
                       std::vector<int>& labels) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open CIFAR-10 file: " + path);
  f.seekg(0, std::ios::end);
  int64_t bytes = f.tellg();
  f.seekg(0);
  constexpr int64_t kRecord = 3073;  // 1 label byte + 3 * 1024 channel-planar pixels
  if (bytes == 0 || bytes % kRecord != 0)
    throw DataError("CIFAR-10 record misalignment in " + path + " (" + std::to_string(bytes) +
                    " bytes)");
  int64_t n = bytes / kRecord;
  std::vector<uint8_t> rec(kRecord);
  for (int64_t i = 0; i < n; ++i) {
    f.read(reinterpret_cast<char*>(rec.data()), kRecord);
    if (!f) throw DataError("truncated CIFAR-10 record in " + path);
    if (rec[0] > 9) throw DataError("CIFAR-10 label out of range in " + path);
    labels.push_back(rec[0]);
    for (int64_t j = 0; j < 3072; ++j) images.push_back(to_signed_unit(rec[1 + j]));
  }
}

}  // namespace

DatasetHandle load_cifar10(const std::string& path) {
  FloatVec images;
  std::vector<int> labels;
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(path)) {
      std::string name = e.path().filename().string();
      if (name.size() > 4 && name.substr(name.size() - 4) == ".bin") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .bin files under " + path);
    for (const auto& f : files) append_cifar_file(f, images, labels);
  } else {
    append_cifar_file(path, images, labels);
  }
  DatasetHandle d;
  d.name = "cifar10";
  d.num_classes = 10;
  d.labels = std::move(labels);
  d.images = Tensor({static_cast<int>(d.labels.size()), 3, 32, 32}, std::move(images));
  return d;
}

DatasetHandle load_image_folder(const std::string& path, int channels) {
  if (!fs::is_directory(path)) throw DataError("not a directory: " + path);
  // Class subdirectories (sorted) or a flat unlabeled folder.
  std::vector<std::string> class_dirs;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_directory()) class_dirs.push_back(e.path().string());
  std::sort(class_dirs.begin(), class_dirs.end());

  std::vector<std::pair<std::string, int>> files;  // path, label
  auto collect = [&files](const std::string& dir, int label) {
    std::vector<std::string> fs_list;
    for (const auto& e : fs::directory_iterator(dir)) {
      std::string name = e.path().filename().string();
      if (name.size() > 4 && name.substr(name.size() - 4) == ".png") fs_list.push_back(e.path().string());
    }
    std::sort(fs_list.begin(), fs_list.end());
    for (auto& f : fs_list) files.emplace_back(f, label);
  };
  if (class_dirs.empty()) {
    collect(path, -1);
  } else {
    for (size_t c = 0; c < class_dirs.size(); ++c) collect(class_dirs[c], static_cast<int>(c));
  }

  FloatVec images;
  std::vector<int> labels;
  for (const auto& [file, label] : files) {
    Tensor img;  // C x H x W in [0,1]
    try {
      img = read_png(file, channels);
    } catch (const std::exception& e) {
      fprintf(stderr, "warning: skipping undecodable image %s: %s\n", file.c_str(), e.what());
      continue;
    }
    Tensor small = resize_bilinear_32(center_crop_square(img));
    for (float v : small.data) images.push_back(2.0f * v - 1.0f);
    labels.push_back(label);
  }
  if (images.empty()) throw DataError("no decodable PNG images under " + path);

  DatasetHandle d;
  d.name = "folder";
  d.images = Tensor({static_cast<int>(labels.size()), channels, 32, 32}, std::move(images));
  if (!class_dirs.empty()) {
    d.labels = std::move(labels);
    d.num_classes = static_cast<int>(class_dirs.size());
  }
  return d;
}

namespace {

// Primitive painters on a 32x32 canvas with values in [0, 1].
void paint_bar(float* img, bool vertical, int pos, int thickness) {
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      int x = vertical ? c : r;
      if (x >= pos && x < pos + thickness) img[r * 32 + c] = 1.0f;
    }
}

void paint_disk(float* img, int cy, int cx, int radius) {
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c)
      if ((r - cy) * (r - cy) + (c - cx) * (c - cx) <= radius * radius) img[r * 32 + c] = 1.0f;
}

void paint_cross(float* img, int cy, int cx, int arm, int thickness) {
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      bool in_v = std::abs(c - cx) < thickness && std::abs(r - cy) <= arm;
      bool in_h = std::abs(r - cy) < thickness && std::abs(c - cx) <= arm;
      if (in_v || in_h) img[r * 32 + c] = 1.0f;
    }
}

void paint_checker(float* img, int cell, int phase) {
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c)
      if (((r / cell) + (c / cell) + phase) % 2 == 0) img[r * 32 + c] = 1.0f;
}

}  // namespace

DatasetHandle synthetic_dataset(int64_t n, int num_classes, uint64_t seed) {
  check_shape(n >= num_classes && num_classes >= 1, "synthetic_dataset: n must cover all classes");
  Rng rng(seed);
  DatasetHandle d;
  d.name = "synthetic";
  d.num_classes = num_classes;
  d.images = Tensor({static_cast<int>(n), 1, 32, 32});
  d.labels.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    int cls = static_cast<int>(i % num_classes);  // round-robin keeps classes balanced
    d.labels[static_cast<size_t>(i)] = cls;
    std::vector<float> canvas(32 * 32, 0.0f);
    int jitter = static_cast<int>(rng.uniform_int(7)) - 3;
    switch (cls % 4) {
      case 0:
        paint_bar(canvas.data(), (cls / 4) % 2 == 0, 13 + jitter, 5);
        break;
      case 1:
        paint_disk(canvas.data(), 15 + jitter, 15 + static_cast<int>(rng.uniform_int(7)) - 3,
                   7 + (cls / 4));
        break;
      case 2:
        paint_cross(canvas.data(), 15 + jitter, 15 + static_cast<int>(rng.uniform_int(7)) - 3, 10,
                    2 + (cls / 4));
        break;
      case 3:
        paint_checker(canvas.data(), 8 - 2 * ((cls / 4) % 2), static_cast<int>(rng.uniform_int(2)));
        break;
    }
    float* dst = d.images.ptr() + i * 32 * 32;
    for (int j = 0; j < 32 * 32; ++j) dst[j] = 2.0f * canvas[static_cast<size_t>(j)] - 1.0f;
  }
  return d;
}

std::vector<std::vector<int>> epoch_batches(int64_t n, int batch_size, uint64_t seed, int epoch) {
  if (batch_size < 2) throw DataError("batch_size must be >= 2");
  if (batch_size > n) throw DataError("batch_size exceeds dataset size");
  std::vector<int> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = static_cast<int>(i);
  Rng rng(seed * 0x9E3779B97F4A7C15ull + static_cast<uint64_t>(epoch) + 1);
  rng.shuffle(order);
  std::vector<std::vector<int>> batches;
  for (int64_t start = 0; start + batch_size <= n; start += batch_size)
    batches.emplace_back(order.begin() + start, order.begin() + start + batch_size);
  return batches;
}

Tensor gather_images(const DatasetHandle& data, const std::vector<int>& idx) {
  int C = data.images.dim(1);
  int64_t stride = static_cast<int64_t>(C) * 32 * 32;
  Tensor out({static_cast<int>(idx.size()), C, 32, 32});
  for (size_t i = 0; i < idx.size(); ++i)
    std::copy_n(data.images.ptr() + idx[i] * stride, stride, out.ptr() + static_cast<int64_t>(i) * stride);
  return out;
}

std::vector<int> gather_labels(const DatasetHandle& data, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(data.labels[static_cast<size_t>(i)]);
  return out;
}

Tensor one_hot(const std::vector<int>& labels, int num_classes) {
  Tensor t({static_cast<int>(labels.size()), num_classes});
  for (size_t i = 0; i < labels.size(); ++i) {
    check_shape(labels[i] >= 0 && labels[i] < num_classes, "one_hot: label out of range");
    t.data[static_cast<int64_t>(i) * num_classes + labels[i]] = 1.0f;
  }
  return t;
}

}  // namespace pf
