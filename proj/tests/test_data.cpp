#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "priorforge/data.hpp"
#include "priorforge/errors.hpp"
#include "priorforge/image_io.hpp"
#include "test_util.hpp"

using namespace pf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("pf_data_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_sample_idx(const fs::path& dir, int n) {
  std::vector<uint8_t> pix(static_cast<size_t>(n) * 28 * 28, 0);
  std::vector<uint8_t> lab(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    lab[static_cast<size_t>(i)] = static_cast<uint8_t>(i % 10);
    // one marked pixel per image: value 255 at (i%28, i%28)
    pix[static_cast<size_t>(i) * 28 * 28 + (i % 28) * 28 + (i % 28)] = 255;
  }
  write_idx_pair((dir / "train-images-idx3-ubyte").string(),
                 (dir / "train-labels-idx1-ubyte").string(), pix, lab);
}

}  // namespace

TEST_CASE("IDX round trip: count, padding, affine pixel map") {
  fs::path dir = temp_dir("idx");
  write_sample_idx(dir, 12);
  DatasetHandle d = load_mnist(dir.string());
  CHECK(d.size() == 12);
  CHECK(d.images.shape == std::vector<int>{12, 1, 32, 32});
  CHECK(d.num_classes == 10);
  for (int i = 0; i < 12; ++i) CHECK(d.labels[static_cast<size_t>(i)] == i % 10);

  const float* img0 = d.images.ptr();
  // zero-pad border maps to exactly -1
  for (int c = 0; c < 32; ++c) {
    CHECK(img0[c] == -1.0f);
    CHECK(img0[31 * 32 + c] == -1.0f);
  }
  // the marked 255 pixel of image 0 sits at (0,0) -> padded (2,2), maps to +1
  CHECK(img0[2 * 32 + 2] == doctest::Approx(1.0f));
  // every other pixel is -1 (source zero)
  CHECK(img0[2 * 32 + 3] == -1.0f);
  for (float v : d.images.data) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("IDX loader rejects corruption") {
  fs::path dir = temp_dir("idxbad");
  write_sample_idx(dir, 4);

  SUBCASE("bad image magic") {
    std::fstream f(dir / "train-images-idx3-ubyte",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.put('\x42');
    f.close();
    CHECK_THROWS_AS(load_mnist(dir.string()), DataError);
  }
  SUBCASE("bad label magic") {
    std::fstream f(dir / "train-labels-idx1-ubyte",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.put('\x42');
    f.close();
    CHECK_THROWS_AS(load_mnist(dir.string()), DataError);
  }
  SUBCASE("truncated image payload") {
    fs::resize_file(dir / "train-images-idx3-ubyte", 16 + 3 * 28 * 28);
    CHECK_THROWS_AS(load_mnist(dir.string()), DataError);
  }
  SUBCASE("count mismatch") {
    std::vector<uint8_t> pix(2 * 28 * 28, 0);
    std::vector<uint8_t> lab(2, 0);
    write_idx_pair((dir / "i2").string(), (dir / "l2").string(), pix, lab);
    CHECK_THROWS_AS(load_idx((dir / "train-images-idx3-ubyte").string(), (dir / "l2").string()),
                    DataError);
  }
  SUBCASE("missing files") {
    CHECK_THROWS_AS(load_mnist((dir / "nope").string()), DataError);
  }
}

TEST_CASE("CIFAR-10 loader: records, channels, corruption") {
  fs::path dir = temp_dir("cifar");
  {
    std::ofstream f(dir / "data_batch_1.bin", std::ios::binary);
    for (int rec = 0; rec < 3; ++rec) {
      f.put(static_cast<char>(rec + 1));  // label
      for (int j = 0; j < 3072; ++j)
        f.put(static_cast<char>(static_cast<unsigned char>(j == 0 ? 255 : rec)));
    }
  }
  DatasetHandle d = load_cifar10((dir / "data_batch_1.bin").string());
  CHECK(d.size() == 3);
  CHECK(d.images.shape == std::vector<int>{3, 3, 32, 32});
  CHECK(d.labels == std::vector<int>{1, 2, 3});
  CHECK(d.images.data[0] == doctest::Approx(1.0f));   // 255 -> +1
  CHECK(d.images.data[1] == doctest::Approx(-1.0f));  // 0 -> -1
  for (float v : d.images.data) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }

  // directory form finds the .bin file
  CHECK(load_cifar10(dir.string()).size() == 3);

  SUBCASE("misaligned record length") {
    std::ofstream f(dir / "data_batch_1.bin", std::ios::binary | std::ios::app);
    f.put('\x00');
    f.close();
    CHECK_THROWS_AS(load_cifar10((dir / "data_batch_1.bin").string()), DataError);
  }
  SUBCASE("label out of range") {
    std::ofstream f(dir / "bad.bin", std::ios::binary);
    f.put('\x0b');
    for (int j = 0; j < 3072; ++j) f.put('\x00');
    f.close();
    CHECK_THROWS_AS(load_cifar10((dir / "bad.bin").string()), DataError);
  }
  SUBCASE("empty directory") {
    fs::path empty = dir / "empty";
    fs::create_directories(empty);
    CHECK_THROWS_AS(load_cifar10(empty.string()), DataError);
  }
}

TEST_CASE("synthetic corpus: balance, determinism, range") {
  DatasetHandle a = synthetic_dataset(40, 4, 9);
  CHECK(a.size() == 40);
  CHECK(a.num_classes == 4);
  for (int i = 0; i < 40; ++i) CHECK(a.labels[static_cast<size_t>(i)] == i % 4);
  for (float v : a.images.data) CHECK((v == -1.0f || v == 1.0f));

  DatasetHandle b = synthetic_dataset(40, 4, 9);
  CHECK(a.images.data == b.images.data);
  DatasetHandle c = synthetic_dataset(40, 4, 10);
  CHECK(a.images.data != c.images.data);

  // classes are visually distinct: pairwise pixel disagreement above a floor
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      int diff = 0;
      for (int p = 0; p < 32 * 32; ++p)
        diff += a.images.data[i * 1024 + p] != a.images.data[j * 1024 + p];
      CHECK(diff > 50);
    }
}

TEST_CASE("epoch batches: drop-last union, determinism, epoch variation") {
  auto batches = epoch_batches(103, 10, 5, 0);
  CHECK(batches.size() == 10);  // 3 dropped
  std::set<int> seen;
  for (const auto& b : batches) {
    CHECK(b.size() == 10);
    for (int i : b) {
      CHECK(i >= 0);
      CHECK(i < 103);
      CHECK(seen.insert(i).second);  // no duplicates
    }
  }
  CHECK(seen.size() == 100);

  CHECK(epoch_batches(103, 10, 5, 0) == batches);     // same (seed, epoch)
  auto other = epoch_batches(103, 10, 5, 1);
  CHECK(other != batches);                            // different epoch reshuffles
  std::set<int> seen2;
  for (const auto& b : other) seen2.insert(b.begin(), b.end());
  CHECK(seen2.size() == 100);                         // same coverage contract

  CHECK_THROWS_AS(epoch_batches(4, 10, 1, 0), DataError);
  CHECK_THROWS_AS(epoch_batches(10, 1, 1, 0), DataError);
}

TEST_CASE("gather and one_hot") {
  DatasetHandle d = synthetic_dataset(8, 4, 1);
  Tensor imgs = gather_images(d, {3, 0});
  CHECK(imgs.shape == std::vector<int>{2, 1, 32, 32});
  CHECK(std::equal(imgs.ptr(), imgs.ptr() + 1024, d.images.ptr() + 3 * 1024));
  CHECK(gather_labels(d, {3, 0}) == std::vector<int>{3, 0});

  Tensor oh = one_hot({2, 0}, 3);
  CHECK(oh.shape == std::vector<int>{2, 3});
  CHECK(oh.data == FloatVec{0, 0, 1, 1, 0, 0});
  CHECK_THROWS_AS(one_hot({3}, 3), ShapeError);
  CHECK_THROWS_AS(one_hot({-1}, 3), ShapeError);
}

TEST_CASE("image folder loader with class subdirectories") {
  fs::path dir = temp_dir("folder");
  fs::create_directories(dir / "catA");
  fs::create_directories(dir / "catB");
  Rng rng(3);
  for (int i = 0; i < 2; ++i) {
    Tensor img = pf::testutil::randt({1, 32, 32}, rng, 0.3f);
    for (auto& v : img.data) v = std::clamp(v, -0.99f, 0.99f);
    write_png((dir / "catA" / ("a" + std::to_string(i) + ".png")).string(), img);
    write_png((dir / "catB" / ("b" + std::to_string(i) + ".png")).string(), img);
  }
  std::ofstream(dir / "catA" / "broken.png") << "not a png";

  DatasetHandle d = load_image_folder(dir.string(), 1);
  CHECK(d.size() == 4);  // broken file skipped
  CHECK(d.num_classes == 2);
  CHECK(d.labels == std::vector<int>{0, 0, 1, 1});
  for (float v : d.images.data) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }

  CHECK_THROWS_AS(load_image_folder((dir / "missing").string(), 1), DataError);
}
