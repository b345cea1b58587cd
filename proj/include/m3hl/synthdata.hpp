#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "m3hl/ndarray.hpp"

namespace m3hl {

/// One synthetic image/label pair. `label` is empty for unlabeled samples.
struct Sample {
  Tensor image;    // (1, H, W), values in [0, 1]
  LabelMap label;  // (H, W), values in [0, C)
  std::uint64_t seed = 0;
};

struct SynthOptions {
  std::size_t size = 64;
  std::size_t num_classes = 4;
  double noise_sigma = 0.05;  // 0 disables noise
};

/// Renders a toy anatomy from `seed` alone: class 1 is an ellipse lying against
/// a stack of concentric ellipses holding classes 2..C-1 (innermost last), each
/// with a random per-sample intensity over a random background level, plus
/// additive Gaussian noise clipped to [0, 1]. With two classes only the
/// concentric structure is drawn. `size` must be a positive multiple of 16.
Sample generate_sample(std::uint64_t seed, const SynthOptions& options = {});

struct DatasetSplit {
  std::vector<Sample> labeled;
  std::vector<Sample> unlabeled;
  std::vector<Sample> val;
  SynthOptions options;
  std::uint64_t base_seed = 0;
};

/// Sample seeds are derive_seed(base_seed, split, index) with split 0/1/2 for
/// labeled/unlabeled/val. Unlabeled samples have their labels dropped.
DatasetSplit make_split(std::size_t n_labeled, std::size_t n_unlabeled, std::size_t n_val,
                        std::uint64_t base_seed, const SynthOptions& options = {});

/// (N, 1, H, W) image stack and (N, H, W) label stack of the chosen samples.
Tensor stack_images(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices);
LabelMap stack_labels(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices);
std::vector<std::size_t> all_indices(std::size_t n);

/// Writes `dir/{labeled,unlabeled,val}/<name>.{image,label}.{bin,hdr}` and
/// `dir/manifest.txt`. Refuses a non-empty directory unless `force` is set.
void save_split(const DatasetSplit& split, const std::filesystem::path& dir, bool force);
DatasetSplit load_split(const std::filesystem::path& dir);

}  // namespace m3hl
