#include "m3hl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "m3hl/container.hpp"
#include "m3hl/rng.hpp"

namespace m3hl {
namespace fs = std::filesystem;

namespace {

struct Ellipse {
  double cx, cy, ra, rb, theta;

  bool contains(double x, double y) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double u = (x - cx) * c + (y - cy) * s;
    const double v = -(x - cx) * s + (y - cy) * c;
    return (u * u) / (ra * ra) + (v * v) / (rb * rb) <= 1.0;
  }
};

constexpr const char* kSplitNames[3] = {"labeled", "unlabeled", "val"};

std::string sample_name(std::size_t index) {
  std::ostringstream os;
  os << "sample_" << std::setw(6) << std::setfill('0') << index;
  return os.str();
}

}  // namespace

Sample generate_sample(std::uint64_t seed, const SynthOptions& opt) {
  if (opt.size == 0 || opt.size % 16 != 0) throw DivisibilityError("sample size must be a positive multiple of 16");
  if (opt.num_classes < 2 || opt.num_classes > 255) throw RangeError("num_classes must be in [2, 255]");
  if (!(opt.noise_sigma >= 0.0)) throw RangeError("noise_sigma must be >= 0");

  SplitMix64 rng(seed);
  const double s = static_cast<double>(opt.size);
  const std::size_t C = opt.num_classes;

  const double background = rng.uniform(0.05, 0.25);
  Ellipse outer{};
  outer.cx = rng.uniform(0.38, 0.62) * s;
  outer.cy = rng.uniform(0.38, 0.62) * s;
  outer.ra = rng.uniform(0.2, 0.28) * s;
  outer.rb = outer.ra * rng.uniform(0.7, 1.0);
  outer.theta = rng.uniform(0.0, std::numbers::pi);

  // Concentric layers for classes 2..C-1 (or class 1 alone when C == 2).
  const std::size_t first_nested = C == 2 ? 1 : 2;
  std::vector<Ellipse> layers{outer};
  for (std::size_t c = first_nested + 1; c < C; ++c) {
    Ellipse e = layers.back();
    const double f = rng.uniform(0.6, 0.75);
    e.ra *= f;
    e.rb *= f;
    layers.push_back(e);
  }

  Ellipse side{};
  if (C > 2) {
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    side.ra = outer.ra * rng.uniform(0.6, 0.9);
    side.rb = side.ra * rng.uniform(0.6, 1.0);
    side.theta = rng.uniform(0.0, std::numbers::pi);
    const double dist = outer.ra * rng.uniform(0.8, 1.1);
    side.cx = std::clamp(outer.cx + dist * std::cos(phi), 0.15 * s, 0.85 * s);
    side.cy = std::clamp(outer.cy + dist * std::sin(phi), 0.15 * s, 0.85 * s);
  }

  std::vector<double> intensity(C, background);
  for (std::size_t c = 1; c < C; ++c) {
    if (c == 1 && C > 2) {
      intensity[c] = rng.uniform(0.5, 0.75);
    } else if ((c - first_nested) % 2 == 0) {
      intensity[c] = rng.uniform(0.32, 0.48);
    } else {
      intensity[c] = rng.uniform(0.7, 0.95);
    }
  }

  Sample out{Tensor({1, opt.size, opt.size}), LabelMap({opt.size, opt.size}), seed};
  for (std::size_t y = 0; y < opt.size; ++y) {
    for (std::size_t x = 0; x < opt.size; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      std::uint8_t label = 0;
      if (C > 2 && side.contains(px, py)) label = 1;
      for (std::size_t k = 0; k < layers.size(); ++k) {
        if (layers[k].contains(px, py)) label = static_cast<std::uint8_t>(first_nested + k);
      }
      out.label[y * opt.size + x] = label;
    }
  }
  for (std::size_t i = 0; i < out.label.size(); ++i) {
    double v = intensity[out.label[i]];
    if (opt.noise_sigma > 0.0) v += opt.noise_sigma * rng.normal();
    // Stored at float32 precision so in-memory and on-disk datasets agree exactly.
    out.image[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

DatasetSplit make_split(std::size_t n_labeled, std::size_t n_unlabeled, std::size_t n_val,
                        std::uint64_t base_seed, const SynthOptions& options) {
  if (n_labeled == 0) throw RangeError("at least one labeled sample is required");
  DatasetSplit split;
  split.options = options;
  split.base_seed = base_seed;
  std::vector<Sample>* parts[3] = {&split.labeled, &split.unlabeled, &split.val};
  const std::size_t counts[3] = {n_labeled, n_unlabeled, n_val};
  for (int p = 0; p < 3; ++p) {
    parts[p]->resize(counts[p]);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < counts[p]; ++i) {
      (*parts[p])[i] = generate_sample(derive_seed(base_seed, static_cast<std::uint64_t>(p), i), options);
    }
  }
  for (auto& s : split.unlabeled) s.label = LabelMap();
  return split;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

Tensor stack_images(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ShapeError("cannot stack zero images");
  const Shape& s0 = samples.at(indices[0]).image.shape();
  Shape shape{indices.size()};
  shape.insert(shape.end(), s0.begin(), s0.end());
  Tensor out(shape);
  const std::size_t per = shape_size(s0);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Tensor& img = samples.at(indices[k]).image;
    require_same_shape(img.shape(), s0, "stack_images");
    std::copy(img.values().begin(), img.values().end(), out.data() + k * per);
  }
  return out;
}

LabelMap stack_labels(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ShapeError("cannot stack zero label maps");
  const Shape& s0 = samples.at(indices[0]).label.shape();
  if (s0.empty()) throw ShapeError("sample has no label");
  Shape shape{indices.size()};
  shape.insert(shape.end(), s0.begin(), s0.end());
  LabelMap out(shape);
  const std::size_t per = shape_size(s0);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const LabelMap& lab = samples.at(indices[k]).label;
    require_same_shape(lab.shape(), s0, "stack_labels");
    std::copy(lab.values().begin(), lab.values().end(), out.data() + k * per);
  }
  return out;
}

void save_split(const DatasetSplit& split, const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw IoError(dir.string() + " already exists and is not empty (use --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest in " + dir.string());
  manifest << "format = m3hl-dataset/1\n"
           << "size = " << split.options.size << "\n"
           << "num_classes = " << split.options.num_classes << "\n"
           << "noise_sigma = " << split.options.noise_sigma << "\n"
           << "base_seed = " << split.base_seed << "\n"
           << "labeled = " << split.labeled.size() << "\n"
           << "unlabeled = " << split.unlabeled.size() << "\n"
           << "val = " << split.val.size() << "\n";
  const std::vector<Sample>* parts[3] = {&split.labeled, &split.unlabeled, &split.val};
  for (int p = 0; p < 3; ++p) {
    const fs::path sub = dir / kSplitNames[p];
    fs::create_directories(sub);
    for (std::size_t i = 0; i < parts[p]->size(); ++i) {
      const Sample& s = (*parts[p])[i];
      const std::string name = sample_name(i);
      container::write_tensor(sub, name + ".image", s.image, container::Dtype::float32, s.seed);
      if (!s.label.empty()) container::write_labels(sub, name + ".label", s.label, s.seed);
      manifest << "sample." << kSplitNames[p] << "." << name << " = " << s.seed << "\n";
    }
  }
}

DatasetSplit load_split(const fs::path& dir) {
  auto kv = container::read_key_values(dir / "manifest.txt");
  if (kv["format"] != "m3hl-dataset/1") throw IoError(dir.string() + ": not an m3hl dataset");
  DatasetSplit split;
  split.options.size = std::stoull(kv.at("size"));
  split.options.num_classes = std::stoull(kv.at("num_classes"));
  split.options.noise_sigma = std::stod(kv.at("noise_sigma"));
  split.base_seed = std::stoull(kv.at("base_seed"));
  std::vector<Sample>* parts[3] = {&split.labeled, &split.unlabeled, &split.val};
  for (int p = 0; p < 3; ++p) {
    const std::size_t n = std::stoull(kv.at(kSplitNames[p]));
    const fs::path sub = dir / kSplitNames[p];
    for (std::size_t i = 0; i < n; ++i) {
      const std::string name = sample_name(i);
      Sample s;
      s.image = container::read_tensor(sub, name + ".image");
      s.seed = container::read_header(sub, name + ".image").seed.value_or(0);
      if (fs::exists(sub / (name + ".label.hdr"))) s.label = container::read_labels(sub, name + ".label");
      parts[p]->push_back(std::move(s));
    }
  }
  return split;
}

}  // namespace m3hl
