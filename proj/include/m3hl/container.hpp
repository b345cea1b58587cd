#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "m3hl/ndarray.hpp"

// On-disk array container: `<name>.bin` holds the raw little-endian elements,
// `<name>.hdr` is a sidecar of `key = value` lines:
//
//   shape = 1 64 64
//   dtype = float32        (float32 | float64 | uint8)
//   byte_order = little
//   seed = 42              (optional)
//
// Extra keys are preserved and returned by read_header.
namespace m3hl::container {

enum class Dtype { float32, float64, uint8 };

std::string dtype_name(Dtype d);
Dtype parse_dtype(const std::string& s);

struct Header {
  Shape shape;
  Dtype dtype = Dtype::float32;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> extra;
};

void write_tensor(const std::filesystem::path& dir, const std::string& name, const Tensor& t, Dtype dtype,
                  std::optional<std::uint64_t> seed = std::nullopt,
                  const std::map<std::string, std::string>& extra = {});
void write_labels(const std::filesystem::path& dir, const std::string& name, const LabelMap& m,
                  std::optional<std::uint64_t> seed = std::nullopt,
                  const std::map<std::string, std::string>& extra = {});

Header read_header(const std::filesystem::path& dir, const std::string& name);
/// Reads any float dtype into doubles.
Tensor read_tensor(const std::filesystem::path& dir, const std::string& name);
LabelMap read_labels(const std::filesystem::path& dir, const std::string& name);

/// Flat `key = value` text; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& file);

}  // namespace m3hl::container
