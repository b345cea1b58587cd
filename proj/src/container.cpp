#include "m3hl/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "m3hl/errors.hpp"

namespace m3hl::container {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
void write_le(std::ofstream& os, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(const unsigned char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::size_t dtype_bytes(Dtype d) {
  switch (d) {
    case Dtype::float32: return 4;
    case Dtype::float64: return 8;
    case Dtype::uint8: return 1;
  }
  return 0;
}

void write_header(const fs::path& dir, const std::string& name, const Shape& shape, Dtype dtype,
                  std::optional<std::uint64_t> seed, const std::map<std::string, std::string>& extra) {
  std::ofstream os(dir / (name + ".hdr"));
  if (!os) throw IoError("cannot write " + (dir / (name + ".hdr")).string());
  os << "shape =";
  for (auto s : shape) os << ' ' << s;
  os << "\ndtype = " << dtype_name(dtype) << "\nbyte_order = little\n";
  if (seed) os << "seed = " << *seed << '\n';
  for (const auto& [k, v] : extra) os << k << " = " << v << '\n';
}

std::vector<unsigned char> read_payload(const fs::path& dir, const std::string& name, const Header& h) {
  const fs::path file = dir / (name + ".bin");
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open " + file.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::size_t expected = shape_size(h.shape) * dtype_bytes(h.dtype);
  if (buf.size() != expected) {
    throw IoError(file.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                  std::to_string(buf.size()));
  }
  return buf;
}

std::ofstream open_payload(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream os(dir / (name + ".bin"), std::ios::binary);
  if (!os) throw IoError("cannot write " + (dir / (name + ".bin")).string());
  return os;
}

}  // namespace

std::string dtype_name(Dtype d) {
  switch (d) {
    case Dtype::float32: return "float32";
    case Dtype::float64: return "float64";
    case Dtype::uint8: return "uint8";
  }
  return "?";
}

Dtype parse_dtype(const std::string& s) {
  if (s == "float32") return Dtype::float32;
  if (s == "float64") return Dtype::float64;
  if (s == "uint8") return Dtype::uint8;
  throw IoError("unknown dtype '" + s + "'");
}

void write_tensor(const fs::path& dir, const std::string& name, const Tensor& t, Dtype dtype,
                  std::optional<std::uint64_t> seed, const std::map<std::string, std::string>& extra) {
  if (dtype == Dtype::uint8) throw IoError("write_tensor: use write_labels for uint8 data");
  std::ofstream os = open_payload(dir, name);
  for (double v : t.values()) {
    if (dtype == Dtype::float32) {
      write_le(os, static_cast<float>(v));
    } else {
      write_le(os, v);
    }
  }
  write_header(dir, name, t.shape(), dtype, seed, extra);
}

void write_labels(const fs::path& dir, const std::string& name, const LabelMap& m,
                  std::optional<std::uint64_t> seed, const std::map<std::string, std::string>& extra) {
  std::ofstream os = open_payload(dir, name);
  os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size()));
  write_header(dir, name, m.shape(), Dtype::uint8, seed, extra);
}

Header read_header(const fs::path& dir, const std::string& name) {
  auto kv = read_key_values(dir / (name + ".hdr"));
  Header h;
  if (!kv.count("shape") || !kv.count("dtype")) throw IoError(name + ".hdr: missing shape or dtype");
  std::istringstream shape(kv["shape"]);
  for (std::size_t s; shape >> s;) h.shape.push_back(s);
  h.dtype = parse_dtype(kv["dtype"]);
  if (kv.count("byte_order") && kv["byte_order"] != "little") {
    throw IoError(name + ".hdr: unsupported byte order " + kv["byte_order"]);
  }
  if (kv.count("seed")) h.seed = std::stoull(kv["seed"]);
  for (const auto& [k, v] : kv) {
    if (k != "shape" && k != "dtype" && k != "byte_order" && k != "seed") h.extra[k] = v;
  }
  return h;
}

Tensor read_tensor(const fs::path& dir, const std::string& name) {
  const Header h = read_header(dir, name);
  if (h.dtype == Dtype::uint8) throw IoError(name + ": expected float data");
  const auto buf = read_payload(dir, name, h);
  Tensor t(h.shape);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = h.dtype == Dtype::float32 ? static_cast<double>(read_le<float>(buf.data() + 4 * i))
                                     : read_le<double>(buf.data() + 8 * i);
  }
  return t;
}

LabelMap read_labels(const fs::path& dir, const std::string& name) {
  const Header h = read_header(dir, name);
  if (h.dtype != Dtype::uint8) throw IoError(name + ": expected uint8 data");
  const auto buf = read_payload(dir, name, h);
  return LabelMap(h.shape, std::vector<std::uint8_t>(buf.begin(), buf.end()));
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot open " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_key_values(ss.str());
}

}  // namespace m3hl::container
