#include "m3hl/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

namespace m3hl {
namespace {

struct Field {
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

Shape parse_patch(const std::string& key, const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) {
    const std::size_t p = parse_uint(key, v);
    return {p, p};
  }
  return {parse_uint(key, v.substr(0, x)), parse_uint(key, v.substr(x + 1))};
}

#define M3HL_DOUBLE(name) \
  {#name, {[](TrainConfig& c, const std::string& v) { c.name = parse_double(#name, v); }, \
           [](const TrainConfig& c) { return fmt_double(c.name); }}}
#define M3HL_UINT(name) \
  {#name, {[](TrainConfig& c, const std::string& v) { c.name = parse_uint(#name, v); }, \
           [](const TrainConfig& c) { return std::to_string(c.name); }}}
#define M3HL_BOOL(name) \
  {#name, {[](TrainConfig& c, const std::string& v) { c.name = parse_bool(#name, v); }, \
           [](const TrainConfig& c) { return std::string(c.name ? "true" : "false"); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      M3HL_DOUBLE(lr),
      M3HL_DOUBLE(weight_decay),
      M3HL_DOUBLE(momentum),
      M3HL_UINT(iterations),
      M3HL_UINT(batch_labeled),
      M3HL_UINT(batch_unlabeled),
      {"patch_size",
       {[](TrainConfig& c, const std::string& v) { c.patch_size = parse_patch("patch_size", v); },
        [](const TrainConfig& c) { return format_patch(c.patch_size); }}},
      M3HL_DOUBLE(mask_ratio),
      M3HL_BOOL(share_mask),
      M3HL_BOOL(swap_mix_weighting),
      M3HL_DOUBLE(lambda_hl),
      M3HL_DOUBLE(alpha),
      M3HL_DOUBLE(ema_decay),
      M3HL_BOOL(enable_mix),
      M3HL_BOOL(enable_hl),
      M3HL_BOOL(enable_sup),
      M3HL_UINT(seed),
      M3HL_UINT(eval_every),
      M3HL_UINT(image_size),
      M3HL_UINT(num_classes),
      M3HL_UINT(n_labeled),
      M3HL_UINT(n_unlabeled),
      M3HL_UINT(n_val),
      M3HL_UINT(data_seed),
      M3HL_DOUBLE(noise_sigma),
      M3HL_UINT(depth),
      M3HL_UINT(base_channels),
  };
  return table;
}

#undef M3HL_DOUBLE
#undef M3HL_UINT
#undef M3HL_BOOL

const Field& find_field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return f;
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

std::string format_patch(const Shape& patch) {
  std::string out;
  for (std::size_t i = 0; i < patch.size(); ++i) out += (i ? "x" : "") + std::to_string(patch[i]);
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.first);
    return k;
  }();
  return keys;
}

void apply_setting(TrainConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, value);
}

void apply_settings(TrainConfig& config, const std::map<std::string, std::string>& settings) {
  for (const auto& [k, v] : settings) apply_setting(config, k, v);
}

std::string get_setting(const TrainConfig& config, const std::string& key) { return find_field(key).get(config); }

std::map<std::string, std::string> to_settings(const TrainConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields()) out[k] = f.get(config);
  return out;
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(config) + "\n";
  return out;
}

}  // namespace m3hl
