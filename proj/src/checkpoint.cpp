#include "m3hl/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "m3hl/container.hpp"

namespace m3hl {
namespace fs = std::filesystem;

namespace {

std::string entry_name(std::size_t i) {
  std::ostringstream os;
  os << "param_" << std::setw(3) << std::setfill('0') << i;
  return os.str();
}

std::size_t read_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw IoError("checkpoint index lacks '" + key + "'");
  return std::stoull(it->second);
}

}  // namespace

void save_checkpoint(const fs::path& dir, const SegNetwork& net) {
  fs::create_directories(dir);
  const NetConfig& c = net.config();
  std::ofstream index(dir / "checkpoint.txt");
  if (!index) throw IoError("cannot write checkpoint index in " + dir.string());
  index << "format = m3hl-checkpoint/1\n"
        << "depth = " << c.depth << "\n"
        << "base_channels = " << c.base_channels << "\n"
        << "in_channels = " << c.in_channels << "\n"
        << "num_classes = " << c.num_classes << "\n"
        << std::setprecision(17) << "leaky_slope = " << c.leaky_slope << "\n"
        << "parameters = " << net.parameters().size() << "\n";
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    const Parameter& p = net.parameters()[i];
    container::write_tensor(dir, entry_name(i), p.value, container::Dtype::float64, std::nullopt, {{"name", p.name}});
    index << entry_name(i) << " = " << p.name << "\n";
  }
}

SegNetwork load_checkpoint(const fs::path& dir) {
  const auto kv = container::read_key_values(dir / "checkpoint.txt");
  if (!kv.contains("format") || kv.at("format") != "m3hl-checkpoint/1") {
    throw IoError(dir.string() + ": not an m3hl checkpoint");
  }
  NetConfig c;
  c.depth = read_size(kv, "depth");
  c.base_channels = read_size(kv, "base_channels");
  c.in_channels = read_size(kv, "in_channels");
  c.num_classes = read_size(kv, "num_classes");
  c.leaky_slope = std::stod(kv.at("leaky_slope"));
  SegNetwork net(c, 0);
  ParameterSet& params = net.parameters();
  if (read_size(kv, "parameters") != params.size()) throw IoError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto name = kv.find(entry_name(i));
    if (name == kv.end() || name->second != params[i].name) {
      throw IoError("checkpoint entry " + entry_name(i) + " does not hold " + params[i].name);
    }
    Tensor t = container::read_tensor(dir, entry_name(i));
    require_same_shape(t.shape(), params[i].value.shape(), params[i].name.c_str());
    params[i].value = std::move(t);
  }
  return net;
}

}  // namespace m3hl
