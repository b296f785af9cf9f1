#include "stablegrasp/sac/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

namespace sg::sac {

// The wire format is little-endian; this implementation assumes a
// little-endian host (checked nowhere cheaper than here).
static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'G', 'L', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(path + ": truncated checkpoint while reading " + what);
  return v;
}

}  // namespace

void save_checkpoint(const CheckpointGroups& groups, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  put<uint16_t>(os, kCheckpointVersion);
  for (const auto& [group, ps] : groups) {
    for (const auto& p : *ps) {
      std::string name = group + "/" + p->name;
      put<uint32_t>(os, static_cast<uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<uint8_t>(os, static_cast<uint8_t>(p->value.shape.size()));
      for (int d : p->value.shape) put<uint32_t>(os, static_cast<uint32_t>(d));
      os.write(reinterpret_cast<const char*>(p->value.data.data()),
               static_cast<std::streamsize>(p->value.data.size() * sizeof(float)));
    }
  }
  if (!os) throw std::runtime_error("write failure on checkpoint: " + path);
}

std::vector<std::pair<std::string, nn::Tensor>> read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": bad magic, not a checkpoint file");
  uint16_t version = get<uint16_t>(is, path, "version");
  if (version != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));

  std::vector<std::pair<std::string, nn::Tensor>> records;
  while (true) {
    uint32_t name_len;
    is.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (is.eof()) break;
    if (!is) throw std::runtime_error(path + ": truncated checkpoint while reading name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error(path + ": truncated checkpoint while reading name");
    uint8_t rank = get<uint8_t>(is, path, ("rank of " + name).c_str());
    std::vector<int> shape;
    size_t numel = 1;
    for (int r = 0; r < rank; ++r) {
      uint32_t d = get<uint32_t>(is, path, ("dims of " + name).c_str());
      shape.push_back(static_cast<int>(d));
      numel *= d;
    }
    nn::Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(numel * sizeof(float)));
    if (!is) throw std::runtime_error(path + ": truncated checkpoint in payload of " + name);
    records.emplace_back(std::move(name), std::move(t));
  }
  return records;
}

std::vector<std::string> checkpoint_groups(const std::string& path) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& [name, t] : read_checkpoint(path)) {
    auto slash = name.find('/');
    std::string g = slash == std::string::npos ? name : name.substr(0, slash);
    if (seen.insert(g).second) out.push_back(g);
  }
  return out;
}

void load_group(const std::string& path, const std::string& group, nn::ParameterSet& dst) {
  std::string prefix = group + "/";
  std::set<std::string> loaded;
  for (auto& [name, t] : read_checkpoint(path)) {
    if (name.rfind(prefix, 0) != 0) continue;
    std::string pname = name.substr(prefix.size());
    if (!dst.contains(pname))
      throw std::runtime_error(path + ": record '" + name +
                               "' does not match any model parameter (architecture mismatch?)");
    nn::Parameter& p = dst.at(pname);
    if (p.value.shape != t.shape)
      throw std::runtime_error(path + ": shape mismatch for '" + name + "': checkpoint " +
                               nn::Tensor::shape_str(t.shape) + " vs model " +
                               nn::Tensor::shape_str(p.value.shape));
    p.value = std::move(t);
    loaded.insert(pname);
  }
  if (loaded.empty())
    throw std::runtime_error(path + ": no records for group '" + group + "'");
  for (const auto& p : dst)
    if (!loaded.count(p->name))
      throw std::runtime_error(path + ": parameter '" + group + "/" + p->name +
                               "' missing from checkpoint");
}

}  // namespace sg::sac
