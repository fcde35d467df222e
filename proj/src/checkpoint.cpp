#include "drue/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>

#include "drue/errors.hpp"

namespace drue {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'U', 'E', 'C', 'K', 'P', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

uint32_t get_u32(std::istream& in) {
  char b[4];
  in.read(b, 4);
  if (!in) throw ComputeError("corrupt checkpoint: truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

nlohmann::json meta_to_json(const CheckpointMeta& m) {
  nlohmann::json j;
  j["stage"] = m.stage;
  j["seed"] = m.seed;
  j["arch_hash"] = m.arch_hash;
  j["model_config"] = m.model_config;
  j["freeze_report"] = m.freeze_report;
  j["shared_manifest"] = m.shared_manifest;
  return j;
}

CheckpointMeta meta_from_json(const nlohmann::json& j) {
  CheckpointMeta m;
  m.stage = j.at("stage").get<std::string>();
  m.seed = j.at("seed").get<uint64_t>();
  m.arch_hash = j.at("arch_hash").get<uint64_t>();
  m.model_config = j.at("model_config").get<std::string>();
  m.freeze_report = j.at("freeze_report").get<double>();
  m.shared_manifest = j.at("shared_manifest").get<std::string>();
  return m;
}

CheckpointMeta read_header(std::istream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw ComputeError("not a checkpoint file: " + path);
  const uint32_t meta_len = get_u32(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), meta_len);
  if (!in) throw ComputeError("corrupt checkpoint: truncated meta in " + path);
  try {
    return meta_from_json(nlohmann::json::parse(meta_str));
  } catch (const nlohmann::json::exception& e) {
    throw ComputeError("corrupt checkpoint meta in " + path + ": " + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const std::vector<nn::Param*>& params) {
  std::vector<nn::Param*> sorted = params;
  std::sort(sorted.begin(), sorted.end(),
            [](const nn::Param* a, const nn::Param* b) { return a->name < b->name; });
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i]->name.empty())
      throw ContractViolation("save_checkpoint: unnamed param");
    if (i > 0 && sorted[i]->name == sorted[i - 1]->name)
      throw ContractViolation("save_checkpoint: duplicate param name " +
                              sorted[i]->name);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputeError("cannot write " + path);
  out.write(kMagic, 8);
  const std::string meta_str = meta_to_json(meta).dump();
  put_u32(out, static_cast<uint32_t>(meta_str.size()));
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  put_u32(out, static_cast<uint32_t>(sorted.size()));
  for (const nn::Param* p : sorted) {
    put_u32(out, static_cast<uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(out, static_cast<uint32_t>(p->value.ndim()));
    for (int d = 0; d < p->value.ndim(); ++d)
      put_u32(out, static_cast<uint32_t>(p->value.dim(d)));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw ComputeError("failed while writing " + path);
}

CheckpointMeta load_checkpoint(const std::string& path,
                               const std::vector<nn::Param*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DependencyError("missing checkpoint " + path +
                          " (run `drue train` first)");
  const CheckpointMeta meta = read_header(in, path);

  std::map<std::string, nn::Param*> targets;
  for (nn::Param* p : params) {
    if (p->name.empty()) throw ContractViolation("load_checkpoint: unnamed param");
    targets[p->name] = p;
  }

  const uint32_t n = get_u32(in);
  if (n != targets.size())
    throw ComputeError("checkpoint " + path + " holds " + std::to_string(n) +
                       " params, expected " + std::to_string(targets.size()));
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t ndim = get_u32(in);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(get_u32(in));
    auto it = targets.find(name);
    if (it == targets.end())
      throw ComputeError("checkpoint " + path + " has unexpected param " + name);
    if (it->second->value.shape() != shape)
      throw ComputeError("checkpoint " + path + " shape mismatch for " + name);
    in.read(reinterpret_cast<char*>(it->second->value.data()),
            static_cast<std::streamsize>(it->second->value.size() *
                                         sizeof(double)));
    if (!in) throw ComputeError("corrupt checkpoint: truncated data in " + path);
    targets.erase(it);
  }
  if (!targets.empty())
    throw ComputeError("checkpoint " + path + " is missing param " +
                       targets.begin()->first);
  return meta;
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DependencyError("missing checkpoint " + path +
                          " (run `drue train` first)");
  return read_header(in, path);
}

}  // namespace drue
