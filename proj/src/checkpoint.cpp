#include "nashdqn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace nashdqn {

namespace {

using nlohmann::json;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_double(std::ostream& out, double d) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

double get_double(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double d = 0.0;
  std::memcpy(&d, &bits, 8);
  return d;
}

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("checkpoint: " + what);
}

}  // namespace

void save_checkpoint(const std::string& path, const NashQModel& model,
                     const json& run_config) {
  json header;
  header["n_agents"] = model.n_agents();
  header["scales"] = {{"price", model.scales().price_scale},
                      {"time", model.scales().time_scale},
                      {"inventory", model.scales().inventory_scale}};
  const ModelConfig& mc = model.config();
  header["model"] = {{"value_hidden", mc.value_hidden},
                     {"phi_hidden", mc.phi_hidden},
                     {"phi_out", mc.phi_out},
                     {"main_hidden", mc.main_hidden},
                     {"epsilon", mc.epsilon}};
  json tensors = json::array();
  for (const TensorInfo& t : model.params().tensors()) {
    tensors.push_back(
        {{"name", t.name},
         {"partition", t.partition == Partition::Value ? "value" : "advantage"},
         {"rows", t.rows},
         {"cols", t.cols},
         {"offset", t.offset}});
  }
  header["tensors"] = tensors;
  header["param_count"] = model.params().size();
  header["run_config"] = run_config;

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path + "'");
  out.write("NDQ1", 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  const Eigen::VectorXd& flat = model.params().flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) put_double(out, flat[i]);
  if (!out) fail("write failed for '" + path + "'");
}

std::unique_ptr<NashQModel> load_checkpoint(const std::string& path,
                                            json* run_config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::strncmp(magic, "NDQ1", 4) != 0) {
    fail("bad magic in '" + path + "'");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    fail("unsupported version " + std::to_string(version));
  }
  const std::uint64_t head_len = get_u64(in);
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) fail("truncated header in '" + path + "'");
  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    fail(std::string("header parse error: ") + e.what());
  }

  ModelConfig mc;
  const json& mj = header.at("model");
  mc.value_hidden = mj.at("value_hidden").get<std::vector<int>>();
  mc.phi_hidden = mj.at("phi_hidden").get<std::vector<int>>();
  mc.phi_out = mj.at("phi_out").get<int>();
  mc.main_hidden = mj.at("main_hidden").get<std::vector<int>>();
  mc.epsilon = mj.at("epsilon").get<double>();
  FeatureScales scales;
  scales.price_scale = header.at("scales").at("price").get<double>();
  scales.time_scale = header.at("scales").at("time").get<double>();
  scales.inventory_scale = header.at("scales").at("inventory").get<double>();

  auto model = std::make_unique<NashQModel>(header.at("n_agents").get<int>(),
                                            mc, scales);
  const Eigen::Index count = header.at("param_count").get<Eigen::Index>();
  if (count != model->params().size()) {
    fail("parameter count mismatch (file " + std::to_string(count) +
         ", model " + std::to_string(model->params().size()) + ")");
  }
  for (Eigen::Index i = 0; i < count; ++i) {
    model->params().flat()[i] = get_double(in);
  }
  if (!in) fail("truncated parameters in '" + path + "'");
  if (run_config != nullptr) {
    *run_config = header.value("run_config", json());
  }
  return model;
}

}  // namespace nashdqn
