#include "pbf/model_io.hpp"

#include <cstring>
#include <fstream>

namespace pbf {

namespace {
constexpr char kMagic[4] = {'P', 'B', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_mlp(const Mlp& model, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + file.string());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  const std::uint32_t n_sizes = static_cast<std::uint32_t>(model.sizes.size());
  out.write(reinterpret_cast<const char*>(&n_sizes), sizeof(n_sizes));
  for (int s : model.sizes) {
    const std::uint32_t v = static_cast<std::uint32_t>(s);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  const Eigen::VectorXd flat = model.pack();
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

Mlp load_mlp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a PBFM model file: " + file.string());
  std::uint32_t version = 0, n_sizes = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion)
    throw std::runtime_error("unsupported PBFM version in " + file.string());
  in.read(reinterpret_cast<char*>(&n_sizes), sizeof(n_sizes));
  if (!in || n_sizes < 2 || n_sizes > 64)
    throw std::runtime_error("corrupt PBFM architecture header in " + file.string());
  std::vector<int> sizes(n_sizes);
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    sizes[i] = static_cast<int>(v);
  }
  Mlp model(sizes);
  Eigen::VectorXd flat(model.parameter_count());
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated PBFM file: " + file.string());
  model.unpack(flat);
  return model;
}

nlohmann::json to_json(const NormalizationSpec& norm) {
  return {{"center", {norm.center[0], norm.center[1], norm.center[2], norm.center[3]}},
          {"halfwidth",
           {norm.halfwidth[0], norm.halfwidth[1], norm.halfwidth[2], norm.halfwidth[3]}},
          {"out_offset", norm.out_offset},
          {"out_scale", norm.out_scale}};
}

NormalizationSpec normalization_from_json(const nlohmann::json& j) {
  NormalizationSpec norm;
  for (int i = 0; i < 4; ++i) {
    norm.center[i] = j.at("center").at(i).get<double>();
    norm.halfwidth[i] = j.at("halfwidth").at(i).get<double>();
  }
  norm.out_offset = j.at("out_offset").get<double>();
  norm.out_scale = j.at("out_scale").get<double>();
  norm.validate();
  return norm;
}

nlohmann::json to_json(const SpaceTimeBox& box) {
  return {{"t_begin", box.t_begin},
          {"t_end", box.t_end},
          {"lo", {box.lo[0], box.lo[1], box.lo[2]}},
          {"hi", {box.hi[0], box.hi[1], box.hi[2]}}};
}

SpaceTimeBox box_from_json(const nlohmann::json& j) {
  SpaceTimeBox box;
  box.t_begin = j.at("t_begin").get<double>();
  box.t_end = j.at("t_end").get<double>();
  for (int i = 0; i < 3; ++i) {
    box.lo[i] = j.at("lo").at(i).get<double>();
    box.hi[i] = j.at("hi").at(i).get<double>();
  }
  box.validate();
  return box;
}

nlohmann::json to_json(const TrainingMeta& meta) {
  return {{"seed", meta.seed},
          {"lambda", {{"ic", meta.lambda.ic}, {"bc", meta.lambda.bc}, {"pde", meta.lambda.pde}}},
          {"initial_losses",
           {{"ic", meta.initial_losses.ic},
            {"bc", meta.initial_losses.bc},
            {"pde", meta.initial_losses.pde}}},
          {"final_losses",
           {{"ic", meta.final_losses.ic},
            {"bc", meta.final_losses.bc},
            {"pde", meta.final_losses.pde}}},
          {"iterations", meta.iterations},
          {"evaluations", meta.evaluations},
          {"status", meta.status},
          {"degraded", meta.degraded},
          // wall time deliberately not persisted: identical runs must produce
          // byte-identical artifacts
          {"beta_layout", "per_hidden_layer"}};
}

TrainingMeta meta_from_json(const nlohmann::json& j) {
  TrainingMeta meta;
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.lambda.ic = j.at("lambda").at("ic").get<double>();
  meta.lambda.bc = j.at("lambda").at("bc").get<double>();
  meta.lambda.pde = j.at("lambda").at("pde").get<double>();
  meta.initial_losses.ic = j.at("initial_losses").at("ic").get<double>();
  meta.initial_losses.bc = j.at("initial_losses").at("bc").get<double>();
  meta.initial_losses.pde = j.at("initial_losses").at("pde").get<double>();
  meta.final_losses.ic = j.at("final_losses").at("ic").get<double>();
  meta.final_losses.bc = j.at("final_losses").at("bc").get<double>();
  meta.final_losses.pde = j.at("final_losses").at("pde").get<double>();
  meta.iterations = j.at("iterations").get<int>();
  meta.evaluations = j.at("evaluations").get<int>();
  meta.status = j.at("status").get<std::string>();
  meta.degraded = j.at("degraded").get<bool>();
  return meta;
}

void save_pinn(const PinnSurrogate& surrogate, const std::filesystem::path& pbfm_file) {
  save_mlp(surrogate.model, pbfm_file);
  nlohmann::json sidecar = {{"kind", "pinn"},
                            {"normalization", to_json(surrogate.norm)},
                            {"box", to_json(surrogate.box)},
                            {"meta", to_json(surrogate.meta)}};
  std::ofstream out(pbfm_file.string() + ".json");
  if (!out) throw std::runtime_error("cannot write sidecar for " + pbfm_file.string());
  out << sidecar.dump(2) << "\n";
}

PinnSurrogate load_pinn(const std::filesystem::path& pbfm_file) {
  PinnSurrogate s;
  s.model = load_mlp(pbfm_file);
  std::ifstream in(pbfm_file.string() + ".json");
  if (!in) throw std::runtime_error("missing sidecar for " + pbfm_file.string());
  nlohmann::json sidecar = nlohmann::json::parse(in);
  s.norm = normalization_from_json(sidecar.at("normalization"));
  s.box = box_from_json(sidecar.at("box"));
  s.meta = meta_from_json(sidecar.at("meta"));
  return s;
}

}  // namespace pbf
