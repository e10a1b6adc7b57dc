#include "dgd/checkpoint.hpp"

#include "dgd/array_io.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace dgd {

using nlohmann::json;

namespace {

json config_json(const DenoiserConfig& c) {
  return {{"width", c.width},
          {"fusion_layers", c.fusion_layers},
          {"object_points", c.object_points},
          {"hand_points", c.hand_points},
          {"use_class", c.use_class},
          {"use_hand_cloud", c.use_hand_cloud},
          {"use_finger_labels", c.use_finger_labels},
          {"zero_init_head", c.zero_init_head}};
}

DenoiserConfig config_from(const json& j) {
  DenoiserConfig c;
  c.width = j.at("width").get<int>();
  c.fusion_layers = j.at("fusion_layers").get<int>();
  c.object_points = j.at("object_points").get<Index>();
  c.hand_points = j.at("hand_points").get<Index>();
  c.use_class = j.at("use_class").get<bool>();
  c.use_hand_cloud = j.at("use_hand_cloud").get<bool>();
  c.use_finger_labels = j.at("use_finger_labels").get<bool>();
  c.zero_init_head = j.value("zero_init_head", false);
  c.validate();
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  ckpt.params.validate();
  std::filesystem::create_directories(dir);
  json layers = json::array();
  for (const auto& p : ckpt.params.params) {
    const std::string file = p.name + ".dgd1";
    write_array(to_array(p.value), dir / file);
    layers.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"file", file}});
  }
  json manifest = {{"schema", kCheckpointSchema},
                   {"config", config_json(ckpt.params.config)},
                   {"schedule",
                    {{"steps", ckpt.schedule.steps},
                     {"beta_start", ckpt.schedule.beta_start},
                     {"beta_end", ckpt.schedule.beta_end}}},
                   {"parameter_count", ckpt.params.parameter_count()},
                   {"layers", layers}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing checkpoint manifest in " + dir.string());
  const json manifest = json::parse(in);
  if (manifest.value("schema", "") != kCheckpointSchema) throw std::runtime_error("unknown checkpoint schema");
  Checkpoint ckpt;
  ckpt.params.config = config_from(manifest.at("config"));
  const auto& sched = manifest.at("schedule");
  ckpt.schedule = make_linear_schedule(sched.at("steps").get<int>(), sched.at("beta_start").get<double>(),
                                       sched.at("beta_end").get<double>());
  for (const auto& layer : manifest.at("layers")) {
    ad::Param p;
    p.name = layer.at("name").get<std::string>();
    p.value = to_matrix(read_array(dir / layer.at("file").get<std::string>()));
    if (p.value.rows() != layer.at("rows").get<Index>() || p.value.cols() != layer.at("cols").get<Index>()) {
      // Rank-1 arrays load as columns.
      if (p.value.size() == layer.at("rows").get<Index>() * layer.at("cols").get<Index>()) {
        p.value.resize(layer.at("rows").get<Index>(), layer.at("cols").get<Index>());
      } else {
        throw std::runtime_error("checkpoint shape mismatch for " + p.name);
      }
    }
    ckpt.params.params.push_back(std::move(p));
  }
  ckpt.params.validate();
  return ckpt;
}

}  // namespace dgd
