#include "dgd/hand_io.hpp"

#include "dgd/hand_roster.hpp"
#include "dgd/mesh_io.hpp"
#include "dgd/primitives.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace dgd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Isometry3d parse_origin(const json& j) {
  Eigen::Isometry3d tf = Eigen::Isometry3d::Identity();
  if (j.contains("xyz")) tf.translation() = vec3(j["xyz"]);
  if (j.contains("rpy")) {
    const Eigen::Vector3d rpy = vec3(j["rpy"]);
    tf.linear() = (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                   Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                   Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                      .toRotationMatrix();
  }
  return tf;
}

json origin_json(const Eigen::Isometry3d& tf) {
  // Inverse of parse_origin's Z-Y-X composition.
  const Eigen::Matrix3d& r = tf.linear();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {{"xyz", to_json(tf.translation())}, {"rpy", json::array({roll, pitch, yaw})}};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace

HandSpec load_hand_spec(const fs::path& path) {
  const json doc = read_json(path);
  if (doc.value("schema", "") != kHandSpecSchema) {
    throw std::runtime_error(path.string() + ": expected schema " + kHandSpecSchema);
  }
  const fs::path base = path.parent_path();
  HandSpec spec;
  spec.name = doc.at("name").get<std::string>();
  spec.class_id = doc.at("class_id").get<int>();
  spec.palm_link = doc.value("palm_link", 0);

  std::map<std::string, TriangleMesh> mesh_cache;
  for (const auto& lj : doc.at("links")) {
    LinkGeometry link;
    link.name = lj.value("name", "");
    link.finger_label = lj.at("finger_label").get<int>();
    link.mesh_path = lj.at("mesh_path").get<std::string>();
    if (lj.contains("scale")) link.mesh_scale = vec3(lj["scale"]);
    if (lj.contains("offset")) link.mesh_offset = vec3(lj["offset"]);
    if (lj.contains("contact_point")) link.contact_point = vec3(lj["contact_point"]);

    auto it = mesh_cache.find(link.mesh_path);
    if (it == mesh_cache.end()) it = mesh_cache.emplace(link.mesh_path, read_mesh(base / link.mesh_path)).first;
    link.mesh = it->second;
    for (Index v = 0; v < link.mesh.num_vertices(); ++v) {
      link.mesh.vertices.row(v) =
          link.mesh.vertices.row(v).cwiseProduct(link.mesh_scale.transpose()) + link.mesh_offset.transpose();
    }
    if (!lj.contains("contact_point")) link.contact_point = link.mesh.vertices.colwise().mean().transpose();
    spec.links.push_back(std::move(link));
  }

  for (const auto& jj : doc.at("joints")) {
    JointSpec js;
    js.name = jj.value("name", "");
    js.parent_link = jj.at("parent_link").get<int>();
    js.child_link = jj.at("child_link").get<int>();
    js.axis = vec3(jj.at("axis"));
    if (jj.contains("origin")) js.origin = parse_origin(jj["origin"]);
    const std::string type = jj.value("type", "revolute");
    if (type == "revolute") {
      js.type = JointType::Revolute;
    } else if (type == "prismatic") {
      js.type = JointType::Prismatic;
    } else {
      throw std::runtime_error("unknown joint type " + type);
    }
    js.lower = jj.at("lower").get<double>();
    js.upper = jj.at("upper").get<double>();
    spec.joints.push_back(js);
  }
  spec.finalize();
  return spec;
}

void save_hand_spec(const HandSpec& spec, const fs::path& path) {
  json doc;
  doc["schema"] = kHandSpecSchema;
  doc["name"] = spec.name;
  doc["class_id"] = spec.class_id;
  doc["palm_link"] = spec.palm_link;
  doc["links"] = json::array();
  for (const auto& link : spec.links) {
    doc["links"].push_back({{"name", link.name},
                            {"mesh_path", link.mesh_path},
                            {"scale", to_json(link.mesh_scale)},
                            {"offset", to_json(link.mesh_offset)},
                            {"finger_label", link.finger_label},
                            {"contact_point", to_json(link.contact_point)}});
  }
  doc["joints"] = json::array();
  for (const auto& js : spec.joints) {
    doc["joints"].push_back({{"name", js.name},
                             {"type", js.type == JointType::Revolute ? "revolute" : "prismatic"},
                             {"parent_link", js.parent_link},
                             {"child_link", js.child_link},
                             {"axis", to_json(js.axis)},
                             {"origin", origin_json(js.origin)},
                             {"lower", js.lower},
                             {"upper", js.upper}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<HandSpec> load_roster(const fs::path& path) {
  const json doc = read_json(path);
  if (doc.value("schema", "") != kHandRosterSchema) {
    throw std::runtime_error(path.string() + ": expected schema " + kHandRosterSchema);
  }
  std::vector<HandSpec> hands;
  std::set<int> classes;
  for (const auto& entry : doc.at("hands")) {
    hands.push_back(load_hand_spec(path.parent_path() / entry.get<std::string>()));
    if (!classes.insert(hands.back().class_id).second) {
      throw std::runtime_error("duplicate hand class id " + std::to_string(hands.back().class_id));
    }
  }
  std::sort(hands.begin(), hands.end(), [](const HandSpec& a, const HandSpec& b) { return a.class_id < b.class_id; });
  return hands;
}

void save_roster(const std::vector<HandSpec>& hands, const fs::path& dir) {
  fs::create_directories(dir);
  json doc;
  doc["schema"] = kHandRosterSchema;
  doc["hands"] = json::array();
  bool unit_box = false;
  for (const auto& hand : hands) {
    const std::string file = hand.name + ".json";
    save_hand_spec(hand, dir / file);
    doc["hands"].push_back(file);
    for (const auto& link : hand.links) unit_box = unit_box || link.mesh_path == kUnitBoxMesh;
  }
  if (unit_box) write_off(make_box(Eigen::Vector3d::Constant(0.5)), dir / kUnitBoxMesh);
  std::ofstream out(dir / "roster.json");
  out << doc.dump(2) << '\n';
}

const HandSpec& hand_by_class(const std::vector<HandSpec>& roster, int class_id) {
  for (const auto& h : roster) {
    if (h.class_id == class_id) return h;
  }
  throw std::out_of_range("no hand with class id " + std::to_string(class_id));
}

const HandSpec& hand_by_name(const std::vector<HandSpec>& roster, const std::string& name) {
  for (const auto& h : roster) {
    if (h.name == name) return h;
  }
  throw std::out_of_range("no hand named " + name);
}

}  // namespace dgd
