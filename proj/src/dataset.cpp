#include "dgd/dataset.hpp"

#include "dgd/array_io.hpp"
#include "dgd/mesh_io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>

namespace dgd {

using nlohmann::json;

const DatasetObject& Dataset::object(const std::string& id) const {
  for (const auto& o : objects) {
    if (o.id == id) return o;
  }
  throw std::out_of_range("unknown object id: " + id);
}

json grasp_record_to_json(const GraspRecord& r) {
  const Eigen::Quaterniond q = r.rotation.quaternion();
  const PoseVector v = r.pose.to_vector();
  return {{"object_id", r.object_id},
          {"hand_class", r.hand_class},
          {"rotation", {q.w(), q.x(), q.y(), q.z()}},
          {"pose", std::vector<double>(v.data(), v.data() + v.size())}};
}

GraspRecord grasp_record_from_json(const json& j) {
  GraspRecord rec;
  rec.object_id = j.at("object_id").get<std::string>();
  rec.hand_class = j.at("hand_class").get<int>();
  const auto q = j.at("rotation").get<std::vector<double>>();
  if (q.size() != 4) throw std::runtime_error("rotation must be a wxyz quaternion");
  rec.rotation = Rotation3::from_quaternion(Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized());
  const auto p = j.at("pose").get<std::vector<double>>();
  if (p.size() != kPoseDim) throw std::runtime_error("pose must have 27 entries");
  rec.pose = HandPose::from_vector(Eigen::Map<const PoseVector>(p.data()));
  return rec;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "objects");
  json objects = json::array();
  std::set<std::string> ids;
  for (const auto& o : dataset.objects) {
    if (!ids.insert(o.id).second) throw std::invalid_argument("duplicate object id " + o.id);
    const std::string mesh = "objects/" + o.id + ".off";
    const std::string cloud = "objects/" + o.id + ".dgd1";
    write_off(o.mesh, dir / mesh);
    if (!o.cloud.has_normals()) throw std::invalid_argument("dataset clouds need normals");
    Eigen::MatrixXd pn(o.cloud.size(), 6);
    pn << o.cloud.points, *o.cloud.normals;
    write_array(to_array(pn), dir / cloud);
    objects.push_back({{"id", o.id}, {"mesh", mesh}, {"cloud", cloud}});
  }
  json records = json::array();
  for (const auto& r : dataset.records) {
    if (!ids.count(r.object_id)) throw std::invalid_argument("record references unknown object " + r.object_id);
    records.push_back(grasp_record_to_json(r));
  }
  std::ofstream out(dir / "dataset.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "dataset.json").string());
  out << json{{"schema", kDatasetSchema}, {"objects", objects}, {"records", records}}.dump(1) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset " + path.string());
  const json j = json::parse(in);
  if (j.value("schema", "") != kDatasetSchema) throw std::runtime_error("unknown dataset schema");
  const auto base = path.parent_path();
  Dataset d;
  for (const auto& o : j.at("objects")) {
    DatasetObject obj;
    obj.id = o.at("id").get<std::string>();
    obj.mesh_path = o.at("mesh").get<std::string>();
    obj.cloud_path = o.at("cloud").get<std::string>();
    obj.mesh = read_mesh(base / obj.mesh_path);
    const Eigen::MatrixXd pn = to_matrix(read_array(base / obj.cloud_path));
    if (pn.cols() != 6) throw std::runtime_error("object cloud must be N x 6");
    obj.cloud.points = pn.leftCols(3);
    obj.cloud.normals = Eigen::MatrixX3d(pn.rightCols(3).rowwise().normalized());
    d.objects.push_back(std::move(obj));
  }
  for (const auto& r : j.at("records")) {
    GraspRecord rec = grasp_record_from_json(r);
    d.object(rec.object_id);
    d.records.push_back(rec);
  }
  return d;
}

}  // namespace dgd
