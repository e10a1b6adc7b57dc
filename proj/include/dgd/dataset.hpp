#pragma once

#include "dgd/diffusion.hpp"
#include "dgd/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace dgd {

inline constexpr const char* kDatasetSchema = "dgd_dataset_v1";

struct DatasetObject {
  std::string id;
  std::string mesh_path;   // relative to the manifest
  std::string cloud_path;  // relative to the manifest
  TriangleMesh mesh;
  PointCloud cloud;  // surface samples with normals, object frame
};

struct Dataset {
  std::vector<DatasetObject> objects;
  std::vector<GraspRecord> records;

  const DatasetObject& object(const std::string& id) const;
};

/// {object_id, hand_class, rotation: [w, x, y, z], pose: [27]}
nlohmann::json grasp_record_to_json(const GraspRecord& record);
GraspRecord grasp_record_from_json(const nlohmann::json& j);

/// Writes dataset.json plus each object's mesh (OFF) and cloud (DGD1, N x 6
/// of points and normals) into `dir`.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// `path` is the manifest file.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace dgd
