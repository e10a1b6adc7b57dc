#include "dgd/functional.hpp"

#include "dgd/array_io.hpp"
#include "dgd/kdtree.hpp"
#include "dgd/mesh_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

namespace dgd {

Index LabelEmbeddingSet::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return static_cast<Index>(i);
  }
  throw std::out_of_range("unknown affordance label: " + label);
}

void LabelEmbeddingSet::validate() const {
  if (labels.empty()) throw std::invalid_argument("label set is empty");
  if (embeddings.rows() != size()) throw std::invalid_argument("one embedding per label required");
  if (!(temperature > 0) || !std::isfinite(temperature)) throw std::invalid_argument("temperature must be positive");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw std::invalid_argument("duplicate label");
  for (Index i = 0; i < embeddings.rows(); ++i) {
    if (!(embeddings.row(i).norm() > 0)) throw std::invalid_argument("zero-norm embedding for " + labels[i]);
  }
}

void PointFeatureField::validate() const {
  if (features.rows() != cloud.size()) throw std::invalid_argument("one feature row per point required");
  for (Index i = 0; i < features.rows(); ++i) {
    if (!(features.row(i).norm() > 0)) throw std::invalid_argument("zero-norm point feature");
  }
}

Eigen::MatrixXd correlation_matrix(const PointFeatureField& field, const LabelEmbeddingSet& labels) {
  if (field.features.cols() != labels.embeddings.cols()) {
    throw std::invalid_argument("feature and embedding dimensions differ");
  }
  field.validate();
  labels.validate();
  const Eigen::MatrixXd C = field.features.rowwise().normalized();
  const Eigen::MatrixXd E = labels.embeddings.rowwise().normalized();
  Eigen::MatrixXd S = C * E.transpose();
  return S.cwiseMax(-1.0).cwiseMin(1.0);
}

AffordanceSegmentation affordance_softmax(const Eigen::MatrixXd& S, double temperature) {
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be positive");
  AffordanceSegmentation seg;
  const Eigen::MatrixXd z = S / temperature;
  seg.probabilities = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  seg.probabilities.array().colwise() /= seg.probabilities.rowwise().sum().array();
  seg.argmax_label.resize(S.rows());
  for (Index i = 0; i < S.rows(); ++i) {
    Index k = 0;
    S.row(i).maxCoeff(&k);
    seg.argmax_label(i) = static_cast<int>(k);
  }
  return seg;
}

PointCloud extract_affordance_region(const AffordanceSegmentation& seg, const PointCloud& cloud, Index label_index) {
  if (label_index < 0 || label_index >= seg.probabilities.cols()) throw std::out_of_range("label index out of range");
  if (seg.argmax_label.size() != cloud.size()) throw std::invalid_argument("segmentation does not match cloud");
  std::vector<Index> rows;
  for (Index i = 0; i < cloud.size(); ++i) {
    if (seg.argmax_label(i) == label_index) rows.push_back(i);
  }
  return cloud.subset(rows);
}

Selection select_functional_grasp(const std::vector<PointCloud>& contact_regions, const PointCloud& region) {
  if (contact_regions.empty()) throw std::invalid_argument("no candidates");
  if (region.empty()) throw AffordanceNotFound();
  Selection best;
  best.score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < contact_regions.size(); ++i) {
    if (contact_regions[i].empty()) continue;
    const double d = chamfer_distance(contact_regions[i], region);
    if (d < best.score) {
      best.score = d;
      best.index = static_cast<Index>(i);
    }
  }
  if (best.index < 0) throw std::runtime_error("no contactful candidates");
  return best;
}

PointFeatureField toy_point_features(const PointCloud& cloud, Index dim, std::uint64_t seed, Index neighbours) {
  if (cloud.size() < 3) throw std::invalid_argument("toy features need at least 3 points");
  if (dim < 1) throw std::invalid_argument("feature dimension must be positive");
  const Index n = cloud.size();
  const Index k = std::min(neighbours, n);
  const Eigen::RowVector3d centre = cloud.points.colwise().mean();
  const Eigen::MatrixX3d rel = cloud.points.rowwise() - centre;
  const double radius = std::max(rel.rowwise().norm().maxCoeff(), 1e-12);
  const KdTree tree(cloud.points);

  Eigen::MatrixXd geo(n, 7);
  for (Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = cloud.points.row(i).transpose();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    const auto hits = tree.k_nearest(p, k);
    for (const auto& h : hits) mean += cloud.points.row(h.index).transpose();
    mean /= static_cast<double>(hits.size());
    for (const auto& h : hits) {
      const Eigen::Vector3d d = cloud.points.row(h.index).transpose() - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d ev = eig.eigenvalues().cwiseMax(0.0);
    const double trace = ev.sum();
    const double curvature = trace > 0 ? ev(0) / trace : 0.0;
    Eigen::Vector3d normal = cloud.has_normals() ? Eigen::Vector3d(cloud.normals->row(i).transpose())
                                                 : Eigen::Vector3d(eig.eigenvectors().col(0));
    if (!cloud.has_normals() && normal.dot(p - centre.transpose()) < 0) normal = -normal;
    geo.block<1, 3>(i, 0) = rel.row(i) / radius;
    geo.block<1, 3>(i, 3) = normal.transpose();
    geo(i, 6) = curvature;
  }

  PointFeatureField field;
  field.cloud = cloud;
  field.features = geo * toy_projection(dim, seed);
  return field;
}

Eigen::MatrixXd toy_projection(Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd proj(7, dim);
  for (Index i = 0; i < proj.size(); ++i) proj.data()[i] = normal(rng);
  return proj;
}

Eigen::RowVectorXd toy_label_embedding(const Eigen::Matrix<double, 7, 1>& prototype, Index dim, std::uint64_t seed) {
  return prototype.transpose() * toy_projection(dim, seed);
}

LabelEmbeddingSet load_label_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read label file " + path.string());
  const auto j = nlohmann::json::parse(in);
  LabelEmbeddingSet set;
  set.temperature = j.value("temperature", 0.07);
  std::vector<Eigen::VectorXd> rows;
  for (const auto& entry : j.at("labels")) {
    set.labels.push_back(entry.at("text").get<std::string>());
    const Eigen::MatrixXd m = to_matrix(read_array(path.parent_path() / entry.at("dgd1_path").get<std::string>()));
    rows.push_back(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
  }
  if (rows.empty()) throw std::invalid_argument("label file lists no labels");
  set.embeddings.resize(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw std::invalid_argument("label embeddings differ in length");
    set.embeddings.row(static_cast<Index>(i)) = rows[i].transpose();
  }
  set.validate();
  return set;
}

void save_label_embeddings(const LabelEmbeddingSet& set, const std::filesystem::path& path) {
  set.validate();
  nlohmann::json j;
  j["temperature"] = set.temperature;
  j["labels"] = nlohmann::json::array();
  for (Index i = 0; i < set.size(); ++i) {
    const std::string file = path.stem().string() + "_" + std::to_string(i) + ".dgd1";
    write_array(to_array_vector(set.embeddings.row(i).transpose()), path.parent_path() / file);
    j["labels"].push_back({{"text", set.labels[static_cast<std::size_t>(i)]}, {"dgd1_path", file}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

PointFeatureField load_feature_field(const std::filesystem::path& features, const std::filesystem::path& cloud) {
  PointFeatureField field;
  field.cloud = read_ply(cloud);
  field.features = to_matrix(read_array(features));
  field.validate();
  return field;
}

}  // namespace dgd
