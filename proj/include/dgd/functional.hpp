#pragma once

#include "dgd/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgd {

/// Thrown when no point's argmax hits the queried label.
class AffordanceNotFound : public std::runtime_error {
 public:
  AffordanceNotFound() : std::runtime_error("affordance not found on object") {}
};

struct LabelEmbeddingSet {
  std::vector<std::string> labels;
  Eigen::MatrixXd embeddings;  // n x D
  double temperature = 0.07;

  Index size() const { return static_cast<Index>(labels.size()); }
  Index index_of(const std::string& label) const;
  void validate() const;
};

struct PointFeatureField {
  PointCloud cloud;
  Eigen::MatrixXd features;  // z x D

  void validate() const;
};

struct AffordanceSegmentation {
  Eigen::MatrixXd probabilities;  // z x n
  Eigen::VectorXi argmax_label;
};

/// Cosine similarity between every point feature and every label embedding.
Eigen::MatrixXd correlation_matrix(const PointFeatureField& field, const LabelEmbeddingSet& labels);

/// Row-wise softmax of S / temperature with max subtraction.
AffordanceSegmentation affordance_softmax(const Eigen::MatrixXd& S, double temperature);

/// Points whose argmax equals `label_index`; may be empty.
PointCloud extract_affordance_region(const AffordanceSegmentation& seg, const PointCloud& cloud, Index label_index);

struct Selection {
  Index index = -1;
  double score = 0.0;
};

/// Chamfer argmin over candidates with nonempty contact regions; ties go to
/// the lowest index. Throws "no contactful candidates" when every region is
/// empty.
Selection select_functional_grasp(const std::vector<PointCloud>& contact_regions, const PointCloud& region);

/// Deterministic geometric features: [p / radius, normal, curvature] lifted to
/// `dim` by a seeded Gaussian matrix. Positions are taken about the centroid.
PointFeatureField toy_point_features(const PointCloud& cloud, Index dim, std::uint64_t seed, Index neighbours = 16);

/// The toy encoder's fixed 7 x dim Gaussian projection.
Eigen::MatrixXd toy_projection(Index dim, std::uint64_t seed);
/// Label embedding for a 7-d prototype [position / radius, normal, curvature].
Eigen::RowVectorXd toy_label_embedding(const Eigen::Matrix<double, 7, 1>& prototype, Index dim, std::uint64_t seed);

/// Label file: {"temperature": t, "labels": [{"text": s, "dgd1_path": p}]}
/// with paths relative to the file.
LabelEmbeddingSet load_label_embeddings(const std::filesystem::path& path);
void save_label_embeddings(const LabelEmbeddingSet& set, const std::filesystem::path& path);

/// DGD1 z x D matrix plus an ASCII PLY of the z points.
PointFeatureField load_feature_field(const std::filesystem::path& features, const std::filesystem::path& cloud);

}  // namespace dgd
