#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dgd {

/// Dense float32 tensor in "DGD1" layout: the 8-byte magic "DGDARR01", a
/// little-endian u32 rank, u32 dims[rank], then row-major little-endian
/// float32 data.
struct Array {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

inline constexpr char kArrayMagic[8] = {'D', 'G', 'D', 'A', 'R', 'R', '0', '1'};

std::string encode_array(const Array& array);
Array decode_array(const std::string& bytes);

void write_array(const Array& array, const std::filesystem::path& path);
Array read_array(const std::filesystem::path& path);

/// Rank-2 (rows x cols) view of a matrix; vectors are stored as rank 1.
Array to_array(const Eigen::Ref<const Eigen::MatrixXd>& m);
Array to_array_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
/// Rank 1 arrays become column vectors; rank 2 map directly.
Eigen::MatrixXd to_matrix(const Array& array);

}  // namespace dgd
