#include "dgd/array_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace dgd {

namespace {

static_assert(std::endian::native == std::endian::little, "DGD1 I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw std::runtime_error("DGD1: truncated header");
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

std::size_t Array::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string encode_array(const Array& array) {
  if (array.data.size() != array.element_count()) throw std::invalid_argument("DGD1: data/dims mismatch");
  std::string out(kArrayMagic, sizeof kArrayMagic);
  put_u32(out, static_cast<std::uint32_t>(array.dims.size()));
  for (auto d : array.dims) put_u32(out, d);
  const auto* raw = reinterpret_cast<const char*>(array.data.data());
  out.append(raw, array.data.size() * sizeof(float));
  return out;
}

Array decode_array(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kArrayMagic, 8) != 0) {
    throw std::runtime_error("DGD1: bad magic");
  }
  std::size_t pos = 8;
  Array array;
  const std::uint32_t rank = get_u32(bytes, pos);
  array.dims.resize(rank);
  for (auto& d : array.dims) d = get_u32(bytes, pos);
  const std::size_t n = array.element_count();
  if (bytes.size() != pos + n * sizeof(float)) throw std::runtime_error("DGD1: payload size mismatch");
  array.data.resize(n);
  std::memcpy(array.data.data(), bytes.data() + pos, n * sizeof(float));
  return array;
}

void write_array(const Array& array, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = encode_array(array);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Array read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_array(bytes);
}

Array to_array(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Array a;
  a.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  a.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.data.push_back(static_cast<float>(m(r, c)));
  }
  return a;
}

Array to_array_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Array a;
  a.dims = {static_cast<std::uint32_t>(v.size())};
  a.data.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) a.data.push_back(static_cast<float>(v(i)));
  return a;
}

Eigen::MatrixXd to_matrix(const Array& array) {
  if (array.dims.size() == 1) {
    Eigen::MatrixXd m(array.dims[0], 1);
    for (std::uint32_t i = 0; i < array.dims[0]; ++i) m(i, 0) = array.data[i];
    return m;
  }
  if (array.dims.size() != 2) throw std::runtime_error("DGD1: expected rank 1 or 2");
  const auto rows = array.dims[0], cols = array.dims[1];
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = array.data[std::size_t{r} * cols + c];
  }
  return m;
}

}  // namespace dgd
