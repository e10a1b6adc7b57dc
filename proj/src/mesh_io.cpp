#include "dgd/mesh_io.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace dgd {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

// Reads the next non-empty, non-comment line.
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

TriangleMesh from_soup(const std::vector<std::array<Eigen::Vector3d, 3>>& facets) {
  std::map<std::array<double, 3>, int> index;
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> tris;
  for (const auto& facet : facets) {
    Eigen::Vector3i t;
    for (int k = 0; k < 3; ++k) {
      const std::array<double, 3> key{facet[k].x(), facet[k].y(), facet[k].z()};
      auto [it, inserted] = index.try_emplace(key, static_cast<int>(verts.size()));
      if (inserted) verts.push_back(facet[k]);
      t(k) = it->second;
    }
    tris.push_back(t);
  }
  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<Index>(i)) = verts[i];
  mesh.triangles.resize(static_cast<Index>(tris.size()), 3);
  for (std::size_t i = 0; i < tris.size(); ++i) mesh.triangles.row(static_cast<Index>(i)) = tris[i];
  return mesh;
}

TriangleMesh read_stl_ascii(std::istream& in) {
  std::vector<std::array<Eigen::Vector3d, 3>> facets;
  std::array<Eigen::Vector3d, 3> cur;
  int corner = 0;
  std::string word;
  while (in >> word) {
    if (word == "vertex") {
      double x, y, z;
      in >> x >> y >> z;
      if (corner < 3) cur[corner] = {x, y, z};
      ++corner;
    } else if (word == "endloop") {
      if (corner != 3) throw std::runtime_error("stl: facet without three vertices");
      facets.push_back(cur);
      corner = 0;
    }
  }
  return from_soup(facets);
}

TriangleMesh read_stl_binary(const std::string& bytes) {
  if (bytes.size() < 84) throw std::runtime_error("stl: truncated header");
  std::uint32_t n = 0;
  std::memcpy(&n, bytes.data() + 80, 4);
  if (bytes.size() < 84 + std::size_t{n} * 50) throw std::runtime_error("stl: truncated body");
  std::vector<std::array<Eigen::Vector3d, 3>> facets(n);
  for (std::uint32_t f = 0; f < n; ++f) {
    const char* rec = bytes.data() + 84 + std::size_t{f} * 50 + 12;  // skip normal
    for (int k = 0; k < 3; ++k) {
      float xyz[3];
      std::memcpy(xyz, rec + 12 * k, 12);
      facets[f][k] = {xyz[0], xyz[1], xyz[2]};
    }
  }
  return from_soup(facets);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

TriangleMesh read_mesh(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return read_off(path);
  if (ext == ".stl") return read_stl(path);
  throw std::runtime_error("unsupported mesh format: " + path.string());
}

TriangleMesh read_off(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!next_line(in, line) || line.rfind("OFF", 0) != 0) throw std::runtime_error("off: missing header");
  std::istringstream header(line.size() > 3 ? line.substr(3) : std::string{});
  Index nv = -1, nf = -1, ne = 0;
  if (!(header >> nv >> nf)) {
    if (!next_line(in, line)) throw std::runtime_error("off: missing counts");
    std::istringstream counts(line);
    counts >> nv >> nf >> ne;
  }
  if (nv < 0 || nf < 0) throw std::runtime_error("off: bad counts");

  TriangleMesh mesh;
  mesh.vertices.resize(nv, 3);
  for (Index v = 0; v < nv; ++v) {
    if (!next_line(in, line)) throw std::runtime_error("off: truncated vertices");
    std::istringstream row(line);
    row >> mesh.vertices(v, 0) >> mesh.vertices(v, 1) >> mesh.vertices(v, 2);
  }
  std::vector<Eigen::Vector3i> tris;
  for (Index f = 0; f < nf; ++f) {
    if (!next_line(in, line)) throw std::runtime_error("off: truncated faces");
    std::istringstream row(line);
    int k = 0;
    row >> k;
    std::vector<int> idx(static_cast<std::size_t>(std::max(k, 0)));
    for (auto& i : idx) row >> i;
    // Fan-triangulate polygons.
    for (int j = 1; j + 1 < k; ++j) tris.emplace_back(idx[0], idx[j], idx[j + 1]);
  }
  mesh.triangles.resize(static_cast<Index>(tris.size()), 3);
  for (std::size_t i = 0; i < tris.size(); ++i) mesh.triangles.row(static_cast<Index>(i)) = tris[i];
  return mesh;
}

TriangleMesh read_stl(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  // "solid" prefixed binary files exist; trust the size field when it matches.
  if (bytes.size() >= 84) {
    std::uint32_t n = 0;
    std::memcpy(&n, bytes.data() + 80, 4);
    if (bytes.size() == 84 + std::size_t{n} * 50) return read_stl_binary(bytes);
  }
  if (bytes.rfind("solid", 0) == 0) {
    std::istringstream text(bytes);
    return read_stl_ascii(text);
  }
  return read_stl_binary(bytes);
}

void write_off(const TriangleMesh& mesh, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << " 0\n";
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    out << fmt_double(mesh.vertices(v, 0)) << ' ' << fmt_double(mesh.vertices(v, 1)) << ' '
        << fmt_double(mesh.vertices(v, 2)) << '\n';
  }
  for (Index f = 0; f < mesh.num_triangles(); ++f) {
    out << "3 " << mesh.triangles(f, 0) << ' ' << mesh.triangles(f, 1) << ' ' << mesh.triangles(f, 2) << '\n';
  }
}

void write_ply(const PointCloud& cloud, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << '\n'
      << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (cloud.labels) out << "property int label\n";
  out << "end_header\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    out << fmt_double(cloud.points(i, 0)) << ' ' << fmt_double(cloud.points(i, 1)) << ' '
        << fmt_double(cloud.points(i, 2));
    if (cloud.normals) {
      for (int k = 0; k < 3; ++k) out << ' ' << fmt_double((*cloud.normals)(i, k));
    }
    if (cloud.labels) out << ' ' << (*cloud.labels)(i);
    out << '\n';
  }
}

PointCloud read_ply(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw std::runtime_error("ply: missing magic");
  Index n = 0;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream row(line);
    std::string key;
    row >> key;
    if (key == "format") {
      std::string kind;
      row >> kind;
      if (kind != "ascii") throw std::runtime_error("ply: only ascii supported");
    } else if (key == "element") {
      std::string what;
      row >> what >> n;
    } else if (key == "property") {
      std::string type, name;
      row >> type >> name;
      props.push_back(name);
    } else if (key == "end_header") {
      break;
    }
  }
  auto col = [&](const std::string& name) -> int {
    const auto it = std::find(props.begin(), props.end(), name);
    return it == props.end() ? -1 : static_cast<int>(it - props.begin());
  };
  const int ix = col("x"), iy = col("y"), iz = col("z");
  const int inx = col("nx"), iny = col("ny"), inz = col("nz"), il = col("label");
  if (ix < 0 || iy < 0 || iz < 0) throw std::runtime_error("ply: missing xyz");

  PointCloud cloud;
  cloud.points.resize(n, 3);
  if (inx >= 0 && iny >= 0 && inz >= 0) cloud.normals.emplace(n, 3);
  if (il >= 0) cloud.labels.emplace(n);
  std::vector<double> vals(props.size());
  for (Index i = 0; i < n; ++i) {
    for (auto& v : vals) {
      if (!(in >> v)) throw std::runtime_error("ply: truncated data");
    }
    cloud.points.row(i) << vals[ix], vals[iy], vals[iz];
    if (cloud.normals) cloud.normals->row(i) << vals[inx], vals[iny], vals[inz];
    if (cloud.labels) (*cloud.labels)(i) = static_cast<int>(vals[il]);
  }
  return cloud;
}

}  // namespace dgd
