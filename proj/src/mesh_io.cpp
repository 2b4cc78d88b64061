#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "shapeopt/mesh.hpp"

namespace shapeopt {

namespace {

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw MeshError("cannot open for writing: " + tmp);
    out << content;
    if (!out) throw MeshError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw MeshError("rename failed: " + path);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Even-odd ray casting against an unordered set of interface segments.
bool inside_interface(const TriMesh& m, int itag, const Vec2& p) {
  int crossings = 0;
  for (const auto& f : m.facets) {
    if (f.tag != itag) continue;
    const Vec2& a = m.nodes[f.a];
    const Vec2& b = m.nodes[f.b];
    if ((a.y() > p.y()) == (b.y() > p.y())) continue;
    const double x = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
    if (x > p.x()) ++crossings;
  }
  return crossings % 2 == 1;
}

}  // namespace

void write_native(const TriMesh& mesh, const std::string& path) {
  std::ostringstream out;
  out << "trimesh 2\n";
  out << "nodes " << mesh.n_nodes() << "\n";
  for (const auto& p : mesh.nodes) out << fmt(p.x()) << " " << fmt(p.y()) << "\n";
  out << "cells " << mesh.n_tris() << "\n";
  for (const auto& t : mesh.tris) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "facets " << mesh.facets.size() << "\n";
  for (const auto& f : mesh.facets)
    out << f.a << " " << f.b << " " << mesh.tag_names[f.tag] << "\n";
  atomic_write(path, out.str());
}

TriMesh read_native(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file: " + path);
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "trimesh" || version != 2) throw MeshError("not a trimesh-2 file: " + path);
  TriMesh m;
  int n = 0;
  in >> word >> n;
  if (word != "nodes") throw MeshError("expected 'nodes' section");
  m.nodes.resize(n);
  for (auto& p : m.nodes) in >> p.x() >> p.y();
  in >> word >> n;
  if (word != "cells") throw MeshError("expected 'cells' section");
  m.tris.resize(n);
  for (auto& t : m.tris) in >> t[0] >> t[1] >> t[2];
  in >> word >> n;
  if (word != "facets") throw MeshError("expected 'facets' section");
  m.facets.resize(n);
  for (auto& f : m.facets) {
    std::string tag;
    in >> f.a >> f.b >> tag;
    f.tag = m.add_tag(tag);
  }
  if (!in) throw MeshError("truncated mesh file: " + path);
  m.make_ccw();
  // Transmission meshes: rebuild in/out region tags from the interface loop.
  const int itag = m.tag_id("interface");
  if (itag >= 0) {
    const int rin = m.add_tag("in"), rout = m.add_tag("out");
    m.tri_regions.resize(m.n_tris());
    for (int t = 0; t < m.n_tris(); ++t)
      m.tri_regions[t] = inside_interface(m, itag, m.centroid(t)) ? rin : rout;
  }
  m.validate();
  m.touch();
  return m;
}

TriMesh read_gmsh_v2(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open gmsh file: " + path);
  TriMesh m;
  std::map<int, int> phys_tag;       // gmsh physical id -> local tag id
  std::map<long, int> node_index;    // gmsh node id -> local index
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("$MeshFormat", 0) == 0) {
      double ver = 0;
      in >> ver;
      if (ver < 2.0 || ver >= 3.0) throw MeshError("only gmsh v2 ASCII is supported");
      std::getline(in, line);
    } else if (line.rfind("$PhysicalNames", 0) == 0) {
      int count = 0;
      in >> count;
      for (int i = 0; i < count; ++i) {
        int dim = 0, id = 0;
        std::string name;
        in >> dim >> id >> name;
        if (name.size() >= 2 && name.front() == '"') name = name.substr(1, name.size() - 2);
        phys_tag[id] = m.add_tag(name);
      }
    } else if (line.rfind("$Nodes", 0) == 0) {
      int count = 0;
      in >> count;
      for (int i = 0; i < count; ++i) {
        long id = 0;
        double x = 0, y = 0, z = 0;
        in >> id >> x >> y >> z;
        node_index[id] = m.n_nodes();
        m.nodes.push_back({x, y});
      }
    } else if (line.rfind("$Elements", 0) == 0) {
      int count = 0;
      in >> count;
      for (int i = 0; i < count; ++i) {
        long id = 0;
        int type = 0, ntags = 0;
        in >> id >> type >> ntags;
        std::vector<int> tags(ntags);
        for (auto& t : tags) in >> t;
        const int phys = ntags > 0 ? tags[0] : -1;
        if (type == 1) {
          long a, b;
          in >> a >> b;
          Facet f;
          f.a = node_index.at(a);
          f.b = node_index.at(b);
          f.tag = phys_tag.count(phys) ? phys_tag[phys] : m.add_tag("boundary");
          m.facets.push_back(f);
        } else if (type == 2) {
          long a, b, c;
          in >> a >> b >> c;
          m.tris.push_back({node_index.at(a), node_index.at(b), node_index.at(c)});
          m.tri_regions.push_back(phys_tag.count(phys) ? phys_tag[phys] : -1);
        } else {
          std::getline(in, line);  // skip unsupported element types
        }
      }
    }
  }
  if (m.n_tris() == 0) throw MeshError("no triangles found in gmsh file");
  bool any_region = false;
  for (int r : m.tri_regions) any_region |= r >= 0;
  if (!any_region) m.tri_regions.clear();
  m.make_ccw();
  m.validate();
  return m;
}

void write_vtk(const TriMesh& mesh,
               const std::vector<std::pair<std::string, NodalField>>& fields,
               const std::string& path) {
  std::ostringstream out;
  out << "# vtk DataFile Version 2.0\n";
  out << "shapeopt snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_nodes() << " double\n";
  for (const auto& p : mesh.nodes) out << fmt(p.x()) << " " << fmt(p.y()) << " 0\n";
  out << "CELLS " << mesh.n_tris() << " " << 4 * mesh.n_tris() << "\n";
  for (const auto& t : mesh.tris) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.n_tris() << "\n";
  for (int t = 0; t < mesh.n_tris(); ++t) out << "5\n";
  if (!fields.empty()) {
    out << "POINT_DATA " << mesh.n_nodes() << "\n";
    for (const auto& [name, f] : fields) {
      f.check_compatible(mesh);
      if (f.comps == 1) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int i = 0; i < mesh.n_nodes(); ++i) out << fmt(f.values[i]) << "\n";
      } else {
        out << "VECTORS " << name << " double\n";
        for (int i = 0; i < mesh.n_nodes(); ++i)
          out << fmt(f.values[2 * i]) << " " << fmt(f.values[2 * i + 1]) << " 0\n";
      }
    }
  }
  atomic_write(path, out.str());
}

}  // namespace shapeopt
