#include "shapeopt/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>

namespace shapeopt {

namespace {
std::uint64_t next_mesh_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}
}  // namespace

TriMesh::TriMesh() : id_(next_mesh_id()) {}

void TriMesh::touch() { id_ = next_mesh_id(); }

double TriMesh::signed_area(int t) const {
  const auto& tri = tris[t];
  const Vec2& a = nodes[tri[0]];
  const Vec2& b = nodes[tri[1]];
  const Vec2& c = nodes[tri[2]];
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < n_tris(); ++t) s += signed_area(t);
  return s;
}

Vec2 TriMesh::centroid(int t) const {
  const auto& tri = tris[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

double TriMesh::facet_length(int f) const {
  return (nodes[facets[f].b] - nodes[facets[f].a]).norm();
}

int TriMesh::tag_id(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(tag_names.size()); ++i)
    if (tag_names[i] == name) return i;
  return -1;
}

int TriMesh::add_tag(const std::string& name) {
  int id = tag_id(name);
  if (id >= 0) return id;
  tag_names.push_back(name);
  return static_cast<int>(tag_names.size()) - 1;
}

std::vector<int> TriMesh::nodes_on_tags(const std::vector<std::string>& tags) const {
  std::set<int> wanted;
  for (const auto& t : tags) {
    int id = tag_id(t);
    if (id < 0) throw MeshError("unknown boundary tag: " + t);
    wanted.insert(id);
  }
  std::set<int> out;
  for (const auto& f : facets) {
    if (wanted.count(f.tag)) {
      out.insert(f.a);
      out.insert(f.b);
    }
  }
  return {out.begin(), out.end()};
}

std::vector<int> TriMesh::boundary_nodes() const {
  std::set<int> out;
  for (const auto& f : facets) {
    out.insert(f.a);
    out.insert(f.b);
  }
  return {out.begin(), out.end()};
}

void TriMesh::make_ccw() {
  for (int t = 0; t < n_tris(); ++t)
    if (signed_area(t) < 0.0) std::swap(tris[t][1], tris[t][2]);
}

void TriMesh::validate() const {
  const int nn = n_nodes();
  for (const auto& tri : tris)
    for (int v : tri)
      if (v < 0 || v >= nn) throw MeshError("triangle node index out of range");
  for (int t = 0; t < n_tris(); ++t)
    if (signed_area(t) <= 0.0) throw MeshError("non-positive triangle area");
  // Each boundary node must have exactly as many incoming as outgoing facets,
  // which is what closed loops amount to.
  std::map<int, int> degree;
  for (const auto& f : facets) {
    if (f.a < 0 || f.a >= nn || f.b < 0 || f.b >= nn) throw MeshError("facet node index out of range");
    if (f.tag < 0 || f.tag >= static_cast<int>(tag_names.size())) throw MeshError("facet tag out of range");
    degree[f.a] += 1;
    degree[f.b] -= 1;
  }
  for (const auto& [node, d] : degree)
    if (d != 0) throw MeshError("boundary facets do not form closed loops");
  if (!tri_regions.empty() && tri_regions.size() != tris.size())
    throw MeshError("tri_regions size mismatch");
}

bool TriMesh::same_connectivity(const TriMesh& other) const {
  return nodes.size() == other.nodes.size() && tris == other.tris;
}

NodalField NodalField::zero(const TriMesh& m, int comps) {
  NodalField f;
  f.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.n_nodes()) * comps);
  f.comps = comps;
  f.mesh_id = m.id();
  return f;
}

NodalField NodalField::from_values(const TriMesh& m, Eigen::VectorXd v, int comps) {
  if (v.size() != static_cast<Eigen::Index>(m.n_nodes()) * comps)
    throw MeshError("nodal field length does not match mesh");
  NodalField f;
  f.values = std::move(v);
  f.comps = comps;
  f.mesh_id = m.id();
  return f;
}

void NodalField::check_compatible(const TriMesh& m) const {
  if (mesh_id != m.id()) throw MeshError("nodal field indexed against a different mesh");
  if (values.size() != static_cast<Eigen::Index>(m.n_nodes()) * comps)
    throw MeshError("nodal field length does not match mesh");
}

TriMesh deform(const TriMesh& mesh, const NodalField& displacement) {
  displacement.check_compatible(mesh);
  if (displacement.comps != 2) throw MeshError("deform needs a vector-valued field");
  TriMesh out = mesh;
  for (int i = 0; i < out.n_nodes(); ++i) {
    out.nodes[i].x() += displacement.values[2 * i];
    out.nodes[i].y() += displacement.values[2 * i + 1];
  }
  out.touch();
  return out;
}

QualityReport admissibility(const TriMesh& original, const TriMesh& deformed, double area_floor) {
  if (!original.same_connectivity(deformed)) throw MeshError("admissibility: connectivity mismatch");
  QualityReport rep;
  rep.min_signed_area = std::numeric_limits<double>::infinity();
  rep.min_area_ratio = std::numeric_limits<double>::infinity();
  for (int t = 0; t < original.n_tris(); ++t) {
    const double a0 = original.signed_area(t);
    const double a1 = deformed.signed_area(t);
    rep.min_signed_area = std::min(rep.min_signed_area, a1);
    rep.min_area_ratio = std::min(rep.min_area_ratio, a1 / a0);
  }
  rep.admissible = rep.min_signed_area > 0.0 && rep.min_area_ratio >= area_floor;
  return rep;
}

NodalField transport(const NodalField& field, const TriMesh& from, const TriMesh& to) {
  field.check_compatible(from);
  if (!from.same_connectivity(to)) throw MeshError("transport: connectivity mismatch");
  NodalField out = field;
  out.mesh_id = to.id();
  return out;
}

double unit_square_arclength(const Vec2& p) {
  const double eps = 1e-9;
  if (std::abs(p.y()) < eps) return p.x();              // bottom
  if (std::abs(p.x() - 1.0) < eps) return 1.0 + p.y();  // right
  if (std::abs(p.y() - 1.0) < eps) return 3.0 - p.x();  // top
  if (std::abs(p.x()) < eps) return 4.0 - p.y();        // left
  throw MeshError("point is not on the unit-square boundary");
}

}  // namespace shapeopt
