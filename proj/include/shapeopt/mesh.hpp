#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace shapeopt {

using Vec2 = Eigen::Vector2d;

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Boundary edge (node pair) carrying a symbolic tag (index into TriMesh::tag_names).
/// Facets are oriented so that the mesh interior lies to the left of a->b; for
/// interior holes (e.g. a flow obstacle) this makes rot(-90) of b-a point out of
/// the meshed region.
struct Facet {
  int a = -1;
  int b = -1;
  int tag = -1;
};

/// Conforming triangle mesh of a planar domain. Triangles are counterclockwise,
/// boundary facets form closed loops, and every facet carries exactly one tag.
class TriMesh {
public:
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  std::vector<Facet> facets;
  std::vector<std::string> tag_names;
  // Optional per-triangle region tag (index into tag_names), -1 if untagged.
  // Used by transmission problems whose material interface moves with the mesh.
  std::vector<int> tri_regions;

  TriMesh();

  std::uint64_t id() const { return id_; }
  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_tris() const { return static_cast<int>(tris.size()); }

  double signed_area(int t) const;
  double total_area() const;
  Vec2 centroid(int t) const;
  double facet_length(int f) const;

  int tag_id(const std::string& name) const;  // -1 if absent
  int add_tag(const std::string& name);       // existing id if already present
  bool has_tag(const std::string& name) const { return tag_id(name) >= 0; }

  /// Node indices lying on facets with one of the given tags (sorted, unique).
  std::vector<int> nodes_on_tags(const std::vector<std::string>& tags) const;
  std::vector<int> boundary_nodes() const;

  /// Enforce counterclockwise node ordering by swapping two indices of any
  /// triangle with negative signed area.
  void make_ccw();

  /// Structural checks: positive areas, valid indices, facets form closed loops.
  void validate() const;

  bool same_connectivity(const TriMesh& other) const;

  /// Stamp a fresh identity; used after any geometry rebuild.
  void touch();

private:
  std::uint64_t id_;
};

struct QualityReport {
  double min_signed_area = 0.0;
  double min_area_ratio = 0.0;
  bool admissible = false;
};

/// Coefficient vector over mesh nodes: one scalar (comps=1) or one 2-vector
/// (comps=2, interleaved [vx0, vy0, vx1, ...]) per node.
struct NodalField {
  Eigen::VectorXd values;
  int comps = 1;
  std::uint64_t mesh_id = 0;

  static NodalField zero(const TriMesh& m, int comps);
  static NodalField from_values(const TriMesh& m, Eigen::VectorXd v, int comps);

  Vec2 vec_at(int node) const { return {values[2 * node], values[2 * node + 1]}; }
  int n_entries() const { return static_cast<int>(values.size()); }
  void check_compatible(const TriMesh& m) const;
};

// -- Generators --------------------------------------------------------------

/// Quasi-uniform triangulation of a disk built from hexagonal rings; boundary
/// tagged "outer". The ring count is chosen so the element count is as close
/// as possible to target_elems (exact counts 6 n^2 elements, 1 + 3 n (n+1) nodes).
TriMesh generate_disk(const Vec2& center, double radius, int target_elems);

struct InterfaceSpec {
  enum class Kind { Square, Circle };
  Kind kind = Kind::Square;
  Vec2 center{0.5, 0.5};
  double size = 0.4;  // edge length (Square) or radius (Circle)
};

/// Unit square (0,1)^2 with a resolved interior interface. Outer sides are
/// tagged top/bottom/left/right, the interface facets "interface", and the
/// triangles carry region tags "in"/"out".
TriMesh generate_square_with_interface(const InterfaceSpec& inner, int target_elems);

/// Flow channel box minus a circular obstacle (the hole is unmeshed).
/// Tags: inlet (x=x_min), outlet (x=x_max), wall (y=y_min/y_max), obstacle.
TriMesh generate_channel_with_obstacle(const Vec2& box_lo, const Vec2& box_hi,
                                       const Vec2& obstacle_center, double obstacle_radius,
                                       int target_elems);

/// Structured rectangle grid with inlet/outlet/wall tags; test helper geometry.
TriMesh generate_rectangle(const Vec2& lo, const Vec2& hi, int nx, int ny);

// -- Deformation, transport, admissibility -----------------------------------

/// Additive retraction: node i moves to x_i + V_i (exact floating-point
/// addition); connectivity and tags are unchanged, the identity is fresh.
TriMesh deform(const TriMesh& mesh, const NodalField& displacement);

/// Admissibility of `deformed` relative to `original` (same connectivity):
/// rejects sign-flipped elements and area ratios below area_floor.
QualityReport admissibility(const TriMesh& original, const TriMesh& deformed, double area_floor);

/// Nodal-identity vector transport: the coefficient array is reused verbatim,
/// only the mesh identity changes. Requires matching connectivity.
NodalField transport(const NodalField& field, const TriMesh& from, const TriMesh& to);

// -- I/O ----------------------------------------------------------------------

void write_native(const TriMesh& mesh, const std::string& path);
TriMesh read_native(const std::string& path);
TriMesh read_gmsh_v2(const std::string& path);
void write_vtk(const TriMesh& mesh,
               const std::vector<std::pair<std::string, NodalField>>& fields,
               const std::string& path);

/// Arc length of a boundary node along the unit-square boundary, measured
/// counterclockwise from (0,0); domain [0,4).
double unit_square_arclength(const Vec2& p);

}  // namespace shapeopt
