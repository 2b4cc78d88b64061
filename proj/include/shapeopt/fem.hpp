#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "shapeopt/mesh.hpp"

namespace shapeopt {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class SpaceKind { P1Scalar, P1Vector2, P2Vector2, TaylorHood };

/// Dof layout over a mesh. P1 dofs are the mesh nodes (x/y interleaved for
/// vector spaces); P2 adds one dof per edge, with edges identified by their
/// sorted node pair so neighbours always agree. TaylorHood stacks a P2 vector
/// velocity block in front of a P1 scalar pressure block.
class FunctionSpace {
public:
  FunctionSpace(SpaceKind kind, const TriMesh& mesh);

  SpaceKind kind() const { return kind_; }
  const TriMesh& mesh() const { return *mesh_; }
  int n_dofs() const { return n_dofs_; }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  int velocity_dofs() const;  // TaylorHood only
  int pressure_offset() const;

  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  // Local edge e of a triangle connects local vertices e and (e+1)%3.
  const std::vector<std::array<int, 3>>& tri_edges() const { return tri_edges_; }

  Vec2 edge_midpoint(int e) const;

  /// Dofs on facets with the given tags. For vector spaces both components of a
  /// node (and, for P2, of the edge dof of each tagged facet) are returned.
  std::vector<int> dofs_on_tags(const std::vector<std::string>& tags) const;

private:
  SpaceKind kind_;
  const TriMesh* mesh_;
  int n_dofs_ = 0;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
};

struct DirichletBC {
  int dof = -1;
  double value = 0.0;
};

/// Assembled linear problem: matrix, right-hand side, Dirichlet constraints,
/// and an optional single mean-zero multiplier row.
struct LinearSystem {
  SparseMatrix A;
  Eigen::VectorXd rhs;
  std::vector<DirichletBC> bcs;
  Eigen::VectorXd mean_zero_row;  // empty unless a mean-zero constraint was added
  bool spd = false;
};

/// Direct factorization of a constrained system. Constraints are applied by
/// symmetric elimination (zeroed rows/columns, unit diagonal, lifted rhs), the
/// mean-zero constraint by a bordered multiplier row. The factorization can be
/// reused for several right-hand sides, optionally with homogeneous versions
/// of the Dirichlet values (as needed for adjoint solves).
class FactorizedOperator {
public:
  explicit FactorizedOperator(const LinearSystem& system);
  ~FactorizedOperator();
  FactorizedOperator(FactorizedOperator&&) noexcept;
  FactorizedOperator& operator=(FactorizedOperator&&) noexcept;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, bool homogeneous_bc = false) const;
  Eigen::VectorXd solve() const { return solve(rhs_, false); }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Eigen::VectorXd rhs_;
};

/// One-shot constrained solve with residual verification
/// (residual <= 1e-10 * (|rhs| + |A| |x|)).
Eigen::VectorXd solve(const LinearSystem& system);

// -- Quadrature ----------------------------------------------------------------

struct TriQuadrature {
  // Barycentric points and weights; weights sum to one and are scaled by the
  // element area during assembly.
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

/// Symmetric degree-4 rule (6 points), exact for quintic-free P2 x P2 terms.
const TriQuadrature& quadrature_degree4();

struct SegmentQuadrature {
  std::vector<double> points;  // positions in [0,1]
  std::vector<double> weights;
};

/// 3-point Gauss rule on a segment (degree 5).
const SegmentQuadrature& segment_quadrature();

// -- Assembly -------------------------------------------------------------------

/// Stiffness matrix of the form  integral kappa grad(u).grad(v) dx  on a P1
/// scalar space; kappa is constant per triangle (size 1 = uniform).
SparseMatrix assemble_poisson(const FunctionSpace& space, const Eigen::VectorXd& kappa);
SparseMatrix assemble_poisson(const FunctionSpace& space, double kappa = 1.0);

/// Load vector of  integral f v dx  with f evaluated at quadrature points.
Eigen::VectorXd assemble_load(const FunctionSpace& space,
                              const std::function<double(const Vec2&)>& density);

SparseMatrix assemble_mass(const FunctionSpace& space);

/// Per-node second Lame parameter; a constant is broadcast to every node.
struct MuSpec {
  bool laplace = false;
  double constant = 1.0;
  double mu_max = 500.0, mu_min = 1.0;
  std::string max_tag = "obstacle";
  std::vector<std::string> min_tags = {"inlet", "wall", "outlet"};
};

struct ElasticityParams {
  double lambda = 0.0;
  MuSpec mu;
  double delta = 0.0;
  std::vector<std::string> fixed_tags;
};

/// Matrix of a(V,W) = integral 2 mu eps(V):eps(W) + lambda div V div W
/// + delta V.W dx over a P1 vector space, with homogeneous Dirichlet rows on
/// fixed_tags. mu_nodal has one value per mesh node.
LinearSystem assemble_elasticity(const FunctionSpace& space, double lambda,
                                 const Eigen::VectorXd& mu_nodal, double delta,
                                 const std::vector<std::string>& fixed_tags);

/// Stokes saddle-point system on a TaylorHood space with a do-nothing outlet:
/// Dirichlet inflow profile on `inlet_tag`, no-slip on dirichlet_zero_tags.
LinearSystem assemble_stokes(const FunctionSpace& space,
                             const std::function<Vec2(const Vec2&)>& inflow,
                             const std::string& inlet_tag,
                             const std::vector<std::string>& dirichlet_zero_tags);

/// Augments a pure-Neumann system with a Lagrange multiplier row enforcing
/// integral_{tagged boundary} u ds = 0.
LinearSystem apply_mean_zero_constraint(LinearSystem system, const FunctionSpace& space,
                                        const std::vector<std::string>& boundary_tags);

/// Boundary mass pairing: vector b with b_i = integral_{tagged} g phi_i ds for a
/// P1 scalar space, g given per facet position.
Eigen::VectorXd assemble_boundary_load(const FunctionSpace& space,
                                       const std::vector<std::string>& tags,
                                       const std::function<double(const Vec2&)>& g);

/// Stiffness matrix norm (max absolute row sum); used in residual checks.
double matrix_inf_norm(const SparseMatrix& A);

}  // namespace shapeopt
