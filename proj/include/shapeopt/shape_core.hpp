#pragma once

#include <memory>

#include "shapeopt/fem.hpp"
#include "shapeopt/mesh.hpp"

namespace shapeopt {

/// Assembled dual vector over the P1 vector deformation space:
/// entry i is dJ(Omega)[phi_i] for the nodal basis field phi_i.
/// Entries on fixed-boundary dofs are zero and excluded from all pairings.
struct ShapeDerivative {
  Eigen::VectorXd dual;  // size 2 * n_nodes
  std::uint64_t mesh_id = 0;
};

struct GradientDeformation {
  NodalField field;      // the discrete gradient deformation
  double a_norm_sq = 0;  // a(G, G); zero iff the field is numerically zero
};

/// Assembled elasticity bilinear form a_Omega on the current mesh, with fixed
/// boundaries eliminated symmetrically. Defines the Steklov-Poincare metric;
/// the boundary operator itself is realized implicitly through the Riesz solve
/// and never assembled.
class InnerProductOperator {
public:
  static InnerProductOperator assemble(const TriMesh& mesh, const ElasticityParams& params);
  /// Surrogate operator from an explicit SPD matrix (tests, oracles).
  static InnerProductOperator from_matrix(SparseMatrix A);

  double inner(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;
  double inner(const NodalField& v, const NodalField& w) const;

  /// Riesz representative: solve a(G, .) = dJ[.] on the unconstrained dofs.
  GradientDeformation riesz(const ShapeDerivative& dj) const;

  /// Zero out entries on fixed-boundary dofs (pairing convention).
  void project_constraints(Eigen::VectorXd& v) const;

  std::uint64_t mesh_id() const { return mesh_id_; }
  const SparseMatrix& matrix() const { return matrix_; }
  const std::vector<int>& fixed_dofs() const { return fixed_dofs_; }

private:
  SparseMatrix matrix_;  // eliminated: unit rows/cols on fixed dofs
  std::vector<int> fixed_dofs_;
  std::uint64_t mesh_id_ = 0;
  int n_nodes_ = 0;
  mutable std::shared_ptr<FactorizedOperator> factorization_;
  const TriMesh* mesh_ = nullptr;

  const FactorizedOperator& factorization() const;
};

GradientDeformation compute_gradient_deformation(const ShapeDerivative& dj,
                                                 const InnerProductOperator& ip);
double a_inner(const InnerProductOperator& ip, const NodalField& v, const NodalField& w);

/// Dual pairing sum_i dJ_i D_i; equals a(G, D) for the Riesz representative G.
double descent_value(const ShapeDerivative& dj, const NodalField& direction);
double descent_value(const ShapeDerivative& dj, const Eigen::VectorXd& direction);

/// Harmonic extension of boundary stiffness values: Laplace solve with
/// mu = mu_max on max_tag and mu = mu_min on min_tags.
Eigen::VectorXd solve_mu_field(const TriMesh& mesh, double mu_max, double mu_min,
                               const std::string& max_tag,
                               const std::vector<std::string>& min_tags);

/// Resolve an elasticity parameter spec on a mesh (solving the Laplace problem
/// for spatially varying mu).
Eigen::VectorXd resolve_mu(const TriMesh& mesh, const MuSpec& spec);

class ShapeFunctional;

struct FdCheckRow {
  double t = 0;
  double fd_value = 0;
  double assembled_value = 0;
  double rel_error = 0;
  double order = 0;  // pairwise order vs the previous row; 0 on the first row
};

struct FdCheckReport {
  std::vector<FdCheckRow> rows;
  double assembled_value = 0;
  double observed_order = 0;  // least-squares slope over rows above the noise floor
  double rel_error_at_smallest_t = 0;
  bool order_at_noise_floor = false;  // all errors below floor: order unmeasurable
  std::string table() const;
  bool passes(double rel_tol, double min_order) const;
};

/// Central-difference oracle for assembled shape derivatives: for each step t,
/// compares (J((I+tV)Omega) - J((I-tV)Omega)) / (2t) with dJ(Omega)[V] using
/// freshly solved states on the deformed meshes.
FdCheckReport fd_check(const ShapeFunctional& problem, const TriMesh& mesh,
                       const NodalField& direction, const std::vector<double>& steps);

/// Smooth pseudo-random deformation field vanishing on the given fixed tags,
/// scaled to unit max norm. Deterministic in the seed.
NodalField random_smooth_field(const TriMesh& mesh, const std::vector<std::string>& fixed_tags,
                               unsigned seed);

}  // namespace shapeopt
