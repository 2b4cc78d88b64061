#include "shapeopt/fem.hpp"

#include <map>
#include <unordered_map>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef SHAPEOPT_WITH_CHOLMOD
#include <Eigen/CholmodSupport>
#endif
#ifdef SHAPEOPT_WITH_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

namespace shapeopt {

namespace {

struct TriGeom {
  double area;
  std::array<Vec2, 3> grad;  // P1 barycentric gradients
};

TriGeom tri_geometry(const TriMesh& m, int t) {
  const auto& tri = m.tris[t];
  const Vec2& a = m.nodes[tri[0]];
  const Vec2& b = m.nodes[tri[1]];
  const Vec2& c = m.nodes[tri[2]];
  Eigen::Matrix2d J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  const double det = J.determinant();
  TriGeom g;
  g.area = 0.5 * det;
  const Eigen::Matrix2d Jit = J.inverse().transpose();
  g.grad[0] = Jit * Vec2(-1.0, -1.0);
  g.grad[1] = Jit * Vec2(1.0, 0.0);
  g.grad[2] = Jit * Vec2(0.0, 1.0);
  return g;
}

// P2 scalar basis at a barycentric point: 3 vertex + 3 edge functions, edge e
// connecting local vertices e and (e+1)%3.
void p2_basis(const std::array<double, 3>& lam, const std::array<Vec2, 3>& grad,
              std::array<double, 6>& val, std::array<Vec2, 6>& dval) {
  for (int i = 0; i < 3; ++i) {
    val[i] = lam[i] * (2.0 * lam[i] - 1.0);
    dval[i] = (4.0 * lam[i] - 1.0) * grad[i];
  }
  for (int e = 0; e < 3; ++e) {
    const int i = e, j = (e + 1) % 3;
    val[3 + e] = 4.0 * lam[i] * lam[j];
    dval[3 + e] = 4.0 * (lam[i] * grad[j] + lam[j] * grad[i]);
  }
}

}  // namespace

const TriQuadrature& quadrature_degree4() {
  static const TriQuadrature rule = [] {
    TriQuadrature q;
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    for (int i = 0; i < 3; ++i) {
      std::array<double, 3> p{a1, a1, a1};
      p[i] = 1.0 - 2.0 * a1;
      q.points.push_back(p);
      q.weights.push_back(w1);
    }
    for (int i = 0; i < 3; ++i) {
      std::array<double, 3> p{a2, a2, a2};
      p[i] = 1.0 - 2.0 * a2;
      q.points.push_back(p);
      q.weights.push_back(w2);
    }
    return q;
  }();
  return rule;
}

const SegmentQuadrature& segment_quadrature() {
  static const SegmentQuadrature rule = [] {
    SegmentQuadrature q;
    const double s = std::sqrt(3.0 / 5.0);
    q.points = {0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)};
    q.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    return q;
  }();
  return rule;
}

FunctionSpace::FunctionSpace(SpaceKind kind, const TriMesh& mesh) : kind_(kind), mesh_(&mesh) {
  const int nv = mesh.n_nodes();
  if (kind == SpaceKind::P1Scalar) {
    n_dofs_ = nv;
    return;
  }
  if (kind == SpaceKind::P1Vector2) {
    n_dofs_ = 2 * nv;
    return;
  }
  std::map<std::pair<int, int>, int> edge_ids;
  tri_edges_.resize(mesh.n_tris());
  for (int t = 0; t < mesh.n_tris(); ++t) {
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.tris[t][e], b = mesh.tris[t][(e + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = edge_ids.find(key);
      if (it == edge_ids.end()) {
        it = edge_ids.emplace(key, static_cast<int>(edges_.size())).first;
        edges_.push_back({key.first, key.second});
      }
      tri_edges_[t][e] = it->second;
    }
  }
  const int ne = static_cast<int>(edges_.size());
  n_dofs_ = kind == SpaceKind::P2Vector2 ? 2 * (nv + ne) : 2 * (nv + ne) + nv;
}

int FunctionSpace::velocity_dofs() const {
  return 2 * (mesh_->n_nodes() + n_edges());
}

int FunctionSpace::pressure_offset() const { return velocity_dofs(); }

Vec2 FunctionSpace::edge_midpoint(int e) const {
  return 0.5 * (mesh_->nodes[edges_[e][0]] + mesh_->nodes[edges_[e][1]]);
}

std::vector<int> FunctionSpace::dofs_on_tags(const std::vector<std::string>& tags) const {
  const std::vector<int> nodes = mesh_->nodes_on_tags(tags);
  std::vector<int> dofs;
  if (kind_ == SpaceKind::P1Scalar) return nodes;
  if (kind_ == SpaceKind::P1Vector2) {
    for (int n : nodes) {
      dofs.push_back(2 * n);
      dofs.push_back(2 * n + 1);
    }
    return dofs;
  }
  for (int n : nodes) {
    dofs.push_back(2 * n);
    dofs.push_back(2 * n + 1);
  }
  std::map<std::pair<int, int>, int> edge_ids;
  for (int e = 0; e < n_edges(); ++e) edge_ids[{edges_[e][0], edges_[e][1]}] = e;
  std::vector<int> wanted_tags;
  for (const auto& t : tags) wanted_tags.push_back(mesh_->tag_id(t));
  const int nv = mesh_->n_nodes();
  for (const auto& f : mesh_->facets) {
    if (std::find(wanted_tags.begin(), wanted_tags.end(), f.tag) == wanted_tags.end()) continue;
    const auto key = std::minmax(f.a, f.b);
    auto it = edge_ids.find(key);
    if (it == edge_ids.end()) throw MeshError("boundary facet is not a mesh edge");
    dofs.push_back(2 * (nv + it->second));
    dofs.push_back(2 * (nv + it->second) + 1);
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

SparseMatrix assemble_poisson(const FunctionSpace& space, const Eigen::VectorXd& kappa) {
  if (space.kind() != SpaceKind::P1Scalar) throw SolverError("assemble_poisson expects a P1 scalar space");
  const TriMesh& m = space.mesh();
  const bool uniform = kappa.size() == 1;
  if (!uniform && kappa.size() != m.n_tris()) throw SolverError("kappa must be per-triangle");
  for (Eigen::Index i = 0; i < kappa.size(); ++i)
    if (!(kappa[i] > 0.0)) throw SolverError("conductivity must be positive");
  std::vector<Triplet> trip;
  trip.reserve(9 * m.n_tris());
  for (int t = 0; t < m.n_tris(); ++t) {
    const TriGeom g = tri_geometry(m, t);
    const double k = uniform ? kappa[0] : kappa[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(m.tris[t][i], m.tris[t][j], k * g.area * g.grad[i].dot(g.grad[j]));
  }
  SparseMatrix A(space.n_dofs(), space.n_dofs());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SparseMatrix assemble_poisson(const FunctionSpace& space, double kappa) {
  Eigen::VectorXd k(1);
  k[0] = kappa;
  return assemble_poisson(space, k);
}

Eigen::VectorXd assemble_load(const FunctionSpace& space,
                              const std::function<double(const Vec2&)>& density) {
  if (space.kind() != SpaceKind::P1Scalar) throw SolverError("assemble_load expects a P1 scalar space");
  const TriMesh& m = space.mesh();
  const TriQuadrature& quad = quadrature_degree4();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.n_dofs());
  for (int t = 0; t < m.n_tris(); ++t) {
    const double area = m.signed_area(t);
    const auto& tri = m.tris[t];
    for (size_t q = 0; q < quad.points.size(); ++q) {
      const auto& lam = quad.points[q];
      const Vec2 x = lam[0] * m.nodes[tri[0]] + lam[1] * m.nodes[tri[1]] + lam[2] * m.nodes[tri[2]];
      const double f = density(x) * quad.weights[q] * area;
      for (int i = 0; i < 3; ++i) b[tri[i]] += f * lam[i];
    }
  }
  return b;
}

SparseMatrix assemble_mass(const FunctionSpace& space) {
  if (space.kind() != SpaceKind::P1Scalar) throw SolverError("assemble_mass expects a P1 scalar space");
  const TriMesh& m = space.mesh();
  std::vector<Triplet> trip;
  trip.reserve(9 * m.n_tris());
  for (int t = 0; t < m.n_tris(); ++t) {
    const double area = m.signed_area(t);
    const auto& tri = m.tris[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(tri[i], tri[j], area * (i == j ? 1.0 / 6.0 : 1.0 / 12.0));
  }
  SparseMatrix M(space.n_dofs(), space.n_dofs());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

LinearSystem assemble_elasticity(const FunctionSpace& space, double lambda,
                                 const Eigen::VectorXd& mu_nodal, double delta,
                                 const std::vector<std::string>& fixed_tags) {
  if (space.kind() != SpaceKind::P1Vector2) throw SolverError("assemble_elasticity expects P1 vector");
  const TriMesh& m = space.mesh();
  if (mu_nodal.size() != m.n_nodes()) throw SolverError("mu must be nodal");
  for (Eigen::Index i = 0; i < mu_nodal.size(); ++i)
    if (!(mu_nodal[i] > 0.0)) throw SolverError("mu must be positive everywhere");
  if (2.0 * mu_nodal.minCoeff() + 2.0 * lambda <= 0.0) throw SolverError("2 mu + d lambda must be positive");
  if (delta < 0.0) throw SolverError("damping must be nonnegative");
  if (delta == 0.0 && fixed_tags.empty())
    throw SolverError("elasticity form is not coercive: delta = 0 with no fixed boundary");

  std::vector<Triplet> trip;
  trip.reserve(36 * m.n_tris());
  for (int t = 0; t < m.n_tris(); ++t) {
    const TriGeom g = tri_geometry(m, t);
    const auto& tri = m.tris[t];
    // mu is P1 and all strains are element-constant, so the stiffness part
    // integrates exactly with the nodal mean.
    const double mu = (mu_nodal[tri[0]] + mu_nodal[tri[1]] + mu_nodal[tri[2]]) / 3.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const Vec2& ga = g.grad[a];
        const Vec2& gb = g.grad[b];
        const double mass = g.area * (a == b ? 1.0 / 6.0 : 1.0 / 12.0);
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d) {
            double v = mu * g.area * ((c == d ? ga.dot(gb) : 0.0) + ga[d] * gb[c]);
            v += lambda * g.area * ga[c] * gb[d];
            if (c == d) v += delta * mass;
            trip.emplace_back(2 * tri[a] + c, 2 * tri[b] + d, v);
          }
      }
  }
  LinearSystem sys;
  sys.A.resize(space.n_dofs(), space.n_dofs());
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.rhs = Eigen::VectorXd::Zero(space.n_dofs());
  sys.spd = true;
  if (!fixed_tags.empty())
    for (int dof : space.dofs_on_tags(fixed_tags)) sys.bcs.push_back({dof, 0.0});
  return sys;
}

LinearSystem assemble_stokes(const FunctionSpace& space,
                             const std::function<Vec2(const Vec2&)>& inflow,
                             const std::string& inlet_tag,
                             const std::vector<std::string>& dirichlet_zero_tags) {
  if (space.kind() != SpaceKind::TaylorHood) throw SolverError("assemble_stokes expects TaylorHood");
  const TriMesh& m = space.mesh();
  if (!m.has_tag("outlet")) throw SolverError("stokes system needs an outlet (pressure gauge)");
  const TriQuadrature& quad = quadrature_degree4();
  const int nv = m.n_nodes();
  const int poff = space.pressure_offset();

  std::vector<Triplet> trip;
  trip.reserve(200 * m.n_tris());
  std::array<double, 6> val;
  std::array<Vec2, 6> dval;
  for (int t = 0; t < m.n_tris(); ++t) {
    const TriGeom g = tri_geometry(m, t);
    const auto& tri = m.tris[t];
    std::array<int, 6> vdof;  // scalar P2 dof ids (node or nv+edge)
    for (int i = 0; i < 3; ++i) vdof[i] = tri[i];
    for (int e = 0; e < 3; ++e) vdof[3 + e] = nv + space.tri_edges()[t][e];

    Eigen::Matrix<double, 6, 6> K = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 3, 12> B = Eigen::Matrix<double, 3, 12>::Zero();  // -(q, div v)
    for (size_t q = 0; q < quad.points.size(); ++q) {
      p2_basis(quad.points[q], g.grad, val, dval);
      const double w = quad.weights[q] * g.area;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) K(i, j) += w * dval[i].dot(dval[j]);
      for (int l = 0; l < 3; ++l) {
        const double chi = quad.points[q][l];
        for (int j = 0; j < 6; ++j)
          for (int c = 0; c < 2; ++c) B(l, 2 * j + c) -= w * chi * dval[j][c];
      }
    }
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        for (int c = 0; c < 2; ++c)
          trip.emplace_back(2 * vdof[i] + c, 2 * vdof[j] + c, K(i, j));
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < 6; ++j)
        for (int c = 0; c < 2; ++c) {
          trip.emplace_back(poff + tri[l], 2 * vdof[j] + c, B(l, 2 * j + c));
          trip.emplace_back(2 * vdof[j] + c, poff + tri[l], B(l, 2 * j + c));
        }
  }
  LinearSystem sys;
  sys.A.resize(space.n_dofs(), space.n_dofs());
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.rhs = Eigen::VectorXd::Zero(space.n_dofs());
  sys.spd = false;

  auto bc_value = [&](int dof) -> Vec2 {
    // dof is a velocity dof: 2*(node or nv+edge)+c
    const int scalar = dof / 2;
    const Vec2 x = scalar < nv ? m.nodes[scalar] : space.edge_midpoint(scalar - nv);
    return inflow(x);
  };
  for (int dof : space.dofs_on_tags({inlet_tag})) sys.bcs.push_back({dof, bc_value(dof)[dof % 2]});
  for (int dof : space.dofs_on_tags(dirichlet_zero_tags)) {
    // no-slip wins on nodes shared with the inlet
    bool dup = false;
    for (auto& bc : sys.bcs)
      if (bc.dof == dof) {
        bc.value = 0.0;
        dup = true;
      }
    if (!dup) sys.bcs.push_back({dof, 0.0});
  }
  return sys;
}

LinearSystem apply_mean_zero_constraint(LinearSystem system, const FunctionSpace& space,
                                        const std::vector<std::string>& boundary_tags) {
  if (space.n_dofs() != system.A.rows()) throw SolverError("space does not match system");
  system.mean_zero_row =
      assemble_boundary_load(space, boundary_tags, [](const Vec2&) { return 1.0; });
  system.spd = false;  // bordered system is symmetric indefinite
  return system;
}

Eigen::VectorXd assemble_boundary_load(const FunctionSpace& space,
                                       const std::vector<std::string>& tags,
                                       const std::function<double(const Vec2&)>& g) {
  if (space.kind() != SpaceKind::P1Scalar) throw SolverError("boundary load expects P1 scalar");
  const TriMesh& m = space.mesh();
  std::vector<int> wanted;
  for (const auto& t : tags) {
    const int id = m.tag_id(t);
    if (id < 0) throw MeshError("unknown boundary tag: " + t);
    wanted.push_back(id);
  }
  const SegmentQuadrature& quad = segment_quadrature();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.n_dofs());
  for (const auto& f : m.facets) {
    if (std::find(wanted.begin(), wanted.end(), f.tag) == wanted.end()) continue;
    const Vec2& pa = m.nodes[f.a];
    const Vec2& pb = m.nodes[f.b];
    const double len = (pb - pa).norm();
    for (size_t q = 0; q < quad.points.size(); ++q) {
      const double s = quad.points[q];
      const double w = quad.weights[q] * len * g(pa + s * (pb - pa));
      b[f.a] += w * (1.0 - s);
      b[f.b] += w * s;
    }
  }
  return b;
}

double matrix_inf_norm(const SparseMatrix& A) {
  Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(A.rows());
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) rowsum[it.row()] += std::abs(it.value());
  return rowsum.size() ? rowsum.maxCoeff() : 0.0;
}

// ---- Direct solver ------------------------------------------------------------

struct FactorizedOperator::Impl {
  SparseMatrix A_orig;
  SparseMatrix A_solve;
  std::vector<DirichletBC> bcs;
  std::vector<char> constrained;
  Eigen::VectorXd lift;  // A_orig * x_bc
  bool augmented = false;
  bool spd = false;
  double a_norm = 0.0;

#ifdef SHAPEOPT_WITH_CHOLMOD
  std::unique_ptr<Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower>> chol;
#endif
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt;
#ifdef SHAPEOPT_WITH_UMFPACK
  std::unique_ptr<Eigen::UmfPackLU<SparseMatrix>> umf;
#endif
  std::unique_ptr<Eigen::SparseLU<SparseMatrix>> slu;

  Eigen::VectorXd backend_solve(const Eigen::VectorXd& r) const {
#ifdef SHAPEOPT_WITH_CHOLMOD
    if (chol) return chol->solve(r);
#endif
    if (ldlt) return ldlt->solve(r);
#ifdef SHAPEOPT_WITH_UMFPACK
    if (umf) return umf->solve(r);
#endif
    return slu->solve(r);
  }
};

FactorizedOperator::FactorizedOperator(const LinearSystem& system)
    : impl_(std::make_unique<Impl>()), rhs_(system.rhs) {
  Impl& im = *impl_;
  im.A_orig = system.A;
  im.bcs = system.bcs;
  const Eigen::Index n = system.A.rows();
  im.constrained.assign(n, 0);
  Eigen::VectorXd x_bc = Eigen::VectorXd::Zero(n);
  for (const auto& bc : system.bcs) {
    im.constrained[bc.dof] = 1;
    x_bc[bc.dof] = bc.value;
  }
  im.lift = system.bcs.empty() ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(system.A * x_bc);

  im.augmented = system.mean_zero_row.size() > 0;
  const Eigen::Index nn = im.augmented ? n + 1 : n;
  std::vector<Triplet> trip;
  trip.reserve(system.A.nonZeros() + 2 * n + 8);
  for (int k = 0; k < system.A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(system.A, k); it; ++it)
      if (!im.constrained[it.row()] && !im.constrained[it.col()])
        trip.emplace_back(it.row(), it.col(), it.value());
  for (const auto& bc : system.bcs) trip.emplace_back(bc.dof, bc.dof, 1.0);
  if (im.augmented) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = system.mean_zero_row[i];
      if (v != 0.0 && !im.constrained[i]) {
        trip.emplace_back(n, i, v);
        trip.emplace_back(i, n, v);
      }
    }
  }
  im.A_solve.resize(nn, nn);
  im.A_solve.setFromTriplets(trip.begin(), trip.end());
  im.A_solve.makeCompressed();
  im.a_norm = matrix_inf_norm(im.A_solve);
  im.spd = system.spd && !im.augmented;

  if (im.spd) {
#ifdef SHAPEOPT_WITH_CHOLMOD
    im.chol = std::make_unique<Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower>>();
    im.chol->compute(im.A_solve);
    if (im.chol->info() == Eigen::Success) return;
    im.chol.reset();
#endif
    im.ldlt = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>();
    im.ldlt->compute(im.A_solve);
    if (im.ldlt->info() == Eigen::Success) return;
    im.ldlt.reset();  // fall through to LU
  }
#ifdef SHAPEOPT_WITH_UMFPACK
  im.umf = std::make_unique<Eigen::UmfPackLU<SparseMatrix>>();
  im.umf->compute(im.A_solve);
  if (im.umf->info() == Eigen::Success) return;
  im.umf.reset();
#endif
  im.slu = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
  im.slu->compute(im.A_solve);
  if (im.slu->info() != Eigen::Success)
    throw SolverError("sparse factorization failed (matrix of dimension " + std::to_string(nn) +
                      " is singular or structurally deficient)");
}

FactorizedOperator::~FactorizedOperator() = default;
FactorizedOperator::FactorizedOperator(FactorizedOperator&&) noexcept = default;
FactorizedOperator& FactorizedOperator::operator=(FactorizedOperator&&) noexcept = default;

Eigen::VectorXd FactorizedOperator::solve(const Eigen::VectorXd& rhs, bool homogeneous_bc) const {
  const Impl& im = *impl_;
  const Eigen::Index n = im.A_orig.rows();
  if (rhs.size() != n) throw SolverError("rhs size mismatch");
  Eigen::VectorXd r = rhs;
  if (!im.bcs.empty() && !homogeneous_bc) r -= im.lift;
  for (const auto& bc : im.bcs) r[bc.dof] = homogeneous_bc ? 0.0 : bc.value;
  Eigen::VectorXd rr;
  if (im.augmented) {
    rr.resize(n + 1);
    rr.head(n) = r;
    rr[n] = 0.0;
  } else {
    rr = r;
  }
  Eigen::VectorXd x = im.backend_solve(rr);
  const double resid = (im.A_solve * x - rr).norm();
  const double bound = 1e-10 * (rr.norm() + im.a_norm * x.norm());
  if (!(resid <= bound) || !x.allFinite())
    throw SolverError("direct solve residual " + std::to_string(resid) +
                      " exceeds tolerance (" + std::to_string(im.A_solve.rows()) + " dofs)");
  return x.head(n);
}

Eigen::VectorXd solve(const LinearSystem& system) {
  return FactorizedOperator(system).solve();
}

}  // namespace shapeopt
