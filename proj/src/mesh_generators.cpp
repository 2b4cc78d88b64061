#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "shapeopt/mesh.hpp"

namespace shapeopt {

namespace {

constexpr double kPi = std::numbers::pi;

// Hexagonal-ring disk triangulation: ring i of n carries 6i nodes at radius
// r*i/n, giving exactly 6 n^2 elements and 1 + 3 n (n+1) nodes.
TriMesh hex_disk(const Vec2& center, double radius, int n_rings,
                 std::vector<int>* boundary_ring = nullptr) {
  TriMesh m;
  std::vector<std::vector<int>> rings(n_rings + 1);
  m.nodes.push_back(center);
  rings[0] = {0};
  for (int i = 1; i <= n_rings; ++i) {
    const double r = radius * i / n_rings;
    rings[i].resize(6 * i);
    for (int j = 0; j < 6 * i; ++j) {
      const double phi = 2.0 * kPi * j / (6 * i);
      rings[i][j] = m.n_nodes();
      m.nodes.push_back(center + r * Vec2(std::cos(phi), std::sin(phi)));
    }
  }
  for (int i = 1; i <= n_rings; ++i) {
    const auto& outer = rings[i];
    const auto& inner = rings[i - 1];
    const int no = 6 * i;
    const int ni = 6 * (i - 1);
    // Walk both rings sector by sector; each sector of the outer ring has one
    // more node than the inner one.
    for (int s = 0; s < 6; ++s) {
      for (int k = 0; k < i; ++k) {
        const int o0 = s * i + k;
        const int o1 = (o0 + 1) % no;
        const int i0 = ni > 0 ? (s * (i - 1) + k) % ni : 0;
        m.tris.push_back({outer[o0], outer[o1], inner[i0]});
        if (k + 1 < i) {
          const int i1 = (i0 + 1) % ni;
          m.tris.push_back({outer[o1], inner[i1], inner[i0]});
        }
      }
    }
  }
  const int tag = m.add_tag("outer");
  const auto& bd = rings[n_rings];
  for (int j = 0; j < static_cast<int>(bd.size()); ++j)
    m.facets.push_back({bd[j], bd[(j + 1) % bd.size()], tag});
  if (boundary_ring) *boundary_ring = bd;
  m.make_ccw();
  return m;
}

// Points along the boundary of an axis-aligned rectangle, counterclockwise,
// starting at (lo.x, lo.y); corners are always included. Per-side counts are
// proportional to side length and sum to n_total.
std::vector<Vec2> rectangle_boundary_points(const Vec2& lo, const Vec2& hi, int n_total) {
  const double w = hi.x() - lo.x();
  const double h = hi.y() - lo.y();
  const double per = 2.0 * (w + h);
  std::array<double, 4> len = {w, h, w, h};
  std::array<int, 4> cnt;
  int assigned = 0;
  for (int s = 0; s < 4; ++s) {
    cnt[s] = std::max(1, static_cast<int>(std::lround(n_total * len[s] / per)));
    assigned += cnt[s];
  }
  cnt[0] += n_total - assigned;  // absorb rounding on the longest-listed side
  std::vector<Vec2> pts;
  pts.reserve(n_total);
  const std::array<Vec2, 4> corner = {Vec2(lo.x(), lo.y()), Vec2(hi.x(), lo.y()),
                                      Vec2(hi.x(), hi.y()), Vec2(lo.x(), hi.y())};
  for (int s = 0; s < 4; ++s) {
    const Vec2 a = corner[s];
    const Vec2 b = corner[(s + 1) % 4];
    for (int k = 0; k < cnt[s]; ++k) pts.push_back(a + (b - a) * (static_cast<double>(k) / cnt[s]));
  }
  return pts;
}

// Triangulates the band between two closed rings with equal node counts.
void stitch_band(TriMesh& m, const std::vector<int>& inner, const std::vector<int>& outer) {
  const int n = static_cast<int>(inner.size());
  for (int j = 0; j < n; ++j) {
    const int j1 = (j + 1) % n;
    m.tris.push_back({inner[j], inner[j1], outer[j1]});
    m.tris.push_back({inner[j], outer[j1], outer[j]});
  }
}

// Cumulative radial positions of K steps ramping linearly from delta0 to
// 2L/K - delta0 so that they sum to the ray length L exactly.
std::vector<double> ramped_steps(double length, double delta0, int K) {
  const double dmax = 2.0 * length / K - delta0;
  std::vector<double> pos(K + 1, 0.0);
  double acc = 0.0;
  for (int k = 0; k < K; ++k) {
    const double frac = K > 1 ? static_cast<double>(k) / (K - 1) : 0.0;
    acc += delta0 + (dmax - delta0) * frac;
    pos[k + 1] = acc;
  }
  for (auto& p : pos) p *= length / acc;  // kill rounding drift
  return pos;
}

int outer_side_tag(TriMesh& m, const Vec2& mid, const Vec2& lo, const Vec2& hi,
                   const std::array<std::string, 4>& names) {
  const double eps = 1e-9 * std::max(hi.x() - lo.x(), hi.y() - lo.y());
  if (std::abs(mid.y() - lo.y()) < eps) return m.add_tag(names[0]);
  if (std::abs(mid.x() - hi.x()) < eps) return m.add_tag(names[1]);
  if (std::abs(mid.y() - hi.y()) < eps) return m.add_tag(names[2]);
  if (std::abs(mid.x() - lo.x()) < eps) return m.add_tag(names[3]);
  throw MeshError("facet midpoint not on the rectangle boundary");
}

}  // namespace

TriMesh generate_disk(const Vec2& center, double radius, int target_elems) {
  if (radius <= 0.0) throw MeshError("disk radius must be positive");
  if (target_elems < 4) throw MeshError("target_elems must be at least 4");
  const int n = std::max(1, static_cast<int>(std::lround(std::sqrt(target_elems / 6.0))));
  TriMesh m = hex_disk(center, radius, n);
  m.validate();
  return m;
}

TriMesh generate_rectangle(const Vec2& lo, const Vec2& hi, int nx, int ny) {
  if (nx < 1 || ny < 1 || hi.x() <= lo.x() || hi.y() <= lo.y())
    throw MeshError("invalid rectangle grid");
  TriMesh m;
  auto node = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.nodes.push_back({lo.x() + (hi.x() - lo.x()) * i / nx, lo.y() + (hi.y() - lo.y()) * j / ny});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = node(i, j), b = node(i + 1, j), c = node(i + 1, j + 1), d = node(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.tris.push_back({a, b, c});
        m.tris.push_back({a, c, d});
      } else {
        m.tris.push_back({a, b, d});
        m.tris.push_back({b, c, d});
      }
    }
  const int wall = m.add_tag("wall"), inlet = m.add_tag("inlet"), outlet = m.add_tag("outlet");
  for (int i = 0; i < nx; ++i) {
    m.facets.push_back({node(i, 0), node(i + 1, 0), wall});
    m.facets.push_back({node(i + 1, ny), node(i, ny), wall});
  }
  for (int j = 0; j < ny; ++j) {
    m.facets.push_back({node(nx, j), node(nx, j + 1), outlet});
    m.facets.push_back({node(0, j + 1), node(0, j), inlet});
  }
  m.make_ccw();
  m.validate();
  return m;
}

TriMesh generate_square_with_interface(const InterfaceSpec& inner, int target_elems) {
  const Vec2 lo(0.0, 0.0), hi(1.0, 1.0);
  if (inner.kind == InterfaceSpec::Kind::Square) {
    const double a = inner.center.x() - inner.size / 2.0, b = inner.center.x() + inner.size / 2.0;
    const double c = inner.center.y() - inner.size / 2.0, d = inner.center.y() + inner.size / 2.0;
    if (a <= 0.0 || b >= 1.0 || c <= 0.0 || d >= 1.0)
      throw MeshError("inner region must lie strictly inside the unit square");
    const int n = std::max(4, static_cast<int>(std::lround(std::sqrt(target_elems / 2.0))));
    // Grid lines, with the lines nearest the interface snapped onto it so the
    // interface is resolved by facets exactly.
    auto lines = [&](double s0, double s1) {
      std::vector<double> v(n + 1);
      for (int i = 0; i <= n; ++i) v[i] = static_cast<double>(i) / n;
      auto snap = [&](double s) {
        int best = 1;
        for (int i = 1; i < n; ++i)
          if (std::abs(v[i] - s) < std::abs(v[best] - s)) best = i;
        v[best] = s;
      };
      snap(s0);
      snap(s1);
      return v;
    };
    const std::vector<double> xs = lines(a, b), ys = lines(c, d);
    TriMesh m;
    auto node = [&](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) m.nodes.push_back({xs[i], ys[j]});
    const int rin = m.add_tag("in"), rout = m.add_tag("out");
    auto region_of = [&](const Vec2& p) {
      return (p.x() > a && p.x() < b && p.y() > c && p.y() < d) ? rin : rout;
    };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int p = node(i, j), q = node(i + 1, j), r = node(i + 1, j + 1), s = node(i, j + 1);
        if ((i + j) % 2 == 0) {
          m.tris.push_back({p, q, r});
          m.tris.push_back({p, r, s});
        } else {
          m.tris.push_back({p, q, s});
          m.tris.push_back({q, r, s});
        }
      }
    m.tri_regions.resize(m.n_tris());
    for (int t = 0; t < m.n_tris(); ++t) m.tri_regions[t] = region_of(m.centroid(t));
    for (int i = 0; i < n; ++i) {
      m.facets.push_back({node(i, 0), node(i + 1, 0), m.add_tag("bottom")});
      m.facets.push_back({node(i + 1, n), node(i, n), m.add_tag("top")});
      m.facets.push_back({node(n, i), node(n, i + 1), m.add_tag("right")});
      m.facets.push_back({node(0, i + 1), node(0, i), m.add_tag("left")});
    }
    // Interface facets: edges shared by an "in" and an "out" triangle, directed
    // as they appear in the "in" triangle (inner region to the left).
    const int itag = m.add_tag("interface");
    std::map<std::pair<int, int>, std::pair<int, int>> half_edges;  // (a,b) -> (tri, region)
    for (int t = 0; t < m.n_tris(); ++t)
      for (int e = 0; e < 3; ++e) {
        const int aN = m.tris[t][e], bN = m.tris[t][(e + 1) % 3];
        half_edges[{aN, bN}] = {t, m.tri_regions[t]};
      }
    for (const auto& [edge, tr] : half_edges) {
      auto rev = half_edges.find({edge.second, edge.first});
      if (rev == half_edges.end()) continue;
      if (tr.second == rin && rev->second.second == rout)
        m.facets.push_back({edge.first, edge.second, itag});
    }
    m.make_ccw();
    m.validate();
    return m;
  }

  // Circle interface: hexagonal disk inside, rings morphing to the square outside.
  const double r = inner.size;
  const Vec2 c = inner.center;
  if (c.x() - r <= 0.0 || c.x() + r >= 1.0 || c.y() - r <= 0.0 || c.y() + r >= 1.0)
    throw MeshError("inner circle must lie strictly inside the unit square");
  int best_n = 24, best_k = 4;
  double best_score = std::numeric_limits<double>::infinity();
  for (int N = 24; N <= 480; N += 12) {
    const int inner_elems = 6 * (N / 6) * (N / 6);
    if (inner_elems > target_elems) break;
    const int K = std::max(2, static_cast<int>(std::lround((target_elems - inner_elems) / (2.0 * N))));
    const double total = inner_elems + 2.0 * N * K;
    const double tangential = 4.0 / N, radial = 0.5 / K;  // far-field spacings
    const double score = std::abs(total - target_elems) / target_elems +
                         0.25 * std::abs(std::log(tangential / radial));
    if (score < best_score) {
      best_score = score;
      best_n = N;
      best_k = K;
    }
  }
  const int N = best_n, K = best_k, n0 = N / 6;
  std::vector<int> ring0;
  TriMesh m = hex_disk(c, r, n0, &ring0);
  m.facets.clear();  // the disk boundary becomes the interface, not "outer"
  m.tag_names.clear();
  const int rin = m.add_tag("in"), rout = m.add_tag("out");
  m.tri_regions.assign(m.n_tris(), rin);

  std::vector<Vec2> sq = rectangle_boundary_points(lo, hi, N);
  // Rotate the square walk so its angular order (seen from the circle center)
  // pairs with the uniform circle angles index by index.
  std::vector<double> phi(N);
  int start = 0;
  for (int j = 0; j < N; ++j) {
    double p = std::atan2(sq[j].y() - c.y(), sq[j].x() - c.x());
    if (p < 0) p += 2.0 * kPi;
    phi[j] = p;
    if (p < phi[start]) start = j;
  }
  std::rotate(sq.begin(), sq.begin() + start, sq.end());
  std::rotate(phi.begin(), phi.begin() + start, phi.end());

  const double delta0 = 2.0 * kPi * r / N;
  std::vector<std::vector<double>> gpos(N);
  for (int j = 0; j < N; ++j) {
    const double L = (sq[j] - c).norm() - r;
    gpos[j] = ramped_steps(L, delta0, K);
  }
  std::vector<std::vector<int>> rings(K + 1);
  rings[0] = ring0;
  for (int k = 1; k <= K; ++k) {
    rings[k].resize(N);
    for (int j = 0; j < N; ++j) {
      const double u = 2.0 * kPi * j / N;
      double target = phi[j];
      if (target - u > kPi) target -= 2.0 * kPi;
      if (u - target > kPi) target += 2.0 * kPi;
      const double L = (sq[j] - c).norm() - r;
      const double g = gpos[j][k] / L;
      const double ang = (1.0 - g) * u + g * target;
      const double rho = r + L * g;
      rings[k][j] = m.n_nodes();
      m.nodes.push_back(k == K ? sq[j] : Vec2(c + rho * Vec2(std::cos(ang), std::sin(ang))));
    }
    stitch_band(m, rings[k - 1], rings[k]);
    m.tri_regions.resize(m.n_tris(), rout);
  }
  const int itag = m.add_tag("interface");
  for (int j = 0; j < N; ++j) m.facets.push_back({ring0[j], ring0[(j + 1) % N], itag});
  const std::array<std::string, 4> names = {"bottom", "right", "top", "left"};
  for (int j = 0; j < N; ++j) {
    const int a = rings[K][j], b = rings[K][(j + 1) % N];
    const Vec2 mid = 0.5 * (m.nodes[a] + m.nodes[b]);
    m.facets.push_back({a, b, outer_side_tag(m, mid, lo, hi, names)});
  }
  m.make_ccw();
  m.validate();
  return m;
}

TriMesh generate_channel_with_obstacle(const Vec2& box_lo, const Vec2& box_hi,
                                       const Vec2& obstacle_center, double obstacle_radius,
                                       int target_elems) {
  const double w = box_hi.x() - box_lo.x(), h = box_hi.y() - box_lo.y();
  if (obstacle_radius <= 0.0 || w <= 0.0 || h <= 0.0)
    throw MeshError("invalid channel geometry");
  if (obstacle_center.x() - obstacle_radius <= box_lo.x() ||
      obstacle_center.x() + obstacle_radius >= box_hi.x() ||
      obstacle_center.y() - obstacle_radius <= box_lo.y() ||
      obstacle_center.y() + obstacle_radius >= box_hi.y())
    throw MeshError("obstacle must lie strictly inside the box");

  // Balance ring count K against points-per-ring N for near-isotropic far-field
  // elements: mid-ring perimeter / N = mean ray length / K and 2 N K = target.
  const double perimeter = 2.0 * (w + h);
  const double p_mid = 0.5 * (2.0 * kPi * obstacle_radius + perimeter);
  const double l_avg = 0.5 * std::hypot(w, h) * 0.75;  // crude mean ray length
  int N = std::max(16, static_cast<int>(std::lround(std::sqrt(target_elems * p_mid / (2.0 * l_avg)))));
  int K = std::max(4, static_cast<int>(std::lround(target_elems / (2.0 * N))));

  std::vector<Vec2> rect = rectangle_boundary_points(box_lo, box_hi, N);
  const Vec2 c = obstacle_center;
  // Sort guard: points are generated in ccw boundary order; rotate so the
  // angular sequence seen from the obstacle center starts at its minimum.
  std::vector<double> phi(N);
  int start = 0;
  for (int j = 0; j < N; ++j) {
    double p = std::atan2(rect[j].y() - c.y(), rect[j].x() - c.x());
    if (p < 0) p += 2.0 * kPi;
    phi[j] = p;
    if (p < phi[start]) start = j;
  }
  std::rotate(rect.begin(), rect.begin() + start, rect.end());
  std::rotate(phi.begin(), phi.begin() + start, phi.end());

  TriMesh m;
  const double delta0 = 2.0 * kPi * obstacle_radius / N;
  std::vector<std::vector<int>> rings(K + 1);
  for (int k = 0; k <= K; ++k) rings[k].resize(N);
  // Ring-major node ordering keeps the assembled matrix bandwidth low.
  m.nodes.resize(static_cast<size_t>(K + 1) * N);
  for (int j = 0; j < N; ++j) {
    const Vec2 dir(std::cos(phi[j]), std::sin(phi[j]));
    const double L = (rect[j] - c).norm() - obstacle_radius;
    const std::vector<double> pos = ramped_steps(L, delta0, K);
    for (int k = 0; k <= K; ++k) {
      rings[k][j] = k * N + j;
      m.nodes[k * N + j] = k == K ? rect[j] : Vec2(c + (obstacle_radius + pos[k]) * dir);
    }
  }
  for (int k = 0; k < K; ++k) stitch_band(m, rings[k], rings[k + 1]);

  const int obs = m.add_tag("obstacle");
  for (int j = 0; j < N; ++j)  // clockwise walk: flow domain on the left
    m.facets.push_back({rings[0][(j + 1) % N], rings[0][j], obs});
  const std::array<std::string, 4> names = {"wall", "outlet", "wall", "inlet"};
  for (int j = 0; j < N; ++j) {
    const int a = rings[K][j], b = rings[K][(j + 1) % N];
    const Vec2 mid = 0.5 * (m.nodes[a] + m.nodes[b]);
    m.facets.push_back({a, b, outer_side_tag(m, mid, box_lo, box_hi, names)});
  }
  m.make_ccw();
  m.validate();
  return m;
}

}  // namespace shapeopt
