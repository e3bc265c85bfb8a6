#include "hsm/matrix_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hsm {

SymMat weighted_laplacian(const Lattice& lat, const std::vector<double>& theta) {
  SymMat out(lat.volume);
  for (int x = 0; x < lat.volume; ++x) {
    double diag = 0.0;
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int y = lat.neighbor(x, slot);
      const double w = std::exp(-theta[x] - theta[y]);
      diag += w;
      if (y > x) out.add(x, y, -w);
    }
    out.set(x, x, diag);
  }
  return out;
}

long long count_spanning_trees(const Lattice& lat) {
  const SymMat lap = laplacian(lat);
  const int n = lat.volume - 1;
  std::vector<std::vector<long long>> hat(n, std::vector<long long>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) hat[i][j] = static_cast<long long>(lap(i + 1, j + 1));
  const __int128 det = integer_determinant(std::move(hat));
  if (det > static_cast<__int128>(9'223'372'036'854'775'807LL))
    throw std::overflow_error("count_spanning_trees: count exceeds 64-bit range");
  return static_cast<long long>(det);
}

namespace {

struct WeightedEdge {
  int u, v;
  double w;
};

int component_count(int nv, const std::vector<WeightedEdge>& edges) {
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  int comps = nv;
  for (const auto& e : edges) {
    const int ru = find(e.u), rv = find(e.v);
    if (ru != rv) {
      parent[ru] = rv;
      --comps;
    }
  }
  return comps;
}

double tree_sum_recurse(int nv, std::vector<WeightedEdge> edges, long long& budget) {
  if (--budget < 0) throw std::runtime_error("tree_weight_sum: enumeration budget exceeded");
  edges.erase(std::remove_if(edges.begin(), edges.end(),
                             [](const WeightedEdge& e) { return e.u == e.v; }),
              edges.end());
  if (nv == 1) return 1.0;
  if (static_cast<int>(edges.size()) < nv - 1) return 0.0;
  if (component_count(nv, edges) > 1) return 0.0;

  const WeightedEdge e = edges.back();
  edges.pop_back();

  const double without = tree_sum_recurse(nv, edges, budget);

  // Contract e: merge the higher label into the lower, compact the rest.
  const int keep = std::min(e.u, e.v);
  const int gone = std::max(e.u, e.v);
  for (auto& f : edges) {
    if (f.u == gone) f.u = keep;
    if (f.v == gone) f.v = keep;
    if (f.u > gone) --f.u;
    if (f.v > gone) --f.v;
  }
  const double with = tree_sum_recurse(nv - 1, std::move(edges), budget);
  return without + e.w * with;
}

}  // namespace

double tree_weight_sum(const Lattice& lat, const std::vector<double>& theta, long long budget) {
  std::vector<WeightedEdge> edges;
  for (int x = 0; x < lat.volume; ++x)
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int y = lat.neighbor(x, slot);
      if (y > x) edges.push_back({x, y, std::exp(-theta[x] - theta[y])});
    }
  return tree_sum_recurse(lat.volume, std::move(edges), budget);
}

ConvexityReport log_det_convexity(const Lattice& lat, const std::vector<double>& theta_a,
                                  const std::vector<double>& theta_b, int grid_points, int x0) {
  if (grid_points < 3) throw std::invalid_argument("log_det_convexity: need at least 3 grid points");
  require_pinned(theta_a, x0);
  require_pinned(theta_b, x0);

  auto value_at = [&](double t) {
    std::vector<double> theta(lat.volume);
    for (int x = 0; x < lat.volume; ++x) theta[x] = theta_a[x] + t * (theta_b[x] - theta_a[x]);
    return Cholesky(delete_site(weighted_laplacian(lat, theta), x0)).logdet();
  };

  ConvexityReport rep;
  rep.grid_points = grid_points;
  std::vector<double> values(grid_points);
  for (int i = 0; i < grid_points; ++i)
    values[i] = value_at(static_cast<double>(i) / (grid_points - 1));

  rep.min_second_difference = 1e300;
  for (int i = 1; i + 1 < grid_points; ++i)
    rep.min_second_difference =
        std::min(rep.min_second_difference, values[i - 1] - 2.0 * values[i] + values[i + 1]);
  rep.midpoint_gap = 0.5 * (value_at(0.0) + value_at(1.0)) - value_at(0.5);
  rep.pass = rep.min_second_difference >= -1e-9;
  return rep;
}

CycleBoundReport cycle_bound_check(const Lattice& lat, const std::vector<double>& afield,
                                   const SourceField& source, const ModelParams& params, int x0) {
  if (!in_domain(lat, afield, source, params, x0))
    throw std::domain_error("cycle_bound_check: a-field outside the domain");

  CycleBoundReport rep;

  // (2d + a_pin) det-hat minus det-full does not depend on the pinned
  // diagonal value, so it is evaluated with the pin term absent.
  const double det_hat = std::exp(Cholesky(hat_coupling(lat, afield, source, params, x0)).logdet());
  const double det_depinned = determinant(build_coupling(lat, afield, 0.0, source, params, x0));
  rep.r_value = 2.0 * lat.dim * det_hat - det_depinned;

  const int v = lat.volume;
  auto factor = [&](int x, int y) {
    return source.is_zero() ? 1.0 : 1.0 - source(x, y) / params.beta;
  };

  std::vector<char> visited(v, 0);
  std::vector<int> used_edges;
  visited[0] = 1;

  // Depth-first over closed oriented paths from site 0 visiting every site
  // exactly once.  Edge ids keep the two parallel bonds of an L=2 direction
  // apart, which matters only for the final hop back to the start.
  auto dfs = [&](auto&& self, int site, int depth, double weight) -> void {
    if (depth == v) {
      for (int slot = 0; slot < 2 * lat.dim; ++slot) {
        if (lat.neighbor(site, slot) != 0) continue;
        const int id = lat.edge_id(site, slot);
        if (std::find(used_edges.begin(), used_edges.end(), id) != used_edges.end()) continue;
        ++rep.oriented_count;
        rep.oriented_weighted_sum += weight * factor(site, 0);
      }
      return;
    }
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int y = lat.neighbor(site, slot);
      if (y == 0 || visited[y]) continue;
      visited[y] = 1;
      used_edges.push_back(lat.edge_id(site, slot));
      self(self, y, depth + 1, weight * factor(site, y));
      used_edges.pop_back();
      visited[y] = 0;
    }
  };
  dfs(dfs, 0, 1, 1.0);

  rep.unoriented_count = rep.oriented_count / 2;
  rep.pass = rep.r_value >= rep.oriented_weighted_sum - 1e-9 * std::max(1.0, std::abs(rep.r_value));
  return rep;
}

}  // namespace hsm
