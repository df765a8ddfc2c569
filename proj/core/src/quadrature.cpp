#include "recfem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace recfem {

namespace {

GaussRule1D compute_rule(int n) {
  if (n < 1 || n > 64) throw std::invalid_argument("gauss_rule: order out of range");
  GaussRule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  // Newton iteration on Legendre polynomials, symmetric roots.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.weights[i] = w;
    rule.points[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussRule1D& gauss_rule(int n) {
  static std::map<int, GaussRule1D> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
  return it->second;
}

std::vector<QuadPoint2D> tensor_rule(int n) {
  const GaussRule1D& g = gauss_rule(n);
  std::vector<QuadPoint2D> pts;
  pts.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      pts.push_back({Vec2(g.points[i], g.points[j]), g.weights[i] * g.weights[j]});
  return pts;
}

}  // namespace recfem
