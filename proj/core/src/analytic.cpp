#include "recfem/analytic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace recfem {

namespace {

constexpr double kYoung = 1000.0;
constexpr double kPoisson = 0.3;

Material benchmark_material() { return Material{kYoung, kPoisson, PlaneState::strain}; }

Vec2 apply_normal(const Vec3& s, const Vec2& n) {
  return {s[0] * n[0] + s[2] * n[1], s[2] * n[0] + s[1] * n[1]};
}

// ---- square4: quartic displacement field on [0,2]^2, polynomial body load ----

Vec2 square_displacement(const Vec2& p) {
  const double x = p[0], y = p[1];
  return {x * x * x * x + 5 * x * x * x * y - 3 * x * x * y * y + x * x * x,
          y * y * y * y - 6 * y * y * x * x + 3 * y * x * x * x + 2 * y};
}

Vec3 square_strain(const Vec2& p) {
  const double x = p[0], y = p[1];
  return {4 * x * x * x + 15 * x * x * y - 6 * x * y * y + 3 * x * x,
          4 * y * y * y - 12 * x * x * y + 3 * x * x * x + 2,
          5 * x * x * x + 3 * x * x * y - 12 * x * y * y};
}

Vec2 square_body(const Vec2& p) {
  const double x = p[0], y = p[1];
  const double c = kYoung / ((1 + kPoisson) * (1 - 2 * kPoisson));
  const double bx = 1.5 * c *
                    (-9 * x * x - 12 * x * y + 4 * y * y - 4 * x +
                     kPoisson * (4 * x * x + 20 * x * y - 4 * y * y + 4 * x));
  const double by =
      -1.5 * c * (-3 * x * x + 2 * x * y + 4 * y * y + kPoisson * (8 * x * x - 12 * x * y));
  return {bx, by};
}

// ---- pipe: thick-walled cylinder under internal pressure (Lame), quarter model ----

constexpr double kPipeInner = 5.0;
constexpr double kPipeOuter = 20.0;
constexpr double kPipePressure = 1.0;

Vec2 pipe_displacement(const Vec2& p) {
  const double r = p.norm();
  const double c2 = (kPipeOuter / kPipeInner) * (kPipeOuter / kPipeInner);
  const double ur = kPipePressure * (1 + kPoisson) / (kYoung * (c2 - 1)) *
                    (r * (1 - 2 * kPoisson) + kPipeOuter * kPipeOuter / r);
  return (ur / r) * p;
}

Vec3 pipe_stress(const Vec2& p) {
  const double r2 = p.squaredNorm();
  const double r = std::sqrt(r2);
  const double c2 = (kPipeOuter / kPipeInner) * (kPipeOuter / kPipeInner);
  const double f = kPipePressure / (c2 - 1);
  const double q = kPipeOuter * kPipeOuter / r2;
  const double sr = f * (1 - q), st = f * (1 + q);
  const double ct = p[0] / r, sn = p[1] / r;
  return {sr * ct * ct + st * sn * sn, sr * sn * sn + st * ct * ct, (sr - st) * ct * sn};
}

// ---- lshape: re-entrant corner eigenfield, notch opening 3*pi/2 ----

constexpr double kLShapeLambda = 0.544483736782464;
constexpr double kLShapeQ = 0.543075578836737;

const Mat2& bisector_rotation() {
  static const Mat2 rot = [] {
    const double a = 3.0 * std::numbers::pi / 4.0;
    Mat2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
  }();
  return rot;
}

Vec2 lshape_displacement(const Vec2& p) {
  const Mat2& rot = bisector_rotation();
  const Vec2 q = rot.transpose() * p;
  const double r = q.norm();
  if (r < 1e-300) return {0.0, 0.0};
  const double phi = std::atan2(q[1], q[0]);
  const double g = kYoung / (2 * (1 + kPoisson));
  const double kol = 3 - 4 * kPoisson;
  const double la = kLShapeLambda;
  const double c1 = kLShapeQ * (la + 1);
  const double amp = std::pow(r, la) / (2 * g);
  const Vec2 up{amp * ((kol - c1) * std::cos(la * phi) - la * std::cos((la - 2) * phi)),
                amp * ((kol + c1) * std::sin(la * phi) + la * std::sin((la - 2) * phi))};
  return rot * up;
}

Vec3 lshape_stress(const Vec2& p) {
  const Mat2& rot = bisector_rotation();
  const Vec2 q = rot.transpose() * p;
  const double r = q.norm();
  if (r < 1e-300) return {0.0, 0.0, 0.0};
  const double phi = std::atan2(q[1], q[0]);
  const double la = kLShapeLambda;
  const double c1 = kLShapeQ * (la + 1);
  const double amp = la * std::pow(r, la - 1);
  const double sxx =
      amp * ((2 - c1) * std::cos((la - 1) * phi) - (la - 1) * std::cos((la - 3) * phi));
  const double syy =
      amp * ((2 + c1) * std::cos((la - 1) * phi) + (la - 1) * std::cos((la - 3) * phi));
  const double sxy =
      amp * ((la - 1) * std::sin((la - 3) * phi) + c1 * std::sin((la - 1) * phi));
  Mat2 s;
  s << sxx, sxy, sxy, syy;
  const Mat2 w = rot * s * rot.transpose();
  return {w(0, 0), w(1, 1), w(0, 1)};
}

std::function<Vec2(const Vec2&, const Vec2&, EdgeTag)> traction_of(
    const std::function<Vec3(const Vec2&)>& stress) {
  return [stress](const Vec2& x, const Vec2& n, EdgeTag) { return apply_normal(stress(x), n); };
}

Benchmark make_square4() {
  Benchmark b;
  b.name = "square4";
  b.domain = DomainSpec::square2x2();
  b.material = benchmark_material();
  const Mat3 d = elasticity_matrix(b.material);
  b.exact.displacement = square_displacement;
  b.exact.stress = [d](const Vec2& p) { return (d * square_strain(p)).eval(); };
  b.load.body = square_body;
  b.load.traction = traction_of(b.exact.stress);
  b.load.pins = {PointPin{{0.0, 0.0}, true, true, {0.0, 0.0}},
                 PointPin{{2.0, 0.0}, false, true, {0.0, 0.0}}};
  return b;
}

Benchmark make_pipe() {
  Benchmark b;
  b.name = "pipe";
  b.domain = DomainSpec::annulus_quarter(kPipeInner, kPipeOuter);
  b.material = benchmark_material();
  b.exact.displacement = pipe_displacement;
  b.exact.stress = pipe_stress;
  b.load.traction = traction_of(b.exact.stress);
  b.physical_traction = [](const Vec2& x, const Vec2& n) -> std::optional<Vec2> {
    if (x.norm() < 0.5 * (kPipeInner + kPipeOuter)) return Vec2(-kPipePressure * n);
    return Vec2(0.0, 0.0);  // free outer rim
  };
  return b;
}

Benchmark make_lshape() {
  Benchmark b;
  b.name = "lshape";
  b.domain = DomainSpec::lshape();
  b.material = benchmark_material();
  b.exact.displacement = lshape_displacement;
  b.exact.stress = lshape_stress;
  b.load.traction = traction_of(b.exact.stress);
  const Vec2 ua = lshape_displacement({-1.0, -1.0});
  const Vec2 ub = lshape_displacement({1.0, 1.0});
  b.load.pins = {PointPin{{-1.0, -1.0}, true, true, ua}, PointPin{{1.0, 1.0}, true, false, ub}};
  b.has_singularity = true;
  b.singular_point = {0.0, 0.0};
  b.physical_traction = [](const Vec2& x, const Vec2&) -> std::optional<Vec2> {
    const bool on_horizontal = std::abs(x[1]) <= 1e-12 && x[0] >= -1e-12;
    const bool on_vertical = std::abs(x[0]) <= 1e-12 && x[1] <= 1e-12;
    if (on_horizontal || on_vertical) return Vec2(0.0, 0.0);  // free notch faces
    return std::nullopt;
  };
  return b;
}

double halton(int i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

template <class F>
auto fd_partial(const F& f, const Vec2& x, int axis, double h) {
  Vec2 e(0.0, 0.0);
  e[axis] = h;
  return ((-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)).eval();
}

Vec2 side_param(int side, double w) {
  switch (side) {
    case 0: return {w, 0.0};
    case 1: return {1.0, w};
    case 2: return {1.0 - w, 1.0};
    default: return {0.0, 1.0 - w};
  }
}

}  // namespace

Benchmark benchmark_by_name(const std::string& name) {
  if (name == "square4") return make_square4();
  if (name == "pipe") return make_pipe();
  if (name == "lshape") return make_lshape();
  throw std::invalid_argument("unknown benchmark '" + name + "' (square4, pipe, lshape)");
}

std::vector<std::string> benchmark_names() { return {"square4", "pipe", "lshape"}; }

ConsistencyReport verify_consistency(const Benchmark& bench, int interior_samples,
                                     int boundary_samples_per_side) {
  ConsistencyReport rep;
  const Mat3 d = elasticity_matrix(bench.material);
  const auto& patches = bench.domain.patches;

  Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
  for (const MacroPatch& mp : patches)
    for (int c = 0; c < 4; ++c) {
      const Vec2 xc = mp.map(c == 1 || c == 2 ? 1.0 : 0.0, c >= 2 ? 1.0 : 0.0);
      lo = lo.cwiseMin(xc);
      hi = hi.cwiseMax(xc);
    }
  const double diam = (hi - lo).norm();

  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(interior_samples));
  for (int idx = 1; static_cast<int>(pts.size()) < interior_samples; ++idx) {
    const MacroPatch& mp = patches[static_cast<std::size_t>(idx) % patches.size()];
    const double u = 0.02 + 0.96 * halton(idx, 2);
    const double v = 0.02 + 0.96 * halton(idx, 3);
    const Vec2 x = mp.map(u, v);
    if (bench.has_singularity && (x - bench.singular_point).norm() < 1e-3 * diam) continue;
    pts.push_back(x);
  }
  rep.interior_samples = static_cast<int>(pts.size());

  double smax = 0.0, bmax = 0.0, umax = 0.0;
  for (const Vec2& x : pts) {
    smax = std::max(smax, bench.exact.stress(x).cwiseAbs().maxCoeff());
    umax = std::max(umax, bench.exact.displacement(x).norm());
    if (bench.load.body) bmax = std::max(bmax, bench.load.body(x).norm());
  }

  for (const Vec2& x : pts) {
    double h = 1e-4 * diam;
    if (bench.has_singularity) h = std::min(h, 1e-4 * (x - bench.singular_point).norm());

    const Vec2 dudx = fd_partial(bench.exact.displacement, x, 0, h);
    const Vec2 dudy = fd_partial(bench.exact.displacement, x, 1, h);
    const Vec3 eps(dudx[0], dudy[1], dudy[0] + dudx[1]);
    const Vec3 sig = bench.exact.stress(x);
    const double rel = (sig - d * eps).cwiseAbs().maxCoeff() /
                       std::max(sig.cwiseAbs().maxCoeff(), 1e-3 * smax + 1e-300);
    rep.max_constitutive = std::max(rep.max_constitutive, rel);

    const Vec3 dsx = fd_partial(bench.exact.stress, x, 0, h);
    const Vec3 dsy = fd_partial(bench.exact.stress, x, 1, h);
    const Vec2 div(dsx[0] + dsy[2], dsx[2] + dsy[1]);
    const Vec2 bv = bench.load.body ? bench.load.body(x) : Vec2(0.0, 0.0);
    const double scale = std::max({bmax, smax / diam, 1e-12});
    rep.max_equilibrium = std::max(rep.max_equilibrium, (div + bv).norm() / scale);
  }

  struct Sample {
    Vec2 x, n;
    EdgeTag tag;
  };
  std::vector<Sample> bnd;
  const double delta = 1e-6;
  for (const MacroPatch& mp : patches)
    for (int side = 0; side < 4; ++side) {
      if (mp.neighbor[static_cast<std::size_t>(side)] >= 0) continue;
      for (int j = 0; j < boundary_samples_per_side; ++j) {
        const double w = (j + 0.5) / boundary_samples_per_side;
        const Vec2 pa = side_param(side, w - delta), pb = side_param(side, w + delta);
        const Vec2 t = (mp.map(pb[0], pb[1]) - mp.map(pa[0], pa[1])) / (2 * delta);
        const Vec2 uv = side_param(side, w);
        bnd.push_back({mp.map(uv[0], uv[1]), Vec2(t[1], -t[0]).normalized(),
                       mp.side_tag[static_cast<std::size_t>(side)]});
      }
    }
  rep.boundary_samples = static_cast<int>(bnd.size());

  double tmax = 0.0;
  for (const Sample& s : bnd)
    if (s.tag == EdgeTag::neumann)
      tmax = std::max(tmax, apply_normal(bench.exact.stress(s.x), s.n).norm());
  const double tscale = std::max(tmax, 1e-3 * smax + 1e-300);

  for (const Sample& s : bnd) {
    const Vec3 sig = bench.exact.stress(s.x);
    const Vec2 tn = apply_normal(sig, s.n);
    if (s.tag == EdgeTag::neumann) {
      if (bench.load.traction) {
        const Vec2 t = bench.load.traction(s.x, s.n, s.tag);
        rep.max_traction = std::max(rep.max_traction, (tn - t).norm() / tscale);
      }
      if (bench.physical_traction) {
        const std::optional<Vec2> t = bench.physical_traction(s.x, s.n);
        if (t) rep.max_traction = std::max(rep.max_traction, (tn - *t).norm() / tscale);
      }
    } else if (s.tag == EdgeTag::symmetry_x || s.tag == EdgeTag::symmetry_y) {
      const Vec2 u = bench.exact.displacement(s.x);
      rep.max_symmetry_displacement =
          std::max(rep.max_symmetry_displacement, std::abs(u.dot(s.n)) / (umax + 1e-300));
      const Vec2 tang = tn - tn.dot(s.n) * s.n;
      rep.max_symmetry_traction =
          std::max(rep.max_symmetry_traction, tang.norm() / (smax + 1e-300));
    }
  }

  rep.pass = rep.max_constitutive <= 1e-6 && rep.max_equilibrium <= 1e-6 &&
             rep.max_traction <= 1e-6 && rep.max_symmetry_displacement <= 1e-9 &&
             rep.max_symmetry_traction <= 1e-9;
  return rep;
}

}  // namespace recfem
