#include "ahlfors/metric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <queue>
#include <random>
#include <stdexcept>

#include "ahlfors/complex_ops.hpp"
#include "ahlfors/kernels.hpp"

namespace ahlfors {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHuge = 1e150;

double finite_chordal(cplx p, cplx q) {
  // Inversion w -> 1/w is an isometry; use it to keep |w|^2 representable.
  if (std::abs(p) > kHuge || std::abs(q) > kHuge) {
    const cplx ip = std::abs(p) > 0 ? 1.0 / p : cplx{};
    const cplx iq = std::abs(q) > 0 ? 1.0 / q : cplx{};
    return ops::chordal(ip.real(), ip.imag(), iq.real(), iq.imag());
  }
  return ops::chordal(p.real(), p.imag(), q.real(), q.imag());
}

// h at a point where f and f' are both plain finite numbers.
double density_direct(cplx f, cplx df) {
  const double af = std::abs(f);
  const double ad = std::abs(df);
  if (af > 1e100) return ((ad / af) / af) * ops::kInvSqrtPi;
  return ad / (1.0 + af * af) * ops::kInvSqrtPi;
}

std::optional<double> density_if_regular(const CompiledMap& m, cplx z) {
  const Value f = m.f().evaluate(z);
  if (f.is_indeterminate())
    throw NumericError("density", "indeterminate value of the map; perturb the sample point");
  if (!f.is_finite()) return std::nullopt;
  const Value d = m.df().evaluate(z);
  if (!d.is_finite()) return std::nullopt;
  const double h = density_direct(f.z, d.z);
  if (!std::isfinite(h)) return std::nullopt;
  return h;
}

}  // namespace

SpherePoint SpherePoint::from(const Value& v) {
  if (v.is_indeterminate()) throw NumericError("sphere", "indeterminate value has no sphere point");
  return v.is_infinite() ? infinity() : at(v.z);
}

double chordal_distance(const SpherePoint& p, const SpherePoint& q) {
  if (p.infinite && q.infinite) return 0.0;
  if (p.infinite) return ops::chordal_to_infinity(q.z.real(), q.z.imag());
  if (q.infinite) return ops::chordal_to_infinity(p.z.real(), p.z.imag());
  if (std::abs(p.z) > kHuge) return finite_chordal(p.z, q.z);
  if (std::abs(q.z) > kHuge) return finite_chordal(p.z, q.z);
  return ops::chordal(p.z.real(), p.z.imag(), q.z.real(), q.z.imag());
}

void SphericalDisk::validate() const {
  if (!(radius > 0.0) || !(radius < 0.5 * kSphereDiameter))
    throw std::invalid_argument("disk radius must lie in (0, 1/(2 sqrt(pi)))");
  if (!center.infinite && !std::isfinite(std::abs(center.z)))
    throw std::invalid_argument("disk center is not a finite number");
}

double SphericalDisk::area() const { return kPi * radius * radius; }

double spherical_density(const CompiledMap& m, cplx z) {
  if (auto h = density_if_regular(m, z)) return *h;
  // Pole of f (or of f'): average over a small ring, which converges to the
  // limit value since h is continuous on the sphere. The pole rule in the
  // evaluator is relative, so very close to a high-order pole f' may still
  // read as infinite; widen the ring until it does not.
  for (double delta = 1e-7; delta <= 1.1e-3; delta *= 100) {
    const double d = delta * std::max(1.0, std::abs(z));
    double sum = 0.0;
    bool ok = true;
    for (int k = 0; k < 4 && ok; ++k) {
      const auto h = density_if_regular(m, z + std::polar(d, kPi / 4 + k * kPi / 2));
      ok = h.has_value();
      if (ok) sum += *h;
    }
    if (ok) return sum / 4.0;
  }
  // Still nothing: the map overflows in a whole neighbourhood (exp far to
  // the right), where the density is far below double resolution.
  if (m.f().evaluate(z).is_infinite()) return 0.0;
  throw NumericError("density", "no finite density near a pole");
}

void density_squared(const CompiledMap& m, std::span<const double> zr,
                     std::span<const double> zi, std::span<double> out) {
  const std::size_t n = zr.size();
  if (zi.size() != n || out.size() != n)
    throw std::invalid_argument("density_squared: span sizes differ");
  thread_local std::vector<double> fr, fi, dr, di;
  thread_local std::vector<ValueKind> fk, dk;
  fr.resize(n), fi.resize(n), dr.resize(n), di.resize(n), fk.resize(n), dk.resize(n);
  m.f().evaluate(zr, zi, fr, fi, fk);
  m.df().evaluate(zr, zi, dr, di, dk);
  kernels::table().density_sq(fr.data(), fi.data(), dr.data(), di.data(), out.data(), n);
  for (std::size_t k = 0; k < n; ++k) {
    const bool plain = fk[k] == ValueKind::finite && dk[k] == ValueKind::finite &&
                       std::abs(fr[k]) < 1e100 && std::abs(fi[k]) < 1e100 &&
                       std::isfinite(out[k]);
    if (!plain) {
      const double h = spherical_density(m, cplx(zr[k], zi[k]));
      out[k] = h * h;
    }
  }
}

// ---------------------------------------------------------------------------
// Area: global adaptive quadrature over polar cells

QuadratureError::QuadratureError(const std::string& what, double estimate_, double error_,
                                 double r0, double r1, double t0, double t1)
    : NumericError("area", what),
      estimate(estimate_),
      error(error_),
      rho0(r0),
      rho1(r1),
      theta0(t0),
      theta1(t1) {}

namespace {

constexpr std::array<double, 5> kGaussX = {-0.906179845938663992797626878299,
                                           -0.538469310105683091036314420700, 0.0,
                                           0.538469310105683091036314420700,
                                           0.906179845938663992797626878299};
constexpr std::array<double, 5> kGaussW = {0.236926885056189087514264040720,
                                           0.478628670499366468041291514836,
                                           0.568888888888888888888888888889,
                                           0.478628670499366468041291514836,
                                           0.236926885056189087514264040720};

struct Rect {
  double r0, r1, t0, t1;
};

struct QNode {
  Rect rect;
  std::array<double, 4> child{};  // estimates of the four quarter cells
  double value = 0.0;             // sum of child estimates
  double error = 0.0;             // |value - own estimate|
};

std::array<Rect, 4> quarters(const Rect& c) {
  const double rm = 0.5 * (c.r0 + c.r1), tm = 0.5 * (c.t0 + c.t1);
  return {Rect{c.r0, rm, c.t0, tm}, Rect{rm, c.r1, c.t0, tm}, Rect{c.r0, rm, tm, c.t1},
          Rect{rm, c.r1, tm, c.t1}};
}

class CellIntegrator {
 public:
  explicit CellIntegrator(const CompiledMap& m) : m_(m) {
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) w_[i * 5 + j] = kGaussW[i] * kGaussW[j];
  }

  // Gauss-Legendre 5x5 estimates for a batch of cells.
  void estimate(std::span<const Rect> cells, std::span<double> out) {
    const std::size_t n = cells.size() * 25;
    zr_.resize(n), zi_.resize(n), hs_.resize(n), rho_.resize(n);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const Rect& q = cells[c];
      const double rc = 0.5 * (q.r0 + q.r1), rh = 0.5 * (q.r1 - q.r0);
      const double tc = 0.5 * (q.t0 + q.t1), th = 0.5 * (q.t1 - q.t0);
      for (int i = 0; i < 5; ++i) {
        const double rho = rc + rh * kGaussX[i];
        for (int j = 0; j < 5; ++j) {
          const double t = tc + th * kGaussX[j];
          const std::size_t k = c * 25 + i * 5 + j;
          zr_[k] = rho * std::cos(t);
          zi_[k] = rho * std::sin(t);
          rho_[k] = rho;
        }
      }
    }
    density_squared(m_, zr_, zi_, hs_);
    const auto& kt = kernels::table();
    for (std::size_t k = 0; k < n; ++k) hs_[k] = hs_[k] * rho_[k];
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const Rect& q = cells[c];
      const double jac = 0.25 * (q.r1 - q.r0) * (q.t1 - q.t0);
      out[c] = jac * kt.weighted_sum(w_.data(), hs_.data() + c * 25, 25);
    }
  }

  QNode make_node(const Rect& r, double own) {
    QNode nd;
    nd.rect = r;
    const auto q = quarters(r);
    estimate(q, nd.child);
    nd.value = (nd.child[0] + nd.child[1]) + (nd.child[2] + nd.child[3]);
    nd.error = std::abs(nd.value - own);
    return nd;
  }

 private:
  const CompiledMap& m_;
  std::array<double, 25> w_{};
  std::vector<double> zr_, zi_, hs_, rho_;
};

struct ByError {
  bool operator()(const QNode& a, const QNode& b) const { return a.error < b.error; }
};

double sum_sorted(std::vector<QNode> nodes, double QNode::*field) {
  std::sort(nodes.begin(), nodes.end(), [](const QNode& a, const QNode& b) {
    if (a.rect.r0 != b.rect.r0) return a.rect.r0 < b.rect.r0;
    return a.rect.t0 < b.rect.t0;
  });
  double s = 0.0;
  for (const QNode& n : nodes) s += n.*field;
  return s;
}

}  // namespace

double annulus_area(const CompiledMap& m, double r0, double r1, const QuadratureOptions& opt) {
  if (!(r0 >= 0.0) || !(r1 >= r0) || !std::isfinite(r1))
    throw std::invalid_argument("annulus_area: need 0 <= r0 <= r1 < inf");
  if (r1 == r0) return 0.0;

  // Radial breakpoints uniform in asinh(rho): linear near 0, logarithmic far out.
  const double s0 = std::asinh(r0), s1 = std::asinh(r1);
  const int nr = std::clamp(static_cast<int>(std::ceil(8.0 * (s1 - s0))), 1, 32);
  const int nt = 16;
  std::vector<double> edges(nr + 1);
  for (int i = 0; i <= nr; ++i) edges[i] = std::sinh(s0 + (s1 - s0) * i / nr);
  edges.front() = r0;
  edges.back() = r1;

  CellIntegrator integ(m);
  std::vector<Rect> initial;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nt; ++j)
      initial.push_back({edges[i], edges[i + 1], 2 * kPi * j / nt, 2 * kPi * (j + 1) / nt});
  std::vector<double> own(initial.size());
  integ.estimate(initial, own);

  std::priority_queue<QNode, std::vector<QNode>, ByError> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t c = 0; c < initial.size(); ++c) {
    QNode nd = integ.make_node(initial[c], own[c]);
    total += nd.value;
    err += nd.error;
    heap.push(std::move(nd));
  }

  std::size_t cells = heap.size();
  std::size_t since_resum = 0;
  while (err > opt.tol * (1.0 + std::abs(total))) {
    if (cells + 3 > opt.cell_budget) {
      const QNode& w = heap.top();
      throw QuadratureError("cell budget exhausted before reaching the tolerance", total, err,
                            w.rect.r0, w.rect.r1, w.rect.t0, w.rect.t1);
    }
    const QNode worst = heap.top();
    heap.pop();
    total -= worst.value;
    err -= worst.error;
    const auto q = quarters(worst.rect);
    for (int k = 0; k < 4; ++k) {
      QNode nd = integ.make_node(q[k], worst.child[k]);
      total += nd.value;
      err += nd.error;
      heap.push(std::move(nd));
    }
    cells += 3;
    if (++since_resum == 512) {
      // Refresh the running sums so cancellation does not accumulate.
      since_resum = 0;
      std::vector<QNode> all;
      auto copy = heap;
      while (!copy.empty()) all.push_back(copy.top()), copy.pop();
      total = sum_sorted(all, &QNode::value);
      err = sum_sorted(all, &QNode::error);
    }
  }

  std::vector<QNode> all;
  all.reserve(heap.size());
  while (!heap.empty()) all.push_back(heap.top()), heap.pop();
  return sum_sorted(std::move(all), &QNode::value);
}

double area(const CompiledMap& m, double r, const QuadratureOptions& opt) {
  if (!(r > 0.0)) throw std::invalid_argument("area: radius must be positive");
  return annulus_area(m, 0.0, r, opt);
}

// ---------------------------------------------------------------------------
// Circle integrals: the integrands are smooth and periodic, so the trapezoid
// rule converges geometrically; refine by doubling and reuse old samples.

namespace {

template <class Weight>
double circle_integral(const CompiledMap& m, double r, double tol, const char* stage,
                       Weight weight) {
  if (!(r > 0.0) || !std::isfinite(r))
    throw std::invalid_argument(std::string(stage) + ": radius must be positive");
  std::vector<double> zr, zi, hs, fr, fi;
  std::vector<ValueKind> kinds;
  auto sum_at = [&](std::size_t n, std::size_t first, std::size_t stride) {
    const std::size_t cnt = (n - first + stride - 1) / stride;
    zr.resize(cnt), zi.resize(cnt), hs.resize(cnt), fr.resize(cnt), fi.resize(cnt);
    kinds.resize(cnt);
    for (std::size_t k = 0; k < cnt; ++k) {
      const double t = 2 * kPi * static_cast<double>(first + k * stride) / static_cast<double>(n);
      zr[k] = r * std::cos(t);
      zi[k] = r * std::sin(t);
    }
    m.f().evaluate(zr, zi, fr, fi, kinds);
    for (std::size_t k = 0; k < cnt; ++k) {
      if (kinds[k] != ValueKind::finite)
        throw NumericError(stage, "pole of the map on |z| = " + std::to_string(r) +
                                      "; perturb the radius");
    }
    density_squared(m, zr, zi, hs);
    double s = 0.0;
    for (std::size_t k = 0; k < cnt; ++k) s += weight(hs[k]);
    return s;
  };

  std::size_t n = 256;
  double sum = sum_at(n, 0, 1);
  double prev = 2 * kPi * r * sum / static_cast<double>(n);
  int agreed = 0;
  while (n < (std::size_t{1} << 22)) {
    sum += sum_at(2 * n, 1, 2);
    n *= 2;
    const double cur = 2 * kPi * r * sum / static_cast<double>(n);
    if (std::abs(cur - prev) <= tol * (1.0 + std::abs(cur))) {
      if (++agreed == 2) return cur;
    } else {
      agreed = 0;
    }
    prev = cur;
  }
  throw NumericError(stage, "circle quadrature did not converge at r = " + std::to_string(r));
}

}  // namespace

double boundary_length(const CompiledMap& m, double r, double tol) {
  return circle_integral(m, r, tol, "boundary_length", [](double hsq) { return std::sqrt(hsq); });
}

double area_derivative(const CompiledMap& m, double r, double tol) {
  return circle_integral(m, r, tol, "area_derivative", [](double hsq) { return hsq; });
}

// ---------------------------------------------------------------------------

std::string MetricProfile::to_csv() const {
  std::string out = "r,a,l,ratio\n";
  char buf[160];
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double ratio = a[k] > 0 ? l[k] / a[k] : std::numeric_limits<double>::infinity();
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", radii[k], a[k], l[k], ratio);
    out += buf;
  }
  return out;
}

MetricProfile compute_profile(const CompiledMap& m, std::vector<double> radii,
                              const QuadratureOptions& opt) {
  std::sort(radii.begin(), radii.end());
  MetricProfile p;
  p.map = m.source();
  double acc = 0.0, prev = 0.0;
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("compute_profile: radii must be positive");
    acc += annulus_area(m, prev, r, opt);
    prev = r;
    p.radii.push_back(r);
    p.a.push_back(acc);
    p.l.push_back(boundary_length(m, r));
  }
  return p;
}

namespace {

// l/a at r, nudging r outward by 1e-9 r when the circle meets a pole.
struct RatioAt {
  double r, ratio;
};

RatioAt ratio_at(const CompiledMap& m, double r) {
  const QuadratureOptions opt{1e-9, 400'000};
  for (int attempt = 0;; ++attempt) {
    try {
      const double l = boundary_length(m, r, 1e-10);
      const double a = area(m, r, opt);
      return {r, a > 0 ? l / a : std::numeric_limits<double>::infinity()};
    } catch (const QuadratureError&) {
      throw;
    } catch (const NumericError&) {
      if (attempt == 4) throw;
      r *= 1.0 + 1e-9;
    }
  }
}

}  // namespace

std::vector<double> select_radii(const CompiledMap& m, double r_min, double r_max, int count) {
  if (!(r_min > 0.0) || !(r_max > r_min) || count < 1)
    throw std::invalid_argument("select_radii: need 0 < r_min < r_max and count >= 1");
  if (area(m, r_min, {1e-12, 400'000}) <= 1e-300)
    throw NumericError("select_radii", "a(r_min) = 0: the map is constant on the range");

  const double L0 = std::log(r_min), L1 = std::log(r_max);
  std::vector<RatioAt> picked;
  constexpr int kProbe = 7;
  for (int b = 0; b < count; ++b) {
    const double lo = L0 + (L1 - L0) * b / count;
    const double hi = L0 + (L1 - L0) * (b + 1) / count;
    std::array<RatioAt, kProbe> probe;
    int best = 0;
    for (int k = 0; k < kProbe; ++k) {
      probe[k] = ratio_at(m, std::exp(lo + (hi - lo) * k / (kProbe - 1)));
      if (probe[k].ratio < probe[best].ratio) best = k;
    }
    // Golden-section search on log r around the best probe.
    double a = lo + (hi - lo) * std::max(0, best - 1) / (kProbe - 1);
    double c = lo + (hi - lo) * std::min(kProbe - 1, best + 1) / (kProbe - 1);
    constexpr double g = 0.61803398874989484820;
    RatioAt x1 = ratio_at(m, std::exp(c - g * (c - a)));
    RatioAt x2 = ratio_at(m, std::exp(a + g * (c - a)));
    while (c - a > 1e-4 * std::max(1.0, std::abs(hi - lo))) {
      if (x1.ratio <= x2.ratio) {
        c = std::log(x2.r);
        x2 = x1;
        x1 = ratio_at(m, std::exp(c - g * (c - a)));
      } else {
        a = std::log(x1.r);
        x1 = x2;
        x2 = ratio_at(m, std::exp(a + g * (c - a)));
      }
    }
    RatioAt cand = x1.ratio <= x2.ratio ? x1 : x2;
    if (probe[best].ratio < cand.ratio) cand = probe[best];
    picked.push_back(cand);
  }

  std::vector<double> out;
  double last = std::numeric_limits<double>::infinity();
  for (const RatioAt& p : picked) {
    if (p.ratio < last && (out.empty() || p.r > out.back())) {
      out.push_back(std::clamp(p.r, r_min, r_max));
      last = p.ratio;
    }
  }
  return out;
}

Certificate lengtharea_certificate(const CompiledMap& m, double r1, double r2) {
  if (!(r1 > 0.0) || !(r2 >= r1)) throw std::invalid_argument("certificate: need 0 < r1 <= r2");
  const QuadratureOptions opt{1e-11, 1'000'000};
  const double a1 = area(m, r1, opt);
  if (!(a1 > 0.0)) throw NumericError("certificate", "a(r1) = 0");
  Certificate cert;
  cert.bound = 2 * kPi / a1;
  if (r2 == r1) return cert;

  // Composite Gauss-Legendre in u = ln r; a(r) is carried forward ring by ring.
  const double u1 = std::log(r1), u2 = std::log(r2);
  auto integrate = [&](int panels) {
    std::vector<std::pair<double, double>> nodes;  // (u, weight)
    const double hw = 0.5 * (u2 - u1) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = u1 + (2 * p + 1) * hw;
      for (int k = 0; k < 5; ++k) nodes.emplace_back(mid + hw * kGaussX[k], hw * kGaussW[k]);
    }
    double a = a1, r_prev = r1, total = 0.0;
    for (auto [u, w] : nodes) {
      const double r = std::exp(u);
      a += annulus_area(m, r_prev, r, opt);
      r_prev = r;
      const double q = boundary_length(m, r) / a;
      total += w * q * q;
    }
    return total;
  };
  int panels = std::max(2, static_cast<int>(std::ceil(2.0 * (u2 - u1))));
  double prev = integrate(panels);
  for (int iter = 0; iter < 8; ++iter) {
    panels *= 2;
    const double cur = integrate(panels);
    if (std::abs(cur - prev) <= 1e-9 * (1.0 + std::abs(cur))) {
      cert.integral = cur;
      return cert;
    }
    prev = cur;
  }
  throw NumericError("certificate", "u-quadrature did not converge");
}

std::vector<SpherePoint> sample_sphere_uniform(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<SpherePoint> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Archimedes: the height is uniform on [-1, 1] for the area measure.
    const double u = 2.0 * uniform() - 1.0;
    const double phi = 2.0 * kPi * uniform();
    if (u == 1.0) {
      out.push_back(SpherePoint::infinity());
      continue;
    }
    const double s = std::sqrt((1.0 - u) * (1.0 + u));
    out.push_back(SpherePoint::at(cplx(s * std::cos(phi), s * std::sin(phi)) / (1.0 - u)));
  }
  return out;
}

}  // namespace ahlfors
