#include "vps/physics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vps {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x))
    throw std::domain_error(std::string(what) + ": non-finite argument");
}

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Flory-Huggins convex part and derivatives, valid on (0,1).
struct FhConvex {
  double np, ns;
  double f(double x) const {
    return x * std::log(x) / np + (1.0 - x) * std::log(1.0 - x) / ns;
  }
  double fp(double x) const {
    return (std::log(x) + 1.0) / np - (std::log(1.0 - x) + 1.0) / ns;
  }
  double fpp(double x) const { return 1.0 / (np * x) + 1.0 / (ns * (1.0 - x)); }
};

}  // namespace

void PotentialSpec::validate() const {
  if (kind == PotentialKind::flory_huggins) {
    if (!(delta > 0.0 && delta < 0.5))
      throw std::invalid_argument("potential: delta must lie in (0, 1/2)");
    if (!(n_p >= 1.0) || !(n_s >= 1.0))
      throw std::invalid_argument("potential: n_p and n_s must be >= 1");
    if (!(chi >= 0.0)) throw std::invalid_argument("potential: chi must be >= 0");
  }
}

PotentialEval eval_potential(const PotentialSpec& spec, double x) {
  require_finite(x, "eval_potential");
  PotentialEval out;
  if (spec.kind == PotentialKind::ginzburg_landau) {
    // Polynomial double well; no regularization needed.
    out.F = x * x * (1.0 - x) * (1.0 - x);
    out.dF = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    out.d2F1 = 12.0 * x * x - 12.0 * x + 3.0;  // convex: 3(2x-1)^2
    out.d2F2 = -1.0;
    return out;
  }
  const FhConvex f1{spec.n_p, spec.n_s};
  const double d = spec.delta;
  const double y = clamp(x, d, 1.0 - d);
  double F1, F1p, F1pp;
  if (x == y) {
    F1 = f1.f(x);
    F1p = f1.fp(x);
    F1pp = f1.fpp(x);
  } else {
    // Quadratic continuation outside [delta, 1-delta]; keeps F1 convex C^1.
    const double dx = x - y;
    F1pp = f1.fpp(y);
    F1p = f1.fp(y) + F1pp * dx;
    F1 = f1.f(y) + f1.fp(y) * dx + 0.5 * F1pp * dx * dx;
  }
  const double F2 = spec.chi * x * (1.0 - x);
  const double F2p = spec.chi * (1.0 - 2.0 * x);
  out.F = F1 + F2;
  out.dF = F1p + F2p;
  out.d2F1 = F1pp;
  out.d2F2 = -2.0 * spec.chi;
  return out;
}

void MobilitySpec::validate() const {
  if (!(delta > 0.0 && delta < 0.5))
    throw std::invalid_argument("mobility: delta must lie in (0, 1/2)");
  if (kind == MobilityKind::single_degenerate && !(exponent >= 1.0))
    throw std::invalid_argument("mobility: exponent must be >= 1");
}

MobilityEval eval_mobility(const MobilitySpec& spec, double x) {
  require_finite(x, "eval_mobility");
  MobilityEval out;
  if (spec.kind == MobilityKind::regular) {
    out.m = 1.0;
    out.dm = 0.0;
    out.n = 1.0;
    return out;
  }
  const double d = spec.delta;
  const double y = clamp(x, d, 1.0 - d);
  const bool interior = (x > d) && (x < 1.0 - d);
  const double base = y * (1.0 - y);
  if (spec.kind == MobilityKind::single_degenerate) {
    const double e = spec.exponent;
    out.m = std::pow(base, e);
    out.dm = interior ? e * std::pow(base, e - 1.0) * (1.0 - 2.0 * y) : 0.0;
    out.n = out.m;
  } else {
    out.n = base;
    out.m = base * base;
    out.dm = interior ? 2.0 * base * (1.0 - 2.0 * y) : 0.0;
  }
  return out;
}

void CouplingSpec::validate() const {
  if (form == CouplingForm::constant) return;
  if (!(phi_star > 0.0 && phi_star < 1.0))
    throw std::invalid_argument("coupling: phi_star must lie in (0, 1)");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5))
    throw std::invalid_argument("coupling: clamp_eps must lie in (0, 1/2)");
  if (!(slope > 0.0)) throw std::invalid_argument("coupling: slope must be positive");
}

CouplingEval eval_coupling_A(const CouplingSpec& spec, double x) {
  require_finite(x, "eval_coupling_A");
  CouplingEval out;
  if (spec.form == CouplingForm::constant) {
    out.A = spec.value;
    out.dA = 0.0;
    return out;
  }
  auto cot = [](double t) { return std::cos(t) / std::sin(t); };
  const double eps = spec.clamp_eps;
  const double y = clamp(x, eps, 1.0 - eps);
  const double g = spec.slope * (cot(kPi * spec.phi_star) - cot(kPi * y));
  const double t = std::tanh(g);
  out.A = (spec.form == CouplingForm::tanh_shifted) ? 0.5 * (1.0 + t) : 0.5 * t;
  if (x > eps && x < 1.0 - eps) {
    const double s = std::sin(kPi * y);
    out.dA = 0.5 * (1.0 - t * t) * spec.slope * kPi / (s * s);
  } else {
    out.dA = 0.0;  // clamped region: A is constant there
  }
  return out;
}

void ScalarCoef::validate(const char* name) const {
  const std::string n = name;
  switch (family) {
    case CoefFamily::constant:
      if (!(a > 0.0)) throw std::invalid_argument(n + ": constant must be positive");
      break;
    case CoefFamily::inverse_quadratic:
      if (!(a > 0.0)) throw std::invalid_argument(n + ": coefficient must be positive");
      if (!(clamp_lo > 0.0) || !(clamp_hi > clamp_lo))
        throw std::invalid_argument(n + ": clamp interval must satisfy 0 < lo < hi");
      break;
    case CoefFamily::quadratic:
      if (!(a > 0.0) || b < 0.0)
        throw std::invalid_argument(n + ": quadratic family needs a > 0, b >= 0");
      break;
  }
}

double eval_coef(const ScalarCoef& c, double x) {
  require_finite(x, "eval_coef");
  switch (c.family) {
    case CoefFamily::constant:
      return c.a;
    case CoefFamily::inverse_quadratic: {
      // 1/(a y^2) with the argument clamped to y = clamp(x, lo, hi); the
      // clamp keeps the family positive and bounded for any x.
      const double y = clamp(x, c.clamp_lo, c.clamp_hi);
      return 1.0 / (c.a * y * y);
    }
    case CoefFamily::quadratic:
      return c.a + c.b * x * x;
  }
  return 0.0;
}

void CoefficientSet::validate() const {
  tau.validate("tau");
  hel.validate("h");
  eta.validate("eta");
  coupling.validate();
  if (!(c0 > 0.0)) throw std::invalid_argument("coefficients: c0 must be positive");
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0))
    throw std::invalid_argument("coefficients: eps1, eps2 must be >= 0");
}

CoefficientSet reference_coefficients() {
  CoefficientSet c;
  c.tau = {CoefFamily::inverse_quadratic, 5.0, 0.0, 0.05, 1.0};
  c.hel = {CoefFamily::inverse_quadratic, 5.0, 0.0, 0.05, 1.0};
  c.eta = {CoefFamily::quadratic, 2.0, 1.0, 0.0, 0.0};
  c.c0 = 1.0;
  c.eps1 = 0.1;
  c.eps2 = 0.1;
  c.coupling = CouplingSpec{};
  return c;
}

// --------------------------------------------------------------------------
// Entropy
// --------------------------------------------------------------------------

bool entropy_closed_form_available(const MobilitySpec& mobility) {
  switch (mobility.kind) {
    case MobilityKind::regular:
      return true;
    case MobilityKind::double_degenerate:
      return true;
    case MobilityKind::single_degenerate:
      return mobility.exponent == 1.0 || mobility.exponent == 2.0;
  }
  return false;
}

namespace {

// Closed forms of G and G' on [delta, 1-delta], anchored at 1/2.
struct EntropyInner {
  const MobilitySpec& mob;
  void eval(double x, double& G, double& dG) const {
    if (mob.kind == MobilityKind::regular) {
      G = 0.5 * (x - 0.5) * (x - 0.5);
      dG = x - 0.5;
      return;
    }
    const double xl = std::log(x), ml = std::log(1.0 - x);
    const double mix = x * xl + (1.0 - x) * ml;  // x ln x + (1-x) ln(1-x)
    const bool quartic = (mob.kind == MobilityKind::double_degenerate) ||
                         (mob.exponent == 2.0);
    if (quartic) {
      // G'' = 1/(x(1-x))^2
      G = -std::log(x * (1.0 - x)) + 2.0 * mix;
      dG = 1.0 / (1.0 - x) - 1.0 / x + 2.0 * (xl - ml);
    } else {
      // G'' = 1/(x(1-x))
      G = mix + std::log(2.0);
      dG = xl - ml;
    }
  }
};

struct GaussRule5 {
  static constexpr double xk[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                   0.5384693101056831, 0.9061798459386640};
  static constexpr double wk[5] = {0.2369268850561891, 0.4786286704993665,
                                   0.5688888888888889, 0.4786286704993665,
                                   0.2369268850561891};
};

// Composite Gauss quadrature of (x-s)/m_delta(s) and 1/m_delta(s) over [a,b],
// with panel doubling until both integrals settle.
void quad_segment(const MobilitySpec& mob, double x, double a, double b,
                  int initial_panels, int max_panels, double tol, double& I_G,
                  double& I_dG) {
  if (a == b) {
    I_G = 0.0;
    I_dG = 0.0;
    return;
  }
  double prevG = 0.0, prevD = 0.0, change = 0.0;
  bool have_prev = false;
  for (int panels = initial_panels; panels <= max_panels; panels *= 2) {
    double sG = 0.0, sD = 0.0;
    const double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double c = a + (p + 0.5) * w;
      for (int k = 0; k < 5; ++k) {
        const double s = c + 0.5 * w * GaussRule5::xk[k];
        const double im = 1.0 / eval_mobility(mob, s).m;
        sG += GaussRule5::wk[k] * (x - s) * im;
        sD += GaussRule5::wk[k] * im;
      }
    }
    sG *= 0.5 * w;
    sD *= 0.5 * w;
    change = std::max(std::abs(sG - prevG), std::abs(sD - prevD));
    if (have_prev && std::abs(sG - prevG) <= tol * std::max(1.0, std::abs(sG)) &&
        std::abs(sD - prevD) <= tol * std::max(1.0, std::abs(sD))) {
      I_G = sG;
      I_dG = sD;
      return;
    }
    prevG = sG;
    prevD = sD;
    have_prev = true;
  }
  throw std::runtime_error(
      "entropy quadrature did not converge: segment [" + std::to_string(a) + ", " +
      std::to_string(b) + "], panel cap " + std::to_string(max_panels) +
      ", last change " + std::to_string(change));
}

}  // namespace

EntropyEval eval_entropy(const EntropySpec& spec, double x) {
  require_finite(x, "eval_entropy");
  const double d = spec.mobility.delta;
  const double lo = d, hi = 1.0 - d;
  EntropyEval out;

  if (spec.mode == EntropyMode::quadrature) {
    // G(x) = int_{1/2}^x (x-s)/m_delta(s) ds, split at the clamp breakpoints
    // where the integrand has kinks.
    double a = 0.5, b = x;
    const double sign = (b >= a) ? 1.0 : -1.0;
    if (b < a) std::swap(a, b);
    double pts[4] = {a, clamp(lo, a, b), clamp(hi, a, b), b};
    std::sort(pts, pts + 4);
    double G = 0.0, dG = 0.0;
    for (int s = 0; s < 3; ++s) {
      double ig, id;
      quad_segment(spec.mobility, x, pts[s], pts[s + 1], spec.initial_panels,
                   spec.max_panels, spec.quad_tol, ig, id);
      G += ig;
      dG += id;
    }
    // Orientation: for x < 1/2 the segments run x -> 1/2, so flip the sign.
    out.G = sign * G;
    out.dG = sign * dG;
    return out;
  }

  if (!entropy_closed_form_available(spec.mobility))
    throw std::invalid_argument(
        "entropy: no closed form for this mobility; use quadrature mode");
  const EntropyInner inner{spec.mobility};
  if (x >= lo && x <= hi) {
    inner.eval(x, out.G, out.dG);
    return out;
  }
  const double e = (x < lo) ? lo : hi;
  double Ge, dGe;
  inner.eval(e, Ge, dGe);
  const double curv = 1.0 / eval_mobility(spec.mobility, e).m;
  const double dx = x - e;
  out.G = Ge + dGe * dx + 0.5 * curv * dx * dx;
  out.dG = dGe + curv * dx;
  return out;
}

double eval_entropy_curvature(const EntropySpec& spec, double x) {
  require_finite(x, "eval_entropy_curvature");
  return 1.0 / eval_mobility(spec.mobility, x).m;
}

// --------------------------------------------------------------------------
// Coefficient validation
// --------------------------------------------------------------------------

const ValidationEntry* ValidationReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

namespace {

ValidationEntry range_entry(const std::string& name, double lo, double hi,
                            double observed_min, double observed_max) {
  ValidationEntry e;
  e.name = name;
  e.observed_min = observed_min;
  e.observed_max = observed_max;
  e.pass = std::isfinite(observed_min) && std::isfinite(observed_max) &&
           observed_min >= lo && observed_max <= hi;
  if (!e.pass) e.note = "outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
  return e;
}

// Endpoint-divergence probe: the outermost samples must not dwarf the bulk.
ValidationEntry trend_entry(const std::string& name, const std::vector<double>& r) {
  ValidationEntry e;
  e.name = name;
  std::vector<double> sorted = r;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const std::size_t band = 10;
  double left = 0.0, right = 0.0;
  for (std::size_t k = 0; k < band; ++k) {
    left = std::max(left, r[k]);
    right = std::max(right, r[r.size() - 1 - k]);
  }
  e.observed_min = sorted.front();
  e.observed_max = sorted.back();
  const double cap = std::max(50.0 * median, 1e-6);
  const bool left_ok = left <= cap, right_ok = right <= cap;
  e.pass = std::isfinite(sorted.back()) && left_ok && right_ok;
  if (!e.pass) {
    e.note = "diverges toward";
    if (!left_ok) e.note += " x=0";
    if (!right_ok) e.note += " x=1";
    e.note += " (endpoint max " + std::to_string(std::max(left, right)) +
              " vs median " + std::to_string(median) + ")";
  }
  return e;
}

}  // namespace

ValidationReport validate_coefficients(const CoefficientSet& coeffs,
                                       const MobilitySpec& mobility) {
  ValidationReport rep;
  const int K = 10000;

  struct Probe {
    const char* name;
    const ScalarCoef* coef;
  };
  const Probe probes[3] = {{"tau", &coeffs.tau}, {"h", &coeffs.hel}, {"eta", &coeffs.eta}};
  for (const auto& p : probes) {
    double mn = 1e300, mx = -1e300;
    for (int k = 0; k < K; ++k) {
      const double x = -0.5 + 2.0 * (k + 0.5) / K;
      const double v = eval_coef(*p.coef, x);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    auto e = range_entry(std::string(p.name) + "_positive_bounded",
                         1e-300, 1e12, mn, mx);
    if (p.coef->family == CoefFamily::inverse_quadratic)
      e.note = "clamp to [" + std::to_string(p.coef->clamp_lo) + ", " +
               std::to_string(p.coef->clamp_hi) + "] active";
    rep.entries.push_back(e);
  }

  {
    double mn = 1e300, mx = -1e300, dmax = 0.0;
    for (int k = 0; k < K; ++k) {
      const double x = (k + 0.5) / K;
      const CouplingEval ce = eval_coupling_A(coeffs.coupling, x);
      mn = std::min(mn, ce.A);
      mx = std::max(mx, ce.A);
      dmax = std::max(dmax, std::abs(ce.dA));
    }
    const double lo = (coeffs.coupling.form == CouplingForm::tanh_shifted) ? -1e-12
                      : (coeffs.coupling.form == CouplingForm::tanh_verbatim)
                          ? -0.5 - 1e-12
                          : -1e300;
    const double hi = (coeffs.coupling.form == CouplingForm::tanh_verbatim)
                          ? 0.5 + 1e-12
                          : (coeffs.coupling.form == CouplingForm::tanh_shifted)
                                ? 1.0 + 1e-12
                                : 1e300;
    rep.entries.push_back(range_entry("A_bounded", lo, hi, mn, mx));
    rep.entries.push_back(range_entry("dA_bounded", 0.0, 1e15, 0.0, dmax));
  }

  if (mobility.kind == MobilityKind::double_degenerate) {
    const double eps = coeffs.coupling.clamp_eps;
    std::vector<double> rA(K), rdA(K);
    for (int k = 0; k < K; ++k) {
      const double x = eps + (1.0 - 2.0 * eps) * (k + 0.5) / K;
      const double n_raw = x * (1.0 - x);
      const CouplingEval ce = eval_coupling_A(coeffs.coupling, x);
      rA[k] = std::abs(ce.A) / n_raw;
      rdA[k] = std::abs(ce.dA) / n_raw;
    }
    rep.entries.push_back(trend_entry("A_over_n_bounded", rA));
    rep.entries.push_back(trend_entry("dA_over_n_bounded", rdA));
  }

  rep.pass = true;
  for (const auto& e : rep.entries) rep.pass = rep.pass && e.pass;
  return rep;
}

}  // namespace vps
