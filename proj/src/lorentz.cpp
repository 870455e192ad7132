#include "capflow/lorentz.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "capflow/errors.hpp"

namespace capflow {

double lorentz_from_levels(std::span<const double> values, std::span<const double> masses, double p, double q) {
  if (values.size() != masses.size()) throw InvalidArgument("values and masses differ in length");
  if (!(q < kInfinity)) throw InvalidArgument("q = inf is the weak norm; use weak_lorentz_norm");
  if (!(p > 0.0) || !(q > 0.0)) throw InvalidArgument("exponents must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double next = i + 1 < values.size() ? std::pow(values[i + 1], q) : 0.0;
    double jump = std::pow(values[i], q) - next;
    if (masses[i] > 0.0) sum += std::pow(masses[i], q / p) * jump;
  }
  if (sum <= 0.0) return 0.0;
  return std::pow(p / q, 1.0 / q) * std::pow(sum, 1.0 / q);
}

double weak_lorentz_from_levels(std::span<const double> values, std::span<const double> masses, double p) {
  if (values.size() != masses.size()) throw InvalidArgument("values and masses differ in length");
  if (!(p > 0.0)) throw InvalidArgument("p must be positive");
  double best = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    best = std::max(best, values[i] * std::pow(masses[i], 1.0 / p));
  return best;
}

namespace {

void split_levels(const Field& f, std::vector<double>& v, std::vector<double>& m) {
  for (const auto& l : levels_of(f)) {
    v.push_back(l.value);
    m.push_back(l.cumulative_mass);
  }
}

}  // namespace

double lorentz_norm(const Field& f, const LorentzExponents& e) {
  if (e.weak()) throw InvalidArgument("q = inf is the weak norm; use weak_lorentz_norm");
  std::vector<double> v, m;
  split_levels(f, v, m);
  return lorentz_from_levels(v, m, e.p(), e.q());
}

double weak_lorentz_norm(const Field& f, double p) {
  std::vector<double> v, m;
  split_levels(f, v, m);
  return weak_lorentz_from_levels(v, m, p);
}

double gamma_norm(const Field& f, const LorentzExponents& e, double r) {
  const double p = e.p(), q = e.q();
  if (!(p > 1.0) || e.weak() || !(q >= 1.0)) throw InvalidArgument("gamma norm needs 1 < p < inf, 1 <= q < inf");
  if (!(r > 0.0 && r <= 1.0 && r < p)) throw InvalidArgument("gamma norm needs 0 < r <= 1, r < p");

  std::vector<double> v, m;
  split_levels(f, v, m);
  if (v.empty()) return 0.0;

  // First plateau: f_r** is constant there, so the integral is exact.
  double total = std::pow(v[0], q) * std::pow(m[0], q / p) * p / q;

  double acc = std::pow(v[0], r) * m[0];  // int_0^{m_0} (f*)^r
  using boost::math::quadrature::gauss_kronrod;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double a = m[i - 1], b = m[i], vr = std::pow(v[i], r), base = acc;
    auto integrand = [&](double t) {
      double F = base + vr * (t - a);
      return std::pow(F / t, q / r) * std::pow(t, q / p - 1.0);
    };
    double err = 0.0;
    total += gauss_kronrod<double, 61>::integrate(integrand, a, b, 15, 1e-13, &err);
    acc += vr * (b - a);
  }

  // Beyond the support F(t) = int |f|^r is constant.
  const double T = m.back();
  total += std::pow(acc, q / r) * std::pow(T, q / p - q / r) / (q / r - q / p);
  return std::pow(total, 1.0 / q);
}

double power_identity_residual(const Field& f, const LorentzExponents& e, double r) {
  if (!(r > 0.0) || e.weak()) throw InvalidArgument("power identity needs finite positive exponents");
  double lhs = lorentz_norm(f.pow_abs(r), e);
  double rhs = std::pow(lorentz_norm(f, LorentzExponents(e.p() * r, e.q() * r)), r);
  return std::fabs(lhs - rhs);
}

double pairing(const Field& f, const Field& g) {
  f.require_same_space(g);
  const auto& w = f.measure();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i] * w.weight(i);
  return s;
}

double pairing_abs(const Field& f, const Field& g) {
  f.require_same_space(g);
  const auto& w = f.measure();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::fabs(f[i] * g[i]) * w.weight(i);
  return s;
}

}  // namespace capflow
