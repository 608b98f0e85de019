#include "pmrm/interpolation.hpp"

#include <algorithm>
#include <string>

#include "pmrm/errors.hpp"

namespace pmrm {

std::string_view to_string(InterpolationKind kind) {
  switch (kind) {
    case InterpolationKind::zero_order:
      return "zero_order";
    case InterpolationKind::linear:
      return "linear";
    case InterpolationKind::natural_cubic:
      return "natural_cubic";
  }
  return "unknown";
}

InterpolationKind parse_interpolation_kind(std::string_view text) {
  if (text == "zero_order") return InterpolationKind::zero_order;
  if (text == "linear") return InterpolationKind::linear;
  if (text == "natural_cubic") return InterpolationKind::natural_cubic;
  throw ValidationError("unknown interpolation kind '" + std::string(text) + "'");
}

void solve_tridiagonal(std::span<const double> sub, std::vector<double> diag,
                       std::span<const double> super, std::span<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * super[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs[i] = (rhs[i] - super[i] * rhs[i + 1]) / diag[i];
  }
}

Interpolant::Interpolant(InterpolationKind kind, std::span<const double> knots,
                         std::span<const double> values)
    : kind_(kind), knots_(knots.begin(), knots.end()), values_(values.begin(), values.end()) {
  if (knots_.size() < 2) throw ValidationError("interpolant needs at least two knots");
  if (knots_.size() != values_.size()) {
    throw ValidationError("interpolant knots and values differ in length");
  }
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k] > knots_[k - 1])) {
      throw ValidationError("interpolant knots must be strictly increasing");
    }
  }
  if (kind_ != InterpolationKind::natural_cubic) return;

  const std::size_t n = knots_.size();
  m2_.assign(n, 0.0);
  if (n == 2) return;
  // Interior equations for M_1..M_{n-2}; M_0 = M_{n-1} = 0.
  const std::size_t k = n - 2;
  std::vector<double> sub(k), diag(k), super(k), rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = knots_[i] - knots_[i - 1];
    const double h1 = knots_[i + 1] - knots_[i];
    sub[i - 1] = h0 / 6.0;
    diag[i - 1] = (h0 + h1) / 3.0;
    super[i - 1] = h1 / 6.0;
    rhs[i - 1] = (values_[i + 1] - values_[i]) / h1 - (values_[i] - values_[i - 1]) / h0;
  }
  solve_tridiagonal(sub, std::move(diag), super, rhs);
  std::copy(rhs.begin(), rhs.end(), m2_.begin() + 1);
}

std::size_t Interpolant::segment(double t) const {
  // Largest k with knots[k] <= t, clamped to [0, n-2].
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - knots_.begin() - 1));
  return std::min(k, knots_.size() - 2);
}

double Interpolant::evaluate(double t) const {
  const std::size_t n = knots_.size();
  if (kind_ == InterpolationKind::zero_order) {
    if (t >= knots_[n - 1]) return values_[n - 1];
    if (t <= knots_[0]) return values_[0];
    return values_[segment(t)];
  }
  if (t < knots_[0]) return values_[0] + derivative(knots_[0]) * (t - knots_[0]);
  if (t > knots_[n - 1]) return values_[n - 1] + derivative(knots_[n - 1]) * (t - knots_[n - 1]);

  const std::size_t k = segment(t);
  const double h = knots_[k + 1] - knots_[k];
  const double a = (knots_[k + 1] - t) / h;
  const double b = (t - knots_[k]) / h;
  double v = a * values_[k] + b * values_[k + 1];
  if (kind_ == InterpolationKind::natural_cubic) {
    v += ((a * a * a - a) * m2_[k] + (b * b * b - b) * m2_[k + 1]) * h * h / 6.0;
  }
  return v;
}

double Interpolant::derivative(double t) const {
  const std::size_t n = knots_.size();
  if (kind_ == InterpolationKind::zero_order) return 0.0;
  // Outside the span the slope is frozen at the boundary value.
  const double tc = std::clamp(t, knots_[0], knots_[n - 1]);
  const std::size_t k = segment(tc);
  const double h = knots_[k + 1] - knots_[k];
  double d = (values_[k + 1] - values_[k]) / h;
  if (kind_ == InterpolationKind::natural_cubic) {
    const double a = (knots_[k + 1] - tc) / h;
    const double b = (tc - knots_[k]) / h;
    d += (-(3.0 * a * a - 1.0) * m2_[k] + (3.0 * b * b - 1.0) * m2_[k + 1]) * h / 6.0;
  }
  return d;
}

Interpolant build_interpolant(InterpolationKind kind, std::span<const double> knots,
                              std::span<const double> values) {
  return Interpolant(kind, knots, values);
}

}  // namespace pmrm
