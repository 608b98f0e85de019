#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace pmrm {

enum class InterpolationKind { zero_order, linear, natural_cubic };

std::string_view to_string(InterpolationKind kind);
InterpolationKind parse_interpolation_kind(std::string_view text);

// Interpolant through (knots, values).
//
// Outside [knots.front(), knots.back()] the zero-order kind holds the boundary
// value; linear and natural-cubic kinds continue along the boundary tangent.
// A natural cubic spline has zero curvature at both ends, so the tangent line is
// its C2 continuation.
class Interpolant {
 public:
  // Throws ValidationError for fewer than two knots, non-increasing knots or a
  // length mismatch.
  Interpolant(InterpolationKind kind, std::span<const double> knots,
              std::span<const double> values);

  double operator()(double t) const { return evaluate(t); }
  double evaluate(double t) const;
  // First derivative (right derivative at the jumps of the zero-order kind).
  double derivative(double t) const;

  InterpolationKind kind() const { return kind_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  // Second derivatives at the knots; empty unless natural_cubic.
  const std::vector<double>& second_derivatives() const { return m2_; }

 private:
  std::size_t segment(double t) const;

  InterpolationKind kind_;
  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> m2_;
};

Interpolant build_interpolant(InterpolationKind kind, std::span<const double> knots,
                              std::span<const double> values);

// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
// sub[0] and super[n-1] are ignored. `rhs` is overwritten with the solution.
void solve_tridiagonal(std::span<const double> sub, std::vector<double> diag,
                       std::span<const double> super, std::span<double> rhs);

}  // namespace pmrm
