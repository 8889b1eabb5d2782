#pragma once

#include <span>

#include "pilotwave/field.hpp"

namespace pw {

// Second-order central differences; periodic axes wrap, dirichlet axes use
// one-sided second-order stencils at the two edge nodes.
RealField gradient(const RealField& f, int axis);
ComplexField gradient(const ComplexField& f, int axis);

// sum_i d_i v_i with the same stencils as gradient.
RealField divergence(std::span<const RealField> components);

// Trapezoid quadrature: full-cell weights on periodic axes, half weights at
// dirichlet ends.
double integrate(const RealField& f);

// Per-line running trapezoid integral along `axis` starting from the grid
// node nearest `a` (which gets value 0); points below a accumulate with
// negative sign so the result is int_a^q f dq'.
RealField cumulative_integral(const RealField& f, int axis, double a);

// Multilinear interpolation over the 2^n surrounding nodes. Periodic axes
// wrap; points outside a dirichlet axis range are an error.
double interpolate(const RealField& f, std::span<const double> point);
std::complex<double> interpolate(const ComplexField& f,
                                 std::span<const double> point);

namespace detail {

// Corner weights for one interpolation query; shared by all field types.
struct InterpStencil {
  std::size_t corners[16];
  double weights[16];
  int count = 0;
};

InterpStencil interp_stencil(const Grid& g, std::span<const double> point);

}  // namespace detail

}  // namespace pw
