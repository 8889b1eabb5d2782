#pragma once

#include <span>
#include <vector>

#include "pilotwave/field.hpp"

namespace pw {

// Histogram over the grid's sampling cells (one cell per node; a position
// belongs to the nearest node, with wrap-around on periodic axes).
struct CellHistogram {
  GridPtr grid;
  std::vector<double> counts;
  double total = 0.0;
};

CellHistogram histogram_on_grid(const GridPtr& grid,
                                std::span<const double> positions,
                                std::size_t nparticles);

// Per-cell probabilities rho_i * w_i / sum, the Born weights the multinomial
// sampler draws from.
std::vector<double> born_probabilities(const RealField& rho);

// Total variation distance 0.5 * sum |p - q| after normalizing both sides.
double tv_distance(std::span<const double> p, std::span<const double> q);
double tv_distance(const CellHistogram& h, std::span<const double> probs);

// One-sample Kolmogorov-Smirnov statistic per axis: empirical CDF of the
// particle coordinates against the piecewise-linear CDF of the density's
// marginal along that axis.
std::vector<double> ks_per_axis(const RealField& rho,
                                std::span<const double> positions,
                                std::size_t nparticles);

// Marginal node masses of rho along one axis (sums to 1).
std::vector<double> marginal_probabilities(const RealField& rho, int axis);

}  // namespace pw
