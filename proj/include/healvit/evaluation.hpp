#pragma once

#include <cstddef>
#include <vector>

#include "healvit/grid.hpp"

namespace healvit::eval {

// Per-row area weights for a regular latitude grid: sin(upper) - sin(lower)
// over cell bounds placed midway between adjacent rows (pole rows keep the
// half-cell up to the pole), normalized so the mean over rows is exactly 1.
std::vector<double> latitude_weights(const GridSpec& grid);

// latitude_weights expanded to one entry per grid node, row-major.
std::vector<double> node_weights(const GridSpec& grid);

// Root of the area-weighted mean squared error over all times and cells of
// one channel. pred and obs are parallel time series on the same grid.
double rmse(const std::vector<GridField>& pred,
            const std::vector<GridField>& obs, const std::vector<double>& w,
            std::size_t channel);

// Anomaly correlation against a reference climatology: per time step, the
// weighted inner product of (pred - clim) and (obs - clim) over the product
// of their weighted norms; the per-time correlations are averaged. A zero
// anomaly norm makes the ratio undefined and names the offending time step.
double acc(const std::vector<GridField>& pred, const std::vector<GridField>& obs,
           const GridField& clim, const std::vector<double>& w,
           std::size_t channel);

// Area-weighted mean of the signed error over all times and cells.
double bias(const std::vector<GridField>& pred,
            const std::vector<GridField>& obs, const std::vector<double>& w,
            std::size_t channel);

// Per-cell, per-channel mean over the reference series.
GridField compute_climatology(const std::vector<GridField>& reference);

// Power per zonal wavenumber k in [0, n_lon/2], averaged over the latitude
// rows with 30 < |lat| < 60 (strict). Per row, power(k) = |c_k|^2 / n_lon^2
// with k in (0, n_lon/2) doubled to fold the negative frequencies, so the
// row's power sums to its zonal mean square. Requires even n_lon and at
// least one row in the band.
std::vector<double> zonal_spectrum(const GridField& field, std::size_t channel);

}  // namespace healvit::eval
