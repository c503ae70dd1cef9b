#include "healvit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace healvit::eval {
namespace {

constexpr double kPi = 3.14159265358979323846;

double rad(double deg) { return deg * (kPi / 180.0); }

void check_series(const std::vector<GridField>& pred,
                  const std::vector<GridField>& obs, std::size_t channel,
                  const char* what) {
  if (pred.empty() || pred.size() != obs.size()) {
    throw std::invalid_argument(std::string(what) +
                                ": series must be non-empty and equal length");
  }
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (!(pred[t].grid == obs[t].grid) || !(pred[t].grid == pred[0].grid) ||
        pred[t].channel_count() != obs[t].channel_count()) {
      throw std::invalid_argument(std::string(what) +
                                  ": shape mismatch at time " +
                                  std::to_string(t));
    }
  }
  if (channel >= pred[0].channel_count()) {
    throw std::invalid_argument(std::string(what) + ": channel out of range");
  }
}

void check_weights(const std::vector<double>& w, const GridSpec& grid,
                   const char* what) {
  if (w.size() != static_cast<std::size_t>(grid.n_lat)) {
    throw std::invalid_argument(std::string(what) +
                                ": need one weight per latitude row");
  }
}

}  // namespace

std::vector<double> latitude_weights(const GridSpec& grid) {
  if (grid.n_lat < 2 || grid.n_lon < 1) {
    throw std::invalid_argument("latitude_weights: grid needs at least 2 rows");
  }
  const int n = grid.n_lat;
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double upper =
        i == 0 ? 90.0
               : std::clamp(0.5 * (grid.latitude_deg(i - 1) +
                                   grid.latitude_deg(i)),
                            -90.0, 90.0);
    const double lower =
        i == n - 1 ? -90.0
                   : std::clamp(0.5 * (grid.latitude_deg(i) +
                                       grid.latitude_deg(i + 1)),
                                -90.0, 90.0);
    w[i] = std::sin(rad(upper)) - std::sin(rad(lower));
  }
  double sum = 0.0;
  for (double x : w) sum += x;
  const double mean = sum / n;
  for (double& x : w) x /= mean;
  return w;
}

std::vector<double> node_weights(const GridSpec& grid) {
  const std::vector<double> rows = latitude_weights(grid);
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(grid.node_count()));
  for (int r = 0; r < grid.n_lat; ++r) {
    w.insert(w.end(), static_cast<std::size_t>(grid.n_lon), rows[r]);
  }
  return w;
}

double rmse(const std::vector<GridField>& pred,
            const std::vector<GridField>& obs, const std::vector<double>& w,
            std::size_t channel) {
  check_series(pred, obs, channel, "rmse");
  check_weights(w, pred[0].grid, "rmse");
  const GridSpec& g = pred[0].grid;
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const double* p = pred[t].channel_data(channel);
    const double* o = obs[t].channel_data(channel);
    for (int r = 0; r < g.n_lat; ++r) {
      for (int c = 0; c < g.n_lon; ++c) {
        const double d = p[r * g.n_lon + c] - o[r * g.n_lon + c];
        sum += w[r] * d * d;
      }
    }
  }
  return std::sqrt(sum / (static_cast<double>(pred.size()) * g.node_count()));
}

double acc(const std::vector<GridField>& pred, const std::vector<GridField>& obs,
           const GridField& clim, const std::vector<double>& w,
           std::size_t channel) {
  check_series(pred, obs, channel, "acc");
  check_weights(w, pred[0].grid, "acc");
  if (!(clim.grid == pred[0].grid) ||
      clim.channel_count() != pred[0].channel_count()) {
    throw std::invalid_argument("acc: climatology shape mismatch");
  }
  const GridSpec& g = pred[0].grid;
  const double* cl = clim.channel_data(channel);
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const double* p = pred[t].channel_data(channel);
    const double* o = obs[t].channel_data(channel);
    double num = 0.0, pp = 0.0, oo = 0.0;
    for (int r = 0; r < g.n_lat; ++r) {
      for (int c = 0; c < g.n_lon; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * g.n_lon + c;
        const double ap = p[i] - cl[i];
        const double ao = o[i] - cl[i];
        num += w[r] * ap * ao;
        pp += w[r] * ap * ap;
        oo += w[r] * ao * ao;
      }
    }
    if (pp == 0.0 || oo == 0.0) {
      throw std::invalid_argument("acc: zero anomaly norm at time " +
                                  std::to_string(t));
    }
    total += num / std::sqrt(pp * oo);
  }
  return total / static_cast<double>(pred.size());
}

double bias(const std::vector<GridField>& pred,
            const std::vector<GridField>& obs, const std::vector<double>& w,
            std::size_t channel) {
  check_series(pred, obs, channel, "bias");
  check_weights(w, pred[0].grid, "bias");
  const GridSpec& g = pred[0].grid;
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const double* p = pred[t].channel_data(channel);
    const double* o = obs[t].channel_data(channel);
    for (int r = 0; r < g.n_lat; ++r) {
      for (int c = 0; c < g.n_lon; ++c) {
        sum += w[r] * (p[r * g.n_lon + c] - o[r * g.n_lon + c]);
      }
    }
  }
  return sum / (static_cast<double>(pred.size()) * g.node_count());
}

GridField compute_climatology(const std::vector<GridField>& reference) {
  if (reference.empty()) {
    throw std::invalid_argument("compute_climatology: empty reference");
  }
  for (const GridField& f : reference) {
    if (!(f.grid == reference[0].grid) || f.channels != reference[0].channels) {
      throw std::invalid_argument("compute_climatology: shape mismatch");
    }
  }
  GridField out(reference[0].grid, reference[0].channels);
  for (const GridField& f : reference) {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += f.data[i];
  }
  const double inv = 1.0 / static_cast<double>(reference.size());
  for (double& x : out.data) x *= inv;
  return out;
}

std::vector<double> zonal_spectrum(const GridField& field,
                                   std::size_t channel) {
  const GridSpec& g = field.grid;
  if (g.n_lon % 2 != 0) {
    throw std::invalid_argument("zonal_spectrum: n_lon must be even");
  }
  if (channel >= field.channel_count()) {
    throw std::invalid_argument("zonal_spectrum: channel out of range");
  }
  std::vector<int> rows;
  for (int r = 0; r < g.n_lat; ++r) {
    const double a = std::abs(g.latitude_deg(r));
    if (a > 30.0 && a < 60.0) rows.push_back(r);
  }
  if (rows.empty()) {
    throw std::invalid_argument(
        "zonal_spectrum: no latitude rows with 30 < |lat| < 60");
  }

  const std::size_t n = static_cast<std::size_t>(g.n_lon);
  const std::size_t half = n / 2;
  // One table of n-th roots; c_k reuses root[(j*k) mod n].
  std::vector<double> cosv(n), sinv(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
    cosv[j] = std::cos(a);
    sinv[j] = std::sin(a);
  }

  std::vector<double> power(half + 1, 0.0);
  const double* data = field.channel_data(channel);
  for (int r : rows) {
    const double* f = data + static_cast<std::size_t>(r) * n;
    for (std::size_t k = 0; k <= half; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t idx = (j * k) % n;
        re += f[j] * cosv[idx];
        im -= f[j] * sinv[idx];
      }
      double p = (re * re + im * im) / (static_cast<double>(n) * n);
      if (k > 0 && k < half) p *= 2.0;
      power[k] += p;
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& p : power) p *= inv;
  return power;
}

}  // namespace healvit::eval
