#ifndef SWJD_LATTICE_HPP
#define SWJD_LATTICE_HPP

// Regular lattice of interior nodes with a boundary margin, and fields of
// per-(node, regime) values. Interpolation is multilinear on the grid cells
// whose corners are all lattice nodes, with constant (nearest-node)
// extrapolation elsewhere; extrapolated queries are counted by the caller.

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "swjd/geometry.hpp"
#include "swjd/model.hpp"

namespace swjd {

class Lattice {
 public:
  // Nodes are grid points s * k (integer k per axis) with
  // dist(x, D^c) > s/2, ordered lexicographically.
  static Lattice build(const Region& region, double spacing) {
    if (spacing <= 0.0) throw ConfigError("lattice: spacing must be positive");
    if (spacing >= 2.0 * region.inradius())
      throw ConfigError("lattice: spacing too coarse for the region (empty grid)");
    Lattice lat;
    lat.region_ = region;
    lat.spacing_ = spacing;
    const int d = region.dim();
    if (d > 3) throw ConfigError("lattice: only d <= 3 lattices are supported");

    const Ball bb = region.containing_ball();
    std::array<int, 3> lo{}, hi{};
    for (int k = 0; k < d; ++k) {
      lo[k] = static_cast<int>(std::ceil((bb.center[k] - bb.radius) / spacing - 1e-12));
      hi[k] = static_cast<int>(std::floor((bb.center[k] + bb.radius) / spacing + 1e-12));
    }
    lat.index_lo_ = lo;
    for (int k = 0; k < d; ++k) lat.index_dim_[k] = hi[k] - lo[k] + 1;
    for (int k = d; k < 3; ++k) lat.index_dim_[k] = 1;

    std::size_t cells = 1;
    for (int k = 0; k < d; ++k) cells *= static_cast<std::size_t>(lat.index_dim_[k]);
    lat.ordinal_.assign(cells, -1);

    std::array<int, 3> idx = lo;
    while (true) {
      Point x(d);
      for (int k = 0; k < d; ++k) x[k] = idx[k] * spacing;
      if (region.contains(x) && region.boundary_distance(x) > spacing / 2.0) {
        lat.ordinal_[lat.flat_index(idx)] = static_cast<int>(lat.nodes_.size());
        lat.nodes_.push_back(x);
      }
      int k = d - 1;  // lexicographic: last axis fastest
      while (k >= 0) {
        if (++idx[k] <= hi[k]) break;
        idx[k] = lo[k];
        --k;
      }
      if (k < 0) break;
    }
    if (lat.nodes_.empty()) throw ConfigError("lattice: no interior nodes at this spacing");
    return lat;
  }

  const Region& region() const { return region_; }
  double spacing() const { return spacing_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
  int dim() const { return region_.dim(); }

  struct Weight {
    int node = -1;
    double w = 0.0;
  };
  struct WeightSet {
    std::array<Weight, 8> entries;
    int count = 0;
    bool extrapolated = false;
  };

  // Interpolation weights for a query point; exact at nodes, multilinear on
  // full cells, nearest node otherwise.
  WeightSet interpolation_weights(const Point& x) const {
    const int d = dim();
    WeightSet ws;
    std::array<int, 3> base{};
    std::array<double, 3> frac{};
    for (int k = 0; k < d; ++k) {
      const double u = x[k] / spacing_;
      base[k] = static_cast<int>(std::floor(u));
      frac[k] = u - base[k];
    }
    bool full_cell = true;
    const int corners = 1 << d;
    for (int c = 0; c < corners && full_cell; ++c) {
      std::array<int, 3> idx = base;
      for (int k = 0; k < d; ++k) idx[k] += (c >> k) & 1;
      if (ordinal_at(idx) < 0) full_cell = false;
    }
    if (full_cell) {
      for (int c = 0; c < corners; ++c) {
        std::array<int, 3> idx = base;
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
          const int bit = (c >> k) & 1;
          idx[k] += bit;
          w *= bit ? frac[k] : 1.0 - frac[k];
        }
        if (w != 0.0) ws.entries[ws.count++] = {ordinal_at(idx), w};
      }
      return ws;
    }
    // constant extrapolation: nearest node
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < size(); ++k) {
      const double dd = (nodes_[static_cast<std::size_t>(k)] - x).norm2();
      if (dd < best_d) {
        best_d = dd;
        best = k;
      }
    }
    ws.entries[ws.count++] = {best, 1.0};
    ws.extrapolated = true;
    return ws;
  }

 private:
  int ordinal_at(const std::array<int, 3>& idx) const {
    for (int k = 0; k < dim(); ++k)
      if (idx[k] < index_lo_[k] || idx[k] >= index_lo_[k] + index_dim_[k]) return -1;
    return ordinal_[flat_index(idx)];
  }

  std::size_t flat_index(const std::array<int, 3>& idx) const {
    std::size_t flat = 0;
    for (int k = 0; k < dim(); ++k)
      flat = flat * static_cast<std::size_t>(index_dim_[k]) +
             static_cast<std::size_t>(idx[k] - index_lo_[k]);
    return flat;
  }

  Region region_ = Region::interval(0.0, 1.0);
  double spacing_ = 0.0;
  std::vector<Point> nodes_;
  std::array<int, 3> index_lo_{};
  std::array<int, 3> index_dim_{1, 1, 1};
  std::vector<int> ordinal_;
};

// Values (and optional standard errors) on lattice nodes x regimes.
class LatticeField {
 public:
  LatticeField() = default;
  LatticeField(const Lattice* lattice, int regimes)
      : lattice_(lattice),
        regimes_(regimes),
        values_(static_cast<std::size_t>(lattice->size()) * regimes, 0.0),
        errors_(values_.size(), 0.0) {}

  const Lattice& lattice() const { return *lattice_; }
  int regimes() const { return regimes_; }

  double& at(int node, int regime) { return values_[index(node, regime)]; }
  double at(int node, int regime) const { return values_[index(node, regime)]; }
  double& stderr_at(int node, int regime) { return errors_[index(node, regime)]; }
  double stderr_at(int node, int regime) const { return errors_[index(node, regime)]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // Interpolated value of one regime's slice; counts extrapolated queries.
  double interpolate(const Point& x, int regime, std::uint64_t* extrapolations = nullptr) const {
    const Lattice::WeightSet ws = lattice_->interpolation_weights(x);
    if (ws.extrapolated && extrapolations) ++*extrapolations;
    double acc = 0.0;
    for (int k = 0; k < ws.count; ++k) acc += ws.entries[k].w * at(ws.entries[k].node, regime);
    return acc;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  // CSV: one row per (node, regime): x_1..x_d, regime, value, stderr.
  void write_csv(std::ostream& os) const {
    const int d = lattice_->dim();
    os.precision(17);
    for (int k = 1; k <= d; ++k) os << "x_" << k << ",";
    os << "regime,value,stderr\n";
    for (int n = 0; n < lattice_->size(); ++n)
      for (int i = 0; i < regimes_; ++i) {
        const Point& x = lattice_->node(n);
        for (int k = 0; k < d; ++k) os << x[k] << ",";
        os << (i + 1) << "," << at(n, i) << "," << stderr_at(n, i) << "\n";
      }
  }

 private:
  std::size_t index(int node, int regime) const {
    return static_cast<std::size_t>(node) * regimes_ + regime;
  }

  const Lattice* lattice_ = nullptr;
  int regimes_ = 0;
  std::vector<double> values_;
  std::vector<double> errors_;
};

}  // namespace swjd

#endif  // SWJD_LATTICE_HPP
