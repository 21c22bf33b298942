#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ealab/geometry.hpp"
#include "ealab/vec.hpp"

namespace ealab {

using CellIndex = std::array<std::int64_t, kMaxAmbientDim>;

// Uniform cell grid in graph-adapted coordinates (x_1..x_n, h) with
// h = y - phi(x). Axis n is the height axis. Cells are stored with the height
// axis fastest. Curved cubes are straight boxes in these coordinates.
struct AdaptedGrid {
  int n = 1;
  Vec origin;  // n + 1 entries, lower corner
  std::array<std::int64_t, kMaxAmbientDim> count{};
  std::array<double, kMaxAmbientDim> spacing{};

  // 2^depth cells along every axis of root x [0, side].
  static AdaptedGrid over_root(const RootCube& root, int depth);

  int axes() const { return n + 1; }
  std::int64_t cells() const;
  std::int64_t stride(int axis) const;
  CellIndex unflatten(std::int64_t flat) const;
  std::int64_t flatten(const CellIndex& idx) const;

  // Cell centre in adapted coordinates.
  Vec center(std::int64_t flat) const;
  Vec center(const CellIndex& idx) const;
  double cell_volume() const;
  double face_area(int axis) const;
  // Half the cell diagonal, i.e. the largest adapted distance from any point
  // of a cell to its centre.
  double half_diagonal() const;

  bool operator==(const AdaptedGrid& other) const;
};

// Splits adapted coordinates into the Cartesian point (x, phi(x) + h).
DomainPoint to_cartesian(const LipschitzGraph& graph, const Vec& adapted);

// Nonnegative measure on an adapted grid: absolutely continuous part stored
// as per-cell masses, singular part as per-face masses. face_weights(a)[c] is
// the mass on the face shared by cell c and c + stride(a); entries for cells
// on the upper boundary along a stay zero.
class CellMeasure {
 public:
  CellMeasure() = default;
  explicit CellMeasure(AdaptedGrid grid);

  const AdaptedGrid& grid() const { return grid_; }

  std::vector<double>& volume_weights() { return volume_; }
  const std::vector<double>& volume_weights() const { return volume_; }
  std::vector<double>& face_weights(int axis) { return faces_[static_cast<std::size_t>(axis)]; }
  const std::vector<double>& face_weights(int axis) const { return faces_[static_cast<std::size_t>(axis)]; }

  double volume_total() const;
  double face_total() const;
  double total() const { return volume_total() + face_total(); }
  bool has_volume_part() const;

  // Throws std::domain_error on negative or non-finite weights.
  void validate() const;
  CellMeasure scaled(double factor) const;

 private:
  AdaptedGrid grid_;
  std::vector<double> volume_;
  std::array<std::vector<double>, kMaxAmbientDim> faces_;
};

}  // namespace ealab
