#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <span>
#include <stdexcept>

namespace ealab {

// Largest ambient dimension n+1 supported by the fixed-capacity vectors.
inline constexpr int kMaxAmbientDim = 4;
inline constexpr int kMaxBoundaryDim = kMaxAmbientDim - 1;

// Small fixed-capacity real vector used for boundary points (n entries) and
// ambient points/gradients (n+1 entries). Avoids heap traffic in grid sweeps.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int dim, double fill = 0.0);
  Vec(std::initializer_list<double> values);

  int size() const { return dim_; }
  double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

  std::span<const double> span() const { return {data_.data(), static_cast<std::size_t>(dim_)}; }
  std::span<double> span() { return {data_.data(), static_cast<std::size_t>(dim_)}; }

  double norm() const;
  double norm_squared() const;

  Vec& operator+=(const Vec& other);
  Vec& operator-=(const Vec& other);
  Vec& operator*=(double s);

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend bool operator==(const Vec& a, const Vec& b);

 private:
  std::array<double, kMaxAmbientDim> data_{};
  int dim_ = 0;
};

double distance(const Vec& a, const Vec& b);
double dot(const Vec& a, const Vec& b);

}  // namespace ealab
