#include "ealab/vec.hpp"

namespace ealab {

Vec::Vec(int dim, double fill) : dim_(dim) {
  if (dim < 0 || dim > kMaxAmbientDim) {
    throw std::invalid_argument("Vec: dimension out of range");
  }
  for (int i = 0; i < dim; ++i) data_[static_cast<std::size_t>(i)] = fill;
}

Vec::Vec(std::initializer_list<double> values) {
  if (values.size() > static_cast<std::size_t>(kMaxAmbientDim)) {
    throw std::invalid_argument("Vec: too many components");
  }
  dim_ = static_cast<int>(values.size());
  std::size_t i = 0;
  for (double v : values) data_[i++] = v;
}

double Vec::norm_squared() const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) s += (*this)[i] * (*this)[i];
  return s;
}

double Vec::norm() const { return std::sqrt(norm_squared()); }

Vec& Vec::operator+=(const Vec& other) {
  for (int i = 0; i < dim_; ++i) (*this)[i] += other[i];
  return *this;
}

Vec& Vec::operator-=(const Vec& other) {
  for (int i = 0; i < dim_; ++i) (*this)[i] -= other[i];
  return *this;
}

Vec& Vec::operator*=(double s) {
  for (int i = 0; i < dim_; ++i) (*this)[i] *= s;
  return *this;
}

bool operator==(const Vec& a, const Vec& b) {
  if (a.dim_ != b.dim_) return false;
  for (int i = 0; i < a.dim_; ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

double distance(const Vec& a, const Vec& b) { return (a - b).norm(); }

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace ealab
