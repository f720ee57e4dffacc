#ifndef MFGNET_TENSOR_HPP_
#define MFGNET_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

using Shape = std::vector<int>;

// Raised for any tensor/box/feature-map shape contract violation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string ShapeString(const Shape& shape);
std::size_t ShapeNumel(const Shape& shape);

// Dense row-major double tensor. Value type; copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(const Shape& shape) { return Tensor(shape, 0.0); }
  static Tensor Full(const Shape& shape, double v) { return Tensor(shape, v); }

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 3-D accessors (row-major), unchecked.
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
  double& at(int c, int h, int w) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
  }
  double at(int c, int h, int w) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
  }

  Tensor Reshaped(Shape shape) const;
  void Fill(double v);
  bool AllFinite() const;
  double Sum() const;
  double MaxAbs() const;

  Tensor& operator+=(const Tensor& o);
  Tensor& operator-=(const Tensor& o);
  Tensor& operator*=(double s);

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);

// Throws ShapeError with `what` prefixed when shapes differ.
void CheckSameShape(const Tensor& a, const Tensor& b, const char* what);

// Stacks [n_i, D] matrices into [sum n_i, D]; empty input gives an empty tensor.
Tensor ConcatRows(const std::vector<Tensor>& parts);

// Max |a-b| over all entries; shapes must match.
double MaxAbsDiff(const Tensor& a, const Tensor& b);

}  // namespace mfg

#endif  // MFGNET_TENSOR_HPP_
