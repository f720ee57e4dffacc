#include "mfgnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfg {

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t ShapeNumel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + ShapeString(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(ShapeNumel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != ShapeNumel(shape_)) {
    throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeString(shape_));
  }
}

int Tensor::dim(int i) const {
  if (i < 0 || i >= ndim()) {
    throw ShapeError("dimension index " + std::to_string(i) + " out of range for " +
                     ShapeString(shape_));
  }
  return shape_[i];
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (ShapeNumel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + ShapeString(shape_) + " to " + ShapeString(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::Sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Tensor::MaxAbs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  CheckSameShape(*this, o, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
  CheckSameShape(*this, o, "tensor -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }

void CheckSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + ShapeString(a.shape()) +
                     " vs " + ShapeString(b.shape()));
  }
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  CheckSameShape(a, b, "MaxAbsDiff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Tensor ConcatRows(const std::vector<Tensor>& parts) {
  if (parts.empty()) return Tensor();
  int dim = parts.front().dim(1);
  int rows = 0;
  for (const Tensor& t : parts) {
    if (t.ndim() != 2 || t.dim(1) != dim) {
      throw ShapeError("ConcatRows: mismatched part " + ShapeString(t.shape()));
    }
    rows += t.dim(0);
  }
  Tensor out({rows, dim});
  std::size_t off = 0;
  for (const Tensor& t : parts) {
    std::copy(t.storage().begin(), t.storage().end(), out.storage().begin() + off);
    off += t.size();
  }
  return out;
}

}  // namespace mfg
