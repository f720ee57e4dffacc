#include "mfgnet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mfg::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

MatMap AsMat(Tensor& t, int rows, int cols) { return MatMap(t.data(), rows, cols); }
ConstMatMap AsMat(const Tensor& t, int rows, int cols) {
  return ConstMatMap(t.data(), rows, cols);
}

void Require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

void RequireRank(const Var& v, int rank, const char* op) {
  Require(v.defined(), std::string(op) + ": undefined input");
  Require(v.value().ndim() == rank, std::string(op) + ": expected rank " + std::to_string(rank) +
                                        ", got " + ShapeString(v.shape()));
}

Tensor& ParentGrad(Node& n, std::size_t i) { return n.parents[i]->GradBuffer(); }
bool ParentNeeds(const Node& n, std::size_t i) { return n.parents[i]->requires_grad; }

double StableSigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double Softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

int ConvOut(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// cols [C*k*k, Ho*Wo]
void Im2Col(const double* x, int channels, int h, int w, int k, int stride, int pad, int ho,
            int wo, double* cols) {
  for (int c = 0; c < channels; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * h * w;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        double* row = cols + ((static_cast<std::size_t>(c) * k + i) * k + j) * ho * wo;
        for (int oh = 0; oh < ho; ++oh) {
          int ih = oh * stride - pad + i;
          double* dst = row + static_cast<std::size_t>(oh) * wo;
          if (ih < 0 || ih >= h) {
            std::fill(dst, dst + wo, 0.0);
            continue;
          }
          const double* src = xc + static_cast<std::size_t>(ih) * w;
          for (int ow = 0; ow < wo; ++ow) {
            int iw = ow * stride - pad + j;
            dst[ow] = (iw >= 0 && iw < w) ? src[iw] : 0.0;
          }
        }
      }
    }
  }
}

// Accumulates cols back into x (adjoint of Im2Col).
void Col2Im(const double* cols, int channels, int h, int w, int k, int stride, int pad, int ho,
            int wo, double* x) {
  for (int c = 0; c < channels; ++c) {
    double* xc = x + static_cast<std::size_t>(c) * h * w;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const double* row = cols + ((static_cast<std::size_t>(c) * k + i) * k + j) * ho * wo;
        for (int oh = 0; oh < ho; ++oh) {
          int ih = oh * stride - pad + i;
          if (ih < 0 || ih >= h) continue;
          const double* src = row + static_cast<std::size_t>(oh) * wo;
          double* dst = xc + static_cast<std::size_t>(ih) * w;
          for (int ow = 0; ow < wo; ++ow) {
            int iw = ow * stride - pad + j;
            if (iw >= 0 && iw < w) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

template <typename Fwd, typename Deriv>
Var Unary(const Var& a, Fwd fwd, Deriv deriv) {
  Tensor out(a.shape());
  const Tensor& in = a.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return MakeResult(std::move(out), {a}, [deriv](Node& n) {
    const Tensor& x = n.parents[0]->value;
    Tensor& gx = ParentGrad(n, 0);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += n.grad[i] * deriv(x[i], n.value[i]);
  });
}

}  // namespace

Var Add(const Var& a, const Var& b) {
  CheckSameShape(a.value(), b.value(), "Add");
  return MakeResult(a.value() + b.value(), {a, b}, [](Node& n) {
    if (ParentNeeds(n, 0)) ParentGrad(n, 0) += n.grad;
    if (ParentNeeds(n, 1)) ParentGrad(n, 1) += n.grad;
  });
}

Var Sub(const Var& a, const Var& b) {
  CheckSameShape(a.value(), b.value(), "Sub");
  return MakeResult(a.value() - b.value(), {a, b}, [](Node& n) {
    if (ParentNeeds(n, 0)) ParentGrad(n, 0) += n.grad;
    if (ParentNeeds(n, 1)) ParentGrad(n, 1) -= n.grad;
  });
}

Var Mul(const Var& a, const Var& b) {
  CheckSameShape(a.value(), b.value(), "Mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return MakeResult(std::move(out), {a, b}, [](Node& n) {
    const Tensor& x = n.parents[0]->value;
    const Tensor& y = n.parents[1]->value;
    if (ParentNeeds(n, 0)) {
      Tensor& g = ParentGrad(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * y[i];
    }
    if (ParentNeeds(n, 1)) {
      Tensor& g = ParentGrad(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * x[i];
    }
  });
}

Var Scale(const Var& a, double s) {
  return MakeResult(a.value() * s, {a}, [s](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * n.grad[i];
  });
}

Var OneMinus(const Var& a) {
  return Unary(
      a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Var Relu(const Var& a) {
  return Unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var Sigmoid(const Var& a) {
  return Unary(a, StableSigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var Tanh(const Var& a) {
  return Unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var Sum(const Var& a) {
  return MakeResult(Tensor({1}, a.value().Sum()), {a}, [](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    double s = n.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s;
  });
}

Var Mean(const Var& a) {
  Require(a.value().size() > 0, "Mean: empty tensor");
  double inv = 1.0 / static_cast<double>(a.value().size());
  return Scale(Sum(a), inv);
}

Var Reshape(const Var& a, Shape shape) {
  Tensor out = a.value().Reshaped(std::move(shape));
  return MakeResult(std::move(out), {a}, [](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

Var Transpose(const Var& a) {
  RequireRank(a, 2, "Transpose");
  int m = a.dim(0), k = a.dim(1);
  Tensor out({k, m});
  AsMat(out, k, m) = AsMat(a.value(), m, k).transpose();
  return MakeResult(std::move(out), {a}, [m, k](Node& n) {
    AsMat(ParentGrad(n, 0), m, k) += AsMat(n.grad, k, m).transpose();
  });
}

Var MatMul(const Var& a, const Var& b) {
  RequireRank(a, 2, "MatMul");
  RequireRank(b, 2, "MatMul");
  int m = a.dim(0), k = a.dim(1), n2 = b.dim(1);
  Require(b.dim(0) == k, "MatMul: inner dimension mismatch " + ShapeString(a.shape()) + " * " +
                             ShapeString(b.shape()));
  Tensor out({m, n2});
  AsMat(out, m, n2).noalias() = AsMat(a.value(), m, k) * AsMat(b.value(), k, n2);
  return MakeResult(std::move(out), {a, b}, [m, k, n2](Node& n) {
    auto g = AsMat(n.grad, m, n2);
    if (ParentNeeds(n, 0)) {
      AsMat(ParentGrad(n, 0), m, k).noalias() += g * AsMat(n.parents[1]->value, k, n2).transpose();
    }
    if (ParentNeeds(n, 1)) {
      AsMat(ParentGrad(n, 1), k, n2).noalias() += AsMat(n.parents[0]->value, m, k).transpose() * g;
    }
  });
}

Var Linear(const Var& x, const Var& w, const Var& b) {
  RequireRank(x, 2, "Linear");
  RequireRank(w, 2, "Linear");
  int rows = x.dim(0), d = x.dim(1), o = w.dim(0);
  Require(w.dim(1) == d, "Linear: input width " + std::to_string(d) + " vs weight " +
                             ShapeString(w.shape()));
  bool has_bias = b.defined();
  if (has_bias) Require(b.value().size() == static_cast<std::size_t>(o), "Linear: bias size");
  Tensor out({rows, o});
  auto om = AsMat(out, rows, o);
  om.noalias() = AsMat(x.value(), rows, d) * AsMat(w.value(), o, d).transpose();
  if (has_bias) {
    Eigen::Map<const Eigen::RowVectorXd> bv(b.value().data(), o);
    om.rowwise() += bv;
  }
  std::vector<Var> parents = {x, w};
  if (has_bias) parents.push_back(b);
  return MakeResult(std::move(out), parents, [rows, d, o, has_bias](Node& n) {
    auto g = AsMat(n.grad, rows, o);
    if (ParentNeeds(n, 0)) {
      AsMat(ParentGrad(n, 0), rows, d).noalias() += g * AsMat(n.parents[1]->value, o, d);
    }
    if (ParentNeeds(n, 1)) {
      AsMat(ParentGrad(n, 1), o, d).noalias() += g.transpose() * AsMat(n.parents[0]->value, rows, d);
    }
    if (has_bias && ParentNeeds(n, 2)) {
      Eigen::Map<Eigen::RowVectorXd> gb(ParentGrad(n, 2).data(), o);
      gb += g.colwise().sum();
    }
  });
}

Var SelectColumns(const Var& x, const std::vector<int>& cols) {
  RequireRank(x, 2, "SelectColumns");
  int rows = x.dim(0), d = x.dim(1);
  int k = static_cast<int>(cols.size());
  for (int c : cols) Require(c >= 0 && c < d, "SelectColumns: column out of range");
  Tensor out({rows, k});
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < k; ++j) out.at(r, j) = x.value().at(r, cols[j]);
  return MakeResult(std::move(out), {x}, [rows, k, cols](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < k; ++j) g.at(r, cols[j]) += n.grad.at(r, j);
  });
}

Var Concat(const std::vector<Var>& parts) {
  Require(!parts.empty(), "Concat: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  int rows = 0;
  for (const Var& p : parts) {
    Require(p.value().ndim() >= 1, "Concat: scalar input");
    Shape t(p.shape().begin() + 1, p.shape().end());
    Require(t == tail, "Concat: trailing shape mismatch " + ShapeString(parts[0].shape()) +
                           " vs " + ShapeString(p.shape()));
    rows += p.dim(0);
  }
  Shape shape = tail;
  shape.insert(shape.begin(), rows);
  Tensor out(shape);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    offsets.push_back(off);
    std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + off);
    off += p.value().size();
  }
  return MakeResult(std::move(out), parts, [offsets](Node& n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      if (!ParentNeeds(n, i)) continue;
      Tensor& g = ParentGrad(n, i);
      const double* src = n.grad.data() + offsets[i];
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += src[j];
    }
  });
}

Var SliceRows(const Var& a, int begin, int end) {
  Require(a.value().ndim() >= 1, "SliceRows: scalar input");
  Require(0 <= begin && begin < end && end <= a.dim(0),
          "SliceRows: bad range [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
              ShapeString(a.shape()));
  Shape shape = a.shape();
  std::size_t inner = a.value().size() / shape[0];
  shape[0] = end - begin;
  Tensor out(shape);
  std::copy(a.value().data() + begin * inner, a.value().data() + end * inner, out.data());
  return MakeResult(std::move(out), {a}, [begin, inner](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    double* dst = g.data() + begin * inner;
    for (std::size_t j = 0; j < n.grad.size(); ++j) dst[j] += n.grad[j];
  });
}

Var Conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  RequireRank(x, 3, "Conv2d");
  RequireRank(w, 4, "Conv2d");
  int c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  int o = w.dim(0), k = w.dim(2);
  Require(w.dim(1) == c, "Conv2d: input has " + std::to_string(c) + " channels, weight " +
                             ShapeString(w.shape()));
  Require(w.dim(3) == k, "Conv2d: square kernels only");
  Require(stride >= 1 && pad >= 0, "Conv2d: bad stride/pad");
  int ho = ConvOut(h, k, stride, pad), wo = ConvOut(wd, k, stride, pad);
  Require(ho > 0 && wo > 0, "Conv2d: input too small for kernel");
  bool has_bias = b.defined();
  if (has_bias) Require(b.value().size() == static_cast<std::size_t>(o), "Conv2d: bias size");

  int kk = c * k * k, hw = ho * wo;
  bool pointwise = (k == 1 && stride == 1 && pad == 0);
  Tensor cols;
  if (!pointwise) {
    cols = Tensor({kk, hw});
    Im2Col(x.value().data(), c, h, wd, k, stride, pad, ho, wo, cols.data());
  }
  const Tensor& colsref = pointwise ? x.value() : cols;
  Tensor out({o, ho, wo});
  auto om = AsMat(out, o, hw);
  om.noalias() = AsMat(w.value(), o, kk) * AsMat(colsref, kk, hw);
  if (has_bias) {
    Eigen::Map<const Eigen::VectorXd> bv(b.value().data(), o);
    om.colwise() += bv;
  }
  std::vector<Var> parents = {x, w};
  if (has_bias) parents.push_back(b);
  return MakeResult(std::move(out), parents,
                    [c, h, wd, o, k, stride, pad, ho, wo, kk, hw, has_bias, pointwise,
                     cols = std::move(cols)](Node& n) {
                      auto g = AsMat(n.grad, o, hw);
                      const Tensor& colsv = pointwise ? n.parents[0]->value : cols;
                      if (ParentNeeds(n, 1)) {
                        AsMat(ParentGrad(n, 1), o, kk).noalias() +=
                            g * AsMat(colsv, kk, hw).transpose();
                      }
                      if (has_bias && ParentNeeds(n, 2)) {
                        Eigen::Map<Eigen::VectorXd> gb(ParentGrad(n, 2).data(), o);
                        gb += g.rowwise().sum();
                      }
                      if (ParentNeeds(n, 0)) {
                        if (pointwise) {
                          AsMat(ParentGrad(n, 0), kk, hw).noalias() +=
                              AsMat(n.parents[1]->value, o, kk).transpose() * g;
                        } else {
                          Tensor dcols({kk, hw});
                          AsMat(dcols, kk, hw).noalias() =
                              AsMat(n.parents[1]->value, o, kk).transpose() * g;
                          Col2Im(dcols.data(), c, h, wd, k, stride, pad, ho, wo,
                                 ParentGrad(n, 0).data());
                        }
                      }
                    });
}

Var ConvTranspose2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  RequireRank(x, 3, "ConvTranspose2d");
  RequireRank(w, 4, "ConvTranspose2d");
  int c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  int o = w.dim(1), k = w.dim(2);
  Require(w.dim(0) == c, "ConvTranspose2d: input has " + std::to_string(c) + " channels, weight " +
                             ShapeString(w.shape()));
  Require(w.dim(3) == k, "ConvTranspose2d: square kernels only");
  int ho = (h - 1) * stride - 2 * pad + k, wo = (wd - 1) * stride - 2 * pad + k;
  Require(ho > 0 && wo > 0, "ConvTranspose2d: empty output");
  bool has_bias = b.defined();
  if (has_bias) Require(b.value().size() == static_cast<std::size_t>(o), "ConvTranspose2d: bias");

  int okk = o * k * k, hw = h * wd;
  Tensor cols({okk, hw});
  AsMat(cols, okk, hw).noalias() =
      AsMat(w.value(), c, okk).transpose() * AsMat(x.value(), c, hw);
  Tensor out({o, ho, wo});
  Col2Im(cols.data(), o, ho, wo, k, stride, pad, h, wd, out.data());
  if (has_bias) {
    for (int oc = 0; oc < o; ++oc) {
      double bv = b.value()[oc];
      double* p = out.data() + static_cast<std::size_t>(oc) * ho * wo;
      for (int i = 0; i < ho * wo; ++i) p[i] += bv;
    }
  }
  std::vector<Var> parents = {x, w};
  if (has_bias) parents.push_back(b);
  return MakeResult(std::move(out), parents,
                    [c, o, k, stride, pad, h, wd, ho, wo, okk, hw, has_bias](Node& n) {
                      Tensor gcols({okk, hw});
                      Im2Col(n.grad.data(), o, ho, wo, k, stride, pad, h, wd, gcols.data());
                      auto gc = AsMat(gcols, okk, hw);
                      if (ParentNeeds(n, 0)) {
                        AsMat(ParentGrad(n, 0), c, hw).noalias() +=
                            AsMat(n.parents[1]->value, c, okk) * gc;
                      }
                      if (ParentNeeds(n, 1)) {
                        AsMat(ParentGrad(n, 1), c, okk).noalias() +=
                            AsMat(n.parents[0]->value, c, hw) * gc.transpose();
                      }
                      if (has_bias && ParentNeeds(n, 2)) {
                        Tensor& gb = ParentGrad(n, 2);
                        for (int oc = 0; oc < o; ++oc) {
                          const double* p = n.grad.data() + static_cast<std::size_t>(oc) * ho * wo;
                          double s = 0.0;
                          for (int i = 0; i < ho * wo; ++i) s += p[i];
                          gb[oc] += s;
                        }
                      }
                    });
}

Var DepthwiseConv(const Var& f, const Var& kernels) {
  RequireRank(f, 3, "DepthwiseConv");
  RequireRank(kernels, 3, "DepthwiseConv");
  int c = f.dim(0), h = f.dim(1), w = f.dim(2);
  int s = kernels.dim(1);
  Require(kernels.dim(0) == c, "DepthwiseConv: feature has " + std::to_string(c) +
                                   " channels but filter bank has " +
                                   std::to_string(kernels.dim(0)));
  Require(kernels.dim(2) == s && s % 2 == 1, "DepthwiseConv: kernels must be odd and square");
  int r = s / 2;
  const Tensor& fv = f.value();
  const Tensor& kv = kernels.value();
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = 0; i < s; ++i) {
          int yy = y + i - r;
          if (yy < 0 || yy >= h) continue;
          for (int j = 0; j < s; ++j) {
            int xx = x + j - r;
            if (xx < 0 || xx >= w) continue;
            acc += kv.at(ch, i, j) * fv.at(ch, yy, xx);
          }
        }
        out.at(ch, y, x) = acc;
      }
    }
  }
  return MakeResult(std::move(out), {f, kernels}, [c, h, w, s, r](Node& n) {
    const Tensor& fv = n.parents[0]->value;
    const Tensor& kv = n.parents[1]->value;
    bool need_f = ParentNeeds(n, 0), need_k = ParentNeeds(n, 1);
    Tensor* gf = need_f ? &ParentGrad(n, 0) : nullptr;
    Tensor* gk = need_k ? &ParentGrad(n, 1) : nullptr;
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double g = n.grad.at(ch, y, x);
          if (g == 0.0) continue;
          for (int i = 0; i < s; ++i) {
            int yy = y + i - r;
            if (yy < 0 || yy >= h) continue;
            for (int j = 0; j < s; ++j) {
              int xx = x + j - r;
              if (xx < 0 || xx >= w) continue;
              if (gf) gf->at(ch, yy, xx) += g * kv.at(ch, i, j);
              if (gk) gk->at(ch, i, j) += g * fv.at(ch, yy, xx);
            }
          }
        }
      }
    }
  });
}

Var ChannelGate(const Var& f, const Var& g) {
  RequireRank(f, 3, "ChannelGate");
  int c = f.dim(0), hw = f.dim(1) * f.dim(2);
  Require(g.value().size() == static_cast<std::size_t>(c), "ChannelGate: gate length " +
                                                               ShapeString(g.shape()) + " vs " +
                                                               ShapeString(f.shape()));
  Tensor out(f.shape());
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < hw; ++i) out[ch * hw + i] = f.value()[ch * hw + i] * g.value()[ch];
  return MakeResult(std::move(out), {f, g}, [c, hw](Node& n) {
    const Tensor& fv = n.parents[0]->value;
    const Tensor& gv = n.parents[1]->value;
    if (ParentNeeds(n, 0)) {
      Tensor& gf = ParentGrad(n, 0);
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < hw; ++i) gf[ch * hw + i] += n.grad[ch * hw + i] * gv[ch];
    }
    if (ParentNeeds(n, 1)) {
      Tensor& gg = ParentGrad(n, 1);
      for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (int i = 0; i < hw; ++i) s += n.grad[ch * hw + i] * fv[ch * hw + i];
        gg[ch] += s;
      }
    }
  });
}

Var SpatialGate(const Var& f, const Var& s) {
  RequireRank(f, 3, "SpatialGate");
  int c = f.dim(0), hw = f.dim(1) * f.dim(2);
  Require(s.value().size() == static_cast<std::size_t>(hw),
          "SpatialGate: gate " + ShapeString(s.shape()) + " vs " + ShapeString(f.shape()));
  Tensor out(f.shape());
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < hw; ++i) out[ch * hw + i] = f.value()[ch * hw + i] * s.value()[i];
  return MakeResult(std::move(out), {f, s}, [c, hw](Node& n) {
    const Tensor& fv = n.parents[0]->value;
    const Tensor& sv = n.parents[1]->value;
    if (ParentNeeds(n, 0)) {
      Tensor& gf = ParentGrad(n, 0);
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < hw; ++i) gf[ch * hw + i] += n.grad[ch * hw + i] * sv[i];
    }
    if (ParentNeeds(n, 1)) {
      Tensor& gs = ParentGrad(n, 1);
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < hw; ++i) gs[i] += n.grad[ch * hw + i] * fv[ch * hw + i];
    }
  });
}

Var GlobalMaxPool(const Var& f) {
  RequireRank(f, 3, "GlobalMaxPool");
  int c = f.dim(0), hw = f.dim(1) * f.dim(2);
  Require(hw >= 1, "GlobalMaxPool: empty map");
  Tensor out({c});
  std::vector<int> arg(c);
  for (int ch = 0; ch < c; ++ch) {
    const double* p = f.value().data() + static_cast<std::size_t>(ch) * hw;
    int best = 0;
    for (int i = 1; i < hw; ++i)
      if (p[i] > p[best]) best = i;
    arg[ch] = best;
    out[ch] = p[best];
  }
  return MakeResult(std::move(out), {f}, [hw, arg = std::move(arg)](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    for (std::size_t ch = 0; ch < arg.size(); ++ch) g[ch * hw + arg[ch]] += n.grad[ch];
  });
}

Var GlobalAvgPool(const Var& f) {
  RequireRank(f, 3, "GlobalAvgPool");
  int c = f.dim(0), hw = f.dim(1) * f.dim(2);
  Require(hw >= 1, "GlobalAvgPool: empty map");
  Tensor out({c});
  for (int ch = 0; ch < c; ++ch) {
    const double* p = f.value().data() + static_cast<std::size_t>(ch) * hw;
    double s = 0.0;
    for (int i = 0; i < hw; ++i) s += p[i];
    out[ch] = s / hw;
  }
  return MakeResult(std::move(out), {f}, [c, hw](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    for (int ch = 0; ch < c; ++ch) {
      double v = n.grad[ch] / hw;
      for (int i = 0; i < hw; ++i) g[ch * hw + i] += v;
    }
  });
}

Var ChannelMax(const Var& f) {
  RequireRank(f, 3, "ChannelMax");
  int c = f.dim(0), h = f.dim(1), w = f.dim(2), hw = h * w;
  Require(c >= 1, "ChannelMax: no channels");
  Tensor out({1, h, w});
  std::vector<int> arg(hw, 0);
  for (int i = 0; i < hw; ++i) {
    double best = f.value()[i];
    for (int ch = 1; ch < c; ++ch) {
      double v = f.value()[ch * hw + i];
      if (v > best) {
        best = v;
        arg[i] = ch;
      }
    }
    out[i] = best;
  }
  return MakeResult(std::move(out), {f}, [hw, arg = std::move(arg)](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    for (int i = 0; i < hw; ++i) g[arg[i] * hw + i] += n.grad[i];
  });
}

Var ChannelMean(const Var& f) {
  RequireRank(f, 3, "ChannelMean");
  int c = f.dim(0), h = f.dim(1), w = f.dim(2), hw = h * w;
  Require(c >= 1, "ChannelMean: no channels");
  Tensor out({1, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < hw; ++i) out[i] += f.value()[ch * hw + i];
  out *= 1.0 / c;
  return MakeResult(std::move(out), {f}, [c, hw](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < hw; ++i) g[ch * hw + i] += n.grad[i] / c;
  });
}

namespace {

struct Tap {
  int lo, hi;
  double wlo, whi;
};

std::vector<Tap> ResizeTaps(int in, int out) {
  std::vector<Tap> taps(out);
  double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = std::max((o + 0.5) * scale - 0.5, 0.0);
    int lo = std::min(static_cast<int>(src), in - 1);
    int hi = std::min(lo + 1, in - 1);
    double frac = src - lo;
    if (lo == hi) frac = 0.0;
    taps[o] = {lo, hi, 1.0 - frac, frac};
  }
  return taps;
}

}  // namespace

Var UpsampleBilinear(const Var& x, int out_h, int out_w) {
  RequireRank(x, 3, "UpsampleBilinear");
  Require(out_h > 0 && out_w > 0, "UpsampleBilinear: bad output size");
  int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  auto ty = ResizeTaps(h, out_h);
  auto tx = ResizeTaps(w, out_w);
  Tensor out({c, out_h, out_w});
  const Tensor& xv = x.value();
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < out_h; ++oy) {
      const Tap& a = ty[oy];
      for (int ox = 0; ox < out_w; ++ox) {
        const Tap& b = tx[ox];
        out.at(ch, oy, ox) = a.wlo * (b.wlo * xv.at(ch, a.lo, b.lo) + b.whi * xv.at(ch, a.lo, b.hi)) +
                             a.whi * (b.wlo * xv.at(ch, a.hi, b.lo) + b.whi * xv.at(ch, a.hi, b.hi));
      }
    }
  }
  return MakeResult(std::move(out), {x}, [c, out_h, out_w, ty, tx](Node& n) {
    Tensor& g = ParentGrad(n, 0);
    for (int ch = 0; ch < c; ++ch) {
      for (int oy = 0; oy < out_h; ++oy) {
        const Tap& a = ty[oy];
        for (int ox = 0; ox < out_w; ++ox) {
          const Tap& b = tx[ox];
          double gv = n.grad.at(ch, oy, ox);
          g.at(ch, a.lo, b.lo) += gv * a.wlo * b.wlo;
          g.at(ch, a.lo, b.hi) += gv * a.wlo * b.whi;
          g.at(ch, a.hi, b.lo) += gv * a.whi * b.wlo;
          g.at(ch, a.hi, b.hi) += gv * a.whi * b.whi;
        }
      }
    }
  });
}

namespace {

// Enumerates the 1-D sequences of a [C, H, W] map along `axis` as
// (start offset, stride, length).
template <typename Fn>
void ForEachLine(const Shape& shape, int axis, Fn fn) {
  int c = shape[0], h = shape[1], w = shape[2];
  if (axis == 2) {
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y) fn((static_cast<std::size_t>(ch) * h + y) * w, 1, w);
  } else {
    for (int ch = 0; ch < c; ++ch)
      for (int x = 0; x < w; ++x) fn(static_cast<std::size_t>(ch) * h * w + x, w, h);
  }
}

}  // namespace

Var GatedScan(const Var& forget, const Var& input, int axis, bool reverse) {
  RequireRank(forget, 3, "GatedScan");
  CheckSameShape(forget.value(), input.value(), "GatedScan");
  Require(axis == 1 || axis == 2, "GatedScan: axis must be 1 (rows) or 2 (cols)");
  Tensor out(input.shape());
  const Tensor& fv = forget.value();
  const Tensor& xv = input.value();
  ForEachLine(out.shape(), axis, [&](std::size_t start, int stride, int len) {
    double c = 0.0;
    for (int s = 0; s < len; ++s) {
      int t = reverse ? len - 1 - s : s;
      std::size_t i = start + static_cast<std::size_t>(t) * stride;
      c = fv[i] * c + (1.0 - fv[i]) * xv[i];
      out[i] = c;
    }
  });
  return MakeResult(std::move(out), {forget, input}, [axis, reverse](Node& n) {
    const Tensor& fv = n.parents[0]->value;
    const Tensor& xv = n.parents[1]->value;
    bool need_f = ParentNeeds(n, 0), need_x = ParentNeeds(n, 1);
    Tensor* gf = need_f ? &ParentGrad(n, 0) : nullptr;
    Tensor* gx = need_x ? &ParentGrad(n, 1) : nullptr;
    ForEachLine(n.value.shape(), axis, [&](std::size_t start, int stride, int len) {
      double carry = 0.0;  // dL/dc_t flowing from step t+1
      for (int s = len - 1; s >= 0; --s) {
        int t = reverse ? len - 1 - s : s;
        std::size_t i = start + static_cast<std::size_t>(t) * stride;
        double dc = n.grad[i] + carry;
        double c_prev = 0.0;
        if (s > 0) {
          int tp = reverse ? len - s : s - 1;
          c_prev = n.value[start + static_cast<std::size_t>(tp) * stride];
        }
        if (gf) (*gf)[i] += dc * (c_prev - xv[i]);
        if (gx) (*gx)[i] += dc * (1.0 - fv[i]);
        carry = dc * fv[i];
      }
    });
  });
}

namespace {

struct BilinearTap {
  int y0, x0, y1, x1;
  double w00, w01, w10, w11;
  bool valid;
};

BilinearTap MakeTap(int h, int w, double y, double x) {
  BilinearTap t{};
  if (y < -1.0 || y > h || x < -1.0 || x > w) {
    t.valid = false;
    return t;
  }
  t.valid = true;
  y = std::max(y, 0.0);
  x = std::max(x, 0.0);
  int yl = static_cast<int>(y), xl = static_cast<int>(x);
  int yh, xh;
  if (yl >= h - 1) {
    yl = yh = h - 1;
    y = yl;
  } else {
    yh = yl + 1;
  }
  if (xl >= w - 1) {
    xl = xh = w - 1;
    x = xl;
  } else {
    xh = xl + 1;
  }
  double ly = y - yl, lx = x - xl, hy = 1.0 - ly, hx = 1.0 - lx;
  t.y0 = yl;
  t.x0 = xl;
  t.y1 = yh;
  t.x1 = xh;
  t.w00 = hy * hx;
  t.w01 = hy * lx;
  t.w10 = ly * hx;
  t.w11 = ly * lx;
  return t;
}

}  // namespace

Var RoiAlign(const Var& f, const std::vector<FeatureRoi>& rois, int grid, int samples) {
  RequireRank(f, 3, "RoiAlign");
  Require(grid >= 1 && samples >= 1, "RoiAlign: grid and samples must be positive");
  int c = f.dim(0), h = f.dim(1), w = f.dim(2);
  int n_rois = static_cast<int>(rois.size());
  int bins = grid * grid;
  int d = c * bins;
  for (const FeatureRoi& r : rois) {
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) {
      throw ShapeError("RoiAlign: zero-area projected box");
    }
  }
  // Precompute taps: per roi, per bin, samples^2 taps.
  int per_bin = samples * samples;
  std::vector<BilinearTap> taps(static_cast<std::size_t>(n_rois) * bins * per_bin);
  for (int r = 0; r < n_rois; ++r) {
    const FeatureRoi& roi = rois[r];
    double bh = (roi.y1 - roi.y0) / grid, bw = (roi.x1 - roi.x0) / grid;
    for (int by = 0; by < grid; ++by)
      for (int bx = 0; bx < grid; ++bx)
        for (int sy = 0; sy < samples; ++sy)
          for (int sx = 0; sx < samples; ++sx) {
            double y = roi.y0 + by * bh + (sy + 0.5) * bh / samples;
            double x = roi.x0 + bx * bw + (sx + 0.5) * bw / samples;
            taps[((static_cast<std::size_t>(r) * bins + by * grid + bx) * per_bin) +
                 sy * samples + sx] = MakeTap(h, w, y, x);
          }
  }
  Tensor out({n_rois, d});
  const Tensor& fv = f.value();
  double inv = 1.0 / per_bin;
  for (int r = 0; r < n_rois; ++r) {
    for (int ch = 0; ch < c; ++ch) {
      for (int b = 0; b < bins; ++b) {
        const BilinearTap* tp = &taps[(static_cast<std::size_t>(r) * bins + b) * per_bin];
        double acc = 0.0;
        for (int s = 0; s < per_bin; ++s) {
          const BilinearTap& t = tp[s];
          if (!t.valid) continue;
          acc += t.w00 * fv.at(ch, t.y0, t.x0) + t.w01 * fv.at(ch, t.y0, t.x1) +
                 t.w10 * fv.at(ch, t.y1, t.x0) + t.w11 * fv.at(ch, t.y1, t.x1);
        }
        out.at(r, ch * bins + b) = acc * inv;
      }
    }
  }
  return MakeResult(std::move(out), {f},
                    [c, bins, per_bin, n_rois, inv, taps = std::move(taps)](Node& n) {
                      Tensor& g = ParentGrad(n, 0);
                      for (int r = 0; r < n_rois; ++r) {
                        for (int ch = 0; ch < c; ++ch) {
                          for (int b = 0; b < bins; ++b) {
                            double gv = n.grad.at(r, ch * bins + b) * inv;
                            if (gv == 0.0) continue;
                            const BilinearTap* tp =
                                &taps[(static_cast<std::size_t>(r) * bins + b) * per_bin];
                            for (int s = 0; s < per_bin; ++s) {
                              const BilinearTap& t = tp[s];
                              if (!t.valid) continue;
                              g.at(ch, t.y0, t.x0) += gv * t.w00;
                              g.at(ch, t.y0, t.x1) += gv * t.w01;
                              g.at(ch, t.y1, t.x0) += gv * t.w10;
                              g.at(ch, t.y1, t.x1) += gv * t.w11;
                            }
                          }
                        }
                      }
                    });
}

Var SoftmaxCrossEntropy(const Var& logits, const std::vector<int>& labels) {
  RequireRank(logits, 2, "SoftmaxCrossEntropy");
  int n_rows = logits.dim(0), k = logits.dim(1);
  Require(n_rows >= 1, "SoftmaxCrossEntropy: empty batch");
  Require(labels.size() == static_cast<std::size_t>(n_rows), "SoftmaxCrossEntropy: label count");
  Tensor probs({n_rows, k});
  double loss = 0.0;
  for (int r = 0; r < n_rows; ++r) {
    Require(labels[r] >= 0 && labels[r] < k, "SoftmaxCrossEntropy: label out of range");
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) m = std::max(m, logits.value().at(r, j));
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(logits.value().at(r, j) - m);
    double lz = m + std::log(z);
    for (int j = 0; j < k; ++j) probs.at(r, j) = std::exp(logits.value().at(r, j) - lz);
    loss -= logits.value().at(r, labels[r]) - lz;
  }
  loss /= n_rows;
  return MakeResult(Tensor({1}, loss), {logits},
                    [n_rows, k, labels, probs = std::move(probs)](Node& n) {
                      Tensor& g = ParentGrad(n, 0);
                      double s = n.grad[0] / n_rows;
                      for (int r = 0; r < n_rows; ++r)
                        for (int j = 0; j < k; ++j)
                          g.at(r, j) += s * (probs.at(r, j) - (j == labels[r] ? 1.0 : 0.0));
                    });
}

Var BceWithLogits(const Var& logits, const Tensor& targets, double pos_weight) {
  CheckSameShape(logits.value(), targets, "BceWithLogits");
  std::size_t count = targets.size();
  Require(count > 0, "BceWithLogits: empty input");
  double loss = 0.0;
  const Tensor& z = logits.value();
  for (std::size_t i = 0; i < count; ++i) {
    double y = targets[i];
    loss += pos_weight * y * Softplus(-z[i]) + (1.0 - y) * Softplus(z[i]);
  }
  loss /= static_cast<double>(count);
  return MakeResult(Tensor({1}, loss), {logits}, [targets, pos_weight, count](Node& n) {
    const Tensor& z = n.parents[0]->value;
    Tensor& g = ParentGrad(n, 0);
    double s = n.grad[0] / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      double p = StableSigmoid(z[i]);
      double y = targets[i];
      g[i] += s * (pos_weight * y * (p - 1.0) + (1.0 - y) * p);
    }
  });
}

}  // namespace mfg::ops
