#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "synthdag/nn/tape.hpp"

namespace synthdag::nn {

namespace detail {

inline void check(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

template <class T>
Mat<T> sigmoid(const Mat<T>& x) {
  return x.unaryExpr([](T v) { return T(1) / (T(1) + std::exp(-v)); });
}

}  // namespace detail

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Mat<T> y = a.value() * b.value();
  return t.push(std::move(y), t.any_needs(a, b), [a, b](Tape<T>& tp, const Mat<T>& g) {
    if (tp.needs_grad(a)) tp.accumulate(a.id, g * b.value().transpose());
    if (tp.needs_grad(b)) tp.accumulate(b.id, a.value().transpose() * g);
  }, "matmul");
}

// a * b^T
template <class T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Mat<T> y = a.value() * b.value().transpose();
  return t.push(std::move(y), t.any_needs(a, b), [a, b](Tape<T>& tp, const Mat<T>& g) {
    if (tp.needs_grad(a)) tp.accumulate(a.id, g * b.value());
    if (tp.needs_grad(b)) tp.accumulate(b.id, g.transpose() * a.value());
  }, "matmul_nt");
}

// x W + b, with b a row vector broadcast over rows.
template <class T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  Tape<T>& t = *x.tape;
  detail::check(x.cols() == w.rows(), "linear: input width does not match weight rows");
  detail::check(b.rows() == 1 && b.cols() == w.cols(), "linear: bias shape");
  Mat<T> y = x.value() * w.value();
  y.rowwise() += b.value().row(0);
  return t.push(std::move(y), t.any_needs(x, w, b), [x, w, b](Tape<T>& tp, const Mat<T>& g) {
    if (tp.needs_grad(x)) tp.accumulate(x.id, g * w.value().transpose());
    if (tp.needs_grad(w)) tp.accumulate(w.id, x.value().transpose() * g);
    if (tp.needs_grad(b)) tp.accumulate(b.id, g.colwise().sum());
  }, "linear");
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Mat<T> y = a.value() + b.value();
  return t.push(std::move(y), t.any_needs(a, b), [a, b](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, g);
    tp.accumulate(b.id, g);
  }, "add");
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  Mat<T> y = a.value() - b.value();
  return t.push(std::move(y), t.any_needs(a, b), [a, b](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, g);
    if (tp.needs_grad(b)) tp.accumulate(b.id, -g);
  }, "sub");
}

// Elementwise product.
template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  Mat<T> y = a.value().cwiseProduct(b.value());
  return t.push(std::move(y), t.any_needs(a, b), [a, b](Tape<T>& tp, const Mat<T>& g) {
    if (tp.needs_grad(a)) tp.accumulate(a.id, g.cwiseProduct(b.value()));
    if (tp.needs_grad(b)) tp.accumulate(b.id, g.cwiseProduct(a.value()));
  }, "mul");
}

template <class T>
Var<T> scale(Var<T> a, T s) {
  Tape<T>& t = *a.tape;
  Mat<T> y = a.value() * s;
  return t.push(std::move(y), t.any_needs(a), [a, s](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, g * s);
  }, "scale");
}

// a + row vector b broadcast over rows.
template <class T>
Var<T> add_row(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check(b.rows() == 1 && b.cols() == a.cols(), "add_row: shape mismatch");
  Mat<T> y = a.value();
  y.rowwise() += b.value().row(0);
  return t.push(std::move(y), t.any_needs(a, b), [a, b](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, g);
    if (tp.needs_grad(b)) tp.accumulate(b.id, g.colwise().sum());
  }, "add_row");
}

template <class T>
Var<T> sigmoid(Var<T> a) {
  Tape<T>& t = *a.tape;
  Mat<T> y = detail::sigmoid(a.value());
  Mat<T> saved = t.any_needs(a) ? y : Mat<T>();
  return t.push(std::move(y), t.any_needs(a), [a, saved](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, g.cwiseProduct(saved.cwiseProduct((T(1) - saved.array()).matrix())));
  }, "sigmoid");
}

template <class T>
Var<T> tanh(Var<T> a) {
  Tape<T>& t = *a.tape;
  Mat<T> y = a.value().array().tanh().matrix();
  Mat<T> saved = t.any_needs(a) ? y : Mat<T>();
  return t.push(std::move(y), t.any_needs(a), [a, saved](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, g.cwiseProduct((T(1) - saved.array().square()).matrix()));
  }, "tanh");
}

template <class T>
Var<T> relu(Var<T> a) {
  Tape<T>& t = *a.tape;
  Mat<T> y = a.value().cwiseMax(T(0));
  return t.push(std::move(y), t.any_needs(a), [a](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, (a.value().array() > T(0)).select(g, T(0)).matrix());
  }, "relu");
}

template <class T>
Var<T> exp(Var<T> a) {
  Tape<T>& t = *a.tape;
  Mat<T> y = a.value().array().exp().matrix();
  Mat<T> saved = t.any_needs(a) ? y : Mat<T>();
  return t.push(std::move(y), t.any_needs(a), [a, saved](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, g.cwiseProduct(saved));
  }, "exp");
}

// Values outside [lo, hi] are pinned and receive no gradient.
template <class T>
Var<T> clamp(Var<T> a, T lo, T hi) {
  Tape<T>& t = *a.tape;
  Mat<T> y = a.value().cwiseMax(lo).cwiseMin(hi);
  return t.push(std::move(y), t.any_needs(a), [a, lo, hi](Tape<T>& tp, const Mat<T>& g) {
    const auto& x = a.value().array();
    tp.accumulate(a.id, ((x >= lo) && (x <= hi)).select(g, T(0)).matrix());
  }, "clamp");
}

// Sum of all entries (accumulated in double), as a 1x1.
template <class T>
Var<T> sum(Var<T> a) {
  Tape<T>& t = *a.tape;
  const double s = a.value().template cast<double>().sum();
  return t.push(Mat<T>::Constant(1, 1, static_cast<T>(s)), t.any_needs(a), [a](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, Mat<T>::Constant(a.rows(), a.cols(), g(0, 0)));
  }, "sum");
}

template <class T>
Var<T> mean(Var<T> a) {
  return scale(sum(a), static_cast<T>(1.0 / static_cast<double>(a.value().size())));
}

// Rows of `a` picked by index (repeats allowed).
template <class T>
Var<T> gather_rows(Var<T> a, std::vector<int> idx) {
  Tape<T>& t = *a.tape;
  Mat<T> y(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    detail::check(idx[i] >= 0 && idx[i] < a.rows(), "gather_rows: index out of range");
    y.row(static_cast<Eigen::Index>(i)) = a.value().row(idx[i]);
  }
  return t.push(std::move(y), t.any_needs(a), [a, idx = std::move(idx)](Tape<T>& tp, const Mat<T>& g) {
    Mat<T> d = Mat<T>::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(a.id, d);
  }, "gather_rows");
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  detail::check(!parts.empty(), "concat_rows: no inputs");
  Tape<T>& t = *parts[0].tape;
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  bool needs = false;
  for (const auto& p : parts) {
    detail::check(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
    needs = needs || t.any_needs(p);
  }
  Mat<T> y(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    y.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return t.push(std::move(y), needs, [parts](Tape<T>& tp, const Mat<T>& g) {
    Eigen::Index r = 0;
    for (const auto& p : parts) {
      if (tp.needs_grad(p)) tp.accumulate(p.id, g.middleRows(r, p.rows()));
      r += p.rows();
    }
  }, "concat_rows");
}

template <class T>
Var<T> row_block(Var<T> a, Eigen::Index start, Eigen::Index n) {
  Tape<T>& t = *a.tape;
  detail::check(start >= 0 && n >= 0 && start + n <= a.rows(), "row_block: out of range");
  Mat<T> y = a.value().middleRows(start, n);
  return t.push(std::move(y), t.any_needs(a), [a, start, n](Tape<T>& tp, const Mat<T>& g) {
    Mat<T> d = Mat<T>::Zero(a.rows(), a.cols());
    d.middleRows(start, n) = g;
    tp.accumulate(a.id, d);
  }, "row_block");
}

// Constant sparse matrix times a dense variable.
template <class T>
Var<T> spmm(std::shared_ptr<const SpMat<T>> s, Var<T> x) {
  Tape<T>& t = *x.tape;
  detail::check(s->cols() == x.rows(), "spmm: shape mismatch");
  Mat<T> y = (*s) * x.value();
  return t.push(std::move(y), t.any_needs(x), [s, x](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(x.id, s->transpose() * g);
  }, "spmm");
}

// Inverted dropout on the rows of `a`; identity when not training.
template <class T>
Var<T> dropout(Var<T> a, double p, bool training, Rng& rng) {
  if (!training || p <= 0) return a;
  Tape<T>& t = *a.tape;
  Mat<T> mask(a.rows(), a.cols());
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(p) ? T(0) : keep;
  Mat<T> y = a.value().cwiseProduct(mask);
  return t.push(std::move(y), t.any_needs(a), [a, mask](Tape<T>& tp, const Mat<T>& g) {
    tp.accumulate(a.id, g.cwiseProduct(mask));
  }, "dropout");
}

// Gated recurrent cell (reset, update, candidate gate blocks in that order):
//   r = s(x Wx_r + bx_r + h Wh_r + bh_r)
//   u = s(x Wx_u + bx_u + h Wh_u + bh_u)
//   n = tanh(x Wx_n + bx_n + r * (h Wh_n + bh_n))
//   h' = (1 - u) * n + u * h
template <class T>
Var<T> gru_cell(Var<T> x, Var<T> h, Var<T> wx, Var<T> wh, Var<T> bx, Var<T> bh) {
  Tape<T>& t = *x.tape;
  const Eigen::Index H = h.cols();
  detail::check(x.rows() == h.rows(), "gru_cell: batch mismatch");
  detail::check(wx.rows() == x.cols() && wx.cols() == 3 * H, "gru_cell: Wx shape");
  detail::check(wh.rows() == H && wh.cols() == 3 * H, "gru_cell: Wh shape");
  detail::check(bx.rows() == 1 && bx.cols() == 3 * H && bh.rows() == 1 && bh.cols() == 3 * H, "gru_cell: bias shape");

  Mat<T> gx = x.value() * wx.value();
  gx.rowwise() += bx.value().row(0);
  Mat<T> gh = h.value() * wh.value();
  gh.rowwise() += bh.value().row(0);
  const Mat<T> r = detail::sigmoid<T>(gx.leftCols(H) + gh.leftCols(H));
  const Mat<T> u = detail::sigmoid<T>(gx.middleCols(H, H) + gh.middleCols(H, H));
  const Mat<T> ghn = gh.rightCols(H);
  const Mat<T> n = (gx.rightCols(H) + r.cwiseProduct(ghn)).array().tanh().matrix();
  Mat<T> y = (T(1) - u.array()).matrix().cwiseProduct(n) + u.cwiseProduct(h.value());

  const bool needs = t.any_needs(x, h, wx, wh, bx, bh);
  return t.push(std::move(y), needs, [=](Tape<T>& tp, const Mat<T>& g) {
    const Mat<T> du = g.cwiseProduct(h.value() - n);
    const Mat<T> dn = g.cwiseProduct((T(1) - u.array()).matrix());
    const Mat<T> dan = dn.cwiseProduct((T(1) - n.array().square()).matrix());
    const Mat<T> dr = dan.cwiseProduct(ghn);
    const Mat<T> dar = dr.cwiseProduct(r.cwiseProduct((T(1) - r.array()).matrix()));
    const Mat<T> dau = du.cwiseProduct(u.cwiseProduct((T(1) - u.array()).matrix()));
    Mat<T> dgx(g.rows(), 3 * H);
    dgx << dar, dau, dan;
    Mat<T> dgh(g.rows(), 3 * H);
    dgh << dar, dau, dan.cwiseProduct(r);
    if (tp.needs_grad(x)) tp.accumulate(x.id, dgx * wx.value().transpose());
    if (tp.needs_grad(wx)) tp.accumulate(wx.id, x.value().transpose() * dgx);
    if (tp.needs_grad(bx)) tp.accumulate(bx.id, dgx.colwise().sum());
    if (tp.needs_grad(h)) tp.accumulate(h.id, g.cwiseProduct(u) + dgh * wh.value().transpose());
    if (tp.needs_grad(wh)) tp.accumulate(wh.id, h.value().transpose() * dgh);
    if (tp.needs_grad(bh)) tp.accumulate(bh.id, dgh.colwise().sum());
  }, "gru_cell");
}

// Row-wise masked softmax cross-entropy, summed over rows. mask is row-major
// (rows x cols), nonzero = allowed. Masked logits get probability exactly 0
// and no gradient.
template <class T>
Var<T> masked_softmax_ce(Var<T> logits, std::vector<std::uint8_t> mask, std::vector<int> targets) {
  Tape<T>& t = *logits.tape;
  const Eigen::Index n = logits.rows();
  const Eigen::Index k = logits.cols();
  detail::check(static_cast<Eigen::Index>(mask.size()) == n * k, "masked_softmax_ce: mask size");
  detail::check(static_cast<Eigen::Index>(targets.size()) == n, "masked_softmax_ce: target count");
  const Mat<T>& z = logits.value();
  Mat<T> prob = Mat<T>::Zero(n, k);
  double loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint8_t* m = mask.data() + i * k;
    const int tgt = targets[static_cast<std::size_t>(i)];
    if (tgt < 0 || tgt >= k) throw ShapeError("masked_softmax_ce: target out of range");
    if (!m[tgt]) throw Error("masked_softmax_ce: target is masked");
    double mx = -INFINITY;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (m[j]) mx = std::max(mx, static_cast<double>(z(i, j)));
    }
    double s = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (m[j]) s += std::exp(static_cast<double>(z(i, j)) - mx);
    }
    const double lse = mx + std::log(s);
    for (Eigen::Index j = 0; j < k; ++j) {
      if (m[j]) prob(i, j) = static_cast<T>(std::exp(static_cast<double>(z(i, j)) - lse));
    }
    loss += lse - static_cast<double>(z(i, tgt));
  }
  return t.push(Mat<T>::Constant(1, 1, static_cast<T>(loss)), t.any_needs(logits),
                [logits, prob = std::move(prob), targets = std::move(targets)](Tape<T>& tp, const Mat<T>& g) {
                  Mat<T> d = prob;
                  for (std::size_t i = 0; i < targets.size(); ++i) d(static_cast<Eigen::Index>(i), targets[i]) -= T(1);
                  tp.accumulate(logits.id, d * g(0, 0));
                }, "masked_softmax_ce");
}

inline const std::vector<double>& default_mmd_scales() {
  static const std::vector<double> s = {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
  return s;
}

// Unbiased MMD^2 between row samples X (n x d) and Y (m x d) under the kernel
// sum_s C_s / (C_s + |a - b|^2), C_s = 2 d s.
template <class T>
Var<T> mmd_imq(Var<T> x, Var<T> y, const std::vector<double>& scales = default_mmd_scales()) {
  Tape<T>& t = *x.tape;
  const Eigen::Index n = x.rows();
  const Eigen::Index m = y.rows();
  const Eigen::Index d = x.cols();
  detail::check(y.cols() == d, "mmd_imq: dimension mismatch");
  if (n < 2 || m < 2) throw Error("mmd_imq: need at least 2 samples per side");
  const Mat<double> X = x.value().template cast<double>();
  const Mat<double> Y = y.value().template cast<double>();
  std::vector<double> cs;
  for (double s : scales) cs.push_back(2.0 * static_cast<double>(d) * s);

  auto sqdist = [](const Mat<double>& a, const Mat<double>& b) {
    Mat<double> out = (-2.0 * a * b.transpose());
    out.colwise() += a.rowwise().squaredNorm();
    out.rowwise() += b.rowwise().squaredNorm().transpose();
    return Mat<double>(out.cwiseMax(0.0));
  };
  // k and dk/d(r) for every pair, summed over scales.
  auto kernel = [&](const Mat<double>& r, Mat<double>& k, Mat<double>& dk) {
    k = Mat<double>::Zero(r.rows(), r.cols());
    dk = Mat<double>::Zero(r.rows(), r.cols());
    for (double c : cs) {
      const auto den = (c + r.array());
      k.array() += c / den;
      dk.array() -= c / den.square();
    }
  };
  Mat<double> kxx, dxx, kyy, dyy, kxy, dxy;
  kernel(sqdist(X, X), kxx, dxx);
  kernel(sqdist(Y, Y), kyy, dyy);
  kernel(sqdist(X, Y), kxy, dxy);
  kxx.diagonal().setZero();
  dxx.diagonal().setZero();
  kyy.diagonal().setZero();
  dyy.diagonal().setZero();
  const double an = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  const double am = 1.0 / (static_cast<double>(m) * static_cast<double>(m - 1));
  const double anm = 2.0 / (static_cast<double>(n) * static_cast<double>(m));
  const double value = an * kxx.sum() + am * kyy.sum() - anm * kxy.sum();

  return t.push(Mat<T>::Constant(1, 1, static_cast<T>(value)), t.any_needs(x, y),
                [=](Tape<T>& tp, const Mat<T>& g) {
                  const double gs = static_cast<double>(g(0, 0));
                  // d r(a,b)/da = 2 (a - b); each symmetric pair appears twice.
                  if (tp.needs_grad(x)) {
                    Mat<double> gx = 4.0 * an * (dxx.rowwise().sum().asDiagonal() * X - dxx * X);
                    gx -= 2.0 * anm * (dxy.rowwise().sum().asDiagonal() * X - dxy * Y);
                    tp.accumulate(x.id, (gx * gs).template cast<T>());
                  }
                  if (tp.needs_grad(y)) {
                    Mat<double> gy = 4.0 * am * (dyy.rowwise().sum().asDiagonal() * Y - dyy * Y);
                    gy -= 2.0 * anm * (dxy.colwise().sum().transpose().asDiagonal() * Y - dxy.transpose() * X);
                    tp.accumulate(y.id, (gy * gs).template cast<T>());
                  }
                }, "mmd_imq");
}

}  // namespace synthdag::nn
