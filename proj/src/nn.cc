#include "g2p/nn.h"

#include <cmath>
#include <string>

#include "g2p/error.h"

namespace g2p {

namespace {

std::string shape(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

template <typename T>
Vec<T> affine(const VecRef<T>& x, const Mat<T>& w, const Vec<T>& b) {
  if (w.cols() != x.size() || w.rows() != b.size())
    throw ShapeError("affine: W is " + shape(w.rows(), w.cols()) + ", x has " +
                     std::to_string(x.size()) + ", b has " + std::to_string(b.size()));
  Vec<T> y = b;
  y.noalias() += w * x;
  if (!y.allFinite()) throw NumericError("affine: non-finite output");
  return y;
}

template <typename T>
Vec<T> softmax(const VecRef<T>& z) {
  if (z.size() == 0) throw InvalidArgument("softmax of an empty vector");
  if (!z.allFinite()) throw NumericError("softmax: non-finite input");
  Vec<T> p = (z.array() - z.maxCoeff()).exp();
  p /= p.sum();
  return p;
}

template <typename T>
GruCellParams<T> GruCellParams<T>::zeros(int input_dim, int hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1) throw InvalidArgument("GRU dimensions must be positive");
  GruCellParams p;
  for (Mat<T>* w : {&p.w_z, &p.w_r, &p.w_h}) *w = Mat<T>::Zero(hidden_dim, input_dim);
  for (Mat<T>* u : {&p.u_z, &p.u_r, &p.u_h}) *u = Mat<T>::Zero(hidden_dim, hidden_dim);
  for (Vec<T>* b : {&p.b_z, &p.b_r, &p.b_h}) *b = Vec<T>::Zero(hidden_dim);
  return p;
}

template <typename T>
void GruCellParams<T>::validate() const {
  const auto in = w_z.cols();
  const auto hid = w_z.rows();
  bool ok = in > 0 && hid > 0;
  for (const Mat<T>* w : {&w_z, &w_r, &w_h}) ok = ok && w->rows() == hid && w->cols() == in;
  for (const Mat<T>* u : {&u_z, &u_r, &u_h}) ok = ok && u->rows() == hid && u->cols() == hid;
  for (const Vec<T>* b : {&b_z, &b_r, &b_h}) ok = ok && b->size() == hid;
  if (!ok) throw ShapeError("GRU parameters are not shape-consistent");
}

template <typename T>
Vec<T> gru_cell(const VecRef<T>& x, const VecRef<T>& h_prev, const GruCellParams<T>& p) {
  p.validate();
  if (x.size() != p.input_dim() || h_prev.size() != p.hidden_dim())
    throw ShapeError("gru_cell: expected input " + std::to_string(p.input_dim()) + " and state " +
                     std::to_string(p.hidden_dim()) + ", got " + std::to_string(x.size()) +
                     " and " + std::to_string(h_prev.size()));
  GruTape<T> tape(p.input_dim(), p.hidden_dim(), 1);
  Vec<T> h = tape.forward(0, x, h_prev, p);
  if (!h.allFinite()) throw NumericError("gru_cell: non-finite output");
  return h;
}

// GruTape

template <typename T>
GruTape<T>::GruTape(int input_dim, int hidden_dim, int steps)
    : x_(input_dim, steps),
      h_prev_(hidden_dim, steps),
      z_(hidden_dim, steps),
      r_(hidden_dim, steps),
      cand_(hidden_dim, steps),
      gz_(hidden_dim, steps),
      gr_(hidden_dim, steps),
      gh_(hidden_dim, steps) {}

template <typename T>
Vec<T> GruTape<T>::forward(int t, const VecRef<T>& x, const VecRef<T>& h_prev,
                           const GruCellParams<T>& p) {
  x_.col(t) = x;
  h_prev_.col(t) = h_prev;

  Vec<T> a = p.b_z;
  a.noalias() += p.w_z * x;
  a.noalias() += p.u_z * h_prev;
  auto z = z_.col(t);
  z = a.unaryExpr([](T v) { return sigmoid(v); });

  a = p.b_r;
  a.noalias() += p.w_r * x;
  a.noalias() += p.u_r * h_prev;
  auto r = r_.col(t);
  r = a.unaryExpr([](T v) { return sigmoid(v); });

  Vec<T> rh = r.cwiseProduct(h_prev);
  a = p.b_h;
  a.noalias() += p.w_h * x;
  a.noalias() += p.u_h * rh;
  auto cand = cand_.col(t);
  cand = a.array().tanh();

  return (h_prev.array() + z.array() * (cand.array() - h_prev.array())).matrix();
}

template <typename T>
void GruTape<T>::backward(int t, const VecRef<T>& dh, const GruCellParams<T>& p, Vec<T>& dx,
                          Vec<T>& dh_prev) {
  const auto hp = h_prev_.col(t).array();
  const auto z = z_.col(t).array();
  const auto r = r_.col(t).array();
  const auto cand = cand_.col(t).array();
  const auto g = dh.array();

  auto gh = gh_.col(t);
  gh = (g * z * (T(1) - cand * cand)).matrix();
  Vec<T> d_rh = p.u_h.transpose() * gh;
  auto gz = gz_.col(t);
  gz = (g * (cand - hp) * z * (T(1) - z)).matrix();
  auto gr = gr_.col(t);
  gr = (d_rh.array() * hp * r * (T(1) - r)).matrix();

  dh_prev = (g * (T(1) - z) + d_rh.array() * r).matrix();
  dh_prev.noalias() += p.u_z.transpose() * gz;
  dh_prev.noalias() += p.u_r.transpose() * gr;

  dx.noalias() = p.w_z.transpose() * gz;
  dx.noalias() += p.w_r.transpose() * gr;
  dx.noalias() += p.w_h.transpose() * gh;
}

template <typename T>
void GruTape<T>::accumulate(GruCellParams<T>& grads) const {
  const Mat<T> rh = r_.cwiseProduct(h_prev_);
  grads.w_z.noalias() += gz_ * x_.transpose();
  grads.u_z.noalias() += gz_ * h_prev_.transpose();
  grads.b_z += gz_.rowwise().sum();
  grads.w_r.noalias() += gr_ * x_.transpose();
  grads.u_r.noalias() += gr_ * h_prev_.transpose();
  grads.b_r += gr_.rowwise().sum();
  grads.w_h.noalias() += gh_ * x_.transpose();
  grads.u_h.noalias() += gh_ * rh.transpose();
  grads.b_h += gh_.rowwise().sum();
}

template <typename T>
void glorot_uniform(Mat<T>& w, Lcg64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  // Row-major draw order, matching the serialized layout.
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<T>(rng.uniform(-a, a));
}

#define G2P_INSTANTIATE(T)                                                       \
  template Vec<T> affine<T>(const VecRef<T>&, const Mat<T>&, const Vec<T>&);     \
  template Vec<T> softmax<T>(const VecRef<T>&);                                  \
  template struct GruCellParams<T>;                                              \
  template Vec<T> gru_cell<T>(const VecRef<T>&, const VecRef<T>&, const GruCellParams<T>&); \
  template class GruTape<T>;                                                     \
  template void glorot_uniform<T>(Mat<T>&, Lcg64&);

G2P_INSTANTIATE(float)
G2P_INSTANTIATE(double)

#undef G2P_INSTANTIATE

}  // namespace g2p
