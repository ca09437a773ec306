#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

#include "g2p/rng.h"

namespace g2p {

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
using VecRef = Eigen::Ref<const Vec<T>>;

// W x + b. Throws ShapeError on mismatch and NumericError on a non-finite
// result.
template <typename T>
Vec<T> affine(const VecRef<T>& x, const Mat<T>& w, const Vec<T>& b);

// Max-subtracted softmax. Throws on empty or non-finite input.
template <typename T>
Vec<T> softmax(const VecRef<T>& z);

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Gated recurrent unit:
//   z  = sigmoid(w_z x + u_z h + b_z)
//   r  = sigmoid(w_r x + u_r h + b_r)
//   h~ = tanh(w_h x + u_h (r .* h) + b_h)
//   h' = (1 - z) .* h + z .* h~
template <typename T>
struct GruCellParams {
  Mat<T> w_z, u_z;
  Vec<T> b_z;
  Mat<T> w_r, u_r;
  Vec<T> b_r;
  Mat<T> w_h, u_h;
  Vec<T> b_h;

  static GruCellParams zeros(int input_dim, int hidden_dim);

  int input_dim() const { return static_cast<int>(w_z.cols()); }
  int hidden_dim() const { return static_cast<int>(w_z.rows()); }
  // Throws ShapeError unless every block agrees with (input_dim, hidden_dim).
  void validate() const;

  // Visits blocks in serialization order: w_z u_z b_z w_r u_r b_r w_h u_h b_h.
  template <typename F>
  void for_each(F&& f) { visit(*this, f); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, f); }

  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f("w_z", self.w_z), f("u_z", self.u_z), f("b_z", self.b_z);
    f("w_r", self.w_r), f("u_r", self.u_r), f("b_r", self.b_r);
    f("w_h", self.w_h), f("u_h", self.u_h), f("b_h", self.b_h);
  }

  template <typename U>
  GruCellParams<U> cast() const {
    return {w_z.template cast<U>(), u_z.template cast<U>(), b_z.template cast<U>(),
            w_r.template cast<U>(), u_r.template cast<U>(), b_r.template cast<U>(),
            w_h.template cast<U>(), u_h.template cast<U>(), b_h.template cast<U>()};
  }
};

template <typename T>
Vec<T> gru_cell(const VecRef<T>& x, const VecRef<T>& h_prev, const GruCellParams<T>& p);

// Records GRU steps for backpropagation through time. Steps are stored as
// columns; backward() must be called in reverse step order, after which
// accumulate() folds the recorded gate gradients into parameter gradients
// with one matrix product per block.
template <typename T>
class GruTape {
 public:
  GruTape() = default;
  GruTape(int input_dim, int hidden_dim, int steps);

  Vec<T> forward(int t, const VecRef<T>& x, const VecRef<T>& h_prev, const GruCellParams<T>& p);

  // dh is dL/dh_t from every downstream path. Writes dL/dx_t and dL/dh_{t-1}.
  void backward(int t, const VecRef<T>& dh, const GruCellParams<T>& p, Vec<T>& dx,
                Vec<T>& dh_prev);

  void accumulate(GruCellParams<T>& grads) const;

  int steps() const { return static_cast<int>(x_.cols()); }

 private:
  Mat<T> x_, h_prev_, z_, r_, cand_;
  Mat<T> gz_, gr_, gh_;  // gradients w.r.t. gate pre-activations
};

// Uniform Glorot initialisation: U(-a, a), a = sqrt(6 / (fan_in + fan_out)),
// with fan_out = rows and fan_in = cols.
template <typename T>
void glorot_uniform(Mat<T>& w, Lcg64& rng);

}  // namespace g2p
