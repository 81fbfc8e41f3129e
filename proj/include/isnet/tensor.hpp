// Dense row-major tensors, matrix kernels and a deterministic RNG.
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "isnet/util.hpp"

namespace isnet {

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

inline std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <class Real>
struct Tensor {
  static_assert(std::is_floating_point_v<Real>);

  std::vector<std::size_t> shape;
  std::vector<Real> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)), v(shape_numel(shape)) {}
  Tensor(std::vector<std::size_t> s, std::vector<Real> data)
      : shape(std::move(s)), v(std::move(data)) {
    if (v.size() != shape_numel(shape))
      throw std::invalid_argument("tensor: data size does not match shape " + shape_str(shape));
  }

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<std::size_t> s, Real x) {
    Tensor t(std::move(s));
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
  }

  std::size_t size() const { return v.size(); }
  std::size_t ndim() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool empty() const { return v.empty(); }

  Real* data() { return v.data(); }
  const Real* data() const { return v.data(); }

  Real& at(std::size_t i) { return v[i]; }
  const Real& at(std::size_t i) const { return v[i]; }
  Real& at(std::size_t i, std::size_t j) { return v[i * shape[1] + j]; }
  const Real& at(std::size_t i, std::size_t j) const { return v[i * shape[1] + j]; }
  Real& at(std::size_t i, std::size_t j, std::size_t k) {
    return v[(i * shape[1] + j) * shape[2] + k];
  }
  const Real& at(std::size_t i, std::size_t j, std::size_t k) const {
    return v[(i * shape[1] + j) * shape[2] + k];
  }

  void fill(Real x) { std::fill(v.begin(), v.end(), x); }

  void check_finite(const char* what) const { isnet::check_finite(v.data(), v.size(), what); }

  template <class Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape);
    for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<Other>(v[i]);
    return out;
  }
};

template <class Real>
inline bool same_shape(const Tensor<Real>& a, const Tensor<Real>& b) {
  return a.shape == b.shape;
}

// C[M,N] = (acc ? C : 0) + A[M,K] * B[K,N]
template <class Real>
inline void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t M, std::size_t K,
                    std::size_t N, bool acc) {
  for (std::size_t m = 0; m < M; ++m) {
    Real* crow = c + m * N;
    if (!acc)
      for (std::size_t n = 0; n < N; ++n) crow[n] = Real(0);
    const Real* arow = a + m * K;
    for (std::size_t k = 0; k < K; ++k) {
      const Real s = arow[k];
      const Real* brow = b + k * N;
      for (std::size_t n = 0; n < N; ++n) crow[n] += s * brow[n];
    }
  }
}

// C[M,N] = (acc ? C : 0) + A[M,K] * B[N,K]^T   (rows of B dotted with rows of A)
template <class Real>
inline void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t M, std::size_t K,
                    std::size_t N, bool acc) {
  for (std::size_t m = 0; m < M; ++m) {
    const Real* arow = a + m * K;
    Real* crow = c + m * N;
    for (std::size_t n = 0; n < N; ++n) {
      const Real* brow = b + n * K;
      Real s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      std::size_t k = 0;
      for (; k + 4 <= K; k += 4) {
        s0 += arow[k] * brow[k];
        s1 += arow[k + 1] * brow[k + 1];
        s2 += arow[k + 2] * brow[k + 2];
        s3 += arow[k + 3] * brow[k + 3];
      }
      Real s = (s0 + s1) + (s2 + s3);
      for (; k < K; ++k) s += arow[k] * brow[k];
      crow[n] = (acc ? crow[n] : Real(0)) + s;
    }
  }
}

// C[M,N] = (acc ? C : 0) + A[K,M]^T * B[K,N]   (outer-product accumulation over k)
template <class Real>
inline void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t K, std::size_t M,
                    std::size_t N, bool acc) {
  if (!acc)
    for (std::size_t i = 0; i < M * N; ++i) c[i] = Real(0);
  for (std::size_t k = 0; k < K; ++k) {
    const Real* arow = a + k * M;
    const Real* brow = b + k * N;
    for (std::size_t m = 0; m < M; ++m) {
      const Real s = arow[m];
      Real* crow = c + m * N;
      for (std::size_t n = 0; n < N; ++n) crow[n] += s * brow[n];
    }
  }
}

// Deterministic RNG. The uniform/normal mappings are spelled out explicitly so
// sequences depend only on the mt19937_64 stream, not on library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, no cached spare so state round-trips exactly through text.
  double normal() {
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

  template <class Real>
  void fill_uniform(Tensor<Real>& t, double lo, double hi) {
    for (auto& x : t.v) x = static_cast<Real>(uniform(lo, hi));
  }
  template <class Real>
  void fill_normal(Tensor<Real>& t, double mu = 0.0, double sigma = 1.0) {
    for (auto& x : t.v) x = static_cast<Real>(mu + sigma * normal());
  }

  std::string state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }
  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (!is) throw std::runtime_error("rng: bad serialized state");
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace isnet
