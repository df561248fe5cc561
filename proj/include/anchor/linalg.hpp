#pragma once

// Dense linear algebra primitives and seeded Gaussian sampling shared by the
// whole library. Matrices are dense, double precision, and treated as
// immutable values once built.
//
// The generator is pcg32 (PCG-XSH-RR 64/32, constants from the PCG reference
// implementation). Uniform doubles take 53 bits from two consecutive 32-bit
// outputs; normals are Box-Muller. The draw sequence for a given seed is
// therefore fixed across platforms and builds. Parallel call sites never
// share a generator: they derive child streams with derive_seed(parent,
// label, index), a splitmix64/FNV-1a hash of the parent seed, a role label
// and an index.

#include <cmath>
#include <cstdint>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "anchor/errors.hpp"

namespace anchor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label,
                                 std::uint64_t index = 0) {
  return detail::splitmix64(parent ^
                            detail::splitmix64(detail::fnv1a(label) ^
                                               detail::splitmix64(index)));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0x853c49e6748fea9bULL)
      : state_(0), inc_((stream << 1u) | 1u), seed_(seed) {
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // Fisher-Yates; index i uniform over [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  std::uint64_t seed() const { return seed_; }

  Rng child(std::string_view label, std::uint64_t index = 0) const {
    return Rng(derive_seed(seed_, label, index));
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
  std::uint64_t seed_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

inline Matrix symmetrized(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

// Lower Cholesky factor of a symmetric positive definite matrix. If the
// factorization fails, the diagonal is jittered starting at 1e-10 and
// escalating tenfold up to 1e-4 before giving up.
inline Matrix cholesky_spd(const Matrix& a, double* jitter_used = nullptr) {
  if (a.rows() != a.cols())
    throw ShapeMismatch("cholesky_spd: matrix not square");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    if (jitter_used) *jitter_used = 0.0;
    return llt.matrixL();
  }
  for (double jitter = 1e-10; jitter <= 1e-4 * (1.0 + 1e-12); jitter *= 10.0) {
    Matrix aj = a;
    aj.diagonal().array() += jitter;
    llt.compute(aj);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt.matrixL();
    }
  }
  throw NotPositiveDefinite(
      "cholesky_spd: matrix not positive definite after max jitter 1e-4");
}

// Solves a x = b for symmetric positive definite a (jitter policy as above).
inline Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ShapeMismatch("solve_spd: dimension mismatch");
  Matrix l = cholesky_spd(a);
  Matrix y = l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

inline Matrix spd_inverse(const Matrix& a) {
  return symmetrized(solve_spd(a, Matrix::Identity(a.rows(), a.cols())));
}

// One draw from N(mean, cov). Deterministic given the generator state.
inline Vector sample_mvn(const Vector& mean, const Matrix& cov, Rng& rng) {
  if (mean.size() != cov.rows())
    throw ShapeMismatch("sample_mvn: mean/cov dimension mismatch");
  Matrix l = cholesky_spd(cov);
  return mean + l * rng.normal_vector(mean.size());
}

}  // namespace anchor
