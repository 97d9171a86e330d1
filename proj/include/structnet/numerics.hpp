#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace structnet {

using Scalar = double;

/// Dense row-major matrix of doubles. The only numeric carrier in the
/// library: activations, parameters, gradients, images and shapes all
/// live in these.
using Matrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Column vector (biases, flattened samples).
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes.
// ---------------------------------------------------------------------------

/// Invalid configuration or violated call contract (exit code 2).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent data files (exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite value where one is not allowed (exit code 4).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite values in ") + what);
  }
}

inline void require_finite(Scalar v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite value in ") + what);
  }
}

// ---------------------------------------------------------------------------
// Deterministic PRNG.
//
// xoshiro256++ seeded through splitmix64. The algorithm is fixed so that a
// given seed yields the same stream on every platform; the algorithm id is
// embedded in saved models. Doubles are derived as (u64 >> 11) * 2^-53,
// integers below a bound by modulo reduction.
// ---------------------------------------------------------------------------

class Rng {
 public:
  static constexpr const char* kAlgorithm = "xoshiro256++";

  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  Scalar uniform() { return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ConfigError("Rng::below: empty range");
    return next_u64() % n;
  }

  /// Fisher-Yates shuffle with a fixed visit order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

/// Derives an independent stream seed from a master seed. Used to keep the
/// initialization, shuffling, corruption and data-generation streams apart
/// while everything remains a function of one configured seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Matrix product and losses.
// ---------------------------------------------------------------------------

/// Checked matrix product. Dimension mismatches throw instead of hitting
/// Eigen's assertions, and the result is checked for non-finite values.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: inner dimensions differ (" +
                      std::to_string(a.cols()) + " vs " +
                      std::to_string(b.rows()) + ")");
  }
  Matrix c = a * b;
  require_finite(c, "matmul result");
  return c;
}

/// Mean squared error, averaged over every element.
inline Scalar mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ConfigError("mse: shape mismatch");
  }
  const Scalar n = static_cast<Scalar>(pred.size());
  Scalar v = (pred - target).squaredNorm() / n;
  require_finite(v, "mse");
  return v;
}

/// Gradient of mse() with respect to pred.
inline Matrix mse_grad(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ConfigError("mse_grad: shape mismatch");
  }
  const Scalar n = static_cast<Scalar>(pred.size());
  return (2.0 / n) * (pred - target);
}

// ---------------------------------------------------------------------------
// Activations. Expression-friendly free functions: any dense Eigen
// expression goes in, a plain evaluated matrix of doubles comes out.
// The derivative forms take the *activation* value, not the pre-activation.
// ---------------------------------------------------------------------------

template <typename Derived>
Matrix sigmoid(const Eigen::MatrixBase<Derived>& z) {
  // exp(-z) saturates to +inf/0 at the extremes, so the output stays in
  // [0, 1] and never produces NaN.
  return z.derived().unaryExpr(
      [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
}

template <typename Derived>
Matrix sigmoid_deriv(const Eigen::MatrixBase<Derived>& a) {
  return a.derived().unaryExpr([](Scalar v) { return v * (Scalar(1) - v); });
}

template <typename Derived>
Matrix tanh_act(const Eigen::MatrixBase<Derived>& z) {
  return z.derived().unaryExpr([](Scalar v) { return std::tanh(v); });
}

template <typename Derived>
Matrix tanh_deriv(const Eigen::MatrixBase<Derived>& a) {
  return a.derived().unaryExpr([](Scalar v) { return Scalar(1) - v * v; });
}

}  // namespace structnet
