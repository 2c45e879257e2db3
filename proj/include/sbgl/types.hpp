#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbgl {

/// Index and size type used across the library. Matches Eigen's index type
/// so shape arithmetic needs no casts.
using index_t = Eigen::Index;

/// Dense matrices are row-major: the propagation kernels stream whole rows,
/// one row per node, so row contiguity is what vectorizes.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

enum class Err {
  InvalidArgument,
  InvalidRatio,
  ShapeMismatch,
  IndexOutOfRange,
  DuplicateEdge,
  RankTooLarge,
  MissingFactors,
  EmptyInput,
  EmptyBatch,
  EmptySplit,
  DegenerateLabels,
  TooManyEdges,
  Parse,
  Io,
  Numeric,
};

const char* err_name(Err code);

/// Library error. `code()` is stable and drives the CLI exit code mapping;
/// `what()` carries context such as file names, line numbers, or shapes.
class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& message);
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] void raise(Err code, const std::string& message);

/// Deterministic random source. Every random draw in the library flows
/// through this class: the uniform and gaussian transforms are implemented
/// here, on top of the raw mt19937_64 stream, because std:: distribution
/// objects are not required to produce identical sequences across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two uniforms every other call.
  double gaussian();

  /// Uniform integer in [0, n). Rejection keeps the draw unbiased.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates shuffle driven by below(), so a seed fixes the permutation.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  void fill_gaussian(Mat& m);
  void fill_uniform(Mat& m, double lo, double hi);
  void fill_uniform(Vec& v, double lo, double hi);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a stream id into a base seed so that independent consumers derived
/// from one user-facing seed see decorrelated streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace sbgl
