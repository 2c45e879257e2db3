#include "sbgl/types.hpp"

#include <cmath>
#include <numbers>

namespace sbgl {

const char* err_name(Err code) {
  switch (code) {
    case Err::InvalidArgument: return "InvalidArgument";
    case Err::InvalidRatio: return "InvalidRatio";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::IndexOutOfRange: return "IndexOutOfRange";
    case Err::DuplicateEdge: return "DuplicateEdge";
    case Err::RankTooLarge: return "RankTooLarge";
    case Err::MissingFactors: return "MissingFactors";
    case Err::EmptyInput: return "EmptyInput";
    case Err::EmptyBatch: return "EmptyBatch";
    case Err::EmptySplit: return "EmptySplit";
    case Err::DegenerateLabels: return "DegenerateLabels";
    case Err::TooManyEdges: return "TooManyEdges";
    case Err::Parse: return "Parse";
    case Err::Io: return "Io";
    case Err::Numeric: return "Numeric";
  }
  return "Unknown";
}

Error::Error(Err code, const std::string& message)
    : std::runtime_error(std::string(err_name(code)) + ": " + message), code_(code) {}

void raise(Err code, const std::string& message) { throw Error(code, message); }

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], keeping the log argument positive.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) raise(Err::InvalidArgument, "Rng::below requires n > 0");
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t draw = next_u64();
  while (draw >= limit) draw = next_u64();
  return draw % n;
}

void Rng::fill_gaussian(Mat& m) {
  for (index_t r = 0; r < m.rows(); ++r)
    for (index_t c = 0; c < m.cols(); ++c) m(r, c) = gaussian();
}

void Rng::fill_uniform(Mat& m, double lo, double hi) {
  for (index_t r = 0; r < m.rows(); ++r)
    for (index_t c = 0; c < m.cols(); ++c) m(r, c) = uniform(lo, hi);
}

void Rng::fill_uniform(Vec& v, double lo, double hi) {
  for (index_t i = 0; i < v.size(); ++i) v(i) = uniform(lo, hi);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace sbgl
