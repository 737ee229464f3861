#include "dppml/error.hpp"
#include "dppml/random.hpp"

namespace dppml {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::IndexOutOfRange: return "index out of range";
    case ErrorCode::BadMagic: return "bad magic number";
    case ErrorCode::Truncated: return "truncated payload";
    case ErrorCode::CountMismatch: return "count mismatch";
    case ErrorCode::MalformedCsv: return "malformed csv";
    case ErrorCode::IoFailure: return "i/o failure";
    case ErrorCode::NotSymmetric: return "matrix not symmetric";
    case ErrorCode::IndefiniteKernel: return "indefinite kernel";
    case ErrorCode::ZeroVector: return "zero vector";
    case ErrorCode::TooLarge: return "problem too large";
    case ErrorCode::DegenerateDistribution: return "degenerate distribution";
    case ErrorCode::ExhaustedMass: return "sampling mass exhausted";
    case ErrorCode::NotPositiveDefinite: return "not positive definite";
    case ErrorCode::MissingCovariances: return "missing covariances";
    case ErrorCode::DisconnectedGraph: return "disconnected graph";
    case ErrorCode::NonPositiveEigenvalue: return "non-positive eigenvalue";
    case ErrorCode::IsolatedPoint: return "isolated point";
    case ErrorCode::NumericalFailure: return "numerical failure";
    case ErrorCode::MissingLabels: return "missing labels";
    case ErrorCode::InvalidConfig: return "invalid config";
  }
  return "unknown";
}

std::size_t draw_weighted(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  const double target = uniform01(rng) * total;
  double cumulative = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (cumulative > target) return i;
  }
  return last_positive;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return splitmix64(h ^ c);
}

}  // namespace dppml
