#pragma once

// Sampled holonomy groups and what can be decided from them.
//
// A sample is a finite set of transports around loops through a base point.
// It can certify a noncompact element (a boost) outright, but "precompact" is
// only ever relative to the loops that were sampled.

#include <lorhol/geometry.hpp>
#include <lorhol/transport.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lorhol {

inline constexpr double kFixedTolerance = 1e-6;    // τ_F
inline constexpr double kGramTolerance = 1e-8;     // τ_g
inline constexpr double kParallelResidual = 1e-5;  // path-independence certificate
inline constexpr double kLogRadius = 0.5;          // max |P - I| for a direct logarithm
inline constexpr double kAlgebraRankCut = 1e-6;
inline constexpr double kAlgebraRankFloor = 1e-7;  // absolute, for near-trivial samples

struct Generator {
  TransportResult transport;
  std::string descriptor;
  bool deck = false;
  int identification = -1;

  const Mat& matrix() const { return transport.matrix; }
};

struct HolonomySample {
  Vec base;
  Mat gram;              // g at base
  Vec time_orientation;  // at base
  std::vector<Generator> generators;
  std::vector<std::string> dropped;  // loops skipped, with the reason
  std::uint64_t seed = 0;
  int budget = 0;

  // A sample built from explicit matrices, e.g. a single boost.
  static HolonomySample synthetic(const Vec& base, const Mat& gram, const Vec& time_orientation,
                                  const std::vector<Mat>& matrices);
};

struct SampleOptions {
  std::vector<double> scales{0.2, 0.05, 0.01};  // fractions of the box width
  TransportOptions transport{};
  bool include_deck = true;
  std::vector<int> free_axes;  // loops move only along these axes; empty = all
};

// `budget` lassoed rectangle loops at seeded positions cycling through the
// scales, then one deck-closed loop per identification. Loop placement uses the
// random stream in a fixed order, so a larger budget extends a smaller one.
HolonomySample sample_holonomy(const ChartMetric& g, const Vec& base, int budget,
                               std::uint64_t seed, const SampleOptions& options = {});

struct FixedSubspace {
  Mat basis;                 // n x k, columns orthonormal in the coordinate dot product
  Mat gram_restricted;       // k x k
  Eigen::VectorXd singular_values;  // of the stacked (P_i - I), descending
  double invariance_residual = 0.0; // max_i |(P_i - I) b| over basis columns
  int dim() const { return static_cast<int>(basis.cols()); }
};

FixedSubspace fixed_subspace(const HolonomySample& s);

enum class VerdictKind { PrecompactTimelike, CausalOnly, NotPrecompact };

const char* to_string(VerdictKind k);

struct HolonomyVerdict {
  VerdictKind kind = VerdictKind::NotPrecompact;
  std::optional<TangentVec> witness;
  int fixed_dim = 0;
  std::vector<double> restricted_eigenvalues;  // of g on the fixed subspace, ascending
  double invariance_residual = 0.0;
  double max_eigenvalue_modulus = 0.0;         // over generators
  double max_metricity_defect = 0.0;           // max |P^T G P - G|
  double max_transport_error = 0.0;
  int generators = 0;
  int dropped = 0;
  int budget = 0;
};

HolonomyVerdict precompactness_verdict(const ChartMetric& g, const HolonomySample& s);

struct HaarAverage {
  TangentVec vector;
  bool converged = false;
  bool zero_average = false;
  double residual = 0.0;      // max_i |(P_i - I) v| / |v|
  long word_length = 0;       // length of the averaged words
  std::string mode;           // "exhaustive" or "markov"
  double orbit_max_norm = 0.0;  // max |h v0| / |v0| over seeded random words
};

// Average of h(v0) over words h in the generators and their inverses. When all
// (2K)^word_len words fit in `samples` the average over every word of length
// word_len is taken; otherwise the exact expectation over lazy random words is
// computed by repeated squaring of the one-step averaging operator, doubling
// the word length until the result is invariant or the length exceeds
// `samples`. `seed` drives the random-word orbit diagnostic.
HaarAverage haar_average_vector(const HolonomySample& s, const TangentVec& v0, int word_len,
                                long samples, std::uint64_t seed);

struct GridSpec {
  int per_axis = 5;
  std::vector<Interval> box;  // empty = the metric's working box

  std::vector<double> axis_values(const ChartMetric& g, int axis) const;
};

struct ParallelField {
  Vec base;
  Vec w;
  GridSpec grid;
  std::vector<Vec> nodes;
  std::vector<Vec> vectors;
  double residual = 0.0;  // max node deviation between two axis orderings, relative
  bool converged = true;

  long node_index(const std::vector<int>& multi) const;
};

ParallelField parallel_field_extend(const ChartMetric& g, const TangentVec& w, const GridSpec& grid);

struct ParallelSystem {
  LorFrame frame;  // V_1 timelike, the rest spacelike
  int k = 0;
  double orthonormality_residual = 0.0;  // max |g(V_i, V_j) - η_ij|
  HolonomyVerdict verdict;
};

// Throws PreconditionError unless the sample's verdict is precompact_timelike.
ParallelSystem orthonormal_parallel_system(const ChartMetric& g, const HolonomySample& s);

struct RelativeHolonomy {
  std::vector<int> held_axes;
  HolonomySample sample;
  FixedSubspace fixed;
  HolonomyVerdict verdict;
  double second_fundamental_form = 0.0;  // max |Γ^k_ab|, k held, a,b free
  std::optional<Vec> normal_section;     // normal part of the invariant timelike vector
  Mat normal_invariant_basis;            // invariant vectors projected to the normal space
};

RelativeHolonomy relative_holonomy(const ChartMetric& g, const std::vector<int>& held_axes,
                                   const Vec& base, int budget, std::uint64_t seed);

struct DeckSummary {
  std::string descriptor;
  Mat matrix;
  double deviation_from_identity = 0.0;
  double max_eigenvalue_modulus = 0.0;
};

struct CoveringReport {
  HolonomySample cover;
  HolonomySample quotient;
  double embedding_error = 0.0;  // max over cover generators of the best match
  bool embedded = false;
  std::vector<DeckSummary> deck_generators;
};

CoveringReport covering_compare(const ChartMetric& g, const Vec& base, int budget,
                                std::uint64_t seed);

struct AlgebraDimension {
  int dim = 0;
  std::vector<double> singular_values;
  std::vector<std::string> skipped;
};

AlgebraDimension holonomy_algebra_dim(const HolonomySample& s);

double max_eigenvalue_modulus(const Mat& m);

}  // namespace lorhol
