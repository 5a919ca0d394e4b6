#pragma once

#include "occlusion/edgelet.hpp"
#include "occlusion/image.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace occlusion {

inline constexpr double kPotentialFloor = 0.1;

/// Binary pairwise MRF. Unary tables are (g(0), g(1)); edge tables are indexed
/// table(e_n, e_m).
struct FactorGraph {
  struct Edge {
    std::size_t n = 0, m = 0;
    Eigen::Matrix2d table;
  };

  std::vector<Eigen::Array2d> unary;
  std::vector<Edge> edges;

  std::size_t size() const { return unary.size(); }
};

/// g = (1 - p_u, p_u); f(1,1) = max(p_c, kappa), f(0,0) = max(1 - p_c, kappa),
/// f(0,1) = f(1,0) = 0.5, every entry raised to `lambda`.
FactorGraph build_factor_graph(std::span<const double> p_unary,
                               std::span<const std::pair<std::size_t, std::size_t>> edges,
                               std::span<const double> p_pair, double lambda = 1.0,
                               double kappa = kPotentialFloor);

struct BpOptions {
  int max_iters = 50;
  double damping = 0.5;  ///< weight kept on the previous message
  double tol = 1e-4;     ///< on the largest message change
};

struct BpResult {
  std::vector<double> marginals;  ///< P(e_n = 1)
  int iterations = 0;
  bool converged = false;
};

/// Synchronous damped sum-product. Messages start uniform and are normalised to
/// sum to one after every update.
BpResult loopy_bp(const FactorGraph& graph, const BpOptions& options = {});

/// Exact marginals by enumerating all 2^N labellings (N <= 24).
std::vector<double> enumerate_marginals(const FactorGraph& graph);

/// Per-frame inference: each frame's instances form an independent MRF.
/// `pairs` index instances of `set` and must connect instances of one frame.
struct FrameInference {
  std::vector<double> p_bp;
  int frames_unconverged = 0;
};

FrameInference infer_frames(const EdgeletSet& set, std::span<const double> p_unary,
                            std::span<const std::pair<std::size_t, std::size_t>> pairs,
                            std::span<const double> p_pair, double lambda, const BpOptions& options,
                            int threads = 1);

/// Every instance of an edgelet reports the mean p_bp of its first min(T, lifetime)
/// instances. A window of one returns p_bp unchanged.
std::vector<double> temporal_smooth(const EdgeletSet& set, std::span<const double> p_bp, int window);

struct OcclusionMarginals {
  std::vector<double> p_raw, p_bp, p_smooth;
};

/// Per-frame maps with both pixels of every instance whose probability >= tau.
std::vector<Mask> threshold_boundaries(const EdgeletSet& set, std::span<const double> p, double tau);

/// Single-channel probability video: each boundary pixel holds the largest
/// probability among the instances touching it, 0 elsewhere.
ConfidenceVideo probability_splat(const EdgeletSet& set, std::span<const double> p);

/// Columns edgelet_a, edgelet_b, frame, p_raw, p_bp, p_smooth, in instance order.
std::string marginals_to_csv(const EdgeletSet& set, const OcclusionMarginals& m);

struct MarginalsTable {
  std::vector<EdgeletKey> keys;
  std::vector<int> frames;
  OcclusionMarginals marginals;
};

MarginalsTable marginals_from_csv(const std::string& text);

}  // namespace occlusion
