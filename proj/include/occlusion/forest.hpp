#pragma once

#include "occlusion/edgelet.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace occlusion {

struct ForestParams {
  int trees = 105;
  int features_per_node = 11;  ///< clamped to the feature width
  int max_depth = 35;
  int min_leaf = 5;
  double bootstrap_ratio = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;  ///< x[feature] <= threshold goes left
  int left = -1, right = -1;
  int negatives = 0, positives = 0;  ///< bootstrap class counts reaching this node

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::uint64_t seed = 0;  ///< regenerates the bootstrap sample
  std::vector<TreeNode> nodes;

  /// Leaf positive fraction for one sample.
  double leaf_fraction(std::span<const double> x) const;
  int depth() const;
};

struct ForestModel {
  int dim = 0;
  std::vector<std::string> feature_names;
  ForestParams params;
  std::size_t training_rows = 0;
  std::vector<DecisionTree> trees;
  std::vector<double> oob_votes;  ///< raw per-feature tallies

  bool operator==(const ForestModel&) const;
};

/// Per-tree bootstrap multiplicities of the training rows.
std::vector<int> bootstrap_counts(std::uint64_t tree_seed, std::size_t rows, double ratio);

struct SplitChoice {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  ///< sum over children of 2*pos*neg/n (n-weighted Gini)
};

/// Exhaustive best Gini split over `features` for the given (possibly repeated)
/// rows. Both children must hold at least min_leaf rows. Ties go to the lowest
/// feature index, then the lowest threshold.
SplitChoice best_split(const Eigen::MatrixXd& X, std::span<const int> y, std::span<const std::size_t> rows,
                       std::span<const int> features, int min_leaf);

/// Rows are samples. Trees are independent given seed + tree index, so the
/// result does not depend on `threads`.
ForestModel train_forest(const Eigen::MatrixXd& X, std::span<const int> y, const ForestParams& params,
                         std::vector<std::string> feature_names = {}, int threads = 1);

/// Mean leaf positive fraction over all trees.
double predict_proba(const ForestModel& model, std::span<const double> x);
Eigen::VectorXd predict_proba(const ForestModel& model, const Eigen::MatrixXd& X, int threads = 1);

/// Out-of-bag vote share per feature: each correct out-of-bag prediction credits
/// every split feature on its path. Normalised to sum to one.
std::vector<double> oob_importance(const ForestModel& model, const Eigen::MatrixXd& X, std::span<const int> y);
std::vector<double> oob_vote_tallies(const ForestModel& model, const Eigen::MatrixXd& X, std::span<const int> y);

/// Accuracy of the out-of-bag ensemble vote (rows never out of bag are skipped).
double oob_accuracy(const ForestModel& model, const Eigen::MatrixXd& X, std::span<const int> y);

std::string serialize_model(const ForestModel& model);
ForestModel deserialize_model(const std::string& text);

/// All positives plus at most `max_negative_ratio` times as many negatives,
/// chosen uniformly with `seed`. Rows with include[i] == false are dropped first.
std::vector<std::size_t> balanced_rows(std::span<const int> y, double max_negative_ratio, std::uint64_t seed,
                                       std::span<const std::uint8_t> include = {});

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows);
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, std::span<const int> columns);

/// Adjacent instance pairs (n < m) with concatenated features and joint label.
struct PairDataset {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  Eigen::MatrixXd X;
  std::vector<int> y;  ///< 1 iff both instances are ON; -1 when ground truth is unknown
};

PairDataset build_pairwise_dataset(const Eigen::MatrixXd& features, const EdgeletGraph& graph,
                                   std::span<const int> gt);

/// Column indices of the concatenated pair matrix covering `columns` on both sides.
std::vector<int> pair_columns(std::span<const int> columns, int unary_dim);

std::string pairs_to_csv(const PairDataset& data, const EdgeletSet& set);
/// Returns the feature matrix and labels; identities are not needed for training.
std::pair<Eigen::MatrixXd, std::vector<int>> pairs_from_csv(const std::string& text);

}  // namespace occlusion
