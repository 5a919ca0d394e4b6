#include "occlusion/forest.hpp"

#include "occlusion/csv.hpp"
#include "occlusion/error.hpp"
#include "occlusion/features.hpp"
#include "occlusion/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <random>

namespace occlusion {
namespace {

constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "occlusionbound-forest";

double children_impurity(int neg_l, int pos_l, int neg_r, int pos_r) {
  const double nl = neg_l + pos_l, nr = neg_r + pos_r;
  return 2.0 * neg_l * pos_l / nl + 2.0 * neg_r * pos_r / nr;
}

// Best threshold along one feature given its samples in ascending value order.
// Strict improvement keeps the lowest threshold among equal impurities; values
// within rounding of each other count as equal.
template <typename Value, typename Label>
void scan_feature(int feature, std::span<const std::uint32_t> order, Value value, Label label, int total_pos,
                  int min_leaf, SplitChoice& best) {
  const int n = static_cast<int>(order.size());
  const int total_neg = n - total_pos;
  int pos_l = 0;
  for (int i = 0; i + 1 < n; ++i) {
    pos_l += label(order[static_cast<std::size_t>(i)]);
    const int nl = i + 1;
    if (nl < min_leaf) continue;
    if (n - nl < min_leaf) break;
    const double lo = value(order[static_cast<std::size_t>(i)]);
    const double hi = value(order[static_cast<std::size_t>(i + 1)]);
    if (!(lo < hi)) continue;
    const double imp = children_impurity(nl - pos_l, pos_l, total_neg - (nl - pos_l), total_pos - pos_l);
    if (!best.valid || imp < best.impurity - 1e-12 * best.impurity) {
      double mid = lo + 0.5 * (hi - lo);
      if (!(mid < hi)) mid = lo;
      best = {true, feature, mid, imp};
    }
  }
}

std::vector<int> draw_bootstrap(std::mt19937_64& rng, std::size_t rows, double ratio) {
  std::uniform_int_distribution<std::size_t> pick(0, rows - 1);
  std::vector<int> counts(rows, 0);
  const auto draws = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(rows)));
  for (std::size_t i = 0; i < draws; ++i) ++counts[pick(rng)];
  return counts;
}

// Row indices of X ordered by each column, ties by row index.
std::vector<std::vector<std::uint32_t>> presort(const Eigen::MatrixXd& X) {
  std::vector<std::vector<std::uint32_t>> order(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& o = order[static_cast<std::size_t>(f)];
    o.resize(static_cast<std::size_t>(X.rows()));
    std::iota(o.begin(), o.end(), 0u);
    const double* col = X.col(f).data();
    std::stable_sort(o.begin(), o.end(), [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
  return order;
}

DecisionTree grow_tree(const Eigen::MatrixXd& X, std::span<const int> y, const ForestParams& params,
                       std::uint64_t tree_seed, const std::vector<std::vector<std::uint32_t>>& row_order) {
  const auto n_rows = static_cast<std::size_t>(X.rows());
  const int dim = static_cast<int>(X.cols());
  const int mtry = std::min(params.features_per_node, dim);
  std::mt19937_64 rng(tree_seed);
  const std::vector<int> counts = draw_bootstrap(rng, n_rows, params.bootstrap_ratio);

  // Samples are bootstrap draws laid out by ascending row; sorted[f] lists the
  // samples of every node contiguously, ascending in feature f.
  std::vector<std::uint32_t> sample_row;
  std::vector<std::uint32_t> first_sample(n_rows + 1, 0);
  for (std::size_t r = 0; r < n_rows; ++r) {
    first_sample[r] = static_cast<std::uint32_t>(sample_row.size());
    for (int c = 0; c < counts[r]; ++c) sample_row.push_back(static_cast<std::uint32_t>(r));
  }
  first_sample[n_rows] = static_cast<std::uint32_t>(sample_row.size());
  const std::size_t n = sample_row.size();
  std::vector<std::vector<std::uint32_t>> sorted(static_cast<std::size_t>(dim));
  for (int f = 0; f < dim; ++f) {
    auto& s = sorted[static_cast<std::size_t>(f)];
    s.reserve(n);
    for (std::uint32_t r : row_order[static_cast<std::size_t>(f)])
      for (std::uint32_t k = first_sample[r]; k < first_sample[r + 1]; ++k) s.push_back(k);
  }
  std::vector<std::uint8_t> label(n);
  for (std::size_t k = 0; k < n; ++k) label[k] = static_cast<std::uint8_t>(y[sample_row[k]]);
  std::vector<std::uint8_t> goes_left(n);
  std::vector<std::uint32_t> scratch(n);

  DecisionTree tree;
  tree.seed = tree_seed;
  std::vector<int> feature_pool(static_cast<std::size_t>(dim));
  std::vector<int> chosen(static_cast<std::size_t>(mtry));

  struct Task {
    int node;
    std::size_t begin, end;
    int depth;
  };
  std::vector<Task> stack{{0, 0, n, 0}};
  tree.nodes.emplace_back();
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    const std::size_t count = task.end - task.begin;
    int pos = 0;
    for (std::size_t i = task.begin; i < task.end; ++i) pos += label[sorted[0][i]];
    {
      TreeNode& node = tree.nodes[static_cast<std::size_t>(task.node)];
      node.positives = pos;
      node.negatives = static_cast<int>(count) - pos;
    }
    if (task.depth >= params.max_depth || pos == 0 || pos == static_cast<int>(count) ||
        static_cast<int>(count) < 2 * params.min_leaf)
      continue;

    std::iota(feature_pool.begin(), feature_pool.end(), 0);
    for (int i = 0; i < mtry; ++i) {
      std::uniform_int_distribution<int> d(i, dim - 1);
      std::swap(feature_pool[static_cast<std::size_t>(i)], feature_pool[static_cast<std::size_t>(d(rng))]);
      chosen[static_cast<std::size_t>(i)] = feature_pool[static_cast<std::size_t>(i)];
    }
    std::sort(chosen.begin(), chosen.end());
    SplitChoice split;
    for (int f : chosen) {
      const double* col = X.col(f).data();
      const std::span<const std::uint32_t> order(sorted[static_cast<std::size_t>(f)].data() + task.begin, count);
      scan_feature(
          f, order, [&](std::uint32_t k) { return col[sample_row[k]]; }, [&](std::uint32_t k) { return label[k]; },
          pos, params.min_leaf, split);
    }
    if (!split.valid) continue;

    const double* col = X.col(split.feature).data();
    std::size_t n_left = 0;
    for (std::size_t i = task.begin; i < task.end; ++i) {
      const std::uint32_t k = sorted[0][i];
      goes_left[k] = col[sample_row[k]] <= split.threshold;
      n_left += goes_left[k];
    }
    for (auto& s : sorted) {
      std::size_t l = task.begin, r = 0;
      for (std::size_t i = task.begin; i < task.end; ++i) {
        const std::uint32_t k = s[i];
        if (goes_left[k])
          s[l++] = k;
        else
          scratch[r++] = k;
      }
      std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(r), s.begin() + static_cast<std::ptrdiff_t>(l));
    }
    const std::size_t split_at = task.begin + n_left;
    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(task.node)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({left + 1, split_at, task.end, task.depth + 1});
    stack.push_back({left, task.begin, split_at, task.depth + 1});
  }
  return tree;
}

// Index of the leaf reached by x; fills `path` with the split features visited.
int descend(const DecisionTree& tree, std::span<const double> x, std::vector<int>* path = nullptr) {
  int i = 0;
  while (!tree.nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(i)];
    if (path) path->push_back(n.feature);
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

std::vector<double> row_of(const Eigen::MatrixXd& X, Eigen::Index r) {
  std::vector<double> v(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index c = 0; c < X.cols(); ++c) v[static_cast<std::size_t>(c)] = X(r, c);
  return v;
}

void check_training_data(const Eigen::MatrixXd& X, std::span<const int> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw TrainingError("forest: X and y differ in length");
  if (y.size() < 2) throw TrainingError("forest: need at least two samples");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw TrainingError("forest: labels must be 0 or 1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw TrainingError("forest: both classes must be present");
}

}  // namespace

void ForestParams::validate() const {
  if (trees <= 0 || features_per_node <= 0 || max_depth <= 0 || min_leaf <= 0 || !(bootstrap_ratio > 0.0))
    throw ParameterError("forest parameters must be positive");
}

double DecisionTree::leaf_fraction(std::span<const double> x) const {
  const TreeNode& leaf = nodes[static_cast<std::size_t>(descend(*this, x))];
  return static_cast<double>(leaf.positives) / static_cast<double>(leaf.positives + leaf.negatives);
}

int DecisionTree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
    }
  }
  return best;
}

bool ForestModel::operator==(const ForestModel& o) const { return serialize_model(*this) == serialize_model(o); }

std::vector<int> bootstrap_counts(std::uint64_t tree_seed, std::size_t rows, double ratio) {
  std::mt19937_64 rng(tree_seed);
  return draw_bootstrap(rng, rows, ratio);
}

SplitChoice best_split(const Eigen::MatrixXd& X, std::span<const int> y, std::span<const std::size_t> rows,
                       std::span<const int> features, int min_leaf) {
  std::vector<int> sorted_features(features.begin(), features.end());
  std::sort(sorted_features.begin(), sorted_features.end());
  int total_pos = 0;
  for (std::size_t r : rows) total_pos += y[r];
  SplitChoice best;
  std::vector<std::uint32_t> order(rows.size());
  for (int f : sorted_features) {
    const double* col = X.col(f).data();
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return col[rows[a]] < col[rows[b]]; });
    scan_feature(
        f, order, [&](std::uint32_t k) { return col[rows[k]]; }, [&](std::uint32_t k) { return y[rows[k]]; },
        total_pos, min_leaf, best);
  }
  return best;
}

ForestModel train_forest(const Eigen::MatrixXd& X, std::span<const int> y, const ForestParams& params,
                         std::vector<std::string> feature_names, int threads) {
  params.validate();
  check_training_data(X, y);
  ForestModel model;
  model.dim = static_cast<int>(X.cols());
  if (feature_names.empty())
    for (int i = 0; i < model.dim; ++i) feature_names.push_back("x" + std::to_string(i));
  if (static_cast<int>(feature_names.size()) != model.dim) throw SchemaError("forest: feature name count mismatch");
  model.feature_names = std::move(feature_names);
  model.params = params;
  model.training_rows = static_cast<std::size_t>(X.rows());
  model.trees.resize(static_cast<std::size_t>(params.trees));
  const auto row_order = presort(X);
  parallel_for(model.trees.size(), threads, [&](std::size_t i) {
    model.trees[i] = grow_tree(X, y, params, params.seed + i, row_order);
  });
  model.oob_votes = oob_vote_tallies(model, X, y);
  return model;
}

double predict_proba(const ForestModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.dim)
    throw SchemaError("predict: expected " + std::to_string(model.dim) + " features, got " + std::to_string(x.size()));
  double sum = 0.0;
  for (const DecisionTree& t : model.trees) sum += t.leaf_fraction(x);
  return sum / static_cast<double>(model.trees.size());
}

Eigen::VectorXd predict_proba(const ForestModel& model, const Eigen::MatrixXd& X, int threads) {
  if (X.cols() != model.dim)
    throw SchemaError("predict: expected " + std::to_string(model.dim) + " features, got " + std::to_string(X.cols()));
  Eigen::VectorXd out(X.rows());
  parallel_for(static_cast<std::size_t>(X.rows()), threads, [&](std::size_t r) {
    const auto row = row_of(X, static_cast<Eigen::Index>(r));
    out[static_cast<Eigen::Index>(r)] = predict_proba(model, row);
  });
  return out;
}

std::vector<double> oob_vote_tallies(const ForestModel& model, const Eigen::MatrixXd& X, std::span<const int> y) {
  if (static_cast<std::size_t>(X.rows()) != model.training_rows || X.cols() != model.dim)
    throw SchemaError("oob: data does not match the training matrix");
  std::vector<double> votes(static_cast<std::size_t>(model.dim), 0.0);
  std::vector<int> path;
  for (const DecisionTree& tree : model.trees) {
    const auto counts = bootstrap_counts(tree.seed, model.training_rows, model.params.bootstrap_ratio);
    for (std::size_t r = 0; r < counts.size(); ++r) {
      if (counts[r] != 0) continue;
      const auto x = row_of(X, static_cast<Eigen::Index>(r));
      path.clear();
      const TreeNode& leaf = tree.nodes[static_cast<std::size_t>(descend(tree, x, &path))];
      const int predicted = leaf.positives >= leaf.negatives ? 1 : 0;
      if (predicted != y[r]) continue;
      for (int f : path) votes[static_cast<std::size_t>(f)] += 1.0;
    }
  }
  return votes;
}

std::vector<double> oob_importance(const ForestModel& model, const Eigen::MatrixXd& X, std::span<const int> y) {
  bool any_oob = false;
  for (const DecisionTree& tree : model.trees) {
    const auto counts = bootstrap_counts(tree.seed, model.training_rows, model.params.bootstrap_ratio);
    any_oob = any_oob || std::find(counts.begin(), counts.end(), 0) != counts.end();
  }
  if (!any_oob) throw TrainingError("oob importance undefined: no out-of-bag samples");
  std::vector<double> votes = oob_vote_tallies(model, X, y);
  const double total = std::accumulate(votes.begin(), votes.end(), 0.0);
  if (total <= 0.0) throw TrainingError("oob importance undefined: no correct out-of-bag votes");
  for (double& v : votes) v /= total;
  return votes;
}

double oob_accuracy(const ForestModel& model, const Eigen::MatrixXd& X, std::span<const int> y) {
  std::vector<double> sum(model.training_rows, 0.0);
  std::vector<int> n(model.training_rows, 0);
  for (const DecisionTree& tree : model.trees) {
    const auto counts = bootstrap_counts(tree.seed, model.training_rows, model.params.bootstrap_ratio);
    for (std::size_t r = 0; r < counts.size(); ++r) {
      if (counts[r] != 0) continue;
      sum[r] += tree.leaf_fraction(row_of(X, static_cast<Eigen::Index>(r)));
      ++n[r];
    }
  }
  int correct = 0, seen = 0;
  for (std::size_t r = 0; r < sum.size(); ++r) {
    if (n[r] == 0) continue;
    ++seen;
    correct += ((sum[r] / n[r] >= 0.5) ? 1 : 0) == y[r];
  }
  if (seen == 0) throw TrainingError("oob accuracy undefined: no out-of-bag samples");
  return static_cast<double>(correct) / seen;
}

std::string serialize_model(const ForestModel& model) {
  using nlohmann::json;
  json trees = json::array();
  for (const DecisionTree& t : model.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         neg = json::array(), pos = json::array();
    for (const TreeNode& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      neg.push_back(n.negatives);
      pos.push_back(n.positives);
    }
    trees.push_back({{"seed", t.seed},   {"feature", feature}, {"threshold", threshold},
                     {"left", left},     {"right", right},     {"negatives", neg},
                     {"positives", pos}});
  }
  const ForestParams& p = model.params;
  json doc{{"format", kModelFormat},
           {"version", kModelVersion},
           {"dim", model.dim},
           {"feature_names", model.feature_names},
           {"params",
            {{"trees", p.trees},
             {"features_per_node", p.features_per_node},
             {"max_depth", p.max_depth},
             {"min_leaf", p.min_leaf},
             {"bootstrap_ratio", p.bootstrap_ratio},
             {"seed", p.seed}}},
           {"training_rows", model.training_rows},
           {"oob_votes", model.oob_votes},
           {"trees", trees}};
  return doc.dump() + "\n";
}

ForestModel deserialize_model(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: parse error: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kModelFormat) throw FormatError("model: unknown format tag");
    if (doc.at("version").get<int>() != kModelVersion)
      throw FormatError("model: version mismatch (expected " + std::to_string(kModelVersion) + ")");
    ForestModel m;
    m.dim = doc.at("dim").get<int>();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    const json& p = doc.at("params");
    m.params.trees = p.at("trees").get<int>();
    m.params.features_per_node = p.at("features_per_node").get<int>();
    m.params.max_depth = p.at("max_depth").get<int>();
    m.params.min_leaf = p.at("min_leaf").get<int>();
    m.params.bootstrap_ratio = p.at("bootstrap_ratio").get<double>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.training_rows = doc.at("training_rows").get<std::size_t>();
    m.oob_votes = doc.at("oob_votes").get<std::vector<double>>();
    for (const json& t : doc.at("trees")) {
      DecisionTree tree;
      tree.seed = t.at("seed").get<std::uint64_t>();
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto neg = t.at("negatives").get<std::vector<int>>();
      const auto pos = t.at("positives").get<std::vector<int>>();
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n || neg.size() != n || pos.size() != n || n == 0)
        throw FormatError("model: ragged tree arrays");
      for (std::size_t i = 0; i < n; ++i) {
        TreeNode node{feature[i], threshold[i], left[i], right[i], neg[i], pos[i]};
        if (!node.is_leaf() &&
            (node.feature >= m.dim || node.left <= static_cast<int>(i) || node.right <= static_cast<int>(i) ||
             node.left >= static_cast<int>(n) || node.right >= static_cast<int>(n)))
          throw FormatError("model: corrupt tree structure");
        if (node.is_leaf() && node.positives + node.negatives <= 0) throw FormatError("model: empty leaf");
        tree.nodes.push_back(node);
      }
      m.trees.push_back(std::move(tree));
    }
    if (m.trees.empty() || static_cast<int>(m.feature_names.size()) != m.dim ||
        static_cast<int>(m.oob_votes.size()) != m.dim)
      throw FormatError("model: inconsistent header");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

std::vector<std::size_t> balanced_rows(std::span<const int> y, double max_negative_ratio, std::uint64_t seed,
                                       std::span<const std::uint8_t> include) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!include.empty() && !include[i]) continue;
    (y[i] == 1 ? pos : neg).push_back(i);
  }
  const auto keep = static_cast<std::size_t>(max_negative_ratio * static_cast<double>(pos.size()));
  if (neg.size() > keep) {
    std::mt19937_64 rng(seed);
    std::shuffle(neg.begin(), neg.end(), rng);
    neg.resize(keep);
  }
  std::vector<std::size_t> out = pos;
  out.insert(out.end(), neg.begin(), neg.end());
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, std::span<const int> columns) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = X.col(columns[i]);
  return out;
}

PairDataset build_pairwise_dataset(const Eigen::MatrixXd& features, const EdgeletGraph& graph, std::span<const int> gt) {
  PairDataset d;
  for (std::size_t n = 0; n < graph.neighbors.size(); ++n)
    for (std::size_t m : graph.neighbors[n])
      if (n < m) d.pairs.emplace_back(n, m);
  const Eigen::Index dim = features.cols();
  d.X.resize(static_cast<Eigen::Index>(d.pairs.size()), 2 * dim);
  d.y.resize(d.pairs.size());
  for (std::size_t i = 0; i < d.pairs.size(); ++i) {
    const auto [n, m] = d.pairs[i];
    d.X.row(static_cast<Eigen::Index>(i)) << features.row(static_cast<Eigen::Index>(n)),
        features.row(static_cast<Eigen::Index>(m));
    d.y[i] = gt.empty() ? -1 : (gt[n] == 1 && gt[m] == 1 ? 1 : 0);
  }
  return d;
}

std::vector<int> pair_columns(std::span<const int> columns, int unary_dim) {
  std::vector<int> out(columns.begin(), columns.end());
  for (int c : columns) out.push_back(c + unary_dim);
  return out;
}

std::string pairs_to_csv(const PairDataset& data, const EdgeletSet& set) {
  std::string out;
  const auto& names = feature_names();
  if (data.X.cols() != 2 * kFeatureDim) throw SchemaError("pairs csv: expected 52 pair features");
  for (const char* side : {"n_", "m_"})
    for (const auto& name : names) out += side + name + ",";
  out += "n_a,n_b,m_a,m_b,frame,label\n";
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    for (Eigen::Index c = 0; c < data.X.cols(); ++c) out += csv::number(data.X(static_cast<Eigen::Index>(i), c)) + ",";
    const auto [n, m] = data.pairs[i];
    const EdgeletKey& kn = set.key_of(n);
    const EdgeletKey& km = set.key_of(m);
    out += std::to_string(kn.a) + "," + std::to_string(kn.b) + "," + std::to_string(km.a) + "," +
           std::to_string(km.b) + "," + std::to_string(set.instances[n].frame) + "," + std::to_string(data.y[i]) + "\n";
  }
  return out;
}

std::pair<Eigen::MatrixXd, std::vector<int>> pairs_from_csv(const std::string& text) {
  const auto rows = csv::lines(text);
  if (rows.empty()) throw FormatError("pairs csv: missing header");
  const auto header = csv::split(rows.front());
  const std::size_t width = 2 * kFeatureDim + 6;
  if (header.size() != width || header.front() != "n_" + feature_names().front())
    throw SchemaError("pairs csv: unexpected header");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size() - 1), 2 * kFeatureDim);
  std::vector<int> y;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = csv::split(rows[r]);
    if (cells.size() != width) throw FormatError("pairs csv: ragged row " + std::to_string(r));
    for (int c = 0; c < 2 * kFeatureDim; ++c)
      X(static_cast<Eigen::Index>(r - 1), c) = csv::to_double(cells[static_cast<std::size_t>(c)]);
    y.push_back(static_cast<int>(csv::to_int(cells.back())));
  }
  return {X, y};
}

}  // namespace occlusion
