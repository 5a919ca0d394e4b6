#include "occlusion/mrf.hpp"

#include "occlusion/csv.hpp"
#include "occlusion/error.hpp"
#include "occlusion/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace occlusion {
namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(what) + " probability outside [0,1]");
}

}  // namespace

FactorGraph build_factor_graph(std::span<const double> p_unary,
                               std::span<const std::pair<std::size_t, std::size_t>> edges,
                               std::span<const double> p_pair, double lambda, double kappa) {
  if (edges.size() != p_pair.size()) throw ValidationError("factor graph: one pairwise probability per edge");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("factor graph: lambda must be >= 0");
  FactorGraph g;
  g.unary.reserve(p_unary.size());
  for (double p : p_unary) {
    check_probability(p, "unary");
    g.unary.push_back(Eigen::Array2d(1.0 - p, p));
  }
  g.edges.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [n, m] = edges[i];
    if (n >= g.size() || m >= g.size() || n == m) throw ValidationError("factor graph: bad edge endpoints");
    const double pc = p_pair[i];
    check_probability(pc, "pairwise");
    Eigen::Matrix2d t;
    t << std::max(1.0 - pc, kappa), 0.5, 0.5, std::max(pc, kappa);
    g.edges.push_back({n, m, t.array().pow(lambda).matrix()});
  }
  return g;
}

BpResult loopy_bp(const FactorGraph& graph, const BpOptions& options) {
  const std::size_t n_vars = graph.size();
  const std::size_t n_edges = graph.edges.size();
  // Directed message 2*e carries n -> m, 2*e+1 carries m -> n.
  std::vector<std::vector<std::size_t>> incoming(n_vars);
  for (std::size_t e = 0; e < n_edges; ++e) {
    incoming[graph.edges[e].m].push_back(2 * e);
    incoming[graph.edges[e].n].push_back(2 * e + 1);
  }
  std::vector<Eigen::Array2d> msg(2 * n_edges, Eigen::Array2d::Constant(0.5));
  std::vector<Eigen::Array2d> next(msg.size());

  BpResult result;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    double change = 0.0;
    for (std::size_t d = 0; d < msg.size(); ++d) {
      const FactorGraph::Edge& edge = graph.edges[d / 2];
      const bool forward = d % 2 == 0;
      const std::size_t src = forward ? edge.n : edge.m;
      const std::size_t reverse = d ^ 1;
      Eigen::Array2d cavity = graph.unary[src];
      for (std::size_t in : incoming[src])
        if (in != reverse) cavity *= msg[in];
      // table(e_n, e_m): the source variable indexes rows going forward, columns going back.
      Eigen::Array2d out;
      if (forward)
        out = (edge.table.transpose() * cavity.matrix()).array();
      else
        out = (edge.table * cavity.matrix()).array();
      const double z = out.sum();
      if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("belief propagation: degenerate message");
      out /= z;
      next[d] = (1.0 - options.damping) * out + options.damping * msg[d];
      change = std::max(change, (next[d] - msg[d]).abs().maxCoeff());
    }
    msg.swap(next);
    result.iterations = iter + 1;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  if (n_edges == 0) result.converged = true;

  result.marginals.resize(n_vars);
  for (std::size_t v = 0; v < n_vars; ++v) {
    Eigen::Array2d b = graph.unary[v];
    for (std::size_t in : incoming[v]) b *= msg[in];
    const double z = b.sum();
    if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("belief propagation: degenerate belief");
    result.marginals[v] = b[1] / z;
  }
  return result;
}

std::vector<double> enumerate_marginals(const FactorGraph& graph) {
  const std::size_t n = graph.size();
  if (n > 24) throw ParameterError("enumeration limited to 24 variables");
  std::vector<double> on(n, 0.0);
  double total = 0.0;
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    double w = 1.0;
    for (std::size_t v = 0; v < n; ++v) w *= graph.unary[v][(s >> v) & 1u];
    for (const auto& e : graph.edges) w *= e.table((s >> e.n) & 1u, (s >> e.m) & 1u);
    total += w;
    for (std::size_t v = 0; v < n; ++v)
      if ((s >> v) & 1u) on[v] += w;
  }
  if (!(total > 0.0)) throw NumericalError("enumeration: zero partition function");
  for (double& p : on) p /= total;
  return on;
}

FrameInference infer_frames(const EdgeletSet& set, std::span<const double> p_unary,
                            std::span<const std::pair<std::size_t, std::size_t>> pairs,
                            std::span<const double> p_pair, double lambda, const BpOptions& options,
                            int threads) {
  if (p_unary.size() != set.instances.size()) throw ValidationError("infer: one unary probability per instance");
  if (pairs.size() != p_pair.size()) throw ValidationError("infer: one pairwise probability per pair");
  const auto frames = static_cast<std::size_t>(set.frames);
  std::vector<std::vector<std::size_t>> frame_pairs(frames);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [n, m] = pairs[i];
    const int f = set.instances.at(n).frame;
    if (set.instances.at(m).frame != f) throw ValidationError("infer: pair spans two frames");
    frame_pairs[static_cast<std::size_t>(f)].push_back(i);
  }
  FrameInference out;
  out.p_bp.assign(p_unary.size(), 0.0);
  std::vector<char> converged(frames, 1);
  parallel_for(frames, threads, [&](std::size_t f) {
    const auto& nodes = set.frame_instances[f];
    std::unordered_map<std::size_t, std::size_t> local;
    std::vector<double> pu;
    for (std::size_t i : nodes) {
      local.emplace(i, pu.size());
      pu.push_back(p_unary[i]);
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> pc;
    for (std::size_t k : frame_pairs[f]) {
      edges.emplace_back(local.at(pairs[k].first), local.at(pairs[k].second));
      pc.push_back(p_pair[k]);
    }
    const BpResult r = loopy_bp(build_factor_graph(pu, edges, pc, lambda), options);
    for (std::size_t j = 0; j < nodes.size(); ++j) out.p_bp[nodes[j]] = r.marginals[j];
    converged[f] = r.converged;
  });
  out.frames_unconverged = static_cast<int>(std::count(converged.begin(), converged.end(), 0));
  return out;
}

std::vector<double> temporal_smooth(const EdgeletSet& set, std::span<const double> p_bp, int window) {
  if (window < 1) throw ParameterError("temporal window must be >= 1");
  if (p_bp.size() != set.instances.size()) throw ValidationError("smooth: one probability per instance");
  // A one-frame window is per-frame inference: nothing is averaged or frozen.
  if (window == 1) return {p_bp.begin(), p_bp.end()};
  std::vector<double> out(p_bp.size());
  for (const Edgelet& e : set.edgelets) {
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(window), e.instances.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += p_bp[e.instances[k]];
    const double frozen = sum / static_cast<double>(n);
    for (std::size_t i : e.instances) out[i] = frozen;
  }
  return out;
}

std::vector<Mask> threshold_boundaries(const EdgeletSet& set, std::span<const double> p, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("threshold must lie in [0,1]");
  if (p.size() != set.instances.size()) throw ValidationError("threshold: one probability per instance");
  std::vector<Mask> maps;
  maps.reserve(static_cast<std::size_t>(set.frames));
  for (int t = 0; t < set.frames; ++t) maps.push_back(splat_instances(set, t, [&](std::size_t i) { return p[i] >= tau; }));
  return maps;
}

ConfidenceVideo probability_splat(const EdgeletSet& set, std::span<const double> p) {
  if (p.size() != set.instances.size()) throw ValidationError("splat: one probability per instance");
  ConfidenceVideo out(set.width, set.height, set.frames, 1);
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    const EdgeletInstance& inst = set.instances[i];
    float* data = out.plane(inst.frame, 0).data();
    const auto v = static_cast<float>(p[i]);
    for (const PixelPair& pr : inst.pairs) {
      data[pr.p] = std::max(data[pr.p], v);
      data[pr.q] = std::max(data[pr.q], v);
    }
  }
  return out;
}

std::string marginals_to_csv(const EdgeletSet& set, const OcclusionMarginals& m) {
  const std::size_t n = set.instances.size();
  if (m.p_raw.size() != n || m.p_bp.size() != n || m.p_smooth.size() != n)
    throw ValidationError("marginals csv: size mismatch");
  std::string out = "edgelet_a,edgelet_b,frame,p_raw,p_bp,p_smooth\n";
  for (std::size_t i = 0; i < n; ++i) {
    const EdgeletKey& k = set.key_of(i);
    out += std::to_string(k.a) + "," + std::to_string(k.b) + "," + std::to_string(set.instances[i].frame) + "," +
           csv::number(m.p_raw[i]) + "," + csv::number(m.p_bp[i]) + "," + csv::number(m.p_smooth[i]) + "\n";
  }
  return out;
}

MarginalsTable marginals_from_csv(const std::string& text) {
  const auto rows = csv::lines(text);
  if (rows.empty() || rows.front() != "edgelet_a,edgelet_b,frame,p_raw,p_bp,p_smooth")
    throw SchemaError("marginals csv: unexpected header");
  MarginalsTable t;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto c = csv::split(rows[r]);
    if (c.size() != 6) throw FormatError("marginals csv: ragged row " + std::to_string(r));
    t.keys.push_back({static_cast<std::uint32_t>(csv::to_int(c[0])), static_cast<std::uint32_t>(csv::to_int(c[1]))});
    t.frames.push_back(static_cast<int>(csv::to_int(c[2])));
    t.marginals.p_raw.push_back(csv::to_double(c[3]));
    t.marginals.p_bp.push_back(csv::to_double(c[4]));
    t.marginals.p_smooth.push_back(csv::to_double(c[5]));
  }
  return t;
}

}  // namespace occlusion
