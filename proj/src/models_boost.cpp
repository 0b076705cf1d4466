#include "vulnpred/models_boost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vulnpred/error.hpp"
#include "vulnpred/model.hpp"
#include "vulnpred/models_linear.hpp"
#include "vulnpred/table.hpp"
#include "vulnpred/tune.hpp"

namespace vulnpred {

// ---------------------------------------------------------------------------
// Binning

std::size_t bin_index(std::span<const double> edges, double v) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

namespace {

std::vector<double> feature_edges(std::vector<double> col, std::size_t max_bin) {
  std::sort(col.begin(), col.end());
  std::vector<double> distinct = col;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> edges;
  if (distinct.size() <= max_bin) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      const double a = distinct[i];
      const double b = distinct[i + 1];
      double mid = a + (b - a) / 2.0;
      if (!(mid > a)) mid = b;
      edges.push_back(mid);
    }
    return edges;
  }
  const std::size_t n = col.size();
  for (std::size_t k = 1; k < max_bin; ++k) {
    const double e = col[k * n / max_bin];
    if (e > col.front() && (edges.empty() || e > edges.back())) edges.push_back(e);
  }
  return edges;
}

}  // namespace

BinnedMatrix apply_bins(const std::vector<std::vector<double>>& edges, const Matrix& x) {
  if (edges.size() != x.cols()) fail(ErrorKind::kContract, "apply_bins: feature count mismatch");
  BinnedMatrix b;
  b.rows = x.rows();
  b.cols = x.cols();
  b.edges = edges;
  b.bins.resize(b.rows * b.cols);
  for (std::size_t f = 0; f < b.cols; ++f) {
    for (std::size_t r = 0; r < b.rows; ++r) {
      b.bins[f * b.rows + r] = static_cast<std::uint16_t>(bin_index(edges[f], x(r, f)));
    }
  }
  return b;
}

BinnedMatrix bin_features(const Matrix& x, std::size_t max_bin) {
  if (max_bin < 2 || max_bin > 65535) fail(ErrorKind::kConfig, "max_bin must be in [2, 65535]");
  for (double v : x.values()) {
    if (!std::isfinite(v)) fail(ErrorKind::kContract, "bin_features: non-finite cell in X");
  }
  std::vector<std::vector<double>> edges(x.cols());
  std::vector<double> col(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t r = 0; r < x.rows(); ++r) col[r] = x(r, f);
    edges[f] = feature_edges(col, max_bin);
  }
  return apply_bins(edges, x);
}

// ---------------------------------------------------------------------------
// Loss pieces

GradHess grad_hess_logloss(std::span<const int> y, std::span<const double> scores) {
  if (y.size() != scores.size()) fail(ErrorKind::kContract, "grad_hess_logloss: length mismatch");
  GradHess out;
  out.g.resize(y.size());
  out.h.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = sigmoid(scores[i]);
    out.g[i] = p - y[i];
    out.h[i] = p * (1.0 - p);
  }
  return out;
}

namespace {

double soft_threshold(double G, double alpha) {
  if (G > alpha) return G - alpha;
  if (G < -alpha) return G + alpha;
  return 0.0;
}

}  // namespace

double leaf_weight(double G, double H, double l2_lambda, double l1_alpha) {
  const double denom = H + l2_lambda;
  if (!(denom > 0)) return 0.0;
  return -soft_threshold(G, l1_alpha) / denom;
}

double leaf_objective(double G, double H, double l2_lambda, double l1_alpha) {
  const double denom = H + l2_lambda;
  if (!(denom > 0)) return 0.0;
  const double t = soft_threshold(G, l1_alpha);
  return -0.5 * t * t / denom;
}

double split_gain(double GL, double HL, double GR, double HR, double l2_lambda, double l1_alpha) {
  return leaf_objective(GL + GR, HL + HR, l2_lambda, l1_alpha) -
         leaf_objective(GL, HL, l2_lambda, l1_alpha) - leaf_objective(GR, HR, l2_lambda, l1_alpha);
}

GossSample goss_sample(std::span<const double> g, double a_top, double b_rest, Rng& rng) {
  if (!(a_top >= 0 && a_top <= 1) || !(b_rest >= 0 && b_rest <= 1) || a_top + b_rest > 1 + 1e-12) {
    fail(ErrorKind::kConfig, "goss: need a_top, b_rest in [0,1] with a_top + b_rest <= 1");
  }
  const std::size_t n = g.size();
  GossSample out;
  if (a_top >= 1.0) {
    out.indices.resize(n);
    std::iota(out.indices.begin(), out.indices.end(), std::size_t{0});
    out.weights.assign(n, 1.0);
    return out;
  }
  if (b_rest <= 0.0) fail(ErrorKind::kConfig, "goss: b_rest = 0 with a_top < 1 samples nothing");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(g[a]) > std::abs(g[b]); });
  const auto top_n = std::min(n, static_cast<std::size_t>(std::floor(a_top * static_cast<double>(n) + 1e-9)));
  const auto rest_n = std::min(n - top_n, static_cast<std::size_t>(std::floor(b_rest * static_cast<double>(n) + 1e-9)));
  const double w = (1.0 - a_top) / b_rest;

  std::vector<std::pair<std::size_t, double>> picked;
  picked.reserve(top_n + rest_n);
  for (std::size_t i = 0; i < top_n; ++i) picked.emplace_back(order[i], 1.0);
  const std::size_t pool = n - top_n;
  for (std::size_t i = 0; i < rest_n; ++i) {
    const auto j = i + uniform_index(rng, pool - i);
    std::swap(order[top_n + i], order[top_n + j]);
    picked.emplace_back(order[top_n + i], w);
  }
  std::sort(picked.begin(), picked.end());
  for (const auto& [idx, weight] : picked) {
    out.indices.push_back(idx);
    out.weights.push_back(weight);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trees and model

double RegTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t RegTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const RegNode& n) { return n.feature < 0; }));
}

std::size_t RegTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

GbdtModel::GbdtModel(double base_score, std::vector<RegTree> trees, std::size_t n_features)
    : base_score_(base_score), trees_(std::move(trees)), n_features_(n_features) {
  for (const auto& t : trees_) {
    if (t.nodes.empty()) fail(ErrorKind::kContract, "gbdt: empty tree");
    for (const auto& n : t.nodes) {
      if (n.feature < 0) continue;
      const auto count = static_cast<int>(t.nodes.size());
      if (static_cast<std::size_t>(n.feature) >= n_features_ || n.left <= 0 || n.right <= 0 ||
          n.left >= count || n.right >= count) {
        fail(ErrorKind::kContract, "gbdt: malformed tree");
      }
    }
  }
}

double GbdtModel::decision(std::span<const double> x, std::optional<std::size_t> n_trees) const {
  const std::size_t m = std::min(trees_.size(), n_trees.value_or(trees_.size()));
  double s = base_score_;
  for (std::size_t t = 0; t < m; ++t) s += trees_[t].predict(x);
  return s;
}

std::vector<double> GbdtModel::predict_proba(const Matrix& x, std::optional<std::size_t> n_trees) const {
  if (x.cols() != n_features_) fail(ErrorKind::kContract, "gbdt: feature count mismatch");
  std::vector<double> p(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) p[r] = sigmoid(decision(x.row(r), n_trees));
  return p;
}

std::vector<double> GbdtModel::feature_importance() const {
  std::vector<double> imp(n_features_, 0.0);
  for (const auto& t : trees_) {
    for (const auto& n : t.nodes) {
      if (n.feature >= 0) imp[static_cast<std::size_t>(n.feature)] += n.gain;
    }
  }
  return imp;
}

std::vector<double> feature_importance(const GbdtModel& model) { return model.feature_importance(); }

void validate(const GbdtParams& p) {
  if (!(p.learning_rate > 0)) fail(ErrorKind::kConfig, "gbdt: learning_rate must be > 0");
  if (p.max_bin < 2 || p.max_bin > 65535) fail(ErrorKind::kConfig, "gbdt: max_bin must be in [2, 65535]");
  if (!(p.feature_fraction > 0 && p.feature_fraction <= 1)) {
    fail(ErrorKind::kConfig, "gbdt: feature_fraction must be in (0,1]");
  }
  if (!(p.l2_lambda >= 0) || !(p.l1_alpha >= 0) || !(p.min_split_gain >= 0) || !(p.min_child_weight >= 0)) {
    fail(ErrorKind::kConfig, "gbdt: regularization terms must be >= 0");
  }
  if (p.max_depth && *p.max_depth == 0) fail(ErrorKind::kConfig, "gbdt: max_depth must be >= 1");
  if (p.growth == Growth::kDepthWise && !p.max_depth) {
    fail(ErrorKind::kConfig, "gbdt: depth-wise growth needs max_depth");
  }
  if (p.growth == Growth::kLeafWise && p.num_leaves < 2) {
    fail(ErrorKind::kConfig, "gbdt: leaf-wise growth needs num_leaves >= 2");
  }
  if (p.eval_metrics.empty()) fail(ErrorKind::kConfig, "gbdt: eval_metrics must not be empty");
  if (const auto* g = std::get_if<GossSampling>(&p.row_sampling)) {
    if (!(g->a_top >= 0 && g->a_top <= 1) || !(g->b_rest >= 0 && g->b_rest <= 1) ||
        g->a_top + g->b_rest > 1 + 1e-12) {
      fail(ErrorKind::kConfig, "gbdt: goss needs a_top, b_rest in [0,1] with a_top + b_rest <= 1");
    }
    if (g->a_top < 1 && g->b_rest <= 0) fail(ErrorKind::kConfig, "gbdt: goss b_rest must be > 0");
  }
  if (const auto* b = std::get_if<BaggingSampling>(&p.row_sampling)) {
    if (!(b->fraction > 0 && b->fraction <= 1)) fail(ErrorKind::kConfig, "gbdt: bagging fraction must be in (0,1]");
    if (b->freq == 0) fail(ErrorKind::kConfig, "gbdt: bagging freq must be >= 1");
  }
}

namespace {

struct SplitChoice {
  std::size_t slot = 0;  // index into the tree's feature list
  std::size_t bin = 0;
  double gain = 0.0;
  double GL = 0.0, HL = 0.0;
};

struct OpenLeaf {
  std::size_t node = 0;
  std::vector<std::size_t> rows;
  double G = 0.0, H = 0.0;
  std::size_t depth = 0;
  std::vector<double> hist;  // (g, h) pairs per bin slot
  std::optional<SplitChoice> split;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& bx, const GbdtParams& p, std::span<const double> gw,
              std::span<const double> hw, std::vector<std::size_t> features)
      : bx_(bx), p_(p), gw_(gw), hw_(hw), features_(std::move(features)) {
    offsets_.reserve(features_.size());
    for (auto f : features_) {
      offsets_.push_back(total_bins_);
      total_bins_ += bx_.n_bins(f);
    }
  }

  RegTree build(std::vector<std::size_t> rows) {
    tree_ = RegTree{};
    OpenLeaf root;
    root.node = new_node();
    root.rows = std::move(rows);
    for (auto r : root.rows) {
      root.G += gw_[r];
      root.H += hw_[r];
    }
    root.hist = histogram(root.rows);
    root.split = find_split(root);

    if (p_.growth == Growth::kDepthWise) {
      std::vector<OpenLeaf> level;
      level.push_back(std::move(root));
      while (!level.empty()) {
        std::vector<OpenLeaf> next;
        for (auto& leaf : level) {
          if (!leaf.split) {
            close(leaf);
            continue;
          }
          auto [l, r] = split(leaf);
          next.push_back(std::move(l));
          next.push_back(std::move(r));
        }
        level = std::move(next);
      }
    } else {
      std::vector<OpenLeaf> open;
      open.push_back(std::move(root));
      std::size_t leaves = 1;
      while (leaves < p_.num_leaves) {
        std::size_t pick = open.size();
        for (std::size_t i = 0; i < open.size(); ++i) {
          if (!open[i].split) continue;
          if (pick == open.size() || open[i].split->gain > open[pick].split->gain) pick = i;
        }
        if (pick == open.size()) break;
        OpenLeaf leaf = std::move(open[pick]);
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        auto [l, r] = split(leaf);
        open.push_back(std::move(l));
        open.push_back(std::move(r));
        ++leaves;
      }
      for (auto& leaf : open) close(leaf);
    }
    return std::move(tree_);
  }

 private:
  std::size_t new_node() {
    tree_.nodes.emplace_back();
    return tree_.nodes.size() - 1;
  }

  std::vector<double> histogram(const std::vector<std::size_t>& rows) const {
    std::vector<double> hist(2 * total_bins_, 0.0);
    for (std::size_t k = 0; k < features_.size(); ++k) {
      const std::uint16_t* col = bx_.bins.data() + features_[k] * bx_.rows;
      double* h = hist.data() + 2 * offsets_[k];
      for (auto r : rows) {
        const std::size_t b = col[r];
        h[2 * b] += gw_[r];
        h[2 * b + 1] += hw_[r];
      }
    }
    return hist;
  }

  std::optional<SplitChoice> find_split(const OpenLeaf& leaf) const {
    if (p_.max_depth && leaf.depth >= *p_.max_depth) return std::nullopt;
    if (leaf.rows.size() < 2) return std::nullopt;
    std::optional<SplitChoice> best;
    for (std::size_t k = 0; k < features_.size(); ++k) {
      const std::size_t nb = bx_.n_bins(features_[k]);
      const double* h = leaf.hist.data() + 2 * offsets_[k];
      double GL = 0.0, HL = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        GL += h[2 * b];
        HL += h[2 * b + 1];
        const double GR = leaf.G - GL;
        const double HR = leaf.H - HL;
        if (HL < p_.min_child_weight || HR < p_.min_child_weight) continue;
        const double gain = split_gain(GL, HL, GR, HR, p_.l2_lambda, p_.l1_alpha);
        if (!best || gain > best->gain) best = SplitChoice{k, b, gain, GL, HL};
      }
    }
    if (!best || !(best->gain > p_.min_split_gain) || !(best->gain > 0)) return std::nullopt;
    return best;
  }

  void close(OpenLeaf& leaf) {
    RegNode& n = tree_.nodes[leaf.node];
    n.value = p_.learning_rate * leaf_weight(leaf.G, leaf.H, p_.l2_lambda, p_.l1_alpha);
    n.cover = leaf.H;
  }

  std::pair<OpenLeaf, OpenLeaf> split(OpenLeaf& leaf) {
    const SplitChoice s = *leaf.split;
    const std::size_t f = features_[s.slot];
    const std::uint16_t* col = bx_.bins.data() + f * bx_.rows;
    OpenLeaf l, r;
    for (auto row : leaf.rows) (col[row] <= s.bin ? l.rows : r.rows).push_back(row);
    l.G = s.GL;
    l.H = s.HL;
    r.G = leaf.G - s.GL;
    r.H = leaf.H - s.HL;
    l.depth = r.depth = leaf.depth + 1;
    OpenLeaf& small = l.rows.size() <= r.rows.size() ? l : r;
    OpenLeaf& large = l.rows.size() <= r.rows.size() ? r : l;
    small.hist = histogram(small.rows);
    large.hist = std::move(leaf.hist);
    for (std::size_t i = 0; i < large.hist.size(); ++i) large.hist[i] -= small.hist[i];
    l.split = find_split(l);
    r.split = find_split(r);
    l.node = new_node();
    r.node = new_node();
    RegNode& n = tree_.nodes[leaf.node];
    n.feature = static_cast<int>(f);
    n.threshold = bx_.edges[f][s.bin];
    n.left = static_cast<int>(l.node);
    n.right = static_cast<int>(r.node);
    n.gain = s.gain;
    n.cover = leaf.H;
    if (!l.split) l.hist.clear();
    if (!r.split) r.hist.clear();
    return {std::move(l), std::move(r)};
  }

  const BinnedMatrix& bx_;
  const GbdtParams& p_;
  std::span<const double> gw_;
  std::span<const double> hw_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> offsets_;
  std::size_t total_bins_ = 0;
  RegTree tree_;
};

double error_rate(std::span<const int> y, std::span<const double> scores) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int pred = sigmoid(scores[i]) >= 0.5 ? 1 : 0;
    if (pred != y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

double score_logloss(std::span<const int> y, std::span<const double> scores) {
  std::vector<double> p(scores.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(scores[i]);
  return logloss(y, p);
}

std::vector<std::size_t> draw_subset(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + uniform_index(rng, n - i);
    std::swap(all[i], all[j]);
  }
  all.resize(m);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

GbdtFit fit_gbdt(const Matrix& x, std::span<const int> y, const GbdtParams& params,
                 std::optional<EvalSet> eval_set) {
  validate(params);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (n == 0 || n != y.size()) fail(ErrorKind::kContract, "fit_gbdt: empty X or X/y length mismatch");
  if (params.early_stopping_rounds > 0 && !eval_set) {
    fail(ErrorKind::kContract, "fit_gbdt: early stopping needs an evaluation set");
  }
  if (eval_set && (eval_set->x.rows() != eval_set->y.size() || eval_set->x.cols() != p ||
                   eval_set->y.empty())) {
    fail(ErrorKind::kContract, "fit_gbdt: evaluation set shape mismatch");
  }
  double ones = 0.0;
  for (int v : y) {
    if (v != 0 && v != 1) fail(ErrorKind::kContract, "fit_gbdt: labels must be 0/1");
    ones += v;
  }
  if (ones == 0 || ones == static_cast<double>(n)) {
    fail(ErrorKind::kDegenerate, "fit_gbdt: training labels contain a single class");
  }
  const double prior = ones / static_cast<double>(n);
  const double base = std::log(prior / (1.0 - prior));

  const BinnedMatrix bx = bin_features(x, params.max_bin);
  std::vector<double> scores(n, base);
  std::vector<double> val_scores;
  if (eval_set) val_scores.assign(eval_set->x.rows(), base);

  Rng goss_rng(derive_seed(params.seed, 1));
  Rng feature_rng(derive_seed(params.seed, 2));
  std::optional<Rng> bag_rng;
  if (const auto* b = std::get_if<BaggingSampling>(&params.row_sampling)) bag_rng.emplace(b->seed);

  std::vector<RegTree> trees;
  BoostHistory history;
  history.metrics = params.eval_metrics;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_round = 0;
  std::vector<std::size_t> bag_rows;
  std::vector<double> gw(n), hw(n);
  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  const auto n_tree_features =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.feature_fraction * static_cast<double>(p) + 1e-9)));

  for (std::size_t round = 0; round < params.n_estimators; ++round) {
    const GradHess gh = grad_hess_logloss(y, scores);
    std::vector<std::size_t> rows;
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(hw.begin(), hw.end(), 0.0);
    if (const auto* goss = std::get_if<GossSampling>(&params.row_sampling)) {
      const GossSample s = goss_sample(gh.g, goss->a_top, goss->b_rest, goss_rng);
      rows = s.indices;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        gw[rows[i]] = gh.g[rows[i]] * s.weights[i];
        hw[rows[i]] = gh.h[rows[i]] * s.weights[i];
      }
    } else {
      if (const auto* bag = std::get_if<BaggingSampling>(&params.row_sampling)) {
        if (round % bag->freq == 0) {
          const auto m = std::max<std::size_t>(
              1, static_cast<std::size_t>(std::floor(bag->fraction * static_cast<double>(n) + 1e-9)));
          bag_rows = draw_subset(n, m, *bag_rng);
        }
        rows = bag_rows;
      } else {
        rows.resize(n);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      }
      for (auto r : rows) {
        gw[r] = gh.g[r];
        hw[r] = gh.h[r];
      }
    }
    std::vector<std::size_t> features =
        n_tree_features >= p ? all_features : draw_subset(p, n_tree_features, feature_rng);

    TreeBuilder builder(bx, params, gw, hw, std::move(features));
    RegTree tree = builder.build(std::move(rows));

    for (std::size_t r = 0; r < n; ++r) scores[r] += tree.predict(x.row(r));
    for (double s : scores) {
      if (!std::isfinite(s)) {
        fail(ErrorKind::kDivergence, "gbdt: non-finite scores at round " + std::to_string(round + 1));
      }
    }
    trees.push_back(std::move(tree));

    RoundMetrics m;
    m.train_error = error_rate(y, scores);
    m.train_logloss = score_logloss(y, scores);
    if (eval_set) {
      for (std::size_t r = 0; r < val_scores.size(); ++r) {
        val_scores[r] += trees.back().predict(eval_set->x.row(r));
      }
      m.val_error = error_rate(eval_set->y, val_scores);
      m.val_logloss = score_logloss(eval_set->y, val_scores);
      if (*m.val_logloss < best_val) {
        best_val = *m.val_logloss;
        best_round = round + 1;
      }
    }
    history.rounds.push_back(m);
    if (params.early_stopping_rounds > 0 && round + 1 - best_round >= params.early_stopping_rounds) {
      history.stopped_early = true;
      break;
    }
  }

  if (params.early_stopping_rounds > 0) {
    trees.resize(best_round);
    history.best_round = best_round;
  } else {
    history.best_round = trees.size();
  }
  return {GbdtModel(base, std::move(trees), p), std::move(history)};
}

std::string format_history_csv(const BoostHistory& history) {
  const bool want_error = std::find(history.metrics.begin(), history.metrics.end(), EvalMetric::kError) !=
                          history.metrics.end();
  const bool want_ll = std::find(history.metrics.begin(), history.metrics.end(), EvalMetric::kLogloss) !=
                       history.metrics.end();
  auto cell = [](bool want, std::optional<double> v) { return want && v ? format_number(*v) : std::string(); };
  std::string out = "round,train_error,train_logloss,val_error,val_logloss\n";
  for (std::size_t i = 0; i < history.rounds.size(); ++i) {
    const auto& r = history.rounds[i];
    out += std::to_string(i + 1) + "," + cell(want_error, r.train_error) + "," +
           cell(want_ll, r.train_logloss) + "," + cell(want_error, r.val_error) + "," +
           cell(want_ll, r.val_logloss) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stacking

void validate(const StackingSpec& spec) {
  if (spec.bases.size() < 2) fail(ErrorKind::kConfig, "stacking: at least two base learners required");
  if (spec.oof_folds < 2) fail(ErrorKind::kConfig, "stacking: oof_folds must be >= 2");
  if (!(spec.meta_holdout > 0 && spec.meta_holdout < 1)) {
    fail(ErrorKind::kConfig, "stacking: meta_holdout must be in (0,1)");
  }
  for (const auto& b : spec.bases) {
    if (b.family == "stacking") fail(ErrorKind::kConfig, "stacking: nested stacking is not supported");
  }
  validate(spec.meta);
}

StackingModel::StackingModel() = default;
StackingModel::StackingModel(StackingModel&&) noexcept = default;
StackingModel& StackingModel::operator=(StackingModel&&) noexcept = default;
StackingModel::~StackingModel() = default;

StackingModel::StackingModel(std::vector<std::unique_ptr<Classifier>> bases,
                             std::vector<std::optional<std::vector<std::size_t>>> features,
                             GbdtModel meta, BoostHistory meta_history)
    : bases_(std::move(bases)),
      features_(std::move(features)),
      meta_(std::move(meta)),
      meta_history_(std::move(meta_history)) {
  if (bases_.size() != features_.size() || meta_.n_features() != bases_.size()) {
    fail(ErrorKind::kContract, "stacking: base/meta shape mismatch");
  }
}

namespace {

Matrix base_view(const Matrix& x, const std::optional<std::vector<std::size_t>>& features) {
  if (!features) return x;
  for (auto f : *features) {
    if (f >= x.cols()) fail(ErrorKind::kConfig, "stacking: base feature index out of range");
  }
  return x.select_cols(*features);
}

template <typename F>
auto guarded(const std::string& family, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    fail(e.kind(), "stacking base '" + family + "' failed: " + e.what());
  } catch (const std::exception& e) {
    fail(ErrorKind::kTraining, "stacking base '" + family + "' failed: " + e.what());
  }
}

}  // namespace

Matrix StackingModel::base_outputs(const Matrix& x) const {
  Matrix out(x.rows(), bases_.size());
  for (std::size_t b = 0; b < bases_.size(); ++b) {
    const auto p = bases_[b]->predict_proba(base_view(x, features_[b]));
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, b) = p[r];
  }
  return out;
}

std::vector<double> StackingModel::predict_proba(const Matrix& x) const {
  return meta_.predict_proba(base_outputs(x));
}

Matrix stacking_oof(const Matrix& x, std::span<const int> y, const StackingSpec& spec) {
  validate(spec);
  if (x.rows() != y.size()) fail(ErrorKind::kContract, "stacking: X/y length mismatch");
  const auto folds = kfold_split(x.rows(), spec.oof_folds, derive_seed(spec.seed, 0x57AC), y);
  Matrix oof(x.rows(), spec.bases.size());
  for (std::size_t b = 0; b < spec.bases.size(); ++b) {
    const auto& base = spec.bases[b];
    const Matrix xb = base_view(x, base.features);
    guarded(base.family, [&] {
      for (const auto& fold : folds) {
        auto clf = make_classifier(base.family, base.params);
        const auto yt = gather(y, std::span<const std::size_t>(fold.train));
        clf->fit(xb.select_rows(fold.train), yt, std::nullopt);
        const auto p = clf->predict_proba(xb.select_rows(fold.validation));
        for (std::size_t i = 0; i < fold.validation.size(); ++i) oof(fold.validation[i], b) = p[i];
      }
      return 0;
    });
  }
  return oof;
}

StackingModel fit_stacking(const Matrix& x, std::span<const int> y, const StackingSpec& spec) {
  const Matrix oof = stacking_oof(x, y, spec);

  GbdtFit meta;
  if (spec.meta.early_stopping_rounds > 0) {
    SplitSpec hold;
    hold.test_fraction = spec.meta_holdout;
    hold.seed = derive_seed(spec.seed, 0x4E7A);
    const auto parts = split_indices(oof.rows(), y, hold);
    const Matrix xt = oof.select_rows(parts.train);
    const Matrix xv = oof.select_rows(parts.test);
    const auto yt = gather(y, std::span<const std::size_t>(parts.train));
    const auto yv = gather(y, std::span<const std::size_t>(parts.test));
    meta = fit_gbdt(xt, yt, spec.meta, EvalSet{xv, yv});
  } else {
    meta = fit_gbdt(oof, y, spec.meta);
  }

  std::vector<std::unique_ptr<Classifier>> bases;
  std::vector<std::optional<std::vector<std::size_t>>> features;
  for (const auto& base : spec.bases) {
    bases.push_back(guarded(base.family, [&] {
      auto clf = make_classifier(base.family, base.params);
      clf->fit(base_view(x, base.features), y, std::nullopt);
      return clf;
    }));
    features.push_back(base.features);
  }
  return StackingModel(std::move(bases), std::move(features), std::move(meta.model),
                       std::move(meta.history));
}

std::vector<double> feature_importance(const StackingModel& model) {
  return model.meta().feature_importance();
}

}  // namespace vulnpred
