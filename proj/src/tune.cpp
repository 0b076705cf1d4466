#include "vulnpred/tune.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "vulnpred/error.hpp"
#include "vulnpred/model.hpp"
#include "vulnpred/rng.hpp"
#include "vulnpred/table.hpp"

namespace vulnpred {

using ojson = nlohmann::ordered_json;

std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                              std::optional<std::span<const int>> stratify_labels) {
  if (k < 2) fail(ErrorKind::kConfig, "kfold: k must be >= 2");
  if (k > n) fail(ErrorKind::kSplit, "kfold: k=" + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
  Rng rng(seed);
  std::vector<std::size_t> order;
  order.reserve(n);
  if (stratify_labels) {
    const auto labels = *stratify_labels;
    if (labels.size() != n) fail(ErrorKind::kContract, "kfold: label count != n");
    for (int cls : {0, 1}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == cls) members.push_back(i);
      }
      if (!members.empty() && members.size() < k) {
        fail(ErrorKind::kSplit, "kfold: class " + std::to_string(cls) + " has " +
                                    std::to_string(members.size()) + " rows, fewer than k=" + std::to_string(k));
      }
      deterministic_shuffle(members.begin(), members.end(), rng);
      order.insert(order.end(), members.begin(), members.end());
    }
    if (order.size() != n) fail(ErrorKind::kContract, "kfold: labels must be 0/1");
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    deterministic_shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::size_t> fold_of(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold_of[order[pos]] = pos % k;
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].validation : folds[f].train).push_back(i);
  }
  return folds;
}

std::string_view to_string(Scoring s) { return s == Scoring::kAccuracy ? "accuracy" : "logloss"; }

Scoring scoring_from_string(std::string_view s) {
  if (s == "accuracy") return Scoring::kAccuracy;
  if (s == "logloss") return Scoring::kLogloss;
  fail(ErrorKind::kConfig, "unknown scoring '" + std::string(s) + "'");
}

void validate(const GridSpec& spec) {
  if (spec.k < 2) fail(ErrorKind::kConfig, "grid: k must be >= 2");
  if (spec.grid.empty()) fail(ErrorKind::kConfig, "grid: at least one parameter required");
  for (const auto& [name, values] : spec.grid) {
    if (values.empty()) fail(ErrorKind::kConfig, "grid: parameter '" + name + "' has no candidate values");
  }
  if (!spec.base_params.is_object()) fail(ErrorKind::kConfig, "grid: base_params must be an object");
}

std::vector<ojson> expand_grid(const GridSpec& spec) {
  validate(spec);
  std::vector<ojson> out{spec.base_params};
  for (const auto& [name, values] : spec.grid) {
    std::vector<ojson> next;
    next.reserve(out.size() * values.size());
    for (const auto& partial : out) {
      for (const auto& v : values) {
        ojson c = partial;
        c[name] = v;
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

CvResult grid_search(const Matrix& x, std::span<const int> y, const GridSpec& spec) {
  const auto combos = expand_grid(spec);
  if (x.rows() != y.size()) fail(ErrorKind::kContract, "grid_search: X/y length mismatch");
  const auto folds = spec.stratified ? kfold_split(x.rows(), spec.k, spec.seed, y)
                                     : kfold_split(x.rows(), spec.k, spec.seed);
  std::vector<Matrix> xt, xv;
  std::vector<std::vector<int>> yt, yv;
  for (const auto& f : folds) {
    xt.push_back(x.select_rows(f.train));
    xv.push_back(x.select_rows(f.validation));
    yt.push_back(gather(y, std::span<const std::size_t>(f.train)));
    yv.push_back(gather(y, std::span<const std::size_t>(f.validation)));
  }

  const std::size_t k = folds.size();
  const std::size_t tasks = combos.size() * k;
  std::vector<double> scores(tasks, 0.0);
  std::vector<std::optional<std::string>> errors(tasks);

  auto run_task = [&](std::size_t t) {
    const std::size_t c = t / k;
    const std::size_t f = t % k;
    try {
      auto clf = make_classifier(spec.family, combos[c]);
      clf->fit(xt[f], yt[f], std::nullopt);
      const auto p = clf->predict_proba(xv[f]);
      if (spec.scoring == Scoring::kAccuracy) {
        const auto labels = predict_labels(p);
        std::size_t hit = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) hit += labels[i] == yv[f][i];
        scores[t] = static_cast<double>(hit) / static_cast<double>(labels.size());
      } else {
        scores[t] = logloss(yv[f], p);
      }
    } catch (const std::exception& e) {
      errors[t] = e.what();
    }
  };

  const std::size_t n_threads = std::clamp<std::size_t>(spec.n_threads, 1, tasks);
  if (n_threads == 1) {
    for (std::size_t t = 0; t < tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) run_task(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  CvResult result;
  result.scoring = spec.scoring;
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    ComboResult cr;
    cr.params = combos[c];
    for (std::size_t f = 0; f < k; ++f) {
      if (errors[c * k + f]) {
        cr.error = "fold " + std::to_string(f) + ": " + *errors[c * k + f];
        break;
      }
    }
    if (!cr.error) {
      cr.fold_scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(c * k),
                            scores.begin() + static_cast<std::ptrdiff_t>((c + 1) * k));
      double sum = 0.0;
      for (double s : cr.fold_scores) sum += s;
      cr.mean_score = sum / static_cast<double>(k);
      const bool better = !best || (spec.scoring == Scoring::kAccuracy
                                        ? cr.mean_score > result.combos[*best].mean_score
                                        : cr.mean_score < result.combos[*best].mean_score);
      if (better) best = c;
    }
    result.combos.push_back(std::move(cr));
  }
  if (!best) {
    fail(ErrorKind::kTuning, "grid search: all " + std::to_string(combos.size()) +
                                 " combinations failed; first error: " + result.combos.front().error.value_or(""));
  }
  result.best_index = *best;
  result.best_params = result.combos[*best].params;
  result.best_score = result.combos[*best].mean_score;
  return result;
}

std::string format_cv_csv(const CvResult& result) {
  std::string out = "combo,fold,params,score,error\n";
  for (std::size_t c = 0; c < result.combos.size(); ++c) {
    const auto& cr = result.combos[c];
    const std::string params = csv_escape(cr.params.dump());
    if (cr.error) {
      out += std::to_string(c) + ",," + params + ",," + csv_escape(*cr.error) + "\n";
      continue;
    }
    for (std::size_t f = 0; f < cr.fold_scores.size(); ++f) {
      out += std::to_string(c) + "," + std::to_string(f) + "," + params + "," + format_number(cr.fold_scores[f]) +
             ",\n";
    }
  }
  return out;
}

ojson to_json(const CvResult& result) {
  ojson j;
  j["scoring"] = std::string(to_string(result.scoring));
  j["best_index"] = result.best_index;
  j["best_params"] = result.best_params;
  j["best_score"] = result.best_score;
  auto& combos = j["combos"] = ojson::array();
  for (const auto& cr : result.combos) {
    ojson cj{{"params", cr.params}};
    if (cr.error) {
      cj["error"] = *cr.error;
    } else {
      cj["mean_score"] = cr.mean_score;
      cj["fold_scores"] = cr.fold_scores;
    }
    combos.push_back(std::move(cj));
  }
  return j;
}

}  // namespace vulnpred
