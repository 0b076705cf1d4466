#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpred/matrix.hpp"

namespace vulnpred {

struct Fold {
  std::vector<std::size_t> train;       // ascending
  std::vector<std::size_t> validation;  // ascending
};

/// Disjoint, exhaustive validation folds whose sizes differ by at most one.
/// With labels, each class is shuffled and dealt round-robin so every fold
/// holds its share of both classes.
std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                              std::optional<std::span<const int>> stratify_labels = std::nullopt);

enum class Scoring { kAccuracy, kLogloss };

struct GridSpec {
  std::string family;
  /// Base parameters shared by every combination.
  nlohmann::ordered_json base_params = nlohmann::ordered_json::object();
  /// Parameter name -> candidate values; expanded with the last name varying fastest.
  std::vector<std::pair<std::string, std::vector<nlohmann::ordered_json>>> grid;
  std::size_t k = 5;
  Scoring scoring = Scoring::kAccuracy;
  bool stratified = true;
  std::uint64_t seed = 0;
  std::size_t n_threads = 1;
};

void validate(const GridSpec& spec);

/// Cartesian product of the grid values merged over base_params.
std::vector<nlohmann::ordered_json> expand_grid(const GridSpec& spec);

struct ComboResult {
  nlohmann::ordered_json params;
  std::vector<double> fold_scores;  // empty when failed
  double mean_score = 0.0;
  std::optional<std::string> error;
};

struct CvResult {
  std::vector<ComboResult> combos;  // grid order
  nlohmann::ordered_json best_params;
  double best_score = 0.0;
  std::size_t best_index = 0;
  Scoring scoring = Scoring::kAccuracy;
};

/// Failed combinations are recorded and skipped; ties keep the earliest.
CvResult grid_search(const Matrix& x, std::span<const int> y, const GridSpec& spec);

/// One row per combination per fold: combo,fold,params,score,error
std::string format_cv_csv(const CvResult& result);
nlohmann::ordered_json to_json(const CvResult& result);

std::string_view to_string(Scoring s);
Scoring scoring_from_string(std::string_view s);

}  // namespace vulnpred
