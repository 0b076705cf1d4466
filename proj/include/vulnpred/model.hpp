#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpred/matrix.hpp"
#include "vulnpred/models_boost.hpp"
#include "vulnpred/models_linear.hpp"
#include "vulnpred/models_tree.hpp"

namespace vulnpred {

/// Binary classifier over an encoded matrix. Instances are created unfitted by
/// make_classifier, fitted once, then treated as immutable.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string_view family() const = 0;
  /// eval is only consulted by boosted models with early stopping.
  virtual void fit(const Matrix& x, std::span<const int> y, std::optional<EvalSet> eval) = 0;
  virtual std::vector<double> predict_proba(const Matrix& x) const = 0;

  /// Normalized parameters, defaults filled.
  virtual nlohmann::ordered_json params_json() const = 0;
  /// Learned state; throws when unfitted.
  virtual nlohmann::ordered_json state_json() const = 0;
  virtual void load_state(const nlohmann::ordered_json& state) = 0;

  virtual bool fitted() const = 0;
  /// Per-feature importance (total split gain); empty for models without one.
  virtual std::vector<double> feature_importance() const { return {}; }
  virtual const BoostHistory* history() const { return nullptr; }
};

const std::vector<std::string>& known_families();

/// Unknown keys or out-of-range values raise a config error.
std::unique_ptr<Classifier> make_classifier(std::string_view family, const nlohmann::ordered_json& params);

/// {"family", "params", "model"}
nlohmann::ordered_json to_json(const Classifier& model);
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::ordered_json& j);

/// 1 when p >= 0.5.
std::vector<int> predict_labels(std::span<const double> proba);

// Parameter (de)serialization, shared with the config layer.
LogRegParams logreg_params_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const LogRegParams& p);
TreeParams tree_params_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const TreeParams& p);
ForestParams forest_params_from_json(const nlohmann::ordered_json& j, bool extra_trees);
nlohmann::ordered_json to_json(const ForestParams& p);
GbdtParams gbdt_params_from_json(const nlohmann::ordered_json& j, Growth growth);
nlohmann::ordered_json to_json(const GbdtParams& p);
StackingSpec stacking_spec_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const StackingSpec& s);

nlohmann::ordered_json to_json(const DecisionTree& tree);
DecisionTree decision_tree_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const GbdtModel& model);
GbdtModel gbdt_model_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const BoostHistory& h);
BoostHistory boost_history_from_json(const nlohmann::ordered_json& j);

}  // namespace vulnpred
