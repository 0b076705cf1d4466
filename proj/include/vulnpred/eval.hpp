#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vulnpred {

/// Positive class is label 1 (malware detected). fp is a false alarm (type I),
/// fn a miss (type II).
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationReport {
  ClassMetrics class0;
  ClassMetrics class1;
  AveragedMetrics macro;
  AveragedMetrics weighted;
  double accuracy = 0.0;
  /// Names of metrics that hit a zero denominator and were reported as 0.
  std::vector<std::string> zero_division;
};

ClassificationReport report(const ConfusionMatrix& cm);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  /// Starts at (+inf, 0, 0); one point per distinct score, descending.
  std::vector<RocPoint> points;
  double auc = 0.0;
};

RocCurve roc_auc(std::span<const int> y_true, std::span<const double> scores);

struct ErrorRates {
  double type_i = 0.0;   // fp / (fp + tn)
  double type_ii = 0.0;  // fn / (fn + tp), the critical one
};

ErrorRates error_rates(const ConfusionMatrix& cm);

nlohmann::ordered_json to_json(const ConfusionMatrix& cm);
nlohmann::ordered_json to_json(const ClassificationReport& r);
std::string format_confusion_csv(const std::vector<std::pair<std::string, ConfusionMatrix>>& rows);
std::string format_roc_csv(const RocCurve& curve);

struct NamedCurve {
  std::string name;
  RocCurve curve;
};

/// Standalone SVG: one polyline per curve, the chance diagonal, AUC legend.
std::string render_roc_svg(std::span<const NamedCurve> curves);
void emit_roc_svg(std::span<const NamedCurve> curves, const std::string& path);

}  // namespace vulnpred
