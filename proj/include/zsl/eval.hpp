#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/tensor.hpp"

namespace zsl::eval {

struct EvalReport {
  std::map<int, double> per_class_acc;
  std::optional<double> top1_zsl;
  std::optional<double> acc_ts;
  std::optional<double> acc_tr;
  std::optional<double> harmonic_mean;
  std::string config_digest;
  std::uint64_t seed = 0;
};

bool operator==(const EvalReport& a, const EvalReport& b);

// Mean over classes of the within-class accuracy. Every truth must belong to
// `classes` and every class must have at least one truth instance.
double per_class_accuracy(const std::vector<int>& predictions,
                          const std::vector<int>& truths,
                          const std::vector<int>& classes);

// 2*ts*tr/(ts+tr); zero when both accuracies are zero.
double harmonic(double ts, double tr);

using Recognizer =
    std::function<int(const Matrix& x, const std::vector<int>& candidates)>;

// Unseen test instances against unseen candidates only; fills per_class_acc
// and top1_zsl.
EvalReport eval_zsl(const Recognizer& recognizer, const Dataset& ds);

// Both test splits against all classes; fills ts, tr and the harmonic mean.
EvalReport eval_gzsl(const Recognizer& recognizer, const Dataset& ds);

enum class ReportFormat { json, csv, svg };

// Writes <basename>.json / .csv / .svg into dir; bytes are deterministic for
// a given report.
void emit_report(const EvalReport& report, const std::string& dir,
                 const std::string& basename,
                 const std::set<ReportFormat>& formats);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace zsl::eval
