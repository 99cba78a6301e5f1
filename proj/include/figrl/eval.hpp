#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "figrl/styles.hpp"

namespace figrl {

struct Confusion {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  Confusion confusion;

  bool operator==(const Metrics&) const = default;
};

enum class F1Mode { positive_class, macro };

// Confusion counts with `positive` as the positive class, accuracy
// (tp+tn)/total and F1 2tp/(2tp+fp+fn), zero on an empty denominator.
// Throws std::invalid_argument on unequal or empty inputs.
Metrics evaluate(const std::vector<std::string>& predictions,
                 const std::vector<std::string>& golds,
                 const std::string& positive,
                 F1Mode f1_mode = F1Mode::positive_class);

enum class MetricSelector { accuracy, f1 };

// 4x4 gains, rows = SFT source style, cols = RLVR target style, in the
// fixed style order; gains(s,t) = metric(s->t) - metric(baseline t).
struct TransferGainMatrix {
  Eigen::Matrix4d gains;
  std::array<double, 4> baseline{};
  MetricSelector metric = MetricSelector::accuracy;
};

TransferGainMatrix transfer_gain_matrix(
    const std::map<std::pair<Style, Style>, Metrics>& results,
    const std::map<Style, Metrics>& baselines, MetricSelector selector);

struct DisagreementReport {
  long n_disagreed = 0;
  long a_correct = 0;
  long b_correct = 0;
  double a_win_rate = 0.0;  // a_correct / n_disagreed, 0 when empty
};

// Counts restricted to indices where the two prediction vectors differ.
DisagreementReport disagreement_report(const std::vector<std::string>& preds_a,
                                       const std::vector<std::string>& preds_b,
                                       const std::vector<std::string>& golds);

enum class ReportFormat { json, csv, markdown_table };

ReportFormat report_format_from_string(std::string_view name);

// json is lossless; csv and markdown render accuracy x100 and F1 at two
// decimal places, matching the conventional table layout.
void emit_report(const Metrics& metrics, std::ostream& sink, ReportFormat format);
void emit_report(const TransferGainMatrix& matrix, std::ostream& sink,
                 ReportFormat format);
void emit_report(const DisagreementReport& report, std::ostream& sink,
                 ReportFormat format);

}  // namespace figrl
