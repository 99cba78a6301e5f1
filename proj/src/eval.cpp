#include "figrl/eval.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace figrl {

using nlohmann::json;

namespace {

double f1_from_confusion(long tp, long fp, long fn) {
  const long denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

// csv/markdown cells: accuracy-scaled metrics x100, F1 as-is.
std::string render_metric(double value, MetricSelector selector) {
  return selector == MetricSelector::accuracy ? fixed2(value * 100.0) : fixed2(value);
}

}  // namespace

Metrics evaluate(const std::vector<std::string>& predictions,
                 const std::vector<std::string>& golds,
                 const std::string& positive, F1Mode f1_mode) {
  if (predictions.size() != golds.size())
    throw std::invalid_argument("predictions and golds differ in length");
  if (predictions.empty())
    throw std::invalid_argument("cannot evaluate an empty prediction set");

  Metrics m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_pos = predictions[i] == positive;
    const bool gold_pos = golds[i] == positive;
    if (pred_pos && gold_pos)
      ++m.confusion.tp;
    else if (pred_pos && !gold_pos)
      ++m.confusion.fp;
    else if (!pred_pos && gold_pos)
      ++m.confusion.fn;
    else
      ++m.confusion.tn;
  }
  m.accuracy = static_cast<double>(m.confusion.tp + m.confusion.tn) /
               static_cast<double>(m.confusion.total());
  const double positive_f1 =
      f1_from_confusion(m.confusion.tp, m.confusion.fp, m.confusion.fn);
  if (f1_mode == F1Mode::positive_class) {
    m.f1 = positive_f1;
  } else {
    // Macro: mean of the positive-class F1 and the F1 with classes swapped.
    const double negative_f1 =
        f1_from_confusion(m.confusion.tn, m.confusion.fn, m.confusion.fp);
    m.f1 = 0.5 * (positive_f1 + negative_f1);
  }
  return m;
}

TransferGainMatrix transfer_gain_matrix(
    const std::map<std::pair<Style, Style>, Metrics>& results,
    const std::map<Style, Metrics>& baselines, MetricSelector selector) {
  const auto& styles = list_styles();
  auto pick = [selector](const Metrics& m) {
    return selector == MetricSelector::accuracy ? m.accuracy : m.f1;
  };

  TransferGainMatrix out;
  out.metric = selector;
  for (std::size_t t = 0; t < styles.size(); ++t) {
    auto base = baselines.find(styles[t].id);
    if (base == baselines.end())
      throw std::invalid_argument("missing baseline for target style " +
                                  styles[t].name);
    out.baseline[t] = pick(base->second);
  }
  for (std::size_t s = 0; s < styles.size(); ++s) {
    for (std::size_t t = 0; t < styles.size(); ++t) {
      auto cell = results.find({styles[s].id, styles[t].id});
      if (cell == results.end())
        throw std::invalid_argument("missing transfer cell " + styles[s].name +
                                    "->" + styles[t].name);
      out.gains(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) =
          pick(cell->second) - out.baseline[t];
    }
  }
  return out;
}

DisagreementReport disagreement_report(const std::vector<std::string>& preds_a,
                                       const std::vector<std::string>& preds_b,
                                       const std::vector<std::string>& golds) {
  if (preds_a.size() != preds_b.size() || preds_a.size() != golds.size())
    throw std::invalid_argument("prediction/gold vectors differ in length");

  DisagreementReport report;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (preds_a[i] == preds_b[i]) continue;
    ++report.n_disagreed;
    if (preds_a[i] == golds[i]) ++report.a_correct;
    if (preds_b[i] == golds[i]) ++report.b_correct;
  }
  report.a_win_rate = report.n_disagreed == 0
                          ? 0.0
                          : static_cast<double>(report.a_correct) /
                                static_cast<double>(report.n_disagreed);
  return report;
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "markdown" || name == "markdown-table")
    return ReportFormat::markdown_table;
  throw std::invalid_argument("unknown report format: " + std::string(name));
}

void emit_report(const Metrics& metrics, std::ostream& sink, ReportFormat format) {
  switch (format) {
    case ReportFormat::json:
      sink << json{{"accuracy", metrics.accuracy},
                   {"f1", metrics.f1},
                   {"confusion",
                    {{"tp", metrics.confusion.tp},
                     {"fp", metrics.confusion.fp},
                     {"tn", metrics.confusion.tn},
                     {"fn", metrics.confusion.fn}}}}
                  .dump()
           << '\n';
      return;
    case ReportFormat::csv:
      sink << "acc,f1\n"
           << fixed2(metrics.accuracy * 100.0) << ',' << fixed2(metrics.f1) << '\n';
      return;
    case ReportFormat::markdown_table:
      sink << "| Acc | F1 |\n|---|---|\n| " << fixed2(metrics.accuracy * 100.0)
           << " | " << fixed2(metrics.f1) << " |\n";
      return;
  }
}

void emit_report(const TransferGainMatrix& matrix, std::ostream& sink,
                 ReportFormat format) {
  const auto& styles = list_styles();
  switch (format) {
    case ReportFormat::json: {
      json gains = json::array();
      for (Eigen::Index s = 0; s < 4; ++s) {
        json row = json::array();
        for (Eigen::Index t = 0; t < 4; ++t) row.push_back(matrix.gains(s, t));
        gains.push_back(row);
      }
      sink << json{{"metric", matrix.metric == MetricSelector::accuracy ? "accuracy"
                                                                        : "f1"},
                   {"baseline", matrix.baseline},
                   {"gains", gains}}
                  .dump()
           << '\n';
      return;
    }
    case ReportFormat::csv: {
      sink << "source";
      for (const auto& s : styles) sink << ',' << s.name;
      sink << '\n';
      for (std::size_t s = 0; s < 4; ++s) {
        sink << styles[s].name;
        for (std::size_t t = 0; t < 4; ++t)
          sink << ','
               << render_metric(matrix.gains(static_cast<Eigen::Index>(s),
                                             static_cast<Eigen::Index>(t)),
                                matrix.metric);
        sink << '\n';
      }
      return;
    }
    case ReportFormat::markdown_table: {
      sink << "| source \\ target |";
      for (const auto& s : styles) sink << ' ' << s.name << " |";
      sink << "\n|---|---|---|---|---|\n";
      for (std::size_t s = 0; s < 4; ++s) {
        sink << "| " << styles[s].name << " |";
        for (std::size_t t = 0; t < 4; ++t)
          sink << ' '
               << render_metric(matrix.gains(static_cast<Eigen::Index>(s),
                                             static_cast<Eigen::Index>(t)),
                                matrix.metric)
               << " |";
        sink << '\n';
      }
      return;
    }
  }
}

void emit_report(const DisagreementReport& report, std::ostream& sink,
                 ReportFormat format) {
  switch (format) {
    case ReportFormat::json:
      sink << json{{"n_disagreed", report.n_disagreed},
                   {"a_correct", report.a_correct},
                   {"b_correct", report.b_correct},
                   {"a_win_rate", report.a_win_rate}}
                  .dump()
           << '\n';
      return;
    case ReportFormat::csv:
      sink << "disagreed,a_correct,b_correct,a_win_rate\n"
           << report.n_disagreed << ',' << report.a_correct << ','
           << report.b_correct << ',' << fixed1(report.a_win_rate * 100.0)
           << "%\n";
      return;
    case ReportFormat::markdown_table:
      sink << "| Disagreed | A correct | B correct | Win Rate (%) |\n"
           << "|---|---|---|---|\n"
           << "| " << report.n_disagreed << " | " << report.a_correct << " | "
           << report.b_correct << " | " << fixed1(report.a_win_rate * 100.0)
           << "% |\n";
      return;
  }
}

}  // namespace figrl
