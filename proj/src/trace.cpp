#include "figrl/trace.hpp"

#include <cctype>
#include <stdexcept>

namespace figrl {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct StepMarker {
  int number;
  std::size_t body_begin;  // offset just past the marker
};

// Matches "Step k:" at line start, tolerating the markdown bold the
// teacher templates use ("**Step k:**").
std::optional<StepMarker> match_step_marker(std::string_view text,
                                            std::size_t line_begin) {
  std::size_t pos = line_begin;
  if (text.substr(pos, 2) == "**") pos += 2;
  constexpr std::string_view kStep = "Step ";
  if (text.substr(pos, kStep.size()) != kStep) return std::nullopt;
  pos += kStep.size();
  std::size_t digits_begin = pos;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
    ++pos;
  if (pos == digits_begin || pos >= text.size() || text[pos] != ':')
    return std::nullopt;
  int number = 0;
  for (std::size_t i = digits_begin; i < pos; ++i) {
    number = number * 10 + (text[i] - '0');
    if (number > 99) return std::nullopt;
  }
  ++pos;  // consume ':'
  if (text.substr(pos, 2) == "**") pos += 2;
  return StepMarker{number, pos};
}

// Case-insensitive containment of `needle` in whitespace-collapsed,
// lowercased `haystack`.
bool contains_label(const std::string& haystack_normalized,
                    const std::string& needle) {
  return haystack_normalized.find(needle) != std::string::npos;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = false;
  for (char c : s) {
    if (is_space(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view to_string(ParseError error) {
  switch (error) {
    case ParseError::missing_steps:
      return "missing_steps";
    case ParseError::unparseable_label:
      return "unparseable_label";
    case ParseError::format_error:
      return "format_error";
  }
  return "unknown";
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::missing_steps:
      return "missing_steps";
    case RejectReason::unparseable_label:
      return "unparseable_label";
    case RejectReason::label_mismatch:
      return "label_mismatch";
  }
  return "unknown";
}

RejectReason reject_reason_from_string(std::string_view name) {
  if (name == "missing_steps") return RejectReason::missing_steps;
  if (name == "unparseable_label") return RejectReason::unparseable_label;
  if (name == "label_mismatch") return RejectReason::label_mismatch;
  throw std::invalid_argument("unknown reject reason: " + std::string(name));
}

Result<CotTrace, ParseError> parse_teacher_trace(const std::string& text,
                                                 const StyleInfo& style) {
  struct Found {
    int number;
    std::size_t body_begin;
    std::size_t marker_begin;
  };
  std::vector<Found> markers;
  std::size_t line_begin = 0;
  while (line_begin <= text.size()) {
    if (auto m = match_step_marker(text, line_begin);
        m && m->number >= 1 && m->number <= 5) {
      markers.push_back({m->number, m->body_begin, line_begin});
    }
    std::size_t nl = text.find('\n', line_begin);
    if (nl == std::string::npos) break;
    line_begin = nl + 1;
  }

  if (markers.size() != 5) return ParseError::missing_steps;
  for (int k = 0; k < 5; ++k) {
    if (markers[k].number != k + 1) return ParseError::missing_steps;
  }

  CotTrace trace;
  trace.raw = text;
  for (int k = 0; k < 5; ++k) {
    std::size_t end = (k + 1 < 5) ? markers[k + 1].marker_begin : text.size();
    trace.steps[k] = trim(
        std::string_view(text).substr(markers[k].body_begin,
                                      end - markers[k].body_begin));
    if (trace.steps[k].empty()) return ParseError::missing_steps;
  }

  const std::string step5 = collapse_whitespace(to_lower(trace.steps[4]));
  if (contains_label(step5, style.negative_label)) {
    trace.final_label = style.negative_label;
  } else if (contains_label(step5, style.positive_label)) {
    trace.final_label = style.positive_label;
  } else {
    return ParseError::unparseable_label;
  }
  return trace;
}

Result<TaggedOutput, ParseError> parse_tagged_output(const std::string& text) {
  constexpr std::string_view kThinkOpen = "<think>";
  constexpr std::string_view kThinkClose = "</think>";
  constexpr std::string_view kAnswerOpen = "<answer>";
  constexpr std::string_view kAnswerClose = "</answer>";

  auto find_single = [&text](std::string_view tag) -> std::optional<std::size_t> {
    std::size_t first = text.find(tag);
    if (first == std::string::npos) return std::nullopt;
    if (text.find(tag, first + 1) != std::string::npos) return std::nullopt;
    return first;
  };

  // None of the four tag literals is a substring of another, so
  // occurrence counting is unambiguous.
  auto think_open = find_single(kThinkOpen);
  auto think_close = find_single(kThinkClose);
  auto answer_open = find_single(kAnswerOpen);
  auto answer_close = find_single(kAnswerClose);
  if (!think_open || !think_close || !answer_open || !answer_close)
    return ParseError::format_error;
  if (!(*think_open < *think_close && *think_close < *answer_open &&
        *answer_open < *answer_close))
    return ParseError::format_error;

  auto whitespace_only = [&text](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      if (!is_space(text[i])) return false;
    return true;
  };
  std::size_t think_end = *think_close + kThinkClose.size();
  std::size_t answer_end = *answer_close + kAnswerClose.size();
  if (!whitespace_only(0, *think_open) ||
      !whitespace_only(think_end, *answer_open) ||
      !whitespace_only(answer_end, text.size()))
    return ParseError::format_error;

  TaggedOutput out;
  out.raw = text;
  out.think = trim(std::string_view(text).substr(
      *think_open + kThinkOpen.size(), *think_close - *think_open - kThinkOpen.size()));
  out.answer = trim(std::string_view(text).substr(
      *answer_open + kAnswerOpen.size(),
      *answer_close - *answer_open - kAnswerOpen.size()));
  return out;
}

Result<std::string, ParseError> normalize_label(const std::string& raw,
                                                const StyleInfo& style) {
  const std::string normalized = collapse_whitespace(to_lower(raw));
  if (normalized == style.positive_label) return std::string(style.positive_label);
  if (normalized == style.negative_label) return std::string(style.negative_label);
  return ParseError::unparseable_label;
}

FilterReport filter_corpus(
    const std::vector<std::pair<Sample, std::string>>& pairs) {
  FilterReport report;
  for (const auto& [sample, text] : pairs) {
    const StyleInfo& style = style_info(sample.style);
    auto gold = normalize_label(sample.gold_label, style);
    if (!gold)
      throw std::invalid_argument("sample " + sample.id +
                                  " carries a gold label outside the style vocabulary");
    auto parsed = parse_teacher_trace(text, style);
    if (!parsed) {
      RejectReason reason = parsed.error() == ParseError::missing_steps
                                ? RejectReason::missing_steps
                                : RejectReason::unparseable_label;
      if (reason == RejectReason::missing_steps)
        ++report.count_missing_steps;
      else
        ++report.count_unparseable_label;
      report.rejected.emplace_back(sample, reason);
      continue;
    }
    if (parsed.value().final_label != gold.value()) {
      ++report.count_label_mismatch;
      report.rejected.emplace_back(sample, RejectReason::label_mismatch);
      continue;
    }
    report.kept.emplace_back(sample, std::move(parsed).value());
  }
  return report;
}

std::string render_trace_text(const CotTrace& trace) {
  std::string out;
  for (int k = 0; k < 5; ++k) {
    out += "Step " + std::to_string(k + 1) + ": " + trace.steps[k];
    if (k + 1 < 5) out += '\n';
  }
  return out;
}

}  // namespace figrl
