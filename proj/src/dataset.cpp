#include "figrl/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "figrl/grpo.hpp"

namespace figrl {

using nlohmann::json;

namespace {

std::string style_name(Style style) { return std::string(to_string(style)); }

json trace_to_json(const CotTrace& trace) {
  return json{{"steps", trace.steps},
              {"final_label", trace.final_label},
              {"raw", trace.raw}};
}

CotTrace trace_from_json(const json& j) {
  CotTrace trace;
  const auto& steps = j.at("steps");
  if (!steps.is_array() || steps.size() != 5)
    throw SchemaError("trace must carry exactly 5 steps", {});
  for (std::size_t k = 0; k < 5; ++k) trace.steps[k] = steps[k].get<std::string>();
  trace.final_label = j.at("final_label").get<std::string>();
  trace.raw = j.at("raw").get<std::string>();
  return trace;
}

json record_to_json(const DistilledRecord& record) {
  json j{{"sample_id", record.sample_id},
         {"style", style_name(record.style)},
         {"teacher_model_id", record.teacher_model_id},
         {"kept", record.kept},
         {"raw", record.raw}};
  j["trace"] = record.trace ? trace_to_json(*record.trace) : json(nullptr);
  j["reject_reason"] =
      record.reject_reason ? json(std::string(to_string(*record.reject_reason)))
                           : json(nullptr);
  return j;
}

DistilledRecord record_from_json(const json& j) {
  DistilledRecord record;
  record.sample_id = j.at("sample_id").get<std::string>();
  record.style = style_from_string(j.at("style").get<std::string>());
  record.teacher_model_id = j.at("teacher_model_id").get<std::string>();
  record.kept = j.at("kept").get<bool>();
  record.raw = j.at("raw").get<std::string>();
  if (!j.at("trace").is_null()) record.trace = trace_from_json(j.at("trace"));
  if (!j.at("reject_reason").is_null())
    record.reject_reason =
        reject_reason_from_string(j.at("reject_reason").get<std::string>());
  return record;
}

// Adapter helpers. Each returns the Samples produced by one row or
// records an issue for it.
struct RowContext {
  std::size_t line;  // 1-based
  std::vector<RowIssue>* issues;

  void fail(const std::string& message) const {
    issues->push_back({line, message});
  }
};

std::optional<std::string> get_string(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

std::optional<int> get_binary(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end()) return std::nullopt;
  if (it->is_number_integer()) {
    const int v = it->get<int>();
    if (v == 0 || v == 1) return v;
    return std::nullopt;
  }
  if (it->is_boolean()) return it->get<bool>() ? 1 : 0;
  return std::nullopt;
}

Split parse_split_tag(const json& row, const RowContext& ctx) {
  auto split = get_string(row, "split");
  if (!split) return Split::unspecified;
  if (*split == "train") return Split::train;
  if (*split == "test") return Split::test;
  ctx.fail("split must be 'train' or 'test'");
  return Split::unspecified;
}

void adapt_generic(const json& row, const IngestOptions& options,
                   const RowContext& ctx, std::vector<Sample>& out) {
  Sample sample;
  auto id = get_string(row, "id");
  if (!id) return ctx.fail("missing string field 'id'");
  sample.id = *id;

  auto style_field = get_string(row, "style");
  if (style_field) {
    try {
      sample.style = style_from_string(*style_field);
    } catch (const std::invalid_argument&) {
      return ctx.fail("unknown style '" + *style_field + "'");
    }
  } else if (options.style_hint) {
    sample.style = *options.style_hint;
  } else {
    return ctx.fail("missing 'style' field and no style hint given");
  }

  auto caption = get_string(row, "caption");
  if (!caption) return ctx.fail("missing string field 'caption'");
  sample.caption = *caption;
  sample.image_ref = get_string(row, "image").value_or("");

  auto label = get_string(row, "label");
  if (!label) return ctx.fail("missing gold label field 'label'");
  auto normalized = normalize_label(*label, style_info(sample.style));
  if (!normalized)
    return ctx.fail("label '" + *label + "' is not in the " +
                    style_name(sample.style) + " vocabulary");
  sample.gold_label = normalized.value();
  sample.split = parse_split_tag(row, ctx);
  out.push_back(std::move(sample));
}

void adapt_binary_style(const json& row, Style style, const char* label_key,
                        const RowContext& ctx, std::vector<Sample>& out) {
  const StyleInfo& info = style_info(style);
  Sample sample;
  sample.style = style;
  auto image = get_string(row, "image");
  auto id = get_string(row, "id");
  if (!id && !image) return ctx.fail("missing 'id' (or 'image') field");
  sample.id = id ? *id : *image;
  sample.image_ref = image.value_or("");

  auto text = get_string(row, "text");
  if (!text) return ctx.fail("missing string field 'text'");
  sample.caption = *text;

  auto label = get_binary(row, label_key);
  if (!label && std::string_view(label_key) != "label")
    label = get_binary(row, "label");
  if (!label)
    return ctx.fail(std::string("missing 0/1 gold label field '") + label_key + "'");
  sample.gold_label = *label == 1 ? info.positive_label : info.negative_label;
  sample.split = parse_split_tag(row, ctx);
  out.push_back(std::move(sample));
}

// Memotion-style ordinal scales, neutral class first.
const std::array<std::string_view, 4> kHumourLevels = {"not_funny", "funny",
                                                       "very_funny", "hilarious"};
const std::array<std::string_view, 4> kOffenseLevels = {
    "not_offensive", "slight", "very_offensive", "hateful_offensive"};

std::optional<int> ordinal_level(const json& row, const char* key,
                                 const std::array<std::string_view, 4>& levels) {
  auto value = get_string(row, key);
  if (!value) return std::nullopt;
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == *value) return static_cast<int>(i);
  return std::nullopt;
}

void adapt_memotion(const json& row, const IngestOptions& options,
                    const RowContext& ctx, std::vector<Sample>& out) {
  auto image = get_string(row, "image");
  auto id = get_string(row, "id");
  if (!id && !image) return ctx.fail("missing 'id' (or 'image') field");
  const std::string base_id = id ? *id : *image;

  auto text = get_string(row, "text");
  if (!text) return ctx.fail("missing string field 'text'");

  auto humour = ordinal_level(row, "humour", kHumourLevels);
  auto offense = ordinal_level(row, "offensive", kOffenseLevels);
  if (!humour)
    return ctx.fail("missing or unknown 'humour' level");
  if (!offense)
    return ctx.fail("missing or unknown 'offensive' level");

  const Split split = parse_split_tag(row, ctx);
  const std::string image_ref = image.value_or("");

  const StyleInfo& humor_info = style_info(Style::humor);
  out.push_back({base_id + "#humor", Style::humor, *text, image_ref,
                 *humour >= options.memotion_humor_threshold
                     ? humor_info.positive_label
                     : humor_info.negative_label,
                 split});
  const StyleInfo& offense_info = style_info(Style::offense);
  out.push_back({base_id + "#offense", Style::offense, *text, image_ref,
                 *offense >= options.memotion_offense_threshold
                     ? offense_info.positive_label
                     : offense_info.negative_label,
                 split});
}

}  // namespace

AdapterKind adapter_from_string(std::string_view name) {
  if (name == "generic-jsonl") return AdapterKind::generic_jsonl;
  if (name == "mmsd2-like") return AdapterKind::mmsd2_like;
  if (name == "memotion-like") return AdapterKind::memotion_like;
  if (name == "multimet-like") return AdapterKind::multimet_like;
  throw std::invalid_argument("unknown adapter: " + std::string(name));
}

std::string_view to_string(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::generic_jsonl:
      return "generic-jsonl";
    case AdapterKind::mmsd2_like:
      return "mmsd2-like";
    case AdapterKind::memotion_like:
      return "memotion-like";
    case AdapterKind::multimet_like:
      return "multimet-like";
  }
  return "unknown";
}

std::vector<Sample> ingest(const std::filesystem::path& path, AdapterKind adapter,
                           const IngestOptions& options) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<Sample> samples;
  std::vector<RowIssue> issues;
  std::set<std::string> seen_ids;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const RowContext ctx{i + 1, &issues};
    if (trim(lines[i]).empty()) continue;
    json row = json::parse(lines[i], nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      ctx.fail("not a JSON object");
      continue;
    }
    std::vector<Sample> row_samples;
    switch (adapter) {
      case AdapterKind::generic_jsonl:
        adapt_generic(row, options, ctx, row_samples);
        break;
      case AdapterKind::mmsd2_like:
        adapt_binary_style(row, Style::sarcasm, "label", ctx, row_samples);
        break;
      case AdapterKind::memotion_like:
        adapt_memotion(row, options, ctx, row_samples);
        break;
      case AdapterKind::multimet_like:
        adapt_binary_style(row, Style::metaphor, "metaphor", ctx, row_samples);
        break;
    }
    for (Sample& sample : row_samples) {
      if (!seen_ids.insert(sample.id).second) {
        ctx.fail("duplicate sample id '" + sample.id + "'");
        continue;
      }
      samples.push_back(std::move(sample));
    }
  }

  if (!issues.empty()) {
    std::ostringstream what;
    what << path.string() << ": " << issues.size() << " unmappable row(s); first at line "
         << issues.front().line << ": " << issues.front().message;
    throw SchemaError(what.str(), std::move(issues));
  }
  return samples;
}

SplitResult split(const std::vector<Sample>& samples, const SplitPolicy& policy) {
  SplitResult result;
  if (std::holds_alternative<ProvidedSplitPolicy>(policy)) {
    for (const Sample& sample : samples) {
      switch (sample.split) {
        case Split::train:
          result.train.push_back(sample);
          break;
        case Split::test:
          result.test.push_back(sample);
          break;
        case Split::unspecified:
          throw std::invalid_argument("sample " + sample.id +
                                      " has no split tag under the provided policy");
      }
    }
    return result;
  }

  const auto seeded = std::get<SeededSplitPolicy>(policy);
  // Stratify by gold label; draw within each stratum with one shared
  // deterministic stream, strata visited in sorted label order.
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < samples.size(); ++i)
    strata[samples[i].gold_label].push_back(i);

  std::vector<bool> in_train(samples.size(), false);
  Rng rng(seeded.seed);
  for (auto& [label, indices] : strata) {
    for (std::size_t i = indices.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(indices[i - 1], indices[j]);
    }
    const auto n_train = static_cast<std::size_t>(
        std::llround(0.8 * static_cast<double>(indices.size())));
    for (std::size_t k = 0; k < n_train; ++k) in_train[indices[k]] = true;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Sample tagged = samples[i];
    tagged.split = in_train[i] ? Split::train : Split::test;
    (in_train[i] ? result.train : result.test).push_back(std::move(tagged));
  }
  return result;
}

std::vector<Sample> fixed_budget_sample(
    const std::map<Style, std::vector<Sample>>& by_style, int total,
    std::uint64_t seed) {
  const auto& styles = list_styles();
  if (total <= 0 || total % static_cast<int>(styles.size()) != 0)
    throw std::invalid_argument("budget total " + std::to_string(total) +
                                " is not divisible by the style count");
  const int per_style = total / static_cast<int>(styles.size());

  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(total));
  Rng rng(seed);
  for (const StyleInfo& info : styles) {
    auto it = by_style.find(info.id);
    const std::size_t available = it == by_style.end() ? 0 : it->second.size();
    if (available < static_cast<std::size_t>(per_style))
      throw std::invalid_argument("style " + info.name + " has only " +
                                  std::to_string(available) + " samples; " +
                                  std::to_string(per_style) + " required");
    std::vector<std::size_t> indices(available);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    for (std::size_t i = indices.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(indices[i - 1], indices[j]);
    }
    for (int k = 0; k < per_style; ++k)
      out.push_back(it->second[indices[static_cast<std::size_t>(k)]]);
  }
  return out;
}

void write_corpus(const std::vector<DistilledRecord>& records,
                  const std::filesystem::path& path) {
  std::string content;
  content += json{{"schema", kCorpusSchemaName}, {"version", kCorpusSchemaVersion}}
                 .dump();
  content += '\n';
  for (const DistilledRecord& record : records) {
    content += record_to_json(record).dump();
    content += '\n';
  }
  write_file(path, content);
}

std::vector<DistilledRecord> read_corpus(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty())
    throw SchemaError(path.string() + ": missing corpus header line", {});

  json header = json::parse(lines[0], nullptr, false);
  if (header.is_discarded() || !header.is_object() ||
      header.value("schema", "") != kCorpusSchemaName)
    throw SchemaError(path.string() + ": line 1: not a corpus header", {{1, "bad header"}});
  if (header.value("version", -1) != kCorpusSchemaVersion)
    throw SchemaError(path.string() + ": unsupported corpus version " +
                          header.value("version", json(nullptr)).dump(),
                      {{1, "version mismatch"}});

  std::vector<DistilledRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded())
      throw SchemaError(path.string() + ": line " + std::to_string(i + 1) +
                            ": invalid JSON",
                        {{i + 1, "invalid JSON"}});
    try {
      records.push_back(record_from_json(j));
    } catch (const json::exception& e) {
      throw SchemaError(path.string() + ": line " + std::to_string(i + 1) + ": " +
                            e.what(),
                        {{i + 1, e.what()}});
    }
  }
  return records;
}

std::string record_to_json_line(const DistilledRecord& record) {
  return record_to_json(record).dump();
}

DistilledRecord record_from_json_line(const std::string& line) {
  return record_from_json(json::parse(line));
}

std::string sample_to_json_line(const Sample& sample) {
  json j{{"id", sample.id},
         {"style", style_name(sample.style)},
         {"caption", sample.caption},
         {"image", sample.image_ref},
         {"label", sample.gold_label}};
  if (sample.split != Split::unspecified)
    j["split"] = std::string(to_string(sample.split));
  return j.dump();
}

Sample sample_from_json_line(const std::string& line) {
  json j = json::parse(line);
  Sample sample;
  sample.id = j.at("id").get<std::string>();
  sample.style = style_from_string(j.at("style").get<std::string>());
  sample.caption = j.at("caption").get<std::string>();
  sample.image_ref = j.value("image", "");
  sample.gold_label = j.at("label").get<std::string>();
  sample.split = j.contains("split")
                     ? split_from_string(j.at("split").get<std::string>())
                     : Split::unspecified;
  return sample;
}

std::vector<Sample> read_samples(const std::filesystem::path& path) {
  std::vector<Sample> samples;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      samples.push_back(sample_from_json_line(lines[i]));
    } catch (const std::exception& e) {
      throw SchemaError(path.string() + ": line " + std::to_string(i + 1) + ": " +
                            e.what(),
                        {{i + 1, e.what()}});
    }
  }
  return samples;
}

void write_samples(const std::vector<Sample>& samples,
                   const std::filesystem::path& path) {
  std::string content;
  for (const Sample& sample : samples) {
    content += sample_to_json_line(sample);
    content += '\n';
  }
  write_file(path, content);
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::test:
      return "test";
    case Split::unspecified:
      return "unspecified";
  }
  return "unspecified";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  if (name == "unspecified") return Split::unspecified;
  throw std::invalid_argument("unknown split tag: " + std::string(name));
}

}  // namespace figrl
