#include "figrl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

#include <json.hpp>

#include "figrl/dataset.hpp"
#include "figrl/eval.hpp"
#include "figrl/io_util.hpp"
#include "figrl/reward.hpp"
#include "figrl/serialize.hpp"
#include "figrl/trace.hpp"
#include "figrl/version.hpp"

namespace figrl {

using nlohmann::json;

namespace {

constexpr std::uint64_t kBasePolicySalt = 0x5eedba5e00c0ffeeull;

// Relative artifact names inside out_dir.
constexpr const char* kTracesFile = "traces.jsonl";
constexpr const char* kKeptCorpus = "corpus_kept.jsonl";
constexpr const char* kRejectCorpus = "corpus_rejects.jsonl";
constexpr const char* kFilterStats = "filter_stats.json";
constexpr const char* kSftCorpus = "sft_corpus.jsonl";
constexpr const char* kSftPolicy = "policy_sft.json";
constexpr const char* kSftReport = "sft_report.json";
constexpr const char* kGrpoPolicy = "policy_grpo.json";
constexpr const char* kGrpoReport = "grpo_report.json";
constexpr const char* kMetrics = "metrics.json";
constexpr const char* kDisagreement = "disagreement.json";
constexpr const char* kManifest = "manifest.json";

bool mode_has_sft(RunMode mode) {
  return mode == RunMode::sft_binary || mode == RunMode::sft_cot ||
         mode == RunMode::sft_then_grpo;
}

bool mode_has_grpo(RunMode mode) {
  return mode == RunMode::grpo_only || mode == RunMode::sft_then_grpo;
}

std::vector<std::string> default_stages(RunMode mode) {
  std::vector<std::string> stages = {"distill", "filter", "export_sft"};
  if (mode_has_sft(mode)) stages.push_back("toy_sft");
  if (mode_has_grpo(mode)) stages.push_back("toy_grpo");
  stages.push_back("eval");
  return stages;
}

std::string single_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  return text;
}

}  // namespace

RunMode run_mode_from_string(std::string_view name) {
  if (name == "zero_shot") return RunMode::zero_shot;
  if (name == "sft_binary") return RunMode::sft_binary;
  if (name == "sft_cot") return RunMode::sft_cot;
  if (name == "grpo_only") return RunMode::grpo_only;
  if (name == "sft_then_grpo") return RunMode::sft_then_grpo;
  throw std::invalid_argument("unknown run mode: " + std::string(name));
}

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::zero_shot:
      return "zero_shot";
    case RunMode::sft_binary:
      return "sft_binary";
    case RunMode::sft_cot:
      return "sft_cot";
    case RunMode::grpo_only:
      return "grpo_only";
    case RunMode::sft_then_grpo:
      return "sft_then_grpo";
  }
  return "unknown";
}

std::string RunConfig::canonical_json() const {
  json datasets_json = json::object();
  for (const auto& [style, file] : datasets)
    datasets_json[std::string(to_string(style))] = file.generic_string();
  json style_names = json::array();
  for (Style style : styles) style_names.push_back(std::string(to_string(style)));

  json j{{"seed", seed},
         {"out_dir", out_dir.generic_string()},
         {"stages", stages},
         {"styles", style_names},
         {"combined", combined},
         {"datasets", datasets_json},
         {"mode", std::string(to_string(mode))},
         {"gateway",
          {{"mode", gateway.mode},
           {"endpoint", gateway.endpoint},
           {"teacher_model_id", gateway.teacher_model_id},
           {"temperature", gateway.temperature},
           {"max_tokens", gateway.max_tokens},
           {"max_in_flight", gateway.max_in_flight}}},
         {"toy", {{"n", toy.n}, {"init_scale", toy.init_scale}}},
         {"grpo",
          {{"group_size", grpo.group_size},
           {"beta", grpo.beta},
           {"learning_rate", grpo.learning_rate},
           {"epochs", grpo.epochs},
           {"epsilon_std", grpo.epsilon_std}}},
         {"sft",
          {{"epochs", sft.epochs},
           {"learning_rate", sft.learning_rate},
           {"cosine_schedule", sft.cosine_schedule}}}};
  j["budget_total"] = budget_total ? json(*budget_total) : json(nullptr);
  return j.dump();
}

RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw SchemaError("run config is not a JSON object", {});

  RunConfig config;
  config.seed = j.value("seed", std::uint64_t{0});
  if (!j.contains("out_dir"))
    throw SchemaError("run config is missing 'out_dir'", {});
  config.out_dir = base_dir / j.at("out_dir").get<std::string>();
  if (j.contains("mode"))
    config.mode = run_mode_from_string(j.at("mode").get<std::string>());

  if (j.contains("styles")) {
    const json& styles = j.at("styles");
    if (styles.is_string() && styles.get<std::string>() == "combined") {
      config.combined = true;
      for (const StyleInfo& info : list_styles()) config.styles.push_back(info.id);
    } else if (styles.is_array()) {
      for (const auto& name : styles) {
        const std::string n = name.get<std::string>();
        if (n == "combined") {
          config.combined = true;
          for (const StyleInfo& info : list_styles())
            config.styles.push_back(info.id);
        } else {
          config.styles.push_back(style_from_string(n));
        }
      }
    } else {
      throw SchemaError("'styles' must be an array or \"combined\"", {});
    }
  } else {
    config.styles.push_back(Style::sarcasm);
  }
  if (config.styles.size() > 1) config.combined = true;

  config.stages = j.contains("stages")
                      ? j.at("stages").get<std::vector<std::string>>()
                      : default_stages(config.mode);

  if (j.contains("datasets")) {
    for (const auto& [name, file] : j.at("datasets").items())
      config.datasets[style_from_string(name)] =
          base_dir / file.get<std::string>();
  }
  if (j.contains("gateway")) {
    const json& g = j.at("gateway");
    config.gateway.mode = g.value("mode", config.gateway.mode);
    config.gateway.endpoint = g.value("endpoint", config.gateway.endpoint);
    config.gateway.teacher_model_id =
        g.value("teacher_model_id", config.gateway.teacher_model_id);
    config.gateway.temperature = g.value("temperature", config.gateway.temperature);
    config.gateway.max_tokens = g.value("max_tokens", config.gateway.max_tokens);
    config.gateway.max_in_flight =
        g.value("max_in_flight", config.gateway.max_in_flight);
  }
  if (j.contains("toy")) {
    const json& t = j.at("toy");
    config.toy.n = t.value("n", config.toy.n);
    config.toy.init_scale = t.value("init_scale", config.toy.init_scale);
  }
  if (j.contains("grpo")) {
    const json& g = j.at("grpo");
    config.grpo.group_size = g.value("group_size", config.grpo.group_size);
    config.grpo.beta = g.value("beta", config.grpo.beta);
    config.grpo.learning_rate = g.value("learning_rate", config.grpo.learning_rate);
    config.grpo.epochs = g.value("epochs", config.grpo.epochs);
    config.grpo.epsilon_std = g.value("epsilon_std", config.grpo.epsilon_std);
  }
  if (j.contains("sft")) {
    const json& s = j.at("sft");
    config.sft.epochs = s.value("epochs", config.sft.epochs);
    config.sft.learning_rate = s.value("learning_rate", config.sft.learning_rate);
    config.sft.cosine_schedule =
        s.value("cosine_schedule", config.sft.cosine_schedule);
  }
  if (j.contains("budget") && !j.at("budget").is_null()) {
    config.budget_total = j.at("budget").at("total").get<int>();
  }
  config.grpo.seed = config.seed;
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

std::vector<Violation> validate(const RunConfig& config) {
  std::vector<Violation> violations;
  auto flag = [&violations](std::string message) {
    violations.push_back({std::move(message)});
  };

  if (config.out_dir.empty()) flag("out_dir is empty");
  if (config.styles.empty()) flag("style selection is empty");
  {
    std::set<Style> seen;
    for (Style style : config.styles)
      if (!seen.insert(style).second)
        flag("style " + std::string(to_string(style)) + " selected twice");
  }

  if (config.stages.empty()) flag("stage list is empty");
  const std::set<std::string> known(std::begin(kStageNames), std::end(kStageNames));
  std::set<std::string> requested;
  for (const std::string& stage : config.stages) {
    if (!known.count(stage))
      flag("unknown stage '" + stage + "'");
    else
      requested.insert(stage);
  }

  if (config.toy.n < 1) flag("toy.n must be >= 1");
  if (config.grpo.group_size < 2) flag("grpo.group_size must be >= 2");
  if (config.grpo.learning_rate <= 0) flag("grpo.learning_rate must be > 0");
  if (config.sft.epochs < 0) flag("sft.epochs must be >= 0");
  if (config.gateway.mode != "mock" && config.gateway.mode != "http")
    flag("gateway.mode must be 'mock' or 'http'");
  if (config.gateway.mode == "http" && config.gateway.endpoint.empty() &&
      !std::getenv("GATEWAY_ENDPOINT"))
    flag("gateway.mode is 'http' but no endpoint is configured");

  if (config.budget_total) {
    const int styles_count = static_cast<int>(list_styles().size());
    if (*config.budget_total <= 0 || *config.budget_total % styles_count != 0)
      flag("budget total " + std::to_string(*config.budget_total) +
           " not divisible by style count " + std::to_string(styles_count));
    if (config.styles.size() != list_styles().size())
      flag("budget sampling requires all four styles selected");
  }

  const bool has_sft = mode_has_sft(config.mode);
  const bool has_grpo = mode_has_grpo(config.mode);
  if (requested.count("toy_sft") && !has_sft)
    flag("stage toy_sft is incompatible with mode " +
         std::string(to_string(config.mode)));
  if (requested.count("toy_grpo") && !has_grpo)
    flag("stage toy_grpo is incompatible with mode " +
         std::string(to_string(config.mode)));

  auto artifact_exists = [&config](const char* name) {
    return std::filesystem::exists(config.out_dir / name);
  };

  if (requested.count("distill")) {
    for (Style style : config.styles) {
      auto it = config.datasets.find(style);
      if (it == config.datasets.end()) {
        flag("no dataset path for style " + std::string(to_string(style)));
      } else if (!std::filesystem::exists(it->second)) {
        flag("dataset for style " + std::string(to_string(style)) +
             " does not exist: " + it->second.string());
      }
    }
  }
  if (requested.count("filter") && !requested.count("distill") &&
      !artifact_exists(kTracesFile))
    flag("stage filter requires traces.jsonl from a distill stage");
  if (requested.count("export_sft") && !requested.count("filter") &&
      !artifact_exists(kKeptCorpus))
    flag("stage export_sft requires corpus_kept.jsonl from a filter stage");
  if (requested.count("toy_grpo") && config.mode == RunMode::sft_then_grpo &&
      !requested.count("toy_sft") && !artifact_exists(kSftPolicy))
    flag("stage toy_grpo in mode sft_then_grpo requires the toy_sft stage "
         "or an existing policy_sft.json");
  const bool needs_final_policy =
      requested.count("eval") || requested.count("analyze");
  if (needs_final_policy) {
    if (has_grpo && !requested.count("toy_grpo") && !artifact_exists(kGrpoPolicy))
      flag("stage eval requires the toy_grpo stage or an existing policy_grpo.json");
    if (!has_grpo && has_sft && !requested.count("toy_sft") &&
        !artifact_exists(kSftPolicy))
      flag("stage eval requires the toy_sft stage or an existing policy_sft.json");
  }
  return violations;
}

GenerationRequest teacher_request(const Sample& sample,
                                  const GatewayRunConfig& gateway) {
  GenerationRequest request;
  request.prompt = render_prompt(sample.style, PromptKind::teacher_cot) +
                   "\n\nCaption: " + sample.caption;
  request.decode.temperature = gateway.temperature;
  request.decode.max_tokens = gateway.max_tokens;
  request.model_id = gateway.teacher_model_id;
  if (!sample.image_ref.empty() && std::filesystem::exists(sample.image_ref)) {
    ImagePayload image;
    const std::string ext = std::filesystem::path(sample.image_ref).extension();
    if (ext == ".png")
      image.media_type = "image/png";
    else if (ext == ".jpg" || ext == ".jpeg")
      image.media_type = "image/jpeg";
    else if (ext == ".gif")
      image.media_type = "image/gif";
    else if (ext == ".webp")
      image.media_type = "image/webp";
    else
      image.media_type = "application/octet-stream";
    image.bytes = read_file(sample.image_ref);
    request.image = std::move(image);
  }
  return request;
}

std::string mock_teacher_trace(const Sample& sample) {
  const StyleInfo& info = style_info(sample.style);
  const std::uint64_t h = fnv1a64(sample.id);
  const bool flip_label = (h % 10 == 0);
  const bool drop_step = (h % 17 == 0);
  const bool garble_label = (h % 23 == 0);

  std::string label = sample.gold_label;
  if (flip_label)
    label = label == info.positive_label ? info.negative_label
                                         : info.positive_label;

  std::ostringstream trace;
  trace << "Step 1: The image shows the scene referenced by sample "
        << sample.id << ".\n";
  trace << "Step 2: The caption says \"" << single_line(sample.caption) << "\".\n";
  if (!drop_step)
    trace << "Step 3: " << info.step3_name
          << ": the visual and textual cues were weighed against each other.\n";
  trace << "Step 4: Considering the cues, the intent points toward the final "
           "call below.\n";
  if (garble_label)
    trace << "Step 5: Unclear.";
  else
    trace << "Step 5: " << label << ".";
  return trace.str();
}

std::unique_ptr<MockModel> make_scripted_teacher(
    const std::vector<Sample>& samples, const GatewayRunConfig& gateway) {
  auto mock = std::make_unique<MockModel>(
      "Step 1: An image.\nStep 2: A caption.\nStep 3: Cues reviewed.\n"
      "Step 4: Intent weighed.\nStep 5: Unclear.");
  for (const Sample& sample : samples)
    mock->script(teacher_request(sample, gateway), mock_teacher_trace(sample));
  return mock;
}

namespace {

struct TraceLine {
  Sample sample;
  std::string text;
  std::string teacher_model_id;
};

std::vector<TraceLine> read_trace_lines(const std::filesystem::path& path) {
  std::vector<TraceLine> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded())
      throw SchemaError(path.string() + ": line " + std::to_string(i + 1) +
                            ": invalid JSON",
                        {{i + 1, "invalid JSON"}});
    TraceLine line;
    line.sample = sample_from_json_line(lines[i]);
    line.text = j.at("text").get<std::string>();
    line.teacher_model_id = j.value("teacher_model_id", "");
    out.push_back(std::move(line));
  }
  return out;
}

// Everything a stage body needs.
struct StageContext {
  const RunConfig& config;
  Generator* gateway;  // may be null; resolved lazily for distill

  std::filesystem::path abs(const char* name) const {
    return config.out_dir / name;
  }

  ToyTask build_task() const {
    if (config.styles.size() == 1)
      return make_toy_task(config.seed, config.toy.n, config.styles.front());
    return make_combined_toy_task(config.seed, config.toy.n, config.styles);
  }

  ToyPolicy base_policy(const ToyTask& task) const {
    return ToyPolicy::random_init(kToyFeatureDim,
                                  static_cast<Eigen::Index>(task.actions.size()),
                                  config.toy.init_scale,
                                  config.seed ^ kBasePolicySalt);
  }

  ToyPolicy final_policy(const ToyTask& task) const {
    if (mode_has_grpo(config.mode)) return load_policy(abs(kGrpoPolicy));
    if (mode_has_sft(config.mode)) return load_policy(abs(kSftPolicy));
    return base_policy(task);
  }
};

// Train samples per selected style, split applied, budget applied.
std::map<Style, std::vector<Sample>> gather_train_samples(const RunConfig& config) {
  std::map<Style, std::vector<Sample>> by_style;
  for (Style style : config.styles) {
    std::vector<Sample> samples = read_samples(config.datasets.at(style));
    for (const Sample& sample : samples) {
      if (sample.style != style)
        throw StageFailure("distill",
                           "sample " + sample.id + " carries style " +
                               std::string(to_string(sample.style)) +
                               " but the dataset is configured as " +
                               std::string(to_string(style)));
    }
    const bool tagged = std::all_of(
        samples.begin(), samples.end(),
        [](const Sample& s) { return s.split != Split::unspecified; });
    SplitResult parts = split(
        samples, tagged ? SplitPolicy(ProvidedSplitPolicy{})
                        : SplitPolicy(SeededSplitPolicy{config.seed}));
    by_style[style] = std::move(parts.train);
  }
  if (config.budget_total) {
    std::vector<Sample> sampled =
        fixed_budget_sample(by_style, *config.budget_total, config.seed);
    for (auto& [style, list] : by_style) list.clear();
    for (Sample& sample : sampled) by_style[sample.style].push_back(std::move(sample));
  }
  return by_style;
}

void run_distill(const StageContext& ctx) {
  const auto by_style = gather_train_samples(ctx.config);

  std::vector<Sample> ordered;
  for (const StyleInfo& info : list_styles()) {
    auto it = by_style.find(info.id);
    if (it == by_style.end()) continue;
    ordered.insert(ordered.end(), it->second.begin(), it->second.end());
  }

  std::unique_ptr<MockModel> scripted;
  Generator* gateway = ctx.gateway;
  std::unique_ptr<HttpGateway> http;
  if (!gateway) {
    if (ctx.config.gateway.mode == "mock") {
      scripted = make_scripted_teacher(ordered, ctx.config.gateway);
      gateway = scripted.get();
    } else {
      GatewayOptions options = GatewayOptions::from_env();
      if (!ctx.config.gateway.endpoint.empty())
        options.endpoint = ctx.config.gateway.endpoint;
      http = std::make_unique<HttpGateway>(options);
      gateway = http.get();
    }
  }

  std::vector<GenerationRequest> requests;
  requests.reserve(ordered.size());
  for (const Sample& sample : ordered)
    requests.push_back(teacher_request(sample, ctx.config.gateway));

  const auto results =
      generate_batch(*gateway, requests, ctx.config.gateway.max_in_flight);

  std::string content;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (!results[i])
      throw StageFailure("distill", "generation for sample " + ordered[i].id +
                                        " failed: " + results[i].error().message);
    json line = json::parse(sample_to_json_line(ordered[i]));
    line["text"] = results[i].value().text;
    line["teacher_model_id"] = ctx.config.gateway.teacher_model_id;
    content += line.dump();
    content += '\n';
  }
  write_file(ctx.abs(kTracesFile), content);
}

void run_filter(const StageContext& ctx) {
  const auto lines = read_trace_lines(ctx.abs(kTracesFile));
  std::vector<std::pair<Sample, std::string>> pairs;
  pairs.reserve(lines.size());
  for (const TraceLine& line : lines) pairs.emplace_back(line.sample, line.text);

  const FilterReport report = filter_corpus(pairs);

  std::map<std::string, std::string> model_ids;
  for (const TraceLine& line : lines)
    model_ids[line.sample.id] = line.teacher_model_id;

  std::vector<DistilledRecord> kept;
  kept.reserve(report.kept.size());
  for (const auto& [sample, trace] : report.kept)
    kept.push_back({sample.id, sample.style, trace, trace.raw,
                    model_ids[sample.id], true, std::nullopt});

  std::map<std::string, std::string> raw_by_id;
  for (const TraceLine& line : lines) raw_by_id[line.sample.id] = line.text;
  std::vector<DistilledRecord> rejects;
  rejects.reserve(report.rejected.size());
  for (const auto& [sample, reason] : report.rejected) {
    DistilledRecord record{sample.id,    sample.style, std::nullopt,
                           raw_by_id[sample.id],       model_ids[sample.id],
                           false,        reason};
    if (reason == RejectReason::label_mismatch) {
      // The trace parsed; keep it for audit.
      auto parsed = parse_teacher_trace(record.raw, style_info(sample.style));
      if (parsed) record.trace = std::move(parsed).value();
    }
    rejects.push_back(std::move(record));
  }

  write_corpus(kept, ctx.abs(kKeptCorpus));
  write_corpus(rejects, ctx.abs(kRejectCorpus));

  json per_style = json::object();
  for (const StyleInfo& info : list_styles()) {
    long k = 0, r = 0;
    for (const auto& [sample, _] : report.kept)
      if (sample.style == info.id) ++k;
    for (const auto& [sample, _] : report.rejected)
      if (sample.style == info.id) ++r;
    if (k + r > 0) per_style[info.name] = {{"kept", k}, {"rejected", r}};
  }
  // Step-length stats over kept traces (the filter keeps degenerate short
  // steps; their sizes are surfaced here instead).
  std::size_t min_len = 0, max_len = 0;
  double mean_len = 0.0;
  std::size_t count = 0;
  for (const auto& [_, trace] : report.kept)
    for (const std::string& step : trace.steps) {
      if (count == 0 || step.size() < min_len) min_len = step.size();
      if (step.size() > max_len) max_len = step.size();
      mean_len += static_cast<double>(step.size());
      ++count;
    }
  if (count > 0) mean_len /= static_cast<double>(count);

  json stats{{"input", report.total()},
             {"kept", report.kept.size()},
             {"rejected",
              {{"missing_steps", report.count_missing_steps},
               {"unparseable_label", report.count_unparseable_label},
               {"label_mismatch", report.count_label_mismatch}}},
             {"per_style", per_style},
             {"kept_step_length_chars",
              {{"min", min_len}, {"mean", mean_len}, {"max", max_len}}}};
  write_file(ctx.abs(kFilterStats), stats.dump(2) + "\n");
}

void run_export_sft(const StageContext& ctx) {
  const auto corpus = read_corpus(ctx.abs(kKeptCorpus));
  const auto lines = read_trace_lines(ctx.abs(kTracesFile));
  std::map<std::string, const Sample*> samples_by_id;
  for (const TraceLine& line : lines) samples_by_id[line.sample.id] = &line.sample;

  std::string content;
  for (const DistilledRecord& record : corpus) {
    auto it = samples_by_id.find(record.sample_id);
    if (it == samples_by_id.end())
      throw StageFailure("export_sft", "corpus sample " + record.sample_id +
                                           " missing from traces.jsonl");
    if (!record.trace)
      throw StageFailure("export_sft",
                         "kept record " + record.sample_id + " has no trace");
    json line{{"sample_id", record.sample_id},
              {"style", std::string(to_string(record.style))},
              {"prompt", render_prompt(record.style, PromptKind::teacher_cot) +
                             "\n\nCaption: " + it->second->caption},
              {"target", render_trace_text(*record.trace)}};
    content += line.dump();
    content += '\n';
  }
  write_file(ctx.abs(kSftCorpus), content);
}

void run_toy_sft(const StageContext& ctx) {
  const ToyTask task = ctx.build_task();
  ToyPolicy policy = ctx.base_policy(task);
  const auto target = ctx.config.mode == RunMode::sft_binary ? SftTarget::binary
                                                             : SftTarget::cot;
  SftConfig sft_config;
  sft_config.epochs = ctx.config.sft.epochs;
  sft_config.learning_rate = ctx.config.sft.learning_rate;
  sft_config.cosine_schedule = ctx.config.sft.cosine_schedule;
  sft_config.seed = ctx.config.seed;

  SftReport report;
  policy = sft_warmup(std::move(policy), toy_sft_examples(task, target),
                      sft_config, &report);
  save_policy(policy, ctx.abs(kSftPolicy));
  write_file(ctx.abs(kSftReport), sft_report_to_json(report) + "\n");
}

void run_toy_grpo(const StageContext& ctx) {
  const ToyTask task = ctx.build_task();
  ToyPolicy start = ctx.config.mode == RunMode::sft_then_grpo
                        ? load_policy(ctx.abs(kSftPolicy))
                        : ctx.base_policy(task);
  const ReferencePolicy reference(start);
  ToyPolicy policy = std::move(start);
  const TrainReport report =
      train_grpo(policy, reference, task, ctx.config.grpo, toy_total_reward);
  save_policy(policy, ctx.abs(kGrpoPolicy));
  write_file(ctx.abs(kGrpoReport), train_report_to_json(report) + "\n");
}

void append_style_metrics(const ToyPolicy& policy, const ToyTask& task,
                          json& per_style) {
  for (const StyleInfo& info : list_styles()) {
    std::vector<std::string> preds;
    std::vector<std::string> golds;
    for (const ToyExample& ex : task.eval) {
      if (ex.style != info.id) continue;
      const auto a = static_cast<std::size_t>(policy.greedy_action(ex.context));
      preds.push_back(task.actions[a].label);
      golds.push_back(ex.gold_label);
    }
    if (preds.empty()) continue;
    per_style[info.name] =
        json::parse(metrics_to_json(evaluate(preds, golds, info.positive_label)));
  }
}

void run_eval(const StageContext& ctx) {
  const ToyTask task = ctx.build_task();
  const ToyPolicy policy = ctx.final_policy(task);

  json per_style = json::object();
  append_style_metrics(policy, task, per_style);
  json out{{"mode", std::string(to_string(ctx.config.mode))},
           {"overall_greedy_accuracy",
            greedy_accuracy(policy, task.eval, task.actions)},
           {"per_style", per_style}};
  write_file(ctx.abs(kMetrics), out.dump(2) + "\n");
}

void run_analyze(const StageContext& ctx) {
  const ToyTask task = ctx.build_task();
  const ToyPolicy trained = ctx.final_policy(task);
  const ToyPolicy baseline = ctx.base_policy(task);

  json per_style = json::object();
  for (const StyleInfo& info : list_styles()) {
    std::vector<std::string> a, b, golds;
    for (const ToyExample& ex : task.eval) {
      if (ex.style != info.id) continue;
      a.push_back(
          task.actions[static_cast<std::size_t>(trained.greedy_action(ex.context))]
              .label);
      b.push_back(
          task.actions[static_cast<std::size_t>(baseline.greedy_action(ex.context))]
              .label);
      golds.push_back(ex.gold_label);
    }
    if (golds.empty()) continue;
    const DisagreementReport report = disagreement_report(a, b, golds);
    per_style[info.name] = {{"n_disagreed", report.n_disagreed},
                            {"a_correct", report.a_correct},
                            {"b_correct", report.b_correct},
                            {"a_win_rate", report.a_win_rate}};
  }
  json out{{"a", "final policy"}, {"b", "untrained base"}, {"per_style", per_style}};
  write_file(ctx.abs(kDisagreement), out.dump(2) + "\n");
}

struct StagePlan {
  std::string name;
  std::vector<std::string> input_keys;   // manifest keys
  std::vector<std::string> output_names; // relative artifact names
  void (*body)(const StageContext&);
};

std::vector<StagePlan> plan_stages(const RunConfig& config) {
  const std::set<std::string> requested(config.stages.begin(), config.stages.end());
  std::vector<StagePlan> plans;

  auto dataset_keys = [&config] {
    std::vector<std::string> keys;
    for (Style style : config.styles) {
      auto it = config.datasets.find(style);
      if (it != config.datasets.end()) keys.push_back(it->second.string());
    }
    return keys;
  };

  for (const char* name : kStageNames) {
    if (!requested.count(name)) continue;
    const std::string stage = name;
    if (stage == "distill") {
      plans.push_back({stage, dataset_keys(), {kTracesFile}, &run_distill});
    } else if (stage == "filter") {
      plans.push_back({stage,
                       {kTracesFile},
                       {kKeptCorpus, kRejectCorpus, kFilterStats},
                       &run_filter});
    } else if (stage == "export_sft") {
      plans.push_back({stage, {kKeptCorpus, kTracesFile}, {kSftCorpus},
                       &run_export_sft});
    } else if (stage == "toy_sft") {
      plans.push_back({stage, {}, {kSftPolicy, kSftReport}, &run_toy_sft});
    } else if (stage == "toy_grpo") {
      std::vector<std::string> inputs;
      if (config.mode == RunMode::sft_then_grpo) inputs.push_back(kSftPolicy);
      plans.push_back({stage, inputs, {kGrpoPolicy, kGrpoReport}, &run_toy_grpo});
    } else if (stage == "eval") {
      std::vector<std::string> inputs;
      if (mode_has_grpo(config.mode))
        inputs.push_back(kGrpoPolicy);
      else if (mode_has_sft(config.mode))
        inputs.push_back(kSftPolicy);
      plans.push_back({stage, inputs, {kMetrics}, &run_eval});
    } else if (stage == "analyze") {
      std::vector<std::string> inputs;
      if (mode_has_grpo(config.mode))
        inputs.push_back(kGrpoPolicy);
      else if (mode_has_sft(config.mode))
        inputs.push_back(kSftPolicy);
      plans.push_back({stage, inputs, {kDisagreement}, &run_analyze});
    }
  }
  return plans;
}

std::filesystem::path key_to_path(const RunConfig& config, const std::string& key) {
  const std::filesystem::path p(key);
  return p.is_absolute() || p.has_parent_path() ? p : config.out_dir / p;
}

}  // namespace

RunManifest run(const RunConfig& config, Generator* gateway) {
  {
    auto violations = validate(config);
    if (!violations.empty()) {
      std::string what = "run config is invalid:";
      for (const Violation& v : violations) what += "\n  - " + v.message;
      throw ValidationError(what, std::move(violations));
    }
  }
  std::filesystem::create_directories(config.out_dir);

  RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.config_snapshot = config.canonical_json();
  manifest.config_digest = sha256_hex(manifest.config_snapshot);

  // Cache records from a previous run of this exact config.
  std::map<std::string, StageRecord> previous;
  const auto manifest_path = config.out_dir / kManifest;
  if (std::filesystem::exists(manifest_path)) {
    json prev = json::parse(read_file(manifest_path), nullptr, false);
    if (!prev.is_discarded() &&
        prev.value("config_digest", "") == manifest.config_digest) {
      for (const auto& stage : prev.value("stages", json::array())) {
        StageRecord record;
        record.name = stage.value("name", "");
        for (const auto& [k, v] : stage.value("inputs", json::object()).items())
          record.inputs[k] = v.get<std::string>();
        for (const auto& [k, v] : stage.value("outputs", json::object()).items())
          record.outputs[k] = v.get<std::string>();
        previous[record.name] = std::move(record);
      }
    }
  }

  const StageContext ctx{config, gateway};
  for (const StagePlan& plan : plan_stages(config)) {
    StageRecord record;
    record.name = plan.name;

    for (const std::string& key : plan.input_keys) {
      const auto path = key_to_path(config, key);
      if (!std::filesystem::exists(path))
        throw StageFailure(plan.name, "missing input " + path.string());
      record.inputs[key] = file_digest(path);
    }

    bool cached = false;
    if (auto it = previous.find(plan.name); it != previous.end()) {
      const StageRecord& prev = it->second;
      cached = prev.inputs == record.inputs &&
               prev.outputs.size() == plan.output_names.size();
      if (cached) {
        for (const std::string& name : plan.output_names) {
          const auto out_path = key_to_path(config, name);
          auto recorded = prev.outputs.find(name);
          if (recorded == prev.outputs.end() ||
              !std::filesystem::exists(out_path) ||
              file_digest(out_path) != recorded->second) {
            cached = false;
            break;
          }
        }
      }
    }

    if (cached) {
      record.outputs = previous[plan.name].outputs;
      record.cache_hit = true;
      record.wall_ms = 0;
    } else {
      const auto started = std::chrono::steady_clock::now();
      try {
        plan.body(ctx);
      } catch (const StageFailure&) {
        throw;
      } catch (const std::exception& e) {
        throw StageFailure(plan.name, e.what());
      }
      record.wall_ms = static_cast<long>(
          std::chrono::duration_cast<std::chrono::milliseconds>(
              std::chrono::steady_clock::now() - started)
              .count());
      for (const std::string& name : plan.output_names)
        record.outputs[name] = file_digest(key_to_path(config, name));
    }
    manifest.stages.push_back(std::move(record));
  }

  write_manifest(manifest, manifest_path);
  return manifest;
}

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path) {
  json stages = json::array();
  for (const StageRecord& record : manifest.stages) {
    stages.push_back({{"name", record.name},
                      {"inputs", record.inputs},
                      {"outputs", record.outputs},
                      {"wall_ms", record.wall_ms},
                      {"cache_hit", record.cache_hit}});
  }
  json j{{"tool_version", manifest.tool_version},
         {"config_digest", manifest.config_digest},
         {"config", json::parse(manifest.config_snapshot)},
         {"stages", stages}};
  write_file(path, j.dump(2) + "\n");
}

}  // namespace figrl
