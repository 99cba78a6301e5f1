#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "figrl/dataset.hpp"
#include "figrl/eval.hpp"
#include "figrl/io_util.hpp"
#include "figrl/pipeline.hpp"
#include "figrl/reward.hpp"
#include "figrl/serialize.hpp"
#include "figrl/styles.hpp"
#include "figrl/toy.hpp"
#include "figrl/trace.hpp"
#include "figrl/version.hpp"

namespace {

using figrl::Style;
using json = nlohmann::json;

std::ostream& open_sink(std::ofstream& file, const std::string& out_path) {
  if (out_path.empty()) return std::cout;
  file.open(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw figrl::IoError("cannot write " + out_path);
  return file;
}

// {"id","label"} pairs from a jsonl file (full sample lines also work).
std::vector<std::pair<std::string, std::string>> read_labeled(
    const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto lines = figrl::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (figrl::trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j.contains("label"))
      throw figrl::SchemaError(
          path + ": line " + std::to_string(i + 1) + ": need id and label fields",
          {{i + 1, "need id and label fields"}});
    out.emplace_back(j.at("id").get<std::string>(),
                     j.at("label").get<std::string>());
  }
  return out;
}

figrl::Metrics parse_metrics_cell(const json& j) {
  figrl::Metrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.f1 = j.at("f1").get<double>();
  return m;
}

void cmd_prompts_show(const std::string& style, const std::string& kind) {
  const figrl::PromptKind prompt_kind = [&] {
    if (kind == "teacher" || kind == "teacher_cot")
      return figrl::PromptKind::teacher_cot;
    if (kind == "rlvr" || kind == "rlvr_tagged")
      return figrl::PromptKind::rlvr_tagged;
    throw std::invalid_argument("unknown prompt kind: " + kind);
  }();
  std::cout << figrl::render_prompt(figrl::style_from_string(style), prompt_kind)
            << "\n";
}

void cmd_filter(const std::string& in, const std::string& out,
                const std::string& rejects, const std::string& stats) {
  const auto lines = figrl::read_lines(in);
  std::vector<std::pair<figrl::Sample, std::string>> pairs;
  std::map<std::string, std::string> model_ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (figrl::trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i]);
    figrl::Sample sample = figrl::sample_from_json_line(lines[i]);
    model_ids[sample.id] = j.value("teacher_model_id", "");
    pairs.emplace_back(std::move(sample), j.at("text").get<std::string>());
  }
  const figrl::FilterReport report = figrl::filter_corpus(pairs);

  std::vector<figrl::DistilledRecord> kept;
  for (const auto& [sample, trace] : report.kept)
    kept.push_back({sample.id, sample.style, trace, trace.raw,
                    model_ids[sample.id], true, std::nullopt});
  std::map<std::string, std::string> raw_by_id;
  for (const auto& [sample, text] : pairs) raw_by_id[sample.id] = text;
  std::vector<figrl::DistilledRecord> rejected;
  for (const auto& [sample, reason] : report.rejected)
    rejected.push_back({sample.id, sample.style, std::nullopt,
                        raw_by_id[sample.id], model_ids[sample.id], false,
                        reason});
  figrl::write_corpus(kept, out);
  figrl::write_corpus(rejected, rejects);

  json stats_json{{"input", report.total()},
                  {"kept", report.kept.size()},
                  {"rejected",
                   {{"missing_steps", report.count_missing_steps},
                    {"unparseable_label", report.count_unparseable_label},
                    {"label_mismatch", report.count_label_mismatch}}}};
  figrl::write_file(stats, stats_json.dump(2) + "\n");
  std::cout << "kept " << report.kept.size() << " / " << report.total() << "\n";
}

void cmd_score(const std::string& outputs_path, const std::string& gold_path,
               const std::string& report_path, bool strict_acc) {
  const auto samples = figrl::read_samples(gold_path);
  std::map<std::string, const figrl::Sample*> by_id;
  for (const auto& sample : samples) by_id[sample.id] = &sample;

  const auto lines = figrl::read_lines(outputs_path);
  std::string content;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (figrl::trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i]);
    const std::string id = j.at("id").get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw figrl::SchemaError(outputs_path + ": line " + std::to_string(i + 1) +
                                   ": no gold sample with id " + id,
                               {{i + 1, "unknown id"}});
    const figrl::Sample& sample = *it->second;
    const figrl::RewardBreakdown breakdown = figrl::total_reward(
        j.at("text").get<std::string>(), sample.gold_label,
        figrl::style_info(sample.style), figrl::RewardOptions{strict_acc});
    json line{{"id", id},
              {"r_acc", breakdown.r_acc},
              {"r_format", breakdown.r_format},
              {"total", breakdown.total}};
    line["predicted_label"] = breakdown.predicted_label
                                  ? json(*breakdown.predicted_label)
                                  : json(nullptr);
    content += line.dump();
    content += '\n';
  }
  figrl::write_file(report_path, content);
}

void cmd_toy_train(const std::string& mode, std::uint64_t seed,
                   const std::string& config_path, const std::string& report_path,
                   const std::string& policy_path) {
  json cfg = config_path.empty() ? json::object()
                                 : json::parse(figrl::read_file(config_path));
  const json task_cfg = cfg.value("task", json::object());
  const int n = task_cfg.value("n", 2000);
  const bool combined = task_cfg.value("combined", false);
  const Style style =
      figrl::style_from_string(task_cfg.value("style", std::string("sarcasm")));
  const double init_scale = cfg.value("init_scale", figrl::kToyDefaultInitScale);

  figrl::ToyTask task = combined ? figrl::make_combined_toy_task(seed, n)
                                 : figrl::make_toy_task(seed, n, style);
  figrl::ToyPolicy policy = figrl::ToyPolicy::random_init(
      figrl::kToyFeatureDim, static_cast<Eigen::Index>(task.actions.size()),
      init_scale, seed ^ 0x5eedba5e00c0ffeeull);

  json report{{"mode", mode}, {"seed", seed}};

  const bool wants_sft = mode == "sft" || mode == "sft-then-grpo";
  const bool wants_grpo = mode == "grpo" || mode == "sft-then-grpo";
  if (!wants_sft && !wants_grpo)
    throw std::invalid_argument("mode must be grpo, sft, or sft-then-grpo");

  if (wants_sft) {
    const json sft_cfg = cfg.value("sft", json::object());
    figrl::SftConfig sc;
    sc.epochs = sft_cfg.value("epochs", sc.epochs);
    sc.learning_rate = sft_cfg.value("learning_rate", sc.learning_rate);
    sc.cosine_schedule = sft_cfg.value("cosine_schedule", sc.cosine_schedule);
    sc.seed = seed;
    const auto target = sft_cfg.value("target", std::string("cot")) == "binary"
                            ? figrl::SftTarget::binary
                            : figrl::SftTarget::cot;
    figrl::SftReport sft_report;
    policy = figrl::sft_warmup(std::move(policy),
                               figrl::toy_sft_examples(task, target), sc,
                               &sft_report);
    report["sft"] = json::parse(figrl::sft_report_to_json(sft_report));
  }
  if (wants_grpo) {
    const json grpo_cfg = cfg.value("grpo", json::object());
    figrl::GrpoConfig gc;
    gc.group_size = grpo_cfg.value("group_size", gc.group_size);
    gc.beta = grpo_cfg.value("beta", gc.beta);
    gc.learning_rate = grpo_cfg.value("learning_rate", gc.learning_rate);
    gc.epochs = grpo_cfg.value("epochs", gc.epochs);
    gc.epsilon_std = grpo_cfg.value("epsilon_std", gc.epsilon_std);
    gc.seed = seed;
    const figrl::ReferencePolicy reference(policy);
    const figrl::TrainReport train_report =
        figrl::train_grpo(policy, reference, task, gc, figrl::toy_total_reward);
    report["grpo"] = json::parse(figrl::train_report_to_json(train_report));
  }
  report["final_greedy_accuracy"] =
      figrl::greedy_accuracy(policy, task.eval, task.actions);

  figrl::write_file(report_path, report.dump(2) + "\n");
  if (!policy_path.empty()) figrl::save_policy(policy, policy_path);
  std::cout << "final greedy accuracy "
            << report["final_greedy_accuracy"].get<double>() << "\n";
}

void cmd_ingest(const std::string& in, const std::string& adapter,
                const std::string& style_hint, const std::string& out,
                int humor_threshold, int offense_threshold) {
  figrl::IngestOptions options;
  if (!style_hint.empty())
    options.style_hint = figrl::style_from_string(style_hint);
  options.memotion_humor_threshold = humor_threshold;
  options.memotion_offense_threshold = offense_threshold;
  const auto samples =
      figrl::ingest(in, figrl::adapter_from_string(adapter), options);
  figrl::write_samples(samples, out);
  std::cout << "ingested " << samples.size() << " samples\n";
}

void cmd_split(const std::string& in, const std::string& policy,
               std::uint64_t seed, const std::string& train_out,
               const std::string& test_out) {
  const auto samples = figrl::read_samples(in);
  figrl::SplitPolicy split_policy =
      policy == "provided"
          ? figrl::SplitPolicy(figrl::ProvidedSplitPolicy{})
          : figrl::SplitPolicy(figrl::SeededSplitPolicy{seed});
  if (policy != "provided" && policy != "seeded")
    throw std::invalid_argument("split policy must be provided or seeded");
  const figrl::SplitResult result = figrl::split(samples, split_policy);
  figrl::write_samples(result.train, train_out);
  figrl::write_samples(result.test, test_out);
  std::cout << "train " << result.train.size() << " / test "
            << result.test.size() << "\n";
}

void cmd_sample_budget(const std::string& in, int total, std::uint64_t seed,
                       const std::string& out) {
  const auto samples = figrl::read_samples(in);
  std::map<Style, std::vector<figrl::Sample>> by_style;
  for (const auto& sample : samples) by_style[sample.style].push_back(sample);
  const auto drawn = figrl::fixed_budget_sample(by_style, total, seed);
  figrl::write_samples(drawn, out);
  std::cout << "sampled " << drawn.size() << " (" << total / 4
            << " per style)\n";
}

void cmd_eval(const std::string& preds_path, const std::string& golds_path,
              const std::string& style, const std::string& positive,
              bool macro_f1, const std::string& format,
              const std::string& out_path) {
  const auto golds = read_labeled(golds_path);
  const auto preds = read_labeled(preds_path);
  std::map<std::string, std::string> pred_by_id(preds.begin(), preds.end());

  std::vector<std::string> pred_labels, gold_labels;
  for (const auto& [id, label] : golds) {
    auto it = pred_by_id.find(id);
    if (it == pred_by_id.end())
      throw std::invalid_argument("no prediction for sample id " + id);
    pred_labels.push_back(it->second);
    gold_labels.push_back(label);
  }
  std::string positive_label = positive;
  if (positive_label.empty()) {
    if (style.empty())
      throw std::invalid_argument("pass --style or --positive");
    positive_label = figrl::style_by_name(style).positive_label;
  }
  const figrl::Metrics metrics =
      figrl::evaluate(pred_labels, gold_labels, positive_label,
                      macro_f1 ? figrl::F1Mode::macro : figrl::F1Mode::positive_class);
  std::ofstream file;
  figrl::emit_report(metrics, open_sink(file, out_path),
                     figrl::report_format_from_string(format));
}

void cmd_transfer_matrix(const std::string& results_path,
                         const std::string& baselines_path,
                         const std::string& metric, const std::string& format,
                         const std::string& out_path) {
  const json results = json::parse(figrl::read_file(results_path));
  const json baselines = json::parse(figrl::read_file(baselines_path));

  std::map<std::pair<Style, Style>, figrl::Metrics> cells;
  for (const auto& cell : results.at("cells")) {
    cells[{figrl::style_from_string(cell.at("source").get<std::string>()),
           figrl::style_from_string(cell.at("target").get<std::string>())}] =
        parse_metrics_cell(cell);
  }
  std::map<Style, figrl::Metrics> base;
  for (const auto& cell : baselines.at("baselines"))
    base[figrl::style_from_string(cell.at("target").get<std::string>())] =
        parse_metrics_cell(cell);

  const auto selector = metric == "f1" ? figrl::MetricSelector::f1
                                       : figrl::MetricSelector::accuracy;
  const figrl::TransferGainMatrix matrix =
      figrl::transfer_gain_matrix(cells, base, selector);
  std::ofstream file;
  figrl::emit_report(matrix, open_sink(file, out_path),
                     figrl::report_format_from_string(format));
}

void cmd_disagree(const std::string& a_path, const std::string& b_path,
                  const std::string& golds_path, const std::string& format,
                  const std::string& out_path) {
  const auto golds = read_labeled(golds_path);
  const auto a = read_labeled(a_path);
  const auto b = read_labeled(b_path);
  std::map<std::string, std::string> a_by_id(a.begin(), a.end());
  std::map<std::string, std::string> b_by_id(b.begin(), b.end());

  std::vector<std::string> preds_a, preds_b, gold_labels;
  for (const auto& [id, label] : golds) {
    auto ia = a_by_id.find(id);
    auto ib = b_by_id.find(id);
    if (ia == a_by_id.end() || ib == b_by_id.end())
      throw std::invalid_argument("missing prediction for sample id " + id);
    preds_a.push_back(ia->second);
    preds_b.push_back(ib->second);
    gold_labels.push_back(label);
  }
  const figrl::DisagreementReport report =
      figrl::disagreement_report(preds_a, preds_b, gold_labels);
  std::ofstream file;
  figrl::emit_report(report, open_sink(file, out_path),
                     figrl::report_format_from_string(format));
}

void cmd_corpus(const std::string& action, const std::string& in,
                const std::string& from, const std::string& out) {
  if (action == "read") {
    for (const auto& record : figrl::read_corpus(in)) {
      json j{{"sample_id", record.sample_id},
             {"style", std::string(figrl::to_string(record.style))},
             {"kept", record.kept}};
      std::cout << j.dump() << "\n";
    }
  } else if (action == "validate") {
    const auto records = figrl::read_corpus(in);
    std::cout << "ok: " << records.size() << " records\n";
  } else if (action == "write") {
    // Headerless record lines in, versioned corpus file out.
    std::vector<figrl::DistilledRecord> records;
    const auto lines = figrl::read_lines(from);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (figrl::trim(lines[i]).empty()) continue;
      try {
        records.push_back(figrl::record_from_json_line(lines[i]));
      } catch (const std::exception& e) {
        throw figrl::SchemaError(
            from + ": line " + std::to_string(i + 1) + ": " + e.what(),
            {{i + 1, e.what()}});
      }
    }
    figrl::write_corpus(records, out);
    std::cout << "wrote " << records.size() << " records\n";
  } else {
    throw std::invalid_argument("corpus action must be read, write, or validate");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Figurative-language RLVR toolkit"};
  app.set_version_flag("--version", figrl::kToolVersion);
  app.require_subcommand(1);

  // prompts show
  auto* prompts = app.add_subcommand("prompts", "Prompt templates");
  prompts->require_subcommand(1);
  auto* prompts_show = prompts->add_subcommand("show", "Print a template");
  std::string p_style, p_kind = "teacher";
  prompts_show->add_option("--style", p_style, "style name")->required();
  prompts_show->add_option("--kind", p_kind, "teacher or rlvr");
  prompts_show->callback([&] { cmd_prompts_show(p_style, p_kind); });

  // filter
  auto* filter = app.add_subcommand("filter", "Filter teacher traces");
  std::string f_in, f_out, f_rejects, f_stats;
  filter->add_option("--in", f_in)->required();
  filter->add_option("--out", f_out)->required();
  filter->add_option("--rejects", f_rejects)->required();
  filter->add_option("--stats", f_stats)->required();
  filter->callback([&] { cmd_filter(f_in, f_out, f_rejects, f_stats); });

  // score
  auto* score = app.add_subcommand("score", "Score raw outputs");
  std::string s_outputs, s_gold, s_report;
  bool s_strict = false;
  score->add_option("--outputs", s_outputs)->required();
  score->add_option("--gold", s_gold)->required();
  score->add_option("--report", s_report)->required();
  score->add_flag("--strict-acc", s_strict,
                  "score accuracy only from the answer tag");
  score->callback([&] { cmd_score(s_outputs, s_gold, s_report, s_strict); });

  // toy-train
  auto* toy_train = app.add_subcommand("toy-train", "Train the toy policy");
  std::string t_mode = "sft-then-grpo", t_config, t_report = "report.json",
              t_policy;
  std::uint64_t t_seed = 0;
  toy_train->add_option("--mode", t_mode, "grpo, sft, or sft-then-grpo");
  toy_train->add_option("--seed", t_seed);
  toy_train->add_option("--config", t_config);
  toy_train->add_option("--report", t_report);
  toy_train->add_option("--save-policy", t_policy);
  toy_train->callback(
      [&] { cmd_toy_train(t_mode, t_seed, t_config, t_report, t_policy); });

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Ingest a dataset");
  std::string i_in, i_adapter = "generic-jsonl", i_style, i_out;
  int i_humor = 1, i_offense = 1;
  ingest->add_option("--in", i_in)->required();
  ingest->add_option("--adapter", i_adapter,
                     "generic-jsonl, mmsd2-like, memotion-like, multimet-like");
  ingest->add_option("--style", i_style, "style hint for generic-jsonl");
  ingest->add_option("--out", i_out)->required();
  ingest->add_option("--humor-threshold", i_humor);
  ingest->add_option("--offense-threshold", i_offense);
  ingest->callback(
      [&] { cmd_ingest(i_in, i_adapter, i_style, i_out, i_humor, i_offense); });

  // split
  auto* split_cmd = app.add_subcommand("split", "Train/test split");
  std::string sp_in, sp_policy = "seeded", sp_train, sp_test;
  std::uint64_t sp_seed = 0;
  split_cmd->add_option("--in", sp_in)->required();
  split_cmd->add_option("--policy", sp_policy, "provided or seeded");
  split_cmd->add_option("--seed", sp_seed);
  split_cmd->add_option("--train", sp_train)->required();
  split_cmd->add_option("--test", sp_test)->required();
  split_cmd->callback(
      [&] { cmd_split(sp_in, sp_policy, sp_seed, sp_train, sp_test); });

  // sample-budget
  auto* budget = app.add_subcommand("sample-budget", "Fixed-budget sampling");
  std::string b_in, b_out;
  int b_total = 0;
  std::uint64_t b_seed = 0;
  budget->add_option("--in", b_in)->required();
  budget->add_option("--total", b_total)->required();
  budget->add_option("--seed", b_seed);
  budget->add_option("--out", b_out)->required();
  budget->callback([&] { cmd_sample_budget(b_in, b_total, b_seed, b_out); });

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Distilled corpus files");
  corpus->require_subcommand(1);
  std::string c_in, c_from, c_out;
  auto* corpus_read = corpus->add_subcommand("read", "Print records");
  corpus_read->add_option("--in", c_in)->required();
  corpus_read->callback([&] { cmd_corpus("read", c_in, "", ""); });
  auto* corpus_validate = corpus->add_subcommand("validate", "Check a corpus");
  corpus_validate->add_option("--in", c_in)->required();
  corpus_validate->callback([&] { cmd_corpus("validate", c_in, "", ""); });
  auto* corpus_write = corpus->add_subcommand("write", "Rewrite a corpus");
  corpus_write->add_option("--from", c_from)->required();
  corpus_write->add_option("--out", c_out)->required();
  corpus_write->callback([&] { cmd_corpus("write", "", c_from, c_out); });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy and F1");
  std::string e_preds, e_golds, e_style, e_positive, e_format = "json", e_out;
  bool e_macro = false;
  eval_cmd->add_option("--preds", e_preds)->required();
  eval_cmd->add_option("--golds", e_golds)->required();
  eval_cmd->add_option("--style", e_style);
  eval_cmd->add_option("--positive", e_positive);
  eval_cmd->add_flag("--macro-f1", e_macro);
  eval_cmd->add_option("--format", e_format, "json, csv, or markdown");
  eval_cmd->add_option("--out", e_out);
  eval_cmd->callback([&] {
    cmd_eval(e_preds, e_golds, e_style, e_positive, e_macro, e_format, e_out);
  });

  // transfer-matrix
  auto* transfer = app.add_subcommand("transfer-matrix", "Cross-style gains");
  std::string tm_results, tm_baselines, tm_metric = "acc", tm_format = "json",
              tm_out;
  transfer->add_option("--results", tm_results)->required();
  transfer->add_option("--baselines", tm_baselines)->required();
  transfer->add_option("--metric", tm_metric, "acc or f1");
  transfer->add_option("--format", tm_format);
  transfer->add_option("--out", tm_out);
  transfer->callback([&] {
    cmd_transfer_matrix(tm_results, tm_baselines, tm_metric, tm_format, tm_out);
  });

  // disagree
  auto* disagree = app.add_subcommand("disagree", "Two-model disagreement");
  std::string d_a, d_b, d_golds, d_format = "json", d_out;
  disagree->add_option("--a", d_a)->required();
  disagree->add_option("--b", d_b)->required();
  disagree->add_option("--golds", d_golds)->required();
  disagree->add_option("--format", d_format);
  disagree->add_option("--out", d_out);
  disagree->callback([&] { cmd_disagree(d_a, d_b, d_golds, d_format, d_out); });

  // run / validate
  auto* run_cmd = app.add_subcommand("run", "Execute a run config");
  std::string r_config;
  run_cmd->add_option("--config", r_config)->required();
  run_cmd->callback([&] {
    const figrl::RunManifest manifest =
        figrl::run(figrl::load_run_config(r_config));
    for (const auto& stage : manifest.stages)
      std::cout << stage.name << (stage.cache_hit ? " (cached)" : "") << "\n";
  });

  auto* validate_cmd = app.add_subcommand("validate", "Validate a run config");
  std::string v_config;
  validate_cmd->add_option("--config", v_config)->required();
  validate_cmd->callback([&] {
    const auto violations = figrl::validate(figrl::load_run_config(v_config));
    if (violations.empty()) {
      std::cout << "ok\n";
      return;
    }
    throw figrl::ValidationError(
        [&violations] {
          std::string what = "config is invalid:";
          for (const auto& v : violations) what += "\n  - " + v.message;
          return what;
        }(),
        violations);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const figrl::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const figrl::StageFailure& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const figrl::SchemaError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
