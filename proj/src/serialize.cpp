#include "figrl/serialize.hpp"

#include <json.hpp>

#include "figrl/io_util.hpp"

namespace figrl {

using nlohmann::json;

void save_policy(const ToyPolicy& policy, const std::filesystem::path& path) {
  const Eigen::MatrixXd& w = policy.weights();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(w.size()));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) flat.push_back(w(i, j));
  json j{{"rows", w.rows()}, {"cols", w.cols()}, {"weights", flat}};
  write_file(path, j.dump() + "\n");
}

ToyPolicy load_policy(const std::filesystem::path& path) {
  json j = json::parse(read_file(path));
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("weights").get<std::vector<double>>();
  if (flat.size() != static_cast<std::size_t>(rows * cols))
    throw SchemaError(path.string() + ": weight count does not match rows*cols", {});
  Eigen::MatrixXd w(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) w(i, j2) = flat[k++];
  return ToyPolicy(std::move(w));
}

std::string train_report_to_json(const TrainReport& report) {
  json steps = json::array();
  for (const StepRecord& s : report.steps)
    steps.push_back(
        {{"mean_reward", s.mean_reward}, {"kl", s.kl}, {"loss", s.loss}});
  return json{{"steps", steps},
              {"final_greedy_accuracy", report.final_greedy_accuracy}}
      .dump();
}

std::string sft_report_to_json(const SftReport& report) {
  return json{{"epoch_losses", report.epoch_losses},
              {"final_train_accuracy", report.final_train_accuracy}}
      .dump();
}

std::string metrics_to_json(const Metrics& metrics) {
  return json{{"accuracy", metrics.accuracy},
              {"f1", metrics.f1},
              {"confusion",
               {{"tp", metrics.confusion.tp},
                {"fp", metrics.confusion.fp},
                {"tn", metrics.confusion.tn},
                {"fn", metrics.confusion.fn}}}}
      .dump();
}

}  // namespace figrl
