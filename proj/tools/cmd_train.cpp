// train / eval / report subcommands.

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "common.hpp"
#include "crossview/dataset.hpp"
#include "crossview/errors.hpp"
#include "crossview/eval.hpp"
#include "crossview/featurize.hpp"
#include "crossview/segmodel.hpp"

namespace crossview::cli {

namespace {

struct Experiment {
  TrainOptions opts;
  std::string arm;
  nlohmann::json raw;
};

// Arms mirror the ablation axes: supervised-only, raw-cosine metric,
// geodesic metric, geodesic plus view-condition prompting.
void apply_arm(Experiment& exp) {
  if (exp.arm == "no_adapt") {
    exp.opts.metric = MetricKind::kNone;
    exp.opts.use_prompt = false;
  } else if (exp.arm == "euclidean") {
    exp.opts.metric = MetricKind::kEuclidean;
    exp.opts.use_prompt = false;
    exp.opts.adapt.lambda_p = 0.0;
  } else if (exp.arm == "geodesic") {
    exp.opts.metric = MetricKind::kGeodesic;
    exp.opts.use_prompt = false;
    exp.opts.adapt.lambda_p = 0.0;
  } else if (exp.arm == "geodesic_prompt") {
    exp.opts.metric = MetricKind::kGeodesic;
    exp.opts.use_prompt = true;
  } else {
    throw DataError("unknown arm: " + exp.arm +
                    " (expected no_adapt|euclidean|geodesic|geodesic_prompt)");
  }
}

Experiment parse_experiment(const std::string& path,
                            const std::string& arm_override,
                            std::optional<std::uint64_t> seed_override) {
  Experiment exp;
  exp.raw = read_json_file(path);
  const nlohmann::json& j = exp.raw;

  exp.opts.seed = j.value("seed", std::uint64_t{1});
  if (seed_override) exp.opts.seed = *seed_override;

  if (j.contains("adapt")) {
    exp.opts.adapt = adapt_config_from_json(j["adapt"].dump());
  }
  exp.opts.adapt.seed = exp.opts.seed;

  if (j.contains("model")) {
    const nlohmann::json& m = j["model"];
    exp.opts.model.patch_radius =
        m.value("patch_radius", exp.opts.model.patch_radius);
    exp.opts.model.learning_rate =
        m.value("learning_rate", exp.opts.model.learning_rate);
    exp.opts.model.momentum = m.value("momentum", exp.opts.model.momentum);
    exp.opts.model.epochs = m.value("epochs", exp.opts.model.epochs);
    exp.opts.model.init_scale =
        m.value("init_scale", exp.opts.model.init_scale);
    exp.opts.model.prompt_dim =
        m.value("prompt_dim", exp.opts.model.prompt_dim);
    exp.opts.model.prompt_bias_scale =
        m.value("prompt_bias_scale", exp.opts.model.prompt_bias_scale);
    exp.opts.model.adapt_grad_clip =
        m.value("adapt_grad_clip", exp.opts.model.adapt_grad_clip);
    exp.opts.model.adapt_warmup_epochs =
        m.value("adapt_warmup_epochs", exp.opts.model.adapt_warmup_epochs);
    exp.opts.model.lr_decay_power =
        m.value("lr_decay_power", exp.opts.model.lr_decay_power);
  }
  if (j.contains("featurizer")) {
    exp.opts.image_feature_side =
        j["featurizer"].value("image_side", exp.opts.image_feature_side);
    exp.opts.seg_feature_side =
        j["featurizer"].value("seg_side", exp.opts.seg_feature_side);
  }

  exp.arm = arm_override.empty() ? j.value("arm", "geodesic") : arm_override;
  apply_arm(exp);
  return exp;
}

std::string curves_csv(const TrainReport& report) {
  std::string csv = "epoch,supervised,geo,prompt,total\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const EpochStats& s = report.epochs[e];
    csv += std::to_string(e) + "," + fmt(s.supervised) + "," + fmt(s.geo) +
           "," + fmt(s.prompt) + "," + fmt(s.total) + "\n";
  }
  return csv;
}

nlohmann::json report_json(const Experiment& exp, const TrainReport& report,
                           const std::vector<std::string>& classes) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochStats& s : report.epochs) {
    epochs.push_back({{"supervised", s.supervised},
                      {"geo", s.geo},
                      {"prompt", s.prompt},
                      {"total", s.total}});
  }
  nlohmann::json per_class;
  for (std::size_t c = 0; c < report.per_class_iou.size(); ++c) {
    if (report.per_class_iou[c].has_value()) {
      per_class[classes[c]] = *report.per_class_iou[c];
    } else {
      per_class[classes[c]] = nullptr;
    }
  }
  nlohmann::json j{{"arm", exp.arm},
                   {"seed", report.seed},
                   {"command", command_line()},
                   {"classes", classes},
                   {"config", exp.raw},
                   {"epochs", epochs},
                   {"warnings", report.warnings}};
  if (report.final_miou.has_value()) {
    j["final_miou"] = *report.final_miou;
    j["per_class_iou"] = per_class;
  } else {
    j["final_miou"] = nullptr;
  }
  return j;
}

void run_train(const std::string& config_path, const std::string& data_dir,
               const std::string& out_dir, const std::string& arm_override,
               std::optional<std::uint64_t> seed_override) {
  Experiment exp = parse_experiment(config_path, arm_override, seed_override);

  const DatasetInfo info = read_dataset_info(data_dir);
  const DomainData source = load_domain(data_dir, "source", true);
  const DomainData target = load_domain(data_dir, "target", false);
  std::optional<DomainData> test;
  try {
    test = load_domain(data_dir, "target_test", true);
  } catch (const DataError&) {
    // no test split; mIoU stays unset
  }

  const TrainResult result =
      train(source, target, test ? &*test : nullptr, info.classes, exp.opts);

  std::filesystem::create_directories(out_dir);
  const std::string model_path = out_dir + "/model.gfkm";
  nlohmann::json model_extra{{"command", command_line()},
                             {"seed", exp.opts.seed},
                             {"arm", exp.arm}};
  save_model(model_path, result.model, info.classes, model_extra.dump());
  write_text_atomic(out_dir + "/curves.csv", curves_csv(result.report));
  write_sidecar(out_dir + "/curves.csv", exp.opts.seed);
  write_text_atomic(out_dir + "/report.json",
                    report_json(exp, result.report, info.classes).dump(2) + "\n");

  if (result.report.final_miou.has_value()) {
    std::printf("arm %s seed %llu: mIoU %.4f\n", exp.arm.c_str(),
                static_cast<unsigned long long>(exp.opts.seed),
                *result.report.final_miou);
  } else {
    std::printf("arm %s seed %llu: trained (no test split)\n",
                exp.arm.c_str(),
                static_cast<unsigned long long>(exp.opts.seed));
  }
  for (const auto& w : result.report.warnings) {
    std::printf("note: %s\n", w.c_str());
  }
}

void run_eval(const std::string& model_path, const std::string& data_dir,
              const std::string& split, const std::string& out_path) {
  const LoadedModel lm = load_model(model_path);
  const DomainData data = load_domain(data_dir, split, true);
  const Domain domain =
      split.rfind("target", 0) == 0 ? Domain::kDrone : Domain::kCar;

  ConfusionMatrix conf(lm.model.class_count);
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    conf.accumulate(data.masks[i],
                    hard_labels(predict(lm.model, data.images[i], domain)));
  }
  const MiouResult m = miou(conf);

  std::string csv = "class,iou\n";
  for (std::size_t c = 0; c < lm.classes.size(); ++c) {
    csv += lm.classes[c] + ",";
    if (m.per_class[c].has_value()) csv += fmt(*m.per_class[c]);
    csv += "\n";
  }
  csv += "miou," + fmt(m.miou) + "\n";

  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text_atomic(out_path, csv);
    write_sidecar(out_path, 0);
  }
}

void run_report(const std::vector<std::string>& runs,
                const std::string& out_path) {
  if (runs.empty()) throw DataError("report: no run directories given");

  struct ArmAgg {
    std::vector<double> mious;
    std::map<std::string, std::vector<double>> per_class;
  };
  std::map<std::string, ArmAgg> arms;
  std::vector<std::string> classes;

  for (const auto& run : runs) {
    const nlohmann::json j = read_json_file(run + "/report.json");
    if (classes.empty()) {
      classes = j.at("classes").get<std::vector<std::string>>();
    }
    if (j.at("final_miou").is_null()) {
      throw DataError("report: run has no test mIoU: " + run);
    }
    ArmAgg& agg = arms[j.at("arm").get<std::string>()];
    agg.mious.push_back(j.at("final_miou").get<double>());
    for (const auto& name : classes) {
      const auto& v = j.at("per_class_iou").at(name);
      if (!v.is_null()) agg.per_class[name].push_back(v.get<double>());
    }
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  std::string csv = "arm,n_runs";
  for (const auto& name : classes) csv += "," + name;
  csv += ",miou\n";
  const std::vector<std::string> order = {"no_adapt", "euclidean", "geodesic",
                                          "geodesic_prompt"};
  std::vector<std::string> keys;
  for (const auto& name : order) {
    if (arms.count(name)) keys.push_back(name);
  }
  for (const auto& [name, agg] : arms) {
    if (std::find(keys.begin(), keys.end(), name) == keys.end()) {
      keys.push_back(name);
    }
  }
  for (const auto& name : keys) {
    const ArmAgg& agg = arms.at(name);
    csv += name + "," + std::to_string(agg.mious.size());
    for (const auto& cls : classes) {
      csv += ",";
      const auto it = agg.per_class.find(cls);
      if (it != agg.per_class.end() && !it->second.empty()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", mean(it->second));
        csv += buf;
      }
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", mean(agg.mious));
    csv += std::string(",") + buf + "\n";
  }

  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text_atomic(out_path, csv);
    write_sidecar(out_path, 0);
  }
}

}  // namespace

void register_train(CLI::App& app) {
  auto* tr = app.add_subcommand("train", "Train the segmentation model");
  auto config = std::make_shared<std::string>();
  auto data = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto arm = std::make_shared<std::string>();
  auto seed = std::make_shared<std::int64_t>(-1);
  tr->add_option("--config", *config, "Experiment config JSON")->required();
  tr->add_option("--data", *data, "Dataset directory")->required();
  tr->add_option("--out", *out, "Run output directory")->required();
  tr->add_option("--arm", *arm,
                 "Override arm: no_adapt|euclidean|geodesic|geodesic_prompt");
  tr->add_option("--seed", *seed, "Override seed");
  tr->callback([config, data, out, arm, seed] {
    std::optional<std::uint64_t> seed_override;
    if (*seed >= 0) seed_override = static_cast<std::uint64_t>(*seed);
    run_train(*config, *data, *out, *arm, seed_override);
  });
}

void register_eval(CLI::App& app) {
  auto* ev = app.add_subcommand("eval", "Evaluate a model on a labeled split");
  auto model = std::make_shared<std::string>();
  auto data = std::make_shared<std::string>();
  auto split = std::make_shared<std::string>("target_test");
  auto out = std::make_shared<std::string>();
  ev->add_option("--model", *model, "model.gfkm from train")->required();
  ev->add_option("--data", *data, "Dataset directory")->required();
  ev->add_option("--split", *split, "Split name (default target_test)");
  ev->add_option("--out", *out, "Write CSV here instead of stdout");
  ev->callback([model, data, split, out] {
    run_eval(*model, *data, *split, *out);
  });
}

void register_report(CLI::App& app) {
  auto* rep = app.add_subcommand("report", "Aggregate run directories");
  auto runs = std::make_shared<std::vector<std::string>>();
  auto out = std::make_shared<std::string>();
  rep->add_option("--runs", *runs, "Run directories")->required()
      ->expected(-1);
  rep->add_option("--out", *out, "Write CSV here instead of stdout");
  rep->callback([runs, out] { run_report(*runs, *out); });
}

}  // namespace crossview::cli
