#include "qfsl/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "qfsl/data.hpp"
#include "qfsl/error.hpp"
#include "qfsl/eval.hpp"
#include "qfsl/gradcheck.hpp"
#include "qfsl/text.hpp"
#include "qfsl/trainer.hpp"

namespace qfsl {

namespace {

struct TrainFlags {
  std::string mode = "qfsl";
  TrainConfig cfg;
  bool no_visual_layer = false;
  std::vector<std::size_t> bridge_hidden;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--mode", f.mode, "qfsl or inductive (QFSL-)")->check(CLI::IsMember({"qfsl", "inductive"}));
  cmd->add_option("--lambda", f.cfg.lambda, "bias-loss weight")->capture_default_str();
  cmd->add_option("--gamma", f.cfg.gamma, "L2 weight")->capture_default_str();
  cmd->add_option("--lr", f.cfg.learning_rate, "learning rate")->capture_default_str();
  cmd->add_option("--batch", f.cfg.batch_size, "minibatch size")->capture_default_str();
  cmd->add_option("--iterations", f.cfg.iterations, "SGD iterations")->capture_default_str();
  cmd->add_option("--seed", f.cfg.seed, "initialization and sampling seed")->capture_default_str();
  cmd->add_option("--visual-trainable", f.cfg.visual_trainable, "true or false")->capture_default_str();
  cmd->add_option("--momentum", f.cfg.momentum, "SGD momentum")->capture_default_str();
  cmd->add_flag("--regularize-biases", f.cfg.regularize_biases, "include biases in the L2 term");
  cmd->add_flag("--no-visual-layer", f.no_visual_layer, "feed features straight to the bridge");
  cmd->add_option("--bridge-hidden", f.bridge_hidden, "comma-separated hidden widths")->delimiter(',');
}

TrainConfig resolve(const TrainFlags& f) {
  TrainConfig cfg = f.cfg;
  cfg.mode = f.mode == "inductive" ? TrainMode::Inductive : TrainMode::Qfsl;
  cfg.visual_layer = !f.no_visual_layer;
  if (!f.bridge_hidden.empty()) cfg.bridge_hidden = f.bridge_hidden;
  cfg.validate();
  return cfg;
}

void print_config(std::ostream& out, const TrainConfig& cfg) {
  out << "config: mode=" << (cfg.mode == TrainMode::Qfsl ? "qfsl" : "inductive") << " lambda=" << cfg.lambda
      << " gamma=" << cfg.gamma << " lr=" << cfg.learning_rate << " batch=" << cfg.batch_size
      << " iterations=" << cfg.iterations << " seed=" << cfg.seed
      << " visual_layer=" << (cfg.visual_layer ? "true" : "false")
      << " visual_trainable=" << (cfg.visual_trainable ? "true" : "false") << " momentum=" << cfg.momentum
      << " regularize_biases=" << (cfg.regularize_biases ? "true" : "false");
  if (cfg.bridge_hidden) {
    out << " bridge_hidden=";
    for (std::size_t i = 0; i < cfg.bridge_hidden->size(); ++i) out << (i ? "," : "") << (*cfg.bridge_hidden)[i];
  }
  out << '\n';
}

std::ofstream open_output(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

int cmd_gen_synth(const SynthSpec& spec, const std::string& out_dir, std::ostream& out) {
  out << "config: source_classes=" << spec.num_source << " target_classes=" << spec.num_target
      << " per_class=" << spec.per_class << " dim=" << spec.feature_dim << " attr_dim=" << spec.attr_dim
      << " noise=" << spec.noise_sigma << " seed=" << spec.mixing_seed << " data_seed=" << spec.data_seed << '\n';
  const ZslData data = generate_synthetic(spec);
  save_dataset_dir(out_dir, data);
  const auto& ds = data.dataset;
  out << "wrote " << out_dir << ": " << ds.instances().size() << " instances (" << ds.count(Role::SourceTrain)
      << " source-train, " << ds.count(Role::SourceTest) << " source-test, " << ds.count(Role::TargetPool)
      << " target-pool, " << ds.count(Role::TargetTest) << " target-test)\n";
  return kExitOk;
}

int cmd_train(const TrainFlags& flags, const std::string& data_dir, const std::string& model_path,
              const std::string& log_path, std::ostream& out) {
  const TrainConfig cfg = resolve(flags);
  out << "data: " << data_dir << "\nmodel: " << model_path << '\n';
  print_config(out, cfg);
  const ZslData data = load_dataset_dir(data_dir);
  const TrainResult result = train(data.dataset, data.attributes, cfg);
  save_model(model_path, result.model);
  if (!log_path.empty()) {
    auto log = open_output(log_path);
    write_train_log(log, result.log);
  }
  const auto& last = result.log.entries.back();
  char buf[160];
  std::snprintf(buf, sizeof buf, "final loss %.6g (classification %.6g, bias %.6g, regularization %.6g)\n",
                last.total, last.classification_term, last.bias_term, last.regularization_term);
  out << buf;
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(result.log.model_checksum));
  out << "model checksum " << buf << ", " << result.log.wall_seconds << " s\n";
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir, const std::string& setting_name,
             const std::string& report_path, std::ostream& out) {
  const Setting setting = setting_name == "conventional" ? Setting::Conventional : Setting::Generalized;
  out << "config: model=" << model_path << " data=" << data_dir << " setting=" << setting_name << '\n';
  const QfslModel model = load_model(model_path);
  const ZslData data = load_dataset_dir(data_dir);
  if (data.attributes.class_names() != model.attributes.class_names()) {
    throw DataError(DataIssue::UnknownClass, "model and dataset class lists differ");
  }
  const EvalReport report = evaluate(model, standard_test_set(data.dataset, setting), setting);
  print_report(out, "QFSL", report);
  if (!report_path.empty()) {
    auto file = open_output(report_path);
    write_report_tsv(file, "model", report);
  }
  return kExitOk;
}

struct ProtocolFlags {
  std::string kind;
  std::string data_dir;
  std::string out_path;
  std::vector<double> lambdas = kDefaultLambdas;
  std::vector<std::size_t> source_counts;
  std::vector<std::uint64_t> seeds;
};

int cmd_protocol(const ProtocolFlags& p, const TrainFlags& flags, std::ostream& out) {
  const TrainConfig cfg = resolve(flags);
  out << "protocol: " << p.kind << " data=" << p.data_dir << " out=" << p.out_path << '\n';
  print_config(out, cfg);
  const ZslData data = load_dataset_dir(p.data_dir);
  std::ostringstream table;
  if (p.kind == "two-fold") {
    const TwoFoldResult r = two_fold_transductive(data.dataset, data.attributes, cfg);
    const std::pair<std::string, const FoldReports*> rows[] = {
        {"fold1", &r.folds[0]}, {"fold2", &r.folds[1]}, {"average", &r.average}};
    for (const auto& [name, fr] : rows) {
      print_report(out, name, fr->conventional);
      print_report(out, name, fr->generalized);
    }
    bool header = true;
    for (const auto& [name, fr] : rows) {
      write_report_tsv(table, name, fr->generalized, header);
      header = false;
    }
    header = true;
    for (const auto& [name, fr] : rows) {
      write_report_tsv(table, name, fr->conventional, header);
      header = false;
    }
  } else if (p.kind == "lambda-sweep") {
    out << "lambdas:";
    for (double l : p.lambdas) out << ' ' << l;
    out << '\n';
    const auto rows = lambda_sweep(data.dataset, data.attributes, cfg, p.lambdas, p.seeds);
    write_sweep_tsv(table, "lambda", rows);
  } else {
    std::vector<std::size_t> counts = p.source_counts;
    if (counts.empty()) counts.push_back(data.attributes.num_source());
    const auto rows = imbalance_sweep(data, counts, cfg, p.seeds);
    write_sweep_tsv(table, "source_classes", rows);
  }
  out << table.str();
  auto file = open_output(p.out_path);
  file << table.str();
  return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out) {
  out << "config: seed=" << opt.seed << " tolerance=" << opt.tolerance << " step=" << opt.step << '\n';
  const GradcheckReport report = run_gradcheck(opt);
  print_gradcheck(out, report, opt.tolerance);
  return report.passed ? kExitOk : kExitGradcheck;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transductive zero-shot learning with a bias-regularized attribute classifier", "qfsl"};
  app.require_subcommand(1);

  SynthSpec spec;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic dataset");
  gen->add_option("--out", synth_out, "output directory")->required();
  gen->add_option("--source-classes", spec.num_source)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--target-classes", spec.num_target)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--per-class", spec.per_class)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--dim", spec.feature_dim, "feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--attr-dim", spec.attr_dim)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--noise", spec.noise_sigma)->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", spec.mixing_seed, "attribute and mixing-matrix seed")->capture_default_str();
  gen->add_option("--data-seed", spec.data_seed, "feature noise seed")->capture_default_str();

  TrainFlags train_flags;
  std::string data_dir, model_path, log_path;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", data_dir, "dataset directory")->required();
  train_cmd->add_option("--out", model_path, "model file")->required();
  train_cmd->add_option("--log", log_path, "training log (tsv)");
  add_train_flags(train_cmd, train_flags);

  std::string setting, report_path;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model");
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--data", data_dir)->required();
  eval_cmd->add_option("--setting", setting)->required()->check(CLI::IsMember({"conventional", "generalized"}));
  eval_cmd->add_option("--report", report_path, "report file (tsv)");

  ProtocolFlags proto;
  TrainFlags proto_flags;
  auto* proto_cmd = app.add_subcommand("protocol", "two-fold transductive run or sweeps");
  proto_cmd->add_option("kind", proto.kind)->required()->check(
      CLI::IsMember({"two-fold", "lambda-sweep", "imbalance-sweep"}));
  proto_cmd->add_option("--data", proto.data_dir)->required();
  proto_cmd->add_option("--out", proto.out_path)->required();
  proto_cmd->add_option("--lambdas", proto.lambdas)->delimiter(',');
  proto_cmd->add_option("--source-counts", proto.source_counts)->delimiter(',');
  proto_cmd->add_option("--seeds", proto.seeds, "training seeds to average over")->delimiter(',');
  add_train_flags(proto_cmd, proto_flags);

  GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  grad_cmd->add_option("--seed", grad.seed)->capture_default_str();
  grad_cmd->add_option("--tolerance", grad.tolerance)->capture_default_str();
  grad_cmd->add_flag("--inject-bug", grad.inject_bug)->group("");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    if (app.get_subcommands().empty()) {
      err << app.help();
    } else {
      err << app.get_subcommands().front()->help();
    }
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(spec, synth_out, out);
    if (train_cmd->parsed()) return cmd_train(train_flags, data_dir, model_path, log_path, out);
    if (eval_cmd->parsed()) return cmd_eval(model_path, data_dir, setting, report_path, out);
    if (proto_cmd->parsed()) return cmd_protocol(proto, proto_flags, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Config: return kExitUsage;
      case ErrorKind::Data: return kExitData;
      case ErrorKind::Numerical: return kExitNumerical;
    }
  }
  return kExitUsage;
}

}  // namespace qfsl
