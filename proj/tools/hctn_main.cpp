// hctn — temporal QoS prediction pipeline driver.
//
// Subcommands: ingest, split, train, predict, evaluate, greysheep, outliers,
// sweep, synth. A flat key=value --config file supplies defaults; explicit
// flags always win. Exit codes: 0 ok, 1 usage/configuration, 2 data error,
// 3 numeric error.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hctn/config.hpp"
#include "hctn/errors.hpp"
#include "hctn/gmm.hpp"
#include "hctn/hypergraph.hpp"
#include "hctn/isolation_forest.hpp"
#include "hctn/metrics.hpp"
#include "hctn/model.hpp"
#include "hctn/synth.hpp"
#include "hctn/train.hpp"

namespace {

using namespace hctn;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_seconds(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

/// Key=value defaults loaded from --config; flag values still override.
class Defaults {
 public:
  void load(const std::string& path) {
    if (!path.empty()) cfg_ = ConfigFile::load(path);
  }
  template <typename T>
  void apply(const std::string& key, T& var) const {
    if (!cfg_.has(key)) return;
    std::istringstream is(cfg_.get(key));
    T parsed;
    if (!(is >> parsed)) throw ConfigError("config key '" + key + "' has a malformed value");
    var = parsed;
  }
  void apply(const std::string& key, bool& var) const {
    if (!cfg_.has(key)) return;
    const std::string& v = cfg_.get(key);
    var = v == "1" || v == "true" || v == "yes" || v == "on";
  }
  void apply(const std::string& key, std::string& var) const {
    if (cfg_.has(key)) var = cfg_.get(key);
  }

 private:
  ConfigFile cfg_;
};

struct DataArgs {
  std::string path;
  std::size_t users = 0, services = 0, timesteps = 0;

  void attach(CLI::App* cmd, const Defaults& cfg) {
    cfg.apply("data", path);
    cfg.apply("users", users);
    cfg.apply("services", services);
    cfg.apply("timesteps", timesteps);
    cmd->add_option("--data", path, "WSDREAM-format input file")->required(path.empty());
    cmd->add_option("--users", users, "user count n")->required(users == 0);
    cmd->add_option("--services", services, "service count m")->required(services == 0);
    cmd->add_option("--timesteps", timesteps, "time step count T")->required(timesteps == 0);
  }

  SparseQoSTensor load() const {
    return load_wsdream(path, users, services, timesteps).tensor;
  }
};

struct SplitArgs {
  double psi = 0.1;
  double validation_fraction = 0.2;
  std::size_t tau = 8;
  long long target_time = -1;  // default: last step
  std::string cold_mode;
  double xi = 0.0;

  void attach(CLI::App* cmd, const Defaults& cfg) {
    cfg.apply("psi", psi);
    cfg.apply("validation_fraction", validation_fraction);
    cfg.apply("tau", tau);
    cfg.apply("target_time", target_time);
    cfg.apply("cold_mode", cold_mode);
    cfg.apply("xi", xi);
    cmd->add_option("--psi", psi, "training fraction at the target step");
    cmd->add_option("--validation-fraction", validation_fraction,
                    "share of the training sample held out for validation");
    cmd->add_option("--tau", tau, "history window length");
    cmd->add_option("--target-time", target_time, "prediction time step (default: last)");
    cmd->add_option("--cold-mode", cold_mode, "cold-start simulation: CU, CS or CB");
    cmd->add_option("--xi", xi, "cold-start removal percentage");
  }

  SplitSpec spec(const SparseQoSTensor& tensor, std::uint64_t seed) const {
    SplitSpec s;
    s.train_fraction = psi;
    s.validation_fraction = validation_fraction;
    s.window = tau;
    s.target_time = target_time < 0 ? tensor.time_steps() - 1
                                    : static_cast<std::size_t>(target_time);
    s.seed = seed;
    if (!cold_mode.empty()) {
      ColdStartSpec cs;
      if (cold_mode == "CU") {
        cs.mode = ColdStartMode::CU;
      } else if (cold_mode == "CS") {
        cs.mode = ColdStartMode::CS;
      } else if (cold_mode == "CB") {
        cs.mode = ColdStartMode::CB;
      } else {
        throw ConfigError("cold mode must be CU, CS or CB");
      }
      cs.xi_percent = xi;
      s.cold_start = cs;
    }
    return s;
  }
};

struct ModelArgs {
  Hyperparams hp;
  double train_lambda = 0.0;
  bool no_gmm = false;
  bool unfreeze_gpam = false;
  std::string loss = "cauchy";

  void attach(CLI::App* cmd, const Defaults& cfg) {
    cfg.apply("f1", hp.f1);
    cfg.apply("f2", hp.f2);
    cfg.apply("f4", hp.f4);
    cfg.apply("layers", hp.layers);
    cfg.apply("heads", hp.heads);
    cfg.apply("kernel", hp.kernel);
    cfg.apply("dropout", hp.dropout);
    cfg.apply("gamma", hp.gamma);
    cfg.apply("c1", hp.c1);
    cfg.apply("c2", hp.c2);
    cfg.apply("lr", hp.lr);
    cfg.apply("weight_decay", hp.weight_decay);
    cfg.apply("epochs", hp.max_epochs);
    cfg.apply("patience", hp.patience);
    cfg.apply("nmf_iters", hp.nmf_iters);
    cfg.apply("loss", loss);
    cfg.apply("no_gmm", no_gmm);
    cfg.apply("unfreeze_gpam", unfreeze_gpam);
    cfg.apply("train_lambda", train_lambda);
    cmd->add_option("--f1", hp.f1, "factorization rank");
    cmd->add_option("--f2", hp.f2, "collaborative feature width (divisible by 4)");
    cmd->add_option("--f4", hp.f4, "prediction head width");
    cmd->add_option("--layers", hp.layers, "HCN convolution depth");
    cmd->add_option("--heads", hp.heads, "attention heads (must divide f2/4)");
    cmd->add_option("--kernel", hp.kernel, "temporal conv kernel size");
    cmd->add_option("--dropout", hp.dropout, "dropout rate");
    cmd->add_option("--gamma", hp.gamma, "Cauchy loss scale");
    cmd->add_option("--c1", hp.c1, "greysheep user threshold constant");
    cmd->add_option("--c2", hp.c2, "greysheep service threshold constant");
    cmd->add_option("--lr", hp.lr, "learning rate");
    cmd->add_option("--weight-decay", hp.weight_decay, "decoupled weight decay");
    cmd->add_option("--epochs", hp.max_epochs, "maximum training epochs");
    cmd->add_option("--patience", hp.patience, "early-stop patience");
    cmd->add_option("--nmf-iters", hp.nmf_iters, "factorization iterations per step");
    cmd->add_option("--loss", loss, "training objective: cauchy or mse");
    cmd->add_flag("--no-gmm", no_gmm, "disable the greysheep mitigation module");
    cmd->add_flag("--unfreeze-gpam", unfreeze_gpam, "fine-tune the factor embeddings");
    cmd->add_option("--train-lambda", train_lambda,
                    "percent of training records removed as outliers before fitting");
  }

  Hyperparams finalize(const SplitArgs& split, std::uint64_t seed) const {
    Hyperparams out = hp;
    out.window = split.tau;
    out.seed = seed;
    out.use_gmm = !no_gmm;
    out.freeze_gpam = !unfreeze_gpam;
    if (loss == "cauchy") {
      out.loss = LossKind::Cauchy;
    } else if (loss == "mse") {
      out.loss = LossKind::Mse;
    } else {
      throw ConfigError("loss must be cauchy or mse");
    }
    out.validate();
    return out;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  return os;
}

void write_epoch_log(std::ostream& os, std::uint64_t seed, const std::vector<EpochLog>& log) {
  os << "# seed=" << seed << "\n";
  os << "epoch,train_loss,val_mae,val_rmse,seconds\n";
  for (const auto& e : log) {
    os << e.epoch << "," << fmt(e.train_loss) << "," << fmt(e.val_mae) << ","
       << fmt(e.val_rmse) << "," << fmt_seconds(e.seconds) << "\n";
  }
}

// ---- subcommand drivers ----

int run_ingest(const DataArgs& data) {
  LoadReport rep = load_wsdream(data.path, data.users, data.services, data.timesteps);
  std::cout << "users,services,timesteps,records,density_percent,min_value,max_value,"
               "rejected_nonpositive,duplicates_dropped\n";
  std::cout << data.users << "," << data.services << "," << data.timesteps << ","
            << rep.tensor.record_count() << "," << fmt(rep.tensor.density() * 100.0) << ","
            << fmt(rep.min_value) << "," << fmt(rep.max_value) << "," << rep.rejected_nonpositive
            << "," << rep.duplicates_dropped << "\n";
  return 0;
}

int run_split(const DataArgs& data, const SplitArgs& split, std::uint64_t seed,
              const std::string& out_dir) {
  SparseQoSTensor tensor = data.load();
  const SplitSpec spec = split.spec(tensor, seed);
  SplitResult r = make_split(tensor, spec);
  std::cout << "# seed=" << seed << "\n";
  std::cout << "train_records,target_train_records,validation_records,test_records\n";
  std::cout << r.train.record_count() << "," << r.train.slice(spec.target_time).count() << ","
            << r.validation.size() << "," << r.test.size() << "\n";
  if (!out_dir.empty()) {
    write_wsdream(out_dir + "/train.txt", r.train);
    auto dump = [](const std::string& path, const std::vector<QoSRecord>& recs) {
      std::ofstream os(path);
      for (const auto& rec : recs) {
        os << rec.user << " " << rec.service << " " << rec.time << " " << fmt(rec.value) << "\n";
      }
    };
    dump(out_dir + "/validation.txt", r.validation);
    dump(out_dir + "/test.txt", r.test);
  }
  return 0;
}

int run_train(const DataArgs& data, const SplitArgs& split, const ModelArgs& model,
              std::uint64_t seed, const std::string& checkpoint_path,
              const std::string& log_path, const std::string& dump_graphs) {
  SparseQoSTensor tensor = data.load();
  TrainOptions opts;
  opts.split = split.spec(tensor, seed);
  opts.hp = model.finalize(split, seed);
  opts.train_outlier_lambda = model.train_lambda;

  if (!dump_graphs.empty()) {
    for (std::size_t i = 0; i < opts.split.window; ++i) {
      const std::size_t t = opts.split.target_time - opts.split.window + i;
      dump_snapshot(build_snapshot(tensor, t), dump_graphs);
    }
  }

  TrainOutcome out = train_model(tensor, opts);
  out.model.to_checkpoint(out.inputs).save(checkpoint_path);
  if (!log_path.empty()) {
    auto os = open_out(log_path);
    write_epoch_log(os, seed, out.log);
  }
  // stdout stays timing-free so reruns are byte-identical; wall-clock
  // seconds live in the --log file
  std::cout << "# seed=" << seed << "\n";
  std::cout << "epochs_run,best_epoch,best_val_mae,final_train_loss,checkpoint\n";
  std::cout << out.log.size() << "," << out.best_epoch << "," << fmt(out.best_val_mae) << ","
            << fmt(out.log.empty() ? 0.0 : out.log.back().train_loss) << "," << checkpoint_path
            << "\n";
  return 0;
}

int run_predict(const DataArgs& data, const SplitArgs& split, std::uint64_t seed,
                const std::string& checkpoint_path, const std::string& out_path,
                bool full_matrix) {
  SparseQoSTensor tensor = data.load();
  auto [model, latent] = HctnModel::from_checkpoint(Checkpoint::load(checkpoint_path));
  if (model.users() != tensor.users() || model.services() != tensor.services()) {
    throw DataError("checkpoint dims do not match the data tensor");
  }
  SplitSpec spec = split.spec(tensor, seed);
  if (spec.window != model.hyperparams().window) {
    throw DataError("checkpoint window " + std::to_string(model.hyperparams().window) +
                    " does not match --tau " + std::to_string(spec.window));
  }
  SplitResult r = make_split(tensor, spec);
  ModelInputs inputs = prepare_inputs(r.train, spec.target_time, model.hyperparams(), &latent);
  PredictionResult pred = model.predict(inputs);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    os = &file;
  }
  *os << "# seed=" << seed << "\n";
  *os << "user,service,predicted\n";
  if (full_matrix) {
    for (std::size_t u = 0; u < tensor.users(); ++u) {
      for (std::size_t s = 0; s < tensor.services(); ++s) {
        *os << u << "," << s << "," << fmt(pred.at(u, s)) << "\n";
      }
    }
  } else {
    for (const auto& rec : r.test) {
      *os << rec.user << "," << rec.service << "," << fmt(pred.at(rec.user, rec.service)) << "\n";
    }
  }
  return 0;
}

int run_evaluate(const DataArgs& data, const SplitArgs& split, std::uint64_t seed,
                 const std::string& checkpoint_path, double lambda) {
  SparseQoSTensor tensor = data.load();
  auto [model, latent] = HctnModel::from_checkpoint(Checkpoint::load(checkpoint_path));
  if (model.users() != tensor.users() || model.services() != tensor.services()) {
    throw DataError("checkpoint dims do not match the data tensor");
  }
  SplitSpec spec = split.spec(tensor, seed);
  if (spec.window != model.hyperparams().window) {
    throw DataError("checkpoint window " + std::to_string(model.hyperparams().window) +
                    " does not match --tau " + std::to_string(spec.window));
  }
  SplitResult r = make_split(tensor, spec);
  ModelInputs inputs = prepare_inputs(r.train, spec.target_time, model.hyperparams(), &latent);
  PredictionResult pred = model.predict(inputs);

  std::vector<QoSRecord> test = r.test;
  if (lambda > 0.0) {
    IsolationForestOptions ifo;
    ifo.seed = derive_seed(seed, 0x0F);
    test = remove_outliers(test, lambda, ifo).kept;
  }
  const Metrics m = evaluate(pred.qhat, test);
  std::cout << "# seed=" << seed << "\n";
  std::cout << "lambda,mae,rmse,count\n";
  std::cout << fmt(lambda) << "," << fmt(m.mae) << "," << fmt(m.rmse) << "," << m.count << "\n";
  return 0;
}

int run_greysheep(const DataArgs& data, const SplitArgs& split, double c1, double c2,
                  const std::string& out_path) {
  SparseQoSTensor tensor = data.load();
  const std::size_t target = split.target_time < 0 ? tensor.time_steps()
                                                   : static_cast<std::size_t>(split.target_time);
  const std::size_t window = split.tau > target ? target : split.tau;
  GreysheepReport rep = detect_greysheep(tensor, target, window, c1, c2);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    os = &file;
  }
  *os << "entity_kind,entity_id,time_step,gdi,labeled\n";
  for (std::size_t i = 0; i < window; ++i) {
    const std::size_t t = target - window + i;
    for (std::size_t u = 0; u < tensor.users(); ++u) {
      *os << "user," << u << "," << t << "," << fmt(rep.gdi_users.at(u, i)) << ","
          << static_cast<int>(rep.indicator[i].at(u, 0)) << "\n";
    }
    for (std::size_t s = 0; s < tensor.services(); ++s) {
      *os << "service," << s << "," << t << "," << fmt(rep.gdi_services.at(s, i)) << ","
          << static_cast<int>(rep.indicator[i].at(tensor.users() + s, 0)) << "\n";
    }
  }
  return 0;
}

int run_outliers(const DataArgs& data, double lambda, std::uint64_t seed,
                 const std::string& out_path) {
  SparseQoSTensor tensor = data.load();
  IsolationForestOptions ifo;
  ifo.seed = seed;
  const std::vector<QoSRecord> records = tensor.all_records();
  OutlierReport rep = remove_outliers(records, lambda, ifo);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    os = &file;
  }
  *os << "# seed=" << seed << "\n";
  *os << "user,service,time,value,score,removed\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    *os << r.user << "," << r.service << "," << r.time << "," << fmt(r.value) << ","
        << fmt(rep.scores[i]) << "," << (rep.removed_flag[i] ? 1 : 0) << "\n";
  }
  return 0;
}

int run_sweep(const DataArgs& data, const SplitArgs& split, const ModelArgs& model,
              std::uint64_t seed, const std::string& param, const std::string& values_csv,
              double lambda) {
  SparseQoSTensor tensor = data.load();
  std::vector<std::string> values;
  std::stringstream ss(values_csv);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(item);
  if (values.empty()) throw ConfigError("sweep: --values is empty");

  std::cout << "# seed=" << seed << "\n";
  std::cout << "param,value,status,mae,rmse,best_epoch\n";
  for (const std::string& value : values) {
    SplitArgs sp = split;
    ModelArgs mo = model;
    double run_lambda = lambda;
    if (param == "tau") {
      sp.tau = std::stoull(value);
    } else if (param == "layers") {
      mo.hp.layers = std::stoull(value);
    } else if (param == "heads") {
      mo.hp.heads = std::stoull(value);
    } else if (param == "f1") {
      mo.hp.f1 = std::stoull(value);
    } else if (param == "f2") {
      mo.hp.f2 = std::stoull(value);
    } else if (param == "f4") {
      mo.hp.f4 = std::stoull(value);
    } else if (param == "gamma") {
      mo.hp.gamma = std::stod(value);
    } else if (param == "lr") {
      mo.hp.lr = std::stod(value);
    } else if (param == "lambda") {
      run_lambda = std::stod(value);
    } else {
      throw ConfigError("sweep: unsupported parameter '" + param + "'");
    }
    try {
      TrainOptions opts;
      opts.split = sp.spec(tensor, seed);
      opts.hp = mo.finalize(sp, seed);
      opts.train_outlier_lambda = mo.train_lambda;
      TrainOutcome out = train_model(tensor, opts);
      PredictionResult pred = out.model.predict(out.inputs);
      std::vector<QoSRecord> test = out.split.test;
      if (run_lambda > 0.0) {
        IsolationForestOptions ifo;
        ifo.seed = derive_seed(seed, 0x0F);
        test = remove_outliers(test, run_lambda, ifo).kept;
      }
      const Metrics m = evaluate(pred.qhat, test);
      std::cout << param << "," << value << ",ok," << fmt(m.mae) << "," << fmt(m.rmse) << ","
                << out.best_epoch << "\n";
    } catch (const ConfigError& e) {
      std::cout << param << "," << value << ",config_error,,,\n";
      std::cerr << "sweep: " << value << ": " << e.what() << "\n";
    }
  }
  return 0;
}

int run_synth(const std::string& out_path, const SynthSpec& spec, double outlier_frac,
              double outlier_scale) {
  SparseQoSTensor tensor = generate_synthetic(spec);
  if (outlier_frac > 0.0) {
    CorruptionResult c = corrupt_records(tensor.all_records(), outlier_frac, outlier_scale,
                                         derive_seed(spec.seed, 0xBAD));
    tensor = with_records(tensor, std::move(c.records));
  }
  write_wsdream(out_path, tensor);
  std::cout << "# seed=" << spec.seed << "\n";
  std::cout << "path,users,services,timesteps,records,density_percent\n";
  std::cout << out_path << "," << tensor.users() << "," << tensor.services() << ","
            << tensor.time_steps() << "," << tensor.record_count() << ","
            << fmt(tensor.density() * 100.0) << "\n";
  return 0;
}

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  }
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HCTN temporal QoS prediction pipeline"};
  app.require_subcommand(1);

  Defaults cfg;
  try {
    cfg.load(find_config_path(argc, argv));
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::string config_path;
  app.add_option("--config", config_path, "key=value defaults file");

  std::uint64_t seed = 42;
  cfg.apply("seed", seed);
  app.add_option("--seed", seed, "seed for every randomized stage (default 42)");

  auto* ingest = app.add_subcommand("ingest", "load a dataset and report its statistics")->fallthrough();
  DataArgs ingest_data;
  ingest_data.attach(ingest, cfg);

  auto* split_cmd = app.add_subcommand("split", "build a train/validation/test partition")->fallthrough();
  DataArgs split_data;
  SplitArgs split_args;
  std::string split_out;
  split_data.attach(split_cmd, cfg);
  split_args.attach(split_cmd, cfg);
  split_cmd->add_option("--out-dir", split_out, "write train/validation/test record files here");

  auto* train_cmd = app.add_subcommand("train", "train the model end to end")->fallthrough();
  DataArgs train_data;
  SplitArgs train_split;
  ModelArgs train_model_args;
  std::string checkpoint_path = "hctn_model.bin";
  std::string log_path;
  std::string dump_graphs;
  train_data.attach(train_cmd, cfg);
  train_split.attach(train_cmd, cfg);
  train_model_args.attach(train_cmd, cfg);
  cfg.apply("checkpoint", checkpoint_path);
  cfg.apply("log", log_path);
  train_cmd->add_option("--checkpoint", checkpoint_path, "output checkpoint path");
  train_cmd->add_option("--log", log_path, "epoch log CSV path");
  train_cmd->add_option("--dump-graphs", dump_graphs, "dump window graphs as COO text files");

  auto* predict_cmd = app.add_subcommand("predict", "predict QoS values from a checkpoint")->fallthrough();
  DataArgs predict_data;
  SplitArgs predict_split;
  std::string predict_checkpoint = "hctn_model.bin";
  std::string predict_out;
  bool full_matrix = false;
  predict_data.attach(predict_cmd, cfg);
  predict_split.attach(predict_cmd, cfg);
  predict_cmd->add_option("--checkpoint", predict_checkpoint, "trained checkpoint");
  predict_cmd->add_option("--out", predict_out, "output CSV (default stdout)");
  predict_cmd->add_flag("--full-matrix", full_matrix, "emit every user-service pair");

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split")->fallthrough();
  DataArgs eval_data;
  SplitArgs eval_split;
  std::string eval_checkpoint = "hctn_model.bin";
  double eval_lambda = 0.0;
  eval_data.attach(eval_cmd, cfg);
  eval_split.attach(eval_cmd, cfg);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained checkpoint");
  eval_cmd->add_option("--lambda", eval_lambda, "percent of test records removed as outliers");

  auto* grey_cmd = app.add_subcommand("greysheep", "emit per-entity GDI values and labels")->fallthrough();
  DataArgs grey_data;
  SplitArgs grey_split;
  double grey_c1 = 1.0, grey_c2 = 1.0;
  std::string grey_out;
  grey_data.attach(grey_cmd, cfg);
  grey_split.attach(grey_cmd, cfg);
  grey_cmd->add_option("--c1", grey_c1, "user threshold constant");
  grey_cmd->add_option("--c2", grey_c2, "service threshold constant");
  grey_cmd->add_option("--out", grey_out, "output CSV (default stdout)");

  auto* outlier_cmd = app.add_subcommand("outliers", "score every record with the forest")->fallthrough();
  DataArgs outlier_data;
  double outlier_lambda = 0.0;
  std::string outlier_out;
  outlier_data.attach(outlier_cmd, cfg);
  outlier_cmd->add_option("--lambda", outlier_lambda, "removal percentage");
  outlier_cmd->add_option("--out", outlier_out, "output CSV (default stdout)");

  auto* sweep_cmd = app.add_subcommand("sweep", "train once per value of one hyperparameter")->fallthrough();
  DataArgs sweep_data;
  SplitArgs sweep_split;
  ModelArgs sweep_model;
  std::string sweep_param, sweep_values;
  double sweep_lambda = 0.0;
  sweep_data.attach(sweep_cmd, cfg);
  sweep_split.attach(sweep_cmd, cfg);
  sweep_model.attach(sweep_cmd, cfg);
  sweep_cmd->add_option("--param", sweep_param, "hyperparameter name")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
  sweep_cmd->add_option("--lambda", sweep_lambda, "test outlier removal percentage");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic fixture file")->fallthrough();
  SynthSpec synth_spec;
  std::string synth_out = "synthetic.txt";
  double synth_outlier_frac = 0.0, synth_outlier_scale = 20.0;
  cfg.apply("out", synth_out);
  synth_cmd->add_option("--out", synth_out, "output path");
  synth_cmd->add_option("--users", synth_spec.users, "user count");
  synth_cmd->add_option("--services", synth_spec.services, "service count");
  synth_cmd->add_option("--timesteps", synth_spec.time_steps, "time steps");
  synth_cmd->add_option("--rank", synth_spec.rank, "latent rank");
  synth_cmd->add_option("--density", synth_spec.density, "observation density");
  synth_cmd->add_option("--noise", synth_spec.noise, "relative noise level");
  synth_cmd->add_option("--greysheep-frac", synth_spec.greysheep_fraction,
                        "share of users with deviant profiles");
  synth_cmd->add_option("--greysheep-scale", synth_spec.greysheep_scale,
                        "scale multiplier for deviant profiles");
  synth_cmd->add_option("--outlier-frac", synth_outlier_frac, "share of records corrupted");
  synth_cmd->add_option("--outlier-scale", synth_outlier_scale, "corruption multiplier");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      return app.exit(e);
    }
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*ingest) return run_ingest(ingest_data);
    if (*split_cmd) return run_split(split_data, split_args, seed, split_out);
    if (*train_cmd) {
      return run_train(train_data, train_split, train_model_args, seed, checkpoint_path,
                       log_path, dump_graphs);
    }
    if (*predict_cmd) {
      return run_predict(predict_data, predict_split, seed, predict_checkpoint, predict_out,
                         full_matrix);
    }
    if (*eval_cmd) return run_evaluate(eval_data, eval_split, seed, eval_checkpoint, eval_lambda);
    if (*grey_cmd) return run_greysheep(grey_data, grey_split, grey_c1, grey_c2, grey_out);
    if (*outlier_cmd) return run_outliers(outlier_data, outlier_lambda, seed, outlier_out);
    if (*sweep_cmd) {
      return run_sweep(sweep_data, sweep_split, sweep_model, seed, sweep_param, sweep_values,
                       sweep_lambda);
    }
    if (*synth_cmd) {
      synth_spec.seed = seed;
      return run_synth(synth_out, synth_spec, synth_outlier_frac, synth_outlier_scale);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
