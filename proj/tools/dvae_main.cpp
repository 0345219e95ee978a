// Command-line entry point: dvae <command> [options]. Options may also come
// from a flat config file given with --config; flags override file values.
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dvae/experiments/commands.hpp"

namespace ex = dvae::experiments;

namespace {

dvae::dag::Domain parse_domain(const std::string& s) { return dvae::dag::domain_from_string(s); }

void add_common(CLI::App* cmd, ex::Common& common, std::string& exec, std::string& config) {
  cmd->add_option("--seed", common.seed, "Run seed")->capture_default_str();
  cmd->add_option("--out-dir", common.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--exec", exec, "serial or parallel")->check(CLI::IsMember({"serial", "parallel"}))->capture_default_str();
  cmd->add_flag("-v,--verbose", common.verbose, "Progress on stderr");
  cmd->add_option("--config", config, "Flat key = value config file");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Rewrites `--config FILE` into --key=value tokens placed right after the
// command name. Options take their last value, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config line without '=': " + line);
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    injected.push_back("--" + trim(line.substr(0, eq)) + "=" + value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAG variational autoencoder experiments"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  ex::Common common;
  std::string exec = "parallel";
  std::string config;
  std::string domain = "bn";

  ex::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a scored random dataset");
  add_common(gen_cmd, common, exec, config);
  gen_cmd->add_option("--domain", domain, "nn or bn")->capture_default_str();
  gen_cmd->add_option("--count", gen.count, "Number of distinct dags")->capture_default_str();
  gen_cmd->add_option("--layers", gen.layers, "Neural-arch operation layers")->capture_default_str();
  gen_cmd->add_option("--skip-prob", gen.skip_prob, "Neural-arch skip probability")->capture_default_str();
  gen_cmd->add_option("--edge-prob", gen.edge_prob, "Bayes-net edge probability (0: 2/(k-1))")->capture_default_str();

  ex::TrainOptions train;
  bool bidir = false, no_bidir = false;
  std::string resume;
  auto* train_cmd = app.add_subcommand("train", "Train the VAE");
  add_common(train_cmd, common, exec, config);
  train_cmd->add_option("--data", train.data, "Training dataset (JSON lines)")->required();
  train_cmd->add_option("--domain", domain, "nn or bn")->capture_default_str();
  train_cmd->add_option("--hidden", train.hidden, "Hidden size")->capture_default_str();
  train_cmd->add_option("--latent", train.latent, "Latent size")->capture_default_str();
  train_cmd->add_option("--epochs", train.train.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", train.train.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", train.train.learning_rate)->capture_default_str();
  train_cmd->add_option("--alpha", train.train.alpha, "KL weight")->capture_default_str();
  train_cmd->add_option("--patience", train.train.patience)->capture_default_str();
  train_cmd->add_option("--decay", train.train.decay)->capture_default_str();
  train_cmd->add_option("--checkpoint-every", train.train.checkpoint_every)->capture_default_str();
  train_cmd->add_option("--checkpoint", resume, "Resume from this checkpoint");
  train_cmd->add_flag("--bidirectional", bidir);
  train_cmd->add_flag("--no-bidirectional", no_bidir);

  ex::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval-basic", "Reconstruction, validity, uniqueness, novelty");
  add_common(eval_cmd, common, exec, config);
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--data", eval.train, "Training dataset")->required();
  eval_cmd->add_option("--test", eval.test, "Test dataset")->required();

  ex::PredictiveOptions pred;
  auto* pred_cmd = app.add_subcommand("eval-predictive", "GP regression on latent means");
  add_common(pred_cmd, common, exec, config);
  pred_cmd->add_option("--checkpoint", pred.data.checkpoint)->required();
  pred_cmd->add_option("--data", pred.data.train, "Training dataset")->required();
  pred_cmd->add_option("--test", pred.data.test, "Test dataset")->required();
  pred_cmd->add_option("--repeats", pred.repeats)->capture_default_str();
  pred_cmd->add_option("--gp-steps", pred.gp.steps)->capture_default_str();
  pred_cmd->add_option("--gp-max-fit-points", pred.gp.max_fit_points)->capture_default_str();

  ex::BoOptions bo;
  std::string bn_data;
  auto* bo_cmd = app.add_subcommand("bo", "Batch Bayesian optimization against random search");
  add_common(bo_cmd, common, exec, config);
  bo_cmd->add_option("--checkpoint", bo.checkpoint)->required();
  bo_cmd->add_option("--data", bo.train, "Scored training dataset")->required();
  bo_cmd->add_option("--trials", bo.trials)->capture_default_str();
  bo_cmd->add_option("--iterations", bo.bo.iterations)->capture_default_str();
  bo_cmd->add_option("--batch", bo.bo.batch)->capture_default_str();
  bo_cmd->add_option("--pool", bo.bo.candidates.pool)->capture_default_str();
  bo_cmd->add_option("--xi", bo.bo.xi)->capture_default_str();
  bo_cmd->add_option("--bn-data", bn_data, "Bayes-net data file (default: committed data)");

  ex::InterpolateOptions interp;
  auto* interp_cmd = app.add_subcommand("interpolate", "Decode a great circle through a dag's embedding");
  add_common(interp_cmd, common, exec, config);
  interp_cmd->add_option("--checkpoint", interp.checkpoint)->required();
  interp_cmd->add_option("--dag", interp.start, "File whose first dag is the start point")->required();
  interp_cmd->add_option("--points", interp.points)->capture_default_str();

  ex::LatentGridOptions grid;
  auto* grid_cmd = app.add_subcommand("latent-grid", "Score a grid over the top two principal components");
  add_common(grid_cmd, common, exec, config);
  grid_cmd->add_option("--checkpoint", grid.checkpoint)->required();
  grid_cmd->add_option("--data", grid.train, "Training dataset")->required();
  grid_cmd->add_option("--resolution", grid.resolution)->capture_default_str();
  grid_cmd->add_option("--extent", grid.extent)->capture_default_str();
  grid_cmd->add_option("--bn-data", bn_data, "Bayes-net data file (default: committed data)");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());
  CLI11_PARSE(app, static_cast<int>(cargs.size()), cargs.data());
  common.exec = exec == "serial" ? dvae::Execution::serial : dvae::Execution::parallel;

  try {
    if (gen_cmd->parsed()) {
      gen.domain = parse_domain(domain);
      ex::cmd_gen_data(common, gen);
    } else if (train_cmd->parsed()) {
      train.domain = parse_domain(domain);
      if (bidir && no_bidir) throw std::invalid_argument("--bidirectional and --no-bidirectional conflict");
      if (bidir) train.bidirectional = true;
      if (no_bidir) train.bidirectional = false;
      if (!resume.empty()) train.resume = resume;
      ex::cmd_train(common, train);
    } else if (eval_cmd->parsed()) {
      ex::cmd_eval_basic(common, eval);
    } else if (pred_cmd->parsed()) {
      ex::cmd_eval_predictive(common, pred);
    } else if (bo_cmd->parsed()) {
      if (!bn_data.empty()) bo.bn_data = bn_data;
      ex::cmd_bo(common, bo);
    } else if (interp_cmd->parsed()) {
      ex::cmd_interpolate(common, interp);
    } else if (grid_cmd->parsed()) {
      if (!bn_data.empty()) grid.bn_data = bn_data;
      ex::cmd_latent_grid(common, grid);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
