// diffplan: differentiable forward-chaining planner and reward-shaped RL
// trainers over the two-route DoorKey world, in one executable.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "diffplan/config.hpp"
#include "diffplan/doorkey.hpp"
#include "diffplan/infer.hpp"
#include "diffplan/planner.hpp"
#include "diffplan/rl.hpp"

namespace fs = std::filesystem;
using namespace diffplan;

namespace {

class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

logic::LogicProgram load_program(const std::string& path) {
  try {
    return logic::parse_program(slurp(path));
  } catch (const logic::ParseError& e) {
    throw UserError(path + ": " + e.what());
  }
}

std::string resolve_relative(const std::string& base_file,
                             const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || fs::exists(p)) return path;
  return (fs::path(base_file).parent_path() / p).string();
}

infer::Weights load_weights_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open weights file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool indexed = false;  // header "slot,clause_0,..." means column 0 is the slot id
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.starts_with("slot")) {
      indexed = true;
      continue;
    }
    std::vector<double> row;
    std::istringstream ss(line);
    std::string tok;
    bool first = true;
    while (std::getline(ss, tok, ',')) {
      if (first && indexed) {
        first = false;
        continue;
      }
      first = false;
      row.push_back(std::stod(tok));
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UserError("weights file is empty: " + path);
  infer::Weights w(rows.size(), rows[0].size());
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (rows[m].size() != rows[0].size())
      throw UserError("ragged weights file: " + path);
    for (std::size_t i = 0; i < rows[m].size(); ++i) w(m, i) = rows[m][i];
  }
  return w;
}

void save_weights_csv(const std::string& path, const infer::Weights& w) {
  std::ofstream out(path, std::ios::binary);
  out << "slot";
  for (int i = 0; i < w.cols(); ++i) out << ",clause_" << i;
  out << "\n";
  for (int m = 0; m < w.rows(); ++m) {
    out << m;
    for (int i = 0; i < w.cols(); ++i)
      out << ',' << config::format_double(w(m, i));
    out << "\n";
  }
}

doorkey::TaskVariant parse_variant(const std::string& name) {
  auto v = doorkey::task_variant_from_string(name);
  if (!v) throw UserError("unknown task variant: " + name);
  return *v;
}

rl::Algo parse_algo(const std::string& name) {
  if (name == "ppo") return rl::Algo::Ppo;
  if (name == "a2c") return rl::Algo::A2c;
  throw UserError("unknown algorithm: " + name);
}

rl::RewardModelKind parse_reward_kind(const std::string& name) {
  if (name == "none") return rl::RewardModelKind::None;
  if (name == "static") return rl::RewardModelKind::Static;
  if (name == "adaptive") return rl::RewardModelKind::Adaptive;
  throw UserError("unknown reward model: " + name);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw UserError("empty seed list");
  return seeds;
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_parse(const std::string& file, bool print) {
  const auto program = load_program(file);
  std::cout << "predicates=" << program.predicates.size()
            << " clauses=" << program.clauses.size()
            << " facts=" << program.facts.size() << "\n";
  if (print) std::cout << logic::print_program(program);
  return 0;
}

int cmd_ground(const std::string& file, const logic::GroundingLimits& limits,
               const std::string& dump_table, const std::string& dump_enc) {
  const auto program = load_program(file);
  const auto table = logic::enumerate_ground_atoms(program, limits);
  const auto enc = tensorize::encode_program(program, table, limits);
  std::cout << "G=" << table.size() << " S=" << enc.max_substitutions
            << " L=" << enc.max_body << " C=" << enc.clause_count() << "\n";
  if (!dump_table.empty()) {
    std::ofstream out(dump_table, std::ios::binary);
    out << "index,atom\n";
    for (int i = 0; i < table.size(); ++i)
      out << i << ',' << logic::to_string(table.atom(i)) << "\n";
  }
  if (!dump_enc.empty()) {
    std::ofstream out(dump_enc, std::ios::binary);
    tensorize::dump_encoding_csv(out, enc);
  }
  return 0;
}

int cmd_infer(const std::string& file, const std::string& facts_file,
              const std::string& weights_file, const std::string& query,
              double gamma, int steps, const logic::GroundingLimits& limits) {
  std::string text = slurp(file);
  if (!facts_file.empty()) {
    text += '\n';
    text += slurp(facts_file);
  }
  logic::LogicProgram program;
  try {
    program = logic::parse_program(text);
  } catch (const logic::ParseError& e) {
    throw UserError(std::string(e.what()));
  }
  const auto table = logic::enumerate_ground_atoms(program, limits);
  const auto enc = tensorize::encode_program(program, table, limits);

  infer::Weights w = weights_file.empty()
                         ? infer::one_hot_weights(enc.clause_count())
                         : load_weights_csv(weights_file);
  if (w.cols() != enc.clause_count())
    throw UserError("weights have " + std::to_string(w.cols()) +
                    " columns but the program has " +
                    std::to_string(enc.clause_count()) + " clauses");

  const auto atom = logic::parse_atom_text(query);
  const auto idx = table.try_index(atom);
  if (!idx) throw UserError("query atom not in ground-atom table: " + query);

  infer::InferConfig config{gamma, steps, static_cast<int>(w.rows())};
  const auto v0 = infer::valuation_from_facts(table, program.facts);
  const auto v = infer::infer(v0, enc, w, config);
  std::cout << config::format_double(v[*idx]) << "\n";
  return 0;
}

int cmd_learn_planner(const std::string& manifest_path, double lr, long steps,
                      const std::string& seed_list, int slots, double gamma,
                      const std::string& out_dir) {
  const auto manifest = config::FlatConfig::parse_file(manifest_path);

  logic::GroundingLimits limits;
  limits.max_term_depth =
      static_cast<int>(manifest.get_long("grounding.term_depth", 2));
  limits.max_substitutions = static_cast<std::size_t>(
      manifest.get_long("grounding.max_substitutions", 10000));
  limits.max_ground_atoms = static_cast<std::size_t>(
      manifest.get_long("grounding.max_atoms", 100000));

  struct Loaded {
    logic::LogicProgram program;
    logic::GroundAtomTable table;
    tensorize::ProgramEncoding encoding;
  };
  std::vector<std::unique_ptr<Loaded>> loaded;
  std::vector<infer::TrainTask> tasks;
  for (const auto& prefix : manifest.sections("task")) {
    auto program_key = manifest.get(prefix + "program");
    auto query_key = manifest.get(prefix + "query");
    if (!program_key || !query_key)
      throw UserError("task section needs program and query keys");
    auto entry = std::make_unique<Loaded>();
    entry->program = load_program(resolve_relative(manifest_path, *program_key));
    entry->table = logic::enumerate_ground_atoms(entry->program, limits);
    entry->encoding =
        tensorize::encode_program(entry->program, entry->table, limits);

    infer::TrainTask task;
    task.v0 = infer::valuation_from_facts(entry->table, entry->program.facts);
    task.target_index =
        entry->table.index_of(logic::parse_atom_text(*query_key));
    task.target = manifest.get_double(prefix + "target", 1.0);
    task.steps = static_cast<int>(manifest.get_long(prefix + "steps", 3));
    task.encoding = &entry->encoding;
    tasks.push_back(std::move(task));
    loaded.push_back(std::move(entry));
  }
  if (tasks.empty()) throw UserError("tasks manifest has no [task] sections");

  fs::create_directories(out_dir);
  const auto seeds = parse_seed_list(seed_list);
  for (auto seed : seeds) {
    const auto result =
        infer::train_rule_weights(tasks, slots, gamma, lr,
                                  static_cast<int>(steps), seed);
    if (result.diverged)
      throw std::runtime_error("training diverged (non-finite loss)");
    const std::string tag = "_seed" + std::to_string(seed);
    std::ofstream loss(out_dir + "/loss" + tag + ".csv", std::ios::binary);
    loss << "step,task_id,loss\n";
    for (const auto& r : result.trace)
      loss << r.step << ',' << r.task_id << ','
           << config::format_double(r.loss) << "\n";
    save_weights_csv(out_dir + "/weights" + tag + ".csv", result.weights);
  }

  config::FlatConfig resolved = manifest;
  resolved.set("learn.lr", config::format_double(lr));
  resolved.set("learn.steps", std::to_string(steps));
  resolved.set("learn.slots", std::to_string(slots));
  resolved.set("learn.gamma", config::format_double(gamma));
  resolved.set("learn.seeds", seed_list);
  config::write_manifest(out_dir, resolved,
                         "learn-planner " + manifest_path);
  return 0;
}

int cmd_plan(const std::string& file, const std::string& init,
             const std::string& goal, int max_len, bool no_guard,
             const std::string& distances) {
  const auto program = load_program(file);
  const auto moves = planner::clauses_to_moves(program);
  auto plans =
      planner::enumerate_plans(moves, logic::parse_atom_text(init),
                               logic::parse_atom_text(goal), max_len, !no_guard);
  if (plans.empty()) {
    std::cout << "no plans\n";
    return 0;
  }

  planner::SymbolicState state;
  state.progress = logic::parse_atom_text(init);
  for (const auto& m : moves) state.action_distance[m.action.predicate] = 0;
  if (!distances.empty()) {
    std::istringstream ss(distances);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw UserError("bad --distances entry: " + tok);
      state.action_distance[tok.substr(0, eq)] = std::stoi(tok.substr(eq + 1));
    }
  }
  const auto domain = planner::build_planner_domain(
      program, std::max(max_len, 1));
  planner::score_plans(plans, state, domain, state.progress,
                       logic::parse_atom_text(goal));

  for (std::size_t i = 0; i < plans.size(); ++i) {
    std::cout << "plan " << i << "\n" << planner::to_string(plans[i]) << "\n";
  }
  const auto& best = planner::select_best_plan(plans);
  for (std::size_t i = 0; i < plans.size(); ++i)
    if (&plans[i] == &best) std::cout << "best=" << i << "\n";
  return 0;
}

struct ExperimentSpec {
  doorkey::EnvConfig env;
  rl::Algo algo = rl::Algo::Ppo;
  rl::RewardModelKind reward_kind = rl::RewardModelKind::None;
  rl::TrainerConfig trainer;
  reward::RewardConfig reward_config;
  std::vector<std::uint64_t> seeds;
  std::string rules_path;
  bool log_rewards = false;
};

ExperimentSpec load_experiment(const std::string& path) {
  const auto cfg = config::FlatConfig::parse_file(path);
  static const std::set<std::string> known = {
      "env.size", "env.variant", "env.layout_seed",
      "train.algo", "train.reward_model", "train.total_frames",
      "train.seeds", "train.rules", "train.log_rewards",
      "trainer.epochs", "trainer.batch_size", "trainer.frames_per_proc",
      "trainer.discount", "trainer.lr", "trainer.gae_lambda",
      "trainer.entropy_coef", "trainer.value_loss_coef",
      "trainer.max_grad_norm", "trainer.clip_eps", "trainer.optim_eps",
      "trainer.optim_alpha", "trainer.workers",
      "reward.bonus", "reward.omega", "reward.shift"};
  for (const auto& [k, v] : cfg.entries())
    if (!known.count(k)) throw UserError("unknown config key: " + k);

  ExperimentSpec spec;
  spec.env.size = static_cast<int>(cfg.get_long("env.size", 8));
  spec.env.variant = parse_variant(cfg.get_or("env.variant", "reach_goal"));
  spec.env.layout_seed =
      static_cast<std::uint64_t>(cfg.get_long("env.layout_seed", 0));
  spec.algo = parse_algo(cfg.get_or("train.algo", "ppo"));
  spec.reward_kind =
      parse_reward_kind(cfg.get_or("train.reward_model", "none"));
  spec.trainer.total_frames = cfg.get_long("train.total_frames", 300000);
  spec.seeds = parse_seed_list(cfg.get_or("train.seeds", "1"));
  spec.rules_path = cfg.get_or("train.rules", "");
  if (!spec.rules_path.empty())
    spec.rules_path = resolve_relative(path, spec.rules_path);
  spec.log_rewards = cfg.get_bool("train.log_rewards", false);

  auto& t = spec.trainer;
  t.epochs = static_cast<int>(cfg.get_long("trainer.epochs", t.epochs));
  t.batch_size =
      static_cast<int>(cfg.get_long("trainer.batch_size", t.batch_size));
  t.frames_per_proc = static_cast<int>(
      cfg.get_long("trainer.frames_per_proc", t.frames_per_proc));
  t.discount = cfg.get_double("trainer.discount", t.discount);
  t.lr = cfg.get_double("trainer.lr", t.lr);
  t.gae_lambda = cfg.get_double("trainer.gae_lambda", t.gae_lambda);
  t.entropy_coef = cfg.get_double("trainer.entropy_coef", t.entropy_coef);
  t.value_loss_coef =
      cfg.get_double("trainer.value_loss_coef", t.value_loss_coef);
  t.max_grad_norm = cfg.get_double("trainer.max_grad_norm", t.max_grad_norm);
  t.clip_eps = cfg.get_double("trainer.clip_eps", t.clip_eps);
  t.optim_eps = cfg.get_double("trainer.optim_eps", t.optim_eps);
  t.optim_alpha = cfg.get_double("trainer.optim_alpha", t.optim_alpha);
  t.workers = static_cast<int>(cfg.get_long("trainer.workers", t.workers));

  spec.reward_config.bonus = cfg.get_double("reward.bonus", 1.0);
  spec.reward_config.omega = cfg.get_double("reward.omega", 1.0 / 20.0);
  spec.reward_config.shift = cfg.get_double("reward.shift", 0.01);
  return spec;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  auto spec = load_experiment(config_path);
  logic::LogicProgram rules;
  const bool shaped = spec.reward_kind != rl::RewardModelKind::None;
  if (shaped) {
    if (spec.rules_path.empty())
      throw UserError("reward shaping requires train.rules in the config");
    rules = load_program(spec.rules_path);
  }
  fs::create_directories(out_dir);

  for (auto seed : spec.seeds) {
    rl::TrainerConfig tc = spec.trainer;
    tc.seed = seed;
    rl::Trainer trainer(spec.env, spec.algo, spec.reward_kind, tc,
                        spec.reward_config, shaped ? &rules : nullptr);
    const auto curve = trainer.train();

    const std::string tag = "_" + rl::to_string(spec.algo) + "_" +
                            rl::to_string(spec.reward_kind) + "_seed" +
                            std::to_string(seed);
    std::ofstream out(out_dir + "/curve" + tag + ".csv", std::ios::binary);
    out << "frames,update,return_mean,return_min,return_max,policy_loss,"
           "value_loss,entropy\n";
    for (const auto& r : curve) {
      out << r.frames << ',' << r.update << ','
          << config::format_double(r.return_mean) << ','
          << config::format_double(r.return_min) << ','
          << config::format_double(r.return_max) << ','
          << config::format_double(r.policy_loss) << ','
          << config::format_double(r.value_loss) << ','
          << config::format_double(r.entropy) << "\n";
    }
    rl::save_checkpoint(out_dir + "/policy" + tag + ".csv", trainer.net());

    if (spec.log_rewards && shaped) {
      // Per-step reward breakdown over a short post-training probe rollout.
      std::ofstream rew(out_dir + "/rewards" + tag + ".csv", std::ios::binary);
      rew << "env_reward,reasoner_reward,adaptive_term,shaped_total\n";
      auto buf = trainer.collect_rollouts();
      for (int i = 0; i < buf.size(); ++i)
        rew << config::format_double(buf.env_rewards[i]) << ','
            << config::format_double(buf.reasoner_rewards[i]) << ','
            << config::format_double(buf.adaptive_terms[i]) << ','
            << config::format_double(buf.rewards[i]) << "\n";
    }
  }

  auto resolved = config::FlatConfig::parse_file(config_path);
  config::write_manifest(out_dir, resolved, "train " + config_path);
  return 0;
}

int cmd_eval(const std::string& checkpoint, bool use_planner,
             const std::string& rules_path, int size,
             const std::string& variant, std::uint64_t layout_seed,
             int episodes, std::uint64_t seed) {
  doorkey::EnvConfig env;
  env.size = size;
  env.variant = parse_variant(variant);
  env.layout_seed = layout_seed;

  rl::EvalResult result;
  if (use_planner) {
    if (rules_path.empty()) throw UserError("--planner requires --rules");
    const auto rules = load_program(rules_path);
    result = rl::evaluate_planner(env, rules, episodes);
  } else {
    if (checkpoint.empty())
      throw UserError("eval needs --checkpoint or --planner");
    const auto net = rl::load_checkpoint(checkpoint);
    result = rl::evaluate_policy(net, env, episodes, seed);
  }
  std::cout << "success_rate=" << config::format_double(result.success_rate)
            << " stddev=" << config::format_double(result.stddev)
            << " episodes=" << result.episodes << "\n";
  return 0;
}

int cmd_plot_data(const std::vector<std::string>& files, double alpha,
                  const std::string& out_path) {
  if (files.empty()) throw UserError("plot-data needs at least one curve CSV");
  std::vector<std::vector<long>> frames;
  std::vector<std::vector<double>> smoothed;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw UserError("cannot open curve file: " + f);
    std::string line;
    if (!std::getline(in, line)) throw UserError("empty curve file: " + f);
    std::vector<long> fr;
    std::vector<double> val;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string tok;
      std::getline(ss, tok, ',');
      fr.push_back(std::stol(tok));
      std::getline(ss, tok, ',');  // update column
      std::getline(ss, tok, ',');  // return_mean
      val.push_back(std::stod(tok));
    }
    // EMA recursion s_t = alpha*x_t + (1-alpha)*s_{t-1}, s_0 = x_0.
    for (std::size_t i = 1; i < val.size(); ++i)
      val[i] = alpha * val[i] + (1.0 - alpha) * val[i - 1];
    frames.push_back(std::move(fr));
    smoothed.push_back(std::move(val));
  }
  std::size_t rows = smoothed[0].size();
  for (const auto& s : smoothed) rows = std::min(rows, s.size());

  std::ostream* out = &std::cout;
  std::ofstream file_out;
  if (!out_path.empty()) {
    file_out.open(out_path, std::ios::binary);
    if (!file_out) throw UserError("cannot write " + out_path);
    out = &file_out;
  }
  (*out) << "frames,mean,min,max\n";
  for (std::size_t r = 0; r < rows; ++r) {
    double lo = smoothed[0][r], hi = smoothed[0][r], sum = 0.0;
    for (const auto& s : smoothed) {
      lo = std::min(lo, s[r]);
      hi = std::max(hi, s[r]);
      sum += s[r];
    }
    (*out) << frames[0][r] << ',' << config::format_double(sum / smoothed.size())
           << ',' << config::format_double(lo) << ','
           << config::format_double(hi) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable symbolic planning + reward-shaped RL"};
  app.require_subcommand(1);

  // parse
  std::string parse_file;
  bool parse_print = false;
  auto* parse_cmd = app.add_subcommand("parse", "parse and validate a program");
  parse_cmd->add_option("file", parse_file)->required();
  parse_cmd->add_flag("--print", parse_print, "print the canonical form");

  // ground
  std::string ground_file, ground_dump_table, ground_dump_enc;
  logic::GroundingLimits ground_limits;
  auto* ground_cmd =
      app.add_subcommand("ground", "enumerate ground atoms and index tensors");
  ground_cmd->add_option("file", ground_file)->required();
  ground_cmd->add_option("--term-depth", ground_limits.max_term_depth);
  ground_cmd->add_option("--max-atoms", ground_limits.max_ground_atoms);
  ground_cmd->add_option("--max-subs", ground_limits.max_substitutions);
  ground_cmd->add_option("--dump-table", ground_dump_table);
  ground_cmd->add_option("--dump-encoding", ground_dump_enc);

  // infer
  std::string infer_file, infer_facts, infer_weights, infer_query;
  double infer_gamma = 0.01;
  int infer_steps = 3;
  logic::GroundingLimits infer_limits;
  auto* infer_cmd =
      app.add_subcommand("infer", "differentiable forward chaining query");
  infer_cmd->add_option("file", infer_file)->required();
  infer_cmd->add_option("--facts", infer_facts);
  infer_cmd->add_option("--weights", infer_weights);
  infer_cmd->add_option("--query", infer_query)->required();
  infer_cmd->add_option("--gamma", infer_gamma);
  infer_cmd->add_option("--steps", infer_steps);
  infer_cmd->add_option("--term-depth", infer_limits.max_term_depth);
  infer_cmd->add_option("--max-atoms", infer_limits.max_ground_atoms);
  infer_cmd->add_option("--max-subs", infer_limits.max_substitutions);

  // learn-planner
  std::string learn_manifest, learn_seeds = "1", learn_out = "out/learn";
  double learn_lr = 0.1, learn_gamma = 0.01;
  long learn_steps = 3000;
  int learn_slots = 2;
  auto* learn_cmd =
      app.add_subcommand("learn-planner", "train rule-selection weights");
  learn_cmd->add_option("manifest", learn_manifest)->required();
  learn_cmd->add_option("--lr", learn_lr);
  learn_cmd->add_option("--steps", learn_steps);
  learn_cmd->add_option("--seeds", learn_seeds, "comma-separated seed list");
  learn_cmd->add_option("--slots", learn_slots);
  learn_cmd->add_option("--gamma", learn_gamma);
  learn_cmd->add_option("--out", learn_out);

  // plan
  std::string plan_file, plan_init = "initial", plan_goal = "reach_goal",
              plan_distances;
  int plan_max_len = 6;
  bool plan_no_guard = false;
  auto* plan_cmd =
      app.add_subcommand("plan", "enumerate and score candidate plans");
  plan_cmd->add_option("file", plan_file)->required();
  plan_cmd->add_option("--init", plan_init);
  plan_cmd->add_option("--goal", plan_goal);
  plan_cmd->add_option("--max-len", plan_max_len);
  plan_cmd->add_option("--distances", plan_distances,
                       "e.g. go_red_key=2,go_blue_door=5");
  plan_cmd->add_flag("--no-loop-guard", plan_no_guard);

  // train
  std::string train_config, train_out = "out/train";
  auto* train_cmd = app.add_subcommand("train", "run an RL experiment");
  train_cmd->add_option("config", train_config)->required();
  train_cmd->add_option("--out", train_out);

  // eval
  std::string eval_checkpoint, eval_rules, eval_variant = "reach_goal";
  bool eval_planner = false;
  int eval_size = 8, eval_episodes = 50;
  std::uint64_t eval_layout_seed = 0, eval_seed = 1;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy or planner");
  eval_cmd->add_option("--checkpoint", eval_checkpoint);
  eval_cmd->add_flag("--planner", eval_planner);
  eval_cmd->add_option("--rules", eval_rules);
  eval_cmd->add_option("--size", eval_size);
  eval_cmd->add_option("--variant", eval_variant);
  eval_cmd->add_option("--layout-seed", eval_layout_seed);
  eval_cmd->add_option("--episodes", eval_episodes);
  eval_cmd->add_option("--seed", eval_seed);

  // plot-data
  std::vector<std::string> plot_files;
  double plot_alpha = 0.1;
  std::string plot_out;
  auto* plot_cmd =
      app.add_subcommand("plot-data", "EMA-smooth learning curves");
  plot_cmd->add_option("files", plot_files)->required();
  plot_cmd->add_option("--alpha", plot_alpha);
  plot_cmd->add_option("--out", plot_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*parse_cmd) return cmd_parse(parse_file, parse_print);
    if (*ground_cmd)
      return cmd_ground(ground_file, ground_limits, ground_dump_table,
                        ground_dump_enc);
    if (*infer_cmd)
      return cmd_infer(infer_file, infer_facts, infer_weights, infer_query,
                       infer_gamma, infer_steps, infer_limits);
    if (*learn_cmd)
      return cmd_learn_planner(learn_manifest, learn_lr, learn_steps,
                               learn_seeds, learn_slots, learn_gamma,
                               learn_out);
    if (*plan_cmd)
      return cmd_plan(plan_file, plan_init, plan_goal, plan_max_len,
                      plan_no_guard, plan_distances);
    if (*train_cmd) return cmd_train(train_config, train_out);
    if (*eval_cmd)
      return cmd_eval(eval_checkpoint, eval_planner, eval_rules, eval_size,
                      eval_variant, eval_layout_seed, eval_episodes, eval_seed);
    if (*plot_cmd) return cmd_plot_data(plot_files, plot_alpha, plot_out);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const logic::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
