#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include <nlohmann/json.hpp>

#include "dipo/checkpoint.hpp"
#include "dipo/diag.hpp"
#include "dipo/metrics.hpp"
#include "dipo/svg.hpp"

namespace fs = std::filesystem;
using namespace dipo;
using nlohmann::json;

namespace {

struct AgentBundle {
  RunConfig rc;
  std::unique_ptr<Env> env;
  std::unique_ptr<DipoAgent> agent;
  std::unique_ptr<ReplayBuffer> buf;
  TrainState st;
};

AgentBundle build_from_checkpoint(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  AgentBundle b;
  b.rc = parse_config(ck.config);
  b.env = make_env(b.rc.env);
  b.agent = std::make_unique<DipoAgent>(b.rc.agent, b.env->spec(),
                                        b.rc.policy_kind());
  b.buf = std::make_unique<ReplayBuffer>(b.rc.agent.buffer_capacity,
                                         b.env->spec().state_dim,
                                         b.env->spec().action_dim);
  restore_checkpoint(ck, *b.agent, *b.buf, b.st, *b.env);
  return b;
}

int run_train(const std::string& config_path, const std::string& out_dir,
              bool seed_set, uint64_t seed, int rounds_flag,
              const std::string& resume) {
  AgentBundle b;
  bool resuming = !resume.empty();
  if (resuming) {
    b = build_from_checkpoint(resume);
  } else {
    if (!config_path.empty()) b.rc = load_config(config_path);
    if (seed_set) b.rc.agent.seed = seed;
  }
  if (rounds_flag >= 0) b.rc.rounds = rounds_flag;
  if (!out_dir.empty()) b.rc.out_dir = out_dir;
  b.rc.validate();
  if (!resuming) {
    b.env = make_env(b.rc.env);
    b.agent = std::make_unique<DipoAgent>(b.rc.agent, b.env->spec(),
                                          b.rc.policy_kind());
    b.buf = std::make_unique<ReplayBuffer>(b.rc.agent.buffer_capacity,
                                           b.env->spec().state_dim,
                                           b.env->spec().action_dim);
  }

  fs::create_directories(b.rc.out_dir);
  std::string metrics_path = b.rc.out_dir + "/metrics.csv";
  MetricsWriter writer(metrics_path, resuming && fs::exists(metrics_path));

  int remaining = std::max(0, b.rc.rounds - b.st.round);
  train(*b.agent, *b.env, *b.buf, b.st, remaining, [&](const RoundMetrics& m) {
    writer.write(m);
    std::cerr << "round " << m.round << " steps " << m.env_steps << " return "
              << m.episode_return_mean << " reach " << m.goals_reached_frac
              << "\n";
    if (m.round % b.rc.eval_every == 0)
      save_checkpoint(b.rc.out_dir + "/checkpoint_latest.dipo",
                      make_checkpoint(b.rc, *b.agent, *b.buf, b.st, *b.env));
  });
  save_checkpoint(b.rc.out_dir + "/final.dipo",
                  make_checkpoint(b.rc, *b.agent, *b.buf, b.st, *b.env));
  return 0;
}

int run_eval(const std::string& ckpt, int episodes, uint64_t seed) {
  AgentBundle b = build_from_checkpoint(ckpt);
  if (episodes <= 0) episodes = b.rc.agent.eval_episodes;
  auto eval_env = make_env(b.rc.env);
  EvalStats s = evaluate(*b.agent, *eval_env, episodes, seed);
  json out = {{"episodes", episodes},
              {"return_mean", s.ret_mean},
              {"return_std", s.ret_std},
              {"goal_reach_frac", s.reach_frac}};
  std::vector<double> pg(s.per_goal.data(), s.per_goal.data() + s.per_goal.size());
  out["per_goal_fractions"] = pg;
  std::cout << out.dump() << "\n";
  return 0;
}

int run_diagnose(const std::string& suite, uint64_t seed) {
  DiagReport rep;
  if (suite == "ou")
    rep = diag_ou(seed);
  else if (suite == "sampler")
    rep = diag_sampler(seed);
  else if (suite == "dsm")
    rep = diag_dsm(seed);
  else if (suite == "gradcheck")
    rep = diag_gradcheck(seed);
  else if (suite == "theorem1")
    rep = diag_theorem1(seed);
  else
    throw ValidationError("unknown suite: " + suite);
  for (const auto& c : rep.checks)
    std::cout << (c.pass() ? "PASS " : "FAIL ") << rep.suite << ": " << c.name
              << " — measured " << c.measured << (c.less_than ? " < " : " >= ")
              << c.threshold << "\n";
  if (!rep.all_pass()) throw NumericError("diagnostic suite failed: " + suite);
  return 0;
}

int run_plot(const std::string& ckpt, const std::string& metrics,
             const std::string& kind, const std::string& out) {
  std::string svg;
  if (kind == "curve") {
    if (metrics.empty()) throw ValidationError("plot curve needs --metrics");
    auto rows = read_metrics(metrics);
    VectorXd x(rows.size()), y(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      x(i) = rows[i].round;
      y(i) = rows[i].episode_return_mean;
    }
    svg = svg_curve(x, y, "episode return");
  } else if (kind == "scatter") {
    if (ckpt.empty()) throw ValidationError("plot scatter needs --ckpt");
    AgentBundle b = build_from_checkpoint(ckpt);
    long n = b.buf->size();
    Mat pts = b.buf->states().topRows(n);
    VectorXd color = b.buf->round_tags().head(n);
    svg = svg_scatter(pts, color);
  } else if (kind == "quiver") {
    if (ckpt.empty()) throw ValidationError("plot quiver needs --ckpt");
    AgentBundle b = build_from_checkpoint(ckpt);
    // 7x7 grid over [-3,3]^2; arrow = mean action over a few policy draws.
    const int reps = 8;
    Mat pos(49, 2), act = Mat::Zero(49, 2);
    int i = 0;
    for (int gx = -3; gx <= 3; ++gx)
      for (int gy = -3; gy <= 3; ++gy, ++i) pos.row(i) << gx, gy;
    Rng plot_rng(b.rc.agent.seed, 77);
    Rng saved = b.agent->rng;
    b.agent->rng = plot_rng;
    for (int rep = 0; rep < reps; ++rep)
      act += b.agent->sample_actions(b.agent->policy_target, pos, false);
    b.agent->rng = saved;
    act /= reps;
    svg = svg_quiver(pos, act);
  } else {
    throw ValidationError("unknown plot kind: " + kind);
  }
  write_text_file(out, svg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-policy reinforcement learning toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume, ckpt, metrics, suite, kind, out_file;
  uint64_t seed = 0;
  int rounds = -1, episodes = 0;
  bool seed_set = false;

  auto* t = app.add_subcommand("train", "run the training loop");
  t->add_option("--config", config_path, "JSON config file");
  t->add_option("--out", out_dir, "output directory (default from config)");
  t->add_option("--seed", seed, "run seed (overrides config)")
      ->each([&](const std::string&) { seed_set = true; });
  t->add_option("--rounds", rounds, "training rounds (overrides config)");
  t->add_option("--resume", resume, "checkpoint to resume from");

  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  e->add_option("--ckpt", ckpt, "checkpoint file")->required();
  e->add_option("--episodes", episodes, "evaluation episodes (default from config)");
  e->add_option("--seed", seed, "evaluation seed")->default_val("0");

  auto* d = app.add_subcommand("diagnose", "run a diagnostic suite");
  d->add_option("--suite", suite, "ou|sampler|dsm|gradcheck|theorem1")->required();
  d->add_option("--seed", seed, "suite seed")->default_val("0");

  auto* p = app.add_subcommand("plot", "emit an SVG plot");
  p->add_option("--ckpt", ckpt, "checkpoint file (quiver, scatter)");
  p->add_option("--metrics", metrics, "metrics.csv (curve)");
  p->add_option("--kind", kind, "quiver|scatter|curve")->required();
  p->add_option("--out", out_file, "output SVG path")->required();

  try {
    app.parse(argc, argv);
    if (t->parsed())
      return run_train(config_path, out_dir, seed_set, seed, rounds, resume);
    if (e->parsed()) return run_eval(ckpt, episodes, seed);
    if (d->parsed()) return run_diagnose(suite, seed);
    if (p->parsed()) return run_plot(ckpt, metrics, kind, out_file);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 0;
}
