#pragma once

// Command-line harness. run_cli() is the whole program; the tool's main() only
// forwards argv, and the tests call it in-process.
//
// Exit codes: 0 ok, 1 gradcheck mismatch, 2 divergence, 3 I/O or malformed
// input file, 4 bad arguments.

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "l2o/l2o.hpp"

namespace l2o::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitGradMismatch = 1;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitBadArgs = 4;

class BadArgs : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string platform() {
  std::string s;
#if defined(__clang__)
  s = "clang-" + std::to_string(__clang_major__) + "." + std::to_string(__clang_minor__);
#elif defined(__GNUC__)
  s = "gcc-" + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#else
  s = "unknown-compiler";
#endif
#if defined(__x86_64__)
  s += "/x86_64";
#elif defined(__aarch64__)
  s += "/aarch64";
#endif
  return s;
}

// Where the problems come from: a file, or a seeded draw.
struct BatchSource {
  std::string path;
  std::size_t N = 32, d = 32, b = 25;
  std::uint64_t seed = 1;

  QuadraticBatch load() const {
    if (!path.empty()) return load_batch(path);
    return make_batch(seed, N, d, b);
  }

  void describe(CsvTable& t) const {
    if (!path.empty()) {
      t.meta.emplace_back("batch", path);
    } else {
      t.meta.emplace_back("batch", "generated");
      t.meta.emplace_back("n", std::to_string(N));
      t.meta.emplace_back("d", std::to_string(d));
      t.meta.emplace_back("b", std::to_string(b));
      t.meta.emplace_back("batch_seed", std::to_string(seed));
    }
  }
};

inline void add_batch_options(CLI::App* app, BatchSource& src) {
  app->add_option("--batch", src.path, "Batch file written by 'gen' (otherwise a batch is drawn from the flags below)");
  app->add_option("--n", src.N, "Number of problems when drawing a batch")->check(CLI::PositiveNumber);
  app->add_option("--d", src.d, "Variables per problem")->check(CLI::PositiveNumber);
  app->add_option("--b", src.b, "Equations per problem")->check(CLI::PositiveNumber);
  app->add_option("--seed", src.seed, "Batch seed");
}

struct NetOptions {
  std::size_t width = 1024;
  std::size_t first = 2;
  std::vector<std::size_t> dims;
  double e = 50.0;
  std::uint64_t init_seed = 2;

  std::vector<std::size_t> resolved() const {
    if (!dims.empty()) return dims;
    return {2, first, width, 1};
  }
};

inline void add_net_options(CLI::App* app, NetOptions& net) {
  app->add_option("--width", net.width, "Width of the last hidden layer")->check(CLI::PositiveNumber);
  app->add_option("--first-width", net.first, "Width of the first hidden layer")->check(CLI::PositiveNumber);
  app->add_option("--dims", net.dims, "Full layer widths, e.g. --dims 2 2 64 1 (overrides widths)");
  app->add_option("--e", net.e, "Expansion coefficient (>= 1)");
  app->add_option("--init-seed", net.init_seed, "Initialization seed");
}

struct OutputOptions {
  std::string dir = ".";
  std::string label = "run";

  std::string path(const std::string& suffix) const {
    for (char c : label)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
        throw BadArgs("label '" + label + "' is not filesystem-safe (use letters, digits, '-', '_', '.')");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return (std::filesystem::path(dir) / (label + suffix)).string();
  }
};

inline void add_output_options(CLI::App* app, OutputOptions& out) {
  app->add_option("--out-dir", out.dir, "Output directory");
  app->add_option("--label", out.label, "Prefix for output files");
}

inline std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

struct TrainArgs {
  BatchSource src;
  NetOptions net;
  OutputOptions out;
  std::size_t T = 20, epochs = 400, log_every = 1, ckpt_every = 0;
  double eta = 1e-4;
  bool bound_checks = false, no_theory = false;
};

inline TrainConfig make_train_config(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.T = a.T;
  cfg.epochs = a.epochs;
  cfg.eta = a.eta;
  cfg.init.dims = a.net.resolved();
  cfg.init.e = a.net.e;
  cfg.init.seed = a.net.init_seed;
  cfg.log_every = a.log_every;
  cfg.record_bound_checks = a.bound_checks;
  cfg.compute_theory = !a.no_theory;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw BadArgs(e.what());
  }
  return cfg;
}

inline int cmd_gen(const BatchSource& src, const std::string& out_path) {
  const QuadraticBatch batch = make_batch(src.seed, src.N, src.d, src.b);
  save_batch(out_path, batch);
  std::cout << "wrote " << out_path << " (N=" << batch.N() << " d=" << batch.d() << " b=" << batch.b()
            << " seed=" << batch.seed() << ")\n"
            << "beta = " << fmt_double(batch.beta()) << "\nbeta0 = " << fmt_double(batch.beta0()) << "\n";
  return kExitOk;
}

inline int cmd_train(const TrainArgs& a) {
  const TrainConfig cfg = make_train_config(a);
  const QuadraticBatch batch = a.src.load();
  const std::string ckpt_base = a.out.path("_ckpt");
  const EpochCallback cb = [&](const L2OWeights& w, const EpochRecord& r) {
    if (a.ckpt_every > 0 && r.epoch % a.ckpt_every == 0 && r.epoch != cfg.epochs)
      save_weights(ckpt_base + "_epoch" + std::to_string(r.epoch) + ".txt", w);
  };
  const TrainResult res = train(cfg, batch, cb);
  const TrainLog& log = res.log;

  CsvTable full = train_log_table(log, res.weights.L());
  CsvTable t;
  t.columns = full.columns;
  for (std::size_t i = 0; i < full.rows.size(); ++i)
    if (log.rows[i].epoch % cfg.log_every == 0 || i + 1 == full.rows.size() || log.rows[i].unstable)
      t.rows.push_back(full.rows[i]);

  t.meta.emplace_back("command", "train");
  a.src.describe(t);
  t.meta.emplace_back("N", std::to_string(batch.N()));
  t.meta.emplace_back("T", std::to_string(cfg.T));
  t.meta.emplace_back("epochs", std::to_string(cfg.epochs));
  t.meta.emplace_back("eta", fmt_double(cfg.eta));
  t.meta.emplace_back("dims", join(cfg.init.dims));
  t.meta.emplace_back("e", fmt_double(cfg.init.e));
  t.meta.emplace_back("init_seed", std::to_string(cfg.init.seed));
  t.meta.emplace_back("platform", platform());
  t.meta.emplace_back("beta", fmt_double(log.beta));
  t.meta.emplace_back("beta0", fmt_double(log.beta0));
  if (log.quantities) t.meta.emplace_back("alpha0", fmt_double(log.quantities->alpha0));
  if (log.conditions) t.meta.emplace_back("conditions_hold", log.conditions->all_pass() ? "1" : "0");
  t.meta.emplace_back("initial_loss", fmt_double(log.initial_loss));
  t.meta.emplace_back("gd_loss", fmt_double(log.gd_loss));
  t.meta.emplace_back("final_loss", fmt_double(log.final_loss()));
  if (log.gd_loss > 0.0)
    t.meta.emplace_back("improvement_ratio", fmt_double(improvement_ratio(log.gd_loss, log.final_loss())));
  t.meta.emplace_back("status", to_string(log.status));
  if (log.first_unstable_epoch) t.meta.emplace_back("first_unstable_epoch", std::to_string(*log.first_unstable_epoch));
  if (log.diverged_epoch) t.meta.emplace_back("diverged_epoch", std::to_string(*log.diverged_epoch));

  const std::string csv_path = a.out.path("_train.csv");
  save_csv(csv_path, t);
  save_weights(ckpt_base + ".txt", res.weights);
  if (log.quantities && log.conditions) {
    KeyValues kv{{"command", "train"}, {"dims", join(cfg.init.dims)}, {"e", fmt_double(cfg.init.e)},
                 {"init_seed", std::to_string(cfg.init.seed)}};
    for (auto& p : theory_key_values(*log.quantities, *log.conditions)) kv.push_back(p);
    detail::write_file(a.out.path("_theory.txt"), format_key_values(kv));
  }

  std::cout << "gd_loss = " << fmt_double(log.gd_loss) << "\nfinal_loss = " << fmt_double(log.final_loss())
            << "\nstatus = " << to_string(log.status) << "\nwrote " << csv_path << "\n";
  if (log.gd_loss > 0.0)
    std::cout << "improvement_ratio = " << fmt_double(improvement_ratio(log.gd_loss, log.final_loss())) << "\n";
  if (log.status == TrainStatus::Diverged) {
    std::cerr << "diverged at epoch " << *log.diverged_epoch << ": " << log.divergence_reason << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}

struct InferArgs {
  BatchSource src;
  OutputOptions out;
  std::string ckpt;
  std::size_t steps = 100;
  bool adam = false;
  double adam_eta = 0.0, b1 = 0.9, b2 = 0.999, eps = 1e-8;
};

inline int cmd_infer(const InferArgs& a) {
  if (a.ckpt.empty()) throw BadArgs("infer: --ckpt is required");
  const L2OWeights w = load_weights(a.ckpt);
  const QuadraticBatch batch = a.src.load();
  const BatchPoint X0 = batch.zero_point();
  CsvTable t;
  t.columns = {"step", "l2o_loss", "gd_loss"};
  const auto gd = gd_objectives(batch, X0, a.steps);
  std::vector<double> l2o;
  int code = kExitOk;
  try {
    l2o = infer(w, batch, X0, a.steps);
  } catch (const NonFiniteError& e) {
    std::cerr << e.what() << "\n";
    code = kExitDiverged;
  }
  std::vector<double> adam;
  if (a.adam) {
    t.columns.push_back("adam_loss");
    const double lr = a.adam_eta > 0.0 ? a.adam_eta : 1.0 / batch.beta();
    for (const auto& X : adam_infer(batch, X0, a.steps, lr, a.b1, a.b2, a.eps)) adam.push_back(objective(batch, X));
  }
  for (std::size_t s = 0; s <= a.steps; ++s) {
    std::vector<double> row{static_cast<double>(s), s < l2o.size() ? l2o[s] : std::numeric_limits<double>::quiet_NaN(),
                            gd[s]};
    if (a.adam) row.push_back(adam[s]);
    t.rows.push_back(std::move(row));
  }
  t.meta.emplace_back("command", "infer");
  t.meta.emplace_back("ckpt", a.ckpt);
  a.src.describe(t);
  t.meta.emplace_back("steps", std::to_string(a.steps));
  t.meta.emplace_back("dims", join(w.dims));
  t.meta.emplace_back("e", fmt_double(w.e));
  t.meta.emplace_back("init_seed", std::to_string(w.seed));
  if (a.adam) {
    t.meta.emplace_back("adam_eta", fmt_double(a.adam_eta > 0.0 ? a.adam_eta : 1.0 / batch.beta()));
    t.meta.emplace_back("adam_b1", fmt_double(a.b1));
    t.meta.emplace_back("adam_b2", fmt_double(a.b2));
  }
  t.meta.emplace_back("platform", platform());
  const std::string path = a.out.path("_infer.csv");
  save_csv(path, t);
  std::cout << "l2o_final = " << (l2o.empty() ? "nan" : fmt_double(l2o.back())) << "\ngd_final = " << fmt_double(gd.back())
            << "\nwrote " << path << "\n";
  return code;
}

struct AblateArgs {
  TrainArgs base;
  std::vector<double> es{1, 5, 25, 50, 100};
  std::vector<double> etas{1e-7};
};

inline std::size_t worker_count(std::size_t cells) {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("L2O_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return std::min(n, std::max<std::size_t>(cells, 1));
}

inline int cmd_ablate(const AblateArgs& a) {
  if (a.es.empty() || a.etas.empty()) throw BadArgs("ablate: --e-list and --eta-list must be non-empty");
  const QuadraticBatch batch = a.base.src.load();
  struct Cell {
    double e, eta;
    double final_loss = std::numeric_limits<double>::quiet_NaN();
    double ratio = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
    std::string error;
  };
  std::vector<Cell> cells;
  for (double e : a.es)
    for (double eta : a.etas) cells.push_back(Cell{e, eta, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), false, {}});
  // Validate every cell up front so bad flags fail before any work starts.
  for (const auto& c : cells) {
    TrainArgs ta = a.base;
    ta.net.e = c.e;
    ta.eta = c.eta;
    make_train_config(ta);
  }

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& c = cells[i];
      TrainArgs ta = a.base;
      ta.net.e = c.e;
      ta.eta = c.eta;
      try {
        TrainConfig cfg = make_train_config(ta);
        cfg.compute_theory = false;
        const TrainResult r = train(cfg, batch);
        c.final_loss = r.log.final_loss();
        c.diverged = r.log.status == TrainStatus::Diverged;
        if (r.log.gd_loss > 0.0) c.ratio = improvement_ratio(r.log.gd_loss, c.final_loss);
      } catch (const std::exception& ex) {
        c.diverged = true;
        c.error = ex.what();
      }
    }
  };
  const std::size_t nw = worker_count(cells.size());
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < nw; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  CsvTable t;
  t.columns = {"e", "eta", "final_loss", "improvement_ratio", "diverged"};
  for (const auto& c : cells) t.rows.push_back({c.e, c.eta, c.final_loss, c.ratio, c.diverged ? 1.0 : 0.0});
  t.meta.emplace_back("command", "ablate");
  a.base.src.describe(t);
  t.meta.emplace_back("T", std::to_string(a.base.T));
  t.meta.emplace_back("epochs", std::to_string(a.base.epochs));
  t.meta.emplace_back("dims", join(a.base.net.resolved()));
  t.meta.emplace_back("init_seed", std::to_string(a.base.net.init_seed));
  t.meta.emplace_back("platform", platform());
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!cells[i].error.empty()) t.meta.emplace_back("cell_" + std::to_string(i) + "_error", cells[i].error);
  const std::string path = a.base.out.path("_ablate.csv");
  save_csv(path, t);
  for (const auto& c : cells)
    std::cout << "e=" << fmt_double(c.e) << " eta=" << fmt_double(c.eta) << " final_loss=" << fmt_double(c.final_loss)
              << " improvement_ratio=" << fmt_double(c.ratio) << (c.diverged ? " diverged" : "") << "\n";
  std::cout << "wrote " << path << "\n";
  return kExitOk;
}

struct TheoryArgs {
  BatchSource src;
  NetOptions net;
  OutputOptions out;
  std::string ckpt;
  std::size_t T = 20;
  double eta = 0.0;
};

inline int cmd_theory(const TheoryArgs& a) {
  const QuadraticBatch batch = a.src.load();
  L2OWeights w;
  if (!a.ckpt.empty()) {
    w = load_weights(a.ckpt);
  } else {
    InitConfig ic;
    ic.dims = a.net.resolved();
    ic.e = a.net.e;
    ic.seed = a.net.init_seed;
    try {
      w = init_weights(ic);
    } catch (const std::invalid_argument& e) {
      throw BadArgs(e.what());
    }
  }
  if (a.T < 1) throw BadArgs("theory: --T must be at least 1");
  const TheoryQuantities q = quantities(w, batch, batch.zero_point(), a.T);
  const ConditionReport r = check_conditions(q, a.eta > 0.0 ? std::optional<double>(a.eta) : std::nullopt);
  KeyValues kv{{"command", "theory"}, {"dims", join(w.dims)}, {"e", fmt_double(w.e)}, {"init_seed", std::to_string(w.seed)},
               {"platform", platform()}};
  for (auto& p : theory_key_values(q, r)) kv.push_back(p);
  kv.emplace_back("suggested_e", fmt_double(suggest_e(a.T, w.L())));
  const std::string text = format_key_values(kv);
  const std::string path = a.out.path("_theory.txt");
  detail::write_file(path, text);
  std::cout << text << "wrote " << path << "\n";
  return kExitOk;
}

struct GradcheckArgs {
  std::size_t N = 2, d = 4, b = 2, T = 5, width = 8, first = 4;
  std::uint64_t seed = 9;
  double h = 1e-5, scale = 0.5, tol = 1e-4;
  bool perturb = false, zero_last = false;
};

inline int cmd_gradcheck(const GradcheckArgs& a) {
  if (a.N * a.d > 64) throw BadArgs("gradcheck: N*d must be at most 64");
  if (a.T < 1 || a.T > 10) throw BadArgs("gradcheck: T must be in [1, 10]");
  if (a.width > 32 || a.first > 32) throw BadArgs("gradcheck: widths must be at most 32");
  if (!(a.d > a.b && a.b >= 1)) throw BadArgs("gradcheck: requires d > b >= 1");
  if (!(a.h > 0.0)) throw BadArgs("gradcheck: --fd-step must be positive");
  SeededRng rng(a.seed);
  const QuadraticBatch batch = make_batch(rng, a.N, a.d, a.b);
  const BatchPoint X0 = batch.zero_point();
  const std::vector<std::size_t> dims{2, a.first, a.width, 1};

  L2OWeights w;
  FiniteDiffResult fd;
  int draws = 0;
  for (;; ++draws) {
    w = L2OWeights::zeros(dims);
    for (std::size_t l = 0; l < w.L(); ++l) {
      if (a.zero_last && l + 1 == w.L()) break;
      w.W[l] = gaussian_matrix(rng, dims[l + 1], dims[l]);
      w.W[l] *= a.scale;
    }
    fd = finite_diff(w, batch, X0, a.T, a.h);
    if (fd.mask_stable || draws == 20) break;
  }
  WeightGradients g = backward(rollout(w, batch, X0, a.T), w, batch);
  if (a.perturb)
    for (auto& m : g.dW)
      for (auto& v : m.entries()) v = v * 1.01 + 1e-6;
  const double err = max_relative_error(g, fd.grad);
  std::cout << "weight draws = " << draws + 1 << "\nmask_stable = " << (fd.mask_stable ? 1 : 0)
            << "\nmax_relative_error = " << fmt_double(err) << "\n";
  if (a.zero_last) {
    bool exact = true;
    for (std::size_t l = 0; l + 1 < g.L(); ++l)
      for (double v : g.dW[l].entries()) exact = exact && v == 0.0;
    std::cout << "inner_gradients_exactly_zero = " << (exact ? 1 : 0) << "\n";
  }
  const bool pass = err <= a.tol;
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitGradMismatch;
}

struct PlotArgs {
  std::string csv, out, x;
  std::vector<std::string> y;
  std::string ref;
  bool log_y = false;
  std::string title;
};

inline int cmd_plot(const PlotArgs& a) {
  if (a.csv.empty()) throw BadArgs("plot: --csv is required");
  const CsvTable t = load_csv(a.csv);
  if (t.rows.empty()) throw FormatError(a.csv + ": no data rows");
  std::string x = a.x;
  std::vector<std::string> ys = a.y;
  std::string ref = a.ref;
  if (x.empty()) x = t.has_column("epoch") ? "epoch" : t.columns.front();
  if (ys.empty()) {
    if (t.has_column("loss")) {
      ys = {"loss"};
      if (ref.empty() && t.has_column("gd_loss")) ref = "gd_loss";
    } else {
      for (const auto& c : t.columns)
        if (c != x && c != ref && c != "wall_ms") ys.push_back(c);
    }
  }
  std::vector<svg::Series> series;
  for (const auto& name : ys) series.push_back({name, t.series(x), t.series(name)});
  if (!ref.empty()) series.push_back({ref, t.series(x), t.series(ref), true});
  svg::ChartOptions opt;
  opt.x_label = x;
  opt.y_label = ys.size() == 1 ? ys.front() : "value";
  opt.log_y = a.log_y;
  opt.title = a.title;
  const std::string out = a.out.empty() ? std::filesystem::path(a.csv).replace_extension(".svg").string() : a.out;
  detail::write_file(out, svg::line_chart(series, opt));
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Learned step-size gradient descent: training, inference, theory checks"};
  app.set_config("--config", "", "TOML/INI file with option values (command-line flags take precedence)");
  app.require_subcommand(1);

  std::string gen_out = "batch.txt";
  BatchSource gen_src;
  gen_src.N = 10;
  gen_src.d = 512;
  gen_src.b = 400;
  gen_src.seed = 3;
  auto* gen = app.add_subcommand("gen", "Draw a batch of Gaussian least-squares problems");
  gen->add_option("--n", gen_src.N, "Number of problems")->check(CLI::PositiveNumber);
  gen->add_option("--d", gen_src.d, "Variables per problem")->check(CLI::PositiveNumber);
  gen->add_option("--b", gen_src.b, "Equations per problem")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_src.seed, "Seed");
  gen->add_option("--out,-o", gen_out, "Output file");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the step-size network with SGD");
  add_batch_options(train_cmd, tr.src);
  add_net_options(train_cmd, tr.net);
  add_output_options(train_cmd, tr.out);
  train_cmd->add_option("--T", tr.T, "Unrolled steps");
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs");
  train_cmd->add_option("--eta", tr.eta, "SGD learning rate");
  train_cmd->add_option("--log-every", tr.log_every, "Write a CSV row every this many epochs");
  train_cmd->add_option("--ckpt-every", tr.ckpt_every, "Also checkpoint every this many epochs (0: final only)");
  train_cmd->add_flag("--bound-checks", tr.bound_checks, "Evaluate the runtime inequalities at logged epochs");
  train_cmd->add_flag("--no-theory", tr.no_theory, "Skip the initialization condition report");

  InferArgs inf;
  auto* infer_cmd = app.add_subcommand("infer", "Run a checkpoint for many steps against GD (and Adam)");
  add_batch_options(infer_cmd, inf.src);
  add_output_options(infer_cmd, inf.out);
  infer_cmd->add_option("--ckpt", inf.ckpt, "Checkpoint file")->required();
  infer_cmd->add_option("--steps", inf.steps, "Optimization steps")->check(CLI::PositiveNumber);
  infer_cmd->add_flag("--adam", inf.adam, "Add an Adam baseline column");
  infer_cmd->add_option("--adam-eta", inf.adam_eta, "Adam step (default 1/beta)");
  infer_cmd->add_option("--adam-b1", inf.b1, "Adam first-moment decay");
  infer_cmd->add_option("--adam-b2", inf.b2, "Adam second-moment decay");
  infer_cmd->add_option("--adam-eps", inf.eps, "Adam epsilon");

  AblateArgs ab;
  ab.base.log_every = 1;
  auto* ablate_cmd = app.add_subcommand("ablate", "Grid of training runs over e and eta");
  add_batch_options(ablate_cmd, ab.base.src);
  add_output_options(ablate_cmd, ab.base.out);
  ablate_cmd->add_option("--width", ab.base.net.width, "Width of the last hidden layer")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--first-width", ab.base.net.first, "Width of the first hidden layer")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--dims", ab.base.net.dims, "Full layer widths");
  ablate_cmd->add_option("--init-seed", ab.base.net.init_seed, "Initialization seed");
  ablate_cmd->add_option("--T", ab.base.T, "Unrolled steps");
  ablate_cmd->add_option("--epochs", ab.base.epochs, "Training epochs per cell");
  ablate_cmd->add_option("--e-list", ab.es, "Expansion coefficients");
  ablate_cmd->add_option("--eta-list", ab.etas, "Learning rates");

  TheoryArgs th;
  auto* theory_cmd = app.add_subcommand("theory", "Evaluate the convergence constants and conditions");
  add_batch_options(theory_cmd, th.src);
  add_net_options(theory_cmd, th.net);
  add_output_options(theory_cmd, th.out);
  theory_cmd->add_option("--ckpt", th.ckpt, "Use these weights instead of a fresh initialization");
  theory_cmd->add_option("--T", th.T, "Unrolled steps");
  theory_cmd->add_option("--eta", th.eta, "Learning rate for the rate base");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gc_cmd->add_option("--n", gc.N, "Problems");
  gc_cmd->add_option("--d", gc.d, "Variables per problem");
  gc_cmd->add_option("--b", gc.b, "Equations per problem");
  gc_cmd->add_option("--T", gc.T, "Unrolled steps");
  gc_cmd->add_option("--width", gc.width, "Last hidden width");
  gc_cmd->add_option("--first-width", gc.first, "First hidden width");
  gc_cmd->add_option("--seed", gc.seed, "Seed for problems and weights");
  gc_cmd->add_option("--fd-step", gc.h, "Finite-difference step");
  gc_cmd->add_option("--scale", gc.scale, "Std of the random weights");
  gc_cmd->add_option("--tol", gc.tol, "Pass threshold on the max relative error");
  gc_cmd->add_flag("--perturb", gc.perturb, "Corrupt the analytic gradient (self-test of the checker)");
  gc_cmd->add_flag("--zero-last", gc.zero_last, "Use a zero last layer");

  PlotArgs pl;
  auto* plot_cmd = app.add_subcommand("plot", "Render a CSV as an SVG line chart");
  plot_cmd->add_option("--csv", pl.csv, "Input CSV")->required();
  plot_cmd->add_option("--out,-o", pl.out, "Output SVG (default: CSV path with .svg)");
  plot_cmd->add_option("--x", pl.x, "x column");
  plot_cmd->add_option("--y", pl.y, "y columns");
  plot_cmd->add_option("--ref", pl.ref, "Column drawn as a dashed reference");
  plot_cmd->add_flag("--log-y", pl.log_y, "Logarithmic y axis");
  plot_cmd->add_option("--title", pl.title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadArgs;
  }

  try {
    if (gen->parsed()) {
      if (!(gen_src.d > gen_src.b)) throw BadArgs("gen: requires d > b");
      return cmd_gen(gen_src, gen_out);
    }
    if (train_cmd->parsed()) return cmd_train(tr);
    if (infer_cmd->parsed()) return cmd_infer(inf);
    if (ablate_cmd->parsed()) return cmd_ablate(ab);
    if (theory_cmd->parsed()) return cmd_theory(th);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc);
    if (plot_cmd->parsed()) return cmd_plot(pl);
  } catch (const BadArgs& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  }
  return kExitBadArgs;
}

}  // namespace l2o::cli
