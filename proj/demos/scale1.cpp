// Scale-1 run: N=32 problems, d=32, b=25, width 1024, T=20, e=50, SGD.
// Writes scale1_train.csv and scale1_train.svg in the working directory.
// Usage: l2o_scale1 [epochs] [eta]

#include <cstdio>
#include <cstdlib>

#include "l2o/l2o.hpp"

int main(int argc, char** argv) {
  using namespace l2o;
  TrainConfig cfg;
  cfg.T = 20;
  cfg.epochs = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 400;
  cfg.eta = argc > 2 ? std::strtod(argv[2], nullptr) : 1e-4;
  cfg.init.dims = {2, 2, 1024, 1};
  cfg.init.e = 50.0;
  cfg.init.seed = 2;
  cfg.compute_theory = false;

  try {
    const QuadraticBatch batch = make_batch(1, 32, 32, 25);
    const TrainResult res = train(cfg, batch);
    const TrainLog& log = res.log;
    CsvTable t = train_log_table(log, res.weights.L());
    t.meta = {{"epochs", std::to_string(cfg.epochs)}, {"eta", fmt_double(cfg.eta)}};
    save_csv("scale1_train.csv", t);

    svg::ChartOptions opt;
    opt.title = "Scale-1 training";
    opt.x_label = "epoch";
    opt.y_label = "F(X_T)";
    opt.log_y = true;
    detail::write_file("scale1_train.svg", svg::line_chart({{"learned", t.series("epoch"), t.series("loss")},
                                                            {"GD", t.series("epoch"), t.series("gd_loss"), true}},
                                                           opt));
    std::printf("gd %.6e  final %.6e  ratio %.4f  status %s\n", log.gd_loss, log.final_loss(),
                improvement_ratio(log.gd_loss, log.final_loss()), to_string(log.status));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
