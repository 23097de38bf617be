// Train a small step-size network and compare against plain GD on the same batch.

#include <cstdio>

#include "l2o/l2o.hpp"

int main() {
  using namespace l2o;
  const QuadraticBatch batch = make_batch(1, 8, 16, 12);
  std::printf("N=%zu d=%zu b=%zu  beta=%.6g beta0=%.6g\n", batch.N(), batch.d(), batch.b(), batch.beta(),
              batch.beta0());

  TrainConfig cfg;
  cfg.T = 10;
  cfg.epochs = 200;
  cfg.eta = 1e-5;
  cfg.init.dims = {2, 2, 64, 1};
  cfg.init.e = 5.0;
  cfg.init.seed = 2;

  const TrainResult res = train(cfg, batch, [](const L2OWeights&, const EpochRecord& r) {
    if (r.epoch % 40 == 0) std::printf("epoch %4zu  loss %.6e\n", r.epoch, r.loss);
  });
  const TrainLog& log = res.log;
  std::printf("GD after %zu steps: %.6e\nlearned:           %.6e  (ratio %.4f, %s)\n", cfg.T, log.gd_loss,
              log.final_loss(), improvement_ratio(log.gd_loss, log.final_loss()), to_string(log.status));

  // The trained network keeps its advantage past the training horizon.
  const auto l2o = infer(res.weights, batch, batch.zero_point(), 40);
  const auto gd = gd_objectives(batch, batch.zero_point(), 40);
  for (std::size_t t : {10, 20, 40}) std::printf("step %2zu  l2o %.6e  gd %.6e\n", t, l2o[t], gd[t]);

  if (log.conditions)
    std::printf("alpha0 = %.6g, initialization conditions %s\n", log.quantities->alpha0,
                log.conditions->all_pass() ? "hold" : "do not hold");
  return 0;
}
