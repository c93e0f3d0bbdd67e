#include <gtest/gtest.h>

#include <cmath>

#include "kglp/error.hpp"
#include "kglp/link_model.hpp"
#include "kglp/rng.hpp"

using namespace kglp;

namespace {

struct Dataset {
  FeatureMatrix x;
  std::vector<int> y;
};

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds{FeatureMatrix(d), {}};
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = rng.normal();
    ds.x.append(row);
    ds.y.push_back(i % 2 == 0 ? 1 : static_cast<int>(rng.uniform(std::uint64_t{2})));
  }
  ds.y[1] = 0;
  return ds;
}

// Four noisy clusters at (+-1, +-1); the label is the quadrant parity.
Dataset xor_dataset(std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds{FeatureMatrix(2), {}};
  for (int i = 0; i < 400; ++i) {
    const double sx = (i & 1) ? 1.0 : -1.0, sy = (i & 2) ? 1.0 : -1.0;
    const double row[2] = {sx + 0.2 * rng.normal(), sy + 0.2 * rng.normal()};
    ds.x.append(row);
    ds.y.push_back(sx * sy > 0 ? 1 : 0);
  }
  return ds;
}

template <class Model>
double accuracy(const Model& m, const Dataset& ds) {
  std::size_t right = 0;
  for (std::size_t i = 0; i < ds.x.rows(); ++i) {
    right += (predict_proba(m, ds.x.row(i)) >= 0.5) == (ds.y[i] == 1);
  }
  return static_cast<double>(right) / static_cast<double>(ds.x.rows());
}

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

}  // namespace

TEST(Featurize, ConcatenatesSubjectFirst) {
  const std::vector<double> u{1, 2}, v{3, 4};
  EXPECT_EQ(featurize(u, v), (LinkFeature{1, 2, 3, 4}));
  EXPECT_NE(featurize(u, v), featurize(v, u));
  EXPECT_EQ(featurize(u, u), featurize(u, u));
  EXPECT_THROW(featurize(u, std::vector<double>{1}), Error);
}

TEST(Featurize, AblationOperatorsAreSymmetric) {
  const std::vector<double> u{1, -2}, v{3, 4};
  EXPECT_EQ(featurize(u, v, LinkOperator::Hadamard), (LinkFeature{3, -8}));
  EXPECT_EQ(featurize(u, v, LinkOperator::Average), featurize(v, u, LinkOperator::Average));
  EXPECT_EQ(featurize(u, v, LinkOperator::L1), (LinkFeature{2, 6}));
  EXPECT_EQ(featurize(u, v, LinkOperator::L2), (LinkFeature{4, 36}));
  EXPECT_THROW(parse_link_operator("sum"), Error);
}

TEST(LogReg, SeparableDataIsFitPerfectly) {
  Dataset ds{FeatureMatrix(1), {}};
  for (int i = 0; i < 20; ++i) {
    const double x = (i % 2 ? 1.0 : -1.0) * (1 + i);
    ds.x.append(std::vector<double>{x});
    ds.y.push_back(i % 2);
  }
  const LogisticModel m = train_logreg(ds.x, ds.y, {});
  EXPECT_EQ(accuracy(m, ds), 1.0);
}

TEST(LogReg, ZeroFeaturesBalancedLabelsStayAtHalf) {
  Dataset ds{FeatureMatrix(3), {}};
  for (int i = 0; i < 10; ++i) {
    ds.x.append(std::vector<double>{0, 0, 0});
    ds.y.push_back(i % 2);
  }
  const LogisticModel m = train_logreg(ds.x, ds.y, {});
  EXPECT_EQ(predict_proba(m, std::vector<double>{5, -2, 7}), 0.5);
}

TEST(LogReg, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = random_dataset(30, 6, seed);
    LogisticModel m{std::vector<double>(6), rng.normal(), 0.01};
    for (auto& w : m.weights) w = rng.normal();
    const LogRegObjective obj = logreg_objective(m, ds.x, ds.y);
    const double h = 1e-5;
    for (std::size_t j = 0; j <= 6; ++j) {
      double& p = j < 6 ? m.weights[j] : m.bias;
      const double saved = p;
      p = saved + h;
      const double plus = logreg_objective(m, ds.x, ds.y).loss;
      p = saved - h;
      const double minus = logreg_objective(m, ds.x, ds.y).loss;
      p = saved;
      const double analytic = j < 6 ? obj.grad_w[j] : obj.grad_b;
      EXPECT_LT(rel_err(analytic, (plus - minus) / (2 * h)), 1e-6);
    }
  }
}

TEST(LogReg, LossIsNonIncreasingPerStep) {
  const Dataset ds = random_dataset(200, 8, 3);
  std::vector<double> trace;
  train_logreg(ds.x, ds.y, {}, &trace);
  ASSERT_EQ(trace.size(), 500u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-15);
}

TEST(LogReg, RejectsSingleClass) {
  FeatureMatrix x(1);
  x.append(std::vector<double>{1});
  x.append(std::vector<double>{2});
  const std::vector<int> y{1, 1};
  try {
    train_logreg(x, y, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingleClass);
  }
}

TEST(Predict, ZeroModelGivesHalf) {
  const LogisticModel m{std::vector<double>(4, 0.0), 0.0, 0.0};
  EXPECT_EQ(predict_proba(m, std::vector<double>{1, 2, 3, 4}), 0.5);
  EXPECT_THROW(predict_proba(m, std::vector<double>{1}), Error);
}

TEST(Predict, LogRegIsSigmoidOfLinearForm) {
  const LogisticModel m{{0.5, -1.0, 2.0}, 0.25, 0.0};
  const std::vector<double> x{1.0, 2.0, 0.5};
  const double z = 0.5 * 1.0 - 1.0 * 2.0 + 2.0 * 0.5 + 0.25;
  EXPECT_NEAR(predict_proba(m, x), 1.0 / (1.0 + std::exp(-z)), 1e-15);
  // Monotone in a feature with positive weight.
  std::vector<double> bigger = x;
  bigger[2] += 0.1;
  EXPECT_GT(predict_proba(m, bigger), predict_proba(m, x));
}

TEST(Predict, OrderOfPairChangesScore) {
  const LogisticModel m{{1, 0, 0, 0}, 0.0, 0.0};
  const std::vector<double> u{1, 0}, v{-1, 0};
  EXPECT_NE(predict_proba(m, featurize(u, v)), predict_proba(m, featurize(v, u)));
}

TEST(Mlp, FitsXorWhereLogRegCannot) {
  const Dataset ds = xor_dataset(5);
  MlpConfig cfg;
  cfg.seed = 1;
  const MlpModel mlp = train_mlp(ds.x, ds.y, cfg);
  EXPECT_GE(accuracy(mlp, ds), 0.95);
  const LogisticModel lr = train_logreg(ds.x, ds.y, {});
  EXPECT_LE(accuracy(lr, ds), 0.75);
}

TEST(Mlp, BackpropMatchesFiniteDifferences) {
  for (Activation act : {Activation::Tanh, Activation::Relu}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Dataset ds = random_dataset(8, 2, seed + 100);
      const std::size_t hidden[] = {3};
      MlpModel m = init_mlp(2, hidden, act, seed);
      Rng rng(seed);
      for (auto& layer : m.layers) {
        for (double& b : layer.bias) b = 0.3 * rng.normal();
      }
      const MlpObjective obj = mlp_objective(m, ds.x, ds.y);
      const double h = 1e-6;
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto check = [&](std::vector<double>& params, const std::vector<double>& grads) {
          for (std::size_t i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            params[i] = saved + h;
            const double plus = mlp_objective(m, ds.x, ds.y).loss;
            params[i] = saved - h;
            const double minus = mlp_objective(m, ds.x, ds.y).loss;
            params[i] = saved;
            EXPECT_LT(rel_err(grads[i], (plus - minus) / (2 * h)), 1e-4);
          }
        };
        check(m.layers[l].weights, obj.grads[l].weights);
        check(m.layers[l].bias, obj.grads[l].bias);
      }
    }
  }
}

TEST(Mlp, ZeroEpochsReturnsSeededInit) {
  const Dataset ds = random_dataset(20, 4, 1);
  MlpConfig cfg;
  cfg.epochs = 0;
  cfg.hidden = {5, 3};
  cfg.seed = 9;
  const MlpModel trained = train_mlp(ds.x, ds.y, cfg);
  const MlpModel init = init_mlp(4, cfg.hidden, cfg.activation, 9);
  ASSERT_EQ(trained.layers.size(), init.layers.size());
  for (std::size_t l = 0; l < init.layers.size(); ++l) {
    EXPECT_EQ(trained.layers[l].weights, init.layers[l].weights);
    EXPECT_EQ(trained.layers[l].bias, init.layers[l].bias);
  }
}

TEST(Mlp, WithoutHiddenLayersMatchesLogReg) {
  const LogisticModel lr{{0.3, -0.7, 1.1}, -0.2, 0.0};
  MlpModel m = init_mlp(3, {}, Activation::Relu, 1);
  ASSERT_EQ(m.layers.size(), 1u);
  m.layers[0].weights = lr.weights;
  m.layers[0].bias = {lr.bias};
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
    EXPECT_DOUBLE_EQ(predict_proba(m, x), predict_proba(lr, x));
  }
}

TEST(Mlp, TrainingIsDeterministic) {
  const Dataset ds = random_dataset(300, 6, 4);
  MlpConfig cfg;
  cfg.hidden = {20, 20, 20};
  cfg.epochs = 5;
  const MlpModel a = train_mlp(ds.x, ds.y, cfg);
  const MlpModel b = train_mlp(ds.x, ds.y, cfg);
  for (std::size_t l = 0; l < a.layers.size(); ++l) EXPECT_EQ(a.layers[l].weights, b.layers[l].weights);
}

TEST(ModelFiles, JsonRoundTrip) {
  const Dataset ds = random_dataset(50, 4, 2);
  const LogRegConfig lcfg;
  const LogisticModel lr = train_logreg(ds.x, ds.y, lcfg);
  const LogisticModel lr2 = logreg_from_json(nlohmann::json::parse(to_json(lr, lcfg).dump()));
  EXPECT_EQ(lr2.weights, lr.weights);
  EXPECT_EQ(lr2.bias, lr.bias);

  MlpConfig mcfg;
  mcfg.hidden = {7};
  mcfg.epochs = 3;
  const MlpModel mlp = train_mlp(ds.x, ds.y, mcfg);
  const nlohmann::json j = nlohmann::json::parse(to_json(mlp, mcfg).dump());
  EXPECT_EQ(j["layers"][0]["shape"], (nlohmann::json{7, 4}));
  const MlpModel mlp2 = mlp_from_json(j);
  for (std::size_t i = 0; i < ds.x.rows(); ++i) {
    EXPECT_EQ(predict_proba(mlp2, ds.x.row(i)), predict_proba(mlp, ds.x.row(i)));
  }
  EXPECT_THROW(mlp_from_json(to_json(lr, lcfg)), Error);
  EXPECT_THROW(logreg_from_json(nlohmann::json::parse(R"({"kind":"logreg"})")), Error);
}
