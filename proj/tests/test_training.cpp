#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "sen/datasets.hpp"
#include "sen/optim.hpp"
#include "sen/training.hpp"

using namespace sen;

TEST_CASE("cosine_similarity: identity, orthogonality, 45 degrees") {
  const std::vector<double> a{0.3, -0.7, 2.0};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_similarity({1, 0}, {0, 1}) == doctest::Approx(0.0));
  CHECK(cosine_similarity({1, 0}, {1, 1}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(cosine_similarity({0, 0}, {1, 1}), NumericError);
}

TEST_CASE("cosine_similarity: invariant to positive rescaling within 1e-12") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(4), b(4);
    for (double& v : a) v = rng.uniform(-2, 2);
    for (double& v : b) v = rng.uniform(-2, 2);
    const double alpha = rng.uniform(0.01, 50.0);
    const double beta = rng.uniform(0.01, 50.0);
    std::vector<double> as = a, bs = b;
    for (double& v : as) v *= alpha;
    for (double& v : bs) v *= beta;
    CHECK(std::abs(cosine_similarity(as, bs) - cosine_similarity(a, b)) < 1e-12);
  }
}

TEST_CASE("pair_probability: closed-form logistic values at k=10") {
  CHECK(pair_probability(0.0, 1, 10.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pair_probability(1.0, 1, 10.0) == doctest::Approx(0.9999546021312976).epsilon(1e-12));
  CHECK(pair_probability(0.5, 0, 10.0) == doctest::Approx(0.0066928509242848554).epsilon(1e-12));
}

TEST_CASE("pair_probability: complementary outcomes sum to one exactly") {
  for (double phi : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    CHECK(pair_probability(phi, 1, 10.0) + pair_probability(phi, 0, 10.0) == 1.0);
  }
}

TEST_CASE("pairwise_loss: closed-form values within 1e-10") {
  const double tail = std::log1p(std::exp(-10.0));  // ~4.54e-5
  CHECK(std::abs(pairwise_loss({1.0}, {1}, 10.0) - tail) < 1e-10);
  CHECK(std::abs(tail - 4.5398899216870535e-05) < 1e-10);
  CHECK(std::abs(pairwise_loss({-1.0}, {0}, 10.0) - tail) < 1e-10);
  CHECK(std::abs(pairwise_loss({0.0}, {1}, 10.0) - std::log(2.0)) < 1e-10);
  // Additivity over pairs.
  CHECK(pairwise_loss({1.0, -1.0, 0.0}, {1, 0, 1}, 10.0) ==
        doctest::Approx(2.0 * tail + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("pairwise_loss: agrees with -log pair_probability") {
  for (double phi : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    for (int s : {0, 1}) {
      CHECK(pairwise_loss({phi}, {s}, 10.0) ==
            doctest::Approx(-std::log(pair_probability(phi, s, 10.0))).epsilon(1e-9));
    }
  }
}

TEST_CASE("pairwise_loss: monotone in phi on the grid") {
  const std::vector<double> grid{-1.0, -0.5, 0.0, 0.5, 1.0};
  for (size_t i = 1; i < grid.size(); ++i) {
    CHECK(pairwise_loss({grid[i]}, {1}, 10.0) < pairwise_loss({grid[i - 1]}, {1}, 10.0));
    CHECK(pairwise_loss({grid[i]}, {0}, 10.0) > pairwise_loss({grid[i - 1]}, {0}, 10.0));
  }
}

TEST_CASE("pairwise_loss: large |k phi| stays finite (stable form)") {
  CHECK(std::isfinite(pairwise_loss({1.0}, {0}, 1000.0)));
  CHECK(std::isfinite(pairwise_loss({-1.0}, {1}, 1000.0)));
  CHECK(pairwise_loss({1.0}, {0}, 1000.0) == doctest::Approx(1000.0));
}

TEST_CASE("pairwise_nll gradient matches finite differences within 1e-6") {
  Tensor phis = Tensor::vector({-0.8, -0.3, 0.1, 0.6, 0.9});
  const std::vector<int> s{1, 0, 1, 0, 1};
  const double err = grad_check(
      [&s](Tape& t, const std::vector<Tape::Ref>& p) { return t.pairwise_nll(p[0], s, 10.0); },
      {{"phis", &phis}}, 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("sample_pairs: composition, validity and determinism") {
  const std::vector<int> labels{0, 0, 0, 1, 1, 2};
  Rng rng(12);
  PairBatch batch = sample_pairs(labels, 4, 0.5, rng);
  REQUIRE(batch.pairs.size() == 4);
  int pos = 0;
  for (const Pair& p : batch.pairs) {
    CHECK(p.i != p.j);
    CHECK(p.same == (labels[(size_t)p.i] == labels[(size_t)p.j] ? 1 : 0));
    pos += p.same;
  }
  CHECK(pos == 2);

  Rng r1(77), r2(77);
  PairBatch a = sample_pairs(labels, 32, 0.25, r1);
  PairBatch b = sample_pairs(labels, 32, 0.25, r2);
  for (size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].i == b.pairs[i].i);
    CHECK(a.pairs[i].j == b.pairs[i].j);
  }
}

TEST_CASE("sample_pairs: single-class data cannot satisfy a mixed batch") {
  const std::vector<int> labels{0, 0, 0, 0};
  Rng rng(1);
  CHECK_THROWS_AS(sample_pairs(labels, 4, 0.5, rng), DataError);
}

TEST_CASE("sample_pairs: positives need a class with two samples") {
  const std::vector<int> labels{0, 1, 2};
  Rng rng(1);
  CHECK_THROWS_AS(sample_pairs(labels, 4, 0.5, rng), DataError);
}

namespace {

struct TinySetup {
  std::vector<InputTensor> xs;
  std::vector<int> labels;
  SENConfig net;
  TrainConfig train;
};

TinySetup tiny_setup(uint64_t seed) {
  TinySetup s;
  SampleSet set = synth_dataset(3, 8, seed);
  s.xs = tensorize_all(set, SignalConfig{});
  s.labels = set.labels();
  s.net.channels = 4;
  s.net.lstm_hidden = 8;
  s.net.seed = 5;
  s.train.batch_pairs = 24;
  s.train.epochs = 8;
  s.train.learning_rate = 3e-3;
  s.train.seed = 9;
  return s;
}

}  // namespace

TEST_CASE("train_sen: loss decreases on separable synthetic data") {
  TinySetup s = tiny_setup(1001);
  TrainResult r = train_sen(s.xs, s.labels, s.net, s.train);
  REQUIRE(!r.loss_history.empty());
  CHECK(r.loss_history.back() < r.loss_history.front());
}

TEST_CASE("train_sen: zero learning rate leaves the weights at init") {
  TinySetup s = tiny_setup(1002);
  s.train.learning_rate = 0.0;
  s.train.epochs = 2;
  TrainResult r = train_sen(s.xs, s.labels, s.net, s.train);
  SENWeights init = init_network(s.net);
  NamedParams got = r.weights.named_params();
  NamedParams want = init.named_params();
  for (size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].second->values == want[i].second->values);
  }
}

TEST_CASE("train_sen: fixed seed reproduces the loss history bitwise") {
  TinySetup s = tiny_setup(1003);
  s.train.epochs = 3;
  TrainResult a = train_sen(s.xs, s.labels, s.net, s.train);
  TrainResult b = train_sen(s.xs, s.labels, s.net, s.train);
  CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("train_sen: epoch definition gives ceil(N/B) steps per epoch") {
  TinySetup s = tiny_setup(1004);
  s.train.batch_pairs = 10;  // N=24 -> 3 steps per epoch
  s.train.epochs = 4;
  TrainResult r = train_sen(s.xs, s.labels, s.net, s.train);
  CHECK(r.loss_history.size() == 12);
}
