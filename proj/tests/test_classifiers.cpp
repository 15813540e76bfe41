#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sen/classifiers.hpp"
#include "sen/datasets.hpp"
#include "sen/rng.hpp"
#include "sen/training.hpp"

using namespace sen;

namespace {

std::vector<double> random_vec(int n, Rng& rng) {
  std::vector<double> v((size_t)n);
  for (double& x : v) x = rng.uniform(-1, 1);
  return v;
}

std::vector<double> normalized(std::vector<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

TEST_CASE("compute_class_centers: singleton and idempotent cases") {
  const std::vector<std::vector<double>> e{{3, 0}, {0, 5}};
  const ClassCenters c = compute_class_centers(e, {0, 1}, 2);
  CHECK(c.centers[0] == normalized({3, 0}));
  CHECK(c.centers[1] == normalized({0, 5}));

  const std::vector<std::vector<double>> dup{{2, 2}, {4, 4}};
  const ClassCenters cd = compute_class_centers(dup, {0, 0}, 1);
  CHECK(cd.centers[0][0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cd.centers[0][1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("compute_class_centers: coverage and degeneracy errors") {
  CHECK_THROWS_AS(compute_class_centers({{1, 0}}, {0}, 2), DataError);
  CHECK_THROWS_AS(compute_class_centers({{1, 0}, {-1, 0}}, {0, 0}, 1), NumericError);
}

TEST_CASE("predict_sm: self-match and lowest-id tie break") {
  ClassCenters c;
  c.centers = {{1, 0}, {0, 1}, {1, 0}, {-1, 0}};
  c.class_ids = {0, 1, 2, 3};
  CHECK(predict_sm({0, 2}, c) == 1);
  // Centers 0 and 2 are identical: the query (1, 0.1) ties them; pick 0.
  CHECK(predict_sm({1, 0.1}, c) == 0);
}

TEST_CASE("predict_sm: matches an exhaustive scan on random geometries") {
  Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    ClassCenters c;
    const int k = 3 + (int)rng.integer(4);
    for (int i = 0; i < k; ++i) {
      c.centers.push_back(random_vec(5, rng));
      c.class_ids.push_back(i);
    }
    const std::vector<double> q = random_vec(5, rng);
    int best = -1;
    double best_sim = -2.0;
    for (int i = 0; i < k; ++i) {
      const double sim = cosine_similarity(q, c.centers[(size_t)i]);
      if (sim > best_sim) {
        best = i;
        best_sim = sim;
      }
    }
    CHECK(predict_sm(q, c) == best);
  }
}

TEST_CASE("predict_sm: invariant to positive query rescaling") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    ClassCenters c;
    for (int i = 0; i < 4; ++i) {
      c.centers.push_back(random_vec(6, rng));
      c.class_ids.push_back(i);
    }
    std::vector<double> q = random_vec(6, rng);
    const int base = predict_sm(q, c);
    for (double alpha : {0.001, 0.7, 42.0}) {
      std::vector<double> scaled = q;
      for (double& v : scaled) v *= alpha;
      CHECK(predict_sm(scaled, c) == base);
    }
  }
}

TEST_CASE("predict_sm: depends on training data only through the centers") {
  // Two training layouts with identical class centers must predict alike.
  const std::vector<std::vector<double>> layout_a{{1, 0}, {0.6, 0.8}, {0, 1}};
  const std::vector<std::vector<double>> layout_b{{0.8, 0.6}, {0.8, 0.6}, {0, 1}};
  // Class 0: mean of normalized a-embeddings = mean of normalized b-embeddings.
  const ClassCenters ca = compute_class_centers(layout_a, {0, 0, 1}, 2);
  const ClassCenters cb = compute_class_centers(layout_b, {0, 0, 1}, 2);
  REQUIRE(ca.centers[0][0] == doctest::Approx(cb.centers[0][0]).epsilon(1e-12));
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> q = random_vec(2, rng);
    CHECK(predict_sm(q, ca) == predict_sm(q, cb));
  }
}

TEST_CASE("predict_knn: exact match, unanimity and brute-force agreement") {
  Rng rng(45);
  std::vector<std::vector<double>> train;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    train.push_back(random_vec(4, rng));
    labels.push_back((int)rng.integer(3));
  }
  CHECK(predict_knn(train[3], train, labels, 1) == labels[3]);

  const std::vector<int> uniform(10, 2);
  CHECK(predict_knn(random_vec(4, rng), train, uniform, 10) == 2);

  for (int trial = 0; trial < 30; ++trial) {
    const std::vector<double> q = random_vec(4, rng);
    // Brute force: sort all neighbors by similarity, majority of top 3.
    std::vector<std::pair<double, int>> scored;
    for (size_t i = 0; i < train.size(); ++i) {
      scored.emplace_back(-cosine_similarity(q, train[i]), (int)i);
    }
    std::stable_sort(scored.begin(), scored.end());
    std::vector<int> votes(3, 0);
    for (int r = 0; r < 3; ++r) votes[(size_t)labels[(size_t)scored[(size_t)r].second]]++;
    int want = 0;
    for (int c = 1; c < 3; ++c) {
      if (votes[(size_t)c] > votes[(size_t)want]) want = c;
    }
    CHECK(predict_knn(q, train, labels, 3) == want);
  }
  CHECK_THROWS_AS(predict_knn(random_vec(4, rng), train, labels, 11), ContractError);
  CHECK_THROWS_AS(predict_knn(random_vec(4, rng), {}, {}, 1), DataError);
}

TEST_CASE("predict_sm equals predict_knn(k=1) with one sample per class") {
  Rng rng(46);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 2 + (int)rng.integer(5);
    std::vector<std::vector<double>> train;
    std::vector<int> labels;
    for (int i = 0; i < c; ++i) {
      train.push_back(random_vec(5, rng));
      labels.push_back(i);
    }
    const ClassCenters centers = compute_class_centers(train, labels, c);
    const std::vector<double> q = random_vec(5, rng);
    CHECK(predict_sm(q, centers) == predict_knn(q, train, labels, 1));
  }
}

TEST_CASE("predict_mlp: zero head ties toward class 0, constructed logits win") {
  MLPHead zero;
  zero.W = Tensor::zeros({4, 3});
  zero.b = Tensor::zeros({4});
  zero.V = Tensor::zeros({3, 4});
  zero.b0 = Tensor::zeros({3});
  zero.num_classes = 3;
  CHECK(predict_mlp({0.5, -0.5, 1.0}, zero) == 0);

  MLPHead rigged = zero;
  rigged.b0 = Tensor::vector({0.0, 0.0, 3.0});
  CHECK(predict_mlp({0.5, -0.5, 1.0}, rigged) == 2);
}

TEST_CASE("predict_mlp: matches a hand-composed forward pass") {
  Rng rng(47);
  MLPHead h;
  h.W = Tensor::zeros({5, 3});
  h.b = Tensor::zeros({5});
  h.V = Tensor::zeros({4, 5});
  h.b0 = Tensor::zeros({4});
  h.num_classes = 4;
  for (double& v : h.W.values) v = rng.uniform(-1, 1);
  for (double& v : h.b.values) v = rng.uniform(-1, 1);
  for (double& v : h.V.values) v = rng.uniform(-1, 1);
  for (double& v : h.b0.values) v = rng.uniform(-1, 1);

  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> e = random_vec(3, rng);
    // Manual: logits = b0 + V relu(W e + b); softmax argmax == logits argmax.
    std::vector<double> hidden(5, 0.0);
    for (int i = 0; i < 5; ++i) {
      double acc = h.b[i];
      for (int j = 0; j < 3; ++j) acc += h.W[i * 3 + j] * e[(size_t)j];
      hidden[(size_t)i] = std::max(0.0, acc);
    }
    int want = 0;
    double best = -1e100;
    for (int c = 0; c < 4; ++c) {
      double acc = h.b0[c];
      for (int j = 0; j < 5; ++j) acc += h.V[c * 5 + j] * hidden[(size_t)j];
      if (acc > best) {
        best = acc;
        want = c;
      }
    }
    CHECK(predict_mlp(e, h) == want);
  }
}

TEST_CASE("cross_entropy: perfect one-hot is 0, uniform is log c") {
  const std::vector<std::vector<double>> perfect{{1, 0, 0}, {0, 1, 0}};
  CHECK(cross_entropy(perfect, {0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<std::vector<double>> uniform{{0.25, 0.25, 0.25, 0.25}};
  CHECK(std::abs(cross_entropy(uniform, {2}) - std::log(4.0)) < 1e-12);
}

namespace {

// Well-separated frozen embeddings with some in-class spread.
void separable_embeddings(int per_class, std::vector<std::vector<double>>& e, std::vector<int>& labels,
                          uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::vector<double>> anchors{{3, 0, 0}, {0, 3, 0}, {0, 0, 3}};
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> v = anchors[(size_t)c];
      for (double& x : v) x += rng.uniform(-0.4, 0.4);
      e.push_back(std::move(v));
      labels.push_back(c);
    }
  }
}

}  // namespace

TEST_CASE("train_mlp_head: loss drops, zero epochs is the init, beats majority rate") {
  std::vector<std::vector<double>> e;
  std::vector<int> labels;
  separable_embeddings(12, e, labels, 48);

  MLPConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 200;
  cfg.learning_rate = 3e-3;
  cfg.seed = 4;
  HeadTrainResult r = train_mlp_head(e, labels, 3, cfg);
  REQUIRE(!r.loss_history.empty());
  CHECK(r.loss_history.back() < r.loss_history.front());

  MLPConfig zero = cfg;
  zero.epochs = 0;
  HeadTrainResult rz = train_mlp_head(e, labels, 3, zero);
  const MLPHead init = init_mlp_head(3, 3, zero);
  CHECK(rz.head.W.values == init.W.values);
  CHECK(rz.head.V.values == init.V.values);

  int correct = 0;
  for (size_t i = 0; i < e.size(); ++i) {
    if (predict_mlp(e[i], r.head) == labels[i]) ++correct;
  }
  // Majority class rate is 1/3 on this balanced set.
  CHECK((double)correct / (double)e.size() > 1.0 / 3.0);
}

TEST_CASE("train_baseline: reproducible, fits separable synthetic data, loss decreases") {
  SampleSet set = synth_dataset(3, 10, 2024);
  const std::vector<InputTensor> xs = tensorize_all(set, SignalConfig{});
  const std::vector<int> labels = set.labels();

  SENConfig net;
  net.channels = 4;
  net.lstm_hidden = 8;
  net.seed = 6;
  MLPConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 12;
  cfg.batch = 10;
  cfg.learning_rate = 3e-3;
  cfg.seed = 7;

  BaselineTrainResult a = train_baseline(xs, labels, 3, net, cfg);
  CHECK(a.loss_history.back() < a.loss_history.front());

  BaselineTrainResult b = train_baseline(xs, labels, 3, net, cfg);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.model.head.V.values == b.model.head.V.values);

  int correct = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (predict_baseline(xs[i], a.model) == labels[i]) ++correct;
  }
  CHECK((double)correct / (double)xs.size() > 0.9);
}
