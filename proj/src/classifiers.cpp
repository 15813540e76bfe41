#include "sen/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sen/errors.hpp"
#include "sen/rng.hpp"
#include "sen/training.hpp"

namespace sen {

ClassCenters compute_class_centers(const std::vector<std::vector<double>>& embeddings,
                                   const std::vector<int>& labels, int num_classes) {
  if (embeddings.size() != labels.size()) {
    throw ContractError("compute_class_centers: embeddings and labels disagree in length");
  }
  if (embeddings.empty()) throw DataError("compute_class_centers: empty training set");
  const size_t l = embeddings[0].size();

  ClassCenters out;
  out.centers.assign((size_t)num_classes, std::vector<double>(l, 0.0));
  out.class_ids.resize((size_t)num_classes);
  std::vector<int> counts((size_t)num_classes, 0);
  std::iota(out.class_ids.begin(), out.class_ids.end(), 0);

  for (size_t i = 0; i < embeddings.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= num_classes) {
      throw DataError("compute_class_centers: label " + std::to_string(c) + " outside [0, " +
                      std::to_string(num_classes) + ")");
    }
    double norm = 0.0;
    for (double v : embeddings[i]) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw NumericError("compute_class_centers: zero-norm embedding at index " +
                                        std::to_string(i));
    for (size_t d = 0; d < l; ++d) out.centers[(size_t)c][d] += embeddings[i][d] / norm;
    counts[(size_t)c] += 1;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[(size_t)c] == 0) {
      throw DataError("compute_class_centers: class " + std::to_string(c) + " has no samples");
    }
    double norm = 0.0;
    for (size_t d = 0; d < l; ++d) {
      out.centers[(size_t)c][d] /= (double)counts[(size_t)c];
      norm += out.centers[(size_t)c][d] * out.centers[(size_t)c][d];
    }
    if (norm == 0.0) {
      throw NumericError("compute_class_centers: class " + std::to_string(c) +
                         " center degenerates to zero norm");
    }
  }
  return out;
}

int predict_sm(const std::vector<double>& e, const ClassCenters& centers) {
  if (centers.centers.empty()) throw DataError("predict_sm: no class centers");
  int best = -1;
  double best_sim = 0.0;
  for (size_t c = 0; c < centers.centers.size(); ++c) {
    const double sim = cosine_similarity(e, centers.centers[c]);
    if (best < 0 || sim > best_sim) {
      best = centers.class_ids[c];
      best_sim = sim;
    }
  }
  return best;
}

int predict_knn(const std::vector<double>& e, const std::vector<std::vector<double>>& train_embeddings,
                const std::vector<int>& train_labels, int k_nn) {
  const int n = (int)train_embeddings.size();
  if (n == 0) throw DataError("predict_knn: empty training set");
  if (k_nn < 1 || k_nn > n) {
    throw ContractError("predict_knn: k=" + std::to_string(k_nn) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<int> order((size_t)n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sims((size_t)n);
  for (int i = 0; i < n; ++i) sims[(size_t)i] = cosine_similarity(e, train_embeddings[(size_t)i]);
  // Highest similarity first; rank ties prefer the lower index.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (sims[(size_t)a] != sims[(size_t)b]) return sims[(size_t)a] > sims[(size_t)b];
    return a < b;
  });
  std::vector<int> votes;
  for (int r = 0; r < k_nn; ++r) {
    const int cls = train_labels[(size_t)order[(size_t)r]];
    if (cls >= (int)votes.size()) votes.resize((size_t)cls + 1, 0);
    votes[(size_t)cls] += 1;
  }
  int best = -1, best_votes = 0;
  for (size_t c = 0; c < votes.size(); ++c) {
    if (votes[c] > best_votes) {
      best = (int)c;
      best_votes = votes[c];
    }
  }
  return best;
}

NamedParams MLPHead::named_params() {
  return {{"head.W", &W}, {"head.b", &b}, {"head.V", &V}, {"head.b0", &b0}};
}

namespace {

Tensor glorot_matrix(int rows, int cols, Rng& rng) {
  Tensor t = Tensor::zeros({rows, cols});
  const double bound = std::sqrt(6.0 / (double)(rows + cols));
  for (double& v : t.values) v = rng.uniform(-bound, bound);
  return t;
}

Tape::Ref head_logits(Tape& t, Tape::Ref e, Tape::Ref W, Tape::Ref b, Tape::Ref V, Tape::Ref b0) {
  return t.dense(V, t.relu(t.dense(W, e, b)), b0);
}

}  // namespace

MLPHead init_mlp_head(int embed_dim, int num_classes, const MLPConfig& cfg) {
  if (num_classes < 1) throw ConfigError("init_mlp_head: need at least one class");
  if (cfg.hidden < 1) throw ConfigError("init_mlp_head: hidden width must be positive");
  Rng rng = Rng(cfg.seed).child("mlp-init");
  MLPHead h;
  h.W = glorot_matrix(cfg.hidden, embed_dim, rng);
  h.b = Tensor::full({cfg.hidden}, 0.01);  // keeps the ReLU hidden layer alive at init
  h.V = glorot_matrix(num_classes, cfg.hidden, rng);
  h.b0 = Tensor::zeros({num_classes});
  h.num_classes = num_classes;
  return h;
}

HeadTrainResult train_mlp_head(const std::vector<std::vector<double>>& embeddings,
                               const std::vector<int>& labels, int num_classes, const MLPConfig& cfg) {
  if (embeddings.size() != labels.size()) {
    throw ContractError("train_mlp_head: embeddings and labels disagree in length");
  }
  if (embeddings.empty()) throw DataError("train_mlp_head: empty training set");

  HeadTrainResult result;
  result.head = init_mlp_head((int)embeddings[0].size(), num_classes, cfg);
  NamedParams params = result.head.named_params();
  for (auto& [name, p] : params) p->set_requires_grad(true);

  OptimizerState opt;
  opt.kind = cfg.optimizer;
  opt.learning_rate = cfg.learning_rate;

  Rng order_rng = Rng(cfg.seed).child("mlp-order");
  const int n = (int)embeddings.size();
  std::vector<int> order((size_t)n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (int start = 0; start < n; start += cfg.batch) {
      const int stop = std::min(n, start + cfg.batch);
      Tape tape;
      Tape::Ref W = tape.param(result.head.W);
      Tape::Ref b = tape.param(result.head.b);
      Tape::Ref V = tape.param(result.head.V);
      Tape::Ref b0 = tape.param(result.head.b0);
      std::vector<Tape::Ref> losses;
      losses.reserve((size_t)(stop - start));
      for (int ii = start; ii < stop; ++ii) {
        const int idx = order[(size_t)ii];
        Tape::Ref e = tape.input(Tensor::vector(embeddings[(size_t)idx]));
        losses.push_back(tape.softmax_xent(head_logits(tape, e, W, b, V, b0), labels[(size_t)idx]));
      }
      Tape::Ref loss = tape.mean_of(losses);
      const double J = tape.scalar_val(loss);
      if (!std::isfinite(J)) {
        throw NumericError("train_mlp_head: non-finite loss at epoch " + std::to_string(epoch));
      }
      result.loss_history.push_back(J);
      tape.backward(loss);
      optimizer_step(params, opt);
    }
  }
  return result;
}

int predict_mlp(const std::vector<double>& e, const MLPHead& head) {
  Tape t;
  Tape::Ref logits = head_logits(t, t.input(Tensor::vector(e)), t.input(head.W), t.input(head.b),
                                 t.input(head.V), t.input(head.b0));
  const Tensor& probs = t.val(t.softmax(logits));
  int best = 0;
  for (int c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  return best;
}

double cross_entropy(const std::vector<std::vector<double>>& predicted_probs,
                     const std::vector<int>& labels) {
  if (predicted_probs.size() != labels.size()) {
    throw ContractError("cross_entropy: predictions and labels disagree in length");
  }
  if (predicted_probs.empty()) throw ContractError("cross_entropy: empty batch");
  double acc = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double p = predicted_probs[i][(size_t)labels[i]];
    acc += -std::log(std::max(p, 1e-300));
  }
  return acc / (double)labels.size();
}

BaselineTrainResult train_baseline(const std::vector<InputTensor>& samples,
                                   const std::vector<int>& labels, int num_classes,
                                   const SENConfig& net_cfg, const MLPConfig& cfg) {
  if (samples.size() != labels.size()) {
    throw ContractError("train_baseline: samples and labels disagree in length");
  }
  if (samples.empty()) throw DataError("train_baseline: empty training set");

  BaselineTrainResult result;
  result.model.encoder = init_network(net_cfg);
  result.model.head = init_mlp_head(net_cfg.lstm_hidden, num_classes, cfg);

  NamedParams params = result.model.encoder.named_params();
  for (auto& [name, p] : result.model.head.named_params()) params.emplace_back(name, p);
  for (auto& [name, p] : params) p->set_requires_grad(true);

  OptimizerState opt;
  opt.kind = cfg.optimizer;
  opt.learning_rate = cfg.learning_rate;

  Rng order_rng = Rng(cfg.seed).child("baseline-order");
  const int n = (int)samples.size();
  std::vector<int> order((size_t)n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (int start = 0; start < n; start += cfg.batch) {
      const int stop = std::min(n, start + cfg.batch);
      Tape tape;
      NetRefs refs = bind_network(tape, result.model.encoder);
      Tape::Ref W = tape.param(result.model.head.W);
      Tape::Ref b = tape.param(result.model.head.b);
      Tape::Ref V = tape.param(result.model.head.V);
      Tape::Ref b0 = tape.param(result.model.head.b0);
      std::vector<Tape::Ref> losses;
      losses.reserve((size_t)(stop - start));
      for (int ii = start; ii < stop; ++ii) {
        const int idx = order[(size_t)ii];
        Tape::Ref e = embed_on_tape(tape, samples[(size_t)idx], refs, net_cfg);
        losses.push_back(tape.softmax_xent(head_logits(tape, e, W, b, V, b0), labels[(size_t)idx]));
      }
      Tape::Ref loss = tape.mean_of(losses);
      const double J = tape.scalar_val(loss);
      if (!std::isfinite(J)) {
        throw NumericError("train_baseline: non-finite loss at epoch " + std::to_string(epoch));
      }
      result.loss_history.push_back(J);
      tape.backward(loss);
      optimizer_step(params, opt);
    }
  }
  return result;
}

int predict_baseline(const InputTensor& x, const BaselineModel& model) {
  return predict_mlp(embed(x, model.encoder), model.head);
}

}  // namespace sen
