#include "sen/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "sen/errors.hpp"

namespace sen {

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity: lengths " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine_similarity: degenerate zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double pair_probability(double phi, int s, double k) {
  if (k <= 0.0) throw ContractError("pair_probability: k must be positive");
  const double z = k * phi;
  double sigma;
  if (z >= 0.0) {
    sigma = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    sigma = e / (1.0 + e);
  }
  return s == 1 ? sigma : 1.0 - sigma;
}

double pairwise_loss(const std::vector<double>& phis, const std::vector<int>& ss, double k) {
  if (phis.size() != ss.size()) {
    throw ContractError("pairwise_loss: " + std::to_string(phis.size()) + " similarities vs " +
                        std::to_string(ss.size()) + " indicators");
  }
  if (k <= 0.0) throw ContractError("pairwise_loss: k must be positive");
  double J = 0.0;
  for (size_t p = 0; p < phis.size(); ++p) {
    const double z = k * phis[p];
    J += std::max(z, 0.0) - (double)ss[p] * z + std::log1p(std::exp(-std::abs(z)));
  }
  return J;
}

PairBatch sample_pairs(const std::vector<int>& labels, int batch_pairs, double positive_fraction,
                       Rng& rng) {
  const int n = (int)labels.size();
  if (batch_pairs < 1) throw ContractError("sample_pairs: batch must be positive");
  if (positive_fraction <= 0.0 || positive_fraction >= 1.0) {
    throw ConfigError("sample_pairs: positive_fraction must lie in (0,1)");
  }

  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < n; ++i) by_class[labels[(size_t)i]].push_back(i);

  // Ordered same-class pair count per class, for exact uniform sampling.
  long long total_pos = 0;
  std::vector<std::pair<int, long long>> pos_classes;  // (class, ordered pair count)
  for (const auto& [cls, idx] : by_class) {
    const long long m = (long long)idx.size();
    if (m >= 2) {
      pos_classes.emplace_back(cls, m * (m - 1));
      total_pos += m * (m - 1);
    }
  }
  const int want_pos = (int)std::llround((double)batch_pairs * positive_fraction);
  const int want_neg = batch_pairs - want_pos;
  if (want_pos > 0 && total_pos == 0) {
    throw DataError("sample_pairs: no class has two samples, cannot draw positive pairs");
  }
  if (want_neg > 0 && by_class.size() < 2) {
    throw DataError("sample_pairs: need at least two classes to draw negative pairs");
  }

  PairBatch batch;
  batch.pairs.reserve((size_t)batch_pairs);
  for (int p = 0; p < want_pos; ++p) {
    long long r = (long long)rng.integer((uint64_t)total_pos);
    for (const auto& [cls, count] : pos_classes) {
      if (r >= count) {
        r -= count;
        continue;
      }
      const auto& idx = by_class[cls];
      const long long m = (long long)idx.size();
      const int a = (int)(r / (m - 1));
      int b = (int)(r % (m - 1));
      if (b >= a) ++b;  // skip the self pair
      batch.pairs.push_back({idx[(size_t)a], idx[(size_t)b], 1});
      break;
    }
  }
  for (int p = 0; p < want_neg; ++p) {
    // Rejection sampling is uniform over ordered different-class pairs.
    for (int attempt = 0;; ++attempt) {
      const int i = (int)rng.integer((uint64_t)n);
      const int j = (int)rng.integer((uint64_t)n);
      if (i != j && labels[(size_t)i] != labels[(size_t)j]) {
        batch.pairs.push_back({i, j, 0});
        break;
      }
      if (attempt > 100000) throw DataError("sample_pairs: could not draw a negative pair");
    }
  }
  return batch;
}

TrainResult train_sen(const std::vector<InputTensor>& samples, const std::vector<int>& labels,
                      const SENConfig& net_cfg, const TrainConfig& train_cfg) {
  if (samples.size() != labels.size()) {
    throw ContractError("train_sen: samples and labels disagree in length");
  }
  if (samples.size() < 2) throw DataError("train_sen: need at least two samples");

  TrainResult result;
  result.weights = init_network(net_cfg);
  NamedParams params = result.weights.named_params();
  for (auto& [name, p] : params) p->set_requires_grad(true);

  OptimizerState opt;
  opt.kind = train_cfg.optimizer;
  opt.learning_rate = train_cfg.learning_rate;

  Rng pair_rng = Rng(train_cfg.seed).child("pairs");
  const int n = (int)samples.size();
  const int steps_per_epoch = (n + train_cfg.batch_pairs - 1) / train_cfg.batch_pairs;
  const int total_steps = train_cfg.epochs * steps_per_epoch;

  for (int step = 0; step < total_steps; ++step) {
    PairBatch batch = sample_pairs(labels, train_cfg.batch_pairs, train_cfg.positive_fraction, pair_rng);

    Tape tape;
    NetRefs refs = bind_network(tape, result.weights);
    std::map<int, Tape::Ref> embedded;  // one subgraph per distinct sample
    for (const Pair& pr : batch.pairs) {
      for (int id : {pr.i, pr.j}) {
        if (!embedded.count(id)) {
          embedded[id] = embed_on_tape(tape, samples[(size_t)id], refs, net_cfg);
        }
      }
    }
    std::vector<Tape::Ref> phi_refs;
    std::vector<int> indicators;
    phi_refs.reserve(batch.pairs.size());
    indicators.reserve(batch.pairs.size());
    for (const Pair& pr : batch.pairs) {
      phi_refs.push_back(tape.cosine(embedded[pr.i], embedded[pr.j]));
      indicators.push_back(pr.same);
    }
    Tape::Ref phis = tape.concat(phi_refs);
    Tape::Ref loss = tape.pairwise_nll(phis, indicators, train_cfg.sigmoid_k);

    const double J = tape.scalar_val(loss);
    if (!std::isfinite(J)) {
      throw NumericError("train_sen: non-finite loss at step " + std::to_string(step) + " (J=" +
                         std::to_string(J) + ")");
    }
    result.loss_history.push_back(J);
    tape.backward(loss);
    optimizer_step(params, opt);
  }
  return result;
}

void save_loss_history(const std::vector<double>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write loss history to " + path);
  out << "step,J\n";
  out.precision(17);
  for (size_t i = 0; i < history.size(); ++i) out << i << "," << history[i] << "\n";
}

}  // namespace sen
