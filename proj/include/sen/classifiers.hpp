#pragma once

#include <cstdint>
#include <vector>

#include "sen/network.hpp"
#include "sen/optim.hpp"
#include "sen/signal.hpp"

namespace sen {

// Per-class mean of normalized embeddings. Centers are kept as the raw
// means; cosine matching is scale-free so renormalizing would not change
// any prediction.
struct ClassCenters {
  std::vector<std::vector<double>> centers;  // c x l
  std::vector<int> class_ids;
};

ClassCenters compute_class_centers(const std::vector<std::vector<double>>& embeddings,
                                   const std::vector<int>& labels, int num_classes);

// Label of the class center with the highest cosine similarity; ties break
// toward the lowest class id.
int predict_sm(const std::vector<double>& e, const ClassCenters& centers);

// Majority label among the k highest-cosine training neighbors. Neighbor
// rank ties prefer the lower sample index; vote ties the lower class id.
int predict_knn(const std::vector<double>& e, const std::vector<std::vector<double>>& train_embeddings,
                const std::vector<int>& train_labels, int k_nn);

struct MLPConfig {
  int hidden = 64;
  int epochs = 200;
  int batch = 32;
  double learning_rate = 1e-3;
  OptKind optimizer = OptKind::Adam;
  uint64_t seed = 1;
};

// One-hidden-layer softmax head: logits = V * relu(W e + b) + b0.
struct MLPHead {
  Tensor W, b;   // hidden
  Tensor V, b0;  // output (width = number of classes)
  int num_classes = 0;

  NamedParams named_params();
};

MLPHead init_mlp_head(int embed_dim, int num_classes, const MLPConfig& cfg);

struct HeadTrainResult {
  MLPHead head;
  std::vector<double> loss_history;  // per-step averaged cross entropy
};

// Trains the head alone on frozen embeddings (the encoder is untouched).
HeadTrainResult train_mlp_head(const std::vector<std::vector<double>>& embeddings,
                               const std::vector<int>& labels, int num_classes, const MLPConfig& cfg);

int predict_mlp(const std::vector<double>& e, const MLPHead& head);

// Averaged cross entropy of predicted class distributions against labels.
double cross_entropy(const std::vector<std::vector<double>>& predicted_probs,
                     const std::vector<int>& labels);

struct BaselineModel {
  SENWeights encoder;
  MLPHead head;
};

struct BaselineTrainResult {
  BaselineModel model;
  std::vector<double> loss_history;
};

// Same architecture as SEN + head, trained jointly end to end with the
// averaged cross-entropy loss only.
BaselineTrainResult train_baseline(const std::vector<InputTensor>& samples,
                                   const std::vector<int>& labels, int num_classes,
                                   const SENConfig& net_cfg, const MLPConfig& cfg);

int predict_baseline(const InputTensor& x, const BaselineModel& model);

}  // namespace sen
