#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sen/classifiers.hpp"
#include "sen/metrics.hpp"
#include "sen/network.hpp"

namespace sen {

// Cosine-similarity statistics fitted on a clean set: per class the 5th
// percentile of in-class similarities, and per ordered (class, other)
// pair the mean / sample standard deviation of between-class similarities.
struct DistanceStats {
  int num_classes = 0;
  std::vector<double> in_p5;                   // [c]
  std::vector<std::vector<double>> mu;         // [c][c], diagonal unused
  std::vector<std::vector<double>> sigma;      // [c][c], diagonal unused
};

// Linear-interpolated percentile of (unsorted) values, p in [0, 100].
double percentile(std::vector<double> values, double p);

DistanceStats fit_distance_stats(const std::vector<std::vector<double>>& clean_embeddings,
                                 const std::vector<int>& clean_labels, const ClassCenters& centers);

// A sample is kept as clean iff (a) its similarity to the claimed center
// is at least the class's 5th percentile and (b) its similarity to every
// other center stays below that pair's mu + 2 sigma.
bool is_clean(const std::vector<double>& e, int claimed, const ClassCenters& centers,
              const DistanceStats& stats);

struct DenoiseReport {
  std::vector<int> kept_indices;
  std::vector<int> flagged_indices;
  bool has_truth = false;
  // Detection metrics over the binary task, positive class = mislabeled.
  std::optional<double> recall;  // empty when no sample is truly mislabeled
  double precision = 0.0;
  double accuracy = 0.0;
  double avg_f1 = 0.0;
  std::vector<double> class_f1;  // [clean, mislabeled]
  long long true_mislabeled = 0;

  std::string to_json() const;
};

// Embeds every noisy sample, applies is_clean against its claimed label
// and partitions the inputs. When the true labels are supplied, scores
// the detector (a sample counts as mislabeled when claimed != truth).
DenoiseReport denoise_dataset(const std::vector<InputTensor>& noisy_samples,
                              const std::vector<int>& noisy_labels, const SENWeights& weights,
                              const ClassCenters& centers, const DistanceStats& stats,
                              const std::vector<int>* true_labels = nullptr);

// Standard-normal quantiles at plotting positions (i-0.5)/n paired with
// the standardized order statistics, for external Q-Q plotting.
std::vector<std::pair<double, double>> qq_data(const std::vector<double>& similarities);

// Inverse standard normal CDF (Acklam's rational approximation).
double normal_quantile(double p);

}  // namespace sen
