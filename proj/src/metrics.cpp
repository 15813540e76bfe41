#include "sen/metrics.hpp"

#include <json.hpp>

#include "sen/errors.hpp"

namespace sen {

MetricsReport metrics(const std::vector<int>& predictions, const std::vector<int>& truth,
                      int num_classes) {
  if (predictions.size() != truth.size()) {
    throw ContractError("metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(truth.size()) + " truth labels");
  }
  if (num_classes < 1) throw ContractError("metrics: need at least one class");

  MetricsReport r;
  r.num_classes = num_classes;
  r.total = (long long)truth.size();
  r.confusion.assign((size_t)num_classes, std::vector<long long>((size_t)num_classes, 0));
  for (size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predictions[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw ContractError("metrics: label outside [0, " + std::to_string(num_classes) + ") at index " +
                          std::to_string(i));
    }
    r.confusion[(size_t)t][(size_t)p] += 1;
  }

  r.precision.assign((size_t)num_classes, 0.0);
  r.recall.assign((size_t)num_classes, 0.0);
  r.f1.assign((size_t)num_classes, 0.0);
  r.truth_counts.assign((size_t)num_classes, 0);

  long long correct = 0;
  for (int c = 0; c < num_classes; ++c) {
    long long tp = r.confusion[(size_t)c][(size_t)c];
    long long fn = 0, fp = 0;
    for (int o = 0; o < num_classes; ++o) {
      if (o != c) {
        fn += r.confusion[(size_t)c][(size_t)o];
        fp += r.confusion[(size_t)o][(size_t)c];
      }
    }
    correct += tp;
    r.truth_counts[(size_t)c] = tp + fn;
    const double prec = (tp + fp) > 0 ? (double)tp / (double)(tp + fp) : 0.0;
    const double rec = (tp + fn) > 0 ? (double)tp / (double)(tp + fn) : 0.0;
    r.precision[(size_t)c] = prec;
    r.recall[(size_t)c] = rec;
    r.f1[(size_t)c] = (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  r.accuracy = r.total > 0 ? (double)correct / (double)r.total : 0.0;

  double weighted = 0.0;
  long long weight = 0;
  for (int c = 0; c < num_classes; ++c) {
    weighted += (double)r.truth_counts[(size_t)c] * r.f1[(size_t)c];
    weight += r.truth_counts[(size_t)c];
  }
  r.avg_f1 = weight > 0 ? weighted / (double)weight : 0.0;
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["num_classes"] = num_classes;
  j["total"] = total;
  j["accuracy"] = accuracy;
  j["avg_f1"] = avg_f1;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["truth_counts"] = truth_counts;
  j["confusion"] = confusion;
  return j.dump(2);
}

}  // namespace sen
