#pragma once

#include <string>
#include <vector>

namespace sen {

struct MetricsReport {
  int num_classes = 0;
  long long total = 0;
  std::vector<std::vector<long long>> confusion;  // [truth][predicted]
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<long long> truth_counts;  // N_i
  double avg_f1 = 0.0;                  // sum N_i F1_i / sum N_i

  std::string to_json() const;
};

// Confusion-matrix metrics with class-size-weighted averaged F1. Classes
// absent from the truth get F1 = 0 and weight 0.
MetricsReport metrics(const std::vector<int>& predictions, const std::vector<int>& truth,
                      int num_classes);

}  // namespace sen
