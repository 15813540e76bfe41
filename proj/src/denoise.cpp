#include "sen/denoise.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "sen/errors.hpp"
#include "sen/training.hpp"

namespace sen {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("percentile: empty sample");
  if (p < 0.0 || p > 100.0) throw ContractError("percentile: p outside [0, 100]");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  const double rank = p / 100.0 * (double)(values.size() - 1);
  const size_t lo = (size_t)std::floor(rank);
  const size_t hi = (size_t)std::ceil(rank);
  const double frac = rank - (double)lo;
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

std::pair<double, double> mean_and_sample_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= (double)v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / (double)(v.size() - 1)) : 0.0;
  return {mean, sd};
}

}  // namespace

DistanceStats fit_distance_stats(const std::vector<std::vector<double>>& clean_embeddings,
                                 const std::vector<int>& clean_labels, const ClassCenters& centers) {
  if (clean_embeddings.size() != clean_labels.size()) {
    throw ContractError("fit_distance_stats: embeddings and labels disagree in length");
  }
  const int c = (int)centers.centers.size();
  std::vector<std::vector<std::vector<double>>> sims((size_t)c,
                                                     std::vector<std::vector<double>>((size_t)c));
  for (size_t i = 0; i < clean_embeddings.size(); ++i) {
    const int cls = clean_labels[i];
    if (cls < 0 || cls >= c) {
      throw DataError("fit_distance_stats: label " + std::to_string(cls) + " outside [0, " +
                      std::to_string(c) + ")");
    }
    for (int other = 0; other < c; ++other) {
      sims[(size_t)cls][(size_t)other].push_back(
          cosine_similarity(clean_embeddings[i], centers.centers[(size_t)other]));
    }
  }

  DistanceStats stats;
  stats.num_classes = c;
  stats.in_p5.assign((size_t)c, 0.0);
  stats.mu.assign((size_t)c, std::vector<double>((size_t)c, 0.0));
  stats.sigma.assign((size_t)c, std::vector<double>((size_t)c, 0.0));
  for (int cls = 0; cls < c; ++cls) {
    if (sims[(size_t)cls][(size_t)cls].size() < 2) {
      throw DataError("fit_distance_stats: class " + std::to_string(cls) +
                      " has fewer than 2 clean samples");
    }
    stats.in_p5[(size_t)cls] = percentile(sims[(size_t)cls][(size_t)cls], 5.0);
    for (int other = 0; other < c; ++other) {
      if (other == cls) continue;
      const auto [m, s] = mean_and_sample_std(sims[(size_t)cls][(size_t)other]);
      stats.mu[(size_t)cls][(size_t)other] = m;
      stats.sigma[(size_t)cls][(size_t)other] = s;
    }
  }
  return stats;
}

bool is_clean(const std::vector<double>& e, int claimed, const ClassCenters& centers,
              const DistanceStats& stats) {
  const int c = stats.num_classes;
  if (claimed < 0 || claimed >= c || (int)centers.centers.size() != c) {
    throw DataError("is_clean: no statistics for claimed class " + std::to_string(claimed));
  }
  const double own = cosine_similarity(e, centers.centers[(size_t)claimed]);
  if (own < stats.in_p5[(size_t)claimed]) return false;
  for (int other = 0; other < c; ++other) {
    if (other == claimed) continue;
    const double sim = cosine_similarity(e, centers.centers[(size_t)other]);
    const double threshold =
        stats.mu[(size_t)claimed][(size_t)other] + 2.0 * stats.sigma[(size_t)claimed][(size_t)other];
    if (sim >= threshold) return false;
  }
  return true;
}

DenoiseReport denoise_dataset(const std::vector<InputTensor>& noisy_samples,
                              const std::vector<int>& noisy_labels, const SENWeights& weights,
                              const ClassCenters& centers, const DistanceStats& stats,
                              const std::vector<int>* true_labels) {
  if (noisy_samples.size() != noisy_labels.size()) {
    throw ContractError("denoise_dataset: samples and labels disagree in length");
  }
  if (true_labels && true_labels->size() != noisy_samples.size()) {
    throw ContractError("denoise_dataset: ground truth length mismatch");
  }

  DenoiseReport report;
  std::vector<int> predicted_noise;  // 1 = flagged as mislabeled
  predicted_noise.reserve(noisy_samples.size());
  for (size_t i = 0; i < noisy_samples.size(); ++i) {
    const std::vector<double> e = embed(noisy_samples[i], weights);
    const bool clean = is_clean(e, noisy_labels[i], centers, stats);
    if (clean) {
      report.kept_indices.push_back((int)i);
    } else {
      report.flagged_indices.push_back((int)i);
    }
    predicted_noise.push_back(clean ? 0 : 1);
  }

  if (true_labels) {
    report.has_truth = true;
    std::vector<int> truth;
    truth.reserve(noisy_samples.size());
    for (size_t i = 0; i < noisy_samples.size(); ++i) {
      truth.push_back(noisy_labels[i] != (*true_labels)[i] ? 1 : 0);
    }
    const MetricsReport m = metrics(predicted_noise, truth, 2);
    report.true_mislabeled = m.truth_counts[1];
    report.accuracy = m.accuracy;
    report.precision = m.precision[1];
    report.avg_f1 = m.avg_f1;
    report.class_f1 = m.f1;
    if (report.true_mislabeled > 0) {
      report.recall = m.recall[1];
    }
  }
  return report;
}

double normal_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw ContractError("normal_quantile: p must lie in (0,1)");
  // Acklam's rational approximation, |relative error| < 1.15e-9.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > phigh) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

std::vector<std::pair<double, double>> qq_data(const std::vector<double>& similarities) {
  const size_t n = similarities.size();
  if (n < 3) throw DataError("qq_data: need at least 3 values, got " + std::to_string(n));
  const auto [mean, sd] = mean_and_sample_std(similarities);
  if (sd == 0.0) throw NumericError("qq_data: zero variance");
  std::vector<double> sorted = similarities;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> points;
  points.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const double p = ((double)i + 0.5) / (double)n;
    points.emplace_back(normal_quantile(p), (sorted[i] - mean) / sd);
  }
  return points;
}

std::string DenoiseReport::to_json() const {
  nlohmann::json j;
  j["kept"] = kept_indices.size();
  j["flagged"] = flagged_indices.size();
  j["kept_indices"] = kept_indices;
  j["flagged_indices"] = flagged_indices;
  j["has_truth"] = has_truth;
  if (has_truth) {
    j["true_mislabeled"] = true_mislabeled;
    if (recall.has_value()) {
      j["recall"] = *recall;
    } else {
      j["recall"] = "n/a";
    }
    j["precision"] = precision;
    j["accuracy"] = accuracy;
    j["avg_f1"] = avg_f1;
    j["class_f1"] = class_f1;
  }
  return j.dump(2);
}

}  // namespace sen
