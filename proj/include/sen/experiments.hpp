#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sen/classifiers.hpp"
#include "sen/datasets.hpp"
#include "sen/denoise.hpp"
#include "sen/metrics.hpp"
#include "sen/network.hpp"
#include "sen/training.hpp"

namespace sen {

struct ExperimentConfig {
  // Data source.
  std::string dataset = "synth";  // synth | hhar | usc_had
  std::string data_path;          // directory for hhar / usc_had
  std::string cache_path;         // optional SENS cache to read or write
  std::string checkpoint_path;    // SENW checkpoint for eval
  std::string out_dir = ".";
  uint64_t seed = 0;
  bool seed_set = false;

  // Preprocessing.
  double rate = 25.0;
  double window_s = 6.0;
  int intervals = 6;
  bool sort_freq_by_magnitude = false;
  double gap_threshold_s = 1.0;

  // Synthetic data.
  int synth_classes = 6;
  int synth_per_class = 80;

  // Augmentation (0 copies = off).
  int augment_copies = 0;
  double augment_std_fraction = 0.1;

  // Network.
  int conv1 = 5, conv2 = 3, conv3 = 3, conv4 = 3;
  int channels = 64;
  int lstm_hidden = 64;

  // Training.
  double sigmoid_k = 10.0;
  int batch_pairs = 128;
  double positive_fraction = 0.5;
  int sen_epochs = 100;
  int head_epochs = 200;
  int head_hidden = 64;
  int batch_samples = 32;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";

  // Classifiers.
  std::vector<std::string> classifiers = {"sm", "knn", "mlp"};
  int knn_k = 5;

  // Split.
  std::string split_mode = "fraction";  // fraction | louo
  double train_frac = 0.8;
  std::string louo_user;

  // Protocol parameters.
  std::vector<double> noise_rates = {0.1, 0.2, 0.3, 0.4};
  std::vector<int> stress_sizes = {30, 80, 110, 140, 170, 200};
  int clean_per_class = 30;
  double contamination = 0.4;

  SENConfig net_config() const;
  TrainConfig train_config() const;
  MLPConfig mlp_config(int epochs) const;
  SignalConfig signal_config() const;

  // Serialization as the line-oriented key=value format; unknown keys are
  // rejected by name.
  void apply(const std::string& key, const std::string& value);
  std::string to_key_values() const;
};

// Parses `key=value` lines ('#' comments allowed) and applies them.
ExperimentConfig load_config_file(const std::string& path);
// Applies --key=value arguments on top (later wins).
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides);
// Checks that referenced paths exist and the seed was set.
void validate_config(const ExperimentConfig& cfg);

// Train/test sample sets with their tensorized inputs.
struct PreparedData {
  SampleSet train;
  SampleSet test;
  std::vector<InputTensor> train_x;
  std::vector<InputTensor> test_x;
  int num_classes = 6;
};

// Loads (or generates) the configured dataset, preprocesses and splits it.
PreparedData prepare_data(const ExperimentConfig& cfg);

struct ClassificationResult {
  std::map<std::string, MetricsReport> reports;            // per classifier
  std::map<std::string, std::vector<int>> predictions;     // per classifier
  std::vector<int> test_truth;
  std::vector<double> sen_loss_history;
  SENWeights weights;
  double mean_in_class_sim = 0.0;      // over test embeddings
  double mean_between_class_sim = 0.0;
};

ClassificationResult run_classification(const ExperimentConfig& cfg, const PreparedData& data);

struct StressRow {
  int per_class = 0;
  double avg_f1 = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;  // macro average
};

std::vector<StressRow> run_stress(const ExperimentConfig& cfg, const PreparedData& data);

struct NoiseRow {
  double rate = 0.0;
  MetricsReport sen_sm;
  MetricsReport baseline;
};

std::vector<NoiseRow> run_noise_robustness(const ExperimentConfig& cfg, const PreparedData& data);

struct DenoiseRunResult {
  DenoiseReport report;
  DistanceStats stats;
  ClassCenters centers;
  std::vector<double> in_class_sims;       // clean-fit in-class similarities
  std::vector<double> between_class_sims;  // clean-fit between-class similarities
};

DenoiseRunResult run_denoise(const ExperimentConfig& cfg);

// FNV-1a 64 of a file's bytes, as a fixed-width hex string.
std::string file_hash_hex(const std::string& path);

// Writes out_dir/manifest.txt: the full config as reloadable key=value
// lines plus one hash comment per artifact.
void write_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& artifacts,
                    const std::string& path);

}  // namespace sen
