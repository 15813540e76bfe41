#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sen/rng.hpp"
#include "sen/signal.hpp"

namespace sen {

// Canonical 6-label sets, ids 0..5 in listed order.
const std::vector<std::string>& hhar_labels();     // ... Biking
const std::vector<std::string>& usc_had_labels();  // ... Running

struct SensorStream {
  std::vector<double> t;  // seconds, strictly increasing
  std::vector<double> x, y, z;

  size_t size() const { return t.size(); }
};

struct Recording {
  SensorStream acc;
  SensorStream gyro;
  std::string user;
  std::string device;
  int label = -1;
};

struct LoadReport {
  size_t rows_parsed = 0;
  size_t rows_rejected = 0;
  std::map<std::string, size_t> rejected_by_reason;
};

struct Provenance {
  std::string dataset;  // synth | hhar | usc_had
  double sample_rate = 25.0;
  double window_seconds = 6.0;
  uint64_t seed = 0;
  std::string params;  // free-form preprocessing descriptor
};

struct SampleSet {
  std::vector<RawSample> samples;
  std::vector<int> true_labels;  // original labels, filled by inject_label_noise
  Provenance prov;
  int num_classes = 6;

  std::vector<int> labels() const;
};

// HHAR phone CSVs (Phones_accelerometer.csv / Phones_gyroscope.csv with
// header Index,Arrival_Time,Creation_Time,x,y,z,User,Model,Device,gt).
// Keeps the six phone activities; unknown activity rows are counted, not
// fatal. Streams are grouped per (user, device, activity) and split at
// gaps longer than gap_threshold seconds.
std::vector<Recording> load_hhar(const std::string& dir, LoadReport* report = nullptr,
                                 double gap_threshold_s = 1.0);

// USC-HAD layout: <dir>/Subject<id>/a<activity>t<trial>.csv holding rows
// of 6 values (acc xyz, gyro xyz) at the native 100 Hz. Keeps the six
// selected activities; others are skipped.
std::vector<Recording> load_usc_had(const std::string& dir, LoadReport* report = nullptr);

// Both streams linearly interpolated onto an even target-rate grid
// anchored at the later stream start. Gaps longer than the threshold in
// either stream split the recording, so one input may yield several
// outputs.
std::vector<Recording> downsample(const Recording& rec, double target_rate,
                                  double gap_threshold_s = 1.0);

// Non-overlapping consecutive windows of rate*duration readings; the
// trailing remainder is dropped. Streams must already share the even grid
// produced by downsample.
std::vector<RawSample> segment(const Recording& rec, double duration_s, double rate);

enum class SplitMode { Fraction, LeaveOneUserOut };

struct SplitSpec {
  SplitMode mode = SplitMode::Fraction;
  double train_fraction = 0.8;
  uint64_t seed = 0;
  std::string holdout_user;
};

std::pair<SampleSet, SampleSet> split(const SampleSet& set, const SplitSpec& spec);

// Flips exactly round(rate*N) labels, each to a uniformly random different
// class; the pre-flip labels are recorded in true_labels.
SampleSet inject_label_noise(const SampleSet& set, double rate, uint64_t seed);

// Appends `copies` noisy duplicates per sample; per-(sensor, axis) noise
// std = noise_std_fraction times that axis's empirical std over the set.
SampleSet augment_gaussian(const SampleSet& set, int copies, double noise_std_fraction, uint64_t seed);

// Desk-scale synthetic data: each class carries a distinct two-tone
// spectral signature per sensor axis plus Gaussian noise, 25 Hz, 6 s.
SampleSet synth_dataset(int num_classes, int per_class, uint64_t seed);

// Tensorizes every sample in order.
std::vector<InputTensor> tensorize_all(const SampleSet& set, const SignalConfig& cfg);

// Versioned binary cache (magic "SENS").
void save_sample_set(const SampleSet& set, const std::string& path);
SampleSet load_sample_set(const std::string& path);

}  // namespace sen
