#include "sen/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sen/binio.hpp"
#include "sen/errors.hpp"

namespace fs = std::filesystem;

namespace sen {

const std::vector<std::string>& hhar_labels() {
  static const std::vector<std::string> labels = {"Standing", "Sitting",    "Walking",
                                                  "Upstairs", "Downstairs", "Biking"};
  return labels;
}

const std::vector<std::string>& usc_had_labels() {
  static const std::vector<std::string> labels = {"Standing", "Sitting",    "Walking",
                                                  "Upstairs", "Downstairs", "Running"};
  return labels;
}

std::vector<int> SampleSet::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const RawSample& s : samples) out.push_back(s.label);
  return out;
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = (char)std::tolower((unsigned char)c);
  return s;
}

// HHAR ground-truth tokens to canonical ids; canonical names also accepted.
int hhar_label_id(const std::string& raw) {
  static const std::map<std::string, int> map = {
      {"stand", 0},    {"standing", 0},   {"sit", 1},        {"sitting", 1},
      {"walk", 2},     {"walking", 2},    {"stairsup", 3},   {"upstairs", 3},
      {"stairsdown", 4}, {"downstairs", 4}, {"bike", 5},     {"biking", 5},
  };
  auto it = map.find(lower(raw));
  return it == map.end() ? -1 : it->second;
}

// USC-HAD activity numbers to canonical ids (subset of the 12 activities).
int usc_label_id(int activity) {
  switch (activity) {
    case 9: return 0;   // Standing
    case 8: return 1;   // Sitting
    case 1: return 2;   // Walking (forward)
    case 4: return 3;   // Upstairs
    case 5: return 4;   // Downstairs
    case 6: return 5;   // Running (forward)
    default: return -1;
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

struct TimedReading {
  double t, x, y, z;
};

using StreamGroups = std::map<std::string, std::vector<TimedReading>>;

void parse_hhar_file(const std::string& path, StreamGroups& groups, LoadReport& report) {
  std::ifstream in(path);
  if (!in) throw DataError("load_hhar: missing sensor file " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("load_hhar: empty file " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 10) {
      report.rows_rejected++;
      report.rejected_by_reason["malformed"]++;
      continue;
    }
    const int label = hhar_label_id(f[9]);
    if (label < 0) {
      report.rows_rejected++;
      report.rejected_by_reason["activity:" + f[9]]++;
      continue;
    }
    try {
      TimedReading r;
      r.t = std::stod(f[2]) * 1e-9;  // creation time, nanoseconds
      r.x = std::stod(f[3]);
      r.y = std::stod(f[4]);
      r.z = std::stod(f[5]);
      if (!std::isfinite(r.t) || !std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.z)) {
        throw std::invalid_argument("non-finite");
      }
      groups[f[6] + "\x1f" + f[8] + "\x1f" + std::to_string(label)].push_back(r);
      report.rows_parsed++;
    } catch (const std::exception&) {
      report.rows_rejected++;
      report.rejected_by_reason["malformed"]++;
    }
  }
}

SensorStream to_stream(std::vector<TimedReading> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TimedReading& a, const TimedReading& b) { return a.t < b.t; });
  SensorStream s;
  s.t.reserve(rows.size());
  for (const TimedReading& r : rows) {
    if (!s.t.empty() && r.t <= s.t.back()) continue;  // enforce strict monotonicity
    s.t.push_back(r.t);
    s.x.push_back(r.x);
    s.y.push_back(r.y);
    s.z.push_back(r.z);
  }
  return s;
}

// Consecutive index ranges separated by gaps longer than the threshold.
std::vector<std::pair<size_t, size_t>> gap_segments(const SensorStream& s, double gap_threshold_s) {
  std::vector<std::pair<size_t, size_t>> out;
  if (s.size() == 0) return out;
  size_t start = 0;
  for (size_t i = 1; i < s.size(); ++i) {
    if (s.t[i] - s.t[i - 1] > gap_threshold_s) {
      out.emplace_back(start, i);
      start = i;
    }
  }
  out.emplace_back(start, s.size());
  return out;
}

SensorStream slice_stream(const SensorStream& s, double t_lo, double t_hi) {
  SensorStream out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s.t[i] >= t_lo && s.t[i] <= t_hi) {
      out.t.push_back(s.t[i]);
      out.x.push_back(s.x[i]);
      out.y.push_back(s.y[i]);
      out.z.push_back(s.z[i]);
    }
  }
  return out;
}

double interp(const std::vector<double>& ts, const std::vector<double>& vs, double t, size_t& hint) {
  while (hint + 1 < ts.size() && ts[hint + 1] <= t) ++hint;
  if (ts[hint] == t || hint + 1 >= ts.size()) return vs[hint];
  const double frac = (t - ts[hint]) / (ts[hint + 1] - ts[hint]);
  return vs[hint] + frac * (vs[hint + 1] - vs[hint]);
}

}  // namespace

std::vector<Recording> load_hhar(const std::string& dir, LoadReport* report, double gap_threshold_s) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;

  StreamGroups acc_groups, gyro_groups;
  parse_hhar_file((fs::path(dir) / "Phones_accelerometer.csv").string(), acc_groups, rep);
  parse_hhar_file((fs::path(dir) / "Phones_gyroscope.csv").string(), gyro_groups, rep);

  std::vector<Recording> out;
  for (auto& [key, acc_rows] : acc_groups) {
    auto git = gyro_groups.find(key);
    if (git == gyro_groups.end()) continue;
    const SensorStream acc = to_stream(std::move(acc_rows));
    const SensorStream gyro = to_stream(std::move(git->second));
    if (acc.size() < 2 || gyro.size() < 2) continue;

    std::istringstream ks(key);
    std::string user, device, label_str;
    std::getline(ks, user, '\x1f');
    std::getline(ks, device, '\x1f');
    std::getline(ks, label_str, '\x1f');
    const int label = std::stoi(label_str);

    // Pair accelerometer segments with the overlapping gyroscope readings.
    for (const auto& [lo, hi] : gap_segments(acc, gap_threshold_s)) {
      Recording rec;
      rec.user = user;
      rec.device = device;
      rec.label = label;
      rec.acc = slice_stream(acc, acc.t[lo], acc.t[hi - 1]);
      rec.gyro = slice_stream(gyro, acc.t[lo], acc.t[hi - 1]);
      if (rec.acc.size() >= 2 && rec.gyro.size() >= 2) out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<Recording> load_usc_had(const std::string& dir, LoadReport* report) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  if (!fs::is_directory(dir)) throw DataError("load_usc_had: not a directory: " + dir);

  std::vector<fs::path> files;
  for (const auto& subject : fs::directory_iterator(dir)) {
    if (!subject.is_directory()) continue;
    const std::string name = subject.path().filename().string();
    if (name.rfind("Subject", 0) != 0) continue;
    for (const auto& entry : fs::directory_iterator(subject.path())) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  const double rate = 100.0;  // native MotionNode rate
  std::vector<Recording> out;
  for (const fs::path& file : files) {
    const std::string stem = file.stem().string();
    int activity = -1, trial = -1;
    if (std::sscanf(stem.c_str(), "a%dt%d", &activity, &trial) != 2) continue;
    const int label = usc_label_id(activity);
    if (label < 0) continue;

    std::ifstream in(file);
    if (!in) throw DataError("load_usc_had: unreadable trial file " + file.string());
    Recording rec;
    rec.user = file.parent_path().filename().string();
    rec.device = "MotionNode";
    rec.label = label;
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      for (char& c : line) {
        if (c == ',' || c == ';' || c == '\t') c = ' ';
      }
      std::istringstream ls(line);
      double v[6];
      bool ok = true;
      for (double& x : v) {
        if (!(ls >> x)) {
          ok = false;
          break;
        }
      }
      if (!ok) {
        throw DataError("load_usc_had: unreadable row " + std::to_string(row) + " in " + file.string());
      }
      const double t = (double)row / rate;
      rec.acc.t.push_back(t);
      rec.acc.x.push_back(v[0]);
      rec.acc.y.push_back(v[1]);
      rec.acc.z.push_back(v[2]);
      rec.gyro.t.push_back(t);
      rec.gyro.x.push_back(v[3]);
      rec.gyro.y.push_back(v[4]);
      rec.gyro.z.push_back(v[5]);
      ++row;
      rep.rows_parsed++;
    }
    if (rec.acc.size() >= 2) out.push_back(std::move(rec));
  }
  return out;
}

std::vector<Recording> downsample(const Recording& rec, double target_rate, double gap_threshold_s) {
  if (target_rate <= 0.0) throw ConfigError("downsample: target rate must be positive");
  if (rec.acc.size() < 2 || rec.gyro.size() < 2) return {};

  // Usable span: both sensors present, anchored at the later stream start.
  const double t0 = std::max(rec.acc.t.front(), rec.gyro.t.front());
  const double t1 = std::min(rec.acc.t.back(), rec.gyro.t.back());
  if (t1 <= t0) return {};

  // Cut points where either stream has a gap.
  std::vector<std::pair<double, double>> spans{{t0, t1}};
  for (const SensorStream* s : {&rec.acc, &rec.gyro}) {
    std::vector<std::pair<double, double>> next;
    for (auto [lo, hi] : spans) {
      double cur = lo;
      for (size_t i = 1; i < s->size(); ++i) {
        if (s->t[i] - s->t[i - 1] <= gap_threshold_s) continue;
        const double gap_lo = s->t[i - 1], gap_hi = s->t[i];
        if (gap_hi <= cur || gap_lo >= hi) continue;  // outside the remaining span
        if (gap_lo > cur) next.emplace_back(cur, gap_lo);
        cur = std::min(gap_hi, hi);
      }
      if (hi > cur) next.emplace_back(cur, hi);
    }
    spans = std::move(next);
  }

  std::vector<Recording> out;
  const double dt = 1.0 / target_rate;
  for (auto [lo, hi] : spans) {
    const size_t count = (size_t)std::floor((hi - lo) / dt) + 1;
    if (count < 2) continue;
    Recording r;
    r.user = rec.user;
    r.device = rec.device;
    r.label = rec.label;
    size_t ha_x = 0, ha_y = 0, ha_z = 0, hg_x = 0, hg_y = 0, hg_z = 0;
    for (size_t i = 0; i < count; ++i) {
      const double t = lo + (double)i * dt;
      r.acc.t.push_back(t);
      r.acc.x.push_back(interp(rec.acc.t, rec.acc.x, t, ha_x));
      r.acc.y.push_back(interp(rec.acc.t, rec.acc.y, t, ha_y));
      r.acc.z.push_back(interp(rec.acc.t, rec.acc.z, t, ha_z));
      r.gyro.t.push_back(t);
      r.gyro.x.push_back(interp(rec.gyro.t, rec.gyro.x, t, hg_x));
      r.gyro.y.push_back(interp(rec.gyro.t, rec.gyro.y, t, hg_y));
      r.gyro.z.push_back(interp(rec.gyro.t, rec.gyro.z, t, hg_z));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawSample> segment(const Recording& rec, double duration_s, double rate) {
  const int w = (int)std::llround(duration_s * rate);
  if (w < 1) throw ConfigError("segment: window of zero readings");
  const size_t n = std::min(rec.acc.size(), rec.gyro.size());
  std::vector<RawSample> out;
  for (size_t start = 0; start + (size_t)w <= n; start += (size_t)w) {
    RawSample s;
    s.n = w;
    s.label = rec.label;
    s.user = rec.user;
    s.device = rec.device;
    for (int si = 0; si < 2; ++si) {
      const SensorStream& stream = si == 0 ? rec.acc : rec.gyro;
      Tensor series = Tensor::zeros({3, w});
      for (int i = 0; i < w; ++i) {
        series[i] = stream.x[start + (size_t)i];
        series[w + i] = stream.y[start + (size_t)i];
        series[2 * w + i] = stream.z[start + (size_t)i];
      }
      s.sensors[(size_t)si] = std::move(series);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<SampleSet, SampleSet> split(const SampleSet& set, const SplitSpec& spec) {
  SampleSet train, test;
  train.prov = set.prov;
  test.prov = set.prov;
  train.num_classes = set.num_classes;
  test.num_classes = set.num_classes;

  const size_t n = set.samples.size();
  auto push = [&](SampleSet& dst, size_t i) {
    dst.samples.push_back(set.samples[i]);
    if (!set.true_labels.empty()) dst.true_labels.push_back(set.true_labels[i]);
  };

  if (spec.mode == SplitMode::Fraction) {
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
      throw ConfigError("split: train fraction must lie in (0,1)");
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(spec.seed).child("split");
    rng.shuffle(order);
    const size_t n_train = (size_t)std::llround(spec.train_fraction * (double)n);
    for (size_t i = 0; i < n; ++i) push(i < n_train ? train : test, order[i]);
  } else {
    bool found = false;
    for (size_t i = 0; i < n; ++i) {
      if (set.samples[i].user == spec.holdout_user) {
        push(test, i);
        found = true;
      } else {
        push(train, i);
      }
    }
    if (!found) throw DataError("split: unknown user '" + spec.holdout_user + "'");
  }
  return {std::move(train), std::move(test)};
}

SampleSet inject_label_noise(const SampleSet& set, double rate, uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw ConfigError("inject_label_noise: rate outside [0,1]");
  const int c = set.num_classes;
  if (c < 2) throw DataError("inject_label_noise: need at least two classes");

  SampleSet out = set;
  out.true_labels = set.labels();
  const size_t n = out.samples.size();
  const size_t flips = (size_t)std::llround(rate * (double)n);

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).child("label-noise");
  rng.shuffle(order);
  for (size_t i = 0; i < flips; ++i) {
    RawSample& s = out.samples[order[i]];
    int replacement = (int)rng.integer((uint64_t)(c - 1));
    if (replacement >= s.label) ++replacement;
    s.label = replacement;
  }
  return out;
}

SampleSet augment_gaussian(const SampleSet& set, int copies, double noise_std_fraction, uint64_t seed) {
  if (copies < 1) throw ConfigError("augment_gaussian: copies must be >= 1");

  // Empirical per-(sensor, axis) std over the whole set.
  double mean[2][3] = {}, sq[2][3] = {};
  size_t count = 0;
  for (const RawSample& s : set.samples) {
    const int n = s.n;
    for (int si = 0; si < 2; ++si) {
      for (int a = 0; a < 3; ++a) {
        for (int t = 0; t < n; ++t) {
          const double v = s.sensors[(size_t)si][a * n + t];
          mean[si][a] += v;
          sq[si][a] += v * v;
        }
      }
    }
    count += (size_t)s.n;
  }
  double stds[2][3];
  for (int si = 0; si < 2; ++si) {
    for (int a = 0; a < 3; ++a) {
      const double m = count > 0 ? mean[si][a] / (double)count : 0.0;
      const double var = count > 0 ? std::max(0.0, sq[si][a] / (double)count - m * m) : 0.0;
      stds[si][a] = std::sqrt(var) * noise_std_fraction;
    }
  }

  SampleSet out = set;
  Rng rng = Rng(seed).child("augment");
  for (int copy = 0; copy < copies; ++copy) {
    for (size_t i = 0; i < set.samples.size(); ++i) {
      RawSample dup = set.samples[i];
      for (int si = 0; si < 2; ++si) {
        const int n = dup.n;
        for (int a = 0; a < 3; ++a) {
          if (stds[si][a] == 0.0) continue;
          for (int t = 0; t < n; ++t) dup.sensors[(size_t)si][a * n + t] += stds[si][a] * rng.normal();
        }
      }
      out.samples.push_back(std::move(dup));
      if (!set.true_labels.empty()) out.true_labels.push_back(set.true_labels[i]);
    }
  }
  return out;
}

SampleSet synth_dataset(int num_classes, int per_class, uint64_t seed) {
  if (num_classes < 1 || num_classes > 12) {
    throw ConfigError("synth_dataset: class count must lie in [1, 12]");
  }
  if (per_class < 1) throw ConfigError("synth_dataset: per_class must be >= 1");

  const double rate = 25.0;
  const int n = 150;  // 6 seconds
  SampleSet set;
  set.num_classes = num_classes;
  set.prov = {"synth", rate, 6.0, seed,
              "c=" + std::to_string(num_classes) + ",per_class=" + std::to_string(per_class)};

  Rng rng = Rng(seed).child("synth");
  for (int cls = 0; cls < num_classes; ++cls) {
    for (int rep = 0; rep < per_class; ++rep) {
      RawSample s;
      s.n = n;
      s.label = cls;
      s.user = "u" + std::to_string(rep % 5);
      s.device = "synth";
      for (int si = 0; si < 2; ++si) {
        Tensor series = Tensor::zeros({3, n});
        for (int a = 0; a < 3; ++a) {
          // Distinct integer-Hz tone pair per (class, sensor, axis);
          // 5 is coprime with 12 so classes never share a tone on an axis.
          const double f1 = 1.0 + (double)((5 * cls + 3 * a + 7 * si) % 12);
          const double f2 = 1.0 + (double)((5 * cls + 3 * a + 7 * si + 4) % 12);
          const double a1 = 2.0, a2 = 1.0 + 0.1 * (double)a;
          const double p1 = rng.uniform(0.0, 2.0 * M_PI);
          const double p2 = rng.uniform(0.0, 2.0 * M_PI);
          for (int t = 0; t < n; ++t) {
            const double tau = (double)t / rate;
            series[a * n + t] = a1 * std::sin(2.0 * M_PI * f1 * tau + p1) +
                                a2 * std::sin(2.0 * M_PI * f2 * tau + p2) + 0.3 * rng.normal();
          }
        }
        s.sensors[(size_t)si] = std::move(series);
      }
      set.samples.push_back(std::move(s));
    }
  }
  return set;
}

std::vector<InputTensor> tensorize_all(const SampleSet& set, const SignalConfig& cfg) {
  std::vector<InputTensor> out;
  out.reserve(set.samples.size());
  for (const RawSample& s : set.samples) out.push_back(tensorize(s, cfg));
  return out;
}

void save_sample_set(const SampleSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write sample set to " + path);
  out.write("SENS", 4);
  binio::put_u32(out, 1);
  binio::put_str(out, set.prov.dataset);
  binio::put_f64(out, set.prov.sample_rate);
  binio::put_f64(out, set.prov.window_seconds);
  binio::put_u64(out, set.prov.seed);
  binio::put_str(out, set.prov.params);
  binio::put_i32(out, set.num_classes);
  binio::put_u64(out, set.true_labels.size());
  for (int v : set.true_labels) binio::put_i32(out, v);
  binio::put_u64(out, set.samples.size());
  for (const RawSample& s : set.samples) {
    binio::put_i32(out, s.label);
    binio::put_str(out, s.user);
    binio::put_str(out, s.device);
    binio::put_i32(out, s.n);
    for (const Tensor& sensor : s.sensors) binio::put_f64s(out, sensor.values);
  }
  if (!out) throw DataError("write failure on " + path);
}

SampleSet load_sample_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open sample set " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "SENS") {
    throw DataError("not a sample-set file (bad magic): " + path);
  }
  const uint32_t version = binio::get_u32(in, "version");
  if (version != 1) throw DataError("unsupported sample-set version " + std::to_string(version));

  SampleSet set;
  set.prov.dataset = binio::get_str(in, "dataset");
  set.prov.sample_rate = binio::get_f64(in, "sample_rate");
  set.prov.window_seconds = binio::get_f64(in, "window_seconds");
  set.prov.seed = binio::get_u64(in, "seed");
  set.prov.params = binio::get_str(in, "params");
  set.num_classes = binio::get_i32(in, "num_classes");
  const uint64_t n_truth = binio::get_u64(in, "true_labels");
  set.true_labels.reserve((size_t)n_truth);
  for (uint64_t i = 0; i < n_truth; ++i) set.true_labels.push_back(binio::get_i32(in, "true_labels"));
  const uint64_t n = binio::get_u64(in, "sample count");
  set.samples.reserve((size_t)n);
  for (uint64_t i = 0; i < n; ++i) {
    RawSample s;
    s.label = binio::get_i32(in, "label");
    s.user = binio::get_str(in, "user");
    s.device = binio::get_str(in, "device");
    s.n = binio::get_i32(in, "n");
    for (Tensor& sensor : s.sensors) {
      std::vector<double> values = binio::get_f64s(in, "sensor values");
      if ((int)values.size() != 3 * s.n) {
        throw DataError("sample " + std::to_string(i) + " has " + std::to_string(values.size()) +
                        " readings, expected " + std::to_string(3 * s.n));
      }
      sensor = Tensor({3, s.n}, std::move(values));
    }
    set.samples.push_back(std::move(s));
  }
  return set;
}

}  // namespace sen
