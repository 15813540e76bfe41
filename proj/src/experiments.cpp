#include "sen/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sen/errors.hpp"

namespace fs = std::filesystem;

namespace sen {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return (int)d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

}  // namespace

SENConfig ExperimentConfig::net_config() const {
  SENConfig c;
  c.conv1 = conv1;
  c.conv2 = conv2;
  c.conv3 = conv3;
  c.conv4 = conv4;
  c.channels = channels;
  c.lstm_hidden = lstm_hidden;
  c.k = intervals;
  const int w = (int)std::llround(rate * window_s) / intervals;
  c.f = w / 2 + 1;
  c.seed = Rng(seed).child("net-init").bits();
  return c;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.sigmoid_k = sigmoid_k;
  t.batch_pairs = batch_pairs;
  t.positive_fraction = positive_fraction;
  t.epochs = sen_epochs;
  t.learning_rate = learning_rate;
  t.optimizer = opt_kind_from_string(optimizer);
  t.seed = Rng(seed).child("sen-train").bits();
  return t;
}

MLPConfig ExperimentConfig::mlp_config(int epochs) const {
  MLPConfig m;
  m.hidden = head_hidden;
  m.epochs = epochs;
  m.batch = batch_samples;
  m.learning_rate = learning_rate;
  m.optimizer = opt_kind_from_string(optimizer);
  m.seed = Rng(seed).child("head-train").bits();
  return m;
}

SignalConfig ExperimentConfig::signal_config() const {
  SignalConfig s;
  s.intervals = intervals;
  s.sample_rate = rate;
  s.sort_by_magnitude = sort_freq_by_magnitude;
  return s;
}

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
  if (key == "dataset") dataset = value;
  else if (key == "data_path") data_path = value;
  else if (key == "cache_path") cache_path = value;
  else if (key == "checkpoint_path") checkpoint_path = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "seed") { seed = (uint64_t)std::stoull(value); seed_set = true; }
  else if (key == "rate") rate = to_double(key, value);
  else if (key == "window_s") window_s = to_double(key, value);
  else if (key == "intervals") intervals = to_int(key, value);
  else if (key == "sort_freq_by_magnitude") sort_freq_by_magnitude = to_bool(key, value);
  else if (key == "gap_threshold_s") gap_threshold_s = to_double(key, value);
  else if (key == "synth_classes") synth_classes = to_int(key, value);
  else if (key == "synth_per_class") synth_per_class = to_int(key, value);
  else if (key == "augment_copies") augment_copies = to_int(key, value);
  else if (key == "augment_std_fraction") augment_std_fraction = to_double(key, value);
  else if (key == "conv1") conv1 = to_int(key, value);
  else if (key == "conv2") conv2 = to_int(key, value);
  else if (key == "conv3") conv3 = to_int(key, value);
  else if (key == "conv4") conv4 = to_int(key, value);
  else if (key == "channels") channels = to_int(key, value);
  else if (key == "lstm_hidden") lstm_hidden = to_int(key, value);
  else if (key == "sigmoid_k") sigmoid_k = to_double(key, value);
  else if (key == "batch_pairs") batch_pairs = to_int(key, value);
  else if (key == "positive_fraction") positive_fraction = to_double(key, value);
  else if (key == "sen_epochs") sen_epochs = to_int(key, value);
  else if (key == "head_epochs") head_epochs = to_int(key, value);
  else if (key == "head_hidden") head_hidden = to_int(key, value);
  else if (key == "batch_samples") batch_samples = to_int(key, value);
  else if (key == "learning_rate") learning_rate = to_double(key, value);
  else if (key == "optimizer") optimizer = value;
  else if (key == "classifiers") classifiers = split_list(value);
  else if (key == "knn_k") knn_k = to_int(key, value);
  else if (key == "split_mode") split_mode = value;
  else if (key == "train_frac") train_frac = to_double(key, value);
  else if (key == "louo_user") louo_user = value;
  else if (key == "noise_rates") {
    noise_rates.clear();
    for (const std::string& item : split_list(value)) noise_rates.push_back(to_double(key, item));
  } else if (key == "stress_sizes") {
    stress_sizes.clear();
    for (const std::string& item : split_list(value)) stress_sizes.push_back(to_int(key, item));
  } else if (key == "clean_per_class") clean_per_class = to_int(key, value);
  else if (key == "contamination") contamination = to_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string ExperimentConfig::to_key_values() const {
  std::ostringstream os;
  os.precision(17);
  os << "dataset=" << dataset << "\n";
  if (!data_path.empty()) os << "data_path=" << data_path << "\n";
  if (!cache_path.empty()) os << "cache_path=" << cache_path << "\n";
  if (!checkpoint_path.empty()) os << "checkpoint_path=" << checkpoint_path << "\n";
  os << "out_dir=" << out_dir << "\n";
  os << "seed=" << seed << "\n";
  os << "rate=" << rate << "\n";
  os << "window_s=" << window_s << "\n";
  os << "intervals=" << intervals << "\n";
  os << "sort_freq_by_magnitude=" << (sort_freq_by_magnitude ? 1 : 0) << "\n";
  os << "gap_threshold_s=" << gap_threshold_s << "\n";
  os << "synth_classes=" << synth_classes << "\n";
  os << "synth_per_class=" << synth_per_class << "\n";
  os << "augment_copies=" << augment_copies << "\n";
  os << "augment_std_fraction=" << augment_std_fraction << "\n";
  os << "conv1=" << conv1 << "\nconv2=" << conv2 << "\nconv3=" << conv3 << "\nconv4=" << conv4 << "\n";
  os << "channels=" << channels << "\n";
  os << "lstm_hidden=" << lstm_hidden << "\n";
  os << "sigmoid_k=" << sigmoid_k << "\n";
  os << "batch_pairs=" << batch_pairs << "\n";
  os << "positive_fraction=" << positive_fraction << "\n";
  os << "sen_epochs=" << sen_epochs << "\n";
  os << "head_epochs=" << head_epochs << "\n";
  os << "head_hidden=" << head_hidden << "\n";
  os << "batch_samples=" << batch_samples << "\n";
  os << "learning_rate=" << learning_rate << "\n";
  os << "optimizer=" << optimizer << "\n";
  std::string clfs;
  for (const std::string& c : classifiers) clfs += (clfs.empty() ? "" : ",") + c;
  os << "classifiers=" << clfs << "\n";
  os << "knn_k=" << knn_k << "\n";
  os << "split_mode=" << split_mode << "\n";
  os << "train_frac=" << train_frac << "\n";
  if (!louo_user.empty()) os << "louo_user=" << louo_user << "\n";
  std::string rates;
  for (double r : noise_rates) {
    std::ostringstream one;
    one.precision(17);
    one << r;
    rates += (rates.empty() ? "" : ",") + one.str();
  }
  os << "noise_rates=" << rates << "\n";
  std::string sizes;
  for (int s : stress_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
  os << "stress_sizes=" << sizes << "\n";
  os << "clean_per_class=" << clean_per_class << "\n";
  os << "contamination=" << contamination << "\n";
  return os.str();
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  ExperimentConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // Trim.
    const size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const size_t last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    cfg.apply(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& arg : overrides) {
    if (arg.rfind("--", 0) != 0) throw ConfigError("expected --key=value, got '" + arg + "'");
    const size_t eq = arg.find('=');
    if (eq == std::string::npos) throw ConfigError("expected --key=value, got '" + arg + "'");
    cfg.apply(arg.substr(2, eq - 2), arg.substr(eq + 1));
  }
}

void validate_config(const ExperimentConfig& cfg) {
  if (!cfg.seed_set) throw ConfigError("seed is mandatory (set seed=<n>)");
  if (cfg.dataset != "synth" && cfg.dataset != "hhar" && cfg.dataset != "usc_had") {
    throw ConfigError("dataset must be synth, hhar or usc_had");
  }
  if (cfg.dataset != "synth" && cfg.cache_path.empty() && !fs::exists(cfg.data_path)) {
    throw ConfigError("data_path does not exist: " + cfg.data_path);
  }
  if (!cfg.cache_path.empty() && cfg.dataset != "synth" && !fs::exists(cfg.cache_path) &&
      !fs::exists(cfg.data_path)) {
    throw ConfigError("neither cache_path nor data_path exists");
  }
  const int n = (int)std::llround(cfg.rate * cfg.window_s);
  if (cfg.intervals < 1 || n % cfg.intervals != 0) {
    throw ConfigError("intervals must divide the per-window reading count " + std::to_string(n));
  }
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  SampleSet all;
  if (!cfg.cache_path.empty() && fs::exists(cfg.cache_path)) {
    all = load_sample_set(cfg.cache_path);
  } else if (cfg.dataset == "synth") {
    all = synth_dataset(cfg.synth_classes, cfg.synth_per_class, Rng(cfg.seed).child("synth-data").bits());
  } else {
    std::vector<Recording> recs = cfg.dataset == "hhar"
                                      ? load_hhar(cfg.data_path, nullptr, cfg.gap_threshold_s)
                                      : load_usc_had(cfg.data_path);
    all.prov = {cfg.dataset, cfg.rate, cfg.window_s, cfg.seed, "preprocessed"};
    all.num_classes = 6;
    for (const Recording& rec : recs) {
      for (const Recording& piece : downsample(rec, cfg.rate, cfg.gap_threshold_s)) {
        for (RawSample& s : segment(piece, cfg.window_s, cfg.rate)) {
          all.samples.push_back(std::move(s));
        }
      }
    }
    if (!cfg.cache_path.empty()) save_sample_set(all, cfg.cache_path);
  }

  SplitSpec spec;
  if (cfg.split_mode == "fraction") {
    spec.mode = SplitMode::Fraction;
    spec.train_fraction = cfg.train_frac;
    spec.seed = Rng(cfg.seed).child("split").bits();
  } else if (cfg.split_mode == "louo") {
    spec.mode = SplitMode::LeaveOneUserOut;
    spec.holdout_user = cfg.louo_user;
  } else {
    throw ConfigError("split_mode must be fraction or louo");
  }

  PreparedData data;
  data.num_classes = all.num_classes;
  std::tie(data.train, data.test) = split(all, spec);
  if (cfg.augment_copies > 0) {
    // Train side only, to keep the test set untouched by synthetic noise.
    data.train = augment_gaussian(data.train, cfg.augment_copies, cfg.augment_std_fraction,
                                  Rng(cfg.seed).child("augment").bits());
  }
  const SignalConfig sig = cfg.signal_config();
  data.train_x = tensorize_all(data.train, sig);
  data.test_x = tensorize_all(data.test, sig);
  return data;
}

namespace {

// Mean in-class and between-class cosine similarity of embeddings against
// class centers.
std::pair<double, double> center_similarity_summary(const std::vector<std::vector<double>>& embeddings,
                                                    const std::vector<int>& labels,
                                                    const ClassCenters& centers) {
  double in_sum = 0.0, between_sum = 0.0;
  long long in_n = 0, between_n = 0;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    for (size_t c = 0; c < centers.centers.size(); ++c) {
      const double sim = cosine_similarity(embeddings[i], centers.centers[c]);
      if ((int)c == labels[i]) {
        in_sum += sim;
        in_n++;
      } else {
        between_sum += sim;
        between_n++;
      }
    }
  }
  return {in_n ? in_sum / (double)in_n : 0.0, between_n ? between_sum / (double)between_n : 0.0};
}

}  // namespace

ClassificationResult run_classification(const ExperimentConfig& cfg, const PreparedData& data) {
  ClassificationResult result;
  result.test_truth = data.test.labels();
  const std::vector<int> train_labels = data.train.labels();

  TrainResult trained = train_sen(data.train_x, train_labels, cfg.net_config(), cfg.train_config());
  result.weights = std::move(trained.weights);
  result.sen_loss_history = std::move(trained.loss_history);

  const std::vector<std::vector<double>> train_e = embed_batch(data.train_x, result.weights);
  const std::vector<std::vector<double>> test_e = embed_batch(data.test_x, result.weights);
  const ClassCenters centers = compute_class_centers(train_e, train_labels, data.num_classes);
  std::tie(result.mean_in_class_sim, result.mean_between_class_sim) =
      center_similarity_summary(test_e, result.test_truth, centers);

  for (const std::string& clf : cfg.classifiers) {
    std::vector<int> preds;
    preds.reserve(test_e.size());
    if (clf == "sm") {
      for (const auto& e : test_e) preds.push_back(predict_sm(e, centers));
    } else if (clf == "knn") {
      for (const auto& e : test_e) preds.push_back(predict_knn(e, train_e, train_labels, cfg.knn_k));
    } else if (clf == "mlp") {
      HeadTrainResult head = train_mlp_head(train_e, train_labels, data.num_classes,
                                            cfg.mlp_config(cfg.head_epochs));
      for (const auto& e : test_e) preds.push_back(predict_mlp(e, head.head));
    } else if (clf == "baseline") {
      BaselineTrainResult base = train_baseline(data.train_x, train_labels, data.num_classes,
                                                cfg.net_config(), cfg.mlp_config(cfg.head_epochs));
      for (const auto& x : data.test_x) preds.push_back(predict_baseline(x, base.model));
    } else {
      throw ConfigError("unknown classifier '" + clf + "'");
    }
    result.reports.emplace(clf, metrics(preds, result.test_truth, data.num_classes));
    result.predictions.emplace(clf, std::move(preds));
  }
  return result;
}

std::vector<StressRow> run_stress(const ExperimentConfig& cfg, const PreparedData& data) {
  const std::vector<int> train_labels = data.train.labels();
  const std::vector<int> test_labels = data.test.labels();

  std::vector<std::vector<int>> by_class((size_t)data.num_classes);
  for (size_t i = 0; i < train_labels.size(); ++i) {
    by_class[(size_t)train_labels[i]].push_back((int)i);
  }

  std::vector<StressRow> rows;
  for (size_t si = 0; si < cfg.stress_sizes.size(); ++si) {
    const int m = cfg.stress_sizes[si];
    // Stratified subsample of m per class, one fixed test split throughout.
    Rng rng = Rng(cfg.seed).child("stress", si);
    std::vector<int> chosen;
    for (int c = 0; c < data.num_classes; ++c) {
      std::vector<int> pool = by_class[(size_t)c];
      if ((int)pool.size() < m) {
        throw DataError("stress size " + std::to_string(m) + " exceeds class " + std::to_string(c) +
                        " count " + std::to_string(pool.size()));
      }
      rng.shuffle(pool);
      chosen.insert(chosen.end(), pool.begin(), pool.begin() + m);
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<InputTensor> sub_x;
    std::vector<int> sub_labels;
    sub_x.reserve(chosen.size());
    for (int idx : chosen) {
      sub_x.push_back(data.train_x[(size_t)idx]);
      sub_labels.push_back(train_labels[(size_t)idx]);
    }

    TrainResult trained = train_sen(sub_x, sub_labels, cfg.net_config(), cfg.train_config());
    const auto sub_e = embed_batch(sub_x, trained.weights);
    const auto test_e = embed_batch(data.test_x, trained.weights);
    const ClassCenters centers = compute_class_centers(sub_e, sub_labels, data.num_classes);
    std::vector<int> preds;
    preds.reserve(test_e.size());
    for (const auto& e : test_e) preds.push_back(predict_sm(e, centers));
    const MetricsReport rep = metrics(preds, test_labels, data.num_classes);

    double macro_precision = 0.0;
    for (double p : rep.precision) macro_precision += p;
    macro_precision /= (double)rep.precision.size();
    rows.push_back({m, rep.avg_f1, rep.accuracy, macro_precision});
  }
  return rows;
}

std::vector<NoiseRow> run_noise_robustness(const ExperimentConfig& cfg, const PreparedData& data) {
  const std::vector<int> test_labels = data.test.labels();
  std::vector<NoiseRow> rows;
  for (size_t ri = 0; ri < cfg.noise_rates.size(); ++ri) {
    const double rate = cfg.noise_rates[ri];
    // Noise goes into the training split only; the test split stays clean.
    SampleSet noisy = inject_label_noise(data.train, rate, Rng(cfg.seed).child("noise", ri).bits());
    const std::vector<int> noisy_labels = noisy.labels();

    NoiseRow row;
    row.rate = rate;

    TrainResult trained = train_sen(data.train_x, noisy_labels, cfg.net_config(), cfg.train_config());
    const auto train_e = embed_batch(data.train_x, trained.weights);
    const auto test_e = embed_batch(data.test_x, trained.weights);
    const ClassCenters centers = compute_class_centers(train_e, noisy_labels, data.num_classes);
    std::vector<int> sm_preds;
    sm_preds.reserve(test_e.size());
    for (const auto& e : test_e) sm_preds.push_back(predict_sm(e, centers));
    row.sen_sm = metrics(sm_preds, test_labels, data.num_classes);

    BaselineTrainResult base = train_baseline(data.train_x, noisy_labels, data.num_classes,
                                              cfg.net_config(), cfg.mlp_config(cfg.head_epochs));
    std::vector<int> base_preds;
    base_preds.reserve(data.test_x.size());
    for (const auto& x : data.test_x) base_preds.push_back(predict_baseline(x, base.model));
    row.baseline = metrics(base_preds, test_labels, data.num_classes);

    rows.push_back(std::move(row));
  }
  return rows;
}

DenoiseRunResult run_denoise(const ExperimentConfig& cfg) {
  // The clean subset (clean_per_class per class) trains the encoder and
  // fits the statistics; the contaminated remainder is denoised.
  SampleSet all;
  if (!cfg.cache_path.empty() && fs::exists(cfg.cache_path)) {
    all = load_sample_set(cfg.cache_path);
  } else if (cfg.dataset == "synth") {
    all = synth_dataset(cfg.synth_classes, cfg.synth_per_class, Rng(cfg.seed).child("synth-data").bits());
  } else {
    ExperimentConfig copy = cfg;
    copy.split_mode = "fraction";
    throw ConfigError("run_denoise on raw recordings requires a prepared cache (run prep first)");
  }

  const std::vector<int> labels = all.labels();
  std::vector<std::vector<int>> by_class((size_t)all.num_classes);
  for (size_t i = 0; i < labels.size(); ++i) by_class[(size_t)labels[i]].push_back((int)i);

  Rng rng = Rng(cfg.seed).child("denoise-clean");
  std::vector<char> is_clean_subset(labels.size(), 0);
  for (int c = 0; c < all.num_classes; ++c) {
    std::vector<int>& pool = by_class[(size_t)c];
    if ((int)pool.size() < cfg.clean_per_class + 2) {
      throw DataError("class " + std::to_string(c) + " too small for clean_per_class=" +
                      std::to_string(cfg.clean_per_class));
    }
    rng.shuffle(pool);
    for (int i = 0; i < cfg.clean_per_class; ++i) is_clean_subset[(size_t)pool[(size_t)i]] = 1;
  }

  SampleSet clean, rest;
  clean.prov = rest.prov = all.prov;
  clean.num_classes = rest.num_classes = all.num_classes;
  for (size_t i = 0; i < all.samples.size(); ++i) {
    (is_clean_subset[i] ? clean : rest).samples.push_back(all.samples[i]);
  }
  SampleSet contaminated =
      inject_label_noise(rest, cfg.contamination, Rng(cfg.seed).child("denoise-noise").bits());

  const SignalConfig sig = cfg.signal_config();
  const std::vector<InputTensor> clean_x = tensorize_all(clean, sig);
  const std::vector<InputTensor> noisy_x = tensorize_all(contaminated, sig);
  const std::vector<int> clean_labels = clean.labels();
  const std::vector<int> noisy_labels = contaminated.labels();

  TrainResult trained = train_sen(clean_x, clean_labels, cfg.net_config(), cfg.train_config());
  const auto clean_e = embed_batch(clean_x, trained.weights);

  DenoiseRunResult result;
  result.centers = compute_class_centers(clean_e, clean_labels, all.num_classes);
  result.stats = fit_distance_stats(clean_e, clean_labels, result.centers);
  for (size_t i = 0; i < clean_e.size(); ++i) {
    for (int c = 0; c < all.num_classes; ++c) {
      const double sim = cosine_similarity(clean_e[i], result.centers.centers[(size_t)c]);
      if (c == clean_labels[i]) {
        result.in_class_sims.push_back(sim);
      } else {
        result.between_class_sims.push_back(sim);
      }
    }
  }
  result.report = denoise_dataset(noisy_x, noisy_labels, trained.weights, result.centers, result.stats,
                                  &contaminated.true_labels);
  return result;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file " + path);
  uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h = (h ^ (uint64_t)(unsigned char)buf[i]) * 1099511628211ULL;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

void write_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& artifacts,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest to " + path);
  out << "# experiment manifest; reload with --config " << path << "\n";
  out << cfg.to_key_values();
  for (const std::string& artifact : artifacts) {
    out << "# artifact " << fs::path(artifact).filename().string() << " fnv1a=" << file_hash_hex(artifact)
        << "\n";
  }
}

}  // namespace sen
