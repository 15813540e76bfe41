#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "sen/checkpoint.hpp"
#include "sen/experiments.hpp"

using namespace sen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("sen_harness_" + tag + "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Small-but-real experiment setup: synthetic data, compact encoder.
ExperimentConfig compact_config(uint64_t seed) {
  ExperimentConfig cfg;
  cfg.dataset = "synth";
  cfg.seed = seed;
  cfg.seed_set = true;
  cfg.synth_classes = 4;
  cfg.synth_per_class = 16;
  cfg.channels = 5;
  cfg.lstm_hidden = 10;
  cfg.batch_pairs = 32;
  cfg.sen_epochs = 10;
  cfg.head_epochs = 30;
  cfg.batch_samples = 16;
  cfg.learning_rate = 3e-3;
  cfg.classifiers = {"sm", "knn", "mlp"};
  return cfg;
}

}  // namespace

TEST_CASE("checkpoint: bitwise round trip") {
  TempDir dir("ckpt");
  SENConfig cfg;
  cfg.channels = 5;
  cfg.lstm_hidden = 8;
  cfg.seed = 44;
  SENWeights w = init_network(cfg);
  const std::string path = (dir.path / "w.ckpt").string();
  checkpoint_save(w, path);
  SENWeights loaded = checkpoint_load(path);

  NamedParams a = w.named_params(), b = loaded.named_params();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].second->shape == b[i].second->shape);
    CHECK(a[i].second->values == b[i].second->values);
  }
  CHECK(loaded.config.channels == 5);
  CHECK(loaded.config.lstm_hidden == 8);
}

TEST_CASE("checkpoint: truncation and bad magic are load errors") {
  TempDir dir("ckpt_bad");
  SENConfig cfg;
  cfg.channels = 4;
  cfg.lstm_hidden = 8;
  SENWeights w = init_network(cfg);
  const std::string path = (dir.path / "w.ckpt").string();
  checkpoint_save(w, path);
  fs::resize_file(path, fs::file_size(path) / 3);
  CHECK_THROWS_AS(checkpoint_load(path), DataError);

  std::ofstream bad(dir.path / "junk.ckpt", std::ios::binary);
  bad << "JUNKJUNKJUNK";
  bad.close();
  CHECK_THROWS_AS(checkpoint_load((dir.path / "junk.ckpt").string()), DataError);
}

TEST_CASE("checkpoint: shape mismatch against the stored config names the tensor") {
  TempDir dir("ckpt_shape");
  SENConfig cfg;
  cfg.channels = 4;
  cfg.lstm_hidden = 8;
  SENWeights w = init_network(cfg);
  w.within_f = Tensor::zeros({4, 1, 2, 4});  // config says conv1=5
  const std::string path = (dir.path / "w.ckpt").string();
  checkpoint_save(w, path);
  CHECK_THROWS_WITH_AS(checkpoint_load(path), doctest::Contains("within.filters"), DataError);
}

TEST_CASE("config: file + override round trip and unknown keys") {
  TempDir dir("cfg");
  const std::string path = (dir.path / "exp.cfg").string();
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "dataset=synth\n";
    out << "seed=42\n";
    out << "channels=7\n";
    out << "noise_rates=0.1,0.3\n";
    out << "classifiers=sm,mlp\n";
  }
  ExperimentConfig cfg = load_config_file(path);
  CHECK(cfg.dataset == "synth");
  CHECK(cfg.seed == 42);
  CHECK(cfg.seed_set);
  CHECK(cfg.channels == 7);
  REQUIRE(cfg.noise_rates.size() == 2);
  CHECK(cfg.noise_rates[1] == doctest::Approx(0.3));
  REQUIRE(cfg.classifiers.size() == 2);
  CHECK(cfg.classifiers[1] == "mlp");

  apply_overrides(cfg, {"--channels=9", "--optimizer=sgd"});
  CHECK(cfg.channels == 9);
  CHECK(cfg.optimizer == "sgd");

  CHECK_THROWS_AS(apply_overrides(cfg, {"--nonsense=1"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(cfg, {"channels=9"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(cfg, {"--channels=abc"}), ConfigError);

  // The serialized form reloads to the same key=values.
  const std::string kv = cfg.to_key_values();
  const std::string path2 = (dir.path / "roundtrip.cfg").string();
  std::ofstream(path2) << kv;
  ExperimentConfig back = load_config_file(path2);
  CHECK(back.to_key_values() == kv);
}

TEST_CASE("config validation: seed is mandatory, paths must exist") {
  ExperimentConfig cfg;
  cfg.dataset = "synth";
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("seed"), ConfigError);
  cfg.seed = 1;
  cfg.seed_set = true;
  CHECK_NOTHROW(validate_config(cfg));

  cfg.dataset = "hhar";
  cfg.data_path = "/definitely/not/here";
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);

  cfg.dataset = "synth";
  cfg.intervals = 7;  // 150 readings not divisible by 7
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("run_classification: all classifiers fit easy synthetic data, deterministically") {
  ExperimentConfig cfg = compact_config(505);
  PreparedData data = prepare_data(cfg);
  CHECK(data.train.samples.size() + data.test.samples.size() == 64);

  ClassificationResult a = run_classification(cfg, data);
  for (const std::string& clf : cfg.classifiers) {
    INFO(clf);
    CHECK(a.reports.at(clf).accuracy > 0.9);
  }
  CHECK(a.mean_in_class_sim - a.mean_between_class_sim > 0.3);

  ClassificationResult b = run_classification(cfg, data);
  for (const std::string& clf : cfg.classifiers) {
    CHECK(a.reports.at(clf).to_json() == b.reports.at(clf).to_json());
    CHECK(a.predictions.at(clf) == b.predictions.at(clf));
  }
  CHECK(a.sen_loss_history == b.sen_loss_history);
}

TEST_CASE("run_stress: one row per size, larger training sets do not hurt") {
  ExperimentConfig cfg = compact_config(506);
  cfg.synth_per_class = 20;
  cfg.stress_sizes = {3, 12};
  cfg.sen_epochs = 8;
  PreparedData data = prepare_data(cfg);
  const std::vector<StressRow> rows = run_stress(cfg, data);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].per_class == 3);
  CHECK(rows[1].per_class == 12);
  CHECK(rows[1].accuracy >= rows[0].accuracy);
  for (const StressRow& r : rows) {
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(r.avg_f1 >= 0.0);
    CHECK(r.avg_f1 <= 1.0);
  }

  ExperimentConfig too_big = cfg;
  too_big.stress_sizes = {1000};
  CHECK_THROWS_AS(run_stress(too_big, data), DataError);
}

TEST_CASE("run_noise_robustness: rate 0 reproduces the plain classification run") {
  ExperimentConfig cfg = compact_config(507);
  cfg.classifiers = {"sm", "baseline"};
  cfg.noise_rates = {0.0};
  PreparedData data = prepare_data(cfg);

  const ClassificationResult plain = run_classification(cfg, data);
  const std::vector<NoiseRow> rows = run_noise_robustness(cfg, data);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].sen_sm.to_json() == plain.reports.at("sm").to_json());
  CHECK(rows[0].baseline.to_json() == plain.reports.at("baseline").to_json());
}

TEST_CASE("run_denoise: partition invariants and low-contamination behavior") {
  ExperimentConfig cfg = compact_config(508);
  cfg.synth_per_class = 24;
  cfg.clean_per_class = 12;
  cfg.contamination = 0.4;
  cfg.sen_epochs = 12;

  DenoiseRunResult r = run_denoise(cfg);
  const size_t total = r.report.kept_indices.size() + r.report.flagged_indices.size();
  CHECK(total == (size_t)(4 * 12));  // remainder of 24 per class after 12 clean
  CHECK(r.report.has_truth);
  REQUIRE(r.report.recall.has_value());
  CHECK(*r.report.recall >= 0.8);

  // Zero contamination: recall undefined, flagged stays near the 5% tail.
  ExperimentConfig zero = cfg;
  zero.contamination = 0.0;
  DenoiseRunResult rz = run_denoise(zero);
  CHECK(!rz.report.recall.has_value());
  CHECK(rz.report.to_json().find("n/a") != std::string::npos);
}

TEST_CASE("manifest: reloadable as a config and hashes reproduce bitwise") {
  TempDir dir("manifest");
  ExperimentConfig cfg = compact_config(509);
  cfg.out_dir = (dir.path / "run").string();
  fs::create_directories(cfg.out_dir);

  auto run_once = [&](const std::string& tag) {
    PreparedData data = prepare_data(cfg);
    ClassificationResult r = run_classification(cfg, data);
    const std::string mpath = (fs::path(cfg.out_dir) / ("metrics_" + tag + ".json")).string();
    std::ofstream(mpath) << r.reports.at("sm").to_json();
    return file_hash_hex(mpath);
  };
  const std::string h1 = run_once("a");
  const std::string h2 = run_once("b");
  CHECK(h1 == h2);

  const std::string manifest = (fs::path(cfg.out_dir) / "manifest.txt").string();
  write_manifest(cfg, {(fs::path(cfg.out_dir) / "metrics_a.json").string()}, manifest);
  ExperimentConfig reloaded = load_config_file(manifest);
  CHECK(reloaded.to_key_values() == cfg.to_key_values());
}

// Full default-scale run (64 channels, lstm 64, 100/200 epochs). Takes
// tens of minutes, so it only runs when SEN_RUN_SLOW is set.
TEST_CASE("run_classification: every classifier above 0.9 at default scale") {
  if (!std::getenv("SEN_RUN_SLOW")) {
    MESSAGE("set SEN_RUN_SLOW=1 to run the default-scale classification check");
    return;
  }
  ExperimentConfig cfg;
  cfg.dataset = "synth";
  cfg.seed = 909;
  cfg.seed_set = true;
  cfg.synth_classes = 6;
  cfg.synth_per_class = 40;
  cfg.classifiers = {"sm", "knn", "mlp", "baseline"};
  PreparedData data = prepare_data(cfg);
  ClassificationResult r = run_classification(cfg, data);
  for (const std::string& clf : cfg.classifiers) {
    INFO(clf);
    CHECK(r.reports.at(clf).accuracy > 0.9);
  }
}

TEST_CASE("cli: exit codes for usage, success and data errors") {
  if (!fs::exists("sen")) {
    MESSAGE("sen binary not found next to the test binary; skipping CLI smoke test");
    return;
  }
  TempDir dir("cli");
  const std::string out = (dir.path / "out").string();

  CHECK(std::system("./sen >/dev/null 2>&1") != 0);
  CHECK(std::system("./sen bogus-command >/dev/null 2>&1") != 0);

  const std::string synth =
      "./sen synth --seed=3 --synth_classes=3 --synth_per_class=4 --out_dir=" + out +
      " >/dev/null 2>&1";
  CHECK(std::system(synth.c_str()) == 0);
  CHECK(fs::exists(dir.path / "out" / "synth.sens"));
  CHECK(fs::exists(dir.path / "out" / "manifest.txt"));

  // Missing seed -> usage error (exit 1).
  const int no_seed = std::system(("./sen synth --out_dir=" + out + " >/dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(no_seed) == 1);

  // Unreadable dataset path -> usage/config error.
  const int bad_path = std::system(
      ("./sen prep --seed=1 --dataset=hhar --data_path=/nope --out_dir=" + out + " >/dev/null 2>&1")
          .c_str());
  CHECK(WEXITSTATUS(bad_path) != 0);
}
