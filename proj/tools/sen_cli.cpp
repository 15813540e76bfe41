// Command-line harness for the similarity-embedding HAR pipeline.
//
// Usage: sen <command> [--config FILE] [--key=value ...]
// Commands: prep synth train eval stress noise denoise gradcheck
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sen/checkpoint.hpp"
#include "sen/errors.hpp"
#include "sen/experiments.hpp"
#include "sen/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void usage(std::ostream& os) {
  os << "usage: sen <command> [--config FILE] [--key=value ...]\n"
     << "commands:\n"
     << "  synth     generate a synthetic sample set and cache it\n"
     << "  prep      load + preprocess a raw dataset into a cache\n"
     << "  train     train the embedding network (pairwise loss)\n"
     << "  eval      evaluate classifiers from a checkpoint\n"
     << "  stress    per-class training-size sweep (SEN-SM)\n"
     << "  noise     label-noise robustness sweep (SEN-SM vs baseline)\n"
     << "  denoise   fit statistics on a clean subset and filter noise\n"
     << "  gradcheck validate gradients against finite differences\n"
     << "config: line-oriented key=value file; every key can be overridden\n"
     << "with --key=value. seed is mandatory for experiment commands.\n";
}

sen::ExperimentConfig parse_config(const std::vector<std::string>& args) {
  sen::ExperimentConfig cfg;
  std::vector<std::string> overrides;
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) {
      cfg = sen::load_config_file(args[++i]);
    } else if (a.rfind("--config=", 0) == 0) {
      cfg = sen::load_config_file(a.substr(9));
    } else {
      overrides.push_back(a);
    }
  }
  sen::apply_overrides(cfg, overrides);
  return cfg;
}

std::string out_path(const sen::ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw sen::DataError("cannot write " + path);
  out << text;
}

void write_predictions(const std::string& path, const std::vector<int>& truth,
                       const std::vector<int>& preds) {
  std::ofstream out(path);
  if (!out) throw sen::DataError("cannot write " + path);
  out << "sample_id,true_label,predicted_label\n";
  for (size_t i = 0; i < truth.size(); ++i) {
    out << i << "," << truth[i] << "," << preds[i] << "\n";
  }
}

int cmd_synth(const sen::ExperimentConfig& cfg) {
  sen::SampleSet set = sen::synth_dataset(cfg.synth_classes, cfg.synth_per_class,
                                          sen::Rng(cfg.seed).child("synth-data").bits());
  const std::string cache =
      cfg.cache_path.empty() ? out_path(cfg, "synth.sens") : cfg.cache_path;
  sen::save_sample_set(set, cache);
  std::cout << "wrote " << set.samples.size() << " samples (" << set.num_classes << " classes) to "
            << cache << "\n";
  sen::write_manifest(cfg, {cache}, out_path(cfg, "manifest.txt"));
  return 0;
}

int cmd_prep(const sen::ExperimentConfig& cfg) {
  sen::LoadReport report;
  std::vector<sen::Recording> recs;
  if (cfg.dataset == "hhar") {
    recs = sen::load_hhar(cfg.data_path, &report, cfg.gap_threshold_s);
  } else if (cfg.dataset == "usc_had") {
    recs = sen::load_usc_had(cfg.data_path, &report);
  } else {
    throw sen::ConfigError("prep expects dataset=hhar or dataset=usc_had");
  }
  sen::SampleSet set;
  set.prov = {cfg.dataset, cfg.rate, cfg.window_s, cfg.seed, "prep"};
  set.num_classes = 6;
  for (const sen::Recording& rec : recs) {
    for (const sen::Recording& piece : sen::downsample(rec, cfg.rate, cfg.gap_threshold_s)) {
      for (sen::RawSample& s : sen::segment(piece, cfg.window_s, cfg.rate)) {
        set.samples.push_back(std::move(s));
      }
    }
  }
  const std::string cache =
      cfg.cache_path.empty() ? out_path(cfg, cfg.dataset + ".sens") : cfg.cache_path;
  sen::save_sample_set(set, cache);

  json j;
  j["recordings"] = recs.size();
  j["samples"] = set.samples.size();
  j["rows_parsed"] = report.rows_parsed;
  j["rows_rejected"] = report.rows_rejected;
  j["rejected_by_reason"] = report.rejected_by_reason;
  const std::string report_path = out_path(cfg, "parse_report.json");
  write_text(report_path, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  std::cout << "wrote " << set.samples.size() << " samples to " << cache << "\n";
  sen::write_manifest(cfg, {cache, report_path}, out_path(cfg, "manifest.txt"));
  return 0;
}

int cmd_train(const sen::ExperimentConfig& cfg) {
  sen::PreparedData data = sen::prepare_data(cfg);
  sen::TrainResult trained =
      sen::train_sen(data.train_x, data.train.labels(), cfg.net_config(), cfg.train_config());
  const std::string ckpt = out_path(cfg, "sen.ckpt");
  sen::checkpoint_save(trained.weights, ckpt);
  const std::string losses = out_path(cfg, "loss_history.csv");
  sen::save_loss_history(trained.loss_history, losses);
  std::cout << "trained on " << data.train_x.size() << " samples, " << trained.loss_history.size()
            << " steps; final J = "
            << (trained.loss_history.empty() ? 0.0 : trained.loss_history.back()) << "\n";
  std::cout << "checkpoint: " << ckpt << "\n";
  sen::write_manifest(cfg, {ckpt, losses}, out_path(cfg, "manifest.txt"));
  return 0;
}

int cmd_eval(const sen::ExperimentConfig& cfg) {
  const std::string ckpt = cfg.checkpoint_path.empty()
                               ? (fs::path(cfg.out_dir) / "sen.ckpt").string()
                               : cfg.checkpoint_path;
  sen::SENWeights weights = sen::checkpoint_load(ckpt);
  sen::PreparedData data = sen::prepare_data(cfg);

  const std::vector<int> train_labels = data.train.labels();
  const std::vector<int> test_labels = data.test.labels();
  const auto train_e = sen::embed_batch(data.train_x, weights);
  const auto test_e = sen::embed_batch(data.test_x, weights);
  const sen::ClassCenters centers =
      sen::compute_class_centers(train_e, train_labels, data.num_classes);

  std::vector<std::string> artifacts;
  for (const std::string& clf : cfg.classifiers) {
    std::vector<int> preds;
    preds.reserve(test_e.size());
    if (clf == "sm") {
      for (const auto& e : test_e) preds.push_back(sen::predict_sm(e, centers));
    } else if (clf == "knn") {
      for (const auto& e : test_e) {
        preds.push_back(sen::predict_knn(e, train_e, train_labels, cfg.knn_k));
      }
    } else if (clf == "mlp") {
      sen::HeadTrainResult head = sen::train_mlp_head(train_e, train_labels, data.num_classes,
                                                      cfg.mlp_config(cfg.head_epochs));
      for (const auto& e : test_e) preds.push_back(sen::predict_mlp(e, head.head));
    } else {
      throw sen::ConfigError("eval supports classifiers sm, knn, mlp; got '" + clf + "'");
    }
    const sen::MetricsReport rep = sen::metrics(preds, test_labels, data.num_classes);
    std::cout << clf << ": accuracy " << rep.accuracy << ", avg F1 " << rep.avg_f1 << "\n";
    const std::string mpath = out_path(cfg, "metrics_" + clf + ".json");
    write_text(mpath, rep.to_json() + "\n");
    const std::string ppath = out_path(cfg, "predictions_" + clf + ".csv");
    write_predictions(ppath, test_labels, preds);
    artifacts.push_back(mpath);
    artifacts.push_back(ppath);
  }
  sen::write_manifest(cfg, artifacts, out_path(cfg, "manifest.txt"));
  return 0;
}

int cmd_stress(const sen::ExperimentConfig& cfg) {
  sen::PreparedData data = sen::prepare_data(cfg);
  const std::vector<sen::StressRow> rows = sen::run_stress(cfg, data);
  std::string csv = "per_class,avg_f1,accuracy,precision\n";
  for (const sen::StressRow& r : rows) {
    csv += std::to_string(r.per_class) + "," + std::to_string(r.avg_f1) + "," +
           std::to_string(r.accuracy) + "," + std::to_string(r.precision) + "\n";
  }
  std::cout << csv;
  const std::string path = out_path(cfg, "stress.csv");
  write_text(path, csv);
  sen::write_manifest(cfg, {path}, out_path(cfg, "manifest.txt"));
  return 0;
}

int cmd_noise(const sen::ExperimentConfig& cfg) {
  sen::PreparedData data = sen::prepare_data(cfg);
  const std::vector<sen::NoiseRow> rows = sen::run_noise_robustness(cfg, data);
  std::string csv = "rate,model,accuracy,avg_f1\n";
  std::vector<std::string> artifacts;
  for (const sen::NoiseRow& r : rows) {
    csv += std::to_string(r.rate) + ",sen_sm," + std::to_string(r.sen_sm.accuracy) + "," +
           std::to_string(r.sen_sm.avg_f1) + "\n";
    csv += std::to_string(r.rate) + ",baseline," + std::to_string(r.baseline.accuracy) + "," +
           std::to_string(r.baseline.avg_f1) + "\n";
  }
  std::cout << csv;
  const std::string path = out_path(cfg, "noise.csv");
  write_text(path, csv);
  artifacts.push_back(path);
  sen::write_manifest(cfg, artifacts, out_path(cfg, "manifest.txt"));
  return 0;
}

int cmd_denoise(const sen::ExperimentConfig& cfg) {
  sen::DenoiseRunResult result = sen::run_denoise(cfg);
  const std::string report_path = out_path(cfg, "denoise_report.json");
  write_text(report_path, result.report.to_json() + "\n");
  std::cout << result.report.to_json() << "\n";

  std::string stats_csv = "claimed_class,other_class,in_p5,mu,sigma\n";
  for (int c = 0; c < result.stats.num_classes; ++c) {
    for (int o = 0; o < result.stats.num_classes; ++o) {
      if (c == o) {
        stats_csv += std::to_string(c) + "," + std::to_string(o) + "," +
                     std::to_string(result.stats.in_p5[(size_t)c]) + ",,\n";
      } else {
        stats_csv += std::to_string(c) + "," + std::to_string(o) + ",," +
                     std::to_string(result.stats.mu[(size_t)c][(size_t)o]) + "," +
                     std::to_string(result.stats.sigma[(size_t)c][(size_t)o]) + "\n";
      }
    }
  }
  const std::string stats_path = out_path(cfg, "stats.csv");
  write_text(stats_path, stats_csv);

  auto qq_csv = [](const std::vector<std::pair<double, double>>& pts) {
    std::string s = "normal_quantile,empirical_quantile\n";
    for (const auto& [nq, eq] : pts) s += std::to_string(nq) + "," + std::to_string(eq) + "\n";
    return s;
  };
  const std::string qq_between = out_path(cfg, "qq_between.csv");
  write_text(qq_between, qq_csv(sen::qq_data(result.between_class_sims)));
  const std::string qq_in = out_path(cfg, "qq_in.csv");
  write_text(qq_in, qq_csv(sen::qq_data(result.in_class_sims)));

  sen::write_manifest(cfg, {report_path, stats_path, qq_between, qq_in},
                      out_path(cfg, "manifest.txt"));
  return 0;
}

int cmd_gradcheck() {
  const std::vector<sen::GradCheckEntry> entries = sen::check_op_gradients(20240801ULL);
  bool ok = true;
  double worst_op = 0.0;
  for (const sen::GradCheckEntry& e : entries) {
    const double bound = e.smooth_scalar ? 1e-6 : 1e-4;
    const bool pass = e.rel_err <= bound;
    ok = ok && pass;
    worst_op = std::max(worst_op, e.rel_err);
    std::cout << (pass ? "ok   " : "FAIL ") << e.name << "  rel_err=" << e.rel_err
              << "  bound=" << bound << "\n";
  }
  sen::SENConfig tiny;
  tiny.conv1 = tiny.conv2 = tiny.conv3 = tiny.conv4 = 2;
  tiny.channels = 4;
  tiny.lstm_hidden = 8;
  tiny.k = 2;
  tiny.f = 5;
  tiny.seed = 7;
  const double comp = sen::check_sen_composition(tiny, 99, 3);
  const bool comp_ok = comp <= 1e-4;
  ok = ok && comp_ok;
  std::cout << (comp_ok ? "ok   " : "FAIL ") << "sen+pairwise composition  rel_err=" << comp
            << "  bound=" << 1e-4 << "\n";
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    usage(args.empty() ? std::cerr : std::cout);
    return args.empty() ? 1 : 0;
  }
  const std::string cmd = args[0];
  args.erase(args.begin());
  try {
    if (cmd == "gradcheck") return cmd_gradcheck();
    sen::ExperimentConfig cfg = parse_config(args);
    sen::validate_config(cfg);
    if (cmd == "synth") return cmd_synth(cfg);
    if (cmd == "prep") return cmd_prep(cfg);
    if (cmd == "train") return cmd_train(cfg);
    if (cmd == "eval") return cmd_eval(cfg);
    if (cmd == "stress") return cmd_stress(cfg);
    if (cmd == "noise") return cmd_noise(cfg);
    if (cmd == "denoise") return cmd_denoise(cfg);
    std::cerr << "unknown command '" << cmd << "'\n";
    usage(std::cerr);
    return 1;
  } catch (const sen::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const sen::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sen::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sen::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
