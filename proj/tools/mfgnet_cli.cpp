// Command-line entry points: synth, track, eval, train-attention,
// train-tracker, sweep, run and keys.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfgnet/config.hpp"
#include "mfgnet/experiment.hpp"
#include "mfgnet/sequence_io.hpp"
#include "mfgnet/synth.hpp"

namespace {

using mfg::Config;

// Config file (optional) + MFG_* environment + --set key=value, in that order.
Config LoadConfig(const std::string& path, const std::vector<std::string>& sets) {
  Config cfg = path.empty() ? Config() : Config::FromFile(path);
  cfg.ApplyEnvOverrides("MFG_");
  for (const std::string& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw mfg::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void PrintReport(const mfg::ExperimentReport& report) {
  for (const auto& [name, table] : report.tables) {
    std::cout << "\n" << name << "\n" << table.Render();
  }
  std::cout << "\nwrote " << report.files.size() << " files\n";
}

std::vector<std::string> Split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RGB-T tracking with modality-aware dynamic filters and global attention"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--set", sets, "override a config key (key=value), repeatable");
  };

  // synth
  std::string spec_path, out_dir;
  long long seed = 1;
  auto* synth = app.add_subcommand("synth", "generate a synthetic RGB-T sequence");
  synth->add_option("--spec", spec_path, "config file with synth.* keys");
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--out", out_dir, "output sequence directory")->required();
  synth->add_option("--set", sets, "override a config key (key=value), repeatable");

  // track
  std::string seq_dir, pred_out;
  auto* track = app.add_subcommand("track", "track a sequence directory (or a synthetic one)");
  add_common(track);
  track->add_option("--seq", seq_dir, "sequence directory (visible/, infrared/, ground truth)");
  track->add_option("--out", pred_out, "prediction file, one x,y,w,h line per frame");

  // eval
  std::string pred_path, gt_path;
  double pr_threshold = 20.0;
  auto* eval = app.add_subcommand("eval", "precision / success of predictions against ground truth");
  eval->add_option("--pred", pred_path, "prediction file")->required();
  eval->add_option("--gt", gt_path, "ground-truth file")->required();
  eval->add_option("--pr-threshold", pr_threshold, "centre-distance threshold in pixels");

  auto* train_att = app.add_subcommand("train-attention", "train the global attention network");
  add_common(train_att);
  auto* train_trk = app.add_subcommand("train-tracker", "offline multi-domain training");
  add_common(train_trk);

  // sweep
  std::vector<std::string> params, values;
  bool ablation = false;
  auto* sweep = app.add_subcommand("sweep", "grid sweep over config keys");
  add_common(sweep);
  sweep->add_option("--param", params, "config key to vary (repeat for a grid)");
  sweep->add_option("--values", values, "comma separated values, one list per --param");
  sweep->add_flag("--ablation", ablation,
                  "also run {off,naive,mfg} x cbam x global and the attribute table");

  auto* run = app.add_subcommand("run", "run experiment.mode from the config");
  add_common(run);
  auto* keys = app.add_subcommand("keys", "list every config key with its default");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*keys) {
      for (const mfg::ConfigKeyDoc& k : mfg::ConfigKeys()) {
        std::cout << k.key << " = " << k.default_value << "    # " << k.doc << "\n";
      }
      return 0;
    }
    if (*synth) {
      Config cfg = LoadConfig(spec_path, sets);
      mfg::SequenceRecord seq =
          mfg::GenerateSequence(mfg::SyntheticSpec::FromConfig(cfg), static_cast<std::uint64_t>(seed));
      mfg::SaveSequence(seq, out_dir);
      std::cout << "wrote " << seq.size() << " frames to " << out_dir << "\n";
      return 0;
    }
    if (*eval) {
      Config cfg;
      cfg.Set("experiment.mode", "eval");
      cfg.Set("experiment.pred", pred_path);
      cfg.Set("experiment.gt", gt_path);
      cfg.Set("eval.pr_threshold", std::to_string(pr_threshold));
      cfg.Set("experiment.out_dir",
               (std::filesystem::path(pred_path).parent_path() / "eval").string());
      mfg::ExperimentReport report = mfg::RunExperiment(cfg, &std::cerr);
      std::cout << report.tables.back().second.Render();
      return 0;
    }
    Config cfg = LoadConfig(config_path, sets);
    if (*track) {
      cfg.Set("experiment.mode", "track");
      if (!seq_dir.empty()) cfg.Set("experiment.sequence", seq_dir);
      if (!pred_out.empty()) cfg.Set("experiment.pred", pred_out);
    } else if (*train_att) {
      cfg.Set("experiment.mode", "attention-train");
    } else if (*train_trk) {
      cfg.Set("experiment.mode", "tracker-train");
    } else if (*sweep) {
      if (params.empty()) params.push_back(cfg.GetString("sweep.param"));
      if (values.empty()) values.push_back(cfg.GetString("sweep.values"));
      if (params.size() != values.size()) {
        throw mfg::ConfigError("sweep: give one --values list per --param");
      }
      std::filesystem::path out = cfg.GetString("experiment.out_dir");
      std::filesystem::create_directories(out);
      std::unique_ptr<mfg::Datanet> datanet;
      if (cfg.GetBool("tracker.global_search")) datanet = mfg::ObtainDatanet(cfg, &std::cerr);
      if (ablation) {
        mfg::Table attributes;
        mfg::Table t = mfg::AblationTable(cfg, datanet.get(), &attributes, &std::cerr);
        std::cout << "\nablation\n" << t.Render() << "\nattributes (SR-AUC)\n"
                  << attributes.Render();
        std::ofstream(out / "ablation.csv") << t.Csv();
        std::ofstream(out / "attributes.csv") << attributes.Csv();
      }
      std::vector<mfg::SweepAxis> axes;
      for (std::size_t i = 0; i < params.size(); ++i) axes.push_back({params[i], Split(values[i])});
      mfg::Table t = mfg::RunSweep(cfg, axes, datanet.get(), &std::cerr);
      std::cout << "\nsweep\n" << t.Render();
      std::ofstream(out / "sweep.csv") << t.Csv();
      std::ofstream(out / "sweep.txt") << t.Render();
      return 0;
    }
    PrintReport(mfg::RunExperiment(cfg, &std::cerr));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
