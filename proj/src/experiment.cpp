#include "mfgnet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mfgnet/ops.hpp"
#include "mfgnet/sequence_io.hpp"

namespace mfg {

namespace fs = std::filesystem;

namespace {

std::string Fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void Log(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

std::string WriteText(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << text;
  return path.string();
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct SuiteScore {
  double pr = 0.0, sr_auc = 0.0, sr_06 = 0.0;
  double seconds = 0.0;
  // attribute -> (sum of SR-AUC, sequence count)
  std::map<std::string, std::pair<double, int>> by_attribute;
};

// Builds the model from `cfg` and tracks every sequence of the suite.
SuiteScore ScoreSuite(const Config& cfg, const std::vector<SequenceRecord>& suite,
                      const Datanet* datanet) {
  FeatureNetOptions fopts = FeatureNetOptions::FromConfig(cfg);
  TrackerOptions topts = TrackerOptions::FromConfig(cfg);
  GlobalProposalOptions gopts = GlobalProposalOptions::FromConfig(cfg);
  double pr_threshold = cfg.GetDouble("eval.pr_threshold");
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.GetInt("seed"));
  Rng rng(seed);
  FeatureNet net(fopts, rng);
  const Datanet* dn = topts.global_search ? datanet : nullptr;

  SuiteScore score;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    TrackRun run = RunTracker(suite[i], net, topts, dn, gopts, seed + i);
    EvalResult r = Evaluate(run.boxes, suite[i].boxes, pr_threshold);
    score.pr += r.pr_at;
    score.sr_auc += r.sr_auc;
    score.sr_06 += r.sr_at_06;
    score.seconds += run.seconds;
    for (const std::string& a : suite[i].attributes) {
      score.by_attribute[a].first += r.sr_auc;
      score.by_attribute[a].second += 1;
    }
  }
  double n = static_cast<double>(std::max<std::size_t>(suite.size(), 1));
  score.pr /= n;
  score.sr_auc /= n;
  score.sr_06 /= n;
  return score;
}

std::vector<SequenceRecord> SweepSuite(const Config& cfg) {
  SyntheticSpec base = SyntheticSpec::FromConfig(cfg);
  base.frames = cfg.GetInt("sweep.frames");
  int count = cfg.GetInt("sweep.sequences");
  if (count < 1) throw ConfigError("sweep.sequences must be >= 1");
  return EvaluationSuite(base, count, static_cast<std::uint64_t>(cfg.GetInt("seed")) * 1000);
}

void SaveTable(const fs::path& dir, const std::string& stem, const Table& t,
               ExperimentReport& report) {
  report.files.push_back(WriteText(dir / (stem + ".txt"), t.Render()));
  report.files.push_back(WriteText(dir / (stem + ".csv"), t.Csv()));
  report.tables.emplace_back(stem, t);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Modes

void AttentionTrainMode(const Config& cfg, const fs::path& out, ExperimentReport& report,
                        std::ostream* log) {
  Rng rng(static_cast<std::uint64_t>(cfg.GetInt("seed")));
  Datanet net(DatanetOptions::FromConfig(cfg), rng);
  std::vector<SequenceRecord> train = AttentionTrainingSet(cfg);
  AttentionTrainOptions opts = AttentionTrainOptions::FromConfig(cfg);
  Log(log, "training attention network: " + std::to_string(train.size()) + " sequences, " +
               std::to_string(opts.steps) + " steps");
  auto t0 = std::chrono::steady_clock::now();
  std::vector<double> losses = TrainAttention(net, train, opts, rng);
  Log(log, "done in " + Fixed(Seconds(t0), 1) + " s");

  std::string ckpt = cfg.GetString("datanet.checkpoint");
  if (ckpt.empty()) ckpt = (out / "datanet.bin").string();
  SaveParams(ckpt, net.Params());
  report.files.push_back(ckpt);

  std::ostringstream curve;
  curve << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) curve << i << "," << FormatDouble(losses[i]) << "\n";
  report.files.push_back(WriteText(out / "attention_loss.csv", curve.str()));

  // Held-out check: how often the attention centroid lands inside the box.
  SyntheticSpec spec = ScenarioSpec(SyntheticSpec::FromConfig(cfg), Scenario::kOcclusion);
  spec.frames = std::max(spec.frames, 30);
  SequenceRecord held = GenerateSequence(spec, static_cast<std::uint64_t>(cfg.GetInt("seed")) + 7777);
  int inside = 0, total = 0;
  for (int t = 1; t < held.size(); t += std::max(1, held.size() / 10)) {
    if (spec.Occluded(t)) continue;
    Tensor att = net.Predict(MakeClip(held, t, net.options().clip_len));
    auto [cx, cy] = AttentionCentroid(att);
    double x = (cx + 0.5) * held.width() / kClipImageSize;
    double y = (cy + 0.5) * held.height() / kClipImageSize;
    const BoundingBox& b = held.boxes[t];
    inside += x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
    ++total;
    char name[64];
    std::snprintf(name, sizeof(name), "attention_eval_%06d.png", t);
    SaveGray8(att, (out / name).string());
    report.files.push_back((out / name).string());
  }
  Table t({"steps", "final loss (mean of last 50)", "held-out centroid in box"});
  double tail = 0.0;
  int tail_n = std::min<int>(50, static_cast<int>(losses.size()));
  for (int i = 0; i < tail_n; ++i) tail += losses[losses.size() - 1 - i];
  t.AddRow({std::to_string(opts.steps), tail_n ? Fixed(tail / tail_n, 4) : "-",
            std::to_string(inside) + "/" + std::to_string(total)});
  SaveTable(out, "attention_train", t, report);
}

void TrackerTrainMode(const Config& cfg, const fs::path& out, ExperimentReport& report,
                      std::ostream* log) {
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.GetInt("seed"));
  Rng rng(seed);
  FeatureNet net(FeatureNetOptions::FromConfig(cfg), rng);
  TrackerOptions topts = TrackerOptions::FromConfig(cfg);
  SyntheticSpec base = SyntheticSpec::FromConfig(cfg);
  base.frames = cfg.GetInt("train.frames");
  int domains = cfg.GetInt("train.sequences");
  if (domains < 1) throw ConfigError("train.sequences must be >= 1");
  std::vector<SequenceRecord> train = EvaluationSuite(base, domains, seed * 1000 + 300);
  Classifier clf(net.out_channels() * topts.roi_grid * topts.roi_grid, topts.hidden, domains, rng);
  OfflineTrainOptions opts = OfflineTrainOptions::FromConfig(cfg);
  Log(log, "multi-domain training: " + std::to_string(domains) + " domains, " +
               std::to_string(opts.iterations) + " iterations");
  OfflineTrainStats stats = TrainMultiDomain(net, clf, train, opts, topts, rng);

  std::string ckpt = cfg.GetString("tracker.checkpoint");
  if (ckpt.empty()) ckpt = (out / "tracker.bin").string();
  SaveTrackerCheckpoint(ckpt, net, clf);
  report.files.push_back(ckpt);

  std::ostringstream curve;
  curve << "iteration,cls,inst\n";
  for (std::size_t i = 0; i < stats.cls.size(); ++i) {
    curve << i << "," << FormatDouble(stats.cls[i]) << "," << FormatDouble(stats.inst[i]) << "\n";
  }
  report.files.push_back(WriteText(out / "tracker_loss.csv", curve.str()));
  Table t({"iterations", "first cls", "last cls", "first inst", "last inst"});
  auto first = [](const std::vector<double>& v) { return v.empty() ? "-" : Fixed(v.front(), 4); };
  auto last = [](const std::vector<double>& v) { return v.empty() ? "-" : Fixed(v.back(), 4); };
  t.AddRow({std::to_string(opts.iterations), first(stats.cls), last(stats.cls),
            first(stats.inst), last(stats.inst)});
  SaveTable(out, "tracker_train", t, report);
}

void TrackMode(const Config& cfg, const fs::path& out, ExperimentReport& report,
               std::ostream* log) {
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.GetInt("seed"));
  std::string seq_dir = cfg.GetString("experiment.sequence");
  SequenceRecord seq = seq_dir.empty()
                           ? GenerateSequence(SyntheticSpec::FromConfig(cfg), seed)
                           : LoadSequence(seq_dir);
  Log(log, "sequence '" + seq.name + "': " + std::to_string(seq.size()) + " frames");

  Rng rng(seed);
  FeatureNet net(FeatureNetOptions::FromConfig(cfg), rng);
  TrackerOptions topts = TrackerOptions::FromConfig(cfg);
  TensorArchive pretrained;
  bool have_pretrained = false;
  std::string tckpt = cfg.GetString("tracker.checkpoint");
  if (!tckpt.empty() && fs::exists(tckpt)) {
    pretrained = LoadTrackerCheckpoint(tckpt, net);
    have_pretrained = true;
    Log(log, "loaded tracker weights from " + tckpt);
  }
  std::unique_ptr<Datanet> datanet;
  if (topts.global_search) {
    std::string dckpt = cfg.GetString("datanet.checkpoint");
    if (!dckpt.empty() && fs::exists(dckpt)) {
      datanet = ObtainDatanet(cfg, log);
    } else {
      Log(log, "no attention checkpoint (datanet.checkpoint); global search disabled");
    }
  }
  TrackRun run = RunTracker(seq, net, topts, datanet.get(), GlobalProposalOptions::FromConfig(cfg),
                            seed, have_pretrained ? &pretrained : nullptr);
  Log(log, "tracked in " + Fixed(run.seconds, 1) + " s");

  std::string pred = cfg.GetString("experiment.pred");
  if (pred.empty()) pred = (out / "pred.txt").string();
  WriteBoxes(pred, run.boxes);
  report.files.push_back(pred);

  std::ostringstream frames;
  frames << "frame,x,y,w,h,score,success,global,failure_streak,update\n";
  for (const TrackResult& r : run.results) {
    frames << r.frame_index << "," << FormatDouble(r.box.x) << "," << FormatDouble(r.box.y) << ","
           << FormatDouble(r.box.w) << "," << FormatDouble(r.box.h) << ","
           << FormatDouble(r.score) << "," << r.success << "," << r.used_global << ","
           << r.failure_streak << "," << static_cast<int>(r.update) << "\n";
    if (r.attention.size() > 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "attention_%06d.png", r.frame_index);
      SaveGray8(r.attention, (out / name).string());
      report.files.push_back((out / name).string());
    }
  }
  report.files.push_back(WriteText(out / "frames.csv", frames.str()));

  // First-frame filter banks for inspection.
  if (net.options().mfg.mode != FilterMode::kOff) {
    NoGradGuard no_grad;
    auto [fv, ft] = net.ModalityFeatures(seq.frames[0]);
    auto [zv, zt] = net.mfgnet().GenerateFilters(ops::Concat({fv, ft}));
    TensorArchive filters{{"filters.visible", zv.kernels.value()},
                          {"filters.thermal", zt.kernels.value()}};
    SaveArchive((out / "filters.bin").string(), filters);
    report.files.push_back((out / "filters.bin").string());
  }

  EvalResult r = Evaluate(run.boxes, seq.boxes, cfg.GetDouble("eval.pr_threshold"));
  SaveTable(out, "metrics", MetricsTable(r, cfg.GetDouble("eval.pr_threshold")), report);
}

void EvalMode(const Config& cfg, const fs::path& out, ExperimentReport& report) {
  std::string pred_path = cfg.GetString("experiment.pred");
  std::string gt_path = cfg.GetString("experiment.gt");
  if (pred_path.empty()) throw ConfigError("experiment.pred: required for eval");
  if (gt_path.empty()) throw ConfigError("experiment.gt: required for eval");
  std::vector<BoundingBox> pred = ReadBoxes(pred_path, BoxFormat::kXywh);
  std::vector<BoundingBox> gt = ReadBoxes(gt_path);
  double thr = cfg.GetDouble("eval.pr_threshold");
  EvalResult r = Evaluate(pred, gt, thr);
  std::ostringstream pr, sr;
  pr << "threshold_px,precision\n";
  for (std::size_t i = 0; i < r.pr_curve.size(); ++i) {
    pr << FormatDouble(r.pr_thresholds[i]) << "," << FormatDouble(r.pr_curve[i]) << "\n";
  }
  sr << "overlap_threshold,success\n";
  for (std::size_t i = 0; i < r.sr_curve.size(); ++i) {
    sr << FormatDouble(r.sr_thresholds[i]) << "," << FormatDouble(r.sr_curve[i]) << "\n";
  }
  report.files.push_back(WriteText(out / "pr_curve.csv", pr.str()));
  report.files.push_back(WriteText(out / "sr_curve.csv", sr.str()));
  SaveTable(out, "metrics", MetricsTable(r, thr), report);
}

void AblationMode(const Config& cfg, const fs::path& out, ExperimentReport& report,
                  std::ostream* log) {
  std::unique_ptr<Datanet> datanet;
  if (cfg.GetBool("tracker.global_search")) datanet = ObtainDatanet(cfg, log);
  Table attributes;
  Table ablation = AblationTable(cfg, datanet.get(), &attributes, log);
  SaveTable(out, "ablation", ablation, report);
  SaveTable(out, "attributes", attributes, report);

  std::vector<std::string> keys = SplitList(cfg.GetString("sweep.param"));
  if (keys.size() != 1) throw ConfigError("sweep.param: expected exactly one key");
  RequireKnownKey(keys[0]);
  Table sweep = RunSweep(cfg, {{keys[0], SplitList(cfg.GetString("sweep.values"))}},
                         datanet.get(), log);
  SaveTable(out, "sweep", sweep, report);
}

}  // namespace

// ---------------------------------------------------------------------------
// Table

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

void Table::AddRow(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw std::invalid_argument("Table::AddRow: expected " + std::to_string(header_.size()) +
                                " cells, got " + std::to_string(row.size()));
  }
  rows_.push_back(std::move(row));
}

std::string Table::Render() const {
  std::vector<std::size_t> width(header_.size());
  for (std::size_t c = 0; c < header_.size(); ++c) width[c] = header_[c].size();
  for (const auto& r : rows_) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (std::size_t c = 0; c < cells.size(); ++c) {
      s += " " + cells[c] + std::string(width[c] - cells[c].size(), ' ') + " |";
    }
    return s + "\n";
  };
  std::string out = line(header_);
  out += "|";
  for (std::size_t w : width) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (const auto& r : rows_) out += line(r);
  return out;
}

std::string Table::Csv() const {
  auto line = [](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) s += (c ? "," : "") + CsvField(cells[c]);
    return s + "\n";
  };
  std::string out = line(header_);
  for (const auto& r : rows_) out += line(r);
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios

const char* ScenarioName(Scenario s) {
  switch (s) {
    case Scenario::kEasy: return "easy";
    case Scenario::kOcclusion: return "occlusion";
    case Scenario::kFastMotion: return "fast";
    case Scenario::kClutter: return "clutter";
  }
  return "?";
}

SyntheticSpec ScenarioSpec(const SyntheticSpec& base, Scenario s) {
  SyntheticSpec spec = base;
  switch (s) {
    case Scenario::kEasy:
      break;
    case Scenario::kOcclusion: {
      int len = std::clamp(spec.frames / 3, 1, 15);
      spec.occlusion_start = std::max(1, spec.frames / 3);
      spec.occlusion_length = std::min(len, spec.frames - spec.occlusion_start);
      spec.teleport_frame = spec.occlusion_start + spec.occlusion_length / 2;
      break;
    }
    case Scenario::kFastMotion:
      spec.speed = std::max(3.0 * spec.speed, kFastSpeed);
      break;
    case Scenario::kClutter:
      spec.distractors += 2;
      break;
  }
  spec.Validate();
  return spec;
}

std::vector<SequenceRecord> EvaluationSuite(const SyntheticSpec& base, int count,
                                            std::uint64_t seed) {
  std::vector<SequenceRecord> out;
  for (int i = 0; i < count; ++i) {
    Scenario s = static_cast<Scenario>(i % kScenarioCount);
    SequenceRecord seq = GenerateSequence(ScenarioSpec(base, s), seed + static_cast<std::uint64_t>(i));
    seq.name = std::string(ScenarioName(s)) + "_" + std::to_string(i);
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<SequenceRecord> AttentionTrainingSet(const Config& cfg) {
  SyntheticSpec spec = SyntheticSpec::FromConfig(cfg);
  spec.frames = cfg.GetInt("datanet.train_frames");
  if (spec.frames < 2) throw ConfigError("datanet.train_frames must be >= 2");
  spec.occlusion_start = -1;
  spec.occlusion_length = 0;
  spec.teleport_frame = spec.frames / 2;
  int count = cfg.GetInt("datanet.train_sequences");
  if (count < 1) throw ConfigError("datanet.train_sequences must be >= 1");
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.GetInt("seed")) * 1000 + 500;
  std::vector<SequenceRecord> out;
  for (int i = 0; i < count; ++i) out.push_back(GenerateSequence(spec, seed + i));
  return out;
}

// ---------------------------------------------------------------------------
// Tracking and sweeps

TrackRun RunTracker(const SequenceRecord& seq, const FeatureNet& net, const TrackerOptions& opts,
                    const Datanet* datanet, const GlobalProposalOptions& global_opts,
                    std::uint64_t seed, const TensorArchive* pretrained) {
  CheckSequence(seq);
  auto t0 = std::chrono::steady_clock::now();
  Tracker tracker(net, opts, datanet, global_opts, seed, pretrained);
  tracker.Initialize(seq.frames[0], seq.boxes[0]);
  TrackRun run;
  run.boxes.push_back(tracker.current_box());
  for (int t = 1; t < seq.size(); ++t) {
    run.results.push_back(tracker.Track(seq.frames[t]));
    run.boxes.push_back(run.results.back().box);
  }
  run.seconds = Seconds(t0);
  return run;
}

std::unique_ptr<Datanet> ObtainDatanet(const Config& cfg, std::ostream* log) {
  Rng rng(static_cast<std::uint64_t>(cfg.GetInt("seed")));
  auto net = std::make_unique<Datanet>(DatanetOptions::FromConfig(cfg), rng);
  std::string ckpt = cfg.GetString("datanet.checkpoint");
  if (!ckpt.empty() && fs::exists(ckpt)) {
    LoadParams(ckpt, net->Params());
    Log(log, "loaded attention weights from " + ckpt);
    return net;
  }
  std::vector<SequenceRecord> train = AttentionTrainingSet(cfg);
  AttentionTrainOptions opts = AttentionTrainOptions::FromConfig(cfg);
  Log(log, "training attention network (" + std::to_string(opts.steps) + " steps)");
  TrainAttention(*net, train, opts, rng);
  if (!ckpt.empty()) {
    SaveParams(ckpt, net->Params());
    Log(log, "saved attention weights to " + ckpt);
  }
  return net;
}

Table RunSweep(const Config& cfg, const std::vector<SweepAxis>& axes, const Datanet* datanet,
               std::ostream* log) {
  std::vector<std::string> header;
  for (const SweepAxis& a : axes) {
    RequireKnownKey(a.key);
    if (a.values.empty()) throw ConfigError(a.key + ": sweep needs at least one value");
    header.push_back(a.key);
  }
  for (const char* h : {"PR", "SR-AUC", "SR@0.6", "seconds", "note"}) header.push_back(h);
  Table table(header);
  std::vector<SequenceRecord> suite = SweepSuite(cfg);

  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    Config point = cfg;
    std::vector<std::string> row;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      point.Set(axes[a].key, axes[a].values[idx[a]]);
      row.push_back(axes[a].values[idx[a]]);
    }
    std::string label;
    for (const std::string& v : row) label += (label.empty() ? "" : " ") + v;
    try {
      SuiteScore s = ScoreSuite(point, suite, datanet);
      for (const std::string& v : {Fixed(s.pr), Fixed(s.sr_auc), Fixed(s.sr_06),
                                   Fixed(s.seconds, 1), std::string()}) {
        row.push_back(v);
      }
      Log(log, "sweep [" + label + "] PR " + Fixed(s.pr) + " SR-AUC " + Fixed(s.sr_auc));
    } catch (const std::exception& e) {
      // Configurations the model refuses (e.g. even kernels) are reported, not run.
      for (int k = 0; k < 4; ++k) row.push_back("n/a");
      row.push_back(std::string("rejected: ") + e.what());
      Log(log, "sweep [" + label + "] rejected: " + e.what());
    }
    table.AddRow(row);

    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return table;
    }
    if (axes.empty()) return table;
  }
}

Table AblationTable(const Config& cfg, const Datanet* datanet, Table* attributes,
                    std::ostream* log) {
  std::vector<SequenceRecord> suite = SweepSuite(cfg);
  std::vector<std::string> attr_names;
  for (const SequenceRecord& s : suite) {
    for (const std::string& a : s.attributes) {
      if (std::find(attr_names.begin(), attr_names.end(), a) == attr_names.end()) {
        attr_names.push_back(a);
      }
    }
  }
  std::sort(attr_names.begin(), attr_names.end());
  std::vector<std::string> attr_header{"variant"};
  for (const std::string& a : attr_names) attr_header.push_back(a);
  if (attributes) *attributes = Table(attr_header);

  Table table({"variant", "mfgnet.mode", "cbam", "global", "PR", "SR-AUC", "SR@0.6", "seconds"});
  for (const char* mode : {"off", "naive", "mfg"}) {
    for (bool cbam : {true, false}) {
      for (bool global : {true, false}) {
        std::string variant = std::string(mode == std::string("off") ? "baseline" : mode) +
                              (cbam ? "+cbam" : "") + (global ? "+global" : "");
        Config point = cfg;
        point.Set("mfgnet.mode", mode);
        point.Set("cbam.enabled", cbam ? "true" : "false");
        point.Set("tracker.global_search", global ? "true" : "false");
        bool runnable = !global || datanet != nullptr;
        if (!runnable) {
          table.AddRow({variant, mode, cbam ? "on" : "off", "on", "n/a", "n/a", "n/a", "-"});
          if (attributes) {
            std::vector<std::string> r{variant};
            r.resize(attr_header.size(), "n/a");
            attributes->AddRow(r);
          }
          continue;
        }
        SuiteScore s = ScoreSuite(point, suite, datanet);
        table.AddRow({variant, mode, cbam ? "on" : "off", global ? "on" : "off", Fixed(s.pr),
                      Fixed(s.sr_auc), Fixed(s.sr_06), Fixed(s.seconds, 1)});
        Log(log, "ablation [" + variant + "] PR " + Fixed(s.pr) + " SR-AUC " + Fixed(s.sr_auc));
        if (attributes) {
          std::vector<std::string> r{variant};
          for (const std::string& a : attr_names) {
            auto it = s.by_attribute.find(a);
            r.push_back(it == s.by_attribute.end()
                            ? "-"
                            : Fixed(it->second.first / it->second.second));
          }
          attributes->AddRow(r);
        }
      }
    }
  }
  return table;
}

Table MetricsTable(const EvalResult& r, double pr_threshold) {
  Table t({"frames", "PR@" + FormatDouble(pr_threshold), "SR-AUC", "SR@0.6"});
  t.AddRow({std::to_string(r.frames), Fixed(r.pr_at, 4), Fixed(r.sr_auc, 4),
            Fixed(r.sr_at_06, 4)});
  return t;
}

// ---------------------------------------------------------------------------

ExperimentReport RunExperiment(const Config& cfg, std::ostream* log) {
  ExperimentReport report;
  report.mode = cfg.GetString("experiment.mode");
  fs::path out = cfg.GetString("experiment.out_dir");
  if (out.empty()) throw ConfigError("experiment.out_dir: must not be empty");
  fs::create_directories(out);
  if (report.mode == "attention-train") {
    AttentionTrainMode(cfg, out, report, log);
  } else if (report.mode == "tracker-train") {
    TrackerTrainMode(cfg, out, report, log);
  } else if (report.mode == "track") {
    TrackMode(cfg, out, report, log);
  } else if (report.mode == "eval") {
    EvalMode(cfg, out, report);
  } else if (report.mode == "ablation-sweep") {
    AblationMode(cfg, out, report, log);
  } else {
    throw ConfigError("experiment.mode: unknown mode '" + report.mode + "'");
  }
  report.files.push_back(WriteText(out / "config.txt", cfg.Dump()));
  return report;
}

}  // namespace mfg
