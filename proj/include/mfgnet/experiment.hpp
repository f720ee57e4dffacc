#ifndef MFGNET_EXPERIMENT_HPP_
#define MFGNET_EXPERIMENT_HPP_

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "mfgnet/archive.hpp"
#include "mfgnet/config.hpp"
#include "mfgnet/datanet.hpp"
#include "mfgnet/metrics.hpp"
#include "mfgnet/synth.hpp"
#include "mfgnet/tracker.hpp"

namespace mfg {

// Column-aligned text table, also exportable as CSV.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> header);

  // Throws std::invalid_argument when the row width differs from the header.
  void AddRow(std::vector<std::string> row);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string Render() const;
  std::string Csv() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Synthetic evaluation scenarios; a suite cycles through them in this order.
enum class Scenario { kEasy, kOcclusion, kFastMotion, kClutter };
inline constexpr int kScenarioCount = 4;
const char* ScenarioName(Scenario s);
// `base` adjusted for the scenario: occlusion adds a 15-frame occluder over
// the first third with a jump of the target while hidden, fast motion triples
// the speed, clutter adds two more distractors.
SyntheticSpec ScenarioSpec(const SyntheticSpec& base, Scenario s);
std::vector<SequenceRecord> EvaluationSuite(const SyntheticSpec& base, int count,
                                            std::uint64_t seed);
// Sequences for attention training (target jumps halfway through).
std::vector<SequenceRecord> AttentionTrainingSet(const Config& cfg);

struct TrackRun {
  std::vector<BoundingBox> boxes;    // one per frame; frame 0 is the given box
  std::vector<TrackResult> results;  // frames 1..n-1
  double seconds = 0.0;
};

TrackRun RunTracker(const SequenceRecord& seq, const FeatureNet& net, const TrackerOptions& opts,
                    const Datanet* datanet, const GlobalProposalOptions& global_opts,
                    std::uint64_t seed, const TensorArchive* pretrained = nullptr);

// Loads datanet.checkpoint when the file exists; otherwise trains on
// AttentionTrainingSet and saves to that path (when set).
std::unique_ptr<Datanet> ObtainDatanet(const Config& cfg, std::ostream* log);

// One axis of a configuration grid.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

// Tracks the evaluation suite (sweep.sequences x sweep.frames) for every point
// of the grid and reports PR / SR-AUC / SR@0.6. Points the model rejects
// (e.g. an even kernel size) appear as "n/a (reason)". `datanet` serves rows
// with global search enabled; when null, global search is off in every row.
Table RunSweep(const Config& cfg, const std::vector<SweepAxis>& axes, const Datanet* datanet,
               std::ostream* log);

// Rows {off, naive, mfg} x {cbam on, off} x {global on, off}. When
// `attributes` is given it receives per-attribute SR-AUC for every row.
Table AblationTable(const Config& cfg, const Datanet* datanet, Table* attributes,
                    std::ostream* log);

// Evaluation summary of one prediction / ground-truth pair.
Table MetricsTable(const EvalResult& r, double pr_threshold);

struct ExperimentReport {
  std::string mode;
  std::vector<std::string> files;  // everything written under out_dir
  std::vector<std::pair<std::string, Table>> tables;
};

// Executes experiment.mode: attention-train, tracker-train, track, eval or
// ablation-sweep. Config errors name the offending key.
ExperimentReport RunExperiment(const Config& cfg, std::ostream* log = nullptr);

}  // namespace mfg

#endif  // MFGNET_EXPERIMENT_HPP_
