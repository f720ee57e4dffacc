#include "mfgnet/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mfg {

const std::vector<ConfigKeyDoc>& ConfigKeys() {
  static const std::vector<ConfigKeyDoc> kKeys = {
      {"seed", "1", "master RNG seed for weights, sampling and synthetic data"},
      {"experiment.mode", "track",
       "one of attention-train, tracker-train, track, eval, ablation-sweep"},
      {"experiment.out_dir", "out", "directory for result files, tables and visualisations"},
      {"experiment.sequence", "", "sequence directory for track/eval (empty: synthesise one)"},
      {"experiment.pred", "", "prediction file (written by track, read by eval)"},
      {"experiment.gt", "", "ground-truth file for eval"},

      {"backbone.channels", "32", "backbone output channels (512 = full profile)"},
      {"backbone.input_size", "0",
       "encoder input side in pixels, multiple of 8 (0: native size rounded to a multiple of 8)"},

      {"cbam.enabled", "true", "apply channel+spatial attention before filter generation"},
      {"cbam.reduction", "16", "channel-attention MLP reduction ratio (hidden width >= 4)"},
      {"cbam.spatial_kernel", "7", "spatial-attention convolution size (odd)"},

      {"mfgnet.kernel_size", "3", "dynamic kernel size s (odd, 1..5)"},
      {"mfgnet.mode", "mfg", "off (plain concat), naive (one shared bank) or mfg (per modality)"},
      {"mfgnet.squash", "false", "tanh-squash predicted kernels"},

      {"datanet.profile", "desk", "desk (reduced widths) or full (3072/1024/1043 channels)"},
      {"datanet.clip_len", "2", "number of consecutive frame pairs T in a clip"},
      {"datanet.lr", "0.01", "Adagrad learning rate for attention training"},
      {"datanet.train_steps", "600", "attention training steps"},
      {"datanet.train_sequences", "6", "synthetic sequences generated for attention training"},
      {"datanet.train_frames", "60", "frames per attention training sequence (target jumps halfway)"},
      {"datanet.pos_weight", "3", "BCE weight on target pixels"},
      {"datanet.checkpoint", "", "attention network weights (load if present, save after training)"},
      {"datanet.proposals", "64", "global proposals drawn per frame"},
      {"datanet.max_peaks", "5", "attention peaks kept by non-maximum suppression"},
      {"datanet.scale_jitter", "0.2", "uniform relative scale jitter of global proposals"},

      {"tracker.failure_threshold", "8", "consecutive failures N before switching to global search"},
      {"tracker.update_interval", "10", "scheduled long-term update period in frames"},
      {"tracker.local_proposals", "256", "Gaussian proposals drawn per frame"},
      {"tracker.sigma_xy", "0.3", "proposal translation std as a fraction of mean(w, h)"},
      {"tracker.sigma_scale", "0.5",
       "proposal log-scale std, in units of log(1.05) per MDNet convention"},
      {"tracker.roi_grid", "3", "RoI-align bins per side"},
      {"tracker.hidden", "128", "width of the two fully connected layers (512 = full profile)"},
      {"tracker.lr_init", "0.0005", "first-frame finetuning learning rate"},
      {"tracker.lr_update", "0.0001", "online update learning rate"},
      {"tracker.head_lr_mult", "10", "learning-rate multiplier of the output head"},
      {"tracker.momentum", "0.9", "SGD momentum"},
      {"tracker.weight_decay", "0.0005", "SGD weight decay"},
      {"tracker.init_iters", "50", "first-frame finetuning iterations"},
      {"tracker.update_iters", "15", "iterations per online update"},
      {"tracker.batch_pos", "32", "positives per minibatch"},
      {"tracker.batch_neg", "96", "hard negatives per minibatch"},
      {"tracker.hard_neg_pool", "1024", "negative candidates scored for hard mining"},
      {"tracker.long_term_frames", "100", "frames of positives kept in the long-term store"},
      {"tracker.short_term_frames", "20", "frames kept in the short-term store (and negatives)"},
      {"tracker.global_search", "true", "enable attention-driven global search"},
      {"tracker.checkpoint", "", "tracker network weights (load if present, save after training)"},

      {"train.iterations", "300", "multi-domain offline training iterations"},
      {"train.sequences", "4", "synthetic training domains"},
      {"train.frames", "30", "frames per training sequence"},
      {"train.lr", "0.001", "offline SGD learning rate"},

      {"eval.pr_threshold", "20", "precision-rate centre-distance threshold in pixels"},

      {"sweep.param", "mfgnet.kernel_size", "parameter varied by ablation-sweep"},
      {"sweep.values", "1,2,3,4,5", "comma separated values for the sweep parameter"},
      {"sweep.frames", "60", "frames per synthetic evaluation sequence in a sweep"},
      {"sweep.sequences", "2", "synthetic evaluation sequences per sweep row"},

      {"synth.width", "128", "canvas width"},
      {"synth.height", "128", "canvas height"},
      {"synth.frames", "100", "sequence length"},
      {"synth.target_w", "28", "target width"},
      {"synth.target_h", "24", "target height"},
      {"synth.speed", "1.5", "target speed along the waypoint path, pixels/frame"},
      {"synth.waypoints", "4", "random waypoints in the motion script"},
      {"synth.occlusion_start", "-1", "first occluded frame (-1: none)"},
      {"synth.occlusion_length", "0", "occluded frames"},
      {"synth.teleport_frame", "-1", "frame at which the target jumps (-1: never)"},
      {"synth.teleport_min_dist", "50", "minimum jump distance in pixels"},
      {"synth.distractors", "1", "number of visible-similar, thermally cold distractors"},
      {"synth.noise", "0.03", "per-pixel Gaussian noise std"},
  };
  return kKeys;
}

void RequireKnownKey(const std::string& key) {
  const auto& keys = ConfigKeys();
  bool ok = std::any_of(keys.begin(), keys.end(),
                        [&](const ConfigKeyDoc& d) { return key == d.key; });
  if (!ok) throw ConfigError("unknown config key '" + key + "'");
}

namespace {

std::string Trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Config Config::FromFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return FromString(ss.str(), path);
}

Config Config::FromString(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = Trim(t.substr(0, eq));
    std::string value = Trim(t.substr(eq + 1));
    try {
      cfg.Set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

std::string Config::EnvName(const std::string& prefix, const std::string& key) {
  std::string name = prefix;
  for (char c : key) {
    name += (c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

void Config::ApplyEnvOverrides(const std::string& prefix) {
  for (const ConfigKeyDoc& d : ConfigKeys()) {
    if (const char* v = std::getenv(EnvName(prefix, d.key).c_str())) Set(d.key, v);
  }
}

void Config::Set(const std::string& key, const std::string& value) {
  RequireKnownKey(key);
  values_[key] = value;
}

std::string Config::Raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  for (const ConfigKeyDoc& d : ConfigKeys()) {
    if (key == d.key) return d.default_value;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string Config::GetString(const std::string& key) const { return Raw(key); }

int Config::GetInt(const std::string& key) const {
  std::string s = Raw(key);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
  }
  return v;
}

double Config::GetDouble(const std::string& key) const {
  std::string s = Raw(key);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  }
  return v;
}

bool Config::GetBool(const std::string& key) const {
  std::string s = Raw(key);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + Raw(key) + "'");
}

std::vector<int> Config::GetIntList(const std::string& key) const {
  std::string s = Raw(key);
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (item.empty()) continue;
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size()) {
      throw ConfigError("config key '" + key + "': bad list element '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string Config::Dump() const {
  std::ostringstream os;
  for (const ConfigKeyDoc& d : ConfigKeys()) os << d.key << " = " << Raw(d.key) << "\n";
  return os.str();
}

}  // namespace mfg
