#include "mfgnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mfg {

SyntheticSpec SyntheticSpec::FromConfig(const Config& cfg) {
  SyntheticSpec s;
  s.width = cfg.GetInt("synth.width");
  s.height = cfg.GetInt("synth.height");
  s.frames = cfg.GetInt("synth.frames");
  s.target_w = cfg.GetDouble("synth.target_w");
  s.target_h = cfg.GetDouble("synth.target_h");
  s.speed = cfg.GetDouble("synth.speed");
  s.waypoints = cfg.GetInt("synth.waypoints");
  s.occlusion_start = cfg.GetInt("synth.occlusion_start");
  s.occlusion_length = cfg.GetInt("synth.occlusion_length");
  s.teleport_frame = cfg.GetInt("synth.teleport_frame");
  s.teleport_min_dist = cfg.GetDouble("synth.teleport_min_dist");
  s.distractors = cfg.GetInt("synth.distractors");
  s.noise = cfg.GetDouble("synth.noise");
  s.Validate();
  return s;
}

void SyntheticSpec::Validate() const {
  if (width < 16 || height < 16) throw ConfigError("synth: canvas must be at least 16x16");
  if (frames < 1) throw ConfigError("synth.frames must be >= 1");
  if (!(target_w >= 4.0 && target_h >= 4.0)) throw ConfigError("synth: target must be >= 4 px");
  if (target_w > width - 4 || target_h > height - 4) {
    throw ConfigError("synth: target larger than canvas");
  }
  if (speed < 0.0) throw ConfigError("synth.speed must be >= 0");
  if (waypoints < 1) throw ConfigError("synth.waypoints must be >= 1");
  if (occlusion_length < 0) throw ConfigError("synth.occlusion_length must be >= 0");
  if (distractors < 0) throw ConfigError("synth.distractors must be >= 0");
  if (noise < 0.0) throw ConfigError("synth.noise must be >= 0");
  if (teleport_frame >= 0 && teleport_min_dist > std::hypot(width, height) * 0.75) {
    throw ConfigError("synth.teleport_min_dist too large for the canvas");
  }
}

namespace {

struct Mover {
  double cx, cy;
  std::vector<std::pair<double, double>> path;
  std::size_t next = 1;

  void Advance(double speed) {
    if (path.size() < 2) return;
    double left = speed;
    for (std::size_t guard = 0; left > 0.0 && guard < 4 * path.size(); ++guard) {
      auto [tx, ty] = path[next % path.size()];
      double d = std::hypot(tx - cx, ty - cy);
      if (d <= left) {
        cx = tx;
        cy = ty;
        left -= d;
        next = (next + 1) % path.size();
      } else {
        cx += (tx - cx) / d * left;
        cy += (ty - cy) / d * left;
        left = 0.0;
      }
    }
  }
};

Mover MakeMover(const SyntheticSpec& s, int n_waypoints, Rng& rng) {
  std::uniform_real_distribution<double> ux(s.target_w / 2 + 2, s.width - s.target_w / 2 - 2);
  std::uniform_real_distribution<double> uy(s.target_h / 2 + 2, s.height - s.target_h / 2 - 2);
  Mover m;
  for (int i = 0; i < n_waypoints; ++i) m.path.push_back({ux(rng), uy(rng)});
  m.cx = m.path[0].first;
  m.cy = m.path[0].second;
  return m;
}

bool Inside(const BoundingBox& b, int i, int j) {
  double x = j + 0.5, y = i + 0.5;
  return x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
}

// Two-tone quadrant pattern anchored to the object's box; coarse enough to
// stay stable under the stride-8 feature grid.
void PaintTexture(Tensor& vis, const BoundingBox& b) {
  static const double kColA[3] = {0.90, 0.20, 0.10};
  static const double kColB[3] = {0.95, 0.85, 0.20};
  int h = vis.dim(1), w = vis.dim(2);
  for (int i = std::max(0, static_cast<int>(b.y)); i < std::min(h, static_cast<int>(b.y + b.h) + 1);
       ++i) {
    for (int j = std::max(0, static_cast<int>(b.x));
         j < std::min(w, static_cast<int>(b.x + b.w) + 1); ++j) {
      if (!Inside(b, i, j)) continue;
      int u = (j + 0.5 - b.x) < 0.5 * b.w ? 0 : 1;
      int v = (i + 0.5 - b.y) < 0.5 * b.h ? 0 : 1;
      const double* col = ((u + v) & 1) ? kColA : kColB;
      for (int c = 0; c < 3; ++c) vis.at(c, i, j) = col[c];
    }
  }
}

void PaintThermalBlob(Tensor& th, const BoundingBox& b) {
  int h = th.dim(1), w = th.dim(2);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (!Inside(b, i, j)) continue;
      double dx = (j + 0.5 - b.cx()) / (0.5 * b.w), dy = (i + 0.5 - b.cy()) / (0.5 * b.h);
      th.at(0, i, j) = 0.95 - 0.15 * std::min(1.0, dx * dx + dy * dy);
    }
  }
}

void FillBox(Tensor& t, const BoundingBox& b, double v) {
  for (int i = 0; i < t.dim(1); ++i)
    for (int j = 0; j < t.dim(2); ++j)
      if (Inside(b, i, j))
        for (int c = 0; c < t.dim(0); ++c) t.at(c, i, j) = v;
}

}  // namespace

SequenceRecord GenerateSequence(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.Validate();
  Rng rng(seed);
  const int w = spec.width, h = spec.height;

  // Static background: smooth colour gradients plus a few clutter patches.
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Tensor bg_vis({3, h, w});
  Tensor bg_th({1, h, w});
  double phase[3], freq = 2.0 * M_PI / std::max(w, h);
  for (double& p : phase) p = u01(rng) * 2.0 * M_PI;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        bg_vis.at(c, i, j) = 0.45 + 0.12 * std::sin(freq * (j + 0.7 * i) + phase[c]);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) bg_th.at(0, i, j) = 0.22 + 0.05 * std::sin(freq * (i - j) + phase[0]);
  for (int k = 0; k < 6; ++k) {
    BoundingBox patch{u01(rng) * w, u01(rng) * h, 6 + u01(rng) * 14, 6 + u01(rng) * 14};
    double col[3] = {u01(rng), u01(rng), u01(rng)};
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        if (Inside(patch, i, j))
          for (int c = 0; c < 3; ++c) bg_vis.at(c, i, j) = 0.2 + 0.6 * col[c];
  }

  Mover target = MakeMover(spec, spec.waypoints, rng);
  std::vector<Mover> distractors;
  for (int d = 0; d < spec.distractors; ++d) {
    distractors.push_back(MakeMover(spec, std::max(2, spec.waypoints), rng));
  }
  std::normal_distribution<double> noise(0.0, 1.0);

  SequenceRecord seq;
  seq.name = "synth_" + std::to_string(seed);
  if (spec.occlusion_start >= 0 && spec.occlusion_length > 0) seq.attributes.push_back("occlusion");
  bool fast = spec.teleport_frame >= 0 || spec.speed >= kFastSpeed;
  if (fast) seq.attributes.push_back("fast_motion");
  if (spec.distractors > 0) seq.attributes.push_back("distractor");
  if (spec.occlusion_length == 0 && !fast) seq.attributes.push_back("easy");

  for (int f = 0; f < spec.frames; ++f) {
    if (f > 0) {
      if (f == spec.teleport_frame) {
        std::uniform_real_distribution<double> ux(spec.target_w / 2 + 2,
                                                  w - spec.target_w / 2 - 2);
        std::uniform_real_distribution<double> uy(spec.target_h / 2 + 2,
                                                  h - spec.target_h / 2 - 2);
        bool placed = false;
        for (int tries = 0; tries < 10000 && !placed; ++tries) {
          double nx = ux(rng), ny = uy(rng);
          if (std::hypot(nx - target.cx, ny - target.cy) >= spec.teleport_min_dist) {
            target.cx = nx;
            target.cy = ny;
            placed = true;
          }
        }
        if (!placed) throw ConfigError("synth: no teleport destination far enough away");
      } else {
        target.Advance(spec.speed);
      }
      for (Mover& m : distractors) m.Advance(spec.speed);
    }
    BoundingBox box = BoundingBox::FromCenter(target.cx, target.cy, spec.target_w, spec.target_h);

    Tensor vis = bg_vis;
    Tensor th = bg_th;
    for (const Mover& m : distractors) {
      PaintTexture(vis, BoundingBox::FromCenter(m.cx, m.cy, spec.target_w, spec.target_h));
    }
    PaintTexture(vis, box);
    PaintThermalBlob(th, box);
    if (spec.noise > 0.0) {
      for (double& v : vis.values()) v = std::clamp(v + spec.noise * noise(rng), 0.0, 1.0);
      for (double& v : th.values()) v = std::clamp(v + spec.noise * noise(rng), 0.0, 1.0);
    }
    if (spec.Occluded(f)) {
      BoundingBox occ{box.x - kOccluderMargin, box.y - kOccluderMargin,
                      box.w + 2 * kOccluderMargin, box.h + 2 * kOccluderMargin};
      FillBox(vis, occ, kOccluderVisible);
      FillBox(th, occ, kOccluderThermal);
    }
    seq.frames.push_back({{std::move(vis), Modality::kVisible}, ThermalFromGray(th)});
    seq.boxes.push_back(box);
  }
  return seq;
}

}  // namespace mfg
