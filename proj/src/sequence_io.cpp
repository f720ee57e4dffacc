#include "mfgnet/sequence_io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>

namespace fs = std::filesystem;

namespace mfg {

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void WriteBoxes(const std::string& path, const std::vector<BoundingBox>& boxes) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const BoundingBox& b : boxes) {
    out << FormatDouble(b.x) << ',' << FormatDouble(b.y) << ',' << FormatDouble(b.w) << ','
        << FormatDouble(b.h) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

std::vector<double> ParseRow(const std::string& line, const std::string& path, int lineno) {
  std::vector<double> vals;
  std::string tok;
  auto flush = [&]() {
    if (tok.empty()) return;
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw IoError(path + ":" + std::to_string(lineno) + ": cannot parse '" + tok + "'");
    }
    vals.push_back(v);
    tok.clear();
  };
  for (char c : line) {
    if (c == ',' || c == '\t' || c == ' ' || c == '\r' || c == ';') {
      flush();
    } else {
      tok.push_back(c);
    }
  }
  flush();
  if (vals.size() != 4) {
    throw IoError(path + ":" + std::to_string(lineno) + ": expected 4 values, got " +
                  std::to_string(vals.size()));
  }
  return vals;
}

}  // namespace

BoxFormat DetectBoxFormat(const std::string& filename,
                          const std::vector<std::vector<double>>& rows, int image_w,
                          int image_h) {
  if (fs::path(filename).filename().string().rfind("groundTruth_", 0) == 0) {
    return BoxFormat::kCorners;
  }
  if (image_w <= 0 || image_h <= 0 || rows.empty()) return BoxFormat::kXywh;
  bool corners_fit = true, xywh_overflows = false;
  for (const auto& r : rows) {
    if (!(r[2] > r[0] && r[3] > r[1]) || r[0] < 0 || r[1] < 0 || r[2] > image_w + 1 ||
        r[3] > image_h + 1) {
      corners_fit = false;
    }
    if (r[0] + r[2] > image_w + 1 || r[1] + r[3] > image_h + 1) xywh_overflows = true;
  }
  return corners_fit && xywh_overflows ? BoxFormat::kCorners : BoxFormat::kXywh;
}

std::vector<BoundingBox> ReadBoxes(const std::string& path, BoxFormat format, int image_w,
                                   int image_h) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(ParseRow(line, path, lineno));
  }
  if (format == BoxFormat::kAuto) format = DetectBoxFormat(path, rows, image_w, image_h);
  std::vector<BoundingBox> boxes;
  for (const auto& r : rows) {
    if (format == BoxFormat::kCorners) {
      boxes.push_back({r[0], r[1], r[2] - r[0], r[3] - r[1]});
    } else {
      boxes.push_back({r[0], r[1], r[2], r[3]});
    }
  }
  return boxes;
}

const std::vector<std::string>& GroundTruthNames() {
  static const std::vector<std::string> names = {"groundtruth.txt", "groundTruth_v.txt",
                                                 "visible.txt", "init.txt",
                                                 "groundtruth_rect.txt"};
  return names;
}

namespace {

std::vector<fs::path> ImageFiles(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("missing folder '" + dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

Tensor FromMat(const cv::Mat& m) {
  int h = m.rows, w = m.cols, c = m.channels();
  Tensor t({c, h, w});
  for (int i = 0; i < h; ++i) {
    const unsigned char* row = m.ptr<unsigned char>(i);
    for (int j = 0; j < w; ++j)
      for (int k = 0; k < c; ++k) t.at(k, i, j) = row[j * c + k] / 255.0;
  }
  return t;
}

cv::Mat ToMat(const Tensor& t, int channels) {
  int h = t.dim(1), w = t.dim(2);
  cv::Mat m(h, w, channels == 3 ? CV_8UC3 : CV_8UC1);
  for (int i = 0; i < h; ++i) {
    unsigned char* row = m.ptr<unsigned char>(i);
    for (int j = 0; j < w; ++j)
      for (int k = 0; k < channels; ++k) {
        double v = std::clamp(t.at(k, i, j), 0.0, 1.0);
        row[j * channels + k] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
  }
  return m;
}

ImageTensor ReadVisible(const fs::path& p) {
  cv::Mat bgr = cv::imread(p.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("cannot read image '" + p.string() + "'");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return {FromMat(rgb), Modality::kVisible};
}

ImageTensor ReadThermal(const fs::path& p) {
  cv::Mat gray = cv::imread(p.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw IoError("cannot read image '" + p.string() + "'");
  return ThermalFromGray(FromMat(gray));
}

}  // namespace

SequenceRecord LoadSequence(const std::string& dir) {
  fs::path root(dir);
  if (!fs::is_directory(root)) throw IoError("sequence directory '" + dir + "' not found");
  auto vis = ImageFiles(root / "visible");
  auto ir = ImageFiles(root / "infrared");
  if (vis.size() != ir.size()) {
    throw IoError("'" + dir + "': " + std::to_string(vis.size()) + " visible vs " +
                  std::to_string(ir.size()) + " infrared frames");
  }
  SequenceRecord seq;
  seq.name = root.filename().string();
  if (seq.name.empty()) seq.name = root.parent_path().filename().string();
  for (std::size_t i = 0; i < vis.size(); ++i) {
    seq.frames.push_back({ReadVisible(vis[i]), ReadThermal(ir[i])});
  }
  fs::path gt_path;
  for (const std::string& name : GroundTruthNames()) {
    if (fs::exists(root / name)) {
      gt_path = root / name;
      break;
    }
  }
  if (gt_path.empty()) throw IoError("'" + dir + "': no ground-truth file");
  seq.boxes = ReadBoxes(gt_path.string(), BoxFormat::kAuto, seq.width(), seq.height());
  if (seq.boxes.size() != seq.frames.size()) {
    throw IoError("'" + dir + "': " + std::to_string(seq.frames.size()) + " frames but " +
                  std::to_string(seq.boxes.size()) + " ground-truth boxes");
  }
  std::ifstream attr(root / "attributes.txt");
  std::string tag;
  while (std::getline(attr, tag, ',')) {
    tag.erase(std::remove_if(tag.begin(), tag.end(), ::isspace), tag.end());
    if (!tag.empty()) seq.attributes.push_back(tag);
  }
  CheckSequence(seq);
  return seq;
}

void SaveSequence(const SequenceRecord& seq, const std::string& dir) {
  CheckSequence(seq);
  fs::path root(dir);
  fs::create_directories(root / "visible");
  fs::create_directories(root / "infrared");
  for (int i = 0; i < seq.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.png", i);
    cv::Mat rgb = ToMat(seq.frames[i].visible.data, 3), bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite((root / "visible" / name).string(), bgr) ||
        !cv::imwrite((root / "infrared" / name).string(), ToMat(seq.frames[i].thermal.data, 1))) {
      throw IoError("cannot write frame " + std::to_string(i) + " to '" + dir + "'");
    }
  }
  WriteBoxes((root / "groundtruth.txt").string(), seq.boxes);
  std::ofstream attr(root / "attributes.txt");
  for (std::size_t i = 0; i < seq.attributes.size(); ++i) {
    attr << (i ? "," : "") << seq.attributes[i];
  }
  attr << '\n';
}

void SaveGray8(const Tensor& map, const std::string& path) {
  Tensor t = map.ndim() == 2 ? map.Reshaped({1, map.dim(0), map.dim(1)}) : map;
  if (t.ndim() != 3 || t.dim(0) != 1) throw ShapeError("SaveGray8 expects HxW or 1xHxW");
  if (!cv::imwrite(path, ToMat(t, 1))) throw IoError("cannot write '" + path + "'");
}

Tensor LoadMask(const std::string& path, int size) {
  cv::Mat gray = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw IoError("cannot read mask '" + path + "'");
  cv::Mat resized;
  cv::resize(gray, resized, cv::Size(size, size), 0, 0, cv::INTER_NEAREST);
  Tensor m({size, size});
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) m.at(i, j) = resized.at<unsigned char>(i, j) > 127 ? 1.0 : 0.0;
  return m;
}

}  // namespace mfg
