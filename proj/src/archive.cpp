#include "mfgnet/archive.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace mfg {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'G', 'A'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void Put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T Get(std::ifstream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("truncated archive '" + path + "'");
  return v;
}

}  // namespace

void SaveArchive(const std::string& path, const TensorArchive& archive) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write archive '" + path + "'");
  os.write(kMagic, 4);
  Put(os, kVersion);
  Put(os, static_cast<std::uint64_t>(archive.size()));
  for (const auto& [key, t] : archive) {
    Put(os, static_cast<std::uint32_t>(key.size()));
    os.write(key.data(), static_cast<std::streamsize>(key.size()));
    Put(os, static_cast<std::uint32_t>(t.ndim()));
    for (int d : t.shape()) Put(os, static_cast<std::int32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw IoError("failed writing archive '" + path + "'");
}

TensorArchive LoadArchive(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open archive '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IoError("'" + path + "' is not an archive");
  auto version = Get<std::uint32_t>(is, path);
  if (version != kVersion) throw IoError("unsupported archive version in '" + path + "'");
  auto count = Get<std::uint64_t>(is, path);
  TensorArchive out;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto len = Get<std::uint32_t>(is, path);
    std::string key(len, '\0');
    is.read(key.data(), len);
    auto ndim = Get<std::uint32_t>(is, path);
    Shape shape(ndim);
    for (auto& d : shape) d = Get<std::int32_t>(is, path);
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) throw IoError("truncated archive '" + path + "'");
    out.emplace(std::move(key), std::move(t));
  }
  return out;
}

void SaveParams(const std::string& path, const ParamList& params) {
  SaveArchive(path, SnapshotParams(params));
}

void LoadParams(const std::string& path, const ParamList& params, bool strict) {
  RestoreParams(params, LoadArchive(path), strict);
}

}  // namespace mfg
