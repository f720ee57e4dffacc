#ifndef MFGNET_ARCHIVE_HPP_
#define MFGNET_ARCHIVE_HPP_

#include <map>
#include <stdexcept>
#include <string>

#include "mfgnet/nn.hpp"
#include "mfgnet/tensor.hpp"

namespace mfg {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TensorArchive = std::map<std::string, Tensor>;

// Binary layout (little endian):
//   "MFGA" u32 version=1 u64 count
//   count x { u32 key_len, key bytes, u32 ndim, i32 dims[ndim], f64 data[] }
void SaveArchive(const std::string& path, const TensorArchive& archive);
TensorArchive LoadArchive(const std::string& path);

void SaveParams(const std::string& path, const ParamList& params);
void LoadParams(const std::string& path, const ParamList& params, bool strict = true);

}  // namespace mfg

#endif  // MFGNET_ARCHIVE_HPP_
