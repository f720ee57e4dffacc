#ifndef MFGNET_CONFIG_HPP_
#define MFGNET_CONFIG_HPP_

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKeyDoc {
  const char* key;
  const char* default_value;
  const char* doc;
};

// Every key the project understands, with its default and a one-line doc.
const std::vector<ConfigKeyDoc>& ConfigKeys();

// Flat `key = value` configuration. Lines starting with '#' are comments.
// Unknown keys are rejected on load; typed getters fall back to the
// documented default.
class Config {
 public:
  Config() = default;

  static Config FromFile(const std::string& path);
  static Config FromString(const std::string& text, const std::string& origin = "<string>");

  // Overrides from environment variables named prefix + KEY, where KEY is the
  // key upper-cased with '.' replaced by '_' (mfgnet.kernel_size ->
  // MFG_MFGNET_KERNEL_SIZE).
  void ApplyEnvOverrides(const std::string& prefix = "MFG_");

  void Set(const std::string& key, const std::string& value);
  bool Has(const std::string& key) const { return values_.count(key) != 0; }

  std::string GetString(const std::string& key) const;
  int GetInt(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  std::vector<int> GetIntList(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string Dump() const;

  static std::string EnvName(const std::string& prefix, const std::string& key);

 private:
  std::string Raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

// Throws ConfigError naming the key unless it is registered.
void RequireKnownKey(const std::string& key);

}  // namespace mfg

#endif  // MFGNET_CONFIG_HPP_
