#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lambada/eval.hpp"

namespace lambada {

/// Sectioned `key = value` file. '#' and ';' start comments.
struct IniFile {
  /// section -> key -> (value, line)
  std::map<std::string, std::map<std::string, std::pair<std::string, std::size_t>>> sections;

  static IniFile parse(std::istream& in, const std::string& source = {});
  static IniFile load(const std::filesystem::path& path);
};

/// Every config error found, reported together.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// "1-5,8,10" -> {1,2,3,4,5,8,10}.
std::vector<std::uint64_t> parse_int_list(std::string_view s);
bool parse_bool(std::string_view s);

/// Applies every recognised key; unknown sections and keys are errors.
ExperimentConfig config_from_ini(const IniFile& ini, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON dump of a config, used in run manifests.
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace lambada
