#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace daug {

// String-keyed overrides, as read from a `key = value` config file or CLI.
using ConfigMap = std::map<std::string, std::string>;

// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
// Duplicate keys and lines without '=' are ParseErrors.
ConfigMap parse_config_text(const std::string& text, const std::string& origin = "<config>");
ConfigMap load_config_file(const std::string& path);

// Typed accessors. Each throws ConfigError naming the key when the value
// does not parse.
double config_double(const std::string& key, const std::string& value);
long long config_int(const std::string& key, const std::string& value);
std::uint64_t config_u64(const std::string& key, const std::string& value);
bool config_bool(const std::string& key, const std::string& value);
std::vector<long long> config_int_list(const std::string& key, const std::string& value);

// Throws ConfigError listing every key of `cfg` not present in `allowed`.
void reject_unknown_keys(const ConfigMap& cfg, const std::vector<std::string>& allowed,
                         const std::string& context);

}  // namespace daug
