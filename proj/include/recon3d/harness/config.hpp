#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace recon3d {

/// Flat sectioned key=value configuration text, e.g.
///   [data]
///   categories = 13
///   # comment
/// Section and key order is preserved on serialization.
class ConfigFile {
public:
    static ConfigFile parse_string(const std::string& text);
    static ConfigFile parse_file(const std::filesystem::path& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    long get_int(const std::string& section, const std::string& key, long fallback) const;
    double get_real(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    std::string serialize() const;
    void save(const std::filesystem::path& path) const;

private:
    // section -> (key -> value); std::map keeps serialization deterministic
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace recon3d
