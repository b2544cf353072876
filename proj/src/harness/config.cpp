#include "recon3d/harness/config.hpp"

#include <fstream>
#include <sstream>

#include "recon3d/common/error.hpp"

namespace recon3d {

namespace {
std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile cfg;
    std::istringstream is(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw config_error("unterminated section header at line " + std::to_string(line_no));
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw config_error("empty section name at line " + std::to_string(line_no));
            cfg.sections_[section];
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error("expected key=value at line " + std::to_string(line_no));
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw config_error("empty key at line " + std::to_string(line_no));
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot read config: " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_string(buf.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

long ConfigFile::get_int(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stol(get(section, key, ""));
    } catch (const std::exception&) {
        throw config_error("config key " + section + "." + key + " is not an integer");
    }
}

double ConfigFile::get_real(const std::string& section, const std::string& key,
                            double fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stod(get(section, key, ""));
    } catch (const std::exception&) {
        throw config_error("config key " + section + "." + key + " is not a number");
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = get(section, key, "");
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("config key " + section + "." + key + " is not a boolean");
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
    sections_[section][key] = value;
}

std::string ConfigFile::serialize() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [section, keys] : sections_) {
        if (!first) os << "\n";
        first = false;
        os << '[' << section << "]\n";
        for (const auto& [key, value] : keys) os << key << " = " << value << "\n";
    }
    return os.str();
}

void ConfigFile::save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write config: " + path.string());
    f << serialize();
}

}  // namespace recon3d
