#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace autoscope::config {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Nested key/value config tree. Grammar (one statement per line):
///
///   file    := { statement }
///   statement := comment | key "=" value | key "{" ... "}"
///   key     := [A-Za-z_][A-Za-z0-9_.-]*
///   value   := rest of line, trimmed; optional double quotes stripped
///   comment := "#" to end of line
///
/// Duplicate keys are errors. Typed getters mark keys consumed;
/// check_all_consumed() then rejects anything unknown (fail-fast).
class Node {
public:
    static Node parse(const std::string& text);
    static Node parse_file(const std::string& path);

    bool has(const std::string& key) const;
    const Node& child(const std::string& key) const;       // error if missing
    const Node* child_if(const std::string& key) const;    // nullptr if missing

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;  // comma separated

    /// Throws ConfigError naming the first unconsumed key (full dotted path).
    void check_all_consumed() const;

    const std::string& path() const { return path_; }

private:
    friend struct NodeAccess;

    struct Entry {
        std::string value;                // leaf payload ("" for sections)
        std::unique_ptr<Node> section;    // non-null for sections
        mutable bool consumed = false;
    };

    const Entry& lookup(const std::string& key) const;
    std::string full_key(const std::string& key) const;

    std::string path_;  // dotted location, for error messages
    std::vector<std::pair<std::string, Entry>> entries_;  // in file order
};

}  // namespace autoscope::config
