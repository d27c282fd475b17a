#include "autoscope/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace autoscope::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'))
            return false;
    return true;
}

std::string strip_quotes(std::string v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

struct Parser {
    std::vector<std::string> lines;
    std::size_t pos = 0;

    Node parse_block(const std::string& path);
};

}  // namespace

struct NodeAccess {
    static Node parse_lines(Parser& p, const std::string& path);
    static void add_value(Node& n, const std::string& key, const std::string& value);
    static void add_section(Node& n, const std::string& key, Node section);
    static void set_path(Node& n, const std::string& path) { n.path_ = path; }
};

void NodeAccess::add_value(Node& n, const std::string& key, const std::string& value) {
    for (const auto& [k, e] : n.entries_)
        if (k == key) throw ConfigError("duplicate key '" + n.full_key(key) + "'");
    Node::Entry entry;
    entry.value = value;
    n.entries_.emplace_back(key, std::move(entry));
}

void NodeAccess::add_section(Node& n, const std::string& key, Node section) {
    for (const auto& [k, e] : n.entries_)
        if (k == key) throw ConfigError("duplicate key '" + n.full_key(key) + "'");
    Node::Entry entry;
    entry.section = std::make_unique<Node>(std::move(section));
    n.entries_.emplace_back(key, std::move(entry));
}

Node NodeAccess::parse_lines(Parser& p, const std::string& path) {
    Node node;
    set_path(node, path);
    while (p.pos < p.lines.size()) {
        std::string line = p.lines[p.pos];
        // strip comments (outside quotes is enough for this grammar)
        bool in_quote = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quote = !in_quote;
            if (line[i] == '#' && !in_quote) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        ++p.pos;
        if (line.empty()) continue;
        if (line == "}") return node;

        if (const auto brace = line.find('{'); brace != std::string::npos) {
            const std::string key = trim(line.substr(0, brace));
            if (!valid_key(key)) throw ConfigError("bad section name '" + key + "'");
            if (trim(line.substr(brace + 1)) != "")
                throw ConfigError("unexpected text after '{' in section '" + key + "'");
            const std::string child_path = path.empty() ? key : path + "." + key;
            Node section = parse_lines(p, child_path);
            add_section(node, key, std::move(section));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value' or 'key {', got: " + line);
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) throw ConfigError("bad key '" + key + "'");
        add_value(node, key, strip_quotes(trim(line.substr(eq + 1))));
    }
    if (!path.empty()) throw ConfigError("unterminated section '" + path + "'");
    return node;
}

Node Node::parse(const std::string& text) {
    Parser p;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) p.lines.push_back(line);
    return NodeAccess::parse_lines(p, "");
}

Node Node::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

std::string Node::full_key(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
}

bool Node::has(const std::string& key) const {
    for (const auto& [k, e] : entries_)
        if (k == key) return true;
    return false;
}

const Node::Entry& Node::lookup(const std::string& key) const {
    for (const auto& [k, e] : entries_)
        if (k == key) {
            e.consumed = true;
            return e;
        }
    throw ConfigError("missing key '" + full_key(key) + "'");
}

const Node& Node::child(const std::string& key) const {
    const Entry& e = lookup(key);
    if (!e.section) throw ConfigError("'" + full_key(key) + "' is not a section");
    return *e.section;
}

const Node* Node::child_if(const std::string& key) const {
    if (!has(key)) return nullptr;
    return &child(key);
}

std::string Node::get_str(const std::string& key) const {
    const Entry& e = lookup(key);
    if (e.section) throw ConfigError("'" + full_key(key) + "' is a section, expected a value");
    return e.value;
}

std::string Node::get_str(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_str(key) : fallback;
}

double Node::get_double(const std::string& key) const {
    const std::string v = get_str(key);
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("'" + full_key(key) + "': expected a number, got '" + v + "'");
    return d;
}

double Node::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Node::get_int(const std::string& key) const {
    const double d = get_double(key);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw ConfigError("'" + full_key(key) + "': expected an integer");
    return i;
}

int Node::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t Node::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_str(key);
    char* end = nullptr;
    const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("'" + full_key(key) + "': expected an unsigned integer");
    return u;
}

bool Node::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + full_key(key) + "': expected a boolean");
}

std::vector<double> Node::get_doubles(const std::string& key) const {
    const std::string v = get_str(key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        char* end = nullptr;
        const double d = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0')
            throw ConfigError("'" + full_key(key) + "': bad number '" + item + "'");
        out.push_back(d);
    }
    if (out.empty()) throw ConfigError("'" + full_key(key) + "': empty list");
    return out;
}

void Node::check_all_consumed() const {
    for (const auto& [k, e] : entries_) {
        if (!e.consumed) throw ConfigError("unknown key '" + full_key(k) + "'");
        if (e.section) e.section->check_all_consumed();
    }
}

}  // namespace autoscope::config
