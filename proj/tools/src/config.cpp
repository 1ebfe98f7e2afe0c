#include "lobexec_cli/config.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace lobexec::cli {

namespace {

namespace fs = std::filesystem;

struct Entry {
    std::string value;
    int line;
};

enum class Kind { Number, Count, Text, Path, Drift };

struct KeySpec {
    const char* name;
    Kind kind;
};

// every accepted key; requirements depend on the chosen kinds and are checked below
constexpr KeySpec kKeys[] = {
    {"levy.mu", Kind::Drift},
    {"levy.sigma2", Kind::Number},
    {"levy.jumps.kind", Kind::Text},
    {"levy.jumps.vg.rho", Kind::Number},
    {"levy.jumps.vg.eta", Kind::Number},
    {"levy.jumps.vg.theta", Kind::Number},
    {"levy.jumps.table.path", Kind::Path},
    {"book.kind", Kind::Text},
    {"book.block.n", Kind::Number},
    {"book.block.xbar", Kind::Number},
    {"book.table.path", Kind::Path},
    {"resilience.kind", Kind::Text},
    {"resilience.exp.lambda", Kind::Number},
    {"resilience.table.path", Kind::Path},
    {"agent.A", Kind::Number},
    {"agent.b", Kind::Number},
    {"agent.c", Kind::Number},
    {"agent.y0", Kind::Number},
    {"agent.z0", Kind::Number},
    {"numerics.threads", Kind::Count},
    {"numerics.seed", Kind::Count},
    {"numerics.boundary_nodes", Kind::Count},
    {"numerics.y_max", Kind::Number},
    {"numerics.dt_max", Kind::Number},
    {"numerics.path_tol", Kind::Number},
};

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

bool to_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

bool to_count(const std::string& s, std::uint64_t& out) {
    if (s.empty() || !std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtoull(s.c_str(), &end, 10);
    return errno == 0 && end == s.c_str() + s.size();
}

class Reader {
 public:
    Reader(std::map<std::string, Entry> entries, std::string base, std::vector<ConfigIssue>& issues)
        : entries_(std::move(entries)), base_(std::move(base)), issues_(issues) {}

    std::map<std::string, int> origins() const {
        std::map<std::string, int> o;
        for (const auto& [k, e] : entries_) o[k] = e.line;
        return o;
    }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    int line(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }
    const std::string& raw(const std::string& key) const { return entries_.at(key).value; }

    void require(const std::string& key, const std::string& why) {
        if (!has(key)) issues_.push_back({key, 0, "missing required key" + why});
    }
    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        if (!to_number(raw(key), out)) bad(key, "expected a finite number, got '" + raw(key) + "'");
    }
    template <class T>
    void count(const std::string& key, T& out) {
        if (!has(key)) return;
        std::uint64_t v = 0;
        if (!to_count(raw(key), v))
            bad(key, "expected a non-negative integer, got '" + raw(key) + "'");
        else
            out = static_cast<T>(v);
    }
    void text(const std::string& key, std::string& out, std::initializer_list<const char*> allowed) {
        if (!has(key)) return;
        for (const char* a : allowed)
            if (raw(key) == a) {
                out = raw(key);
                return;
            }
        std::string list;
        for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
        bad(key, "'" + raw(key) + "' is not one of {" + list + "}");
    }
    void path(const std::string& key, std::string& out) {
        if (!has(key)) return;
        fs::path p(raw(key));
        if (p.is_relative() && !base_.empty()) p = fs::path(base_) / p;
        std::error_code ec;
        if (!fs::is_regular_file(p, ec))
            bad(key, "file '" + p.string() + "' does not exist");
        else
            out = p.string();
    }
    void bad(const std::string& key, const std::string& msg) { issues_.push_back({key, line(key), msg}); }

 private:
    std::map<std::string, Entry> entries_;
    std::string base_;
    std::vector<ConfigIssue>& issues_;
};

std::string where(int line) {
    if (line > 0) return "line " + std::to_string(line);
    if (line == -1) return "environment";
    if (line < 0) return "command line";
    return "not set";
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "configuration has " << issues.size() << " problem(s):";
          for (const auto& i : issues) os << "\n  " << i.key << " (" << where(i.line) << "): " << i.message;
          return os.str();
      }()),
      issues_(std::move(issues)) {}

int RunConfig::line_of(const std::string& key) const {
    const auto it = origin.find(key);
    return it == origin.end() ? 0 : it->second;
}

double RunConfig::table_y_max() const {
    if (y_max > 0.0) return y_max;
    return std::max(100.0, 1.25 * y0);
}

std::string env_name(const std::string& key) {
    std::string s = "LOBEXEC_";
    for (char ch : key) s += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

std::vector<std::string> known_keys() {
    std::vector<std::string> k;
    for (const auto& s : kKeys) k.emplace_back(s.name);
    return k;
}

RunConfig parse_config_text(const std::string& text, const std::string& base_dir, const EnvLookup& env) {
    std::vector<ConfigIssue> issues;
    std::map<std::string, Entry> entries;
    std::map<std::string, bool> known;
    for (const auto& s : kKeys) known[s.name] = true;

    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (n == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({line, n, "expected 'section.key = value'"});
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (!known.count(key)) {
            issues.push_back({key, n, "unknown key"});
            continue;
        }
        if (entries.count(key)) {
            issues.push_back({key, n, "duplicate key (first set on line " + std::to_string(entries[key].line) + ")"});
            continue;
        }
        if (value.empty()) {
            issues.push_back({key, n, "empty value"});
            continue;
        }
        entries[key] = {value, n};
    }
    if (env) {
        for (const auto& s : kKeys)
            if (const char* v = env(env_name(s.name).c_str())) entries[s.name] = {unquote(trim(v)), -1};
    }

    RunConfig cfg;
    Reader r(std::move(entries), base_dir, issues);
    for (const char* k : {"levy.mu", "levy.sigma2", "book.kind", "resilience.kind", "agent.A", "agent.b",
                          "agent.c", "agent.y0", "agent.z0"})
        r.require(k, "");

    if (r.has("levy.mu")) {
        if (r.raw("levy.mu") == "matching")
            cfg.mu_matching = true;
        else
            r.number("levy.mu", cfg.mu);
    }
    r.number("levy.sigma2", cfg.sigma2);
    r.text("levy.jumps.kind", cfg.jumps_kind, {"none", "vg", "vg_arith", "table"});
    if (cfg.jumps_kind == "vg" || cfg.jumps_kind == "vg_arith") {
        for (const char* k : {"levy.jumps.vg.rho", "levy.jumps.vg.eta", "levy.jumps.vg.theta"})
            r.require(k, " for jump kind " + cfg.jumps_kind);
        r.number("levy.jumps.vg.rho", cfg.vg.rho);
        r.number("levy.jumps.vg.eta", cfg.vg.eta);
        r.number("levy.jumps.vg.theta", cfg.vg.theta);
    } else if (cfg.jumps_kind == "table") {
        r.require("levy.jumps.table.path", " for jump kind table");
        r.path("levy.jumps.table.path", cfg.jumps_table);
    }
    if (cfg.mu_matching && cfg.jumps_kind != "vg" && cfg.jumps_kind != "vg_arith")
        r.bad("levy.mu", "'matching' needs variance-gamma jumps");

    r.text("book.kind", cfg.book_kind, {"block", "table"});
    if (cfg.book_kind == "block") {
        r.require("book.block.n", " for book kind block");
        r.number("book.block.n", cfg.book_n);
        r.number("book.block.xbar", cfg.book_xbar);
    } else if (cfg.book_kind == "table") {
        r.require("book.table.path", " for book kind table");
        r.path("book.table.path", cfg.book_table);
    }
    r.text("resilience.kind", cfg.resilience_kind, {"exp", "table"});
    if (cfg.resilience_kind == "exp") {
        r.require("resilience.exp.lambda", " for resilience kind exp");
        r.number("resilience.exp.lambda", cfg.lambda);
    } else if (cfg.resilience_kind == "table") {
        r.require("resilience.table.path", " for resilience kind table");
        r.path("resilience.table.path", cfg.resilience_table);
    }

    r.number("agent.A", cfg.A);
    r.number("agent.b", cfg.b);
    r.number("agent.c", cfg.c);
    r.number("agent.y0", cfg.y0);
    r.number("agent.z0", cfg.z0);
    if (r.has("agent.A") && !(cfg.A > 0.0)) r.bad("agent.A", "risk aversion must be positive");
    if (r.has("agent.b") && !(cfg.b > 0.0)) r.bad("agent.b", "initial price must be positive");
    if (r.has("agent.y0") && cfg.y0 < 0.0) r.bad("agent.y0", "position must be non-negative");
    if (r.has("agent.z0") && cfg.z0 > 0.0) r.bad("agent.z0", "book state must be <= 0");

    r.count("numerics.threads", cfg.threads);
    r.count("numerics.seed", cfg.seed);
    r.count("numerics.boundary_nodes", cfg.boundary_nodes);
    r.number("numerics.y_max", cfg.y_max);
    r.number("numerics.dt_max", cfg.dt_max);
    r.number("numerics.path_tol", cfg.path_tol);
    if (r.has("numerics.threads") && cfg.threads == 0) r.bad("numerics.threads", "must be at least 1");
    if (r.has("numerics.boundary_nodes") && cfg.boundary_nodes < 16)
        r.bad("numerics.boundary_nodes", "must be at least 16");
    if (cfg.y_max < 0.0) r.bad("numerics.y_max", "must be >= 0 (0 picks a default)");
    if (!(cfg.dt_max > 0.0)) r.bad("numerics.dt_max", "must be positive");
    if (!(cfg.path_tol > 0.0)) r.bad("numerics.path_tol", "must be positive");

    if (!issues.empty()) throw ConfigError(std::move(issues));
    cfg.origin = r.origins();
    return cfg;
}

RunConfig parse_config(const std::string& path, const EnvLookup& env) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({{"<file>", 0, "cannot open '" + path + "'"}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), fs::path(path).parent_path().string(), env);
}

RunConfig parse_config(const std::string& path) {
    return parse_config(path, [](const char* name) -> const char* { return std::getenv(name); });
}

Market build_market(const RunConfig& cfg) {
    std::vector<ConfigIssue> issues;
    auto fail = [&](const std::string& key, const std::exception& e) {
        issues.push_back({key, cfg.line_of(key), e.what()});
    };

    JumpSpec jumps = NoJumps{};
    double mu = cfg.mu;
    try {
        if (cfg.jumps_kind == "vg" || cfg.jumps_kind == "vg_arith") {
            cfg.vg.validate();
            if (cfg.mu_matching) mu = cfg.vg.matching_drift();
            if (cfg.jumps_kind == "vg")
                jumps = LinearVarianceGamma{cfg.vg};
            else
                jumps = ArithmeticVarianceGamma{cfg.vg};
        } else if (cfg.jumps_kind == "table") {
            auto [z, d] = read_two_column_table(cfg.jumps_table);
            jumps = TabulatedJumpDensity{z, d};
        }
    } catch (const std::exception& e) {
        fail("levy.jumps.kind", e);
    }
    std::optional<LevyModel> levy;
    try {
        levy.emplace(mu, cfg.sigma2, jumps);
    } catch (const std::exception& e) {
        fail("levy.mu", e);
    }
    std::optional<BookShape> book;
    try {
        if (cfg.book_kind == "block") {
            book.emplace(BookShape::block(cfg.book_n, cfg.book_xbar));
        } else {
            auto [x, d] = read_two_column_table(cfg.book_table);
            book.emplace(BookShape::tabulated(x, d));
        }
    } catch (const std::exception& e) {
        fail("book.kind", e);
    }
    std::optional<Resilience> res;
    try {
        if (cfg.resilience_kind == "exp") {
            res.emplace(Resilience::exponential(cfg.lambda));
        } else {
            auto [x, h] = read_two_column_table(cfg.resilience_table);
            res.emplace(Resilience::tabulated(x, h));
        }
    } catch (const std::exception& e) {
        fail("resilience.kind", e);
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));

    Market m{*levy, *book, *res, cfg.A};
    try {
        m.validate();
    } catch (const std::exception& e) {
        throw ConfigError({{"agent.A", cfg.line_of("agent.A"), e.what()}});
    }
    const double zbar = m.book.zbar();
    if (cfg.z0 < zbar) {
        std::ostringstream os;
        os << "z0 = " << cfg.z0 << " lies below the book's lower limit " << zbar;
        issues.push_back({"agent.z0", cfg.line_of("agent.z0"), os.str()});
    } else if (cfg.y0 > 0.0) {
        const double ybar = m.ybar_A();
        if (std::isfinite(ybar) && !(cfg.z0 > cfg.y0 - ybar + zbar)) {
            std::ostringstream os;
            os << "starting state violates solvency z0 > y0 - ybar_A + zbar (" << cfg.z0 << " <= " << cfg.y0
               << " - " << ybar << " + " << zbar << ")";
            issues.push_back({"agent.y0", cfg.line_of("agent.y0"), os.str()});
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return m;
}

}  // namespace lobexec::cli
