#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lobexec/boundary.hpp"

namespace lobexec::cli {

/// One problem found while reading a run configuration. line is 0 for keys that
/// are missing, -1 for values taken from the environment and -2 for command-line flags.
struct ConfigIssue {
    std::string key;
    int line;
    std::string message;
};

class ConfigError : public std::runtime_error {
 public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
    std::vector<ConfigIssue> issues_;
};

struct RunConfig {
    // levy
    double mu = 0.0;
    bool mu_matching = false;
    double sigma2 = 0.0;
    std::string jumps_kind = "none";  // none | vg | vg_arith | table
    VarianceGammaParams vg;
    std::string jumps_table;
    // book
    std::string book_kind;  // block | table
    double book_n = 0.0;
    double book_xbar = -1.0;
    std::string book_table;
    // resilience
    std::string resilience_kind;  // exp | table
    double lambda = 0.0;
    std::string resilience_table;
    // agent
    double A = 0.0, b = 0.0, c = 0.0, y0 = 0.0, z0 = 0.0;
    // numerics
    unsigned threads = 1;
    std::uint64_t seed = 1;
    std::size_t boundary_nodes = 2048;
    double y_max = 0.0;  // 0: derived from y0
    double dt_max = 0.05;
    double path_tol = 1e-8;

    /// Where each key was set, using the same line codes as ConfigIssue.
    std::map<std::string, int> origin;
    int line_of(const std::string& key) const;

    /// Upper end of the boundary table.
    double table_y_max() const;
};

/// Looks up an environment variable; returns nullptr when unset.
using EnvLookup = std::function<const char*(const char*)>;

/// Environment variable that overrides a key: LOBEXEC_ + key upper-cased with '.' -> '_'.
std::string env_name(const std::string& key);

/// Parses the flat `section.key = value` format. Relative table paths resolve
/// against base_dir. Every problem is collected before ConfigError is thrown.
RunConfig parse_config_text(const std::string& text, const std::string& base_dir, const EnvLookup& env);
RunConfig parse_config(const std::string& path, const EnvLookup& env);
RunConfig parse_config(const std::string& path);

/// Builds the market and checks the agent's starting state. Throws ConfigError.
Market build_market(const RunConfig& cfg);

std::vector<std::string> known_keys();

}  // namespace lobexec::cli
