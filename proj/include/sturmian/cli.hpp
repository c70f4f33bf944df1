#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sturmian {

inline constexpr const char* kToolVersion = "0.1.0";

// Flat experiment description. Keys in the key=value form match the long
// flag names with '-' replaced by '_'.
struct RunConfig {
    std::string subcommand;
    std::optional<std::string> freq;
    std::optional<double> lambda;
    std::vector<double> lambda_grid;
    std::optional<double> delta;
    std::optional<int> K;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::string> output;
    std::string format = "csv";
    unsigned threads = 0;
    bool blocks = false;
    std::optional<double> z;
    std::optional<double> z_min;
    std::optional<double> z_max;
    std::optional<std::size_t> z_points;
    std::optional<double> omega;
    std::optional<long> L;
    std::vector<double> T_grid;
    std::vector<double> p_grid;
    std::optional<std::string> plot;
    std::optional<std::size_t> max_bands;
    std::optional<double> prune_ratio;
    bool evidence = false;
    std::optional<std::uint64_t> max_coeff;
    std::optional<std::size_t> beam;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// key=value per line; only set fields are written.
std::string emit_config(const RunConfig& cfg);
// Blank lines and lines starting with '#' are ignored. Throws ValidationError
// naming the offending key.
RunConfig parse_config(std::string_view text);
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);
std::vector<std::string> config_keys();

// Checks subcommand-specific requirements and fills defaults.
void validate_config(RunConfig& cfg);

// Runs one subcommand. Returns 0 on success, 2 on validation errors, 3 on
// numeric failures. Primary output goes to cfg.output if set, else `out`.
int run_config(RunConfig cfg, std::ostream& out, std::ostream& err);

// Full command line: `<subcommand> [--flag value ...] [key=value ...]`.
// Precedence: flags over positional key=value over --config file.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sturmian
