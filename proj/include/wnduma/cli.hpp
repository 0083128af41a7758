#ifndef WNDUMA_CLI_HPP
#define WNDUMA_CLI_HPP

// Command-line front end. Configuration comes from an INI-style file
// ("[section]" headers, "key = value" lines, '#' or ';' comments) with
// command-line flags layered on top.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wnduma/classifier.hpp"
#include "wnduma/training.hpp"
#include "wnduma/wordnet.hpp"

namespace wnduma::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumericalError = 3;

/// "section.key" -> raw value.
using KeyValues = std::map<std::string, std::string>;

KeyValues default_values();
KeyValues parse_config_text(std::string_view text, const std::string& source);
KeyValues read_config_file(const std::filesystem::path& path);

struct CliConfig {
    std::string data_dir;
    std::string train_file;
    std::string dev_file;
    std::string test_file;
    std::size_t max_seq_len = 150;
    std::size_t min_freq = 1;

    std::string wordnet_dir;
    bool use_definitions = true;
    wordnet::EnrichOptions enrich;

    ModelConfig model;
    TrainConfig train = TrainConfig::desk();

    std::string out_dir;
    std::string metrics_file;
    std::string checkpoint;
    std::string predictions_file;

    std::size_t gradcheck_seq_len = 32;
    std::size_t gradcheck_samples = 6;
    double gradcheck_tolerance = 1e-4;

    /// Canonical values of every key, after defaults, file and flags.
    KeyValues values;

    /// Model shape for a given vocabulary and sequence length.
    ModelConfig model_for(Index vocab_size, Index seq_len) const;
    std::filesystem::path data_path(const std::string& file) const;
    std::filesystem::path out_path(const std::string& file) const;
};

/// Validates every key and returns the typed configuration. Unknown keys and
/// bad values are collected and reported together in one ConfigError.
CliConfig resolve(const KeyValues& values);

/// Effective configuration as a JSON object {"section": {"key": value}}.
std::string effective_json(const CliConfig& config);

/// Entry point; returns the exit code. Output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace wnduma::cli

#endif  // WNDUMA_CLI_HPP
