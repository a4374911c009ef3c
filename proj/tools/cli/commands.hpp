#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eden::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;   ///< the command ran but its contract did not hold
inline constexpr int kExitUsage = 2;  ///< bad flags or out-of-domain arguments
inline constexpr int kExitConfig = 3; ///< unusable configuration file or codec geometry

enum class Format { json, table };

struct ParamsOptions {
    double h = 0.75;
    double alpha = 1.0;
    std::optional<std::uint64_t> tau;
    std::optional<double> theta;
    std::optional<std::uint64_t> total_supply;
    Format format = Format::json;
};

struct SimulateOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> strategy;
    std::optional<unsigned> threads;
    std::string out_path;     ///< report JSON; standard output when empty
    std::string csv_path;
    std::string events_path;  ///< JSON lines, one per finalized message
};

struct CodecCheckOptions {
    std::uint64_t tau = 100;
    std::string theta = "0.3";
    std::optional<std::uint32_t> k;
    double epsilon = 0.15;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;
    std::size_t message_size = 0;  ///< 0: fill source_k one-byte symbols
    std::string codec = "gf256";
    std::vector<std::uint64_t> extra_counts;
    Format format = Format::json;
};

struct SortitionBenchOptions {
    std::uint64_t stake = 1'000'000;
    std::uint64_t tau = 5000;
    std::uint64_t total_supply = 1'000'000'000;
    std::string theta = "0.3";
    std::uint64_t draws = 100'000;
    std::uint64_t seed = 1;
    Format format = Format::json;
};

struct KeygenOptions {
    std::optional<std::string> seed_hex;
};

int cmd_params(const ParamsOptions& opts, std::ostream& out);
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_codec_check(const CodecCheckOptions& opts, std::ostream& out);
int cmd_sortition_bench(const SortitionBenchOptions& opts, std::ostream& out);
int cmd_keygen(const KeygenOptions& opts, std::ostream& out);

/// Parses argv and dispatches. Errors go to `err` and map to the exit codes above.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace eden::cli
