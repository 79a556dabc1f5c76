#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acdlab/diagnostics.hpp"

namespace acdlab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Invalid configuration. The CLI maps this to exit status 2.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Batch run description. `params` carries the command-specific knobs as
/// strings, exactly as they appear on the command line or in a config file;
/// typed access with validation happens inside the pipeline.
struct RunConfig {
    std::string command;  // simulate | example | ac-check | ineq-check |
                          // fdd-test | lip-check | support-check | markov-probe
    std::uint64_t seed = 0;
    bool seed_set = false;  // reproducibility contract: no wall-clock default
    std::size_t n_paths = 10000;
    double t_end = 1.0;
    std::size_t steps = 1000;
    unsigned threads = 0;     // 0 = hardware concurrency
    std::string out_path;     // report file; empty = stdout
    std::string dump_prefix;  // write CSV dumps when nonempty
    std::map<std::string, std::string> params;

    bool has_param(const std::string& key) const;
    double param_double(const std::string& key, double fallback) const;
    double require_double(const std::string& key) const;
    std::uint64_t param_u64(const std::string& key, std::uint64_t fallback) const;
    std::string param_str(const std::string& key, const std::string& fallback) const;
};

struct RunOutcome {
    int status = 0;  // 0 ok, 2 invalid config, 3 numerical blowup / clock exhausted
    bool all_pass = false;
    std::vector<DiagnosticReport> records;
    // serialized report, wall-time field excluded: byte-identical across
    // reruns of the same config at any thread count
    std::string report_json;
};

/// Executes the configured pipeline. Writes no files.
RunOutcome run_pipeline(const RunConfig& config);

/// run_pipeline plus artifacts: JSON report (with wall time) to out_path or
/// stdout, optional CSV dumps. Returns the process exit status: 0 iff every
/// record passes, 2 for config errors, 3 for numerical/clock failures,
/// 1 when the pipeline ran but some check failed.
int run(const RunConfig& config, std::ostream& log);

/// Flat `key = value` file, '#' starts a comment. Keys mirror long flag
/// names; flags override file values.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);

} // namespace acdlab
