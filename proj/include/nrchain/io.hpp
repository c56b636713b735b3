#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nrchain/liouville.hpp"
#include "nrchain/model.hpp"

namespace nrchain::io {

using Series = liouville::Series;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Solver { analytic, gaussian, trajectories, liouville };

struct RunConfig {
    ModelParams params;
    Solver solver = Solver::gaussian;
    std::string initial_state = "vacuum";  // vacuum|full|cdw|domain-wall|bitstring:<pattern>
    double t_max = 10.0;
    int n_samples = 101;
    int n_trajectories = 0;
    std::uint64_t master_seed = 1;
    std::map<std::string, std::vector<double>> sweep;  // parameter -> values
    std::string out_dir = "out";
    std::vector<int> cuts;                  // empty: {L/2}
    std::vector<std::string> observables;   // empty: solver defaults
};

/// Number with optional pi arithmetic: "0.3", "pi", "-pi/2", "3pi/4", "0.5pi".
double parse_number(const std::string& text);

/// "linspace(a,b,n)" or comma-separated numbers.
std::vector<double> parse_value_list(const std::string& text);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Flat key=value text; '#' starts a comment. Unknown keys are rejected.
KeyValues read_config_file(const std::string& path);

/// Build and validate a config from file pairs plus overriding flag pairs.
RunConfig make_config(const KeyValues& file_pairs, const KeyValues& overrides = {});

RunConfig parse_config(const std::string& path, const KeyValues& overrides = {});

/// Occupation bits of the requested initial state.
std::vector<int> initial_bits(const RunConfig& cfg);

/// Cartesian sweep expansion (stable order: axes sorted by name, row-major).
std::vector<RunConfig> expand_sweep(const RunConfig& cfg);

struct RunOutput {
    std::vector<std::string> series_files;
    std::string summary_file;  // empty when not a sweep
};

/// Dispatch to the selected tier and emit CSV data plus metadata sidecars.
RunOutput run(const RunConfig& cfg);

/// Compute the series for one (non-sweep) configuration in memory.
Series run_series(const RunConfig& cfg);

void write_series_csv(const std::string& path, const Series& s);
Series read_series_csv(const std::string& path);
void write_metadata(const std::string& path, const RunConfig& cfg);

std::vector<std::string> preset_names();
RunConfig preset(const std::string& name);

std::string solver_name(Solver s);

}  // namespace nrchain::io
