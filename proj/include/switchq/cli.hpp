#pragma once

#include "switchq/model.hpp"
#include "switchq/simulator.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace switchq::cli {

enum class Command { Steady, Transient, Fpt, Diffusion, Simulate, Compare };

Command command_from_name(const std::string& name);
std::string to_string(Command c);

struct GridSpec {
    long n_min = 0;
    long n_max = 20;
    long n_step = 1;
    std::vector<double> t_grid;
    std::vector<double> x_grid;
    std::vector<double> s_grid;
};

struct OutputSpec {
    std::string dir = ".";
    std::string format = "json"; // "json" or "csv"
};

/// Everything a command run needs, parsed from one config document.
struct RunConfig {
    std::optional<model::QueueSpec> queue;
    std::optional<model::DiffusionSpec> diffusion;
    GridSpec grids;
    OutputSpec output;
    simulator::SimConfig sim;
    bool sim_present = false;
    double sim_dt = 1e-3;
    std::string sim_target = "steady";
    long fpt_j = 1;
    std::string fpt_mean_mode = "auto"; // auto | always | never
    std::vector<double> compare_epsilons;
    std::vector<long> compare_n_grid;
};

/// Parses the JSON config document.  Throws ValidationError with a
/// diagnostic naming the offending key.
RunConfig load_run_config(const std::string& path);

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct Report {
    std::string command;
    std::string stability; // empty when not applicable
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<Table> tables;
};

/// Runs one command against the config; pure computation, no file output.
Report build_report(Command cmd, const RunConfig& config);

/// JSON with every number at 17 significant digits (round-trips exactly).
void write_report_json(const Report& report, std::ostream& os);
/// CSV at 10 significant digits, '.' decimal separator.
void write_table_csv(const Table& table, std::ostream& os);
void write_scalars_csv(const Report& report, std::ostream& os);

/// Full command: build the report and write it under config.output.dir.
/// Returns the paths written.
std::vector<std::string> run_command(Command cmd, const RunConfig& config);

/// Exit-code wrapper used by the binary: 0 ok, 1 validation/config error,
/// 2 regime error.
int run_cli(Command cmd, const std::string& config_path,
            const std::optional<std::string>& out_dir,
            const std::optional<std::string>& format,
            const std::optional<std::uint64_t>& seed);

} // namespace switchq::cli
