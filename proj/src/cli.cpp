#include "switchq/cli.hpp"

#include "switchq/diffusion.hpp"
#include "switchq/errors.hpp"
#include "switchq/fpt_discrete.hpp"
#include "switchq/steady_state.hpp"
#include "switchq/transient.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace switchq::cli {

using nlohmann::json;

Command command_from_name(const std::string& name) {
    if (name == "steady") return Command::Steady;
    if (name == "transient") return Command::Transient;
    if (name == "fpt") return Command::Fpt;
    if (name == "diffusion") return Command::Diffusion;
    if (name == "simulate") return Command::Simulate;
    if (name == "compare") return Command::Compare;
    throw ValidationError("unknown command: " + name);
}

std::string to_string(Command c) {
    switch (c) {
        case Command::Steady: return "steady";
        case Command::Transient: return "transient";
        case Command::Fpt: return "fpt";
        case Command::Diffusion: return "diffusion";
        case Command::Simulate: return "simulate";
        case Command::Compare: return "compare";
    }
    return "?";
}

namespace {

double require_number(const json& j, const std::string& section, const char* key) {
    if (!j.contains(key))
        throw ValidationError("config: missing key " + section + "." + key);
    if (!j[key].is_number())
        throw ValidationError("config: " + section + "." + key + " must be a number");
    return j[key].get<double>();
}

double optional_number(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j[key].get<double>() : fallback;
}

model::QueueSpec parse_queue(const json& j) {
    model::QueueSpec q;
    q.lambda1 = require_number(j, "model.queue", "lambda1");
    q.mu1 = require_number(j, "model.queue", "mu1");
    q.lambda2 = require_number(j, "model.queue", "lambda2");
    q.mu2 = require_number(j, "model.queue", "mu2");
    q.eta1 = require_number(j, "model.queue", "eta1");
    q.eta2 = require_number(j, "model.queue", "eta2");
    q.init_state = static_cast<long>(optional_number(j, "init_state", 0));
    q.init_env_prob = optional_number(j, "init_env_prob", 1.0);
    model::validate(q);
    return q;
}

model::DiffusionSpec parse_diffusion(const json& j) {
    model::DiffusionSpec d;
    d.lambda1s = require_number(j, "model.diffusion", "lambda1s");
    d.mu1s = require_number(j, "model.diffusion", "mu1s");
    d.lambda2s = require_number(j, "model.diffusion", "lambda2s");
    d.mu2s = require_number(j, "model.diffusion", "mu2s");
    d.omega1_sq = require_number(j, "model.diffusion", "omega1_sq");
    d.omega2_sq = require_number(j, "model.diffusion", "omega2_sq");
    d.eta1 = require_number(j, "model.diffusion", "eta1");
    d.eta2 = require_number(j, "model.diffusion", "eta2");
    d.init_position = optional_number(j, "init_position", 0.0);
    d.init_env_prob = optional_number(j, "init_env_prob", 1.0);
    model::validate(d);
    return d;
}

std::vector<double> parse_grid(const json& j, const char* key) {
    std::vector<double> grid;
    if (!j.contains(key)) return grid;
    if (!j[key].is_array()) throw ValidationError(std::string("config: grids.") + key + " must be an array");
    for (const auto& v : j[key]) grid.push_back(v.get<double>());
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw ValidationError(std::string("config: grids.") + key + " must be sorted");
    return grid;
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: parse error: ") + e.what());
    }
    RunConfig cfg;
    if (doc.contains("model")) {
        const auto& m = doc["model"];
        if (m.contains("queue")) cfg.queue = parse_queue(m["queue"]);
        if (m.contains("diffusion")) cfg.diffusion = parse_diffusion(m["diffusion"]);
    }
    if (doc.contains("grids")) {
        const auto& g = doc["grids"];
        cfg.grids.n_min = static_cast<long>(optional_number(g, "n_min", 0));
        cfg.grids.n_max = static_cast<long>(optional_number(g, "n_max", 20));
        cfg.grids.n_step = static_cast<long>(optional_number(g, "n_step", 1));
        if (cfg.grids.n_min < 0 || cfg.grids.n_max < cfg.grids.n_min || cfg.grids.n_step < 1)
            throw ValidationError("config: grids.n range is invalid");
        cfg.grids.t_grid = parse_grid(g, "t");
        cfg.grids.x_grid = parse_grid(g, "x");
        cfg.grids.s_grid = parse_grid(g, "s");
    }
    if (doc.contains("output")) {
        const auto& o = doc["output"];
        if (o.contains("dir")) cfg.output.dir = o["dir"].get<std::string>();
        if (o.contains("format")) cfg.output.format = o["format"].get<std::string>();
        if (cfg.output.format != "json" && cfg.output.format != "csv")
            throw ValidationError("config: output.format must be json or csv");
    }
    if (doc.contains("sim")) {
        const auto& s = doc["sim"];
        cfg.sim_present = true;
        cfg.sim.replications = static_cast<long>(optional_number(s, "replications", 1));
        cfg.sim.horizon = optional_number(s, "horizon", 0.0);
        cfg.sim.burn_in = optional_number(s, "burn_in", 0.0);
        cfg.sim.seed = static_cast<std::uint64_t>(optional_number(s, "seed", 1));
        cfg.sim.worker_hint = static_cast<int>(optional_number(s, "worker_hint", 1));
        cfg.sim_dt = optional_number(s, "dt", 1e-3);
        if (s.contains("target")) cfg.sim_target = s["target"].get<std::string>();
        cfg.sim.check();
    }
    if (doc.contains("fpt")) {
        const auto& f = doc["fpt"];
        cfg.fpt_j = static_cast<long>(optional_number(f, "j", 1));
        if (f.contains("mean")) cfg.fpt_mean_mode = f["mean"].get<std::string>();
        if (cfg.fpt_mean_mode != "auto" && cfg.fpt_mean_mode != "always" &&
            cfg.fpt_mean_mode != "never")
            throw ValidationError("config: fpt.mean must be auto, always or never");
    }
    if (doc.contains("compare")) {
        const auto& c = doc["compare"];
        if (c.contains("epsilon"))
            for (const auto& v : c["epsilon"]) cfg.compare_epsilons.push_back(v.get<double>());
        if (c.contains("n_grid"))
            for (const auto& v : c["n_grid"]) cfg.compare_n_grid.push_back(v.get<long>());
    }
    const char* workers_env = std::getenv("SWITCHQ_WORKERS");
    if (workers_env) cfg.sim.worker_hint = std::max(1, std::atoi(workers_env));
    return cfg;
}

namespace {

const model::QueueSpec& require_queue(const RunConfig& cfg) {
    if (!cfg.queue) throw ValidationError("config: model.queue block is required for this command");
    return *cfg.queue;
}

const model::DiffusionSpec& require_diffusion(const RunConfig& cfg) {
    if (!cfg.diffusion)
        throw ValidationError("config: model.diffusion block is required for this command");
    return *cfg.diffusion;
}

std::vector<long> n_values(const GridSpec& g) {
    std::vector<long> out;
    for (long n = g.n_min; n <= g.n_max; n += g.n_step) out.push_back(n);
    return out;
}

const std::vector<double>& require_grid(const std::vector<double>& grid, const char* name) {
    if (grid.empty())
        throw ValidationError(std::string("config: grids.") + name + " is required for this command");
    return grid;
}

Report steady_report(const RunConfig& cfg) {
    const auto& spec = require_queue(cfg);
    const auto sol = steady_state::solve_steady(spec);
    Report rep;
    rep.command = "steady";
    rep.stability = model::to_string(sol.stability);
    Table table{"steady_table", {"n", "q_n1", "q_n2", "q_n", "h_env_given_n"}, {}};
    for (long n : n_values(cfg.grids)) {
        const double q1 = steady_state::joint_pmf(sol, n, 1);
        const double q2 = steady_state::joint_pmf(sol, n, 2);
        table.rows.push_back({static_cast<double>(n), q1, q2, q1 + q2,
                              steady_state::entropy_env_given_n(sol, n)});
    }
    rep.tables.push_back(std::move(table));
    rep.scalars.emplace_back("q0_1", sol.q0[0]);
    rep.scalars.emplace_back("q0_2", sol.q0[1]);
    rep.scalars.emplace_back("prob_env1", sol.env_prob[0]);
    rep.scalars.emplace_back("prob_env2", sol.env_prob[1]);
    rep.scalars.emplace_back("mean_env1", steady_state::conditional_mean(sol, 1));
    rep.scalars.emplace_back("mean_env2", steady_state::conditional_mean(sol, 2));
    rep.scalars.emplace_back("mean", steady_state::mean(sol));
    rep.scalars.emplace_back("entropy_n_env1", steady_state::entropy_n_given_env(sol, 1));
    rep.scalars.emplace_back("entropy_n_env2", steady_state::entropy_n_given_env(sol, 2));
    rep.scalars.emplace_back("entropy_n", steady_state::entropy_n(sol));
    rep.scalars.emplace_back("entropy_env", steady_state::entropy_env(sol));
    rep.scalars.emplace_back("entropy_env_limit", steady_state::entropy_env_limit(sol));
    if (sol.roots) {
        rep.scalars.emplace_back("xi1", sol.roots->xi1);
        rep.scalars.emplace_back("xi2", sol.roots->xi2);
        rep.scalars.emplace_back("xi3", sol.roots->xi3);
    }
    return rep;
}

Report transient_report(const RunConfig& cfg) {
    model::QueueSpec spec = require_queue(cfg);
    bool swapped = false;
    if (spec.eta2 != 0.0) {
        if (spec.eta1 != 0.0)
            throw RegimeError("transient: requires eta1 = 0 or eta2 = 0");
        spec = model::swap_environments(spec);
        swapped = true;
    }
    Report rep;
    rep.command = "transient";
    Table table{"transient_table", {"t", "n", "p_n1", "p_n2"}, {}};
    for (double t : require_grid(cfg.grids.t_grid, "t")) {
        for (long n : n_values(cfg.grids)) {
            double p1 = transient::joint_transient(spec, n, 1, t);
            double p2 = transient::joint_transient(spec, n, 2, t);
            if (swapped) std::swap(p1, p2);
            table.rows.push_back({t, static_cast<double>(n), p1, p2});
        }
    }
    rep.tables.push_back(std::move(table));
    return rep;
}

Report fpt_report(const RunConfig& cfg) {
    model::QueueSpec spec = require_queue(cfg);
    if (spec.eta2 != 0.0) {
        if (spec.eta1 != 0.0)
            throw RegimeError("fpt: requires eta1 = 0 or eta2 = 0");
        spec = model::swap_environments(spec);
    }
    const long j = cfg.fpt_j;
    Report rep;
    rep.command = "fpt";
    Table density{"fpt_density", {"t", "b_j"}, {}};
    for (double t : require_grid(cfg.grids.t_grid, "t"))
        density.rows.push_back({t, fpt_discrete::fpt_density(spec, j, t)});
    rep.tables.push_back(std::move(density));
    if (!cfg.grids.s_grid.empty()) {
        Table laplace{"fpt_laplace", {"s", "B_j"}, {}};
        for (double s : cfg.grids.s_grid)
            laplace.rows.push_back({s, fpt_discrete::fpt_laplace(spec, j, s)});
        rep.tables.push_back(std::move(laplace));
    }
    rep.scalars.emplace_back("j", static_cast<double>(j));
    rep.scalars.emplace_back("absorption_probability",
                             fpt_discrete::absorption_probability(spec, j));
    const bool mean_defined = spec.lambda2 < spec.mu2;
    if (cfg.fpt_mean_mode == "always" || (cfg.fpt_mean_mode == "auto" && mean_defined))
        rep.scalars.emplace_back("fpt_mean", fpt_discrete::fpt_mean(spec, j));
    return rep;
}

Report diffusion_report(const RunConfig& cfg) {
    const auto& spec = require_diffusion(cfg);
    const auto sol = diffusion::solve_steady_density(spec);
    Report rep;
    rep.command = "diffusion";
    rep.stability = model::to_string(sol.stability);
    Table table{"steady_density", {"x", "w1", "w2", "w"}, {}};
    for (double x : require_grid(cfg.grids.x_grid, "x")) {
        const double w1 = diffusion::steady_density(sol, x, 1);
        const double w2 = diffusion::steady_density(sol, x, 2);
        table.rows.push_back({x, w1, w2, w1 + w2});
    }
    rep.tables.push_back(std::move(table));
    rep.scalars.emplace_back("w0_1", sol.w0[0]);
    rep.scalars.emplace_back("w0_2", sol.w0[1]);
    rep.scalars.emplace_back("mean_env1", diffusion::conditional_mean(sol, 1));
    rep.scalars.emplace_back("mean_env2", diffusion::conditional_mean(sol, 2));
    rep.scalars.emplace_back("mean", diffusion::mean(sol));
    if (sol.roots) {
        rep.scalars.emplace_back("xi1s", sol.roots->xi1s);
        rep.scalars.emplace_back("xi2s", sol.roots->xi2s);
        rep.scalars.emplace_back("xi3s", sol.roots->xi3s);
    }

    model::DiffusionSpec fpt_spec = spec;
    if (fpt_spec.eta2 != 0.0 && fpt_spec.eta1 == 0.0)
        fpt_spec = model::swap_environments(fpt_spec);
    if (fpt_spec.eta2 == 0.0 && fpt_spec.init_position > 0.0) {
        if (!cfg.grids.t_grid.empty()) {
            Table k_table{"fpt_density", {"t", "k"}, {}};
            for (double t : cfg.grids.t_grid)
                k_table.rows.push_back({t, diffusion::fpt_density(fpt_spec, t)});
            rep.tables.push_back(std::move(k_table));
        }
        if (!cfg.grids.s_grid.empty()) {
            Table laplace{"fpt_laplace", {"s", "K"}, {}};
            for (double s : cfg.grids.s_grid)
                laplace.rows.push_back({s, diffusion::fpt_laplace(fpt_spec, s)});
            rep.tables.push_back(std::move(laplace));
        }
        rep.scalars.emplace_back("absorption_probability",
                                 diffusion::absorption_probability(fpt_spec));
        const bool mean_defined = fpt_spec.lambda2s < fpt_spec.mu2s;
        if (cfg.fpt_mean_mode == "always" || (cfg.fpt_mean_mode == "auto" && mean_defined))
            rep.scalars.emplace_back("fpt_mean", diffusion::fpt_mean(fpt_spec));
    }
    return rep;
}

Report simulate_report(const RunConfig& cfg) {
    if (!cfg.sim_present) throw ValidationError("config: sim block is required for simulate");
    Report rep;
    rep.command = "simulate";
    rep.scalars.emplace_back("seed", static_cast<double>(cfg.sim.seed));
    if (cfg.sim_target == "steady" || cfg.sim_target == "transient") {
        const auto& spec = require_queue(cfg);
        simulator::JointPmfEstimate est;
        if (cfg.sim_target == "steady") {
            est = simulator::estimate_steady_pmf(spec, cfg.sim);
        } else {
            const auto& ts = require_grid(cfg.grids.t_grid, "t");
            est = simulator::estimate_transient_pmf(spec, ts.front(), cfg.sim);
            rep.scalars.emplace_back("t", ts.front());
        }
        Table table{"empirical_pmf", {"n", "env", "value", "std_error", "count"}, {}};
        for (const auto& [key, e] : est)
            table.rows.push_back({static_cast<double>(key.first), static_cast<double>(key.second),
                                  e.value, e.std_error, static_cast<double>(e.count)});
        rep.tables.push_back(std::move(table));
    } else if (cfg.sim_target == "fpt") {
        const auto stats = simulator::sample_first_emptying(require_queue(cfg), cfg.sim);
        rep.scalars.emplace_back("completion", stats.completion.value);
        rep.scalars.emplace_back("completion_se", stats.completion.std_error);
        rep.scalars.emplace_back("mean_uncensored", stats.mean_uncensored.value);
        rep.scalars.emplace_back("mean_uncensored_se", stats.mean_uncensored.std_error);
        rep.scalars.emplace_back("censored_fraction", stats.censored_fraction);
    } else if (cfg.sim_target == "diffusion_steady") {
        const auto& edges = require_grid(cfg.grids.x_grid, "x");
        const auto hist = simulator::estimate_diffusion_steady_density(require_diffusion(cfg),
                                                                       cfg.sim, cfg.sim_dt, edges);
        Table table{"empirical_density", {"x_lo", "x_hi", "density", "std_error"}, {}};
        for (size_t b = 0; b + 1 < hist.edges.size(); ++b)
            table.rows.push_back({hist.edges[b], hist.edges[b + 1], hist.density[b].value,
                                  hist.density[b].std_error});
        rep.tables.push_back(std::move(table));
    } else if (cfg.sim_target == "diffusion_fpt") {
        const auto stats =
            simulator::estimate_diffusion_fpt(require_diffusion(cfg), cfg.sim, cfg.sim_dt);
        rep.scalars.emplace_back("completion", stats.completion.value);
        rep.scalars.emplace_back("completion_se", stats.completion.std_error);
        rep.scalars.emplace_back("mean_uncensored", stats.mean_uncensored.value);
        rep.scalars.emplace_back("mean_uncensored_se", stats.mean_uncensored.std_error);
        rep.scalars.emplace_back("censored_fraction", stats.censored_fraction);
    } else {
        throw ValidationError("config: sim.target must be steady, transient, fpt, "
                              "diffusion_steady or diffusion_fpt");
    }
    return rep;
}

Report compare_report(const RunConfig& cfg) {
    const auto& spec = require_diffusion(cfg);
    if (cfg.compare_epsilons.empty())
        throw ValidationError("config: compare.epsilon is required for compare");
    if (cfg.compare_n_grid.empty())
        throw ValidationError("config: compare.n_grid is required for compare");
    Report rep;
    rep.command = "compare";
    for (size_t i = 0; i < cfg.compare_epsilons.size(); ++i) {
        const double eps = cfg.compare_epsilons[i];
        const auto cmp = diffusion::compare_scaled(spec, eps, cfg.compare_n_grid);
        Table table{"compare_" + std::to_string(i),
                    {"n", "q_n1", "q_n2", "q_n", "w1", "w2", "w"},
                    {}};
        for (const auto& row : cmp.rows)
            table.rows.push_back({static_cast<double>(row.n), row.q_n1, row.q_n2, row.q_n,
                                  row.w1, row.w2, row.w});
        rep.tables.push_back(std::move(table));
        const std::string suffix = "_" + std::to_string(i);
        rep.scalars.emplace_back("epsilon" + suffix, eps);
        rep.scalars.emplace_back("sup_norm" + suffix, cmp.sup_norm);
        rep.scalars.emplace_back("sup_norm_env1" + suffix, cmp.sup_norm_env1);
        rep.scalars.emplace_back("sup_norm_env2" + suffix, cmp.sup_norm_env2);
    }
    return rep;
}

void format_double(char* buf, size_t size, double v, int digits) {
    if (std::isfinite(v)) {
        std::snprintf(buf, size, "%.*g", digits, v);
    } else {
        std::snprintf(buf, size, "null");
    }
}

} // namespace

Report build_report(Command cmd, const RunConfig& config) {
    switch (cmd) {
        case Command::Steady: return steady_report(config);
        case Command::Transient: return transient_report(config);
        case Command::Fpt: return fpt_report(config);
        case Command::Diffusion: return diffusion_report(config);
        case Command::Simulate: return simulate_report(config);
        case Command::Compare: return compare_report(config);
    }
    throw ValidationError("unknown command");
}

void write_report_json(const Report& report, std::ostream& os) {
    char buf[64];
    os << "{\n  \"command\": \"" << report.command << "\",\n";
    if (!report.stability.empty()) os << "  \"case\": \"" << report.stability << "\",\n";
    os << "  \"scalars\": {";
    for (size_t i = 0; i < report.scalars.size(); ++i) {
        format_double(buf, sizeof buf, report.scalars[i].second, 17);
        os << (i ? ", " : "") << "\"" << report.scalars[i].first << "\": " << buf;
    }
    os << "},\n  \"tables\": [";
    for (size_t t = 0; t < report.tables.size(); ++t) {
        const Table& tab = report.tables[t];
        os << (t ? ",\n    " : "\n    ") << "{\"name\": \"" << tab.name << "\", \"columns\": [";
        for (size_t c = 0; c < tab.columns.size(); ++c)
            os << (c ? ", " : "") << "\"" << tab.columns[c] << "\"";
        os << "], \"rows\": [";
        for (size_t r = 0; r < tab.rows.size(); ++r) {
            os << (r ? ", " : "") << "[";
            for (size_t c = 0; c < tab.rows[r].size(); ++c) {
                format_double(buf, sizeof buf, tab.rows[r][c], 17);
                os << (c ? ", " : "") << buf;
            }
            os << "]";
        }
        os << "]}";
    }
    os << "\n  ]\n}\n";
}

void write_table_csv(const Table& table, std::ostream& os) {
    char buf[64];
    for (size_t c = 0; c < table.columns.size(); ++c)
        os << (c ? "," : "") << table.columns[c];
    os << "\n";
    for (const auto& row : table.rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            format_double(buf, sizeof buf, row[c], 10);
            os << (c ? "," : "") << buf;
        }
        os << "\n";
    }
}

void write_scalars_csv(const Report& report, std::ostream& os) {
    char buf[64];
    os << "name,value\n";
    if (!report.stability.empty()) os << "case," << report.stability << "\n";
    for (const auto& [name, value] : report.scalars) {
        format_double(buf, sizeof buf, value, 10);
        os << name << "," << buf << "\n";
    }
}

std::vector<std::string> run_command(Command cmd, const RunConfig& config) {
    const Report report = build_report(cmd, config);
    namespace fs = std::filesystem;
    fs::create_directories(config.output.dir);
    std::vector<std::string> written;
    auto open = [&](const std::string& name) {
        const std::string path = (fs::path(config.output.dir) / name).string();
        written.push_back(path);
        std::ofstream os(path);
        if (!os) throw ValidationError("output: cannot write " + path);
        return os;
    };
    if (config.output.format == "json") {
        auto os = open(report.command + ".json");
        write_report_json(report, os);
    } else {
        for (const Table& table : report.tables) {
            auto os = open(report.command + "_" + table.name + ".csv");
            write_table_csv(table, os);
        }
        auto os = open(report.command + "_scalars.csv");
        write_scalars_csv(report, os);
    }
    return written;
}

int run_cli(Command cmd, const std::string& config_path,
            const std::optional<std::string>& out_dir,
            const std::optional<std::string>& format,
            const std::optional<std::uint64_t>& seed) {
    try {
        RunConfig config = load_run_config(config_path);
        if (out_dir) config.output.dir = *out_dir;
        if (format) {
            if (*format != "json" && *format != "csv")
                throw ValidationError("--format must be json or csv");
            config.output.format = *format;
        }
        if (seed) config.sim.seed = *seed;
        const auto written = run_command(cmd, config);
        for (const auto& path : written) std::cout << path << "\n";
        return 0;
    } catch (const RegimeError& e) {
        std::cerr << "switchq: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "switchq: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "switchq: " << e.what() << "\n";
        return 1;
    }
}

} // namespace switchq::cli
