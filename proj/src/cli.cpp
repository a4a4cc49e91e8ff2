#include "adamil/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>

#include "adamil/adaptive.hpp"
#include "adamil/errors.hpp"
#include "adamil/harness.hpp"
#include "adamil/model.hpp"
#include "adamil/wiener.hpp"

namespace adamil::cli {

namespace fs = std::filesystem;

namespace {

// Named flags and the configuration key each one sets.
struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"--problem", "problem", "builtin problem name"},
    {"--noise", "noise", "diffusion scale of the builtin problem"},
    {"--schemes", "schemes", "comma-separated schemes (adaptive, milstein, tamed, euler, pmil, ssbm)"},
    {"--scheme", "scheme", "scheme for single-path"},
    {"--h-max", "h_max", "h_max values: 2^-12..2^-8 or a comma list"},
    {"--rho", "rho", "h_max / h_min"},
    {"--delta", "delta", "strategy numerator (default h_max)"},
    {"--paths", "paths", "Monte Carlo paths M"},
    {"--ref-exponent", "ref_exponent", "reference step T * 2^-ref_exponent"},
    {"--fine-exponent", "fine_exponent", "Wiener path resolution T * 2^-fine_exponent"},
    {"--seed", "seed", "base seed (path seed = base xor index)"},
    {"--threads", "threads", "worker threads, 0 for all cores"},
    {"--pmil-exponent", "pmil_exponent", "projection radius exponent of pmil"},
    {"--rho-list", "rho_list", "rho values for backstop-prob"},
    {"--order", "order", "highest moment order for moments-check"},
    {"--samples", "samples", "Monte Carlo samples for moments-check"},
    {"--moments-exponent", "moments_exponent", "fine exponent for moments-check"},
    {"--dump-path", "dump_path", "single-path: also write the Wiener path as a binary dump"},
    {"-o,--output-dir", "output_dir", "directory for CSV and config outputs"},
};

const std::vector<std::pair<std::string, std::string>>& base_defaults() {
    static const std::vector<std::pair<std::string, std::string>> defaults{
        {"problem", "scalar_mult"},
        {"noise", "0.2"},
        {"schemes", "adaptive"},
        {"scheme", "adaptive"},
        {"h_max", "2^-12..2^-8"},
        {"rho", "16"},
        {"delta", ""},
        {"paths", "100"},
        {"ref_exponent", "16"},
        {"fine_exponent", "20"},
        {"seed", "0x5EED2024"},
        {"threads", "0"},
        {"zero_levy", "false"},
        {"pmil_exponent", "0.25"},
        {"rho_list", "2,3,4,5,6"},
        {"order", "4"},
        {"samples", "10000"},
        {"moments_exponent", "12"},
        {"dump_path", ""},
        {"output_dir", "."},
    };
    return defaults;
}

SdeProblem problem_from(const Config& c) { return make_builtin(c.get("problem"), {{"noise", c.get_real("noise")}}); }

std::vector<Scheme> schemes_from(const Config& c) {
    std::vector<Scheme> out;
    for (const auto& name : c.get_list("schemes")) {
        out.push_back(parse_scheme(name));
    }
    if (out.empty()) {
        throw ConfigError("key 'schemes': at least one scheme is required");
    }
    return out;
}

ExperimentConfig experiment_from(const Config& c) {
    ExperimentConfig e;
    e.schemes = schemes_from(c);
    e.h_max = c.get_reals("h_max");
    e.rho = c.get_real("rho");
    if (!c.get("delta").empty()) {
        e.delta = c.get_real("delta");
    }
    e.paths = c.get_int("paths");
    e.reference_exponent = c.get_int("ref_exponent");
    e.fine_exponent = c.get_int("fine_exponent");
    e.base_seed = c.get_seed("seed");
    e.threads = c.get_int("threads");
    e.zero_levy_area = c.get_bool("zero_levy");
    e.comparator.pmil_exponent = c.get_real("pmil_exponent");
    return e;
}

std::ofstream open_output(const fs::path& file) {
    std::ofstream out(file);
    if (!out) {
        throw ConfigError("cannot write '" + file.string() + "'");
    }
    return out;
}

void report_table(const ErrorTable& table, std::ostream& out, std::ostream& err) {
    out << std::left << std::setw(10) << "scheme" << std::setw(14) << "h_max" << std::setw(14) << "rms"
        << std::setw(14) << "std_err" << std::setw(14) << "h_mean" << std::setw(10) << "seconds" << "divergent\n";
    for (const ErrorRow& r : table.rows) {
        out << std::left << std::setw(10) << to_string(r.scheme) << std::setw(14) << r.h_max << std::setw(14)
            << r.rms_error << std::setw(14) << r.rms_std_error << std::setw(14) << r.h_mean << std::setw(10)
            << r.cpu_seconds << r.divergent_count << '\n';
        if (r.divergent_count > 0) {
            err << "warning: " << r.divergent_count << " divergent " << to_string(r.scheme)
                << " paths at h_max=" << r.h_max << " excluded from rms\n";
        }
    }
    for (const auto& [scheme, slope] : table.slopes) {
        out << "slope " << to_string(scheme) << ": ";
        if (slope) {
            out << *slope << '\n';
        } else {
            out << "absent (fewer than 2 valid points)\n";
        }
    }
}

int cmd_convergence(const Config& c, const fs::path& dir, std::ostream& out, std::ostream& err) {
    const auto table = convergence_table(problem_from(c), experiment_from(c));
    auto csv = open_output(dir / "convergence.csv");
    write_error_csv(csv, table);
    report_table(table, out, err);
    return kExitOk;
}

int cmd_efficiency(const Config& c, const fs::path& dir, std::ostream& out, std::ostream& err) {
    const auto table = convergence_table(problem_from(c), experiment_from(c));
    auto csv = open_output(dir / "efficiency.csv");
    write_error_csv(csv, table);
    report_table(table, out, err);
    const auto rows = efficiency_rows(table);
    std::vector<EfficiencyRow> adaptive;
    std::vector<EfficiencyRow> tamed;
    for (const auto& r : rows) {
        if (r.scheme == Scheme::adaptive) {
            adaptive.push_back(r);
        } else if (r.scheme == Scheme::tamed) {
            tamed.push_back(r);
        }
    }
    if (!tamed.empty()) {
        const auto ratio = cost_ratio_at_matched_error(adaptive, tamed);
        out << "tamed/adaptive cost at matched rms: ";
        if (ratio) {
            out << *ratio << '\n';
        } else {
            out << "not available (rms outside tamed range)\n";
        }
    }
    return kExitOk;
}

int cmd_backstop(const Config& c, const fs::path& dir, std::ostream& out, std::ostream&) {
    BackstopConfig b;
    b.rhos = c.get_reals("rho_list");
    const auto h = c.get_reals("h_max");
    if (h.size() != 1) {
        throw ConfigError("key 'h_max': backstop-prob takes a single value");
    }
    b.h_max = h.front();
    b.paths = c.get_int("paths");
    b.fine_exponent = c.get_int("fine_exponent");
    b.base_seed = c.get_seed("seed");
    b.threads = c.get_int("threads");
    const auto curve = backstop_probability(problem_from(c), b);

    auto prob = open_output(dir / "backstop_prob.csv");
    write_backstop_csv(prob, curve);
    auto profile = open_output(dir / "backstop_profile.csv");
    write_profile_csv(profile, curve);
    auto occ = open_output(dir / "backstop_occurrences.csv");
    occ << std::setprecision(17) << "rho,path,t\n";
    for (const auto& p : curve) {
        for (const auto& o : p.occurrences) {
            occ << p.rho << ',' << o.path << ',' << o.time << '\n';
        }
        out << "rho " << p.rho << ": P(backstop) = " << p.probability << " +- " << p.probability_std_error
            << ", h_mean = " << p.h_mean << ", triggers = " << p.occurrences.size() << '\n';
    }
    return kExitOk;
}

int cmd_single_path(const Config& c, const fs::path& dir, std::ostream& out, std::ostream&) {
    const SdeProblem problem = problem_from(c);
    const auto h = c.get_reals("h_max");
    if (h.size() != 1) {
        throw ConfigError("key 'h_max': single-path takes a single value");
    }
    const WienerPath path =
        WienerPath::generate(c.get_seed("seed"), c.get_int("fine_exponent"), problem.dim_noise(), problem.horizon());
    if (const auto& dump = c.get("dump_path"); !dump.empty()) {
        std::ofstream bin(dump, std::ios::binary);
        if (!bin) {
            throw ConfigError("cannot write '" + dump + "'");
        }
        path.write_binary(bin);
    }
    IntegrationOptions options;
    options.zero_levy_area = c.get_bool("zero_levy");
    options.comparator.pmil_exponent = c.get_real("pmil_exponent");
    const Scheme scheme = parse_scheme(c.get("scheme"));
    SolutionPath sol;
    if (scheme == Scheme::adaptive) {
        const double delta = c.get("delta").empty() ? h.front() : c.get_real("delta");
        sol = integrate_adaptive(problem, StrategyConfig::make(h.front(), c.get_real("rho"), delta), path, options);
    } else {
        sol = integrate_fixed(problem, scheme, h.front(), path, options);
    }
    auto csv = open_output(dir / "single_path.csv");
    write_solution_csv(csv, sol);
    out << "steps " << sol.step_count << ", backstop steps " << sol.backstop_count << ", mean step " << sol.mean_step()
        << ", final t " << sol.final_time << (sol.divergent ? " (divergent)" : "") << '\n';
    return sol.divergent ? kExitFailure : kExitOk;
}

int cmd_moments(const Config& c, const fs::path& dir, std::ostream& out, std::ostream&) {
    const auto checks = levy_moment_check(c.get_int("order"), c.get_int("samples"), c.get_int("moments_exponent"),
                                          c.get_seed("seed"), c.get_int("threads"));
    auto csv = open_output(dir / "moments.csv");
    csv << std::setprecision(17) << "order,estimate,std_error,exact,abs_estimate,abs_bound,pass\n";
    bool all = true;
    for (const auto& m : checks) {
        csv << m.order << ',' << m.estimate << ',' << m.std_error << ',' << m.exact << ',' << m.abs_estimate << ','
            << m.abs_bound << ',' << (m.passed ? 1 : 0) << '\n';
        out << "order " << m.order << ": E[A^b] = " << m.estimate << " +- " << m.std_error << " (exact " << m.exact
            << "), E|A|^b = " << m.abs_estimate << " (bound " << m.abs_bound << ") " << (m.passed ? "PASS" : "FAIL")
            << '\n';
        all = all && m.passed;
    }
    return all ? kExitOk : kExitFailure;
}

std::string description(const std::string& command) {
    static const std::map<std::string, std::string, std::less<>> text{
        {"convergence", "strong-error sweep over h_max with fitted log-log slopes"},
        {"efficiency", "the convergence sweep plus CPU time against rms error"},
        {"backstop-prob", "probability of ever using the backstop, per rho"},
        {"single-path", "one trajectory with step sizes and backstop flags"},
        {"moments-check", "Monte Carlo check of the Levy area moment constants"},
    };
    return text.at(command);
}

using Handler = int (*)(const Config&, const fs::path&, std::ostream&, std::ostream&);

const std::map<std::string, Handler, std::less<>>& handlers() {
    static const std::map<std::string, Handler, std::less<>> table{
        {"convergence", cmd_convergence}, {"efficiency", cmd_efficiency}, {"backstop-prob", cmd_backstop},
        {"single-path", cmd_single_path}, {"moments-check", cmd_moments},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"convergence", "efficiency", "backstop-prob", "single-path",
                                                "moments-check"};
    return names;
}

Config default_config(std::string_view command) {
    if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
        throw ConfigError("unknown command '" + std::string(command) + "'");
    }
    Config c(base_defaults());
    if (command == "backstop-prob") {
        c.set("problem", "scalar_probe");
        c.set("h_max", "2^-8");
        c.set("fine_exponent", "16");
    } else if (command == "single-path") {
        c.set("h_max", "2^-8");
        c.set("fine_exponent", "16");
    }
    return c;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive explicit Milstein experiments", "adamil"};
    app.require_subcommand(1);

    struct Parsed {
        CLI::App* app = nullptr;
        std::string config_file;
        std::vector<std::string> assignments;
        bool zero_levy = false;
        std::map<std::string, std::string> values;
        std::map<std::string, CLI::Option*> options;
    };
    std::map<std::string, Parsed> parsed;
    for (const auto& name : commands()) {
        Parsed& p = parsed[name];
        p.app = app.add_subcommand(name, description(name));
        p.app->add_option("--config", p.config_file, "key = value file applied over the defaults");
        p.app->add_option("--set", p.assignments, "key=value override (repeatable)");
        p.app->add_flag("--zero-levy", p.zero_levy, "drop Lévy areas from every step");
        for (const auto& f : kFlags) {
            p.options[f.key] = p.app->add_option(f.flag, p.values[f.key], f.help);
        }
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    for (auto& [name, p] : parsed) {
        if (!p.app->parsed()) {
            continue;
        }
        fs::path dir;
        Config config = default_config(name);
        try {
            if (!p.config_file.empty()) {
                config.load_file(p.config_file);
            }
            for (const auto& a : p.assignments) {
                config.set_assignment(a);
            }
            for (const auto& f : kFlags) {
                if (p.options[f.key]->count() > 0) {
                    config.set(f.key, p.values[f.key]);
                }
            }
            if (p.zero_levy) {
                config.set("zero_levy", "true");
            }
            dir = config.get("output_dir");
            fs::create_directories(dir);
            auto log = open_output(dir / (name + ".config"));
            log << "# resolved configuration for '" << name << "'\n";
            config.write(log);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
        try {
            return handlers().find(name)->second(config, dir, out, err);
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const UsageError& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const std::exception& e) {
            err << name << " failed: " << e.what() << '\n';
            return kExitFailure;
        }
    }
    return kExitUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, out, err);
}

}  // namespace adamil::cli
