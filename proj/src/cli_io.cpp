#include "sig/cli_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

namespace sig {

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double parse_number(const std::string& value, int line, const std::string& key) {
    const std::string v = trim(value);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x)) {
        throw ConfigError(line, "invalid number '" + v + "' for key " + key);
    }
    return x;
}

int parse_int(const std::string& value, int line, const std::string& key) {
    const double x = parse_number(value, line, key);
    const double rounded = std::nearbyint(x);
    if (x != rounded) throw ConfigError(line, "expected an integer for key " + key);
    return static_cast<int>(rounded);
}

bool parse_bool(const std::string& value, int line, const std::string& key) {
    const std::string v = trim(value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(line, "expected true/false for key " + key);
}

std::vector<double> parse_list(const std::string& value, int line, const std::string& key) {
    std::vector<double> out;
    std::istringstream in(value);
    std::string token;
    while (in >> token) out.push_back(parse_number(token, line, key));
    return out;
}

void check_divides(double x_max, double h, int line) {
    if (!(h > 0.0)) throw ConfigError(line, "h must be > 0");
    const double ratio = x_max / h;
    const double rounded = std::nearbyint(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)) || rounded < 1.0) {
        throw ConfigError(line, "h does not divide x_max (x_max / h = " + std::to_string(ratio) + ")");
    }
}

std::string format_real(double x, int precision = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    int h_line = 0, sweep_line = 0;
    bool have_sigma = false, have_rho = false, have_xmax = false, have_h = false;

    while (std::getline(in, raw)) {
        ++line;
        const size_t comment = raw.find_first_of("#;");
        if (comment != std::string::npos) raw.erase(comment);
        const std::string s = trim(raw);
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "game" && section != "grid" && section != "solver" &&
                section != "output" && section != "sweep") {
                throw ConfigError(line, "unknown section [" + section + "]");
            }
            continue;
        }
        const size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (section.empty()) throw ConfigError(line, "key outside of any section");

        if (section == "game") {
            if (key == "drift_kappa") cfg.game.drift_kappa = parse_number(value, line, key);
            else if (key == "sigma0") { cfg.game.sigma0 = parse_number(value, line, key); have_sigma = true; }
            else if (key == "rho") { cfg.game.rho = parse_number(value, line, key); have_rho = true; }
            else if (key == "f_poly") cfg.game.running_payoff.poly_coeffs = parse_list(value, line, key);
            else if (key == "f_abs") cfg.game.running_payoff.abs_coeff = parse_number(value, line, key);
            else if (key == "c0") cfg.game.cost.c0 = parse_number(value, line, key);
            else if (key == "c1") cfg.game.cost.c1 = parse_number(value, line, key);
            else if (key == "c2") cfg.game.cost.c2 = parse_number(value, line, key);
            else if (key == "c_sqrt") cfg.game.cost.c_sqrt = parse_number(value, line, key);
            else if (key == "g0") cfg.game.gain.g0 = parse_number(value, line, key);
            else if (key == "g1") cfg.game.gain.g1 = parse_number(value, line, key);
            else if (key == "symmetry_line") cfg.game.symmetry_line = parse_number(value, line, key);
            else throw ConfigError(line, "unknown key '" + key + "' in section [game]");
        } else if (section == "grid") {
            if (key == "x_max") { cfg.x_max = parse_number(value, line, key); have_xmax = true; }
            else if (key == "h") { cfg.h = parse_number(value, line, key); have_h = true; h_line = line; }
            else if (key == "impulse_mode") {
                const std::string v = trim(value);
                if (v == "constrained") cfg.mode = ImpulseMode::Constrained;
                else if (v == "unconstrained") cfg.mode = ImpulseMode::Unconstrained;
                else throw ConfigError(line, "impulse_mode must be constrained or unconstrained");
            }
            else if (key == "lbc") cfg.lbc = parse_number(value, line, key);
            else if (key == "rbc") cfg.rbc = parse_number(value, line, key);
            else throw ConfigError(line, "unknown key '" + key + "' in section [grid]");
        } else if (section == "solver") {
            if (key == "variant") {
                const std::string v = trim(value);
                if (v == "fppi") cfg.driver.inner.variant = InnerVariant::Fppi;
                else if (v == "howard") cfg.driver.inner.variant = InnerVariant::Howard;
                else throw ConfigError(line, "variant must be fppi or howard");
            }
            else if (key == "lambda") cfg.driver.inner.lambda = parse_number(value, line, key);
            else if (key == "inner_tol") cfg.driver.inner.inner_tol = parse_number(value, line, key);
            else if (key == "max_inner_iters") cfg.driver.inner.max_inner_iters = parse_int(value, line, key);
            else if (key == "abs_denominator") cfg.driver.inner.abs_denominator = parse_bool(value, line, key);
            else if (key == "tol") cfg.driver.tol = parse_number(value, line, key);
            else if (key == "scale") {
                cfg.driver.scale = parse_number(value, line, key);
                cfg.driver.inner.scale = cfg.driver.scale;
            }
            else if (key == "max_outer_iters") cfg.driver.max_outer_iters = parse_int(value, line, key);
            else if (key == "cycle_window") cfg.driver.cycle_window = parse_int(value, line, key);
            else if (key == "run_mode") {
                const std::string v = trim(value);
                if (v == "to_tol") cfg.driver.stop_mode = StopMode::ToTolerance;
                else if (v == "to_stagnation") cfg.driver.stop_mode = StopMode::ToStagnation;
                else throw ConfigError(line, "run_mode must be to_tol or to_stagnation");
            }
            else throw ConfigError(line, "unknown key '" + key + "' in section [solver]");
        } else if (section == "output") {
            if (key == "dir") cfg.output_dir = value;
            else if (key == "precision") cfg.precision = parse_int(value, line, key);
            else if (key == "diagnostics") {
                const std::string v = trim(value);
                if (v == "off") cfg.diagnostics = DiagLevel::Off;
                else if (v == "basic") cfg.diagnostics = DiagLevel::Basic;
                else if (v == "full") cfg.diagnostics = DiagLevel::Full;
                else throw ConfigError(line, "diagnostics must be off, basic or full");
            }
            else throw ConfigError(line, "unknown key '" + key + "' in section [output]");
        } else if (section == "sweep") {
            if (key == "h_values") { cfg.sweep_h = parse_list(value, line, key); sweep_line = line; }
            else if (key == "reference_boundary") cfg.reference_boundary = parse_number(value, line, key);
            else if (key == "reference_target") cfg.reference_target = parse_number(value, line, key);
            else throw ConfigError(line, "unknown key '" + key + "' in section [sweep]");
        }
    }

    if (!have_sigma) throw ConfigError(line, "missing required key game.sigma0");
    if (!have_rho) throw ConfigError(line, "missing required key game.rho");
    if (!have_xmax) throw ConfigError(line, "missing required key grid.x_max");
    if (!have_h) throw ConfigError(line, "missing required key grid.h");
    check_divides(cfg.x_max, cfg.h, h_line);
    for (double h : cfg.sweep_h) check_divides(cfg.x_max, h, sweep_line);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

ExecutedRun execute_run(const RunConfig& config, double h, std::uint64_t seed) {
    GameSpec spec = config.game;
    spec.validate();
    Grid grid = build_grid(config.x_max, h);

    std::optional<BoundaryData> bc;
    if (config.lbc || config.rbc) {
        BoundaryData b = default_boundary(spec);
        if (config.lbc) b.lbc = *config.lbc;
        if (config.rbc) b.rbc = *config.rbc;
        b.heuristic = false;  // manual override replaces the heuristic guess
        bc = b;
    }

    ExecutedRun result;
    result.h = h;
    result.disc = build_discretization(spec, grid, config.mode, bc);
    result.outcome = run(result.disc, config.driver);
    result.uip = uip_check(result.disc, result.outcome.v);
    if (config.diagnostics == DiagLevel::Full) {
        try {
            result.characterization = verify_solution_characterization(result.disc, result.outcome.v);
        } catch (const std::runtime_error&) {
            result.characterization = std::nullopt;  // singular A - B; reported as such
        }
        if (config.mode == ImpulseMode::Constrained) {
            result.a0pp_check = check_a0_doubleprime_sampled(result.disc, 32, seed);
        }
    }
    return result;
}

void emit_solution_csv(std::ostream& out, const ExecutedRun& run) {
    const Grid& grid = run.disc.grid;
    const double s = run.disc.spec.symmetry_line;
    out << "x,v,in_intervention,delta_star,impulse_target,residual\n";
    for (int j = -grid.n; j <= grid.n; ++j) {
        const int a = grid.array_index(j);
        const int steps = run.outcome.strategy.steps[static_cast<size_t>(a)];
        const double delta = grid.x(steps);
        const double target = grid.x(j + steps) + s;
        out << format_real(grid.x(j) + s) << ',' << format_real(run.outcome.v[static_cast<size_t>(a)])
            << ',' << (run.outcome.strategy.intervene[static_cast<size_t>(a)] ? 1 : 0) << ','
            << format_real(delta) << ',' << format_real(target) << ','
            << format_real(run.outcome.residual.residual[static_cast<size_t>(a)]) << '\n';
    }
}

namespace {

std::string kind_label(const Outcome& outcome) {
    std::string label = to_string(outcome.kind);
    if (outcome.kind == OutcomeKind::Cycled) {
        label += "(" + std::to_string(outcome.cycle_period) + ")";
    }
    return label;
}

std::string flags_label(const ExecutedRun& run) {
    std::string flags;
    if (!run.outcome.degenerate.alternated_nodes.empty()) flags += "alternated";
    if (!run.outcome.degenerate.one_sided_nodes.empty()) {
        if (!flags.empty()) flags += "+";
        flags += "one-sided";
    }
    if (run.outcome.inner_flagged) {
        if (!flags.empty()) flags += "+";
        flags += "inner-cap";
    }
    return flags.empty() ? "-" : flags;
}

}  // namespace

void emit_run_report(std::ostream& out, const RunConfig& config, std::span<const ExecutedRun> runs) {
    const GameSpec& g = config.game;
    out << "sig run report\n";
    out << "==============\n";
    out << "game: drift_kappa=" << format_real(g.drift_kappa) << " sigma0=" << format_real(g.sigma0)
        << " rho=" << format_real(g.rho) << " f_poly=[";
    for (size_t i = 0; i < g.running_payoff.poly_coeffs.size(); ++i) {
        out << (i ? " " : "") << format_real(g.running_payoff.poly_coeffs[i]);
    }
    out << "] f_abs=" << format_real(g.running_payoff.abs_coeff) << " c=[" << format_real(g.cost.c0)
        << " " << format_real(g.cost.c1) << " " << format_real(g.cost.c2) << " "
        << format_real(g.cost.c_sqrt) << "] g=[" << format_real(g.gain.g0) << " "
        << format_real(g.gain.g1) << "] symmetry_line=" << format_real(g.symmetry_line) << "\n";
    if (!runs.empty()) {
        const BoundaryData& bc = runs.front().disc.bc;
        out << "grid: x_max=" << format_real(config.x_max) << " impulse_mode="
            << (config.mode == ImpulseMode::Constrained ? "constrained" : "unconstrained")
            << " lbc=" << format_real(bc.lbc) << " rbc=" << format_real(bc.rbc)
            << (bc.heuristic ? " (heuristic)" : "") << "\n";
        if (!runs.front().disc.cost_positive()) {
            out << "warning: cost family is not strictly positive on the grid (min cost "
                << format_real(runs.front().disc.min_cost) << "); degenerate game risk\n";
        }
    }
    out << "solver: variant="
        << (config.driver.inner.variant == InnerVariant::Fppi ? "fppi" : "howard")
        << " lambda=" << format_real(config.driver.inner.lambda)
        << " inner_tol=" << format_real(config.driver.inner.inner_tol)
        << " tol=" << format_real(config.driver.tol) << " scale=" << format_real(config.driver.scale)
        << " run_mode="
        << (config.driver.stop_mode == StopMode::ToTolerance ? "to_tol" : "to_stagnation") << "\n\n";

    char row[512];
    std::snprintf(row, sizeof row, "%-12s %-5s %-18s %-12s %-12s %-12s %-22s %-22s %-4s %s\n", "h",
                  "its", "kind", "Diff", "maxResQVIs", "spike-excl", "boundary", "target", "UIP",
                  "flags");
    out << row;
    for (const ExecutedRun& r : runs) {
        const Outcome& o = r.outcome;
        const double s = r.disc.spec.symmetry_line;
        std::string boundary = o.nash.has_intervention ? format_real(o.nash.boundary + s) : "-";
        std::string target = o.nash.has_intervention ? format_real(o.nash.target + s) : "-";
        std::snprintf(row, sizeof row, "%-12s %-5d %-18s %-12.3e %-12.3e %-12.3e %-22s %-22s %-4s %s\n",
                      format_real(r.h).c_str(), o.iterations, kind_label(o).c_str(), o.final_diff,
                      o.residual.max_res_qvis, o.residual.max_res_excluding_spikes, boundary.c_str(),
                      target.c_str(), r.uip.holds ? "yes" : "no", flags_label(r).c_str());
        out << row;
    }
    out << "\n";

    for (const ExecutedRun& r : runs) {
        const Outcome& o = r.outcome;
        const double s = r.disc.spec.symmetry_line;
        out << "run h=" << format_real(r.h) << ": max|v|=" << format_real(o.max_payoff_magnitude)
            << " intervention_nodes=" << o.strategy.intervention_nodes(r.disc.grid).size()
            << " total_steps=" << o.total_steps << "\n";
        if (config.reference_boundary && o.nash.has_intervention) {
            out << "  reference boundary delta = "
                << format_real(std::abs(o.nash.boundary + s - *config.reference_boundary)) << "\n";
        }
        if (config.reference_target && o.nash.has_intervention) {
            out << "  reference target delta = "
                << format_real(std::abs(o.nash.target + s - *config.reference_target)) << "\n";
        }
        if (!o.degenerate.alternated_nodes.empty()) {
            out << "  alternated-intervention nodes:";
            for (int i : o.degenerate.alternated_nodes) out << " " << format_real(r.disc.grid.x(i) + s);
            out << "\n";
        }
        if (!o.degenerate.one_sided_nodes.empty()) {
            out << "  one-sided-intervention nodes:";
            for (int i : o.degenerate.one_sided_nodes) out << " " << format_real(r.disc.grid.x(i) + s);
            out << "\n";
        }
        if (r.characterization) {
            out << "  characterization gap ||u - v|| = " << format_real(r.characterization->gap) << "\n";
        }
        if (r.a0pp_check) {
            out << "  sampled (A0''): " << (r.a0pp_check->ok ? "ok" : "VIOLATED")
                << " max con = " << r.a0pp_check->max_con_observed << " over "
                << r.a0pp_check->trials << " trials\n";
        }
    }
}

int exit_code_for(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::ConvergedExact:
        case OutcomeKind::ConvergedTol: return 0;
        case OutcomeKind::Cycled: return 2;
        case OutcomeKind::Stagnated: return 3;
        case OutcomeKind::MaxIters: return 4;
    }
    return 1;
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"sig: equilibrium payoffs and Nash equilibria of symmetric impulse games"};
    std::string config_path;
    std::string output_dir;
    std::string solver;
    std::string diagnostics;
    bool sweep = false;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "run configuration file")->required();
    app.add_option("--output", output_dir, "output directory (overrides the config)");
    app.add_flag("--sweep", sweep, "run every h in the sweep section");
    app.add_option("--solver", solver, "inner solver variant")
        ->check(CLI::IsMember({"fppi", "howard"}));
    app.add_option("--diagnostics", diagnostics, "diagnostics level")
        ->check(CLI::IsMember({"off", "basic", "full"}));
    app.add_option("--seed", seed, "seed for sampled validators");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (solver == "fppi") cfg.driver.inner.variant = InnerVariant::Fppi;
        if (solver == "howard") cfg.driver.inner.variant = InnerVariant::Howard;
        if (diagnostics == "off") cfg.diagnostics = DiagLevel::Off;
        if (diagnostics == "basic") cfg.diagnostics = DiagLevel::Basic;
        if (diagnostics == "full") cfg.diagnostics = DiagLevel::Full;

        std::vector<double> hs;
        if (sweep) {
            if (cfg.sweep_h.empty()) {
                std::fprintf(stderr, "error: --sweep requires h_values in the [sweep] section\n");
                return 1;
            }
            hs = cfg.sweep_h;
        } else {
            hs = {cfg.h};
        }

        std::filesystem::create_directories(cfg.output_dir);
        std::vector<ExecutedRun> runs;
        runs.reserve(hs.size());
        int worst = 0;
        for (double h : hs) {
            runs.push_back(execute_run(cfg, h, seed));
            worst = std::max(worst, exit_code_for(runs.back().outcome.kind));
            const std::string name =
                sweep ? "solution_h" + format_real(h) + ".csv" : std::string("solution.csv");
            std::ofstream csv(std::filesystem::path(cfg.output_dir) / name);
            emit_solution_csv(csv, runs.back());
        }
        std::ofstream report(std::filesystem::path(cfg.output_dir) / "report.txt");
        emit_run_report(report, cfg, runs);
        return worst;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace sig
