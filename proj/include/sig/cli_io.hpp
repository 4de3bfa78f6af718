#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sig/diagnostics.hpp"
#include "sig/game_driver.hpp"

namespace sig {

enum class DiagLevel { Off, Basic, Full };

/// Declarative run configuration, parsed from a flat sectioned key = value
/// text file (see README for the format).
struct RunConfig {
    GameSpec game;

    double x_max = 0.0;
    double h = 0.0;
    ImpulseMode mode = ImpulseMode::Constrained;
    std::optional<double> lbc;  // manual Neumann overrides
    std::optional<double> rbc;

    DriverParams driver;

    std::string output_dir = ".";
    int precision = 17;
    DiagLevel diagnostics = DiagLevel::Basic;

    std::vector<double> sweep_h;
    std::optional<double> reference_boundary;
    std::optional<double> reference_target;
};

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int line_, const std::string& message)
        : std::runtime_error("config line " + std::to_string(line_) + ": " + message), line(line_) {}
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// One solved game plus its diagnostics, ready for emission.
struct ExecutedRun {
    double h = 0.0;
    Discretization disc;
    Outcome outcome;
    UipReport uip;
    std::optional<CharacterizationReport> characterization;  // diagnostics = full
    std::optional<A0DoublePrimeReport> a0pp_check;           // diagnostics = full, constrained sets
};

ExecutedRun execute_run(const RunConfig& config, double h, std::uint64_t seed);

/// Header `x,v,in_intervention,delta_star,impulse_target,residual`, one row
/// per node in ascending x, reals printed with round-trip precision.
void emit_solution_csv(std::ostream& out, const ExecutedRun& run);

/// Plain-text run report: one table row per executed run plus per-run detail
/// blocks (convergence kind, residuals, NE parameters, UIP verdict,
/// degenerate-equilibrium flags, reference deltas when configured).
void emit_run_report(std::ostream& out, const RunConfig& config, std::span<const ExecutedRun> runs);

/// Exit codes: 0 converged, 2 cycled, 3 stagnated, 4 max-iters, 1 usage or
/// config error. A sweep reports the worst code across its runs.
int exit_code_for(OutcomeKind kind);

int cli_main(int argc, const char* const* argv);

}  // namespace sig
