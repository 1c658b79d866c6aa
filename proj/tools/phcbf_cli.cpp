// phcbf: run energy-bounding scenarios, list presets, audit trajectories.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phcbf/errors.hpp"
#include "phcbf/scenario.hpp"
#include "phcbf/trajectory_io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kAuditFailed = 1;
constexpr int kConfigError = 2;

void print_audit(const phcbf::AuditReport& a) {
    std::printf("  balance residual %.3e (tol %.3e, %d violations, %d stencils excluded)\n",
                a.max_balance_residual, a.residual_tolerance, a.balance_violations,
                a.excluded_stencils);
    if (a.entered_safe_set) {
        std::printf("  invariance: min h %.3e after t = %.3f (tol %.1e)\n",
                    a.max_invariance_violation, a.entry_time, a.invariance_tolerance);
    } else {
        std::printf("  invariance: safe set never entered\n");
    }
    std::printf("  passivity violations %d, energy injection events %d, max p_inj %.3e\n",
                a.passivity_violations, a.stability_condition_violations, a.max_p_inj);
}

// Samples the plant structure before spending time on the simulation.
bool check_structure(const phcbf::ScenarioConfig& cfg, std::uint64_t seed) {
    const auto ms = phcbf::make_plant(cfg);
    const auto n = 2 * ms.dof;
    const phcbf::Vector lo = phcbf::Vector::Constant(n, -3.0);
    const phcbf::Vector hi = phcbf::Vector::Constant(n, 3.0);
    const auto samples = phcbf::sample_box(lo, hi, 100, seed);
    const auto ph = phcbf::validate_structure(phcbf::to_ph(ms), samples);
    std::vector<phcbf::Vector> configurations;
    for (const auto& x : samples) configurations.push_back(ms.positions(x));
    const auto mech = phcbf::validate_mechanical(ms, configurations);
    for (const auto& f : ph.failures) std::fprintf(stderr, "structure: %s\n", f.c_str());
    for (const auto& f : mech.failures) std::fprintf(stderr, "structure: %s\n", f.c_str());
    return ph.passed() && mech.passed();
}

int cmd_run(const std::string& target, std::optional<double> dt, std::optional<double> t_end,
            const std::vector<double>& gammas, std::optional<std::string> out,
            std::uint64_t seed) {
    auto cfg = phcbf::load_scenario(target);
    if (dt) cfg.sim.dt = *dt;
    if (t_end) cfg.sim.t_end = *t_end;
    if (!gammas.empty()) cfg.barrier.gammas = gammas;
    if (out) {
        cfg.outputs = *out;
    } else if (const char* env = std::getenv("PHCBF_OUT_DIR"); env && *env) {
        cfg.outputs = env;
    }
    cfg.validate();

    if (!check_structure(cfg, seed)) {
        return kAuditFailed;
    }
    const auto result = phcbf::run_scenario(cfg);
    std::printf("%s -> %s\n", cfg.name.c_str(), result.directory.string().c_str());
    for (const auto& run : result.runs) {
        std::printf("gamma %g: %s\n", run.gamma, run.passed() ? "ok" : "FAILED");
        if (run.trajectory.failure) {
            std::printf("  stopped: %s\n", run.trajectory.failure->c_str());
        }
        print_audit(run.audit);
        if (run.limit_cycle) {
            const auto& lc = *run.limit_cycle;
            std::printf("  limit cycle %s: H %.4f +- %.2e, recurrence %.2e, period %.3f s\n",
                        lc.detected ? "detected" : "not detected", lc.energy_mean,
                        lc.energy_spread, lc.recurrence_distance, lc.period);
        }
    }
    return result.passed() ? kOk : kAuditFailed;
}

int cmd_audit(const std::string& path, double t_on) {
    auto traj = phcbf::read_csv(std::filesystem::path(path));
    traj.t_on = t_on;
    if (traj.records.size() < 3) {
        throw phcbf::ConfigError("trajectory needs at least 3 records");
    }
    const auto report = phcbf::audit(traj);
    std::printf("%s: %s\n", path.c_str(), report.passed() ? "ok" : "FAILED");
    print_audit(report);
    return report.passed() ? kOk : kAuditFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-aware CBF safety filters for port-Hamiltonian systems"};
    app.require_subcommand(1);

    std::string target;
    std::optional<double> dt, t_end;
    std::vector<double> gammas;
    std::optional<std::string> out;
    std::uint64_t seed = 1;
    auto* run = app.add_subcommand("run", "Simulate a preset or JSON config");
    run->add_option("config", target, "Preset name or path to a JSON config")->required();
    run->add_option("--dt", dt, "Integration step [s]");
    run->add_option("--t-end", t_end, "Final time [s]");
    run->add_option("--gamma", gammas, "Class-K gain, repeatable (replaces the sweep)");
    run->add_option("--out", out, "Output directory (overrides PHCBF_OUT_DIR)");
    run->add_option("--seed", seed, "Seed for the structure sampling");

    auto* list = app.add_subcommand("list", "List presets");

    std::string csv;
    double t_on = 0.0;
    auto* aud = app.add_subcommand("audit", "Audit the power balance of a trajectory CSV");
    aud->add_option("csv", csv, "Trajectory CSV")->required()->check(CLI::ExistingFile);
    aud->add_option("--t-on", t_on, "Barrier activation time [s]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*list) {
            for (const auto& p : phcbf::list_presets()) {
                std::printf("%-12s %s\n", p.name.c_str(), p.description.c_str());
            }
            return kOk;
        }
        if (*run) {
            return cmd_run(target, dt, t_end, gammas, out, seed);
        }
        return cmd_audit(csv, t_on);
    } catch (const phcbf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const phcbf::ContractViolation& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "output error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kAuditFailed;
    }
}
