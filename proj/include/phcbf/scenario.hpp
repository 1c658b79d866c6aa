// Named experiment presets, JSON configuration, and the scenario runner that
// writes trajectories, plots and audit reports.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "phcbf/mechanical.hpp"
#include "phcbf/simulation.hpp"

namespace phcbf {

enum class Plant { mass_spring, double_pendulum };
enum class EnergyKind { total, kinetic };

/// h = sign·(E − limit) with E the total or kinetic energy; sign = −1 keeps
/// E ≤ limit, sign = +1 keeps E ≥ limit.
struct BarrierDescription {
    EnergyKind energy = EnergyKind::total;
    int sign = -1;
    double limit = 10.0;
    std::vector<double> gammas{0.5, 1.0, 2.0, 5.0};
};

struct LimitCycleCheck {
    bool enabled = false;
    double window = 10.0;
    double band = 1.0;
};

struct ScenarioConfig {
    std::string name;
    std::string description;
    Plant plant = Plant::mass_spring;
    MassSpringParams mass_spring;
    DoublePendulumParams double_pendulum;
    BarrierDescription barrier;
    std::vector<double> q0;
    std::vector<double> p0;
    double t_on = 0.0;
    SimConfig sim;
    std::string outputs = "out";
    LimitCycleCheck limit_cycle;
    double power_average_window = 2.0;  ///< running mean shown next to instantaneous powers

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

struct PresetInfo {
    std::string name;
    std::string description;
};

/// fig1-left, fig1-right, fig2-left, fig2-right, fig3.
std::vector<PresetInfo> list_presets();
std::optional<ScenarioConfig> find_preset(const std::string& name);

/// A preset name or a path to a JSON config file.
ScenarioConfig load_scenario(const std::string& preset_or_path);

MechanicalSystem make_plant(const ScenarioConfig& cfg);
EnergyCbfSpec make_energy_spec(const ScenarioConfig& cfg, const MechanicalSystem& ms, double gamma);
StateVector initial_state(const ScenarioConfig& cfg);

/// Simulates one γ of a scenario without touching the filesystem.
Trajectory simulate_scenario(const ScenarioConfig& cfg, double gamma,
                             const Tolerances& tol = default_tolerances());

/// Time averages of p_inj and p_diss over [t_end − window, t_end].
struct PowerAverages {
    double p_inj = 0.0;
    double p_diss = 0.0;
};
PowerAverages window_power_averages(const Trajectory& traj, double window);

struct GammaRun {
    double gamma = 0.0;
    Trajectory trajectory;
    AuditReport audit;
    std::optional<LimitCycleResult> limit_cycle;
    std::optional<PowerAverages> final_window_power;
    std::filesystem::path directory;

    [[nodiscard]] bool passed() const { return trajectory.complete() && audit.passed(); }
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<GammaRun> runs;
    std::filesystem::path directory;

    [[nodiscard]] bool passed() const;
};

/// Runs every γ in parallel and, when write_outputs is set, writes under
/// <outputs>/<name>/: config.json, report.json and per γ a trajectory CSV
/// plus phase, barrier, control, energy and power SVGs.
ScenarioResult run_scenario(const ScenarioConfig& cfg, bool write_outputs = true);

nlohmann::json report_json(const ScenarioResult& result);

/// Directory name used for one γ, e.g. "gamma_0.5".
std::string gamma_directory(double gamma);

}  // namespace phcbf
