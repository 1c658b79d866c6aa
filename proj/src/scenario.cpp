#include "phcbf/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "phcbf/errors.hpp"
#include "phcbf/svg_chart.hpp"
#include "phcbf/trajectory_io.hpp"

namespace phcbf {

using nlohmann::json;

namespace {

const char* plant_name(Plant p) {
    return p == Plant::mass_spring ? "mass_spring" : "double_pendulum";
}

const char* energy_name(EnergyKind e) {
    return e == EnergyKind::total ? "total" : "kinetic";
}

// Reads an optional field, reporting the dotted path on type errors.
template <typename T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("invalid config field '" + path + "." + key + "'");
    }
}

const json& section(const json& j, const char* key, bool required) {
    static const json empty = json::object();
    if (!j.contains(key)) {
        if (required) {
            throw ConfigError(std::string("missing config field '") + key + "'");
        }
        return empty;
    }
    if (!j.at(key).is_object()) {
        throw ConfigError(std::string("config field '") + key + "' must be an object");
    }
    return j.at(key);
}

ScenarioConfig mass_spring_preset(std::string name, std::string description) {
    ScenarioConfig cfg;
    cfg.name = std::move(name);
    cfg.description = std::move(description);
    cfg.plant = Plant::mass_spring;
    cfg.sim.dt = 1e-3;
    cfg.sim.t_end = 20.0;
    return cfg;
}

std::vector<ScenarioConfig> build_presets() {
    std::vector<ScenarioConfig> out;

    auto upper = mass_spring_preset("fig1-left", "mass-spring, total energy bounded above: h = 10 - H");
    upper.barrier = {EnergyKind::total, -1, 10.0, {0.5, 1.0, 2.0, 5.0}};
    upper.q0 = {0.0};
    upper.p0 = {8.0};
    out.push_back(upper);

    auto lower = mass_spring_preset("fig1-right", "mass-spring, total energy bounded below: h = H - 10");
    lower.barrier = {EnergyKind::total, +1, 10.0, {0.5, 1.0, 2.0, 5.0}};
    lower.q0 = {0.0};
    lower.p0 = {2.0};
    lower.sim.t_end = 40.0;
    out.push_back(lower);

    auto kin_in = mass_spring_preset("fig2-left", "mass-spring, kinetic energy bounded: h = 20 - Ke, start inside");
    kin_in.barrier = {EnergyKind::kinetic, -1, 20.0, {0.5, 1.0, 2.0, 5.0}};
    kin_in.q0 = {-8.0};
    kin_in.p0 = {6.0};
    out.push_back(kin_in);

    auto kin_out = mass_spring_preset("fig2-right", "mass-spring, kinetic energy bounded: h = 20 - Ke, start outside");
    kin_out.barrier = {EnergyKind::kinetic, -1, 20.0, {0.5, 1.0, 2.0, 5.0}};
    kin_out.q0 = {0.0};
    kin_out.p0 = {10.0};
    out.push_back(kin_out);

    ScenarioConfig pump;
    pump.name = "fig3";
    pump.description = "double pendulum, total energy bounded below (h = H + 40), barrier on at t = 10 s";
    pump.plant = Plant::double_pendulum;
    pump.barrier = {EnergyKind::total, +1, -40.0, {0.5, 1.0, 2.0, 5.0}};
    pump.q0 = {0.5, 0.21};
    pump.p0 = {0.0, 0.0};
    pump.t_on = 10.0;
    pump.sim.dt = 1e-3;
    pump.sim.t_end = 40.0;
    pump.limit_cycle = {true, 10.0, 1.0};
    out.push_back(pump);

    return out;
}

double mean_over(const std::vector<TrajectoryRecord>& rec, std::size_t begin, std::size_t end,
                 double TrajectoryRecord::*field) {
    // Trapezoidal time average.
    if (end - begin < 2) {
        return begin < end ? rec[begin].*field : 0.0;
    }
    double area = 0.0;
    for (std::size_t i = begin + 1; i < end; ++i) {
        area += 0.5 * (rec[i].*field + rec[i - 1].*field) * (rec[i].t - rec[i - 1].t);
    }
    return area / (rec[end - 1].t - rec[begin].t);
}

std::vector<double> running_mean(const std::vector<double>& t, const std::vector<double>& v,
                                 double window) {
    std::vector<double> out(v.size());
    double sum = 0.0;
    std::size_t lo = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sum += v[i];
        while (t[i] - t[lo] > window) {
            sum -= v[lo++];
        }
        out[i] = sum / static_cast<double>(i - lo + 1);
    }
    return out;
}

json audit_json(const AuditReport& a) {
    return json{{"passed", a.passed()},
                {"max_balance_residual", a.max_balance_residual},
                {"max_balance_residual_all", a.max_balance_residual_all},
                {"residual_tolerance", a.residual_tolerance},
                {"balance_violations", a.balance_violations},
                {"excluded_stencils", a.excluded_stencils},
                {"entered_safe_set", a.entered_safe_set},
                {"entry_time", a.entry_time},
                {"max_invariance_violation", a.max_invariance_violation},
                {"invariance_tolerance", a.invariance_tolerance},
                {"passivity_violations", a.passivity_violations},
                {"stability_condition_violations", a.stability_condition_violations},
                {"min_p_diss", a.max_dissipation_defect},
                {"max_p_inj", a.max_p_inj}};
}

void write_plots(const ScenarioConfig& cfg, const GammaRun& run) {
    const auto& rec = run.trajectory.records;
    const auto dof = run.trajectory.n / 2;
    std::vector<double> t;
    t.reserve(rec.size());
    for (const auto& r : rec) {
        t.push_back(r.t);
    }
    auto column = [&](auto get) {
        std::vector<double> v;
        v.reserve(rec.size());
        for (const auto& r : rec) {
            v.push_back(get(r));
        }
        return v;
    };
    char gamma_label[32];
    std::snprintf(gamma_label, sizeof gamma_label, "gamma = %g", run.gamma);
    const std::string suffix = std::string(" (") + gamma_label + ")";

    LineChart phase;
    if (dof == 1) {
        phase.title = "phase space" + suffix;
        phase.x_label = "q";
        phase.y_label = "p";
        phase.series.push_back({"trajectory", column([](const auto& r) { return r.x[0]; }),
                                column([](const auto& r) { return r.x[1]; }), "", false});
    } else {
        phase.title = "joint space" + suffix;
        phase.x_label = "q_1 [rad]";
        phase.y_label = "q_2 [rad]";
        phase.series.push_back({"trajectory", column([](const auto& r) { return r.x[0]; }),
                                column([](const auto& r) { return r.x[1]; }), "", false});
    }
    write_svg(run.directory / "phase.svg", phase);

    LineChart barrier{"CBF value" + suffix, "t [s]", "h", {}, {0.0}};
    barrier.series.push_back({"h", t, column([](const auto& r) { return r.h; }), "", false});
    write_svg(run.directory / "barrier.svg", barrier);

    LineChart control{"safety-critical input" + suffix, "t [s]", "u", {}, {}};
    for (Eigen::Index i = 0; i < run.trajectory.m; ++i) {
        control.series.push_back({"u_" + std::to_string(i + 1), t,
                                  column([i](const auto& r) { return r.u[i]; }), "", false});
    }
    write_svg(run.directory / "control.svg", control);

    LineChart energy{"energy" + suffix, "t [s]", "energy [J]", {}, {}};
    energy.series.push_back({"H", t, column([](const auto& r) { return r.H; }), "", false});
    energy.series.push_back({"Ke", t, column([](const auto& r) { return r.Ke; }), "", true});
    energy.series.push_back({"V", t, column([](const auto& r) { return r.V; }), "", true});
    if (cfg.barrier.energy == EnergyKind::total) {
        energy.h_lines.push_back(cfg.barrier.limit);
    }
    write_svg(run.directory / "energy.svg", energy);

    const auto p_inj = column([](const auto& r) { return r.p_inj; });
    const auto p_diss = column([](const auto& r) { return -r.p_diss; });
    LineChart power{"power terms" + suffix, "t [s]", "power [W]", {}, {0.0}};
    power.series.push_back({"P_inj", t, p_inj, "#d62728", false});
    power.series.push_back({"-p_diss", t, p_diss, "#1f77b4", false});
    power.series.push_back(
        {"P_inj (avg)", t, running_mean(t, p_inj, cfg.power_average_window), "#d62728", true});
    power.series.push_back(
        {"-p_diss (avg)", t, running_mean(t, p_diss, cfg.power_average_window), "#1f77b4", true});
    write_svg(run.directory / "power.svg", power);
}

}  // namespace

void ScenarioConfig::validate() const {
    if (name.empty()) {
        throw ConfigError("invalid config field 'name': must be non-empty");
    }
    if (barrier.gammas.empty()) {
        throw ConfigError("invalid config field 'barrier.gammas': must be non-empty");
    }
    for (double g : barrier.gammas) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw ConfigError("invalid config field 'barrier.gammas': values must be positive");
        }
    }
    if (barrier.sign != 1 && barrier.sign != -1) {
        throw ConfigError("invalid config field 'barrier.sign': must be +1 or -1");
    }
    if (!std::isfinite(barrier.limit)) {
        throw ConfigError("invalid config field 'barrier.limit'");
    }
    const std::size_t dof = plant == Plant::mass_spring ? 1 : 2;
    if (q0.size() != dof) {
        throw ConfigError("invalid config field 'initial_state.q': expected " +
                          std::to_string(dof) + " values");
    }
    if (p0.size() != dof) {
        throw ConfigError("invalid config field 'initial_state.p': expected " +
                          std::to_string(dof) + " values");
    }
    for (double v : q0) {
        if (!std::isfinite(v)) throw ConfigError("invalid config field 'initial_state.q'");
    }
    for (double v : p0) {
        if (!std::isfinite(v)) throw ConfigError("invalid config field 'initial_state.p'");
    }
    if (!(t_on >= 0.0) || !std::isfinite(t_on)) {
        throw ConfigError("invalid config field 't_on': must be non-negative");
    }
    if (!(sim.dt > 0.0) || !std::isfinite(sim.dt)) {
        throw ConfigError("invalid config field 'sim.dt': must be positive");
    }
    if (!(sim.t_end > 0.0) || !std::isfinite(sim.t_end)) {
        throw ConfigError("invalid config field 'sim.t_end': must be positive");
    }
    if (sim.record_stride < 1) {
        throw ConfigError("invalid config field 'sim.record_stride': must be at least 1");
    }
    if (plant == Plant::mass_spring) {
        if (!(mass_spring.mass > 0.0)) throw ConfigError("invalid config field 'plant.mass'");
        if (!(mass_spring.stiffness >= 0.0)) throw ConfigError("invalid config field 'plant.stiffness'");
    } else {
        const auto& d = double_pendulum;
        if (!(d.m1 > 0.0)) throw ConfigError("invalid config field 'plant.m1'");
        if (!(d.m2 > 0.0)) throw ConfigError("invalid config field 'plant.m2'");
        if (!(d.l1 > 0.0)) throw ConfigError("invalid config field 'plant.l1'");
        if (!(d.l2 > 0.0)) throw ConfigError("invalid config field 'plant.l2'");
        if (!(d.joint_damping >= 0.0)) throw ConfigError("invalid config field 'plant.joint_damping'");
    }
    if (limit_cycle.enabled && (!(limit_cycle.window > 0.0) || !(limit_cycle.band > 0.0))) {
        throw ConfigError("invalid config field 'limit_cycle': window and band must be positive");
    }
    if (!(power_average_window > 0.0)) {
        throw ConfigError("invalid config field 'plots.power_average_window'");
    }
}

json to_json(const ScenarioConfig& cfg) {
    json plant{{"type", plant_name(cfg.plant)}};
    if (cfg.plant == Plant::mass_spring) {
        plant["mass"] = cfg.mass_spring.mass;
        plant["stiffness"] = cfg.mass_spring.stiffness;
    } else {
        const auto& d = cfg.double_pendulum;
        plant["m1"] = d.m1;
        plant["m2"] = d.m2;
        plant["l1"] = d.l1;
        plant["l2"] = d.l2;
        plant["joint_damping"] = d.joint_damping;
        plant["gravity"] = d.gravity;
    }
    return json{{"name", cfg.name},
                {"description", cfg.description},
                {"plant", plant},
                {"barrier",
                 {{"energy", energy_name(cfg.barrier.energy)},
                  {"sign", cfg.barrier.sign},
                  {"limit", cfg.barrier.limit},
                  {"gammas", cfg.barrier.gammas}}},
                {"initial_state", {{"q", cfg.q0}, {"p", cfg.p0}}},
                {"t_on", cfg.t_on},
                {"sim",
                 {{"dt", cfg.sim.dt},
                  {"t_end", cfg.sim.t_end},
                  {"record_stride", cfg.sim.record_stride},
                  {"integrator", "rk4"}}},
                {"outputs", cfg.outputs},
                {"limit_cycle",
                 {{"enabled", cfg.limit_cycle.enabled},
                  {"window", cfg.limit_cycle.window},
                  {"band", cfg.limit_cycle.band}}},
                {"plots", {{"power_average_window", cfg.power_average_window}}}};
}

ScenarioConfig scenario_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    ScenarioConfig cfg;
    read(j, "name", "", cfg.name);
    read(j, "description", "", cfg.description);

    const json& plant = section(j, "plant", true);
    std::string type;
    read(plant, "type", "plant", type);
    if (type == "mass_spring") {
        cfg.plant = Plant::mass_spring;
        read(plant, "mass", "plant", cfg.mass_spring.mass);
        read(plant, "stiffness", "plant", cfg.mass_spring.stiffness);
    } else if (type == "double_pendulum") {
        cfg.plant = Plant::double_pendulum;
        auto& d = cfg.double_pendulum;
        read(plant, "m1", "plant", d.m1);
        read(plant, "m2", "plant", d.m2);
        read(plant, "l1", "plant", d.l1);
        read(plant, "l2", "plant", d.l2);
        read(plant, "joint_damping", "plant", d.joint_damping);
        read(plant, "gravity", "plant", d.gravity);
    } else {
        throw ConfigError("invalid config field 'plant.type': unknown plant '" + type + "'");
    }

    const json& barrier = section(j, "barrier", true);
    std::string energy = energy_name(cfg.barrier.energy);
    read(barrier, "energy", "barrier", energy);
    if (energy == "total") {
        cfg.barrier.energy = EnergyKind::total;
    } else if (energy == "kinetic") {
        cfg.barrier.energy = EnergyKind::kinetic;
    } else {
        throw ConfigError("invalid config field 'barrier.energy': expected total or kinetic");
    }
    read(barrier, "sign", "barrier", cfg.barrier.sign);
    read(barrier, "limit", "barrier", cfg.barrier.limit);
    read(barrier, "gammas", "barrier", cfg.barrier.gammas);

    const json& x0 = section(j, "initial_state", true);
    read(x0, "q", "initial_state", cfg.q0);
    read(x0, "p", "initial_state", cfg.p0);
    read(j, "t_on", "", cfg.t_on);

    const json& sim = section(j, "sim", false);
    read(sim, "dt", "sim", cfg.sim.dt);
    read(sim, "t_end", "sim", cfg.sim.t_end);
    read(sim, "record_stride", "sim", cfg.sim.record_stride);
    std::string integrator = "rk4";
    read(sim, "integrator", "sim", integrator);
    if (integrator != "rk4") {
        throw ConfigError("invalid config field 'sim.integrator': only rk4 is supported");
    }
    read(j, "outputs", "", cfg.outputs);

    const json& lc = section(j, "limit_cycle", false);
    read(lc, "enabled", "limit_cycle", cfg.limit_cycle.enabled);
    read(lc, "window", "limit_cycle", cfg.limit_cycle.window);
    read(lc, "band", "limit_cycle", cfg.limit_cycle.band);
    const json& plots = section(j, "plots", false);
    read(plots, "power_average_window", "plots", cfg.power_average_window);

    cfg.validate();
    return cfg;
}

std::vector<PresetInfo> list_presets() {
    std::vector<PresetInfo> out;
    for (const auto& p : build_presets()) {
        out.push_back({p.name, p.description});
    }
    return out;
}

std::optional<ScenarioConfig> find_preset(const std::string& name) {
    for (auto& p : build_presets()) {
        if (p.name == name) {
            return p;
        }
    }
    return std::nullopt;
}

ScenarioConfig load_scenario(const std::string& preset_or_path) {
    if (auto preset = find_preset(preset_or_path)) {
        return *preset;
    }
    std::ifstream is(preset_or_path);
    if (!is) {
        throw ConfigError("'" + preset_or_path + "' is neither a preset nor a readable file");
    }
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + preset_or_path + ": " + e.what());
    }
    return scenario_from_json(j);
}

MechanicalSystem make_plant(const ScenarioConfig& cfg) {
    return cfg.plant == Plant::mass_spring ? make_mass_spring(cfg.mass_spring)
                                           : make_double_pendulum(cfg.double_pendulum);
}

EnergyCbfSpec make_energy_spec(const ScenarioConfig& cfg, const MechanicalSystem& ms,
                               double gamma) {
    const int s = cfg.barrier.sign;
    EnergyCbfSpec spec;
    spec.sign = s;
    spec.c = -s * cfg.barrier.limit;
    spec.alpha = ClassKFunction::linear(gamma);
    if (cfg.barrier.energy == EnergyKind::total) {
        // ±H = ±K_e ± V: the potential is carried by h̄.
        spec.hbar = [V = ms.potential, s](const Vector& q) { return s * V(q); };
        spec.grad_hbar = [dV = ms.grad_potential, s](const Vector& q) -> Vector {
            return s * dV(q);
        };
    }
    return spec;
}

StateVector initial_state(const ScenarioConfig& cfg) {
    const auto dof = static_cast<Eigen::Index>(cfg.q0.size());
    StateVector x(2 * dof);
    for (Eigen::Index i = 0; i < dof; ++i) {
        x[i] = cfg.q0[static_cast<std::size_t>(i)];
        x[dof + i] = cfg.p0[static_cast<std::size_t>(i)];
    }
    return x;
}

Trajectory simulate_scenario(const ScenarioConfig& cfg, double gamma, const Tolerances& tol) {
    cfg.validate();
    const MechanicalSystem ms = make_plant(cfg);
    const PhSystem sys = to_ph(ms);
    const Barrier barrier = to_barrier(ms, make_energy_spec(cfg, ms, gamma), cfg.t_on);
    const EnergySplit split = energy_split(ms);
    return simulate(initial_state(cfg), sys, &barrier, cfg.sim, &split, tol);
}

PowerAverages window_power_averages(const Trajectory& traj, double window) {
    const auto& rec = traj.records;
    if (rec.empty()) {
        return {};
    }
    const double t0 = rec.back().t - window;
    std::size_t begin = 0;
    while (begin < rec.size() && rec[begin].t < t0) {
        ++begin;
    }
    return PowerAverages{mean_over(rec, begin, rec.size(), &TrajectoryRecord::p_inj),
                         mean_over(rec, begin, rec.size(), &TrajectoryRecord::p_diss)};
}

bool ScenarioResult::passed() const {
    for (const auto& r : runs) {
        if (!r.passed()) {
            return false;
        }
    }
    return true;
}

std::string gamma_directory(double gamma) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "gamma_%g", gamma);
    return buf;
}

json report_json(const ScenarioResult& result) {
    json runs = json::array();
    for (const auto& r : result.runs) {
        json entry{{"gamma", r.gamma},
                   {"passed", r.passed()},
                   {"records", r.trajectory.records.size()},
                   {"audit", audit_json(r.audit)}};
        entry["failure"] = r.trajectory.failure ? json(*r.trajectory.failure) : json(nullptr);
        if (r.limit_cycle) {
            const auto& lc = *r.limit_cycle;
            entry["limit_cycle"] = {{"detected", lc.detected},
                                    {"energy_mean", lc.energy_mean},
                                    {"energy_spread", lc.energy_spread},
                                    {"recurrence_distance", lc.recurrence_distance},
                                    {"period", lc.period}};
        }
        if (r.final_window_power) {
            entry["final_window_power"] = {{"p_inj", r.final_window_power->p_inj},
                                           {"p_diss", r.final_window_power->p_diss}};
        }
        runs.push_back(std::move(entry));
    }
    return json{{"scenario", result.config.name}, {"passed", result.passed()}, {"runs", runs}};
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, bool write_outputs) {
    cfg.validate();
    ScenarioResult result;
    result.config = cfg;
    result.directory = std::filesystem::path(cfg.outputs) / cfg.name;

    if (write_outputs) {
        std::error_code ec;
        std::filesystem::create_directories(result.directory, ec);
        if (ec) {
            throw ConfigError("cannot create output directory " + result.directory.string() +
                              ": " + ec.message());
        }
        std::ofstream os(result.directory / "config.json");
        if (!os) {
            throw ConfigError("output directory is not writable: " + result.directory.string());
        }
        os << to_json(cfg).dump(2) << '\n';
    }

    std::vector<std::future<GammaRun>> jobs;
    for (double gamma : cfg.barrier.gammas) {
        jobs.push_back(std::async(std::launch::async, [&cfg, gamma] {
            GammaRun run;
            run.gamma = gamma;
            run.trajectory = simulate_scenario(cfg, gamma);
            if (run.trajectory.records.size() >= 2) {
                run.audit = audit(run.trajectory);
            }
            if (cfg.limit_cycle.enabled) {
                const auto& rec = run.trajectory.records;
                if (rec.size() >= 3 && rec.back().t - rec.front().t > 2.0 * cfg.limit_cycle.window) {
                    run.limit_cycle = detect_limit_cycle(run.trajectory, cfg.limit_cycle.window,
                                                         cfg.limit_cycle.band);
                    run.final_window_power =
                        window_power_averages(run.trajectory, cfg.limit_cycle.window);
                }
            }
            return run;
        }));
    }
    for (auto& job : jobs) {
        result.runs.push_back(job.get());
    }

    if (write_outputs) {
        for (auto& run : result.runs) {
            run.directory = result.directory / gamma_directory(run.gamma);
            std::filesystem::create_directories(run.directory);
            write_csv(run.directory / "trajectory.csv", run.trajectory);
            write_plots(cfg, run);
        }
        std::ofstream os(result.directory / "report.json");
        if (!os) {
            throw ConfigError("cannot write report in " + result.directory.string());
        }
        os << report_json(result).dump(2) << '\n';
    }
    return result;
}

}  // namespace phcbf
