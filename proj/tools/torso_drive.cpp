// torso-drive: closed-loop runs, sweeps, coupling simulation, metrics and the live server.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "torso/coupling.hpp"
#include "torso/error.hpp"
#include "torso/harness.hpp"
#include "torso/io.hpp"
#include "torso/kernels.hpp"
#include "torso/server.hpp"

namespace fs = std::filesystem;
using namespace torso;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitAborted = 3;

struct Globals {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool literal_eq12 = false;
};

io::ConfigFile load(const Globals& g) {
    io::ConfigFile c = g.config.empty() ? io::ConfigFile{} : io::load_config(g.config);
    if (g.literal_eq12) c.mapping.literal_eq12 = true;
    return c;
}

// Writes `body` to <out>/<name> when --out is set, otherwise to stdout.
void emit(const Globals& g, const std::string& name, const std::string& body) {
    if (g.out.empty()) {
        std::cout << body;
        return;
    }
    fs::create_directories(g.out);
    std::ofstream f(fs::path(g.out) / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(g.out) / name).string());
    f << body;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << body;
}

harness::ScenarioConfig scenario(const Globals& g, const io::ConfigFile& c) {
    auto s = harness::default_scenario();
    s.mapping = c.mapping;
    if (!c.user.empty()) s.user = io::user_from_json(c.user, s.user);
    s = io::scenario_from_json(c.scenario, s);
    if (c.profile) {
        s.profile = c.profile;
        s.calibrate = false;
    }
    if (g.seed) s.seed = *g.seed;
    return s;
}

int cmd_drive(const Globals& g, const std::optional<std::string>& course, const std::optional<double>& speed,
              bool no_calibrate) {
    const auto c = load(g);
    auto s = scenario(g, c);
    if (course) s.name = *course;
    if (speed) s.driver.target_speed = *speed;
    if (no_calibrate) s.calibrate = false;
    const auto r = harness::run_closed_loop(s);

    std::ostringstream metrics;
    io::write_metrics_header(metrics);
    io::write_metrics_row(metrics, s.name, r.metrics);
    if (g.out.empty()) {
        std::cout << metrics.str();
    } else {
        fs::create_directories(g.out);
        const fs::path out(g.out);
        std::ostringstream trace;
        io::write_trace(trace, r.trace);
        write_file(out / "trace.jsonl", trace.str());
        write_file(out / "metrics.csv", metrics.str());
        const auto path = s.name == "circle" ? vehicle::build_circle(s.radius) : vehicle::build_figure8(s.straight_len, s.radius);
        write_file(out / "path.json", io::to_json(path).dump() + "\n");
        write_file(out / "profile.json", io::to_json(r.profile).dump(2) + "\n");
    }
    std::cerr << "status: " << harness::to_string(r.status) << ", safety stops: " << r.safety_stops
              << ", samples: " << r.trace.samples.size() << "\n";
    return r.status == harness::RunStatus::Completed ? 0 : kExitAborted;
}

int cmd_velocity_space(const Globals& g, int grid) {
    const auto c = load(g);
    const auto profile = c.profile ? *c.profile : CalibrationProfile::identity();
    const auto pts = kernels::velocity_space_parallel(profile, c.mapping, grid, grid);
    std::ostringstream os;
    io::write_velocity_space(os, pts);
    emit(g, "velocity_space.csv", os.str());
    return 0;
}

int cmd_stiffness(const Globals& g, const std::vector<double>& kappas, double dt_ms, bool serial) {
    const auto c = load(g);
    harness::StiffnessStudyConfig sc;
    sc.params = c.coupling;
    sc.profile = coupling::ForceProfile::staircase(c.coupling.h_max);
    sc.sim.dt = dt_ms * 1e-3;
    const auto rows = serial ? kernels::stiffness_serial(kappas, sc) : kernels::stiffness_parallel(kappas, sc);
    std::ostringstream os;
    io::write_stiffness(os, rows);
    emit(g, "stiffness.csv", os.str());
    for (const auto& r : rows)
        if (r.fell) std::cerr << "kappa " << r.kappa << ": pendulum fell at t=" << r.fell_at << " s\n";
    return 0;
}

int cmd_simulate(const Globals& g, std::optional<double> kappa, double dt_ms, double theta0) {
    const auto c = load(g);
    auto p = c.coupling;
    if (kappa) p.kappa = *kappa;
    coupling::SimulationOptions opt;
    opt.dt = dt_ms * 1e-3;
    opt.initial.theta = theta0;
    const auto trace = coupling::simulate(coupling::ForceProfile::staircase(p.h_max), p, opt);
    std::ostringstream os;
    io::write_coupling(os, trace);
    emit(g, "coupling.jsonl", os.str());
    std::cerr << "A_aa = " << coupling::average_angular_accel(trace) << " rad/s^2\n";
    return 0;
}

int cmd_metrics(const Globals& g, const std::string& trace_file, const std::string& path_file) {
    const auto trace = io::read_trace(fs::path(trace_file));
    const auto path = io::path_from_json(io::read_json(path_file));
    const auto m = vehicle::evaluate(trace, path);
    std::ostringstream os;
    io::write_metrics_header(os);
    io::write_metrics_row(os, fs::path(trace_file).stem().string(), m);
    emit(g, "metrics.csv", os.str());
    return 0;
}

int cmd_calibrate(const Globals& g, const std::string& recording) {
    const auto c = load(g);
    const auto frames = io::read_frames(fs::path(recording));
    const CalibrationProtocol protocol;
    const auto seg = segment_recording(frames, protocol);
    const auto circuit = c.profile ? c.profile->circuit : AdcCircuit{};
    const auto layout = c.profile ? c.profile->layout : SensorLayout{};
    const auto neutral = calibrate_neutral(seg.neutral, circuit, protocol.sample_rate_hz);
    PostureCalibrationOptions opts;
    opts.theta_fm_default_deg = c.mapping.theta_fm_default;
    const auto r = calibrate_postures(seg.dwells, neutral, layout, circuit, opts);
    for (std::size_t i = 0; i < r.sensor_ok.size(); ++i)
        if (!r.sensor_ok[i]) std::cerr << "warning: sensor " << i << " never activated; weight left at 1\n";
    std::cerr << "f1 fit residual (rms): " << r.fit_residual_rms << "\n";
    auto j = io::to_json(r.profile);
    j["mapping"] = io::to_json(c.mapping);
    emit(g, "profile.json", j.dump(2) + "\n");
    return 0;
}

int cmd_synth_recording(const Globals& g) {
    const auto c = load(g);
    const auto s = scenario(g, c);
    std::mt19937_64 rng(s.seed);
    const auto frames = harness::record_calibration(s.user, s.protocol, &rng);
    std::ostringstream os;
    io::write_frames(os, frames);
    emit(g, "recording.jsonl", os.str());
    return 0;
}

volatile std::sig_atomic_t g_stop = 0;

extern "C" void on_signal(int) { g_stop = 1; }

int cmd_serve(const Globals& g, const std::string& host, unsigned short port) {
    const auto c = load(g);
    server::ServerConfig sc;
    sc.host = host;
    sc.port = port;
    sc.mapping = c.mapping;
    if (!c.user.empty()) sc.user = io::user_from_json(c.user, sc.user);
    server::Server srv(sc);
    const auto bound = srv.start();
    std::cerr << "listening on " << host << ":" << bound << " (ws subprotocol " << telemetry::kSubprotocol << ")\n";
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    srv.stop();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Torso-interface simulator: mapping pipeline, coupling dynamics and path-following harness"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON config (calibration profile, mapping, coupling, scenario, user)")
        ->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory (stdout when omitted)");
    app.add_option("--seed", g.seed, "Random seed");
    app.add_flag("--literal-eq12", g.literal_eq12, "Use the right-turn angular weight as printed");

    auto* drive = app.add_subcommand("drive", "Run the closed-loop scenario");
    std::optional<std::string> course;
    std::optional<double> speed;
    bool no_calibrate = false;
    drive->add_option("--course", course, "figure8 or circle")->check(CLI::IsMember({"figure8", "circle"}));
    drive->add_option("--target-speed", speed, "Target speed, m/s (overrides cruise intensity)");
    drive->add_flag("--no-calibrate", no_calibrate, "Use the synthetic user's ideal profile");

    auto* vs = app.add_subcommand("velocity-space", "Sweep COP x bend angle and emit normalized (v, w)");
    int grid = 101;
    vs->add_option("--grid", grid, "Grid points per axis")->check(CLI::Range(10, 5000));

    auto* ss = app.add_subcommand("stiffness-sweep", "Staged-force study over spring stiffness values");
    std::vector<double> kappas{1000, 1308, 1500, 2000, 2500, 3000};
    double dt_ms = 1.0;
    bool serial = false;
    ss->add_option("--kappa", kappas, "Stiffness values, N/m")->delimiter(',');
    ss->add_option("--dt-ms", dt_ms, "Integration step, ms")->check(CLI::Range(0.01, 10.0));
    ss->add_flag("--serial", serial, "Use the serial reference kernel");

    auto* sim = app.add_subcommand("simulate-coupling", "Simulate the staged-force profile, JSON Lines per step");
    std::optional<double> kappa;
    double sim_dt_ms = 1.0;
    double theta0 = 0.0;
    sim->add_option("--kappa", kappa, "Spring stiffness, N/m");
    sim->add_option("--dt-ms", sim_dt_ms, "Integration step, ms")->check(CLI::Range(0.01, 10.0));
    sim->add_option("--theta0", theta0, "Initial lean, rad");

    auto* met = app.add_subcommand("metrics", "Compute CT, A_a, A_e for a recorded trace");
    std::string trace_file;
    std::string path_file;
    met->add_option("trace", trace_file, "Trace, JSON Lines")->required()->check(CLI::ExistingFile);
    met->add_option("path", path_file, "Path, JSON")->required()->check(CLI::ExistingFile);

    auto* cal = app.add_subcommand("calibrate", "Build a calibration profile from a recorded session");
    std::string recording;
    cal->add_option("recording", recording, "Sensor frames, JSON Lines")->required()->check(CLI::ExistingFile);

    auto* synth = app.add_subcommand("synth-recording", "Write a synthetic calibration recording");

    auto* serve = app.add_subcommand("serve", "Run the live session server");
    std::string host = "127.0.0.1";
    unsigned short port = 8642;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Bind port (0 picks a free one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        if (*drive) return cmd_drive(g, course, speed, no_calibrate);
        if (*vs) return cmd_velocity_space(g, grid);
        if (*ss) return cmd_stiffness(g, kappas, dt_ms, serial);
        if (*sim) return cmd_simulate(g, kappa, sim_dt_ms, theta0);
        if (*met) return cmd_metrics(g, trace_file, path_file);
        if (*cal) return cmd_calibrate(g, recording);
        if (*synth) return cmd_synth_recording(g);
        if (*serve) return cmd_serve(g, host, port);
    } catch (const std::invalid_argument& e) { // InputError, ConfigError
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const CalibrationError& e) {
        std::cerr << "calibration failed: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
