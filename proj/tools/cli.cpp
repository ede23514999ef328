#include "mgrid/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mgrid/config.hpp"
#include "mgrid/csv.hpp"
#include "mgrid/equilibrium.hpp"
#include "mgrid/linearize.hpp"
#include "mgrid/report.hpp"
#include "mgrid/sim.hpp"
#include "mgrid/stability.hpp"

namespace mgrid {

namespace {

double parse_real(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ValidationError(what + ": '" + text + "' is not a finite number");
    }
    return v;
}

struct RunSpec {
    std::string preset;
    std::string config_path;
    std::string model = "all";
    std::optional<double> k_p;
    std::optional<double> k_q;
    std::string kp_range;
    std::string kq_grid;
    std::string out_dir;
    // simulate
    double t_end = 1.0;
    std::string init = "cold";
    double perturbation = 1e-3;
    std::string x0;
};

// Caption sweep endpoints of the eigenloci figures.
GridSpec default_kp_range(const std::string& preset) {
    if (preset == "rx-gg1") return {6e-5, 4.4e-3, 50};
    if (preset == "rx-ll1") return {6e-5, 7e-3, 50};
    return {6e-5, 5.3e-4, 50};
}

class Runner {
public:
    Runner(const RunSpec& spec, std::ostream& out, std::ostream& err) : spec_(spec), out_(out), err_(err) {
        if (!spec.preset.empty() && !spec.config_path.empty()) {
            throw ValidationError("--preset and --config are mutually exclusive");
        }
        if (!spec.config_path.empty()) {
            std::ifstream in(spec.config_path);
            if (!in) throw ValidationError("cannot read config file " + spec.config_path);
            std::stringstream text;
            text << in.rdbuf();
            file_ = parse_config_file(text.str());
            label_ = std::filesystem::path(spec.config_path).stem().string();
        } else {
            label_ = spec.preset.empty() ? preset_name(RxPreset::AboutOne) : spec.preset;
            file_.grid = scenario(parse_preset(label_));
        }
        MicrogridConfig& g = file_.grid;
        for (auto& inv : g.inverter) {
            if (spec.k_p) inv.k_p = *spec.k_p;
            if (spec.k_q) inv.k_q = *spec.k_q;
        }
        g.validate();

        if (spec.model == "all") {
            models_.assign(std::begin(kAllModels), std::end(kAllModels));
        } else {
            models_.push_back(parse_model(spec.model));
        }

        if (!spec.out_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(spec.out_dir, ec);
            const std::filesystem::path probe = std::filesystem::path(spec.out_dir) / ".write_test";
            std::ofstream touch(probe);
            if (ec || !touch) throw ValidationError("output directory " + spec.out_dir + " is not writable");
            touch.close();
            std::filesystem::remove(probe, ec);
        }
    }

    void equilibrium() {
        for (ModelKind kind : models_) {
            const Equilibrium eq = find_equilibrium(kind, file_.grid);
            emit("equilibrium", kind, [&](std::ostream& os) { write_equilibrium_csv(os, eq); });
        }
    }

    void linearize() {
        for (ModelKind kind : models_) {
            const LinearModel lm = linearize_analytic(find_equilibrium(kind, file_.grid));
            const EigenSet set = eigen(lm);
            emit("gamma", kind, [&](std::ostream& os) { write_matrix_csv(os, lm.gamma, lm.state_labels); });
            emit("a", kind, [&](std::ostream& os) { write_matrix_csv(os, lm.a, lm.state_labels); });
            emit("eigenvalues", kind, [&](std::ostream& os) { write_eigenvalues_csv(os, set); });
        }
    }

    void eigenloci() {
        const GridSpec r = spec_.kp_range.empty() ? default_kp_range(label_) : parse_grid_spec(spec_.kp_range);
        for (ModelKind kind : models_) {
            const EigenlociSweep sweep = eigenloci_sweep(kind, file_.grid, r.lo, r.hi, r.n, k_q());
            if (sweep.truncated) err_ << model_name(kind) << ": " << sweep.note << '\n';
            emit("eigenloci", kind, [&](std::ostream& os) { write_eigenloci_csv(os, sweep); });
        }
    }

    void region() {
        const std::vector<double> grid = k_q_grid();
        const auto [lo, hi] = k_p_bracket();
        for (ModelKind kind : models_) {
            const StabilityBoundary b = stability_boundary(kind, file_.grid, grid, lo, hi, {}, label_);
            emit("region", kind, [&](std::ostream& os) { write_boundary_csv(os, b); });
        }
    }

    void simulate() {
        SimOptions opts;
        opts.t_end = spec_.t_end;
        opts.validate();
        for (ModelKind kind : models_) {
            const auto [cfg, x0] = initial_state(kind);
            const Trajectory traj = mgrid::simulate(kind, cfg, x0, opts);
            err_ << model_name(kind) << ": " << status_name(traj.status);
            if (!traj.message.empty()) err_ << " (" << traj.message << ')';
            err_ << '\n';
            emit("simulate", kind, [&](std::ostream& os) { write_trajectory_csv(os, traj, cfg); });
        }
    }

    void report() {
        const Report rep = build_report(label_, file_.grid, k_q(), k_q_grid(), file_.thresholds);
        if (spec_.out_dir.empty()) {
            out_ << rep.table();
            return;
        }
        write_file("report_" + label_ + ".csv", [&](std::ostream& os) { write_report_csv(os, rep); });
        for (const auto& row : rep.rows) {
            write_file("region_" + label_ + "_" + model_name(row.kind) + ".csv",
                       [&](std::ostream& os) { write_boundary_csv(os, row.boundary); });
        }
        out_ << rep.table();
    }

private:
    double k_q() const { return spec_.k_q ? *spec_.k_q : file_.grid.inverter[kBusI].k_q; }

    std::vector<double> k_q_grid() const {
        if (spec_.kq_grid.empty()) return default_kq_grid();
        const GridSpec g = parse_grid_spec(spec_.kq_grid);
        return linear_grid(g.lo, g.hi, g.n);
    }

    std::pair<double, double> k_p_bracket() const {
        if (spec_.kp_range.empty()) return {kReportKpLow, kReportKpHigh};
        const GridSpec g = parse_grid_spec(spec_.kp_range);
        return {g.lo, g.hi};
    }

    std::pair<MicrogridConfig, Vector> initial_state(ModelKind kind) const {
        if (spec_.init == "cold") {
            MicrogridConfig cfg = file_.grid;
            cfg.omega0 = cfg.inverter[kBusI].omega_n;
            return {cfg, cold_start(kind, cfg)};
        }
        if (spec_.init == "equilibrium") {
            const Equilibrium eq = find_equilibrium(kind, file_.grid);
            Vector x0 = eq.x_star;
            for (Eigen::Index j = 0; j < x0.size(); ++j) x0(j) += spec_.perturbation * std::abs(x0(j));
            return {eq.config, x0};
        }
        if (spec_.init == "explicit") {
            std::vector<double> values;
            std::stringstream in(spec_.x0);
            std::string item;
            while (std::getline(in, item, ',')) values.push_back(parse_real(item, "--x0"));
            Vector x0 = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
            require_layout(kind, x0);
            MicrogridConfig cfg = file_.grid;
            cfg.omega0 = cfg.inverter[kBusI].omega_n;
            return {cfg, x0};
        }
        throw ValidationError("--init must be cold, equilibrium or explicit");
    }

    void write_file(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const std::filesystem::path path = std::filesystem::path(spec_.out_dir) / name;
        std::ofstream os(path);
        if (!os) throw ValidationError("cannot write " + path.string());
        body(os);
        err_ << "wrote " << path.string() << '\n';
    }

    void emit(const std::string& what, ModelKind kind, const std::function<void(std::ostream&)>& body) {
        if (spec_.out_dir.empty()) {
            if (models_.size() > 1 || what == "gamma" || what == "a" || what == "eigenvalues") {
                out_ << "# " << what << ' ' << model_name(kind) << '\n';
            }
            body(out_);
            return;
        }
        write_file(what + "_" + label_ + "_" + model_name(kind) + ".csv", body);
    }

    const RunSpec& spec_;
    std::ostream& out_;
    std::ostream& err_;
    ConfigFile file_;
    std::string label_;
    std::vector<ModelKind> models_;
};

} // namespace

GridSpec parse_grid_spec(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw ValidationError("grid '" + text + "' must have the form lo:hi:n");
    GridSpec g;
    g.lo = parse_real(parts[0], "grid lower end");
    g.hi = parse_real(parts[1], "grid upper end");
    const double n = parse_real(parts[2], "grid size");
    if (n < 1 || n != std::floor(n) || n > 1e6) throw ValidationError("grid size must be a positive integer");
    g.n = static_cast<int>(n);
    if (!(g.lo > 0.0)) throw ValidationError("grid lower end must be positive");
    if (g.n > 1 && !(g.lo < g.hi)) throw ValidationError("grid requires lo < hi");
    return g;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunSpec spec;
    CLI::App app{"Small-signal and time-domain analysis of a droop-controlled two-inverter microgrid", "mgrid"};
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--preset", spec.preset, "Line preset")->check(CLI::IsMember({"rx-gg1", "rx-eq1", "rx-ll1"}));
    app.add_option("--config", spec.config_path, "INI configuration file");
    app.add_option("--model", spec.model, "Model or 'all'")
        ->check(CLI::IsMember({"detailed", "em5", "conv3", "hf3", "all"}));
    app.add_option("--kp", spec.k_p, "Frequency droop gain on both inverters (rad/s/W)");
    app.add_option("--kq", spec.k_q, "Voltage droop gain on both inverters (V/var)");
    app.add_option("--kp-range", spec.kp_range, "k_p sweep or bracket lo:hi:n");
    app.add_option("--kq-grid", spec.kq_grid, "k_q grid lo:hi:n");
    app.add_option("--out", spec.out_dir, "Output directory (CSV to stdout when omitted)");

    std::function<void(Runner&)> action;
    auto sub = [&](const char* name, const char* help, void (Runner::*fn)()) {
        CLI::App* s = app.add_subcommand(name, help);
        s->callback([&action, fn] { action = [fn](Runner& r) { (r.*fn)(); }; });
        return s;
    };
    sub("equilibrium", "Solve the steady state and print it with omega0", &Runner::equilibrium);
    sub("linearize", "Dump Gamma, A and eigenvalues", &Runner::linearize);
    sub("eigenloci", "Eigenvalues along a k_p sweep", &Runner::eigenloci);
    sub("region", "Critical k_p over a k_q grid", &Runner::region);
    CLI::App* sim = sub("simulate", "Integrate the nonlinear model", &Runner::simulate);
    sim->add_option("--t-end", spec.t_end, "Simulated time (s)");
    sim->add_option("--init", spec.init, "cold, equilibrium or explicit")
        ->check(CLI::IsMember({"cold", "equilibrium", "explicit"}));
    sim->add_option("--perturb", spec.perturbation, "Relative perturbation of the equilibrium start");
    sim->add_option("--x0", spec.x0, "Comma separated initial state for --init explicit");
    sub("report", "Classify reduced models against the detailed one", &Runner::report);

    std::vector<const char*> argv{"mgrid"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        Runner runner(spec, out, err);
        action(runner);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitOk;
}

} // namespace mgrid
