#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "stakit/design_io.hpp"
#include "stakit/runs.hpp"
#include "stakit/verify.hpp"

namespace stakit::cli {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string units_line(const std::string& time_unit) {
    return "# units: hbar=1, m=1, time unit = " + time_unit + "\n";
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write " + path);
    f << text;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + "\"";
}

struct Row {
    std::string text;
    Row& operator<<(double v) { return add(format_double(v)); }
    Row& operator<<(const std::string& s) { return add(s); }
    Row& add(const std::string& s) {
        if (!text.empty()) text += ',';
        text += s;
        return *this;
    }
};

// ---------------------------------------------------------------------------

struct DesignArgs {
    std::string system;
    double t_f = 0.0;
    double omega0 = 1.0;
    double omega_f = 0.1;
    int degree = 5;
    std::string preset = "fig1";
    std::string out;
    std::string time_unit = "dimensionless";
};

int cmd_design(const DesignArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    const bool given_tf = sub.count("--tf") > 0;
    nlohmann::json doc;
    std::ostringstream summary;
    if (a.system == "ho") {
        if (sub.count("--preset")) throw UsageError("--preset applies to two-level designs only");
        const double t_f = given_tf ? a.t_f : 2.0;
        OscillatorDocument d{make_ermakov_design(a.omega0, a.omega_f, t_f, a.degree), make_omega_ramp(a.omega0, a.omega_f, t_f)};
        doc = to_json(d);
        const auto inv = trap_inversion(d.ermakov, TimeGrid(t_f, 2001));
        summary << "oscillator design: omega0=" << format_double(a.omega0) << " omega_f=" << format_double(a.omega_f)
                << " t_f=" << format_double(t_f) << " degree=" << a.degree << "\n"
                << "  b(t_f) = " << format_double(d.ermakov.b(t_f)) << " (target "
                << format_double(std::sqrt(a.omega0 / a.omega_f)) << ")\n"
                << "  min omega^2 = " << format_double(inv.min_omega_squared) << " at t = " << format_double(inv.t_at_min)
                << (inv.inverted ? "  [trap inverted]" : "") << "\n";
    } else {
        if (sub.count("--omegaf") || sub.count("--degree")) throw UsageError("--omegaf/--degree apply to oscillator designs only");
        const double t_f = given_tf ? a.t_f : 1.0;
        const TimeGrid grid(t_f, 1025);
        if (a.preset == "tracking") {
            const auto r = make_smoothstep_reference(t_f, a.omega0);
            doc = to_json(r);
            summary << "two-level tracking reference: theta pi -> 0, Omega=" << format_double(a.omega0)
                    << " t_f=" << format_double(t_f) << "\n";
        } else {
            if (sub.count("--omega0")) throw UsageError("--omega0 applies to the tracking preset only");
            const auto d = a.preset == "fig1" ? preset_fig1(t_f) : preset_fig2(t_f);
            doc = to_json(d);
            const auto c = controls_from_angles(d, grid);
            double peak = 0.0;
            for (double v : c.OmegaR.values) peak = std::max(peak, std::abs(v));
            const auto ends = commutator_endpoint_report(d, c);
            summary << "two-level design: preset " << a.preset << " t_f=" << format_double(t_f) << "\n"
                    << "  peak OmegaR = " << format_double(peak) << ", Delta(0) = " << format_double(c.Delta.values.front())
                    << "\n"
                    << "  endpoint [H,I] (relative): " << format_double(ends.relative_start) << ", "
                    << format_double(ends.relative_end) << "\n";
        }
    }
    doc["units"] = {{"hbar", 1}, {"m", 1}, {"time_unit", a.time_unit}};
    emit(doc.dump(2) + "\n", a.out, out);
    (a.out.empty() || a.out == "-" ? err : out) << summary.str();
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct RunArgs {
    std::string design_path;
    std::string method;
    std::size_t samples = 0;
    double rel_tol = 1e-10;
    Eigen::Index fock_dim = 128;
    int state = -1;
    std::string out;
    std::string time_unit = "dimensionless";

    RunSettings settings() const {
        RunSettings s;
        s.samples = samples;
        s.rel_tol = rel_tol;
        s.fock_dim = fock_dim;
        s.state = state;
        return s;
    }
};

void require_valid(const RunArgs& a, const CLI::App& sub, bool oscillator) {
    if (sub.count("--samples") && a.samples < 5) throw UsageError("--samples must be at least 5");
    if (!oscillator && sub.count("--fock-dim")) throw UsageError("--fock-dim applies to oscillator designs only");
    if (oscillator && a.fock_dim < 8) throw UsageError("--fock-dim must be at least 8");
}

std::string tls_csv(const TlsTrajectory& tr, const std::string& time_unit, const std::string& tag) {
    std::string s = units_line(time_unit);
    s += "# " + tag + "\n";
    s += "t,P1,P2,P1_ad,P2_ad,overlap_mode_plus,phase_mode_plus,alpha_plus\n";
    for (std::size_t i = 0; i < tr.record.grid.size(); ++i) {
        Row r;
        r << tr.record.grid[i] << tr.populations[i].P1 << tr.populations[i].P2 << tr.adiabatic[i].P1 << tr.adiabatic[i].P2
          << tr.mode_plus[i].modulus << tr.mode_plus[i].phase << tr.alpha_plus[i];
        s += r.text + "\n";
    }
    return s;
}

std::string ho_csv(const HoTrajectory& tr, const std::string& time_unit, const std::string& tag) {
    std::string s = units_line(time_unit);
    s += "# " + tag + "\n";
    Row head;
    head << std::string("t") << std::string("fidelity_to_mode_n");
    for (auto k : tr.tracked_levels) head << "P" + std::to_string(k);
    head << std::string("norm");
    s += head.text + "\n";
    for (std::size_t i = 0; i < tr.record.grid.size(); ++i) {
        Row r;
        r << tr.record.grid[i] << tr.mode_fidelity[i];
        for (double p : tr.level_populations[i]) r << p;
        r << tr.record.states[i].norm();
        s += r.text + "\n";
    }
    return s;
}

int cmd_propagate(const RunArgs& a, const CLI::App& sub, std::ostream& out) {
    const auto doc = load_design(a.design_path);
    const auto settings = a.settings();
    std::string csv;
    if (const auto* d = std::get_if<AngleDesign>(&doc)) {
        require_valid(a, sub, false);
        if (!a.method.empty() && a.method != "invariant")
            throw UsageError("an angle design is driven by its invariant; use --method invariant");
        csv = tls_csv(run_tls(*d, settings), a.time_unit, "two-level angle design, method=invariant");
    } else if (const auto* r = std::get_if<MixingReference>(&doc)) {
        require_valid(a, sub, false);
        const Method m = a.method.empty() ? Method::counterdiabatic : parse_method(a.method);
        if (m == Method::invariant) throw UsageError("a tracking reference supports counterdiabatic or reference_only");
        csv = tls_csv(run_tls(*r, m, settings), a.time_unit,
                      std::string("two-level tracking reference, method=") + to_string(m));
    } else {
        require_valid(a, sub, true);
        const auto& o = std::get<OscillatorDocument>(doc);
        const Method m = a.method.empty() ? Method::invariant : parse_method(a.method);
        const int n = a.state < 0 ? 0 : a.state;
        csv = ho_csv(run_ho(o, m, settings), a.time_unit,
                     std::string("oscillator, method=") + to_string(m) + ", n=" + std::to_string(n) +
                         ", fock_dim=" + std::to_string(a.fock_dim));
    }
    emit(csv, a.out, out);
    return exit_ok;
}

int cmd_check(const RunArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    const auto doc = load_design(a.design_path);
    require_valid(a, sub, std::holds_alternative<OscillatorDocument>(doc));
    const auto report = check_design(doc, a.settings());
    emit(to_json(report).dump(2) + "\n", a.out, out);
    const auto failed = report.failures();
    for (const auto* e : failed)
        err << "FAIL " << e->name << ": " << format_double(e->value) << " (required " << to_string(e->comparison) << " "
            << format_double(e->threshold) << ")\n";
    return failed.empty() ? exit_ok : exit_check_failed;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string system;
    std::vector<double> t_f;
    std::string preset = "fig1";
    double omega0 = 1.0;
    double omega_f = 0.1;
    int degree = 5;
    unsigned jobs = 1;
    std::size_t samples = 0;
    double rel_tol = 1e-10;
    Eigen::Index fock_dim = 128;
    std::string out;
    std::string time_unit = "dimensionless";
};

std::string sweep_row(const SweepArgs& a, double t_f) {
    RunSettings s;
    s.samples = a.samples;
    s.rel_tol = a.rel_tol;
    s.fock_dim = a.fock_dim;
    Row r;
    r << t_f;
    try {
        if (a.system == "tls") {
            const auto d = a.preset == "fig1" ? preset_fig1(t_f) : preset_fig2(t_f);
            const auto tr = run_tls(d, s);
            double peak = 0.0;
            for (double v : tr.controls.OmegaR.values) peak = std::max(peak, std::abs(v));
            r << 1.0 - tr.populations.back().P2 << peak << adiabaticity_metric(tr.controls) << std::string();
        } else {
            OscillatorDocument d{make_ermakov_design(a.omega0, a.omega_f, t_f, a.degree), make_omega_ramp(a.omega0, a.omega_f, t_f)};
            const auto inv = trap_inversion(d.ermakov, detail::ho_grid(t_f, s));
            const auto tr = run_ho(d, Method::invariant, s, false);
            r << 1.0 - tr.final_fidelity << inv.min_omega_squared << std::string(inv.inverted ? "1" : "0") << std::string();
        }
    } catch (const std::exception& e) {
        r = Row{};
        r << t_f << std::string() << std::string() << std::string() << csv_field(e.what());
    }
    return r.text + "\n";
}

int cmd_sweep(SweepArgs a, const CLI::App& sub, std::ostream& out) {
    if (a.t_f.empty()) throw UsageError("--tf needs at least one value");
    for (double t : a.t_f)
        if (!(t > 0.0) || !std::isfinite(t)) throw UsageError("--tf values must be positive");
    if (a.jobs == 0) throw UsageError("--jobs must be at least 1");
    if (a.system == "tls" && (sub.count("--omega0") || sub.count("--omegaf") || sub.count("--degree") || sub.count("--fock-dim")))
        throw UsageError("oscillator flags given for a two-level sweep");
    if (a.system == "ho" && sub.count("--preset")) throw UsageError("--preset applies to two-level sweeps only");
    std::sort(a.t_f.begin(), a.t_f.end());

    std::vector<std::string> rows(a.t_f.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) rows[i] = sweep_row(a, a.t_f[i]);
    };
    const unsigned n_threads = std::min<unsigned>(a.jobs, static_cast<unsigned>(rows.size()));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n_threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string csv = units_line(a.time_unit);
    csv += a.system == "tls" ? "t_f,final_infidelity,peak_rabi,adiabaticity_metric,error\n"
                             : "t_f,final_infidelity,min_omega_squared,trap_inverted,error\n";
    for (const auto& r : rows) csv += r;
    emit(csv, a.out, out);
    return exit_ok;
}

void add_run_flags(CLI::App* sub, RunArgs& a) {
    sub->add_option("design", a.design_path, "Design JSON file")->required();
    sub->add_option("--samples", a.samples, "Output grid nodes (default 1025 two-level, 201 oscillator)");
    sub->add_option("--rel-tol", a.rel_tol, "Integrator relative tolerance");
    sub->add_option("--fock-dim", a.fock_dim, "Fock truncation (oscillator)");
    sub->add_option("--state", a.state, "Initial state: two-level level 1|2, oscillator eigenstate index");
    sub->add_option("--out", a.out, "Output file (default stdout)");
    sub->add_option("--time-unit", a.time_unit, "Label for the time unit in the units line");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Shortcut-to-adiabaticity design, propagation and verification", "stakit"};
    app.require_subcommand(1);

    DesignArgs design;
    auto* design_cmd = app.add_subcommand("design", "Write a protocol design (JSON)");
    design_cmd->add_option("system", design.system, "ho | tls")->required()->check(CLI::IsMember({"ho", "tls"}));
    design_cmd->add_option("--tf", design.t_f, "Protocol duration")->check(CLI::PositiveNumber);
    design_cmd->add_option("--omega0", design.omega0, "Initial trap frequency (ho) or reference Omega (tls tracking)")
        ->check(CLI::PositiveNumber);
    design_cmd->add_option("--omegaf", design.omega_f, "Final trap frequency")->check(CLI::PositiveNumber);
    design_cmd->add_option("--degree", design.degree, "Polynomial degree of b(t)");
    design_cmd->add_option("--preset", design.preset, "fig1 | fig2 | tracking")
        ->check(CLI::IsMember({"fig1", "fig2", "tracking"}));
    design_cmd->add_option("--out", design.out, "Output file (default stdout)");
    design_cmd->add_option("--time-unit", design.time_unit, "Label for the time unit");

    RunArgs prop;
    auto* prop_cmd = app.add_subcommand("propagate", "Propagate a design and write the trajectory (CSV)");
    add_run_flags(prop_cmd, prop);
    prop_cmd->add_option("--method", prop.method, "invariant | counterdiabatic | reference_only")
        ->check(CLI::IsMember({"invariant", "counterdiabatic", "reference_only"}));

    RunArgs check;
    auto* check_cmd = app.add_subcommand("check", "Run the verification battery on a design (JSON report)");
    add_run_flags(check_cmd, check);

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep the protocol duration (CSV summary)");
    sweep_cmd->add_option("system", sweep.system, "ho | tls")->required()->check(CLI::IsMember({"ho", "tls"}));
    sweep_cmd->add_option("--tf", sweep.t_f, "Comma-separated durations")->delimiter(',')->required();
    sweep_cmd->add_option("--preset", sweep.preset, "fig1 | fig2")->check(CLI::IsMember({"fig1", "fig2"}));
    sweep_cmd->add_option("--omega0", sweep.omega0, "Initial trap frequency")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--omegaf", sweep.omega_f, "Final trap frequency")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--degree", sweep.degree, "Polynomial degree of b(t)");
    sweep_cmd->add_option("--jobs", sweep.jobs, "Concurrent rows");
    sweep_cmd->add_option("--samples", sweep.samples, "Grid nodes per run");
    sweep_cmd->add_option("--rel-tol", sweep.rel_tol, "Integrator relative tolerance");
    sweep_cmd->add_option("--fock-dim", sweep.fock_dim, "Fock truncation (oscillator)");
    sweep_cmd->add_option("--out", sweep.out, "Output file (default stdout)");
    sweep_cmd->add_option("--time-unit", sweep.time_unit, "Label for the time unit");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (e.get_name() == "CallForAllHelp" ? app.help("", CLI::AppFormatMode::All) : app.help());
            if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) out << sub->help();
            return exit_ok;
        }
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (design_cmd->parsed()) return cmd_design(design, *design_cmd, out, err);
        if (prop_cmd->parsed()) return cmd_propagate(prop, *prop_cmd, out);
        if (check_cmd->parsed()) return cmd_check(check, *check_cmd, out, err);
        return cmd_sweep(sweep, *sweep_cmd, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::numeric) {
            err << "numeric failure: " << e.what() << "\n";
            return exit_numeric;
        }
        err << "invalid input: " << e.what() << "\n";
        return exit_usage;
    }
}

}  // namespace stakit::cli
