#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>

#include <json.hpp>

#include "flock/activeset.hpp"
#include "flock/errors.hpp"
#include "flock/flocking.hpp"
#include "flock/scenario.hpp"

namespace flock {

namespace {

using nlohmann::json;

class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json number_or_null(std::optional<double> v) {
    if (!v || !std::isfinite(*v))
        return nullptr;
    return *v;
}

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path &path, std::initializer_list<std::string_view> header)
        : out_(path, std::ios::binary), path_(path) {
        if (!out_)
            throw IoError("cannot open " + path.string() + " for writing");
        bool first = true;
        for (auto h : header) {
            out_ << (first ? "" : ",") << h;
            first = false;
        }
        out_ << '\n';
    }
    CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header)
        : out_(path, std::ios::binary), path_(path) {
        if (!out_)
            throw IoError("cannot open " + path.string() + " for writing");
        for (std::size_t k = 0; k < header.size(); ++k)
            out_ << (k ? "," : "") << header[k];
        out_ << '\n';
    }

    CsvWriter &cell(double v) { return raw(fmt(v)); }
    CsvWriter &cell(std::size_t v) { return raw(std::to_string(v)); }
    CsvWriter &raw(std::string_view s) {
        out_ << (fresh_ ? "" : ",") << s;
        fresh_ = false;
        return *this;
    }
    void end() {
        out_ << '\n';
        fresh_ = true;
        if (!out_)
            throw IoError("write to " + path_.string() + " failed");
    }

  private:
    std::ofstream out_;
    std::filesystem::path path_;
    bool fresh_{true};
};

json scenario_json(const Scenario &sc) {
    json out = json::object();
    for (const auto &[section, entries] : scenario_entries(sc)) {
        json s = json::object();
        for (const auto &[k, v] : entries)
            s[k] = v;
        out[section] = s;
    }
    return out;
}

json certificate_json(const FlockingCertificate &c) {
    return {
        {"psi", to_string(c.psi_kind)},
        {"psi_scale", c.psi_scale},
        {"d_x0", c.d_x0},
        {"d_v0", c.d_v0},
        {"alpha", c.alpha},
        {"tail_diverges", c.tail.diverges},
        {"tail", c.tail.diverges ? json(nullptr) : json(c.tail.value)},
        {"d_star", number_or_null(c.d_star)},
        {"predicted_rate", number_or_null(c.predicted_rate)},
        {"verdict", to_string(c.verdict)},
    };
}

void write_json(const std::filesystem::path &path, const json &j) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("write to " + path.string() + " failed");
}

double norm(const std::vector<double> &v) {
    double s = 0.0;
    for (double c : v)
        s += c * c;
    return std::sqrt(s);
}

std::optional<double> try_fit(std::span<const double> t, std::span<const double> d_v) {
    try {
        return fit_exponential_rate(t, d_v);
    } catch (const std::invalid_argument &) {
        return std::nullopt;
    }
}

struct ParticleRun {
    AgentEnsemble initial;
    TrajectoryRecord record;
    DecayReport decay;
    std::optional<FlockingCertificate> certificate;
    std::optional<double> fitted_rate;
    double worst_energy_increase{-std::numeric_limits<double>::infinity()};
    double worst_dv_increase{-std::numeric_limits<double>::infinity()};
    bool velocity_box_kept{true};
};

ParticleRun run_particles(const Scenario &sc) {
    ParticleRun r;
    r.initial = make_initial(sc.initial);
    r.initial.validate();
    const auto &m = sc.model;
    m.validate();
    if (m.model == ModelKind::Leader && m.leader >= r.initial.size())
        throw std::invalid_argument("leader index exceeds the agent count");

    const Diameters d0 = diameters(r.initial);
    if (m.model != ModelKind::Vision)
        r.certificate = certify(d0, m);
    const Psi psi{m.phi, PsiKind::PhiSquared, m.model == ModelKind::Leader ? m.beta * m.beta : 1.0};

    const std::size_t dim = r.initial.dim;
    std::vector<double> v_lo(dim, std::numeric_limits<double>::infinity()), v_hi(dim, -v_lo[0]);
    for (std::size_t i = 0; i < r.initial.size(); ++i)
        for (std::size_t k = 0; k < dim; ++k) {
            v_lo[k] = std::min(v_lo[k], r.initial.velocity(i)[k]);
            v_hi[k] = std::max(v_hi[k], r.initial.velocity(i)[k]);
        }

    auto monitor = std::make_shared<DecayMonitor>(m.alpha, default_schedule(m));
    SimulationOptions opt;
    opt.dt = sc.integration.dt;
    opt.t_end = sc.integration.t_end;
    opt.scheme = sc.integration.scheme;
    opt.snapshot_stride = sc.integration.snapshot_stride;
    opt.stop_ratio = sc.integration.stop_ratio;
    opt.observer = [&](const StepEvent &ev) {
        monitor->observe(ev.before, ev.matrix, ev.after);
        const Diameters b = diameters(ev.before), a = diameters(ev.after);
        const double dt = ev.after.t - ev.before.t;
        r.worst_dv_increase = std::max(r.worst_dv_increase, a.d_v - b.d_v);
        const double e_before = energy(b.d_x, b.d_v, psi, m.alpha);
        const double e_after = energy(a.d_x, a.d_v, psi, m.alpha);
        r.worst_energy_increase = std::max(r.worst_energy_increase, e_after - e_before - 10.0 * dt * dt);
        for (std::size_t i = 0; i < ev.after.size(); ++i)
            for (std::size_t k = 0; k < dim; ++k) {
                const double c = ev.after.velocity(i)[k];
                if (c < v_lo[k] - 1e-12 || c > v_hi[k] + 1e-12)
                    r.velocity_box_kept = false;
            }
    };
    r.record = simulate(r.initial, m, opt);
    r.decay = monitor->report();
    r.fitted_rate = try_fit(r.record.times, r.record.d_v);
    return r;
}

json particle_summary(const Scenario &sc, const ParticleRun &r) {
    const auto &rec = r.record;
    const double d_v0 = rec.d_v.front();
    json checks = json::object();
    checks["decay_bound"] = r.decay.pass;
    checks["velocity_box"] = r.velocity_box_kept;
    if (sc.integration.scheme == Scheme::Euler)
        checks["max_principle"] = rec.samples() < 2 || r.worst_dv_increase <= 1e-12;
    if (r.certificate) {
        checks["energy_monotone"] = rec.samples() < 2 || r.worst_energy_increase <= 0.0;
        if (r.certificate->d_star) {
            const double bound = *r.certificate->d_star + sc.integration.dt * d_v0;
            bool ok = true;
            for (double dx : rec.d_x)
                ok = ok && dx <= bound;
            checks["diameter_bound"] = ok;
        }
    }
    json decay = {
        {"pass", r.decay.pass},
        {"worst_step", r.decay.worst_step},
        {"worst_margin", r.decay.steps.empty() ? json(nullptr) : json(r.decay.worst_margin)},
        {"worst_pairwise_margin",
         r.decay.steps.empty() ? json(nullptr) : json(r.decay.worst_pairwise_margin)},
    };
    json margins = json::array();
    for (const auto &st : r.decay.steps)
        margins.push_back(st.margin_global);
    decay["margins"] = margins;

    return {
        {"agents", r.initial.size()},
        {"dim", r.initial.dim},
        {"steps", rec.samples() - 1},
        {"initial", {{"d_x", rec.d_x.front()}, {"d_v", d_v0}, {"momentum", norm(rec.momentum.front())}}},
        {"final",
         {{"t", rec.times.back()},
          {"d_x", rec.d_x.back()},
          {"d_v", rec.d_v.back()},
          {"d_v_ratio", d_v0 > 0.0 ? json(rec.d_v.back() / d_v0) : json(nullptr)},
          {"momentum", norm(rec.momentum.back())}}},
        {"certificate", r.certificate ? certificate_json(*r.certificate) : json(nullptr)},
        {"fitted_rate", number_or_null(r.fitted_rate)},
        {"decay", decay},
        {"checks", checks},
    };
}

json base_summary(const Scenario &sc, Command c) {
    return {{"command", to_string(c)}, {"prng", Rng::kAlgorithm}, {"scenario", scenario_json(sc)}};
}

int cmd_simulate(const Scenario &sc, const std::filesystem::path &dir, bool quiet) {
    const ParticleRun r = run_particles(sc);
    const auto &rec = r.record;
    if (!sc.output.diagnostics.empty()) {
        CsvWriter csv(dir / sc.output.diagnostics, {"t", "d_X", "d_V", "mean_velocity_norm", "decay_margin"});
        for (std::size_t k = 0; k < rec.samples(); ++k) {
            csv.cell(rec.times[k]).cell(rec.d_x[k]).cell(rec.d_v[k]).cell(norm(rec.momentum[k]));
            if (k == 0)
                csv.raw("");
            else
                csv.cell(r.decay.steps[k - 1].margin_global);
            csv.end();
        }
    }
    if (!sc.output.snapshots.empty() && !rec.snapshots.empty()) {
        const std::size_t d = r.initial.dim;
        std::vector<std::string> header{"t", "agent"};
        for (std::size_t k = 0; k < d; ++k)
            header.push_back("x" + std::to_string(k));
        for (std::size_t k = 0; k < d; ++k)
            header.push_back("v" + std::to_string(k));
        CsvWriter csv(dir / sc.output.snapshots, header);
        for (const auto &s : rec.snapshots)
            for (std::size_t i = 0; i < s.size(); ++i) {
                csv.cell(s.t).cell(i);
                for (double c : s.position(i))
                    csv.cell(c);
                for (double c : s.velocity(i))
                    csv.cell(c);
                csv.end();
            }
    }
    json summary = base_summary(sc, Command::Simulate);
    summary.update(particle_summary(sc, r));
    if (!sc.output.summary.empty())
        write_json(dir / sc.output.summary, summary);
    if (!quiet) {
        std::cout << "simulated " << r.initial.size() << " agents to t = " << rec.times.back()
                  << ": d_V ratio " << summary["final"]["d_v_ratio"].dump();
        if (r.certificate)
            std::cout << ", verdict " << to_string(r.certificate->verdict);
        std::cout << ", decay bound " << (r.decay.pass ? "holds" : "violated") << '\n';
    }
    return kExitOk;
}

int cmd_certify(const Scenario &sc, const std::filesystem::path &dir, bool quiet) {
    const FlockingCertificate c = [&] {
        if (sc.initial.kind == InitialKind::None && sc.hydro.enabled)
            return hydro_certify(make_bump_state(sc.hydro.x_min, sc.hydro.x_max, sc.hydro.dx, sc.hydro.bumps),
                                 sc.model.phi, sc.model.alpha, sc.hydro.epsilon);
        const AgentEnsemble e = make_initial(sc.initial);
        e.validate();
        return certify(diameters(e), sc.model);
    }();
    json summary = base_summary(sc, Command::Certify);
    summary["certificate"] = certificate_json(c);
    json phi_cert = json(nullptr);
    if (sc.model.model != ModelKind::Vision)
        phi_cert = certificate_json(certify({c.d_x0, c.d_v0}, sc.model, PsiKind::Phi));
    summary["symmetric_theory_certificate"] = phi_cert;
    if (!sc.output.summary.empty())
        write_json(dir / sc.output.summary, summary);
    if (!quiet)
        std::cout << "verdict " << to_string(c.verdict) << '\n';
    return kExitOk;
}

int cmd_verify_lemma(const Scenario &sc, const std::filesystem::path &dir, bool quiet) {
    const auto &lm = sc.lemma;
    Rng rng(lm.seed);
    std::size_t violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_case = 0;
    std::unique_ptr<CsvWriter> csv;
    if (!sc.output.diagnostics.empty())
        csv = std::make_unique<CsvWriter>(dir / sc.output.diagnostics,
                                          std::initializer_list<std::string_view>{
                                              "case", "n", "theta", "active", "lhs", "rhs", "slack"});
    for (std::size_t c = 0; c < lm.cases; ++c) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.next() % lm.max_n);
        SquareMatrix s(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                s(i, j) = rng.uniform(-1.0, 1.0);
                s(j, i) = -s(i, j);
            }
        std::vector<double> u(n), w(n);
        for (auto &x : u)
            x = 1.0 - rng.uniform();
        for (auto &x : w)
            x = 1.0 - rng.uniform();
        const double theta = (1.0 - rng.uniform()) * 1.5 / static_cast<double>(n);
        const LemmaCheck chk = lemma_action_bound(s, u, w, theta);
        if (!chk.holds)
            ++violations;
        if (chk.slack() < worst) {
            worst = chk.slack();
            worst_case = c;
        }
        if (csv) {
            csv->cell(c).cell(n).cell(theta).cell(chk.active).cell(chk.lhs).cell(chk.rhs).cell(chk.slack());
            csv->end();
        }
    }
    json summary = base_summary(sc, Command::VerifyLemma);
    summary["cases"] = lm.cases;
    summary["violations"] = violations;
    summary["worst_slack"] = worst;
    summary["worst_case"] = worst_case;
    summary["pass"] = violations == 0;
    if (!sc.output.summary.empty())
        write_json(dir / sc.output.summary, summary);
    if (!quiet)
        std::cout << lm.cases << " cases, " << violations << " violations, worst slack " << worst << '\n';
    return violations == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_hydro(const Scenario &sc, const std::filesystem::path &dir, bool quiet) {
    const auto &h = sc.hydro;
    if (!h.enabled)
        throw std::invalid_argument("the hydro command needs a [hydro] section");
    if (h.bumps.empty())
        throw std::invalid_argument("hydro: no density bumps given");
    const HydroState1D s0 = make_bump_state(h.x_min, h.x_max, h.dx, h.bumps);
    const FlockingCertificate cert = hydro_certify(s0, sc.model.phi, sc.model.alpha, h.epsilon);
    HydroRunOptions opt;
    opt.dt = sc.integration.dt;
    opt.t_end = sc.integration.t_end;
    opt.boundary = h.boundary;
    opt.field_stride = h.field_stride;
    opt.epsilon = h.epsilon;
    opt.stop_ratio = sc.integration.stop_ratio;
    const HydroTrajectory tr = simulate_eulerian(s0, sc.model.phi, sc.model.alpha, opt);

    if (!sc.output.diagnostics.empty()) {
        CsvWriter csv(dir / sc.output.diagnostics, {"t", "mass", "d_X", "d_V"});
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            csv.cell(tr.times[k]).cell(tr.mass[k]).cell(tr.d_x[k]).cell(tr.d_v[k]);
            csv.end();
        }
    }
    if (!sc.output.fields.empty() && !tr.fields.empty()) {
        CsvWriter csv(dir / sc.output.fields, {"t", "x", "rho", "u"});
        for (const auto &f : tr.fields)
            for (std::size_t i = 0; i < f.cells(); ++i) {
                csv.cell(f.t).cell(f.center(i)).cell(f.rho[i]).cell(f.u[i]);
                csv.end();
            }
    }
    const double slack = 10.0 * (opt.dt + h.dx);
    bool decay_ok = true;
    for (std::size_t k = 1; k < tr.d_v.size(); ++k)
        decay_ok = decay_ok && tr.d_v[k] <= tr.d_v[k - 1] + slack;

    const double d_v0 = tr.d_v.front();
    json summary = base_summary(sc, Command::Hydro);
    summary["cells"] = s0.cells();
    summary["steps"] = tr.times.size() - 1;
    summary["certificate"] = certificate_json(cert);
    summary["initial"] = {{"mass", tr.mass.front()}, {"d_x", tr.d_x.front()}, {"d_v", d_v0}};
    summary["final"] = {{"t", tr.times.back()},
                        {"mass", tr.mass.back()},
                        {"d_x", tr.d_x.back()},
                        {"d_v", tr.d_v.back()},
                        {"d_v_ratio", d_v0 > 0.0 ? json(tr.d_v.back() / d_v0) : json(nullptr)}};
    summary["worst_mass_drift"] = tr.worst_mass_drift;
    summary["fitted_rate"] = number_or_null(try_fit(tr.times, tr.d_v));
    summary["checks"] = {{"mass_conserved", tr.worst_mass_drift <= 1e-12}, {"decay_within_slack", decay_ok}};
    if (!sc.output.summary.empty())
        write_json(dir / sc.output.summary, summary);
    if (!quiet)
        std::cout << "hydro run to t = " << tr.times.back() << ": d_V ratio "
                  << summary["final"]["d_v_ratio"].dump() << ", worst mass drift " << tr.worst_mass_drift
                  << '\n';
    return kExitOk;
}

int cmd_sweep(const Scenario &sc, const std::filesystem::path &dir, bool quiet) {
    if (!sc.sweep)
        throw std::invalid_argument("the sweep command needs a [sweep] section");
    if (sc.sweep->values.empty())
        throw std::invalid_argument("sweep: value list is empty");
    json rows = json::array();
    std::unique_ptr<CsvWriter> csv;
    if (!sc.output.sweep.empty())
        csv = std::make_unique<CsvWriter>(dir / sc.output.sweep,
                                          std::initializer_list<std::string_view>{
                                              "value", "final_dv_ratio", "fitted_rate", "verdict"});
    for (double value : sc.sweep->values) {
        const Scenario one = with_parameter(sc, sc.sweep->parameter, value);
        const ParticleRun r = run_particles(one);
        const double d_v0 = r.record.d_v.front();
        const std::optional<double> ratio =
            d_v0 > 0.0 ? std::optional(r.record.d_v.back() / d_v0) : std::nullopt;
        const std::string verdict = r.certificate ? std::string(to_string(r.certificate->verdict)) : "none";
        if (csv) {
            csv->cell(value);
            ratio ? csv->cell(*ratio) : csv->raw("");
            r.fitted_rate ? csv->cell(*r.fitted_rate) : csv->raw("");
            csv->raw(verdict);
            csv->end();
        }
        rows.push_back({{"value", value},
                        {"final_dv_ratio", number_or_null(ratio)},
                        {"fitted_rate", number_or_null(r.fitted_rate)},
                        {"verdict", verdict},
                        {"decay_bound", r.decay.pass}});
        if (!quiet)
            std::cout << sc.sweep->parameter << " = " << value << ": " << verdict << '\n';
    }
    json summary = base_summary(sc, Command::Sweep);
    summary["parameter"] = sc.sweep->parameter;
    summary["rows"] = rows;
    if (!sc.output.summary.empty())
        write_json(dir / sc.output.summary, summary);
    return kExitOk;
}

struct GroupRun {
    std::optional<double> t_half;
    double d_v0{0.0};
    double final_d_v{0.0};
    double final_t{0.0};
};

double subgroup_dv(const AgentEnsemble &e, std::size_t count) {
    double best = 0.0;
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = i + 1; j < count; ++j)
            best = std::max(best, distance(e.velocity(i), e.velocity(j)));
    return best;
}

GroupRun run_group(const Scenario &sc, ModelKind kind, const AgentEnsemble &initial) {
    ModelSpec m = sc.model;
    m.model = kind;
    const std::size_t n1 = sc.initial.n1;
    GroupRun g;
    g.d_v0 = subgroup_dv(initial, n1);
    SimulationOptions opt;
    opt.dt = sc.integration.dt;
    opt.t_end = sc.integration.t_end;
    opt.scheme = sc.integration.scheme;
    opt.stop_when = [&](const AgentEnsemble &e) {
        const double dv = subgroup_dv(e, n1);
        g.final_d_v = dv;
        g.final_t = e.t;
        if (!g.t_half && dv <= 0.5 * g.d_v0)
            g.t_half = e.t;
        return g.t_half.has_value();
    };
    simulate(initial, m, opt);
    return g;
}

int cmd_compare_groups(const Scenario &sc, const std::filesystem::path &dir, bool quiet) {
    if (sc.initial.kind != InitialKind::TwoGroup)
        throw std::invalid_argument("compare-groups needs a two-group initial condition");
    const AgentEnsemble initial = make_initial(sc.initial);
    initial.validate();
    sc.model.validate();
    const std::size_t n1 = sc.initial.n1, n = initial.size();

    const InfluenceMatrix mt0 = build_mt(initial.positions(), sc.model.phi);
    const InfluenceMatrix cs0 = build_cs(initial.positions(), sc.model.phi);
    double cross = 0.0;
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = n1; j < n; ++j)
            cross = std::max({cross, mt0(i, j), cs0(i, j)});

    const GroupRun cs = run_group(sc, ModelKind::CuckerSmale, initial);
    const GroupRun mt = run_group(sc, ModelKind::RelativeInfluence, initial);
    auto group_json = [](const GroupRun &g) {
        return json{{"g1_d_v0", g.d_v0},
                    {"g1_halving_time", number_or_null(g.t_half)},
                    {"g1_alignment_rate",
                     g.t_half ? json(std::numbers::ln2 / *g.t_half) : json(nullptr)},
                    {"final_t", g.final_t},
                    {"g1_final_d_v", g.final_d_v}};
    };
    json summary = base_summary(sc, Command::CompareGroups);
    summary["max_cross_influence"] = cross;
    summary["cs"] = group_json(cs);
    summary["mt"] = group_json(mt);
    json ratio = json(nullptr);
    if (cs.t_half && mt.t_half)
        ratio = *cs.t_half / *mt.t_half;
    summary["halving_time_ratio_cs_over_mt"] = ratio;
    summary["alignment_rate_ratio_mt_over_cs"] = ratio;
    if (!cs.t_half && mt.t_half)
        summary["halving_time_ratio_lower_bound"] = cs.final_t / *mt.t_half;
    if (!sc.output.summary.empty())
        write_json(dir / sc.output.summary, summary);
    if (!quiet)
        std::cout << "G1 halving time: cs " << group_json(cs)["g1_halving_time"].dump() << ", mt "
                  << group_json(mt)["g1_halving_time"].dump() << ", ratio " << ratio.dump() << '\n';
    return kExitOk;
}

} // namespace

int run(const Scenario &scenario, Command command, const std::filesystem::path &out_dir, bool quiet) {
    try {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec)
            throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
        switch (command) {
        case Command::Simulate:
            return cmd_simulate(scenario, out_dir, quiet);
        case Command::Certify:
            return cmd_certify(scenario, out_dir, quiet);
        case Command::VerifyLemma:
            return cmd_verify_lemma(scenario, out_dir, quiet);
        case Command::Hydro:
            return cmd_hydro(scenario, out_dir, quiet);
        case Command::Sweep:
            return cmd_sweep(scenario, out_dir, quiet);
        case Command::CompareGroups:
            return cmd_compare_groups(scenario, out_dir, quiet);
        }
        return kExitFailure;
    } catch (const ScenarioError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const StabilityError &e) {
        std::cerr << "stability error: " << e.what() << '\n';
        return kExitStability;
    } catch (const NumericError &e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const IoError &e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::logic_error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParameter;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace flock
