#include "flock/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "flock/activeset.hpp"
#include "flock/errors.hpp"
#include "flock/flocking.hpp"

namespace flock {

ScenarioError::ScenarioError(std::string key, std::size_t line, const std::string &what)
    : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + key + ": " + what
                                     : key + ": " + what),
      key_(std::move(key)), line_(line) {}

std::size_t InitialSpec::agents() const {
    switch (kind) {
    case InitialKind::Random:
        return n;
    case InitialKind::Explicit:
        return dim == 0 ? 0 : positions.size() / dim;
    case InitialKind::TwoGroup:
        return n1 + n2;
    case InitialKind::None:
        return 0;
    }
    return 0;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

const std::map<std::string, std::set<std::string>, std::less<>> kKnownKeys = {
    {"model", {"model", "phi", "s", "R", "table", "alpha", "beta", "leader", "gamma", "normalization"}},
    {"initial",
     {"kind", "dim", "N", "seed", "position_box", "velocity_box", "positions", "velocities", "N1",
      "N2", "D"}},
    {"integration", {"dt", "T", "scheme", "snapshot_stride", "stop_ratio"}},
    {"output", {"diagnostics", "snapshots", "summary", "fields", "sweep"}},
    {"hydro", {"x_min", "x_max", "dx", "boundary", "epsilon", "field_stride", "bumps"}},
    {"sweep", {"parameter", "values"}},
    {"lemma", {"cases", "max_n", "seed"}},
};

const std::vector<std::string_view> kSweepable = {"s", "alpha", "beta", "gamma", "N", "D"};

struct Entry {
    std::string value;
    std::size_t line;
    bool used{false};
};

class Document {
  public:
    explicit Document(std::string_view text) {
        std::string section;
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto nl = text.find('\n', start);
            std::string_view line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
            start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            line = trim(line);
            if (line.empty())
                continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ScenarioError(std::string(line), line_no, "malformed section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (!kKnownKeys.contains(section))
                    throw ScenarioError(section, line_no, "unknown section");
                sections_.insert(section);
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ScenarioError(std::string(line), line_no, "expected key = value");
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (section.empty())
                throw ScenarioError(key, line_no, "key outside of any [section]");
            const std::string full = section + "." + key;
            if (!kKnownKeys.at(section).contains(key))
                throw ScenarioError(full, line_no, "unknown key");
            if (entries_.contains(full))
                throw ScenarioError(full, line_no, "duplicate key");
            entries_.emplace(full, Entry{value, line_no});
        }
    }

    bool has_section(std::string_view s) const { return sections_.contains(std::string(s)); }
    bool has(const std::string &key) const { return entries_.contains(key); }

    Entry *find(const std::string &key) {
        auto it = entries_.find(key);
        if (it == entries_.end())
            return nullptr;
        it->second.used = true;
        return &it->second;
    }

    Entry &require(const std::string &key) {
        if (Entry *e = find(key))
            return *e;
        throw ScenarioError(key, 0, "missing required key");
    }

    void reject_unused() const {
        for (const auto &[key, e] : entries_)
            if (!e.used)
                throw ScenarioError(key, e.line, "key does not apply to this configuration");
    }

  private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> sections_;
};

double to_double(const std::string &key, const Entry &e, std::string_view text) {
    double v = 0.0;
    const auto *first = text.data(), *last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ScenarioError(key, e.line, "expected a finite number, got '" + std::string(text) + "'");
    return v;
}

double to_double(const std::string &key, const Entry &e) { return to_double(key, e, e.value); }

std::uint64_t to_unsigned(const std::string &key, const Entry &e) {
    std::uint64_t v = 0;
    const auto &t = e.value;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ScenarioError(key, e.line, "expected a non-negative integer, got '" + t + "'");
    return v;
}

std::vector<double> to_list(const std::string &key, const Entry &e) {
    std::vector<double> out;
    if (trim(e.value).empty())
        return out;
    for (auto part : split(e.value, ','))
        out.push_back(to_double(key, e, part));
    return out;
}

Interval to_interval(const std::string &key, const Entry &e) {
    const auto v = to_list(key, e);
    if (v.size() != 2)
        throw ScenarioError(key, e.line, "expected 'lo, hi'");
    if (!(v[0] < v[1]))
        throw ScenarioError(key, e.line, "interval needs lo < hi");
    return {v[0], v[1]};
}

// "a b; c d" or "a, b; c, d": one agent per ';' group.
std::vector<double> to_points(const std::string &key, const Entry &e, std::size_t dim) {
    std::vector<double> out;
    for (auto group : split(e.value, ';')) {
        std::string g(group);
        std::replace(g.begin(), g.end(), ',', ' ');
        std::istringstream is(g);
        std::string tok;
        std::size_t count = 0;
        while (is >> tok) {
            out.push_back(to_double(key, e, tok));
            ++count;
        }
        if (count != dim)
            throw ScenarioError(key, e.line,
                                "each agent needs " + std::to_string(dim) + " coordinates");
    }
    return out;
}

template <typename T>
T to_enum(const std::string &key, const Entry &e, std::initializer_list<std::pair<std::string_view, T>> options) {
    for (const auto &[name, value] : options)
        if (e.value == name)
            return value;
    std::string names;
    for (const auto &[name, value] : options)
        names += (names.empty() ? "" : ", ") + std::string(name);
    throw ScenarioError(key, e.line, "unknown value '" + e.value + "' (expected one of " + names + ")");
}

void check(bool ok, const std::string &key, const Entry &e, const std::string &what) {
    if (!ok)
        throw ScenarioError(key, e.line, what);
}

double number(Document &doc, const std::string &key, double fallback) {
    if (Entry *e = doc.find(key))
        return to_double(key, *e);
    return fallback;
}

InfluenceFunction parse_phi(Document &doc) {
    std::string kind = "power-law";
    std::size_t kind_line = 0;
    if (Entry *e = doc.find("model.phi")) {
        kind = e->value;
        kind_line = e->line;
    }
    auto exponent = [&] {
        const double s = number(doc, "model.s", 1.0);
        if (!(s > 0.0)) {
            const Entry *e = doc.find("model.s");
            throw ScenarioError("model.s", e ? e->line : 0, "s must be positive");
        }
        return s;
    };
    if (kind == "power-law")
        return InfluenceFunction::power_law(exponent());
    if (kind == "cutoff") {
        const double s = exponent();
        Entry &e = doc.require("model.R");
        const double r = to_double("model.R", e);
        check(r > 0.0, "model.R", e, "cutoff radius must be positive");
        return InfluenceFunction::power_law_cutoff(s, r);
    }
    if (kind == "tabulated") {
        Entry &e = doc.require("model.table");
        std::vector<Knot> knots;
        for (auto part : split(e.value, ',')) {
            const auto colon = part.find(':');
            check(colon != std::string_view::npos, "model.table", e, "knots are written r:value");
            knots.push_back({to_double("model.table", e, trim(part.substr(0, colon))),
                             to_double("model.table", e, trim(part.substr(colon + 1)))});
        }
        try {
            return InfluenceFunction::tabulated(std::move(knots));
        } catch (const std::invalid_argument &ex) {
            throw ScenarioError("model.table", e.line, ex.what());
        }
    }
    throw ScenarioError("model.phi", kind_line,
                        "unknown kernel '" + kind + "' (expected power-law, cutoff, tabulated)");
}

void parse_model(Document &doc, Scenario &sc) {
    auto &m = sc.model;
    {
        Entry &e = doc.require("model.model");
        m.model = to_enum<ModelKind>("model.model", e,
                                     {{"cs", ModelKind::CuckerSmale},
                                      {"mt", ModelKind::RelativeInfluence},
                                      {"leader", ModelKind::Leader},
                                      {"vision", ModelKind::Vision}});
    }
    m.phi = parse_phi(doc);
    {
        Entry &e = doc.require("model.alpha");
        m.alpha = to_double("model.alpha", e);
        check(m.alpha > 0.0, "model.alpha", e, "alpha must be positive");
    }
    if (Entry *e = doc.find("model.beta")) {
        m.beta = to_double("model.beta", *e);
        check(m.beta > 0.0 && m.beta < 1.0, "model.beta", *e, "beta must lie in (0, 1)");
    }
    if (Entry *e = doc.find("model.leader"))
        m.leader = to_unsigned("model.leader", *e);
    if (Entry *e = doc.find("model.gamma")) {
        m.gamma = to_double("model.gamma", *e);
        check(m.gamma >= -1.0 && m.gamma <= 1.0, "model.gamma", *e, "gamma must lie in [-1, 1]");
    }
    if (Entry *e = doc.find("model.normalization"))
        m.normalization = to_enum<VisionNormalization>(
            "model.normalization", *e,
            {{"cs-style", VisionNormalization::CsStyle}, {"mt-style", VisionNormalization::MtStyle}});
}

std::size_t positive_count(Document &doc, const std::string &key) {
    Entry &e = doc.require(key);
    const auto v = to_unsigned(key, e);
    check(v >= 1, key, e, "must be at least 1");
    return static_cast<std::size_t>(v);
}

void parse_initial(Document &doc, Scenario &sc) {
    auto &in = sc.initial;
    if (!doc.has_section("initial") && doc.has_section("hydro")) {
        in.kind = InitialKind::None;
        return;
    }
    if (Entry *e = doc.find("initial.kind"))
        in.kind = to_enum<InitialKind>("initial.kind", *e,
                                       {{"random", InitialKind::Random},
                                        {"explicit", InitialKind::Explicit},
                                        {"two-group", InitialKind::TwoGroup},
                                        {"none", InitialKind::None}});
    if (in.kind == InitialKind::None)
        return;
    if (Entry *e = doc.find("initial.dim")) {
        const auto d = to_unsigned("initial.dim", *e);
        check(d >= 1 && d <= 3, "initial.dim", *e, "dim must be 1, 2 or 3");
        in.dim = static_cast<std::size_t>(d);
    }
    auto boxes = [&] {
        if (Entry *e = doc.find("initial.position_box"))
            in.position_box = to_interval("initial.position_box", *e);
        if (Entry *e = doc.find("initial.velocity_box"))
            in.velocity_box = to_interval("initial.velocity_box", *e);
        in.seed = to_unsigned("initial.seed", doc.require("initial.seed"));
    };
    switch (in.kind) {
    case InitialKind::Random:
        in.n = positive_count(doc, "initial.N");
        boxes();
        break;
    case InitialKind::TwoGroup: {
        in.n1 = positive_count(doc, "initial.N1");
        in.n2 = positive_count(doc, "initial.N2");
        Entry &e = doc.require("initial.D");
        in.separation = to_double("initial.D", e);
        check(in.separation >= 0.0, "initial.D", e, "separation must be non-negative");
        boxes();
        break;
    }
    case InitialKind::Explicit: {
        Entry &p = doc.require("initial.positions");
        Entry &v = doc.require("initial.velocities");
        in.positions = to_points("initial.positions", p, in.dim);
        in.velocities = to_points("initial.velocities", v, in.dim);
        check(in.positions.size() == in.velocities.size(), "initial.velocities", v,
              "positions and velocities list different agent counts");
        in.n = in.positions.size() / in.dim;
        break;
    }
    case InitialKind::None:
        break;
    }
    if (sc.model.model == ModelKind::Leader && sc.model.leader >= in.agents()) {
        const Entry *e = doc.find("model.leader");
        throw ScenarioError("model.leader", e ? e->line : 0, "leader index exceeds the agent count");
    }
}

void parse_integration(Document &doc, Scenario &sc) {
    auto &ig = sc.integration;
    {
        Entry &e = doc.require("integration.dt");
        ig.dt = to_double("integration.dt", e);
        check(ig.dt > 0.0, "integration.dt", e, "dt must be positive");
    }
    {
        Entry &e = doc.require("integration.T");
        ig.t_end = to_double("integration.T", e);
        check(ig.t_end > 0.0, "integration.T", e, "T must be positive");
    }
    if (Entry *e = doc.find("integration.scheme"))
        ig.scheme = to_enum<Scheme>("integration.scheme", *e, {{"euler", Scheme::Euler}, {"rk4", Scheme::Rk4}});
    if (Entry *e = doc.find("integration.snapshot_stride"))
        ig.snapshot_stride = to_unsigned("integration.snapshot_stride", *e);
    if (Entry *e = doc.find("integration.stop_ratio")) {
        ig.stop_ratio = to_double("integration.stop_ratio", *e);
        check(ig.stop_ratio >= 0.0 && ig.stop_ratio < 1.0, "integration.stop_ratio", *e,
              "stop_ratio must lie in [0, 1)");
    }
}

void parse_output(Document &doc, Scenario &sc) {
    auto name = [&](const char *key, std::string &field) {
        if (Entry *e = doc.find(std::string("output.") + key)) {
            check(e->value.find_first_of("/\\") == std::string::npos, std::string("output.") + key, *e,
                  "file names may not contain path separators");
            field = e->value;
        }
    };
    name("diagnostics", sc.output.diagnostics);
    name("snapshots", sc.output.snapshots);
    name("summary", sc.output.summary);
    name("fields", sc.output.fields);
    name("sweep", sc.output.sweep);
}

void parse_hydro(Document &doc, Scenario &sc) {
    if (!doc.has_section("hydro"))
        return;
    auto &h = sc.hydro;
    h.enabled = true;
    h.x_min = to_double("hydro.x_min", doc.require("hydro.x_min"));
    {
        Entry &e = doc.require("hydro.x_max");
        h.x_max = to_double("hydro.x_max", e);
        check(h.x_max > h.x_min, "hydro.x_max", e, "x_max must exceed x_min");
    }
    if (Entry *e = doc.find("hydro.dx")) {
        h.dx = to_double("hydro.dx", *e);
        check(h.dx > 0.0, "hydro.dx", *e, "dx must be positive");
    }
    if (Entry *e = doc.find("hydro.boundary"))
        h.boundary = to_enum<Boundary>("hydro.boundary", *e,
                                       {{"outflow", Boundary::Outflow}, {"periodic", Boundary::Periodic}});
    if (Entry *e = doc.find("hydro.epsilon")) {
        h.epsilon = to_double("hydro.epsilon", *e);
        check(h.epsilon > 0.0 && h.epsilon < 1.0, "hydro.epsilon", *e, "epsilon must lie in (0, 1)");
    }
    if (Entry *e = doc.find("hydro.field_stride"))
        h.field_stride = to_unsigned("hydro.field_stride", *e);
    Entry &e = doc.require("hydro.bumps");
    for (auto group : split(e.value, ';')) {
        const auto parts = split(group, ':');
        check(parts.size() == 4, "hydro.bumps", e, "bumps are written center:half_width:height:velocity");
        Bump b{to_double("hydro.bumps", e, parts[0]), to_double("hydro.bumps", e, parts[1]),
               to_double("hydro.bumps", e, parts[2]), to_double("hydro.bumps", e, parts[3])};
        check(b.half_width > 0.0 && b.height > 0.0, "hydro.bumps", e,
              "bump half width and height must be positive");
        h.bumps.push_back(b);
    }
}

void parse_sweep(Document &doc, Scenario &sc) {
    if (!doc.has_section("sweep"))
        return;
    SweepSpec sw;
    Entry &p = doc.require("sweep.parameter");
    check(std::find(kSweepable.begin(), kSweepable.end(), p.value) != kSweepable.end(), "sweep.parameter",
          p, "'" + p.value + "' is not sweepable (s, alpha, beta, gamma, N, D)");
    sw.parameter = p.value;
    Entry &v = doc.require("sweep.values");
    sw.values = to_list("sweep.values", v);
    check(!sw.values.empty(), "sweep.values", v, "value list is empty");
    sc.sweep = std::move(sw);
}

void parse_lemma(Document &doc, Scenario &sc) {
    if (Entry *e = doc.find("lemma.cases")) {
        sc.lemma.cases = to_unsigned("lemma.cases", *e);
        check(sc.lemma.cases >= 1, "lemma.cases", *e, "must be at least 1");
    }
    if (Entry *e = doc.find("lemma.max_n")) {
        sc.lemma.max_n = to_unsigned("lemma.max_n", *e);
        check(sc.lemma.max_n >= 1 && sc.lemma.max_n <= 64, "lemma.max_n", *e, "must lie in [1, 64]");
    }
    if (Entry *e = doc.find("lemma.seed"))
        sc.lemma.seed = to_unsigned("lemma.seed", *e);
}

std::string points_text(const std::vector<double> &coords, std::size_t dim) {
    std::string out;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (i > 0)
            out += i % dim == 0 ? "; " : " ";
        out += fmt(coords[i]);
    }
    return out;
}

std::string_view kind_name(InitialKind k) {
    switch (k) {
    case InitialKind::Random:
        return "random";
    case InitialKind::Explicit:
        return "explicit";
    case InitialKind::TwoGroup:
        return "two-group";
    case InitialKind::None:
        return "none";
    }
    return "?";
}

std::string_view kernel_name(KernelKind k) {
    switch (k) {
    case KernelKind::PowerLaw:
        return "power-law";
    case KernelKind::PowerLawCutoff:
        return "cutoff";
    case KernelKind::Tabulated:
        return "tabulated";
    }
    return "?";
}

} // namespace

Scenario parse_scenario(std::string_view text) {
    Document doc(text);
    Scenario sc;
    parse_model(doc, sc);
    parse_initial(doc, sc);
    parse_integration(doc, sc);
    parse_output(doc, sc);
    parse_hydro(doc, sc);
    parse_sweep(doc, sc);
    parse_lemma(doc, sc);
    doc.reject_unused();
    return sc;
}

ScenarioEntries scenario_entries(const Scenario &sc) {
    ScenarioEntries out;
    auto &model = out.emplace_back("model", std::vector<std::pair<std::string, std::string>>{}).second;
    model.emplace_back("model", std::string(to_string(sc.model.model)));
    model.emplace_back("phi", std::string(kernel_name(sc.model.phi.kind())));
    switch (sc.model.phi.kind()) {
    case KernelKind::PowerLaw:
        model.emplace_back("s", fmt(sc.model.phi.exponent()));
        break;
    case KernelKind::PowerLawCutoff:
        model.emplace_back("s", fmt(sc.model.phi.exponent()));
        model.emplace_back("R", fmt(sc.model.phi.cutoff()));
        break;
    case KernelKind::Tabulated: {
        std::string t;
        for (const auto &k : sc.model.phi.knots())
            t += (t.empty() ? "" : ", ") + fmt(k.r) + ":" + fmt(k.value);
        model.emplace_back("table", t);
        break;
    }
    }
    model.emplace_back("alpha", fmt(sc.model.alpha));
    model.emplace_back("beta", fmt(sc.model.beta));
    model.emplace_back("leader", std::to_string(sc.model.leader));
    model.emplace_back("gamma", fmt(sc.model.gamma));
    model.emplace_back("normalization", std::string(to_string(sc.model.normalization)));

    auto &in = out.emplace_back("initial", std::vector<std::pair<std::string, std::string>>{}).second;
    const auto &i = sc.initial;
    in.emplace_back("kind", std::string(kind_name(i.kind)));
    if (i.kind != InitialKind::None) {
        in.emplace_back("dim", std::to_string(i.dim));
        auto boxes = [&] {
            in.emplace_back("seed", std::to_string(i.seed.value_or(0)));
            in.emplace_back("position_box", fmt(i.position_box.lo) + ", " + fmt(i.position_box.hi));
            in.emplace_back("velocity_box", fmt(i.velocity_box.lo) + ", " + fmt(i.velocity_box.hi));
        };
        if (i.kind == InitialKind::Random) {
            in.emplace_back("N", std::to_string(i.n));
            boxes();
        } else if (i.kind == InitialKind::TwoGroup) {
            in.emplace_back("N1", std::to_string(i.n1));
            in.emplace_back("N2", std::to_string(i.n2));
            in.emplace_back("D", fmt(i.separation));
            boxes();
        } else {
            in.emplace_back("positions", points_text(i.positions, i.dim));
            in.emplace_back("velocities", points_text(i.velocities, i.dim));
        }
    }

    auto &ig = out.emplace_back("integration", std::vector<std::pair<std::string, std::string>>{}).second;
    ig.emplace_back("dt", fmt(sc.integration.dt));
    ig.emplace_back("T", fmt(sc.integration.t_end));
    ig.emplace_back("scheme", sc.integration.scheme == Scheme::Euler ? "euler" : "rk4");
    ig.emplace_back("snapshot_stride", std::to_string(sc.integration.snapshot_stride));
    ig.emplace_back("stop_ratio", fmt(sc.integration.stop_ratio));

    auto &o = out.emplace_back("output", std::vector<std::pair<std::string, std::string>>{}).second;
    o.emplace_back("diagnostics", sc.output.diagnostics);
    o.emplace_back("snapshots", sc.output.snapshots);
    o.emplace_back("summary", sc.output.summary);
    o.emplace_back("fields", sc.output.fields);
    o.emplace_back("sweep", sc.output.sweep);

    if (sc.hydro.enabled) {
        auto &h = out.emplace_back("hydro", std::vector<std::pair<std::string, std::string>>{}).second;
        h.emplace_back("x_min", fmt(sc.hydro.x_min));
        h.emplace_back("x_max", fmt(sc.hydro.x_max));
        h.emplace_back("dx", fmt(sc.hydro.dx));
        h.emplace_back("boundary", sc.hydro.boundary == Boundary::Outflow ? "outflow" : "periodic");
        h.emplace_back("epsilon", fmt(sc.hydro.epsilon));
        h.emplace_back("field_stride", std::to_string(sc.hydro.field_stride));
        std::string b;
        for (const auto &bump : sc.hydro.bumps)
            b += (b.empty() ? "" : "; ") + fmt(bump.center) + ":" + fmt(bump.half_width) + ":" +
                 fmt(bump.height) + ":" + fmt(bump.velocity);
        h.emplace_back("bumps", b);
    }
    if (sc.sweep) {
        auto &s = out.emplace_back("sweep", std::vector<std::pair<std::string, std::string>>{}).second;
        s.emplace_back("parameter", sc.sweep->parameter);
        std::string v;
        for (double x : sc.sweep->values)
            v += (v.empty() ? "" : ", ") + fmt(x);
        s.emplace_back("values", v);
    }
    auto &l = out.emplace_back("lemma", std::vector<std::pair<std::string, std::string>>{}).second;
    l.emplace_back("cases", std::to_string(sc.lemma.cases));
    l.emplace_back("max_n", std::to_string(sc.lemma.max_n));
    l.emplace_back("seed", std::to_string(sc.lemma.seed));
    return out;
}

std::string serialize_scenario(const Scenario &sc) {
    std::string out;
    for (const auto &[section, entries] : scenario_entries(sc)) {
        if (!out.empty())
            out += "\n";
        out += "[" + section + "]\n";
        for (const auto &[key, value] : entries)
            out += key + " = " + value + "\n";
    }
    return out;
}

// ----------------------------------------------------------------------------

namespace {

constexpr std::string_view kPresetMt = R"(# relative-influence model with a slowly decaying kernel
[model]
model = mt
phi = power-law
s = 0.25
alpha = 1

[initial]
kind = random
dim = 2
N = 50
seed = 1
position_box = 0, 10
velocity_box = -1, 1

[integration]
dt = 0.01
T = 200
scheme = euler
stop_ratio = 1e-4
)";

constexpr std::string_view kPresetTwoGroup = R"(# small group far away from a large one
[model]
model = mt
phi = cutoff
s = 4
R = 5
alpha = 1

[initial]
kind = two-group
dim = 2
N1 = 5
N2 = 100
D = 100
seed = 7
position_box = 0, 1
velocity_box = -0.01, 0.01

[integration]
dt = 0.1
T = 1000
scheme = euler
)";

constexpr std::string_view kPresetLeader = R"([model]
model = leader
phi = power-law
s = 0.5
alpha = 1
beta = 0.3
leader = 0

[initial]
kind = random
dim = 2
N = 30
seed = 3
position_box = 0, 10
velocity_box = -1, 1

[integration]
dt = 0.01
T = 300
scheme = euler
stop_ratio = 1e-5
)";

constexpr std::string_view kPresetHydro = R"(# two density bumps moving toward each other
[model]
model = mt
phi = power-law
s = 0.25
alpha = 1

[integration]
dt = 0.01
T = 200
stop_ratio = 0.05

[hydro]
x_min = -8
x_max = 8
dx = 0.05
boundary = outflow
field_stride = 100
bumps = -2.5:1.5:1:0.5; 2.5:1.5:1:-0.5
)";

constexpr std::string_view kPresetSweep = R"([model]
model = mt
phi = power-law
s = 1
alpha = 1

[initial]
kind = random
dim = 2
N = 20
seed = 5
position_box = 0, 10
velocity_box = -1, 1

[integration]
dt = 0.01
T = 30
stop_ratio = 1e-8

[sweep]
parameter = s
values = 0.25, 0.5, 0.6, 1
)";

const std::vector<std::pair<std::string_view, std::string_view>> kPresets = {
    {"mt-unconditional", kPresetMt},
    {"two-group", kPresetTwoGroup},
    {"leader", kPresetLeader},
    {"hydro-bumps", kPresetHydro},
    {"tail-sweep", kPresetSweep},
};

} // namespace

std::optional<std::string_view> preset(std::string_view name) {
    for (const auto &[n, text] : kPresets)
        if (n == name)
            return text;
    return std::nullopt;
}

std::vector<std::string_view> preset_names() {
    std::vector<std::string_view> out;
    for (const auto &[n, text] : kPresets)
        out.push_back(n);
    return out;
}

// ----------------------------------------------------------------------------

AgentEnsemble make_initial(const InitialSpec &spec) {
    const std::size_t d = spec.dim;
    switch (spec.kind) {
    case InitialKind::None:
        throw std::invalid_argument("scenario has no particle initial condition");
    case InitialKind::Explicit:
        return AgentEnsemble(d, spec.positions, spec.velocities);
    case InitialKind::Random:
    case InitialKind::TwoGroup:
        break;
    }
    if (!spec.seed)
        throw std::invalid_argument("random initial conditions need a seed");
    Rng rng(*spec.seed);
    const std::size_t n = spec.agents();
    std::vector<double> x(n * d), v(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            x[i * d + k] = rng.uniform(spec.position_box.lo, spec.position_box.hi);
            if (spec.kind == InitialKind::TwoGroup && k == 0 && i >= spec.n1)
                x[i * d + k] += spec.separation;
        }
    for (auto &c : v)
        c = rng.uniform(spec.velocity_box.lo, spec.velocity_box.hi);
    return AgentEnsemble(d, std::move(x), std::move(v));
}

std::vector<std::string_view> sweepable_parameters() { return kSweepable; }

Scenario with_parameter(const Scenario &scenario, std::string_view parameter, double value) {
    Scenario sc = scenario;
    auto &m = sc.model;
    if (parameter == "s") {
        if (!(value > 0.0))
            throw std::invalid_argument("sweep: s must be positive");
        switch (m.phi.kind()) {
        case KernelKind::PowerLaw:
            m.phi = InfluenceFunction::power_law(value);
            break;
        case KernelKind::PowerLawCutoff:
            m.phi = InfluenceFunction::power_law_cutoff(value, m.phi.cutoff());
            break;
        case KernelKind::Tabulated:
            throw std::invalid_argument("sweep: s has no meaning for a tabulated kernel");
        }
    } else if (parameter == "alpha") {
        if (!(value > 0.0))
            throw std::invalid_argument("sweep: alpha must be positive");
        m.alpha = value;
    } else if (parameter == "beta") {
        if (m.model != ModelKind::Leader)
            throw std::invalid_argument("sweep: beta applies to the leader model only");
        m.beta = value;
    } else if (parameter == "gamma") {
        if (m.model != ModelKind::Vision)
            throw std::invalid_argument("sweep: gamma applies to the vision model only");
        m.gamma = value;
    } else if (parameter == "N") {
        if (sc.initial.kind != InitialKind::Random)
            throw std::invalid_argument("sweep: N applies to random initial conditions only");
        if (!(value >= 1.0) || value != std::floor(value))
            throw std::invalid_argument("sweep: N must be a positive integer");
        sc.initial.n = static_cast<std::size_t>(value);
    } else if (parameter == "D") {
        if (sc.initial.kind != InitialKind::TwoGroup)
            throw std::invalid_argument("sweep: D applies to two-group initial conditions only");
        if (!(value >= 0.0))
            throw std::invalid_argument("sweep: D must be non-negative");
        sc.initial.separation = value;
    } else {
        throw std::invalid_argument("'" + std::string(parameter) + "' is not a sweepable parameter");
    }
    m.validate();
    return sc;
}

std::optional<Command> parse_command(std::string_view name) {
    for (Command c : {Command::Simulate, Command::Certify, Command::VerifyLemma, Command::Hydro,
                      Command::Sweep, Command::CompareGroups})
        if (to_string(c) == name)
            return c;
    return std::nullopt;
}

std::string_view to_string(Command c) {
    switch (c) {
    case Command::Simulate:
        return "simulate";
    case Command::Certify:
        return "certify";
    case Command::VerifyLemma:
        return "verify-lemma";
    case Command::Hydro:
        return "hydro";
    case Command::Sweep:
        return "sweep";
    case Command::CompareGroups:
        return "compare-groups";
    }
    return "?";
}

} // namespace flock
