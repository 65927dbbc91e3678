#include "she/app.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "she/audit.hpp"
#include "she/bounds.hpp"
#include "she/errors.hpp"
#include "she/estimators.hpp"
#include "she/noise.hpp"
#include "she/solver.hpp"

namespace she {

namespace {

using nlohmann::json;

constexpr std::pair<Experiment, std::string_view> kExperiments[] = {
    {Experiment::simulate, "simulate"},         {Experiment::tails, "tails"},
    {Experiment::moments, "moments"},           {Experiment::suscept, "suscept"},
    {Experiment::independence, "independence"}, {Experiment::trichotomy, "trichotomy"},
    {Experiment::bounds, "bounds"},             {Experiment::kernel_audit, "kernel-audit"},
};

// ---- YAML reading --------------------------------------------------------

void check_keys(const YAML::Node& n, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!n.IsMap()) {
        throw ConfigError(where + ": expected a mapping");
    }
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out, const std::string& where) {
    const YAML::Node v = n[key];
    if (!v) {
        return;
    }
    try {
        out = v.as<T>();
    } catch (const YAML::Exception& e) {
        throw ConfigError(where + "." + key + ": " + e.msg);
    }
}

ProfileSpec read_profile(const YAML::Node& n, const std::string& where) {
    check_keys(n, {"kind", "lambda", "level", "peak", "halfwidth", "table"}, where);
    ProfileSpec p;
    read(n, "kind", p.kind, where);
    read(n, "lambda", p.lambda, where);
    read(n, "level", p.level, where);
    read(n, "peak", p.peak, where);
    read(n, "halfwidth", p.halfwidth, where);
    read(n, "table", p.table, where);
    return p;
}

// ---- YAML writing --------------------------------------------------------

// Shortest text that reads back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Num {
    double v;
};

YAML::Emitter& operator<<(YAML::Emitter& e, Num n) { return e << shortest(n.v); }

void emit_doubles(YAML::Emitter& e, const std::vector<double>& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (double x : v) {
        e << Num{x};
    }
    e << YAML::EndSeq;
}

void emit_profile(YAML::Emitter& e, const ProfileSpec& p) {
    e << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << p.kind;
    if (p.kind == "lambda") {
        e << YAML::Key << "lambda" << YAML::Value << Num{p.lambda};
    } else if (p.kind == "constant") {
        e << YAML::Key << "level" << YAML::Value << Num{p.level};
    } else if (p.kind == "bump") {
        e << YAML::Key << "peak" << YAML::Value << Num{p.peak} << YAML::Key << "halfwidth" << YAML::Value << Num{p.halfwidth};
    } else {
        e << YAML::Key << "table" << YAML::Value << p.table;
    }
    e << YAML::EndMap;
}

json profile_json(const ProfileSpec& p) {
    json j{{"kind", p.kind}};
    if (p.kind == "lambda") {
        j["lambda"] = p.lambda;
    } else if (p.kind == "constant") {
        j["level"] = p.level;
    } else if (p.kind == "bump") {
        j["peak"] = p.peak;
        j["halfwidth"] = p.halfwidth;
    } else {
        j["table"] = p.table;
    }
    return j;
}

// ---- result helpers --------------------------------------------------------

json stat_json(const EnsembleStat& s) {
    return {{"n", s.n}, {"mean", s.mean}, {"variance", s.variance}, {"ci_halfwidth", s.ci_halfwidth}};
}

std::string fmt_int(std::int64_t v) { return std::to_string(v); }

MCSettings settings(const ExperimentConfig& c) {
    MCSettings s;
    s.n_reps = c.n_reps;
    s.seed = experiment_seed(c);
    s.parallelism.threads = c.parallelism;
    s.dx = c.grid.dx;
    s.dt = c.grid.dt;
    s.halfwidth = c.grid.halfwidth;
    s.solve.clamp_at_zero = c.grid.clamp_at_zero;
    return s;
}

std::string describe_point(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

// ---- experiments ---------------------------------------------------------

Grid simulate_grid(const ExperimentConfig& c) {
    double reach = 0.0;
    for (double x : c.observe_x) {
        reach = std::max(reach, std::abs(x));
    }
    const double h = c.grid.halfwidth > 0.0 ? c.grid.halfwidth : reach + 6.0 * std::sqrt(c.grid.T) + 1.0;
    return Grid::make(h, c.grid.dx, c.grid.T, c.grid.dt);
}

ExperimentResult run_simulate(const ExperimentConfig& c) {
    const auto s = settings(c);
    const InitialProfile u0 = make_profile(c.profile);
    const SigmaFn sigma = make_sigma(c.sigma);
    const Grid g = simulate_grid(c);
    std::vector<std::int64_t> cells;
    for (double x : c.observe_x) {
        cells.push_back(g.cell_of(x));
    }
    const Problem p(u0, sigma, g, s.solve);
    const auto out = run_replicas(
        s.n_reps,
        [&](std::uint64_t r) {
            const auto sum = p.run({s.seed, r});
            std::vector<double> v;
            for (auto j : cells) {
                v.push_back(sum.final_row[static_cast<std::size_t>(j)]);
            }
            v.push_back(sum.negativity_fraction);
            return v;
        },
        s.parallelism);
    const auto rows = completed_or_throw(out, "simulate");

    ExperimentResult res;
    res.replicas = s.n_reps;
    res.aborted = out.aborted();
    res.csv.header = {"x", "n", "mean", "variance", "ci_halfwidth"};
    json pts = json::array();
    for (std::size_t i = 0; i <= cells.size(); ++i) {
        std::vector<double> col;
        for (const auto& r : rows) {
            col.push_back(r[i]);
        }
        const auto st = summarize(col);
        if (i == cells.size()) {
            res.statistics["negativity_fraction"] = st.mean;
            break;
        }
        const double x = g.x(cells[i]);
        json pj = stat_json(st);
        pj["x"] = x;
        pts.push_back(pj);
        res.csv.rows.push_back(
            {format_double(x), fmt_int(st.n), format_double(st.mean), format_double(st.variance),
             format_double(st.ci_halfwidth)});
        if (u0.kind() == InitialProfile::Kind::constant && sigma.kind() == SigmaFn::Kind::linear) {
            const bool pass = std::abs(st.mean - u0.level()) <= 3.0 * st.standard_error();
            res.assertions.push_back({"mean oracle at x=" + describe_point(x), pass,
                                      "|mean - u0| = " + format_double(std::abs(st.mean - u0.level())) +
                                          ", 3 SE = " + format_double(3.0 * st.standard_error())});
        }
    }
    res.statistics["grid"] = g.describe();
    res.statistics["points"] = pts;
    return res;
}

ExperimentResult run_tails(const ExperimentConfig& c) {
    const auto s = settings(c);
    const InitialProfile u0 = make_profile(c.profile);
    auto curve = tail_exponent(u0, make_sigma(c.sigma), c.grid.T, c.epsilon, c.tail_x, s);

    ExperimentResult res;
    res.csv.header = {"x", "hits", "n", "aborted", "p_hat", "wilson_low", "wilson_high"};
    json pts = json::array();
    for (const auto& p : curve.points) {
        res.replicas += p.n + p.aborted;
        res.aborted += p.aborted;
        pts.push_back({{"x", p.x},
                       {"hits", p.hits},
                       {"n", p.n},
                       {"aborted", p.aborted},
                       {"p_hat", p.p_hat},
                       {"wilson_low", p.wilson.low},
                       {"wilson_high", p.wilson.high}});
        res.csv.rows.push_back({format_double(p.x), fmt_int(p.hits), fmt_int(p.n), fmt_int(p.aborted),
                                format_double(p.p_hat), format_double(p.wilson.low), format_double(p.wilson.high)});
    }
    res.statistics = {{"epsilon", curve.epsilon},
                      {"t", curve.t},
                      {"points", pts},
                      {"slope", curve.slope},
                      {"slope_stderr", curve.slope_stderr},
                      {"fitted_points", curve.fitted_points}};
    if (const auto idx = u0.decay_index(); idx && !idx->infinite) {
        const auto env = tail_exponent_envelope(idx->value, c.grid.T, c.k_const, c.l_const);
        res.statistics["envelope"] = {{"lambda_idx", idx->value},
                                      {"k_const", c.k_const},
                                      {"l_const", c.l_const},
                                      {"lower", env.lower},
                                      {"upper", env.upper}};
    }
    return res;
}

ExperimentResult run_moments(const ExperimentConfig& c) {
    const auto s = settings(c);
    const InitialProfile u0 = make_profile(c.profile);
    const SigmaFn sigma = make_sigma(c.sigma);
    const auto stats = mc_moments(u0, sigma, c.grid.T, c.moment_x, c.moment_orders, s);

    ExperimentResult res;
    res.replicas = s.n_reps;
    res.aborted = s.n_reps - (stats.empty() ? s.n_reps : stats.front().n);
    res.csv.header = {"k", "n", "mean", "variance", "ci_halfwidth"};
    json ms = json::array();
    const bool pam = u0.kind() == InitialProfile::Kind::constant && sigma.kind() == SigmaFn::Kind::linear;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const int k = c.moment_orders[i];
        const auto& st = stats[i];
        json mj = stat_json(st);
        mj["k"] = k;
        ms.push_back(mj);
        res.csv.rows.push_back({fmt_int(k), fmt_int(st.n), format_double(st.mean), format_double(st.variance),
                                format_double(st.ci_halfwidth)});
        if (!pam) {
            continue;
        }
        const double level = u0.level();
        if (k == 1) {
            res.assertions.push_back({"first moment equals u0", std::abs(st.mean - level) <= 3.0 * st.standard_error(),
                                      "mean " + format_double(st.mean) + " vs " + format_double(level)});
        } else if (k == 2) {
            const double lattice = level * level * lattice_second_moment(sigma.lam(), s.dx, c.grid.T, s.dt);
            const double continuum = level * level * pam_second_moment(sigma.lam(), c.grid.T);
            res.statistics["second_moment_lattice"] = lattice;
            res.statistics["second_moment_continuum"] = continuum;
            res.assertions.push_back({"second moment equals lattice recursion",
                                      std::abs(st.mean - lattice) <= 3.0 * st.standard_error(),
                                      "mean " + format_double(st.mean) + " vs " + format_double(lattice) +
                                          " (continuum " + format_double(continuum) + ")"});
        }
    }
    res.statistics["x"] = c.moment_x;
    res.statistics["t"] = c.grid.T;
    res.statistics["moments"] = ms;
    return res;
}

ExperimentResult run_suscept(const ExperimentConfig& c) {
    const auto s = settings(c);
    const InitialData u0 = make_profile(c.profile);
    const InitialData v0 = splice(u0, make_profile(c.outside), c.a, c.r);
    const auto sr = susceptibility_experiment(u0, v0, make_sigma(c.sigma), c.a, c.r, c.suscept_t, s);

    ExperimentResult res;
    res.replicas = s.n_reps;
    res.aborted = sr.aborted;
    res.csv.header = {"t", "x_star", "n", "estimate", "ci_halfwidth", "bound", "within"};
    json rows = json::array();
    for (const auto& r : sr.rows) {
        json rj = stat_json(r.estimate);
        rj["t"] = r.t;
        rj["x_star"] = r.x_star;
        rj["bound"] = r.bound;
        rj["within"] = r.within;
        rows.push_back(rj);
        res.csv.rows.push_back({format_double(r.t), format_double(r.x_star), fmt_int(r.estimate.n),
                                format_double(r.estimate.mean), format_double(r.estimate.ci_halfwidth),
                                format_double(r.bound), r.within ? "1" : "0"});
        res.assertions.push_back({"estimate <= bound + 2 CI at t=" + describe_point(r.t), r.within,
                                  format_double(r.estimate.mean) + " <= " + format_double(r.bound) + " + " +
                                      format_double(2.0 * r.estimate.ci_halfwidth)});
    }
    res.statistics = {{"a", sr.a}, {"r", sr.r}, {"b_norm", sr.b_norm}, {"rows", rows}, {"slope", sr.slope}};
    return res;
}

ExperimentResult run_independence(const ExperimentConfig& c) {
    const auto s = settings(c);
    const auto ir =
        independence_experiment(make_profile(c.profile), make_sigma(c.sigma), c.grid.T, c.picard_n, c.points, s);

    ExperimentResult res;
    res.replicas = s.n_reps;
    res.aborted = ir.aborted;
    res.csv.header = {"i", "j", "x_i", "x_j", "correlation"};
    for (std::size_t i = 0; i < ir.points.size(); ++i) {
        for (std::size_t j = i + 1; j < ir.points.size(); ++j) {
            res.csv.rows.push_back({fmt_int(static_cast<std::int64_t>(i)), fmt_int(static_cast<std::int64_t>(j)),
                                    format_double(ir.points[i]), format_double(ir.points[j]),
                                    format_double(ir.correlation[i][j])});
        }
    }
    res.statistics = {{"n", c.picard_n},
                      {"t", c.grid.T},
                      {"separation", independence_separation(c.picard_n, c.grid.T)},
                      {"points", ir.points},
                      {"correlation", ir.correlation},
                      {"max_offdiag", ir.max_offdiag},
                      {"threshold", ir.threshold},
                      {"windows_disjoint", ir.windows_disjoint}};
    res.assertions.push_back({"noise windows disjoint", ir.windows_disjoint, "footprints of distinct points"});
    res.assertions.push_back({"off-diagonal correlations within 4/sqrt(N)", ir.max_offdiag <= ir.threshold,
                              format_double(ir.max_offdiag) + " <= " + format_double(ir.threshold)});
    return res;
}

DecayIndex scan_index(const InitialProfile& p) {
    if (auto idx = p.decay_index()) {
        return *idx;
    }
    const std::vector<double> xs{std::exp(2.0), std::exp(3.0), std::exp(4.0)};
    for (double x : xs) {
        if (!(p(x) > 0.0)) {
            return DecayIndex::infinity();
        }
    }
    return DecayIndex::finite(estimate_lambda(p, xs));
}

ExperimentResult run_trichotomy(const ExperimentConfig& c) {
    const auto s = settings(c);
    std::vector<ScanProfile> profiles;
    for (const auto& ps : c.scan_profiles) {
        const auto p = make_profile(ps);
        profiles.push_back({p, scan_index(p)});
    }
    const auto map = trichotomy_scan(profiles, make_sigma(c.sigma), c.scan_t, c.scan_L, s);

    ExperimentResult res;
    res.replicas = s.n_reps * static_cast<std::int64_t>(profiles.size() * c.scan_L.size());
    res.aborted = map.aborted;
    res.csv.header = {"profile", "index", "t", "L", "n", "mean", "ci_halfwidth"};
    json cells = json::array();
    for (const auto& cell : map.cells) {
        std::vector<double> means;
        for (std::size_t k = 0; k < cell.L.size(); ++k) {
            const auto& st = cell.window_max[k];
            means.push_back(st.mean);
            res.csv.rows.push_back({cell.profile, cell.index.to_string(), format_double(cell.t),
                                    format_double(cell.L[k]), fmt_int(st.n), format_double(st.mean),
                                    format_double(st.ci_halfwidth)});
        }
        json w = json::array();
        for (const auto& st : cell.window_max) {
            w.push_back(stat_json(st));
        }
        cells.push_back({{"profile", cell.profile},
                         {"index", cell.index.to_string()},
                         {"t", cell.t},
                         {"L", cell.L},
                         {"window_max", w},
                         {"slope", cell.slope},
                         {"decreasing_to_zero", decreasing_to_zero(means)},
                         {"increasing", strictly_increasing(means)}});
    }
    res.statistics = {{"cells", cells}, {"exploratory", true}};
    return res;
}

ExperimentResult run_bounds(const ExperimentConfig& c) {
    ExperimentResult res;
    res.csv.header = {"bound", "parameters", "value", "upper"};
    json table = json::array();
    auto record = [&](const std::string& name, const std::string& params, const std::function<std::pair<double, double>()>& f) {
        try {
            const auto [v, u] = f();
            table.push_back({{"bound", name}, {"parameters", params}, {"value", v}, {"upper", u}});
            res.csv.rows.push_back({name, params, format_double(v), std::isnan(u) ? "" : format_double(u)});
            return std::optional<std::pair<double, double>>({v, u});
        } catch (const OverflowError&) {
            table.push_back({{"bound", name}, {"parameters", params}, {"value", "overflow"}});
            res.csv.rows.push_back({name, params, "overflow", ""});
            return std::optional<std::pair<double, double>>();
        }
    };
    const double nan = std::nan("");
    auto p = [](std::initializer_list<std::pair<const char*, double>> kv) {
        std::ostringstream os;
        bool first = true;
        for (auto [k, v] : kv) {
            os << (first ? "" : ";") << k << "=" << v;
            first = false;
        }
        return os.str();
    };
    for (double lip : {0.5, 1.0, 2.0}) {
        for (double r : {1.0, 2.0, 4.0}) {
            for (double t : {0.05, 0.1, 0.5}) {
                record("suscept_bound", p({{"lip", lip}, {"r", r}, {"t", t}, {"b_norm", 1.0}}),
                       [&] { return std::pair{suscept_bound(lip, r, t, 1.0), nan}; });
            }
        }
    }
    bool ordered = true;
    for (int k : {2, 3, 4}) {
        for (double t : {0.1, 0.5, 1.0}) {
            const auto v = record("moment_bounds", p({{"k", k}, {"t", t}, {"u0", 1.0}, {"A", c.a_const}}), [&] {
                const auto m = moment_bounds(k, t, 1.0, c.a_const);
                return std::pair{m.lower, m.upper};
            });
            ordered = ordered && (!v || v->first <= v->second);
        }
    }
    bool in_unit = true;
    for (double eps : {0.1, 0.5, 1.0}) {
        for (double t : {0.25, 0.5, 1.0}) {
            const auto v =
                record("chebyshev_tail_bound", p({{"epsilon", eps}, {"t", t}, {"u0", 0.01}, {"A", c.a_const}}),
                       [&] { return std::pair{chebyshev_tail_bound(eps, t, 0.01, c.a_const), nan}; });
            in_unit = in_unit && (!v || (v->first > 0.0 && v->first <= 1.0));
        }
    }
    bool increasing = true;
    for (double lam : {0.5, 1.0, 2.0}) {
        double prev = 0.0;
        for (double t : {0.0, 0.5, 1.0, 2.0}) {
            const auto v = record("pam_second_moment", p({{"lam", lam}, {"t", t}}),
                                  [&] { return std::pair{pam_second_moment(lam, t), nan}; });
            increasing = increasing && (!v || v->first >= prev);
            prev = v ? v->first : prev;
        }
    }
    for (double idx : {0.5, 1.0, 2.0}) {
        for (double t : {0.25, 1.0}) {
            record("tail_exponent_envelope", p({{"Lambda", idx}, {"t", t}, {"K", c.k_const}, {"L", c.l_const}}), [&] {
                const auto e = tail_exponent_envelope(idx, t, c.k_const, c.l_const);
                return std::pair{e.lower, e.upper};
            });
        }
    }
    record("derived_l_const", p({{"A", c.a_const}}), [&] { return std::pair{derived_l_const(c.a_const), nan}; });
    res.statistics = {{"a_const", c.a_const}, {"k_const", c.k_const}, {"l_const", c.l_const}, {"table", table}};
    res.assertions.push_back({"moment bounds ordered", ordered, "lower <= upper on the lattice"});
    res.assertions.push_back({"chebyshev bound in (0, 1]", in_unit, "on the lattice"});
    res.assertions.push_back({"pam second moment nondecreasing in t", increasing, "on the lattice"});
    return res;
}

ExperimentResult run_kernel_audit(const ExperimentConfig& c) {
    ExperimentResult res;
    res.csv.header = {"check", "pass", "value", "limit"};
    json checks = json::array();
    for (const auto& a : kernel_audit(experiment_seed(c))) {
        checks.push_back({{"check", a.name}, {"pass", a.pass}, {"value", a.value}, {"limit", a.limit}});
        res.csv.rows.push_back({a.name, a.pass ? "1" : "0", format_double(a.value), format_double(a.limit)});
        res.assertions.push_back(
            {a.name, a.pass, format_double(a.value) + " <= " + format_double(a.limit) + (a.detail.empty() ? "" : "; " + a.detail)});
    }
    res.statistics = {{"checks", checks}};
    return res;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        out += ch == '"' ? "\"\"" : std::string(1, ch);
    }
    return out + "\"";
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    f.close();
    if (!f) {
        throw std::ios_base::failure("cannot write " + path.string());
    }
}

}  // namespace

std::string_view to_string(Experiment e) {
    for (auto [k, name] : kExperiments) {
        if (k == e) {
            return name;
        }
    }
    return "?";
}

std::string_view to_string(OutputFormat f) {
    switch (f) {
        case OutputFormat::csv:
            return "csv";
        case OutputFormat::json:
            return "json";
        case OutputFormat::both:
            return "both";
    }
    return "?";
}

Experiment parse_experiment(std::string_view name) {
    for (auto [k, n] : kExperiments) {
        if (n == name) {
            return k;
        }
    }
    throw ConfigError("unknown experiment '" + std::string(name) +
                      "' (simulate, tails, moments, suscept, independence, trichotomy, bounds, kernel-audit)");
}

OutputFormat parse_format(std::string_view name) {
    if (name == "csv") {
        return OutputFormat::csv;
    }
    if (name == "json") {
        return OutputFormat::json;
    }
    if (name == "both") {
        return OutputFormat::both;
    }
    throw ConfigError("output_format: expected csv, json or both, got '" + std::string(name) + "'");
}

InitialProfile make_profile(const ProfileSpec& p) {
    if (p.kind == "lambda") {
        return InitialProfile::lambda_family(p.lambda);
    }
    if (p.kind == "constant") {
        return InitialProfile::constant(p.level);
    }
    if (p.kind == "bump") {
        return InitialProfile::bump(p.peak, p.halfwidth);
    }
    if (p.kind == "table") {
        return InitialProfile::load_table_csv(p.table);
    }
    throw ConfigError("profile.kind: expected lambda, constant, bump or table, got '" + p.kind + "'");
}

SigmaFn make_sigma(const SigmaSpec& s) {
    if (s.kind == "linear") {
        return SigmaFn::linear(s.lambda);
    }
    if (s.kind == "wobble") {
        return SigmaFn::wobble(s.lambda);
    }
    throw ConfigError("sigma.kind: expected linear or wobble, got '" + s.kind + "'");
}

ExperimentConfig parse_config(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        throw ConfigError("config: " + e.msg);
    }
    ExperimentConfig c;
    if (!root || root.IsNull()) {
        return c;
    }
    check_keys(root,
               {"experiment", "seed", "n_reps", "parallelism", "output_dir", "output_format", "grid", "profile",
                "sigma", "simulate", "tails", "moments", "suscept", "independence", "trichotomy", "bounds",
                "kernel-audit"},
               "config");
    if (root["experiment"]) {
        c.experiment = parse_experiment(root["experiment"].as<std::string>());
    }
    read(root, "seed", c.seed, "config");
    read(root, "n_reps", c.n_reps, "config");
    read(root, "output_dir", c.output_dir, "config");
    if (root["output_format"]) {
        c.format = parse_format(root["output_format"].as<std::string>());
    }
    if (const auto par = root["parallelism"]) {
        if (par.as<std::string>() == "auto") {
            c.parallelism = 0;
        } else {
            read(root, "parallelism", c.parallelism, "config");
        }
    }
    if (const auto g = root["grid"]) {
        check_keys(g, {"dx", "dt", "T", "halfwidth", "clamp_at_zero"}, "grid");
        read(g, "dx", c.grid.dx, "grid");
        if (g["dt"] && g["dt"].as<std::string>() != "auto") {
            double dt = 0.0;
            read(g, "dt", dt, "grid");
            c.grid.dt = dt;
        }
        read(g, "T", c.grid.T, "grid");
        read(g, "halfwidth", c.grid.halfwidth, "grid");
        read(g, "clamp_at_zero", c.grid.clamp_at_zero, "grid");
    }
    if (const auto p = root["profile"]) {
        c.profile = read_profile(p, "profile");
    }
    if (const auto s = root["sigma"]) {
        check_keys(s, {"kind", "lambda"}, "sigma");
        read(s, "kind", c.sigma.kind, "sigma");
        read(s, "lambda", c.sigma.lambda, "sigma");
    }
    if (const auto n = root["simulate"]) {
        check_keys(n, {"x", "snapshot_stride"}, "simulate");
        read(n, "x", c.observe_x, "simulate");
        read(n, "snapshot_stride", c.snapshot_stride, "simulate");
    }
    if (const auto n = root["tails"]) {
        check_keys(n, {"epsilon", "x", "k_const", "l_const"}, "tails");
        read(n, "epsilon", c.epsilon, "tails");
        read(n, "x", c.tail_x, "tails");
        read(n, "k_const", c.k_const, "tails");
        read(n, "l_const", c.l_const, "tails");
    }
    if (const auto n = root["moments"]) {
        check_keys(n, {"x", "orders"}, "moments");
        read(n, "x", c.moment_x, "moments");
        read(n, "orders", c.moment_orders, "moments");
    }
    if (const auto n = root["suscept"]) {
        check_keys(n, {"a", "r", "t", "outside"}, "suscept");
        read(n, "a", c.a, "suscept");
        read(n, "r", c.r, "suscept");
        read(n, "t", c.suscept_t, "suscept");
        if (n["outside"]) {
            c.outside = read_profile(n["outside"], "suscept.outside");
        }
    }
    if (const auto n = root["independence"]) {
        check_keys(n, {"n", "points"}, "independence");
        read(n, "n", c.picard_n, "independence");
        read(n, "points", c.points, "independence");
    }
    if (const auto n = root["trichotomy"]) {
        check_keys(n, {"t", "L", "profiles"}, "trichotomy");
        read(n, "t", c.scan_t, "trichotomy");
        read(n, "L", c.scan_L, "trichotomy");
        if (const auto ps = n["profiles"]) {
            if (!ps.IsSequence()) {
                throw ConfigError("trichotomy.profiles: expected a list");
            }
            c.scan_profiles.clear();
            for (std::size_t i = 0; i < ps.size(); ++i) {
                c.scan_profiles.push_back(read_profile(ps[i], "trichotomy.profiles[" + std::to_string(i) + "]"));
            }
        }
    }
    if (const auto n = root["bounds"]) {
        check_keys(n, {"a_const", "k_const", "l_const"}, "bounds");
        read(n, "a_const", c.a_const, "bounds");
        read(n, "k_const", c.k_const, "bounds");
        read(n, "l_const", c.l_const, "bounds");
    }
    if (const auto n = root["kernel-audit"]; n && !n.IsNull()) {
        check_keys(n, {}, "kernel-audit");
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "experiment" << YAML::Value << std::string(to_string(c.experiment));
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::Key << "n_reps" << YAML::Value << c.n_reps;
    e << YAML::Key << "parallelism" << YAML::Value;
    if (c.parallelism == 0) {
        e << "auto";
    } else {
        e << c.parallelism;
    }
    e << YAML::Key << "output_dir" << YAML::Value << c.output_dir;
    e << YAML::Key << "output_format" << YAML::Value << std::string(to_string(c.format));
    e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "dx" << YAML::Value << Num{c.grid.dx};
    e << YAML::Key << "dt" << YAML::Value;
    if (c.grid.dt) {
        e << Num{*c.grid.dt};
    } else {
        e << "auto";
    }
    e << YAML::Key << "T" << YAML::Value << Num{c.grid.T};
    e << YAML::Key << "halfwidth" << YAML::Value << Num{c.grid.halfwidth};
    e << YAML::Key << "clamp_at_zero" << YAML::Value << c.grid.clamp_at_zero;
    e << YAML::EndMap;
    e << YAML::Key << "profile" << YAML::Value;
    emit_profile(e, c.profile);
    e << YAML::Key << "sigma" << YAML::Value << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << c.sigma.kind
      << YAML::Key << "lambda" << YAML::Value << Num{c.sigma.lambda} << YAML::EndMap;

    e << YAML::Key << std::string(to_string(c.experiment)) << YAML::Value << YAML::BeginMap;
    switch (c.experiment) {
        case Experiment::simulate:
            e << YAML::Key << "x" << YAML::Value;
            emit_doubles(e, c.observe_x);
            e << YAML::Key << "snapshot_stride" << YAML::Value << c.snapshot_stride;
            break;
        case Experiment::tails:
            e << YAML::Key << "epsilon" << YAML::Value << Num{c.epsilon} << YAML::Key << "x" << YAML::Value;
            emit_doubles(e, c.tail_x);
            e << YAML::Key << "k_const" << YAML::Value << Num{c.k_const} << YAML::Key << "l_const" << YAML::Value
              << Num{c.l_const};
            break;
        case Experiment::moments:
            e << YAML::Key << "x" << YAML::Value << Num{c.moment_x} << YAML::Key << "orders" << YAML::Value << YAML::Flow
              << c.moment_orders;
            break;
        case Experiment::suscept:
            e << YAML::Key << "a" << YAML::Value << Num{c.a} << YAML::Key << "r" << YAML::Value << Num{c.r} << YAML::Key << "t"
              << YAML::Value;
            emit_doubles(e, c.suscept_t);
            e << YAML::Key << "outside" << YAML::Value;
            emit_profile(e, c.outside);
            break;
        case Experiment::independence:
            e << YAML::Key << "n" << YAML::Value << c.picard_n << YAML::Key << "points" << YAML::Value;
            emit_doubles(e, c.points);
            break;
        case Experiment::trichotomy:
            e << YAML::Key << "t" << YAML::Value;
            emit_doubles(e, c.scan_t);
            e << YAML::Key << "L" << YAML::Value;
            emit_doubles(e, c.scan_L);
            e << YAML::Key << "profiles" << YAML::Value << YAML::BeginSeq;
            for (const auto& p : c.scan_profiles) {
                emit_profile(e, p);
            }
            e << YAML::EndSeq;
            break;
        case Experiment::bounds:
            e << YAML::Key << "a_const" << YAML::Value << Num{c.a_const} << YAML::Key << "k_const" << YAML::Value
              << Num{c.k_const} << YAML::Key << "l_const" << YAML::Value << Num{c.l_const};
            break;
        case Experiment::kernel_audit:
            break;
    }
    e << YAML::EndMap << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    json j{{"experiment", to_string(c.experiment)},
           {"seed", c.seed},
           {"n_reps", c.n_reps},
           {"parallelism", c.parallelism == 0 ? json("auto") : json(c.parallelism)},
           {"output_dir", c.output_dir},
           {"output_format", to_string(c.format)},
           {"grid",
            {{"dx", c.grid.dx},
             {"dt", c.grid.dt ? json(*c.grid.dt) : json("auto")},
             {"T", c.grid.T},
             {"halfwidth", c.grid.halfwidth},
             {"clamp_at_zero", c.grid.clamp_at_zero}}},
           {"profile", profile_json(c.profile)},
           {"sigma", {{"kind", c.sigma.kind}, {"lambda", c.sigma.lambda}}}};
    json s = json::object();
    switch (c.experiment) {
        case Experiment::simulate:
            s = {{"x", c.observe_x}, {"snapshot_stride", c.snapshot_stride}};
            break;
        case Experiment::tails:
            s = {{"epsilon", c.epsilon}, {"x", c.tail_x}, {"k_const", c.k_const}, {"l_const", c.l_const}};
            break;
        case Experiment::moments:
            s = {{"x", c.moment_x}, {"orders", c.moment_orders}};
            break;
        case Experiment::suscept:
            s = {{"a", c.a}, {"r", c.r}, {"t", c.suscept_t}, {"outside", profile_json(c.outside)}};
            break;
        case Experiment::independence:
            s = {{"n", c.picard_n}, {"points", c.points}};
            break;
        case Experiment::trichotomy: {
            json ps = json::array();
            for (const auto& p : c.scan_profiles) {
                ps.push_back(profile_json(p));
            }
            s = {{"t", c.scan_t}, {"L", c.scan_L}, {"profiles", ps}};
            break;
        }
        case Experiment::bounds:
            s = {{"a_const", c.a_const}, {"k_const", c.k_const}, {"l_const", c.l_const}};
            break;
        case Experiment::kernel_audit:
            break;
    }
    j[std::string(to_string(c.experiment))] = s;
    return j;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> v;
    auto need = [&](bool ok, std::string msg) {
        if (!ok) {
            v.push_back(std::move(msg));
        }
    };
    auto profile_ok = [&](const ProfileSpec& p, const std::string& where) {
        try {
            const auto prof = make_profile(p);
            const auto a = audit(prof, 100.0);
            for (const auto& msg : a.violations) {
                v.push_back(where + ": " + msg);
            }
        } catch (const std::exception& e) {
            v.push_back(where + ": " + e.what());
        }
    };
    const bool stochastic = c.experiment != Experiment::bounds && c.experiment != Experiment::kernel_audit;
    need(c.n_reps >= 1, "n_reps: must be >= 1");
    need(c.parallelism >= 0, "parallelism: must be a positive integer or auto");
    if (stochastic) {
        need(c.grid.dx > 0.0, "grid.dx: must be > 0");
        need(c.grid.T > 0.0, "grid.T: must be > 0");
        need(c.grid.halfwidth >= 0.0, "grid.halfwidth: must be >= 0 (0 = auto)");
        if (c.grid.dt) {
            need(*c.grid.dt > 0.0, "grid.dt: must be > 0");
            need(*c.grid.dt <= c.grid.dx * c.grid.dx, "stability: dt ≤ dx²");
        }
        need(c.sigma.lambda > 0.0, "sigma.lambda: must be > 0");
        need(c.sigma.kind == "linear" || c.sigma.kind == "wobble", "sigma.kind: expected linear or wobble");
        if (c.experiment != Experiment::trichotomy) {
            profile_ok(c.profile, "profile");
        }
    }
    switch (c.experiment) {
        case Experiment::simulate:
            need(!c.observe_x.empty(), "simulate.x: need at least one point");
            need(c.snapshot_stride >= 0, "simulate.snapshot_stride: must be >= 0");
            if (c.grid.halfwidth > 0.0) {
                for (double x : c.observe_x) {
                    need(std::abs(x) <= c.grid.halfwidth,
                         "simulate.x: point " + describe_point(x) + " lies outside the grid half-width");
                }
            }
            break;
        case Experiment::tails: {
            need(c.n_reps >= 100, "n_reps: tails need at least 100 replicas");
            need(c.epsilon >= 0.0, "tails.epsilon: must be >= 0");
            auto xs = c.tail_x;
            std::sort(xs.begin(), xs.end());
            xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
            need(xs.size() >= 4 && xs.front() > 0.0, "tails.x: need at least 4 distinct positive points");
            need(c.k_const > 0.0 && c.k_const <= c.l_const, "tails: need 0 < k_const <= l_const");
            break;
        }
        case Experiment::moments:
            need(!c.moment_orders.empty(), "moments.orders: need at least one order");
            for (int k : c.moment_orders) {
                need(k >= 1 && k <= 4, "moments.orders: k must be in 1..4, got " + std::to_string(k));
            }
            break;
        case Experiment::suscept:
            need(c.a > 0.0 && c.r > 0.0, "suscept: need a > 0 and r > 0");
            need(!c.suscept_t.empty(), "suscept.t: need at least one time");
            for (double t : c.suscept_t) {
                need(t > 0.0, "suscept.t: times must be > 0");
            }
            profile_ok(c.outside, "suscept.outside");
            if (c.grid.halfwidth > 0.0) {
                need(c.grid.halfwidth > c.r, "grid.halfwidth: must exceed suscept.r so the coupled window fits");
            }
            break;
        case Experiment::independence: {
            need(c.picard_n >= 1, "independence.n: must be >= 1");
            need(c.points.size() >= 2, "independence.points: need at least two points");
            need(c.n_reps >= 3, "n_reps: correlations need at least 3 replicas");
            const double sep = independence_separation(std::max(c.picard_n, 1), std::max(c.grid.T, 0.0));
            for (std::size_t i = 0; i < c.points.size(); ++i) {
                for (std::size_t j = i + 1; j < c.points.size(); ++j) {
                    const double d = std::abs(c.points[i] - c.points[j]);
                    if (d != 0.0 && d < sep) {
                        v.push_back("independence.points: " + describe_point(c.points[i]) + " and " +
                                    describe_point(c.points[j]) + " are " + describe_point(d) +
                                    " apart; need 2 n^{3/2} sqrt(t) = " + describe_point(sep));
                    }
                }
            }
            break;
        }
        case Experiment::trichotomy:
            need(!c.scan_profiles.empty(), "trichotomy.profiles: need at least one profile");
            for (std::size_t i = 0; i < c.scan_profiles.size(); ++i) {
                profile_ok(c.scan_profiles[i], "trichotomy.profiles[" + std::to_string(i) + "]");
            }
            need(!c.scan_t.empty(), "trichotomy.t: need at least one time");
            for (double t : c.scan_t) {
                need(t > 0.0, "trichotomy.t: times must be > 0");
            }
            need(c.scan_L.size() >= 2, "trichotomy.L: need at least two windows");
            for (double L : c.scan_L) {
                need(L > std::numbers::e, "trichotomy.L: windows [L, 2L] must start beyond e");
            }
            break;
        case Experiment::bounds:
            need(c.a_const > 2.0, "bounds.a_const: must be > 2");
            need(c.k_const > 0.0 && c.k_const <= c.l_const, "bounds: need 0 < k_const <= l_const");
            break;
        case Experiment::kernel_audit:
            break;
    }
    return v;
}

std::uint64_t experiment_seed(const ExperimentConfig& c) { return derive_seed(c.seed, to_string(c.experiment)); }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ExperimentResult execute(const ExperimentConfig& c) {
    switch (c.experiment) {
        case Experiment::simulate:
            return run_simulate(c);
        case Experiment::tails:
            return run_tails(c);
        case Experiment::moments:
            return run_moments(c);
        case Experiment::suscept:
            return run_suscept(c);
        case Experiment::independence:
            return run_independence(c);
        case Experiment::trichotomy:
            return run_trichotomy(c);
        case Experiment::bounds:
            return run_bounds(c);
        case Experiment::kernel_audit:
            return run_kernel_audit(c);
    }
    throw ConfigError("unknown experiment");
}

nlohmann::json result_document(const ExperimentConfig& c, const ExperimentResult& r, const std::string& started_at) {
    json as = json::array();
    for (const auto& a : r.assertions) {
        as.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
    }
    json stats = r.statistics;
    stats["stream_seed"] = experiment_seed(c);
    stats["replicas"] = r.replicas;
    stats["aborted"] = r.aborted;
    return {{"config", config_to_json(c)},
            {"seed", c.seed},
            {"started_at", started_at},
            {"statistics", stats},
            {"assertions", as}};
}

std::string csv_text(const CsvTable& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out += (i ? "," : "") + csv_escape(cells[i]);
        }
        out += "\n";
    };
    line(t.header);
    for (const auto& r : t.rows) {
        line(r);
    }
    return out;
}

RunReport run(const ExperimentConfig& c) {
    RunReport rep;
    const auto violations = validate(c);
    if (!violations.empty()) {
        rep.code = ExitCode::config;
        for (const auto& v : violations) {
            rep.message += "config: " + v + "\n";
        }
        return rep;
    }
    const std::filesystem::path dir(c.output_dir);
    try {
        std::filesystem::create_directories(dir);
        const auto probe = dir / ".she_write_probe";
        write_text(probe, "");
        std::filesystem::remove(probe);
    } catch (const std::exception& e) {
        rep.code = ExitCode::io;
        rep.message = "output_dir '" + c.output_dir + "' is not writable: " + e.what() + "\n";
        return rep;
    }
    const std::string started = utc_now();
    ExperimentResult res;
    try {
        res = execute(c);
    } catch (const ConfigError& e) {
        rep.code = ExitCode::config;
        rep.message = std::string("config: ") + e.what() + "\n";
        return rep;
    } catch (const PreconditionError& e) {
        rep.code = ExitCode::config;
        rep.message = std::string("config: ") + e.what() + "\n";
        return rep;
    } catch (const ReliabilityError& e) {
        rep.code = ExitCode::unreliable;
        rep.message = std::string("unreliable: ") + e.what() + "\n";
        return rep;
    } catch (const CapacityError& e) {
        rep.code = ExitCode::config;
        rep.message = std::string("capacity: ") + e.what() + "\n";
        return rep;
    } catch (const std::exception& e) {
        rep.code = ExitCode::internal;
        rep.message = std::string("error: ") + e.what() + "\n";
        return rep;
    }
    const std::string stem(to_string(c.experiment));
    try {
        if (c.format != OutputFormat::csv) {
            const auto p = dir / (stem + ".json");
            write_text(p, result_document(c, res, started).dump(2) + "\n");
            rep.files.push_back(p);
        }
        if (c.format != OutputFormat::json) {
            const auto p = dir / (stem + ".csv");
            write_text(p, csv_text(res.csv));
            rep.files.push_back(p);
        }
        if (c.experiment == Experiment::simulate && c.snapshot_stride > 0) {
            const Grid g = simulate_grid(c);
            const auto f = solve(make_profile(c.profile), make_sigma(c.sigma), c.grid.T, g,
                                 {experiment_seed(c), 0, g}, {c.grid.clamp_at_zero});
            const auto p = dir / (stem + "_trajectory.csv");
            write_csv(f, p, c.snapshot_stride);
            rep.files.push_back(p);
        }
    } catch (const std::exception& e) {
        rep.code = ExitCode::io;
        rep.message = std::string("io: ") + e.what() + "\n";
        return rep;
    }
    const double frac = res.replicas > 0 ? static_cast<double>(res.aborted) / static_cast<double>(res.replicas) : 0.0;
    if (frac > 0.01) {
        rep.code = ExitCode::abort_quorum;
        rep.message = "abort quorum: " + std::to_string(res.aborted) + " of " + std::to_string(res.replicas) +
                      " replicas aborted\n";
        return rep;
    }
    for (const auto& a : res.assertions) {
        if (!a.pass) {
            rep.code = ExitCode::assertion;
            rep.message += "assertion failed: " + a.name + " (" + a.detail + ")\n";
        }
    }
    return rep;
}

}  // namespace she
