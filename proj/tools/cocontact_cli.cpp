// cocontact: command-line front end.
//
//   cocontact simulate | hj-check | quantity-check | noether | bracket | reconstruct [flags]
//
// Every command prints a JSON report on stdout; with --out PREFIX it also writes
// PREFIX.json and PREFIX.csv. Exit codes: 0 pass, 2 configuration error,
// 3 runtime or numerical failure, 4 verdict fail.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocontact/cocontact.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace cocontact;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_runtime = 3;
constexpr int exit_verdict = 4;

const std::vector<std::string> commands{"simulate", "hj-check", "quantity-check", "noether", "bracket", "reconstruct"};

const std::set<std::string> shared_keys{"system", "H", "dim", "params", "tol", "seed", "jobs", "out"};
const std::set<std::string> integration_keys{"init", "t-end", "dt", "adaptive", "rtol", "atol"};
const std::set<std::string> sampling_keys{"box", "samples"};

std::set<std::string> keys_for(const std::string& command) {
    std::set<std::string> k = shared_keys;
    auto add = [&k](const std::set<std::string>& more) { k.insert(more.begin(), more.end()); };
    if (command == "simulate") add(integration_keys);
    if (command == "hj-check") add({"grid", "solution", "S", "gamma", "lambda"});
    if (command == "quantity-check") {
        add({"f", "g", "kind"});
        add(sampling_keys);
        add(integration_keys);
    }
    if (command == "noether") {
        add({"f"});
        add(sampling_keys);
    }
    if (command == "bracket") {
        add({"f", "g"});
        add(sampling_keys);
    }
    if (command == "reconstruct") {
        add({"solution", "S", "lambda"});
        add(integration_keys);
    }
    return k;
}

/// Merged configuration: file values overridden by flags. Values are either native JSON
/// (from the file) or strings (from flags); the getters accept both.
class Config {
public:
    Config(std::string command, json values) : command_(std::move(command)), v_(std::move(values)) {
        const auto allowed = keys_for(command_);
        for (const auto& [key, val] : v_.items()) {
            if (allowed.count(key) == 0) {
                throw ConfigError("unknown configuration key `" + key + "` for command `" + command_ + "`");
            }
        }
    }

    [[nodiscard]] const std::string& command() const { return command_; }
    [[nodiscard]] bool has(const std::string& k) const { return v_.contains(k) && !v_.at(k).is_null(); }

    [[nodiscard]] std::string str(const std::string& k) const {
        const auto& x = v_.at(k);
        if (!x.is_string()) throw ConfigError("`" + k + "` must be a string");
        return x.get<std::string>();
    }
    [[nodiscard]] std::string str(const std::string& k, const std::string& fallback) const {
        return has(k) ? str(k) : fallback;
    }

    [[nodiscard]] double num(const std::string& k) const {
        const auto& x = v_.at(k);
        if (x.is_number()) return x.get<double>();
        if (x.is_string()) return parse_number(x.get<std::string>(), "--" + k);
        throw ConfigError("`" + k + "` must be a number");
    }
    [[nodiscard]] double num(const std::string& k, double fallback) const { return has(k) ? num(k) : fallback; }

    [[nodiscard]] std::size_t count(const std::string& k, std::size_t fallback) const {
        if (!has(k)) return fallback;
        const double d = num(k);
        if (!(d >= 1.0) || d != std::floor(d) || d > 1e9) throw ConfigError("`" + k + "` must be a positive integer");
        return static_cast<std::size_t>(d);
    }

    [[nodiscard]] std::uint64_t seed() const {
        if (!has("seed")) return default_seed;
        const double d = num("seed");
        if (!(d >= 0.0) || d != std::floor(d) || d > 9.007199254740992e15) {
            throw ConfigError("`seed` must be a non-negative integer");
        }
        return static_cast<std::uint64_t>(d);
    }

    [[nodiscard]] bool flag(const std::string& k) const {
        if (!has(k)) return false;
        const auto& x = v_.at(k);
        if (x.is_boolean()) return x.get<bool>();
        if (x.is_string()) return x.get<std::string>() == "true";
        throw ConfigError("`" + k + "` must be a boolean");
    }

    [[nodiscard]] std::vector<double> list(const std::string& k) const {
        const auto& x = v_.at(k);
        if (x.is_string()) return parse_number_list(x.get<std::string>(), "--" + k);
        if (x.is_number()) return {x.get<double>()};
        if (x.is_array()) {
            std::vector<double> out;
            for (const auto& e : x) {
                if (!e.is_number()) throw ConfigError("`" + k + "` must hold numbers");
                out.push_back(e.get<double>());
            }
            return out;
        }
        throw ConfigError("`" + k + "` must be a list of numbers");
    }

    [[nodiscard]] std::vector<std::string> strings(const std::string& k) const {
        const auto& x = v_.at(k);
        std::vector<std::string> out;
        if (x.is_string()) {
            for (auto part : split(x.get<std::string>(), ',')) out.emplace_back(part);
        } else if (x.is_array()) {
            for (const auto& e : x) {
                if (!e.is_string()) throw ConfigError("`" + k + "` must hold strings");
                out.push_back(e.get<std::string>());
            }
        } else {
            throw ConfigError("`" + k + "` must be a string or a list of strings");
        }
        return out;
    }

    [[nodiscard]] std::map<std::string, std::string> params() const {
        if (!has("params")) return {};
        const auto& x = v_.at("params");
        if (x.is_string()) return parse_assignments(x.get<std::string>());
        if (!x.is_object()) throw ConfigError("`params` must be an object or a k=v list");
        std::map<std::string, std::string> out;
        for (const auto& [key, val] : x.items()) {
            if (val.is_number()) {
                out[key] = format_number(val.get<double>());
            } else if (val.is_string()) {
                out[key] = val.get<std::string>();
            } else {
                throw ConfigError("parameter `" + key + "` must be a number or a string");
            }
        }
        return out;
    }

    [[nodiscard]] IntegratorSettings integrator() const {
        IntegratorSettings s;
        s.step = num("dt", 1e-3);
        if (flag("adaptive")) s.scheme = Scheme::rk45;
        s.rtol = num("rtol", s.rtol);
        s.atol = num("atol", s.atol);
        if (!(s.step > 0.0) || !(s.rtol > 0.0) || !(s.atol > 0.0)) {
            throw ConfigError("step and tolerances must be positive");
        }
        return s;
    }

    [[nodiscard]] std::size_t jobs() const { return count("jobs", default_jobs()); }

private:
    std::string command_;
    json v_;
};

json to_json(const PhasePoint& x) {
    return json{{"t", x.t}, {"q", x.q}, {"p", x.p}, {"z", x.z}};
}

json to_json(const ResidualStats& s) {
    return json{{"max", s.max}, {"mean", s.mean}, {"count", s.count}, {"skipped", s.skipped}};
}

json to_json(const IntegratorSettings& s, const IntegrationStats& st) {
    json j;
    if (s.scheme == Scheme::rk4) {
        j["name"] = "rk4";
        j["step"] = s.step;
    } else {
        j["name"] = "rk45";
        j["rtol"] = s.rtol;
        j["atol"] = s.atol;
        j["min_step"] = s.min_step;
        j["max_step"] = s.max_step;
    }
    j["accepted"] = st.accepted;
    j["rejected"] = st.rejected;
    j["evaluations"] = st.evaluations;
    return j;
}

json to_json(const Grid& g, bool with_z) {
    auto axis = [](const GridAxis& a) { return json{{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}}; };
    json j{{"t", axis(g.t)}, {"q", axis(g.q)}};
    j["z"] = with_z ? axis(g.z) : json(nullptr);
    return j;
}

json to_json(const Box& b) {
    auto iv = [](const Interval& i) { return json::array({i.lo, i.hi}); };
    return json{{"t", iv(b.t)}, {"q", iv(b.q)}, {"p", iv(b.p)}, {"z", iv(b.z)}};
}

json params_json(const Parameters& p) {
    json j = json::object();
    for (const auto& [k, v] : p) j[k] = v;
    return j;
}

/// The Hamiltonian being studied: a built-in system or an expression.
struct Model {
    std::optional<SystemSpec> system;
    ScalarField H;
    std::size_t n = 1;
    Parameters params;
    std::string hamiltonian;

    [[nodiscard]] json describe() const {
        json j;
        j["system"] = system ? json(system->name) : json(nullptr);
        j["hamiltonian"] = hamiltonian;
        j["dimension"] = n;
        j["params"] = params_json(params);
        if (system) {
            json sel = json::object();
            for (const auto& [k, v] : system->selectors) sel[k] = v;
            j["selectors"] = sel;
        }
        return j;
    }

    /// A registered quantity name, or an expression over the phase coordinates.
    [[nodiscard]] std::pair<ScalarField, std::string> field(const std::string& spec) const {
        if (system) {
            for (const auto& q : system->quantities)
                if (q.name == spec) return {q.field, spec};
        }
        if (spec == "H") return {H, "H"};
        const Expr e = parse(spec, n);
        return {to_field(e, params), e.to_string()};
    }
};

std::size_t infer_dimension(const Config& c, const std::vector<std::string>& sources) {
    if (c.has("dim")) return c.count("dim", 1);
    std::size_t n = 1;
    for (const auto& s : sources) n = std::max(n, parse(s, 64).max_index());
    return n;
}

Model load_model(const Config& c, const std::vector<std::string>& expressions, Interval time_range,
                 bool need_hamiltonian = true) {
    Model m;
    const auto raw = c.params();
    if (c.has("system") && c.has("H")) throw ConfigError("give either --system or --H, not both");
    if (c.has("system")) {
        SystemOptions o;
        for (const auto& [k, v] : raw) {
            if (k == "mass" || k == "forcing") {
                o.selectors[k] = v;
            } else {
                o.params[k] = parse_number(v, "--params " + k);
            }
        }
        o.time_range = time_range;
        m.system = build_system(c.str("system"), o);
        if (c.has("dim") && c.count("dim", 1) != m.system->n) throw ConfigError("--dim does not match the system");
        m.n = m.system->n;
        m.H = m.system->H;
        m.params = m.system->params;
        m.hamiltonian = m.system->name;
        return m;
    }
    for (const auto& [k, v] : raw) m.params[k] = parse_number(v, "--params " + k);
    std::vector<std::string> sources = expressions;
    if (c.has("H")) sources.push_back(c.str("H"));
    m.n = infer_dimension(c, sources);
    if (c.has("H")) {
        const Expr e = parse(c.str("H"), m.n);
        m.H = to_field(e, m.params);
        m.hamiltonian = e.to_string();
    } else if (need_hamiltonian) {
        throw ConfigError("one of --system or --H is required");
    } else {
        m.H = ScalarField::constant(m.n, 0.0);
        m.hamiltonian = "0";
    }
    return m;
}

std::vector<std::string> optional_expressions(const Config& c, std::initializer_list<const char*> keys) {
    std::vector<std::string> out;
    for (const char* k : keys) {
        if (!c.has(k)) continue;
        if (std::string(k) == "gamma") {
            for (const auto& s : c.strings(k)) out.push_back(s);
        } else {
            out.push_back(c.str(k));
        }
    }
    return out;
}

struct Output {
    json report;
    std::string csv;
    int code = exit_ok;
};

Output cmd_simulate(const Config& c) {
    const double t_end = c.num("t-end", 1.0);
    Model m = load_model(c, {}, Interval{0.0, std::max(2.0, t_end)});
    PhasePoint x0;
    if (c.has("init")) {
        x0 = PhasePoint::unflatten(c.list("init"));
        detail::require_dimension(m.n, x0.dimension(), "--init");
    } else if (m.system) {
        x0 = m.system->default_init;
    } else {
        x0 = PhasePoint{0.0, std::vector<double>(m.n, 0.0), std::vector<double>(m.n, 0.0), 0.0};
    }
    const IntegratorSettings settings = c.integrator();
    const Trajectory tr = integrate(m.H, x0, t_end, settings);
    const double action = herglotz_action(m.H, tr);
    const double dz = tr.samples.back().z - tr.samples.front().z;

    Output o;
    o.report["command"] = "simulate";
    o.report.update(m.describe());
    o.report["scheme"] = to_json(settings, tr.stats);
    o.report["initial"] = to_json(x0);
    o.report["t_end"] = t_end;
    o.report["endpoint"] = to_json(tr.samples.back());
    o.report["samples"] = tr.size();
    o.report["herglotz_action"] = action;
    o.report["action_defect"] = std::abs(action - dz);
    if (tr.size() >= 5) {
        double worst = 0.0;
        for (const auto& e : energy_law(m.H, tr)) worst = std::max(worst, relative_error(e.slope, e.predicted));
        o.report["energy_law_max_relative"] = worst;
    } else {
        o.report["energy_law_max_relative"] = nullptr;
    }
    std::ostringstream csv;
    write_trajectory_csv(csv, tr);
    o.csv = csv.str();
    return o;
}

Output cmd_hj_check(const Config& c) {
    const double tol = c.num("tol", 1e-6);
    const std::size_t jobs = c.jobs();
    Model m = load_model(c, optional_expressions(c, {"S", "gamma"}), Interval{0.0, 2.0});
    Grid grid;
    if (c.has("grid")) grid = parse_grid(c.str("grid"));
    const bool has_z_axis = c.has("grid") && split(c.str("grid"), ',').size() == 3;

    std::optional<GeneratingFunction> S;
    std::optional<SectionT> sec_t;
    std::optional<SectionTZ> sec_tz;
    std::string solution = "expression";
    std::vector<double> lambda;
    if (c.has("S") || c.has("gamma")) {
        if (c.has("S") && c.has("gamma")) throw ConfigError("give either --S or --gamma, not both");
        if (c.has("solution")) throw ConfigError("--solution cannot be combined with --S or --gamma");
        if (c.has("S")) {
            const Expr e = parse(c.str("S"), m.n);
            S = GeneratingFunction(m.n, to_map(e, Layout::base_t, m.params));
            sec_t = SectionT::from_generating(*S);
            solution = e.to_string();
        } else {
            const auto parts = c.strings("gamma");
            if (parts.size() != m.n) {
                throw ConfigError("--gamma needs " + std::to_string(m.n) + " components, got " +
                                  std::to_string(parts.size()));
            }
            std::vector<SmoothMap> maps;
            solution.clear();
            for (const auto& p : parts) {
                const Expr e = parse(p, m.n);
                maps.push_back(to_map(e, Layout::base_tz, m.params));
                solution += (solution.empty() ? "" : ", ") + e.to_string();
            }
            sec_tz = SectionTZ(m.n, stack(std::move(maps)));
        }
    } else {
        if (!m.system) throw ConfigError("hj-check needs --system with a registered solution, --S, or --gamma");
        const CompleteSolution& sol = m.system->solution(c.str("solution", ""));
        solution = sol.name;
        lambda = c.has("lambda") ? c.list("lambda") : sol.default_lambda;
        sol.check_lambda(lambda);
        if (sol.approach == Approach::action_independent) {
            S = sol.generating(lambda);
            sec_t = sol.section_t(lambda);
        } else {
            sec_tz = sol.section_tz(lambda);
        }
    }
    const bool tz = sec_tz.has_value();
    if (tz && !has_z_axis && c.has("grid")) grid.z = Grid{}.z;

    Output o;
    o.report["command"] = "hj-check";
    o.report.update(m.describe());
    o.report["approach"] = tz ? "action-dependent" : "action-independent";
    o.report["solution"] = solution;
    o.report["lambda"] = lambda;
    o.report["grid"] = to_json(grid, tz);

    const auto nodes = grid_points(grid, m.n, tz);
    struct Row {
        double residual = 0.0;
        double relatedness = 0.0;
        double structure = 0.0;  // Legendrian or coisotropy defect
    };
    const auto rows = parallel_map<Row>(nodes.size(), jobs, [&](std::size_t i) {
        const BasePoint& b = nodes[i];
        Row r;
        if (tz) {
            r.residual = max_abs(hj_dependent_residual(*sec_tz, m.H, b.t, b.q, b.z));
            r.relatedness = max_abs(gamma_relatedness_residual_TZ(*sec_tz, m.H, b.t, b.q, b.z));
            r.structure = max_abs(coisotropy_residual(*sec_tz, b.t, b.q, b.z));
        } else {
            r.residual = std::abs(hj_independent_residual(*S, m.H, b.t, b.q));
            const auto rel = gamma_relatedness_residual_T(*sec_t, m.H, b.t, b.q);
            r.relatedness = std::max(max_abs(rel.momentum), std::abs(rel.action));
            r.structure = max_abs(legendrian_residual(*sec_t, b.t, b.q));
        }
        return r;
    });
    std::vector<double> res, rel, str;
    for (const auto& r : rows) {
        res.push_back(r.residual);
        rel.push_back(r.relatedness);
        str.push_back(r.structure);
    }
    const ResidualStats rs = summarize(res);
    const ResidualStats cs = summarize(str);
    o.report["residual"] = to_json(rs);
    o.report["relatedness"] = to_json(summarize(rel));
    if (tz) {
        o.report["coisotropy"] = to_json(cs);
        o.report["legendrian"] = nullptr;
    } else {
        o.report["coisotropy"] = nullptr;
        o.report["legendrian"] = to_json(cs);
    }
    o.report["tolerance"] = tol;
    const bool pass = rs.max <= tol && (!tz || cs.max <= tol);
    o.report["verdict"] = pass ? "pass" : "fail";
    o.code = pass ? exit_ok : exit_verdict;

    std::ostringstream csv;
    csv << "t";
    for (std::size_t i = 1; i <= m.n; ++i) csv << ",q" << i;
    if (tz) csv << ",z";
    csv << ",residual,relatedness," << (tz ? "coisotropy" : "legendrian") << "\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        csv << format_number(nodes[i].t);
        for (double q : nodes[i].q) csv << ',' << format_number(q);
        if (tz) csv << ',' << format_number(nodes[i].z);
        csv << ',' << format_number(rows[i].residual) << ',' << format_number(rows[i].relatedness) << ','
            << format_number(rows[i].structure) << '\n';
    }
    o.csv = csv.str();
    return o;
}

Box box_of(const Config& c) { return c.has("box") ? parse_box(c.str("box")) : Box{}; }

json sampling_json(const Config& c, const Box& box, std::size_t count) {
    return json{{"box", to_json(box)}, {"count", count}, {"seed", c.seed()}};
}

std::string point_csv_header(std::size_t n) {
    std::string h = "t";
    for (std::size_t i = 1; i <= n; ++i) h += ",q" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) h += ",p" + std::to_string(i);
    return h + ",z";
}

void point_csv_row(std::ostringstream& os, const PhasePoint& x) {
    os << format_number(x.t);
    for (double v : x.q) os << ',' << format_number(v);
    for (double v : x.p) os << ',' << format_number(v);
    os << ',' << format_number(x.z);
}

Output cmd_quantity(const Config& c) {
    if (!c.has("f")) throw ConfigError("quantity-check needs --f (expression or registered quantity name)");
    const double t_end = c.num("t-end", 1.0);
    const std::size_t jobs = c.jobs();
    Model m = load_model(c, optional_expressions(c, {"f", "g"}), Interval{0.0, std::max(2.0, t_end)});
    const auto [f, f_text] = m.field(c.str("f"));
    std::string kind = c.str("kind", "");
    if (kind.empty() && m.system) {
        for (const auto& q : m.system->quantities)
            if (q.name == c.str("f")) kind = to_string(q.kind);
    }
    if (kind.empty()) throw ConfigError("--kind is required for expression quantities");
    if (kind != "conserved" && kind != "dissipated" && kind != "bracket" && kind != "involution") {
        throw ConfigError("--kind must be conserved, dissipated, bracket, or involution");
    }
    const double tol = c.num("tol", kind == "involution" ? 1e-8 : 1e-6);
    const Box box = box_of(c);
    const std::size_t count = c.count("samples", default_sample_count);
    const auto pts = sample_box(box, m.n, count, c.seed());

    std::optional<ScalarField> g;
    std::string g_text;
    if (c.has("g")) std::tie(g, g_text) = m.field(c.str("g"));
    if (kind == "involution" && !g) throw ConfigError("--kind involution needs --g");

    struct Row {
        double value = 0.0;
        bool skipped = false;
        double identity = 0.0;
    };
    const auto rows = parallel_map<Row>(pts.size(), jobs, [&](std::size_t i) {
        const PhasePoint& x = pts[i];
        Row r;
        if (kind == "conserved") {
            r.value = conservation_residual(f, m.H, x);
        } else if (kind == "dissipated" || kind == "bracket") {
            const double d = dissipation_residual(f, m.H, x);
            const double b = bracket_characterization_residual(f, m.H, x);
            r.value = kind == "dissipated" ? d : b;
            r.identity = std::abs(b + d);
        } else {
            const auto v = involution_residual(f, *g, m.H, x);
            if (v) {
                r.value = *v;
                r.identity = std::abs(*v - involution_expansion(f, *g, m.H, x));
            } else {
                r.skipped = true;
            }
        }
        return r;
    });
    std::vector<double> vals, ident;
    std::size_t skipped = 0;
    for (const auto& r : rows) {
        if (r.skipped) {
            ++skipped;
            continue;
        }
        vals.push_back(r.value);
        ident.push_back(r.identity);
    }
    const ResidualStats rs = summarize(vals, skipped);

    Output o;
    o.report["command"] = "quantity-check";
    o.report.update(m.describe());
    o.report["quantity"] = f_text;
    o.report["partner"] = g ? json(g_text) : json(nullptr);
    o.report["kind"] = kind;
    o.report["sampling"] = sampling_json(c, box, count);
    o.report["residual"] = to_json(rs);
    o.report["identity_max"] = kind == "conserved" ? json(nullptr) : json(summarize(ident).max);
    o.report["tolerance"] = tol;
    bool pass = rs.max <= tol && rs.count > 0;

    json drift = nullptr;
    if (c.has("init") || c.has("t-end")) {
        if (kind != "conserved" && kind != "dissipated") {
            throw ConfigError("trajectory drift is available for conserved and dissipated kinds only");
        }
        PhasePoint x0;
        if (c.has("init")) {
            x0 = PhasePoint::unflatten(c.list("init"));
            detail::require_dimension(m.n, x0.dimension(), "--init");
        } else if (m.system) {
            x0 = m.system->default_init;
        } else {
            x0 = PhasePoint{0.0, std::vector<double>(m.n, 0.0), std::vector<double>(m.n, 0.0), 0.0};
        }
        const Trajectory tr = integrate(m.H, x0, t_end, c.integrator());
        const double d = kind == "conserved" ? conserved_drift(f, tr) : dissipated_drift(f, m.H, tr);
        const double dtol = kind == "conserved" ? 1e-6 : 1e-5;
        drift = json{{"initial", to_json(x0)}, {"t_end", t_end}, {"max_relative", d}, {"tolerance", dtol}};
        pass = pass && d <= dtol;
    }
    o.report["drift"] = drift;
    o.report["verdict"] = pass ? "pass" : "fail";
    o.code = pass ? exit_ok : exit_verdict;

    std::ostringstream csv;
    csv << point_csv_header(m.n) << ",residual\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        point_csv_row(csv, pts[i]);
        csv << ',' << (rows[i].skipped ? std::string("nan") : format_number(rows[i].value)) << '\n';
    }
    o.csv = csv.str();
    return o;
}

Output cmd_noether(const Config& c) {
    if (!c.has("f")) throw ConfigError("noether needs --f (expression or registered quantity name)");
    const double tol = c.num("tol", 1e-5);
    const std::size_t jobs = c.jobs();
    Model m = load_model(c, optional_expressions(c, {"f"}), Interval{0.0, 2.0});
    const auto [f, f_text] = m.field(c.str("f"));
    const Box box = box_of(c);
    const std::size_t count = c.count("samples", default_sample_count);
    const auto pts = sample_box(box, m.n, count, c.seed());
    const VectorField Y = noether_symmetry(f, m.H);
    struct Row {
        double eta = 0.0, tau = 0.0, recon = 0.0;
    };
    const auto rows = parallel_map<Row>(pts.size(), jobs, [&](std::size_t i) {
        const auto [e, t] = symmetry_residual(Y, m.H, pts[i]);
        return Row{e, t, std::abs(-eta(pts[i], Y(pts[i])) - f.value(pts[i]))};
    });
    std::vector<double> e, t, r;
    for (const auto& row : rows) {
        e.push_back(row.eta);
        t.push_back(row.tau);
        r.push_back(row.recon);
    }
    const ResidualStats es = summarize(e), ts = summarize(t), rs = summarize(r);
    Output o;
    o.report["command"] = "noether";
    o.report.update(m.describe());
    o.report["quantity"] = f_text;
    o.report["sampling"] = sampling_json(c, box, count);
    o.report["eta_bracket"] = to_json(es);
    o.report["tau"] = to_json(ts);
    o.report["reconstruction"] = to_json(rs);
    o.report["tolerance"] = tol;
    o.report["reconstruction_tolerance"] = 1e-10;
    const bool pass = es.max <= tol && ts.max <= tol && rs.max <= 1e-10;
    o.report["verdict"] = pass ? "pass" : "fail";
    o.code = pass ? exit_ok : exit_verdict;
    std::ostringstream csv;
    csv << point_csv_header(m.n) << ",eta_bracket,tau,reconstruction\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        point_csv_row(csv, pts[i]);
        csv << ',' << format_number(rows[i].eta) << ',' << format_number(rows[i].tau) << ','
            << format_number(rows[i].recon) << '\n';
    }
    o.csv = csv.str();
    return o;
}

/// Expected Darboux bracket of two bare coordinates, as a field and a label.
std::optional<std::pair<ScalarField, std::string>> darboux_expectation(const Expr& f, const Expr& g, std::size_t n) {
    const Node& a = f.root();
    const Node& b = g.root();
    if (a.kind != Node::Kind::variable || b.kind != Node::Kind::variable) return std::nullopt;
    if (a.coordinate == Coordinate::time || b.coordinate == Coordinate::time) {
        return std::make_pair(ScalarField::constant(n, 0.0), std::string("0"));
    }
    auto sign_flip = [](std::pair<ScalarField, std::string> e) {
        std::string label = e.second == "0" ? e.second : e.second[0] == '-' ? e.second.substr(1) : "-" + e.second;
        return std::make_pair(ScalarField::constant(e.first.dimension(), 0.0) - e.first, label);
    };
    const auto rank = [](Coordinate c) { return c == Coordinate::position ? 0 : c == Coordinate::momentum ? 1 : 2; };
    if (rank(a.coordinate) > rank(b.coordinate)) {
        auto e = darboux_expectation(g, f, n);
        return e ? std::optional(sign_flip(*e)) : std::nullopt;
    }
    const std::size_t i = a.index;
    const std::size_t j = b.index;
    if (a.coordinate == b.coordinate) return std::make_pair(ScalarField::constant(n, 0.0), std::string("0"));
    if (a.coordinate == Coordinate::position && b.coordinate == Coordinate::momentum) {
        const double d = i == j ? 1.0 : 0.0;
        return std::make_pair(ScalarField::constant(n, d), format_number(d));
    }
    if (a.coordinate == Coordinate::position) {  // {q^i, z} = -q^i
        return std::make_pair(ScalarField::from_generic(n, [i](auto x) { return -x.q(i); }),
                              "-q" + std::to_string(i + 1));
    }
    // {p_i, z} = -2 p_i
    return std::make_pair(ScalarField::from_generic(n, [i](auto x) { return -2.0 * x.p(i); }),
                          "-2*p" + std::to_string(i + 1));
}

Output cmd_bracket(const Config& c) {
    if (!c.has("f") || !c.has("g")) throw ConfigError("bracket needs --f and --g");
    const std::size_t jobs = c.jobs();
    const double tol = c.num("tol", 1e-9);
    Model m = load_model(c, optional_expressions(c, {"f", "g"}), Interval{0.0, 2.0}, false);
    const auto [f, f_text] = m.field(c.str("f"));
    const auto [g, g_text] = m.field(c.str("g"));
    const Box box = box_of(c);
    const std::size_t count = c.count("samples", default_sample_count);
    const auto pts = sample_box(box, m.n, count, c.seed());
    const auto values =
        parallel_map<double>(pts.size(), jobs, [&](std::size_t i) { return jacobi_bracket(f, g, pts[i]); });

    Output o;
    o.report["command"] = "bracket";
    o.report.update(m.describe());
    o.report["f"] = f_text;
    o.report["g"] = g_text;
    o.report["sampling"] = sampling_json(c, box, count);
    double lo = values.empty() ? 0.0 : values.front(), hi = lo, sum = 0.0;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    o.report["value"] = json{{"min", lo}, {"max", hi}, {"mean", values.empty() ? 0.0 : sum / values.size()}};

    std::optional<std::pair<ScalarField, std::string>> expected;
    bool registered = false;
    if (m.system) {
        for (const auto& q : m.system->quantities) registered = registered || q.name == c.str("f") || q.name == c.str("g");
    }
    if (!registered) expected = darboux_expectation(parse(c.str("f"), m.n), parse(c.str("g"), m.n), m.n);
    if (expected) {
        double worst = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            worst = std::max(worst, std::abs(values[i] - expected->first.value(pts[i])));
        o.report["darboux"] = json{{"expected", expected->second}, {"max_error", worst}, {"tolerance", tol}};
        const bool pass = worst <= tol;
        o.report["verdict"] = pass ? "pass" : "fail";
        o.code = pass ? exit_ok : exit_verdict;
    } else {
        o.report["darboux"] = nullptr;
        o.report["verdict"] = nullptr;
    }
    std::ostringstream csv;
    csv << point_csv_header(m.n) << ",bracket\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        point_csv_row(csv, pts[i]);
        csv << ',' << format_number(values[i]) << '\n';
    }
    o.csv = csv.str();
    return o;
}

Output cmd_reconstruct(const Config& c) {
    const double t_end = c.num("t-end", 1.0);
    const double tol = c.num("tol", 1e-6);
    const std::size_t jobs = c.jobs();
    Model m = load_model(c, optional_expressions(c, {"S"}), Interval{0.0, std::max(2.0, t_end)});
    CompleteSolution sol;
    std::vector<double> lambda;
    if (c.has("S")) {
        if (c.has("solution")) throw ConfigError("--solution cannot be combined with --S");
        const GeneratingFunction S(m.n, to_map(parse(c.str("S"), m.n), Layout::base_t, m.params));
        sol.name = parse(c.str("S"), m.n).to_string();
        sol.n = m.n;
        sol.lambda_dim = 0;
        sol.generating = [S](const std::vector<double>&) { return S; };
        sol.section_t = [S](const std::vector<double>&) { return SectionT::from_generating(S); };
    } else {
        if (!m.system) throw ConfigError("reconstruct needs --system with a registered solution, or --S");
        sol = m.system->solution(c.str("solution", ""));
        if (sol.approach != Approach::action_independent) {
            throw ConfigError("solution `" + sol.name + "` is action-dependent; reconstruct needs an action-independent one");
        }
        lambda = c.has("lambda") ? c.list("lambda") : sol.default_lambda;
    }
    sol.check_lambda(lambda);
    double t0 = 0.0;
    std::vector<double> q0;
    if (c.has("init")) {
        const auto v = c.list("init");
        if (v.size() != m.n + 1) {
            throw ConfigError("--init for reconstruct is t0,q0 (" + std::to_string(m.n + 1) + " values)");
        }
        t0 = v[0];
        q0.assign(v.begin() + 1, v.end());
    } else if (m.system && m.system->orbit_q0) {
        q0 = m.system->orbit_q0(lambda, 1.0);
    } else {
        q0.assign(m.n, 0.0);
    }
    const IntegratorSettings settings = c.integrator();
    const Trajectory lifted = reconstruct_T(sol, m.H, lambda, t0, q0, t_end, settings);
    const SectionT sec = sol.section_t(lambda);
    const Trajectory direct = integrate(m.H, sec.point(t0, q0), t_end, settings);
    double diff = 0.0;
    for (const auto& x : lifted.samples) diff = std::max(diff, max_abs_difference(x, direct.at(x.t)));
    const double hamilton = lifted.size() >= 5 ? hamilton_equation_residual(m.H, lifted) : 0.0;
    const double identity = action_identity_check(sol.generating(lambda), m.H, lifted);

    Output o;
    o.report["command"] = "reconstruct";
    o.report.update(m.describe());
    o.report["solution"] = sol.name;
    o.report["lambda"] = lambda;
    o.report["base_initial"] = json{{"t", t0}, {"q", q0}};
    o.report["t_end"] = t_end;
    o.report["scheme"] = to_json(settings, lifted.stats);
    o.report["endpoint"] = to_json(lifted.samples.back());
    o.report["samples"] = lifted.size();
    o.report["direct_difference"] = diff;
    o.report["hamilton_residual"] = hamilton;
    o.report["action_identity"] = identity;
    json fields = json::array();
    std::size_t independent = 0;
    if (sol.inverse) {
        const auto pts = sample_box(Box{}, m.n, default_sample_count, c.seed());
        for (std::size_t i = 0; i < sol.inverse->outputs(); ++i) {
            const ScalarField fi = extract_conserved(sol, i);
            const QuantityReport rep = conservation_report(fi, m.H, pts, 1e-6, jobs);
            if (rep.pass) ++independent;
            fields.push_back(json{{"label", i < sol.inverse_labels.size() ? sol.inverse_labels[i] : std::to_string(i)},
                                  {"conserved", rep.pass},
                                  {"box_residual", rep.stats.max},
                                  {"drift", conserved_drift(fi, lifted)}});
        }
    }
    o.report["inverse_fields"] = fields;
    o.report["conserved_field_count"] = independent;
    o.report["tolerance"] = tol;
    const bool pass = diff <= tol && identity <= 1e-5;
    o.report["verdict"] = pass ? "pass" : "fail";
    o.code = pass ? exit_ok : exit_verdict;
    std::ostringstream csv;
    write_trajectory_csv(csv, lifted);
    o.csv = csv.str();
    return o;
}

Output dispatch(const Config& c) {
    const std::string& cmd = c.command();
    if (cmd == "simulate") return cmd_simulate(c);
    if (cmd == "hj-check") return cmd_hj_check(c);
    if (cmd == "quantity-check") return cmd_quantity(c);
    if (cmd == "noether") return cmd_noether(c);
    if (cmd == "bracket") return cmd_bracket(c);
    return cmd_reconstruct(c);
}

json load_config_file(const std::string& path, const std::string& command) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file `" + path + "`");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file `" + path + "` is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    if (j.contains("command")) {
        if (!j["command"].is_string() || j["command"].get<std::string>() != command) {
            throw ConfigError("config file is for a different command");
        }
        j.erase("command");
    }
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write `" + path + "`");
    out << content;
    if (!out) throw std::runtime_error("failed writing `" + path + "`");
}

struct FlagSet {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    bool adaptive = false;
    std::string config;
};

void add_flags(CLI::App* sub, FlagSet& fs, const std::string& command) {
    struct Spec {
        const char* key;
        const char* help;
    };
    static const Spec all[] = {
        {"system", "built-in system name"},
        {"H", "Hamiltonian expression over t, q1..qn, p1..pn, z and parameters"},
        {"dim", "number of degrees of freedom n (inferred from expressions when absent)"},
        {"params", "parameter bindings k=v[,k=v...]; mass= and forcing= select built-in laws"},
        {"init", "initial condition t,q...,p...,z (reconstruct: t0,q0...)"},
        {"t-end", "final time"},
        {"dt", "fixed step of rk4"},
        {"rtol", "relative tolerance of the adaptive scheme"},
        {"atol", "absolute tolerance of the adaptive scheme"},
        {"grid", "tmin:tmax:N,qmin:qmax:N[,zmin:zmax:N]"},
        {"box", "sampling box tlo:thi,qlo:qhi,plo:phi,zlo:zhi"},
        {"samples", "number of quasi-random sample points"},
        {"tol", "verdict tolerance"},
        {"seed", "sampling seed"},
        {"jobs", "worker threads"},
        {"out", "output prefix: writes PREFIX.csv and PREFIX.json"},
        {"solution", "registered complete solution name"},
        {"S", "generating function S(t,q) expression"},
        {"gamma", "momentum section components gamma_i(t,q,z), comma separated"},
        {"lambda", "complete-solution parameters, comma separated"},
        {"f", "quantity: expression or registered name"},
        {"g", "second quantity: expression or registered name"},
        {"kind", "conserved | dissipated | bracket | involution"},
    };
    const auto keys = keys_for(command);
    for (const auto& s : all) {
        if (keys.count(s.key) == 0) continue;
        fs.options[s.key] = sub->add_option(std::string("--") + s.key, fs.values[s.key], s.help);
    }
    if (keys.count("adaptive") != 0) sub->add_flag("--adaptive", fs.adaptive, "use the adaptive Dormand-Prince scheme");
    sub->add_option("--config", fs.config, "JSON configuration file; flags override its values");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cocontact Hamiltonian mechanics toolkit"};
    app.require_subcommand(1);
    std::map<std::string, FlagSet> flags;
    std::map<std::string, CLI::App*> subs;
    const std::map<std::string, std::string> descriptions{
        {"simulate", "integrate the Hamilton equations and report the Herglotz action"},
        {"hj-check", "evaluate Hamilton-Jacobi residuals on a grid"},
        {"quantity-check", "classify a quantity as conserved or dissipated"},
        {"noether", "build and check the symmetry associated with a quantity"},
        {"bracket", "evaluate the Jacobi bracket on sample points"},
        {"reconstruct", "integrate on a complete-solution leaf and lift the curve"},
    };
    for (const auto& cmd : commands) {
        subs[cmd] = app.add_subcommand(cmd, descriptions.at(cmd));
        add_flags(subs[cmd], flags[cmd], cmd);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    std::string command;
    for (const auto& cmd : commands)
        if (subs[cmd]->parsed()) command = cmd;
    FlagSet& fs = flags[command];

    Output out;
    std::string prefix;
    try {
        json values = fs.config.empty() ? json::object() : load_config_file(fs.config, command);
        for (const auto& [key, opt] : fs.options)
            if (opt->count() > 0) values[key] = fs.values[key];
        if (fs.adaptive) values["adaptive"] = true;
        const Config cfg(command, values);
        prefix = cfg.str("out", "");
        out = dispatch(cfg);
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const IntegrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const QuadratureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }

    const std::string text = out.report.dump(2) + "\n";
    std::cout << text;
    if (!prefix.empty()) {
        try {
            write_file(prefix + ".json", text);
            write_file(prefix + ".csv", out.csv);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return exit_runtime;
        }
    }
    return out.code;
}
