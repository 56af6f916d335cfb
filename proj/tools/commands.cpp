#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ahelab/einstein.hpp"
#include "ahelab/errors.hpp"
#include "ahelab/green.hpp"
#include "ahelab/hyperbolic.hpp"
#include "ahelab/indicial.hpp"
#include "ahelab/numerics.hpp"
#include "ahelab/spectral.hpp"

namespace ahelab::cli {

using nlohmann::json;

// --- formatting ---------------------------------------------------------------

std::string format_cell(const Cell& c) {
    struct V {
        std::string operator()(double x) const {
            if (std::isnan(x)) return "nan";
            if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
            return fmt17(x);
        }
        std::string operator()(long long x) const { return std::to_string(x); }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(V{}, c);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_escape(t.columns[i]);
    os << "\r\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_escape(format_cell(row[i]));
        os << "\r\n";
    }
}

namespace {

json cell_json(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) {
        if (!std::isfinite(*d)) return format_cell(c);
        return *d;
    }
    if (const long long* i = std::get_if<long long>(&c)) return *i;
    if (const bool* b = std::get_if<bool>(&c)) return *b;
    return std::get<std::string>(c);
}

}  // namespace

void write_json(std::ostream& os, const Table& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
        rows.push_back(std::move(obj));
    }
    os << json{{"columns", t.columns}, {"rows", rows}, {"table", t.name}}.dump(2) << "\n";
}

// --- config parsing -------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(trim(s), &used);
        if (used == trim(s).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError{"'" + key + "' expects a number, got '" + s + "'"};
}

long long to_int(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(trim(s), &used);
        if (used == trim(s).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError{"'" + key + "' expects an integer, got '" + s + "'"};
}

bool to_bool(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError{"'" + key + "' expects true or false, got '" + s + "'"};
}

}  // namespace

Config read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError{"cannot read config file '" + path + "'"};
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    Config cfg;
    if (trim(text).rfind('{', 0) == 0) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError{"bad manifest '" + path + "': " + e.what()};
        }
        if (!j.contains("config") || !j["config"].is_object()) throw ConfigError{"manifest has no config object"};
        for (const auto& [k, v] : j["config"].items()) {
            if (!v.is_string()) throw ConfigError{"manifest value for '" + k + "' is not a string"};
            cfg[k] = v.get<std::string>();
        }
        return cfg;
    }
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError{path + ":" + std::to_string(lineno) + ": expected key = value"};
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError{path + ":" + std::to_string(lineno) + ": empty key"};
        if (cfg.count(key)) throw ConfigError{path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'"};
        cfg[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(to_double(key, item));
            continue;
        }
        std::string hi_s = item.substr(dots + 2);
        double step = 1.0;
        if (auto colon = hi_s.find(':'); colon != std::string::npos) {
            step = to_double(key, hi_s.substr(colon + 1));
            hi_s.resize(colon);
        }
        const double lo = to_double(key, item.substr(0, dots)), hi = to_double(key, hi_s);
        if (!(step > 0.0)) throw ConfigError{"'" + key + "' range step must be positive"};
        const long long count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
        if (count > 1000000) throw ConfigError{"'" + key + "' range is too long"};
        for (long long i = 0; i <= count; ++i) out.push_back(lo + static_cast<double>(i) * step);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& spec) {
    std::vector<int> out;
    for (double v : parse_real_list(key, spec)) {
        if (v != std::round(v)) throw ConfigError{"'" + key + "' expects integers"};
        out.push_back(static_cast<int>(v));
    }
    return out;
}

// --- command registry -------------------------------------------------------------

namespace {

struct OptDef {
    std::string key;
    std::string def;
    std::string help;
};

struct Args {
    const Config& cfg;
    [[nodiscard]] const std::string& str(const std::string& k) const { return cfg.at(k); }
    [[nodiscard]] double num(const std::string& k) const { return to_double(k, str(k)); }
    [[nodiscard]] int integer(const std::string& k) const {
        const long long v = to_int(k, str(k));
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
            throw ConfigError{"'" + k + "' out of range"};
        return static_cast<int>(v);
    }
    [[nodiscard]] bool flag(const std::string& k) const { return to_bool(k, str(k)); }
    [[nodiscard]] bool set(const std::string& k) const { return !trim(str(k)).empty(); }
    [[nodiscard]] std::uint64_t seed() const {
        const long long v = to_int("seed", str("seed"));
        if (v < 0) throw ConfigError{"'seed' must be nonnegative"};
        return static_cast<std::uint64_t>(v);
    }
};

using Handler = std::function<CommandResult(const Args&)>;

struct CommandDef {
    std::string name;  // "einstein solve" for nested commands
    std::string help;
    std::vector<OptDef> opts;
    Handler run;
};

Check make_check(std::string name, double value, double target, double tol, bool passed) {
    return {std::move(name), value, target, tol, passed};
}

Cell opt_cell(const std::optional<double>& v) {
    if (v) return *v;
    return std::string("not-fredholm");
}

// --- indicial -------------------------------------------------------------------

CommandResult cmd_indicial(const Args& a) {
    const Family fam = parse_family(a.str("family"));
    const auto ns = parse_int_list("n", a.str("n"));
    const auto cs = parse_real_list("c", a.str("c"));
    const auto qs = parse_int_list("q", a.str("q"));
    const auto rs = parse_int_list("r", a.str("r"));
    const double p = a.num("p");
    const bool takes_c = fam == Family::ScalarLaplacian || fam == Family::CovariantLaplacianTraceFree ||
                         fam == Family::Lichnerowicz;
    if (!takes_c)
        for (double c : cs)
            if (c != 0.0) throw ConfigError{"family '" + a.str("family") + "' takes no shift c"};

    Table t{"indicial",
            {"family", "n", "c", "q", "r", "weight", "R", "s_minus", "s_plus", "sobolev_p", "sobolev_lo",
             "sobolev_hi", "holder_lo", "holder_hi", "status"},
            {}};
    double worst = 0.0;
    bool all_ok = true;
    auto row = [&](const OperatorSpec& spec) {
        const auto rr = indicial_radius(spec);
        const auto rep = indicial_report(spec);
        const auto sob = fredholm_window(spec, WindowKind::Sobolev, p);
        const auto hol = fredholm_window(spec, WindowKind::Holder);
        const std::string blank;
        std::vector<Cell> r{family_name(fam), static_cast<long long>(spec.n)};
        r.push_back(takes_c ? Cell{spec.c_shift} : Cell{blank});
        r.push_back(fam == Family::HodgeLaplacian ? Cell{static_cast<long long>(spec.q_degree)} : Cell{blank});
        r.push_back(fam == Family::CovariantLaplacianTraceFree ? Cell{static_cast<long long>(spec.r_tensor)}
                                                                : Cell{blank});
        r.push_back(static_cast<long long>(bundle_weight(spec)));
        r.push_back(opt_cell(rr.radius));
        r.push_back(rep ? Cell{rep->exponent_minus} : Cell{std::string("not-fredholm")});
        r.push_back(rep ? Cell{rep->exponent_plus} : Cell{std::string("not-fredholm")});
        r.push_back(p);
        r.push_back(sob ? Cell{sob->lower} : Cell{std::string("not-fredholm")});
        r.push_back(sob ? Cell{sob->upper} : Cell{std::string("not-fredholm")});
        r.push_back(hol ? Cell{hol->lower} : Cell{std::string("not-fredholm")});
        r.push_back(hol ? Cell{hol->upper} : Cell{std::string("not-fredholm")});
        std::string status = "ok";
        if (!rr.radius)
            status = "not-fredholm";
        else if (rr.flag_middle_degree)
            status = "not-fredholm-despite-radius";
        r.push_back(status);
        t.rows.push_back(std::move(r));
        if (a.set("check-radius")) {
            if (!rr.radius)
                all_ok = false, worst = INFINITY;
            else
                worst = std::max(worst, std::abs(*rr.radius - a.num("check-radius")));
        }
    };
    for (int n : ns) {
        switch (fam) {
            case Family::ScalarLaplacian:
                for (double c : cs) row(OperatorSpec::scalar(n, c));
                break;
            case Family::Lichnerowicz:
                for (double c : cs) row(OperatorSpec::lichnerowicz(n, c));
                break;
            case Family::CovariantLaplacianTraceFree:
                for (int r : rs)
                    for (double c : cs) row(OperatorSpec::covariant(n, r, c));
                break;
            case Family::HodgeLaplacian:
                for (int q : qs) row(OperatorSpec::hodge(n, q));
                break;
            case Family::VectorLaplacian:
                row(OperatorSpec::vector(n));
                break;
        }
    }
    CommandResult res;
    res.tables.push_back(std::move(t));
    if (a.set("check-radius")) {
        const double tol = a.num("tol");
        res.checks.push_back(make_check("radius", worst, a.num("check-radius"), tol, all_ok && worst <= tol));
    }
    return res;
}

// --- green ----------------------------------------------------------------------

CommandResult cmd_green(const Args& a) {
    const int n = a.integer("n");
    const double c = a.num("c");
    const double dmin = a.num("d-min"), dmax = a.num("d-max");
    const int pts = a.integer("points");
    if (pts < 2 || !(dmax > dmin)) throw ConfigError{"need points >= 2 and d-max > d-min"};
    const RadialOperator op = radial_reduce(OperatorSpec::scalar(n, c));
    std::vector<double> grid(pts);
    for (int i = 0; i < pts; ++i) grid[i] = dmin + (dmax - dmin) * i / (pts - 1);
    GreenOptions go;
    go.rtol = a.num("rtol");
    go.series_order = a.integer("series-order");
    const GreenProfile prof = green_profile(op, grid, go);
    const double lo = a.num("window-lo"), hi = a.num("window-hi");
    const double slope = decay_slope(prof, lo, hi);
    const double expected = n / 2.0 + prof.radius_R;

    CommandResult res;
    res.tables.push_back({"slope",
                          {"n", "c", "R", "expected", "slope", "d_lo", "d_hi", "normalization"},
                          {{static_cast<long long>(n), c, prof.radius_R, expected, slope, lo, hi, prof.normalization}}});
    Table profile{"profile", {"d", "K"}, {}};
    for (std::size_t i = 0; i < prof.d.size(); ++i) profile.rows.push_back({prof.d[i], prof.K[i]});
    res.tables.push_back(std::move(profile));
    if (a.set("check-slope")) {
        const double target = a.num("check-slope"), tol = a.num("tol");
        res.checks.push_back(make_check("slope", slope, target, tol, std::abs(slope - target) <= tol));
    }
    return res;
}

// --- bounds ---------------------------------------------------------------------

Table bound_table(const BoundCheckReport& r, const std::string& grid_name) {
    Table t{"ratios", {grid_name, "ratio"}, {}};
    for (std::size_t i = 0; i < r.grid.size(); ++i) t.rows.push_back({r.grid[i], r.ratios[i]});
    return t;
}

CommandResult cmd_bounds(const Args& a) {
    const std::string kind = a.str("kind");
    const int order = a.integer("order");
    BoundCheckReport rep, rep2;
    std::string grid_name;
    if (kind == "hypergeometric") {
        const int m = a.integer("u-points");
        if (m < 2) throw ConfigError{"u-points must be >= 2"};
        std::vector<double> u(m);
        for (int i = 0; i < m; ++i) u[i] = i == 0 ? 0.0 : 1.0 - std::pow(10.0, -6.0 * i / (m - 1));
        rep = hypergeometric_bound(a.num("p"), a.num("q"), a.num("r"), u, order);
        rep2 = hypergeometric_bound(a.num("p"), a.num("q"), a.num("r"), u, 2 * order);
        grid_name = "u";
    } else if (kind == "distance") {
        const double b = a.set("b") ? a.num("b") : 1.0;
        rep = distance_integral_bound(a.num("a"), b, a.integer("n"), a.integer("samples"), a.seed(), order);
        rep2 = distance_integral_bound(a.num("a"), b, a.integer("n"), a.integer("samples"), a.seed(), 2 * order);
        grid_name = "r";
    } else if (kind == "kernel") {
        const int n = a.integer("n");
        const RadialOperator op = radial_reduce(OperatorSpec::scalar(n, a.num("c")));
        std::vector<double> grid;
        for (int i = 0; i <= 800; ++i) grid.push_back(0.1 + 0.05 * i);
        const GreenProfile prof = green_profile(op, grid);
        const double b = a.set("b") ? a.num("b") : n / 2.0;
        rep = kernel_weight_bound(prof, b, n, {}, order);
        rep2 = kernel_weight_bound(prof, b, n, {}, 2 * order);
        grid_name = "r";
    } else {
        throw ConfigError{"kind must be hypergeometric, distance or kernel"};
    }
    const double change = std::abs(rep2.sup_ratio - rep.sup_ratio) / std::abs(rep.sup_ratio);
    CommandResult res;
    res.tables.push_back({"summary",
                          {"kind", "sup_ratio", "witness", "monotone_tail", "tail_change", "sup_ratio_doubled",
                           "doubling_change"},
                          {{kind, rep.sup_ratio, rep.witness, rep.monotone_tail, rep.tail_change, rep2.sup_ratio,
                            change}}});
    res.tables.push_back(bound_table(rep, grid_name));
    if (a.set("check-stable")) {
        const double tol = a.num("check-stable");
        res.checks.push_back(make_check("doubling_change", change, 0.0, tol,
                                        std::isfinite(rep.sup_ratio) && change < tol));
    }
    if (a.flag("check-tail") && kind == "hypergeometric")
        res.checks.push_back(make_check("monotone_tail", rep.tail_change, 0.0, 0.05, rep.monotone_tail));
    return res;
}

// --- spectrum -------------------------------------------------------------------

CommandResult cmd_spectrum(const Args& a) {
    const int n = a.integer("n");
    const double c = a.num("c"), D = a.num("D");
    const int N = a.integer("N");
    const std::string kind = a.str("kind");
    OperatorSpec spec;
    double expected = 0.0;
    if (kind == "scalar") {
        spec = OperatorSpec::scalar(n, c);
        expected = n * n / 4.0 + c;
    } else if (kind == "hodge") {
        if (c != 0.0) throw ConfigError{"hodge spectrum takes no shift"};
        spec = OperatorSpec::hodge(n, 1);
        expected = (n - 2.0) * (n - 2.0) / 4.0;
    } else if (kind == "covariant") {
        spec = OperatorSpec::covariant(n, 1, c);
        expected = n * n / 4.0 + 1.0 + c;
    } else {
        throw ConfigError{"kind must be scalar, hodge or covariant"};
    }
    CommandResult res;
    const DiscreteOperator op = discretize_radial(spec, D, N);
    const double bottom = spectrum_bottom(op);
    res.tables.push_back({"spectrum",
                          {"kind", "n", "c", "D", "N", "bottom", "expected", "symmetry_defect"},
                          {{kind, static_cast<long long>(n), c, D, static_cast<long long>(N), bottom, expected,
                            op.symmetry_defect()}}});
    if (a.set("check-bottom")) {
        const double target = a.num("check-bottom"), rtol = a.num("rtol");
        const double rel = std::abs(bottom - target) / std::abs(target);
        res.checks.push_back(make_check("bottom", bottom, target, rtol, rel <= rtol));
    }

    const std::string est = a.str("estimate");
    if (est == "none") return res;
    const RadialGrid grid = RadialGrid::make(n, D, N);
    const int samples = a.integer("samples");
    const double collar = a.num("collar");
    EstimateReport rep;
    if (est == "cheng-yau") {
        const double s = a.set("s-weight") ? a.num("s-weight") : n / 2.0;
        rep = cheng_yau_check(s, grid, CollarOptions{collar, samples, a.seed()});
    } else if (est == "weighted") {
        const double lam = a.set("lambda") ? a.num("lambda") : n * n / 4.0;
        rep = weighted_estimate_check(a.num("delta"), lam, OperatorSpec::scalar(n, c), samples, a.seed(), D, collar);
    } else if (est == "bochner") {
        const double e = a.set("phi-exp") ? a.num("phi-exp") : n / 2.0;
        rep = bochner_identity_check(a.integer("q"), e, grid, samples, a.seed());
    } else if (est == "asymptotic") {
        rep = asymptotic_form_estimate(a.integer("q"), n, grid, collar);
    } else if (est == "weitzenbock") {
        rep = weitzenbock_radial_check(n, grid);
    } else {
        throw ConfigError{"estimate must be none, cheng-yau, weighted, bochner, asymptotic or weitzenbock"};
    }
    res.tables.push_back({"estimate",
                          {"estimate", "lambda_observed", "lambda_claimed", "constant_C", "epsilon", "holds",
                           "total", "samples"},
                          {{est, rep.lambda_observed, rep.lambda_claimed, rep.constant_C, rep.epsilon,
                            static_cast<long long>(rep.holds), static_cast<long long>(rep.total), rep.samples}}});
    if (a.set("check-estimate")) {
        const double tol = a.num("check-estimate");
        double value = 0.0;
        bool ok = rep.holds == rep.total;
        if (est == "cheng-yau" || est == "asymptotic") {
            value = rep.lambda_claimed - rep.lambda_observed;
            ok = ok && value <= tol;
        } else if (est == "weighted") {
            value = rep.constant_C;
            ok = ok && std::isfinite(value);
        } else {
            value = rep.epsilon;
            ok = ok && value <= tol;
        }
        res.checks.push_back(make_check(est, value, 0.0, tol, ok));
    }
    return res;
}

// --- norms ----------------------------------------------------------------------

CommandResult cmd_norms(const Args& a) {
    const std::string mode = a.str("mode");
    CommandResult res;
    if (mode == "membership") {
        const auto ss = parse_real_list("s", a.str("s"));
        const auto ds = parse_real_list("delta", a.str("delta"));
        const auto ps = parse_real_list("p", a.str("p"));
        const int r = a.integer("r"), n = a.integer("n");
        const double band = a.num("band");
        Table t{"membership",
                {"s", "delta", "p", "r", "n", "analytic", "numeric", "agree", "borderline", "gap"},
                {}};
        long long checked = 0, agree = 0;
        auto name = [](Membership m) { return std::string(m == Membership::Converges ? "converges" : "diverges"); };
        for (double s : ss)
            for (double d : ds)
                for (double p : ps) {
                    const auto m = lp_membership(s, d, p, r, n);
                    const bool same = m.analytic == m.numeric;
                    t.rows.push_back({s, d, p, static_cast<long long>(r), static_cast<long long>(n), name(m.analytic),
                                      name(m.numeric), same, m.borderline, m.gap});
                    if (std::abs(m.gap) >= band) {
                        ++checked;
                        agree += same ? 1 : 0;
                    }
                }
        res.tables.push_back(std::move(t));
        if (a.flag("check-agree")) {
            const double frac = checked ? static_cast<double>(agree) / checked : 1.0;
            res.checks.push_back(make_check("agreement", frac, 1.0, 0.0, agree == checked));
        }
        return res;
    }
    if (mode == "weighted") {
        CoverRegion region;
        region.n = a.integer("n");
        region.rho_min = a.num("rho-min");
        region.rho_max = a.num("rho-max");
        const WhitneyCover cover = whitney_cover(region, a.num("r0"), a.seed());
        const double delta = a.num("delta"), e = a.num("field-exponent");
        NormOptions opt;
        opt.h = a.num("lattice-h");
        const BackgroundField f = [e](const Vec&, double rho) { return std::pow(rho, e); };
        const double v = weighted_norm_sup(f, delta, cover, a.integer("k"), a.num("alpha"), opt);
        res.tables.push_back({"weighted_norm",
                              {"n", "delta", "field_exponent", "rho_min", "rho_max", "charts", "norm"},
                              {{static_cast<long long>(region.n), delta, e, region.rho_min, region.rho_max,
                                static_cast<long long>(cover.centers.size()), v}}});
        return res;
    }
    throw ConfigError{"mode must be membership or weighted"};
}

// --- einstein -------------------------------------------------------------------

BoundaryMetricSpec einstein_spec(const Args& a) {
    BoundaryMetricSpec spec = BoundaryMetricSpec::parse(a.str("boundary"), a.integer("n"), a.integer("l"));
    spec.enforce_paper_bound = a.flag("enforce-bound");
    spec.rho_max = a.num("rho-max");
    spec.validate();
    return spec;
}

Table expansion_tables(const ExpansionState& st, CommandResult& res) {
    Table trace{"trace", {"k", "residual_norm", "slope"}, {}};
    for (std::size_t j = 0; j < st.slopes.size(); ++j)
        trace.rows.push_back({static_cast<long long>(j), st.residual_norms[j], st.slopes[j]});
    Table corr{"corrections", {"k", "psi_t", "psi_1", "psi_3"}, {}};
    for (std::size_t j = 0; j < st.corrections.size(); ++j)
        corr.rows.push_back({static_cast<long long>(j + 1), st.corrections[j][0], st.corrections[j][1],
                             st.corrections[j][2]});
    res.tables.push_back(std::move(corr));
    return trace;
}

CommandResult cmd_einstein_expand(const Args& a) {
    const BoundaryMetricSpec spec = einstein_spec(a);
    const ExpansionState st = asymptotic_expand(spec, spec.l, a.integer("M"));
    CommandResult res;
    Table trace = expansion_tables(st, res);
    res.tables.insert(res.tables.begin(), std::move(trace));
    if (a.set("check-slope")) {
        const double margin = a.num("check-slope");
        double worst = INFINITY;
        for (std::size_t j = 1; j < st.slopes.size(); ++j)
            worst = std::min(worst, st.slopes[j] - static_cast<double>(j));
        res.checks.push_back(make_check("slope_margin", worst, -margin, margin, worst >= -margin));
    }
    return res;
}

double fd_defect_sup(const CohomOneMetric& g) {
    double sup = 0.0;
    for (int i = 2; i <= 9; ++i) sup = std::max(sup, fd_einstein_defect(g, 0.1 * i, 1.0));
    return sup;
}

CommandResult cmd_einstein_solve(const Args& a) {
    const BoundaryMetricSpec spec = einstein_spec(a);
    ExpansionState init = asymptotic_expand(spec, spec.l, a.integer("M"));
    if (a.num("noise") != 0.0) add_coefficient_noise(init.metric, a.num("noise"), a.seed(), a.integer("noise-terms"));
    NewtonConfig cfg;
    cfg.max_iters = a.integer("max-iters");
    cfg.tol_residual = a.num("tol");
    cfg.damping = a.num("damping");
    const std::string jac = a.str("jacobian");
    if (jac != "analytic" && jac != "fd") throw ConfigError{"jacobian must be analytic or fd"};
    cfg.analytic_jacobian = jac == "analytic";
    cfg.fd_step = a.num("fd-step");
    cfg.raise = false;
    const NewtonResult nr = newton_solve(spec, init, cfg);

    CommandResult res;
    const bool fd_ok = spec.n == 3 && nr.metric.positive();
    const double fd = fd_ok ? fd_defect_sup(nr.metric) : NAN;
    res.tables.push_back({"summary",
                          {"boundary", "converged", "iterations", "sup_Q", "einstein_sup", "ricci_max",
                           "weighted_correction", "fd_einstein_defect"},
                          {{spec.describe(), nr.converged, static_cast<long long>(nr.iterations), nr.residual.sup_norm,
                            nr.residual.einstein_sup, nr.residual.ricci_max, nr.weighted_correction, fd}}});
    Table it{"iterations", {"iteration", "sup_Q"}, {}};
    for (std::size_t i = 0; i < nr.history.size(); ++i) it.rows.push_back({static_cast<long long>(i), nr.history[i]});
    res.tables.push_back(std::move(it));
    Table coeffs{"coefficients", {"r", "rho", "a", "b", "c"}, {}};
    const auto jets = nr.metric.node_jets();
    for (int j = 0; j < nr.metric.size(); ++j)
        coeffs.rows.push_back({nr.metric.grid->r[j], nr.metric.grid->rho[j], jets[j][0].v, jets[j][1].v, jets[j][2].v});
    res.tables.push_back(std::move(coeffs));

    if (cfg.max_iters > 0) {
        if (!nr.converged)
            res.numeric_failure = "NoConvergence: residual " + fmt17(nr.history.back()) + " after " +
                                  std::to_string(nr.iterations) + " iterations";
        else if (nr.residual.einstein_sup >= 10.0 * cfg.tol_residual || !(nr.residual.ricci_max < 0.0))
            res.numeric_failure = "GaugeObstruction: Q vanishes but Ric + n g = " + fmt17(nr.residual.einstein_sup);
    }
    if (a.set("check-einstein")) {
        const double tol = a.num("check-einstein");
        const double v = spec.n == 3 ? fd : nr.residual.einstein_sup;
        res.checks.push_back(make_check("einstein_defect", v, 0.0, tol, nr.converged && v < tol));
    }
    if (a.set("check-correction")) {
        const double tol = a.num("check-correction");
        res.checks.push_back(
            make_check("weighted_correction", nr.weighted_correction, 0.0, tol, nr.weighted_correction < tol));
    }
    return res;
}

std::vector<OptDef> common_opts() {
    return {{"output-dir", "ahelab_out", "directory for tables and manifest.json (empty: no files)"},
            {"seed", "1", "random seed"},
            {"format", "csv", "csv or json"}};
}

std::vector<CommandDef> registry() {
    const std::vector<OptDef> einstein_base = {
        {"boundary", "round:1", "round:<scale> or berger:<squash>"},
        {"n", "3", "boundary dimension"},
        {"l", "2", "regularity order"},
        {"enforce-bound", "true", "require 2 <= l <= n-1"},
        {"M", "256", "collocation nodes"},
        {"rho-max", "1.9", "extension cutoff parameter"}};
    std::vector<OptDef> solve_opts = einstein_base;
    for (OptDef d : std::vector<OptDef>{{"max-iters", "20", "Newton iteration cap"},
                                        {"tol", "1e-8", "collocation residual target"},
                                        {"damping", "1", "initial step length"},
                                        {"jacobian", "analytic", "analytic or fd"},
                                        {"fd-step", "1e-7", "finite-difference Jacobian step"},
                                        {"noise", "0", "coefficient noise amplitude on the initial guess"},
                                        {"noise-terms", "4", "Chebyshev terms in the noise"},
                                        {"check-einstein", "", "fail unless sup |Ric + n g| is below this"},
                                        {"check-correction", "", "fail unless the weighted correction is below this"}})
        solve_opts.push_back(d);
    std::vector<OptDef> expand_opts = einstein_base;
    expand_opts.push_back({"check-slope", "", "fail unless slope_k >= k - margin for every k"});

    return {
        {"indicial",
         "indicial radii, exponents and weight windows",
         {{"family", "scalar", "scalar, covariant, lichnerowicz, hodge or vector"},
          {"n", "3", "boundary dimension(s)"},
          {"c", "0", "shift(s)"},
          {"q", "0", "form degree(s), hodge"},
          {"r", "0", "tensor rank(s), covariant"},
          {"p", "2", "Sobolev exponent"},
          {"check-radius", "", "fail unless every row has this radius"},
          {"tol", "1e-12", "tolerance for --check-radius"}},
         cmd_indicial},
        {"green",
         "Green kernel profile and decay slope",
         {{"n", "3", "boundary dimension"},
          {"c", "0", "shift"},
          {"d-min", "0.1", "first grid distance"},
          {"d-max", "20", "last grid distance"},
          {"points", "600", "grid points"},
          {"window-lo", "5", "slope window start"},
          {"window-hi", "15", "slope window end"},
          {"rtol", "1e-10", "integrator tolerance"},
          {"series-order", "24", "Frobenius order for the initial data"},
          {"check-slope", "", "expected slope"},
          {"tol", "0.06", "tolerance for --check-slope"}},
         cmd_green},
        {"bounds",
         "integral bound reports",
         {{"kind", "hypergeometric", "hypergeometric, distance or kernel"},
          {"p", "0.5", "hypergeometric p"},
          {"q", "0.5", "hypergeometric q"},
          {"r", "2", "hypergeometric r"},
          {"u-points", "49", "u grid size"},
          {"a", "2.5", "distance exponent a"},
          {"b", "", "weight exponent b (distance default 1, kernel default n/2)"},
          {"n", "2", "boundary dimension"},
          {"c", "0", "kernel shift"},
          {"samples", "16", "random radii"},
          {"order", "12", "Gauss order per cell"},
          {"check-stable", "", "fail unless sup ratio changes less than this under order doubling"},
          {"check-tail", "false", "fail unless the hypergeometric tail is stable"}},
         cmd_bounds},
        {"spectrum",
         "spectrum bottom and collar estimates",
         {{"n", "3", "boundary dimension"},
          {"c", "0", "shift"},
          {"D", "40", "truncation distance"},
          {"N", "2048", "cells"},
          {"kind", "scalar", "scalar, hodge or covariant"},
          {"estimate", "none", "none, cheng-yau, weighted, bochner, asymptotic or weitzenbock"},
          {"s-weight", "", "Cheng-Yau exponent (default n/2)"},
          {"delta", "1", "weighted estimate weight"},
          {"lambda", "", "unweighted constant (default n^2/4)"},
          {"q", "0", "form degree"},
          {"phi-exp", "", "Bochner weight exponent (default n/2)"},
          {"samples", "100", "test functions"},
          {"collar", "0.1", "collar rho"},
          {"check-bottom", "", "expected bottom"},
          {"rtol", "0.01", "relative tolerance for --check-bottom"},
          {"check-estimate", "", "slack or defect tolerance for the estimate"}},
         cmd_spectrum},
        {"norms",
         "membership and weighted norms",
         {{"mode", "membership", "membership or weighted"},
          {"s", "0..3:0.5", "exponents s"},
          {"delta", "-1..1:0.5", "weights"},
          {"p", "1.5,2,4", "Lebesgue exponents"},
          {"r", "0", "bundle weight"},
          {"n", "2", "boundary dimension"},
          {"band", "1e-3", "borderline band excluded from --check-agree"},
          {"check-agree", "false", "fail unless analytic and numeric verdicts agree off the band"},
          {"rho-min", "0.05", "cover region inner rho"},
          {"rho-max", "0.5", "cover region outer rho"},
          {"r0", "0.5", "cover radius"},
          {"field-exponent", "0", "field rho^e"},
          {"k", "0", "derivative order"},
          {"alpha", "0.5", "Holder exponent"},
          {"lattice-h", "0.0625", "chart lattice spacing"}},
         cmd_norms},
        {"einstein expand", "boundary asymptotic expansion", expand_opts, cmd_einstein_expand},
        {"einstein solve", "Newton collocation solve", solve_opts, cmd_einstein_solve},
    };
}

void write_outputs(const std::string& dir, const std::string& fmt, const CommandResult& res,
                   std::vector<std::string>& files) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    for (const auto& t : res.tables) {
        const std::string fname = t.name + "." + fmt;
        std::ofstream os(std::filesystem::path(dir) / fname, std::ios::binary);
        if (fmt == "csv")
            write_csv(os, t);
        else
            write_json(os, t);
        files.push_back(fname);
    }
}

void write_manifest(const std::string& dir, const std::string& command, const Config& cfg,
                    const std::vector<std::string>& files, const CommandResult* res, int status,
                    const std::string& message) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    json checks = json::array();
    if (res)
        for (const auto& c : res->checks) {
            json jc;
            jc["name"] = c.name;
            jc["value"] = format_cell(c.value);
            jc["target"] = format_cell(c.target);
            jc["tol"] = format_cell(c.tol);
            jc["passed"] = c.passed;
            checks.push_back(jc);
        }
    json m;
    m["schema_version"] = kSchemaVersion;
    m["command"] = command;
    m["config"] = cfg;
    m["outputs"] = files;
    m["checks"] = checks;
    m["exit_code"] = status;
    m["message"] = message;
    std::ofstream os(std::filesystem::path(dir) / "manifest.json", std::ios::binary);
    os << m.dump(2) << "\n";
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"ahelab: asymptotically hyperbolic numerics laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("ahelab ") + kSchemaVersion);

    auto defs = registry();
    struct Bound {
        CLI::App* sub = nullptr;
        std::map<std::string, std::string> values;
        std::map<std::string, CLI::Option*> opts;
        std::string config_path;
        bool quiet = false;
    };
    std::vector<std::unique_ptr<Bound>> bound;
    CLI::App* einstein = app.add_subcommand("einstein", "Einstein expansion and solve");
    einstein->require_subcommand(1);
    for (auto& d : defs) {
        auto b = std::make_unique<Bound>();
        const bool nested = d.name.rfind("einstein ", 0) == 0;
        CLI::App* parent = nested ? einstein : &app;
        b->sub = parent->add_subcommand(nested ? d.name.substr(9) : d.name, d.help);
        auto all = d.opts;
        for (const auto& c : common_opts()) all.push_back(c);
        for (const auto& o : all) {
            b->values[o.key] = o.def;
            std::string help = o.help;
            if (!o.def.empty()) help += " [" + o.def + "]";
            b->opts[o.key] = b->sub->add_option("--" + o.key, b->values[o.key], help);
        }
        b->sub->add_option("--config", b->config_path, "flat key = value file or a previous manifest.json");
        b->sub->add_flag("--quiet", b->quiet, "do not print the primary table");
        bound.push_back(std::move(b));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    std::size_t idx = 0;
    while (idx < defs.size() && !bound[idx]->sub->parsed()) ++idx;
    if (idx == defs.size()) {
        err << "no command given\n";
        return kExitConfig;
    }
    const CommandDef& def = defs[idx];
    Bound& b = *bound[idx];

    Config cfg;
    std::string outdir;
    try {
        for (const auto& [k, v] : b.values) cfg[k] = b.opts[k]->count() ? v : std::string();
        // defaults, then file, then command line
        Config resolved;
        for (auto& o : def.opts) resolved[o.key] = o.def;
        for (auto& o : common_opts()) resolved[o.key] = o.def;
        if (!b.config_path.empty()) {
            for (const auto& [k, v] : read_config_file(b.config_path)) {
                if (!resolved.count(k)) throw ConfigError{"unknown config key '" + k + "' for " + def.name};
                resolved[k] = v;
            }
        }
        for (const auto& [k, opt] : b.opts)
            if (opt->count()) resolved[k] = b.values[k];
        cfg = resolved;
        outdir = cfg.at("output-dir");
        if (cfg.at("format") != "csv" && cfg.at("format") != "json") throw ConfigError{"format must be csv or json"};
    } catch (const ConfigError& e) {
        err << "config error: " << e.message << "\n";
        return kExitConfig;
    }

    CommandResult res;
    int status = kExitOk;
    std::string message;
    try {
        res = def.run(Args{cfg});
    } catch (const ConfigError& e) {
        status = kExitConfig;
        message = "config error: " + e.message;
    } catch (const Error& e) {
        status = errc_is_numeric(e.code()) ? kExitNumeric : kExitConfig;
        message = e.what();
    } catch (const std::exception& e) {
        status = kExitNumeric;
        message = e.what();
    }
    std::vector<std::string> files;
    if (status == kExitOk) {
        const std::string fmt = cfg.at("format");
        if (!b.quiet && !res.tables.empty()) {
            if (fmt == "csv")
                write_csv(out, res.tables.front());
            else
                write_json(out, res.tables.front());
        }
        try {
            write_outputs(outdir, fmt, res, files);
        } catch (const std::exception& e) {
            err << "cannot write outputs: " << e.what() << "\n";
            return kExitConfig;
        }
        for (const auto& c : res.checks) {
            err << (c.passed ? "check passed: " : "check FAILED: ") << c.name << " = " << format_cell(c.value)
                << " (target " << format_cell(c.target) << ", tol " << format_cell(c.tol) << ")\n";
            if (!c.passed && status == kExitOk) status = kExitCheck;
        }
        if (!res.numeric_failure.empty()) {
            status = kExitNumeric;
            message = res.numeric_failure;
        }
    }
    if (!message.empty()) err << message << "\n";
    try {
        write_manifest(outdir, def.name, cfg, files, status == kExitConfig ? nullptr : &res, status, message);
    } catch (const std::exception& e) {
        err << "cannot write manifest: " << e.what() << "\n";
    }
    return status;
}

}  // namespace ahelab::cli
