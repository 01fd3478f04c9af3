// Batch front end: config-driven experiment execution with deterministic
// JSON reports and plot-ready CSV output.
//
// Exit codes: 0 success, 2 configuration or precondition error,
// 3 inconclusive sweep fit, 1 failed assertion-mode check.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mlab/experiments.hpp"
#include "mlab/norms.hpp"

using nlohmann::ordered_json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& context, const std::string& key,
                 const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(context + ": value of '" + key +
                          "' is not a number: '" + value + "'");
    }
}

int to_int(const std::string& context, const std::string& key,
           const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(context + ": value of '" + key +
                          "' is not an integer: '" + value + "'");
    }
}

// A strict key=value bag: every key must be consumed, leftovers are errors.
class KeyValues {
  public:
    KeyValues(const std::string& context, const std::vector<std::string>& items)
        : context_(context) {
        for (const std::string& raw : items) {
            const std::string item = trim(raw);
            if (item.empty()) continue;
            const std::size_t eq = item.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(context_ + ": expected key=value, got '" +
                                  item + "'");
            }
            const std::string key = trim(item.substr(0, eq));
            if (kv_.count(key)) {
                throw ConfigError(context_ + ": duplicate key '" + key + "'");
            }
            kv_[key] = trim(item.substr(eq + 1));
        }
    }

    std::optional<std::string> take(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        std::string v = it->second;
        kv_.erase(it);
        return v;
    }

    double take_double(const std::string& key, double fallback) {
        auto v = take(key);
        return v ? to_double(context_, key, *v) : fallback;
    }

    std::optional<double> take_double_opt(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        return to_double(context_, key, *v);
    }

    int take_int(const std::string& key, int fallback) {
        auto v = take(key);
        return v ? to_int(context_, key, *v) : fallback;
    }

    void finish() const {
        if (!kv_.empty()) {
            throw ConfigError(context_ + ": unknown key '" + kv_.begin()->first +
                              "'");
        }
    }

  private:
    std::string context_;
    std::map<std::string, std::string> kv_;
};

// ---------------------------------------------------------------------------
// Object grammars. Colon-separated key=value fields after a kind token; a
// leading bare number is accepted as the kind's principal parameter.

mlab::Grid parse_grid(const std::string& text, int fallback_dim) {
    std::vector<std::string> parts = text.empty() ? std::vector<std::string>{}
                                                  : split(text, ':');
    KeyValues kv("grid '" + text + "'", parts);
    const int dim = kv.take_int("dim", fallback_dim);
    const int default_n = dim == 1 ? 256 : dim == 2 ? 128 : 32;
    const int n = kv.take_int("n", default_n);
    const double half = kv.take_double("L", 1.0);
    kv.finish();
    return mlab::make_grid(dim, half, n);
}

mlab::Point parse_center(KeyValues& kv) {
    mlab::Point c{0.0, 0.0, 0.0};
    c[0] = kv.take_double("cx", 0.0);
    c[1] = kv.take_double("cy", 0.0);
    c[2] = kv.take_double("cz", 0.0);
    return c;
}

mlab::Ball parse_ball(const std::string& text) {
    KeyValues kv("ball '" + text + "'", split(text, ':'));
    mlab::Ball ball;
    const auto r = kv.take_double_opt("r");
    if (!r) throw ConfigError("ball '" + text + "': missing key 'r'");
    ball.radius = *r;
    ball.center = parse_center(kv);
    const auto metric = kv.take("metric");
    if (metric) {
        if (*metric == "sup") ball.metric = mlab::Metric::sup;
        else if (*metric == "euclid" || *metric == "euclidean")
            ball.metric = mlab::Metric::euclidean;
        else
            throw ConfigError("ball '" + text + "': unknown metric '" + *metric +
                              "' (use euclid or sup)");
    }
    kv.finish();
    return ball;
}

mlab::Weight parse_weight(const std::string& text, int grid_dim) {
    std::vector<std::string> parts = split(text, ':');
    const std::string kind = parts.empty() ? "" : parts[0];
    parts.erase(parts.begin());
    if (kind == "power") {
        KeyValues kv("weight '" + text + "'", parts);
        const int n = kv.take_int("n", grid_dim);
        const auto delta = kv.take_double_opt("delta");
        if (!delta) throw ConfigError("weight '" + text + "': missing key 'delta'");
        kv.finish();
        return mlab::power_weight(n, *delta);
    }
    if (kind == "unit") {
        KeyValues kv("weight '" + text + "'", parts);
        const int n = kv.take_int("n", grid_dim);
        kv.finish();
        return mlab::power_weight(n, static_cast<double>(n));
    }
    if (kind == "file") {
        if (parts.size() != 1) {
            throw ConfigError("weight '" + text + "': expected file:PATH");
        }
        return mlab::sampled_weight(mlab::read_csv(parts[0]));
    }
    throw ConfigError("weight '" + text +
                      "': unknown kind (use power, unit or file)");
}

mlab::FunctionSpec parse_spec(const std::string& text) {
    std::vector<std::string> parts = split(text, ':');
    const std::string kind = parts.empty() ? "" : parts[0];
    parts.erase(parts.begin());
    // A single bare number is the principal parameter of the kind.
    auto principal = [&]() -> std::optional<std::string> {
        if (parts.size() == 1 && parts[0].find('=') == std::string::npos) {
            return parts[0];
        }
        return std::nullopt;
    };
    if (kind == "bump") {
        mlab::Bump b;
        if (auto v = principal()) {
            b.eps = to_double("spec '" + text + "'", "eps", *v);
        } else {
            KeyValues kv("spec '" + text + "'", parts);
            b.eps = kv.take_double("eps", b.eps);
            b.center = parse_center(kv);
            kv.finish();
        }
        return b;
    }
    if (kind == "cone") {
        mlab::Cone c;
        if (auto v = principal()) {
            c.slope = to_double("spec '" + text + "'", "slope", *v);
        } else {
            KeyValues kv("spec '" + text + "'", parts);
            c.slope = kv.take_double("slope", c.slope);
            c.offset = kv.take_double("offset", c.offset);
            c.apex = parse_center(kv);
            kv.finish();
        }
        return c;
    }
    if (kind == "gauss" || kind == "gaussian") {
        mlab::Gaussian g;
        if (auto v = principal()) {
            g.width = to_double("spec '" + text + "'", "width", *v);
        } else {
            KeyValues kv("spec '" + text + "'", parts);
            g.width = kv.take_double("width", g.width);
            g.center = parse_center(kv);
            kv.finish();
        }
        return g;
    }
    if (kind == "poly") {
        // poly:COEFF,E0,E1,E2[;COEFF,E0,E1,E2...]
        if (parts.size() != 1) {
            throw ConfigError("spec '" + text + "': expected poly:TERMS");
        }
        mlab::Polynomial p;
        for (const std::string& term : split(parts[0], ';')) {
            const auto fields = split(term, ',');
            if (fields.size() != 4) {
                throw ConfigError("spec '" + text +
                                  "': each poly term needs coeff,e0,e1,e2");
            }
            mlab::Polynomial::Term t;
            t.coeff = to_double("spec '" + text + "'", "coeff", fields[0]);
            for (int a = 0; a < 3; ++a) {
                t.exponent[a] = to_int("spec '" + text + "'", "exponent",
                                       fields[a + 1]);
            }
            p.terms.push_back(t);
        }
        return p;
    }
    if (kind == "file") {
        if (parts.size() != 1) {
            throw ConfigError("spec '" + text + "': expected file:PATH");
        }
        return mlab::SampledSpec{mlab::read_csv(parts[0])};
    }
    throw ConfigError("spec '" + text +
                      "': unknown kind (use bump, cone, gauss, poly or file)");
}

mlab::BallFamily parse_family(const std::string& text, const mlab::Grid& grid) {
    if (text.empty()) return mlab::coverage_family(grid, 2);
    KeyValues kv("family '" + text + "'", split(text, ':'));
    const int stride = kv.take_int("stride", 2);
    const double ratio = kv.take_double("ratio", 0.0);
    const auto rmin = kv.take_double_opt("rmin");
    const auto rmax = kv.take_double_opt("rmax");
    mlab::Metric metric = mlab::Metric::euclidean;
    if (auto m = kv.take("metric")) {
        if (*m == "sup") metric = mlab::Metric::sup;
        else if (*m != "euclid" && *m != "euclidean")
            throw ConfigError("family '" + text + "': unknown metric '" + *m + "'");
    }
    kv.finish();
    if (!rmin && !rmax) return mlab::coverage_family(grid, stride, ratio, metric);
    const double rho = ratio > 0.0 ? ratio : std::pow(2.0, 0.25);
    const double lo = rmin ? *rmin : 2.0 * grid.spacing();
    const double hi = rmax ? *rmax : 2.0 * grid.half_extent;
    return mlab::ball_family(grid, rho, lo, hi, stride, metric);
}

// ---------------------------------------------------------------------------
// Report serialization.

void append_params(ordered_json& obj,
                   const std::vector<std::pair<std::string, double>>& kv) {
    for (const auto& [k, v] : kv) obj[k] = v;
}

ordered_json report_json(const mlab::VerificationReport& r) {
    ordered_json j;
    j["experiment_id"] = r.experiment_id;
    j["theorem_anchor"] = r.theorem_anchor;
    ordered_json params = ordered_json::object();
    append_params(params, r.params);
    append_params(params, r.extra);
    j["params"] = params;
    j["lhs"] = r.lhs;
    j["rhs_core"] = r.rhs_core;
    j["implied_constant"] = r.implied_constant;
    j["pass"] = r.pass;
    j["notes"] = r.notes;
    return j;
}

ordered_json report_json(const mlab::SweepReport& r) {
    ordered_json j;
    j["experiment_id"] = r.experiment_id;
    j["theorem_anchor"] = r.theorem_anchor;
    ordered_json params = ordered_json::object();
    params["axis"] = r.axis;
    params["samples"] = static_cast<double>(r.samples.size());
    append_params(params, r.extra);
    j["params"] = params;
    // For a sweep, lhs / rhs_core compare the most extreme sample against the
    // fitted power law, and implied_constant is the fitted prefactor.
    const mlab::FitResult fit = mlab::fit_loglog(r.samples);
    const auto& last = r.samples.back();
    j["lhs"] = last.second;
    j["rhs_core"] = std::exp(fit.intercept + fit.slope * std::log(last.first));
    j["implied_constant"] = std::exp(fit.intercept);
    j["fitted_slope"] = r.fitted_slope;
    if (r.predicted_slope) j["predicted_slope"] = *r.predicted_slope;
    j["fit_residual"] = r.fit_residual;
    j["pass"] = r.pass;
    j["notes"] = r.notes;
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    out << text;
}

struct Output {
    std::string dir = ".";
    std::uint64_t seed = 20240801;
    int threads = 0;
    std::vector<std::string> argv_copy;

    void emit(const ordered_json& report) const {
        std::filesystem::create_directories(dir);
        write_file(std::filesystem::path(dir) / "report.json",
                   report.dump(2) + "\n");
        ordered_json meta;
        meta["written_at"] = static_cast<long long>(std::time(nullptr));
        meta["command_line"] = argv_copy;
        meta["seed"] = seed;
        meta["threads"] = threads;
        write_file(std::filesystem::path(dir) / "run_metadata.json",
                   meta.dump(2) + "\n");
    }

    void emit_csv(const std::vector<std::pair<double, double>>& samples) const {
        std::filesystem::create_directories(dir);
        std::string text = "x,implied_constant\n";
        char line[80];
        for (const auto& [x, y] : samples) {
            std::snprintf(line, sizeof(line), "%.17g,%.17g\n", x, y);
            text += line;
        }
        write_file(std::filesystem::path(dir) / "sweep.csv", text);
    }
};

int finalize(const mlab::VerificationReport& rep, const Output& out) {
    const ordered_json j = report_json(rep);
    out.emit(j);
    std::printf("%s\n", j.dump(2).c_str());
    return rep.pass ? 0 : 1;
}

int finalize(const mlab::SweepReport& rep, const Output& out) {
    const ordered_json j = report_json(rep);
    out.emit(j);
    out.emit_csv(rep.samples);
    std::printf("%s\n", j.dump(2).c_str());
    if (rep.inconclusive) return 3;
    return rep.pass ? 0 : 1;
}

// Wrap a bare measured value in the common report schema.
mlab::VerificationReport value_report(const std::string& id,
                                      const std::string& anchor, double value,
                                      std::vector<std::pair<std::string, double>> params) {
    mlab::VerificationReport rep;
    rep.experiment_id = id;
    rep.theorem_anchor = anchor;
    rep.params = std::move(params);
    rep.lhs = value;
    rep.rhs_core = 1.0;
    rep.implied_constant = value;
    return rep;
}

// ---------------------------------------------------------------------------
// Config file: key=value lines (# comments) or a flat JSON object. Returns
// dotted keys; unknown keys are rejected by the consumer.

std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::map<std::string, std::string> out;

    const std::string body = trim(text);
    if (!body.empty() && body[0] == '{') {
        ordered_json j = ordered_json::parse(body, nullptr, true, true);
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                // Nested object: join the fields with ':' (grid, ball, ...).
                std::string joined;
                for (const auto& [k2, v2] : value.items()) {
                    if (!joined.empty()) joined += ':';
                    joined += k2 + "=" +
                              (v2.is_string() ? v2.get<std::string>()
                                              : v2.dump());
                }
                out[key] = joined;
            } else if (value.is_string()) {
                out[key] = value.get<std::string>();
            } else {
                out[key] = value.dump();
            }
        }
        return out;
    }

    int line_no = 0;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key=value, got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        if (out.count(key)) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "'");
        }
        out[key] = trim(t.substr(eq + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared run state assembled from flags + config.

struct RunState {
    std::string grid_text;
    std::string weight_text;
    std::vector<std::string> spec_texts;
    std::string ball_text;
    std::string family_text;
    std::vector<std::string> args;  // key=value experiment parameters
    std::string theorem;
    std::string type;
    bool plain = false;
    bool no_dilation = false;
    bool no_rep_probe = false;
    double inflate_ainf = 0.0;  // 0 = per-operation default
    std::string dump_path;
    Output output;

    mlab::Grid grid() const {
        // Without an explicit grid the dimension follows the weight's n.
        int fallback_dim = 1;
        if (!weight_text.empty()) {
            for (const std::string& part : split(weight_text, ':')) {
                if (part.rfind("n=", 0) == 0) {
                    fallback_dim = to_int("weight '" + weight_text + "'", "n",
                                          part.substr(2));
                }
            }
        }
        return parse_grid(grid_text, fallback_dim);
    }
    mlab::Weight weight(const mlab::Grid& g) const {
        if (weight_text.empty()) {
            return mlab::power_weight(g.dim, static_cast<double>(g.dim));
        }
        return parse_weight(weight_text, g.dim);
    }
    mlab::FunctionSpec spec() const {
        if (spec_texts.empty()) throw ConfigError("missing --f FUNCTION");
        if (spec_texts.size() > 1) {
            throw ConfigError("got " + std::to_string(spec_texts.size()) +
                              " --f functions; this experiment takes exactly "
                              "one (only the maximal suite accepts several)");
        }
        return parse_spec(spec_texts.front());
    }
    mlab::Ball ball(const mlab::Grid& g) const {
        if (ball_text.empty()) {
            mlab::Ball b;
            b.radius = 0.5 * g.half_extent;
            return b;
        }
        return parse_ball(ball_text);
    }
    mlab::CheckOptions check_options(KeyValues& kv) const {
        mlab::CheckOptions opt;
        opt.near_diagonal_refine = kv.take_int("refine", opt.near_diagonal_refine);
        opt.family_stride = kv.take_int("stride", opt.family_stride);
        opt.ap_cap = kv.take_double("cap", opt.ap_cap);
        opt.ainf_inflation = inflate_ainf > 0.0 ? inflate_ainf : 1.0;
        opt.plain = plain;
        if (auto v = kv.take_double_opt("arexp")) opt.ar_exponent = *v;
        opt.dilation_probe = !no_dilation;
        opt.rep_probe = !no_rep_probe;
        return opt;
    }
};

// Apply config-file keys onto the run state; unknown keys are rejected here.
void apply_config(RunState& st, const std::map<std::string, std::string>& cfg) {
    for (const auto& [key, value] : cfg) {
        if (key == "grid") st.grid_text = value;
        else if (key == "weight") st.weight_text = value;
        else if (key == "f") {
            st.spec_texts.clear();  // config files replace flags
            st.spec_texts.push_back(value);
        }
        else if (key == "suite") {
            for (const std::string& s : split(value, ' ')) {
                if (!trim(s).empty()) st.spec_texts.push_back(trim(s));
            }
        }
        else if (key == "ball") st.ball_text = value;
        else if (key == "family") st.family_text = value;
        else if (key == "theorem") st.theorem = value;
        else if (key == "type") st.type = value;
        else if (key == "plain") st.plain = (value == "true" || value == "1");
        else if (key == "no_dilation") st.no_dilation = (value == "true" || value == "1");
        else if (key == "out") st.output.dir = value;
        else if (key == "seed") st.output.seed = std::stoull(value);
        else if (key == "threads") st.output.threads = to_int("config", key, value);
        else if (key == "inflate_ainf") st.inflate_ainf = to_double("config", key, value);
        else if (key == "args") {
            for (const std::string& s : split(value, ' ')) {
                if (!trim(s).empty()) st.args.push_back(trim(s));
            }
        }
        else {
            // Bare experiment parameters (p, r, alpha, ...) pass through.
            static const char* known[] = {"p", "r", "q", "alpha", "m", "delta",
                                          "n", "gamma", "eps", "deltas", "epss",
                                          "arexp", "refine", "stride", "cap"};
            bool ok = false;
            for (const char* k : known) {
                if (key == k) { ok = true; break; }
            }
            if (!ok) throw ConfigError("config: unknown key '" + key + "'");
            st.args.push_back(key + "=" + value);
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int run_constant(RunState& st) {
    const mlab::Grid grid = st.grid();
    const mlab::Weight w = st.weight(grid);
    const mlab::GridFunction wg = mlab::discretize(w, grid);
    KeyValues kv("constant", st.args);
    const std::string type = st.type.empty() ? "ap" : st.type;

    if (type == "ap") {
        const double p = kv.take_double("p", 2.0);
        const mlab::BallFamily fam = parse_family(st.family_text, grid);
        kv.finish();
        const double value = p == 1.0 ? mlab::a1_constant(wg, fam)
                                      : mlab::ap_constant(wg, p, fam);
        return finalize(
            value_report("constant_ap",
                         "[w]_{A_p} = sup_B (avg_B w)(avg_B w^(1-p'))^(p-1)",
                         value, {{"p", p}, {"n", static_cast<double>(grid.dim)}}),
            st.output);
    }
    if (type == "a1") {
        const double cap = kv.take_double("cap", 1e6);
        const mlab::BallFamily fam = parse_family(st.family_text, grid);
        kv.finish();
        const mlab::A1Scan scan = mlab::a1_scan(wg, fam, cap);
        auto rep = value_report("constant_a1", "[w]_{A_1} = sup_B (avg_B w) / essinf_B w",
                                scan.value,
                                {{"cap", cap}, {"n", static_cast<double>(grid.dim)}});
        if (scan.flagged_non_a1) {
            rep.notes.push_back("constant reached the cap: treated as not in A_1");
            rep.pass = false;
        }
        return finalize(rep, st.output);
    }
    if (type == "ainf") {
        const mlab::BallFamily fam = parse_family(st.family_text, grid);
        kv.finish();
        const double value = mlab::ainf_constant(wg, fam);
        return finalize(value_report("constant_ainf",
                                     "[w]_{Ainf} = sup_B avg-int_B M(w chi_B) / int_B w",
                                     value, {{"n", static_cast<double>(grid.dim)}}),
                        st.output);
    }
    if (type == "ell") {
        const mlab::BallFamily fam = parse_family(st.family_text, grid);
        const double cap = kv.take_double("cap", 1e6);
        kv.finish();
        const mlab::EllResult res = mlab::ell_w(w, fam, cap);
        auto rep = value_report("constant_ell",
                                "l_w = sup{r >= 1 : w in A_... admissible r}",
                                res.value, {{"exact", res.exact ? 1.0 : 0.0}});
        return finalize(rep, st.output);
    }
    if (type == "rhi") {
        const double inflation = st.inflate_ainf > 0.0 ? st.inflate_ainf : 2.0;
        const auto eps = kv.take_double_opt("eps");
        KeyValues fkv("family '" + st.family_text + "'",
                      st.family_text.empty() ? std::vector<std::string>{}
                                             : split(st.family_text, ':'));
        const int stride = fkv.take_int("stride", 2);
        fkv.finish();
        kv.finish();
        const mlab::BallFamily cubes =
            mlab::coverage_family(grid, stride, 0.0, mlab::Metric::sup);
        const mlab::ReverseHolderReport rhi = mlab::reverse_holder_margin(
            w, grid, cubes, inflation,
            eps ? std::optional<double>(*eps) : std::nullopt);
        auto rep = value_report(
            "reverse_holder",
            "avg_B w^(1+e) <= 2 (avg_B w)^(1+e), e = 1/(2^{n+1} [w]_{Ainf} - 1)",
            rhi.max_ratio,
            {{"eps", rhi.eps},
             {"ainf_estimate", rhi.ainf_estimate},
             {"ainf_used", rhi.ainf_used},
             {"n", static_cast<double>(grid.dim)}});
        rep.rhs_core = 2.0;
        rep.implied_constant = rhi.max_ratio / 2.0;
        rep.pass = rhi.pass;
        return finalize(rep, st.output);
    }
    if (type == "open") {
        const double p = kv.take_double("p", 2.0);
        const double inflation = st.inflate_ainf > 0.0 ? st.inflate_ainf : 2.0;
        const mlab::BallFamily fam = parse_family(st.family_text, grid);
        kv.finish();
        const mlab::OpenPropertyReport rep0 =
            mlab::open_property(w, grid, fam, p, inflation);
        auto rep = value_report(
            "open_property",
            "[w]_{A_{p-e}} <= 2^{p-1} [w]_{A_p}, e = (p-1)/(tau_n [s]_{Ainf})",
            rep0.constant_below,
            {{"p", p},
             {"eps", rep0.eps},
             {"constant_at_p", rep0.constant_at_p},
             {"ainf_sigma_used", rep0.ainf_sigma_used}});
        rep.rhs_core = rep0.bound;
        rep.implied_constant = rep0.bound > 0.0 ? rep0.constant_below / rep0.bound : 0.0;
        rep.pass = rep0.holds;
        return finalize(rep, st.output);
    }
    if (type == "mass") {
        const auto r = kv.take_double_opt("r");
        if (!r) throw ConfigError("constant --type mass: missing r=RADIUS");
        mlab::Ball ball;
        ball.radius = *r;
        ball.center = parse_center(kv);
        kv.finish();
        const double value = mlab::weight_mass(w, ball, grid);
        return finalize(value_report("weight_mass", "w(B) = int_B w dx", value,
                                     {{"radius", *r},
                                      {"n", static_cast<double>(grid.dim)}}),
                        st.output);
    }
    throw ConfigError("constant: unknown --type '" + type +
                      "' (use ap, a1, ainf, ell, rhi, open or mass)");
}

int run_operator(RunState& st) {
    const mlab::Grid grid = st.grid();
    KeyValues kv("operator", st.args);
    const std::string type = st.type.empty() ? "riesz" : st.type;
    const mlab::FunctionSpec spec = st.spec();
    const mlab::GridFunction fg = mlab::sample(spec, grid);

    mlab::GridFunction result = fg;
    mlab::VerificationReport rep;
    rep.experiment_id = "operator_" + type;
    bool scalar = false;
    double scalar_value = 0.0;

    if (type == "maximal") {
        const mlab::BallFamily fam = parse_family(st.family_text, grid);
        kv.finish();
        result = mlab::maximal(fg, fam);
        rep.theorem_anchor = "Mf(x) = sup_{B : x in B} avg_B |f|";
    } else if (type == "fractional-maximal") {
        const double alpha = kv.take_double("alpha", 0.5);
        const mlab::BallFamily fam = parse_family(st.family_text, grid);
        kv.finish();
        result = mlab::fractional_maximal(fg, alpha, fam);
        rep.theorem_anchor = "M_a f(x) = sup_{B : x in B} r(B)^a avg_B |f|";
        rep.params.emplace_back("alpha", alpha);
    } else if (type == "riesz") {
        const double alpha = kv.take_double("alpha", 0.5);
        const int refine = kv.take_int("refine", 4);
        const double ax = kv.take_double("at_x", 0.0);
        const double ay = kv.take_double("at_y", 0.0);
        const double az = kv.take_double("at_z", 0.0);
        const bool probe = kv.take("at").has_value();
        kv.finish();
        const mlab::KernelQuadrature quad{alpha, refine};
        result = mlab::riesz(fg, quad);
        rep.theorem_anchor = "I_a f(x) = int f(y) |x-y|^(a-n) dy";
        rep.params.emplace_back("alpha", alpha);
        if (probe) {
            rep.extra.emplace_back(
                "value_at_point", mlab::riesz_at(fg, quad, mlab::Point{ax, ay, az}));
        }
    } else if (type == "gradient") {
        kv.finish();
        result = mlab::gradient_magnitude(spec, grid);
        rep.theorem_anchor = "|grad f| at cell centers";
    } else if (type == "highorder") {
        const int m = kv.take_int("m", 2);
        kv.finish();
        result = mlab::highorder_magnitude(spec, m, grid);
        rep.theorem_anchor = "|grad^m f| = sum over |multi-index| = m of |d^a f|";
        rep.params.emplace_back("m", static_cast<double>(m));
    } else if (type == "gagliardo" || type == "weighted-gagliardo") {
        const double p = kv.take_double("p", 1.0);
        const double delta = kv.take_double("delta", 0.5);
        const int refine = kv.take_int("refine", 4);
        kv.finish();
        const mlab::Ball ball = st.ball(grid);
        if (type == "gagliardo") {
            scalar_value = mlab::gagliardo(spec, p, delta, ball, grid, refine);
            rep.theorem_anchor =
                "int_B int_B |f(x)-f(y)|^p |x-y|^-(n+dp) dy dx";
        } else {
            const mlab::Weight w = st.weight(grid);
            scalar_value =
                mlab::weighted_gagliardo(spec, p, delta, ball, w, grid, refine);
            rep.theorem_anchor =
                "(1/w(B)) int_B int_B |f(x)-f(y)|^p |x-y|^-(n+dp) dy w(x) dx";
        }
        scalar = true;
        rep.params.emplace_back("p", p);
        rep.params.emplace_back("delta", delta);
        rep.params.emplace_back("radius", ball.radius);
    } else {
        throw ConfigError("operator: unknown --type '" + type + "'");
    }

    rep.params.emplace_back("n", static_cast<double>(grid.dim));
    if (scalar) {
        rep.lhs = scalar_value;
    } else {
        double peak = 0.0;
        for (double v : result.values) peak = std::max(peak, std::abs(v));
        rep.lhs = peak;
        rep.notes.push_back("lhs is the largest |value| over the grid");
        if (!st.dump_path.empty()) mlab::write_csv(result, st.dump_path);
    }
    rep.rhs_core = 1.0;
    rep.implied_constant = rep.lhs;
    return finalize(rep, st.output);
}

int run_norm(RunState& st) {
    const mlab::Grid grid = st.grid();
    const mlab::Weight w = st.weight(grid);
    const mlab::GridFunction wg = mlab::discretize(w, grid);
    const mlab::GridFunction fg = mlab::sample(st.spec(), grid);
    const mlab::Ball ball = st.ball(grid);
    KeyValues kv("norm", st.args);
    const std::string type = st.type.empty() ? "lp" : st.type;

    double value = 0.0;
    mlab::VerificationReport rep;
    rep.experiment_id = "norm_" + type;
    if (type == "lp") {
        const double p = kv.take_double("p", 2.0);
        kv.finish();
        value = mlab::weighted_lp(fg, p, ball, wg);
        rep.theorem_anchor = "((1/w(B)) int_B |f|^p w)^(1/p)";
        rep.params.emplace_back("p", p);
    } else if (type == "weak") {
        const double q = kv.take_double("q", 2.0);
        kv.finish();
        value = mlab::lorentz_weak(fg, q, ball, wg);
        rep.theorem_anchor = "sup_t t * (w(|f|>t)/w(B))^(1/q)";
        rep.params.emplace_back("q", q);
    } else if (type == "lorentz") {
        const double a = kv.take_double("a", 2.0);
        const double b = kv.take_double("b", 1.0);
        kv.finish();
        value = mlab::lorentz(fg, a, b, ball, wg);
        rep.theorem_anchor =
            "(a int_0^inf t^(b-1) (w(|f|>t)/w(B))^(b/a) dt)^(1/b)";
        rep.params.emplace_back("a", a);
        rep.params.emplace_back("b", b);
    } else {
        throw ConfigError("norm: unknown --type '" + type +
                          "' (use lp, weak or lorentz)");
    }
    rep.params.emplace_back("radius", ball.radius);
    rep.params.emplace_back("n", static_cast<double>(grid.dim));
    rep.lhs = value;
    rep.rhs_core = 1.0;
    rep.implied_constant = value;
    return finalize(rep, st.output);
}

int run_verify(RunState& st) {
    if (st.theorem.empty()) {
        throw ConfigError("verify: missing --theorem NAME");
    }
    const mlab::Grid grid = st.grid();
    KeyValues kv("verify --theorem " + st.theorem, st.args);
    const mlab::CheckOptions opt = st.check_options(kv);
    const std::string& t = st.theorem;

    if (t == "vanishing") {
        const double q = kv.take_double("q", 2.0);
        kv.finish();
        const mlab::GridFunction fg = mlab::sample(st.spec(), grid);
        const mlab::Weight w = st.weight(grid);
        const mlab::GridFunction wg = mlab::discretize(w, grid);
        std::vector<bool> mask(fg.values.size());
        std::vector<double> mu(fg.values.size());
        const double cv = grid.cell_volume();
        for (std::size_t i = 0; i < fg.values.size(); ++i) {
            mask[i] = (fg.values[i] == 0.0);
            mu[i] = wg.values[i] * cv;
        }
        return finalize(mlab::vanishing_lemma_check(fg.values, mask, q, mu),
                        st.output);
    }
    if (t == "maximal") {
        const double p = kv.take_double("p", 2.0);
        const double r = kv.take_double("r", 1.0);
        kv.finish();
        const mlab::Weight w = st.weight(grid);
        const mlab::BallFamily fam = parse_family(st.family_text, grid);
        std::vector<mlab::FunctionSpec> suite;
        for (const std::string& text : st.spec_texts) {
            suite.push_back(parse_spec(text));
        }
        return finalize(mlab::maximal_norm_probe(w, r, p, fam, suite, grid),
                        st.output);
    }

    const mlab::Weight w = st.weight(grid);
    const mlab::FunctionSpec spec = st.spec();
    const mlab::Ball ball = st.ball(grid);

    if (t == "hedberg") {
        const double alpha = kv.take_double("alpha", 0.5);
        const double p = kv.take_double("p", 1.5);
        const double r = kv.take_double("r", 1.2);
        kv.finish();
        return finalize(
            mlab::hedberg_check(spec, w, r, alpha, p, ball, grid, opt), st.output);
    }
    if (t == "riesz-strong") {
        const double alpha = kv.take_double("alpha", 0.5);
        const double p = kv.take_double("p", 1.5);
        const double r = kv.take_double("r", 1.0);
        kv.finish();
        return finalize(
            mlab::riesz_strong_check(spec, w, r, alpha, p, ball, grid, opt),
            st.output);
    }
    if (t == "riesz-weak") {
        const double alpha = kv.take_double("alpha", 0.5);
        const double p = kv.take_double("p", 1.0);
        const double r = kv.take_double("r", 1.0);
        kv.finish();
        return finalize(
            mlab::riesz_weak_check(spec, w, r, alpha, p, ball, grid, opt),
            st.output);
    }
    if (t == "ps1" || t == "ps-strong" || t == "ps-weak" || t == "ps-lorentz") {
        const double p = kv.take_double("p", 1.0);
        const double r = kv.take_double("r", 1.0);
        kv.finish();
        mlab::PoincareMode mode = mlab::PoincareMode::strong;
        if (t == "ps-weak") mode = mlab::PoincareMode::weak;
        if (t == "ps-lorentz") mode = mlab::PoincareMode::lorentz;
        return finalize(mlab::poincare_check(spec, w, r, p, ball, grid, mode, opt),
                        st.output);
    }
    if (t == "fractional") {
        const double p = kv.take_double("p", 1.0);
        const double delta = kv.take_double("delta", 0.5);
        kv.finish();
        return finalize(
            mlab::fractional_poincare_check(spec, w, p, delta, ball, grid, opt),
            st.output);
    }
    if (t == "subrep") {
        const int m = kv.take_int("m", 1);
        kv.finish();
        return finalize(mlab::subrepresentation_check(spec, ball, grid, m, opt),
                        st.output);
    }
    if (t == "highorder" || t == "highorder-weak") {
        const double p = kv.take_double("p", 1.0);
        const double r = kv.take_double("r", 1.0);
        const int m = kv.take_int("m", 2);
        kv.finish();
        const mlab::HighOrderMode mode = (t == "highorder")
                                             ? mlab::HighOrderMode::strong
                                             : mlab::HighOrderMode::weak;
        return finalize(
            mlab::highorder_check(spec, w, r, p, m, ball, grid, mode, opt),
            st.output);
    }
    throw ConfigError(
        "verify: unknown --theorem '" + t +
        "' (use hedberg, riesz-strong, riesz-weak, ps1, ps-weak, ps-lorentz, "
        "fractional, subrep, highorder, highorder-weak, vanishing or maximal)");
}

int run_sweep(RunState& st, bool sharpness, bool beta) {
    KeyValues kv("sweep", st.args);
    if (sharpness == beta) {
        throw ConfigError("sweep: choose exactly one of --sharpness or --beta");
    }
    if (sharpness) {
        const int n = kv.take_int("n", 2);
        const double p = kv.take_double("p", 2.0);
        const double delta = kv.take_double("delta", static_cast<double>(n));
        auto gamma = kv.take_double_opt("gamma");
        const auto q = kv.take_double_opt("q");
        const auto eps_text = kv.take("eps");
        kv.finish();
        if (!gamma) {
            if (!q) throw ConfigError("sweep --sharpness: provide gamma= or q=");
            gamma = mlab::sharpness_gamma(n, p, delta, *q);
        }
        std::vector<double> ladder;
        if (eps_text) {
            for (const std::string& s : split(*eps_text, ',')) {
                ladder.push_back(to_double("sweep", "eps", s));
            }
        } else {
            ladder = {0.2, 0.1, 0.05, 0.025};
        }
        return finalize(mlab::sharpness_sweep(n, p, delta, *gamma, ladder),
                        st.output);
    }
    const int n = kv.take_int("n", 2);
    const double p = kv.take_double("p", 2.0);
    const double r = kv.take_double("r", 2.0);
    const double arexp = kv.take_double("arexp", 0.0);
    const auto deltas_text = kv.take("deltas");
    const auto epss_text = kv.take("epss");
    kv.finish();
    std::vector<double> deltas = {0.16, 0.04, 0.01, 0.0025, 0.000625};
    if (deltas_text) {
        deltas.clear();
        for (const std::string& s : split(*deltas_text, ',')) {
            deltas.push_back(to_double("sweep", "deltas", s));
        }
    }
    std::vector<double> epss = {0.05, 0.1, 0.2, 0.35};
    if (epss_text) {
        epss.clear();
        for (const std::string& s : split(*epss_text, ',')) {
            epss.push_back(to_double("sweep", "epss", s));
        }
    }
    return finalize(mlab::sharpness_beta_sweep(n, p, r, deltas, epss, arexp),
                    st.output);
}

}  // namespace

int main(int argc, char** argv) {
    RunState st;
    for (int i = 0; i < argc; ++i) st.output.argv_copy.emplace_back(argv[i]);

    CLI::App app{
        "Numerical laboratory for weighted Poincare-Sobolev inequalities: "
        "Muckenhoupt constants, integral operators, Lorentz norms and "
        "inequality verification reports."};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "Config file: key=value lines or a JSON object");
    app.add_option("--out", st.output.dir, "Output directory for report.json");
    app.add_option("--seed", st.output.seed, "Seed recorded with the run");
    app.add_option("--threads", st.output.threads,
                   "Worker threads (also via MLAB_THREADS; 0 keeps the env value)");
    app.add_option("--inflate-ainf", st.inflate_ainf,
                   "Safety multiplier on measured A-infinity constants "
                   "(0 = per-operation default)");

    auto add_common = [&](CLI::App* sub, bool with_ball) {
        sub->add_option("--grid", st.grid_text, "Grid: dim=D:n=N:L=HALF");
        sub->add_option("--weight", st.weight_text,
                        "Weight: power:delta=D[:n=N], unit[:n=N] or file:PATH");
        sub->add_option("--f", st.spec_texts,
                        "Function: bump:EPS, cone:SLOPE, gauss:WIDTH, "
                        "poly:TERMS or file:PATH (repeatable)")
            // One token per occurrence, so trailing key=value positionals
            // reach the strict key check instead of being eaten as specs.
            ->allow_extra_args(false);
        if (with_ball) {
            sub->add_option("--ball", st.ball_text,
                            "Ball: r=R[:cx=..][:cy=..][:cz=..][:metric=sup]");
        }
        sub->add_option("--family", st.family_text,
                        "Ball family: stride=S[:ratio=..][:rmin=..][:rmax=..]");
        sub->add_option("args", st.args, "Experiment parameters as key=value");
        // Every experiment parameter is also reachable as a named flag:
        // --p 2 is shorthand for the positional p=2.
        for (const char* name : {"p", "r", "q", "a", "b", "alpha", "m", "delta",
                                 "gamma", "n", "eps", "deltas", "epss", "arexp",
                                 "refine", "stride", "cap"}) {
            const std::string key = name;
            sub->add_option_function<std::string>(
                "--" + key,
                [&st, key](const std::string& v) {
                    st.args.push_back(key + "=" + v);
                },
                "Shorthand for " + key + "=VALUE");
        }
    };

    CLI::App* c_const = app.add_subcommand("constant", "Measure weight constants");
    c_const->add_option("--type", st.type,
                        "ap | a1 | ainf | ell | rhi | open | mass");
    // Convenience spellings: --ap p=2 picks the type and forwards the args.
    std::vector<std::string> ap_args, open_args, mass_args;
    bool want_a1 = false, want_ainf = false, want_ell = false, want_rhi = false;
    c_const->add_option("--ap", ap_args, "A_p constant, e.g. --ap p=2")
        ->expected(0, -1);
    c_const->add_flag("--a1", want_a1, "A_1 constant");
    c_const->add_flag("--ainf", want_ainf, "A-infinity constant");
    c_const->add_flag("--ell", want_ell, "Admissible-class threshold l_w");
    c_const->add_flag("--rhi", want_rhi, "Sharp reverse Holder margin");
    c_const->add_option("--open", open_args, "Openness below p, e.g. --open p=2")
        ->expected(0, -1);
    c_const->add_option("--mass", mass_args, "Ball mass, e.g. --mass r=0.5")
        ->expected(0, -1);
    add_common(c_const, false);

    CLI::App* c_op = app.add_subcommand("operator", "Apply an integral operator");
    c_op->add_option("--type", st.type,
                     "maximal | fractional-maximal | riesz | gradient | "
                     "highorder | gagliardo | weighted-gagliardo");
    c_op->add_option("--dump", st.dump_path, "Write the resulting field as CSV");
    add_common(c_op, true);

    CLI::App* c_norm = app.add_subcommand("norm", "Evaluate a normalized norm");
    c_norm->add_option("--type", st.type, "lp | weak | lorentz");
    add_common(c_norm, true);

    CLI::App* c_verify = app.add_subcommand("verify", "Run one inequality check");
    c_verify->add_option("--theorem", st.theorem,
                         "hedberg | riesz-strong | riesz-weak | ps1 | ps-weak | "
                         "ps-lorentz | fractional | subrep | highorder | "
                         "highorder-weak | vanishing | maximal");
    c_verify->add_flag("--plain", st.plain,
                       "riesz-strong: plain-exponent variant");
    c_verify->add_flag("--no-dilation", st.no_dilation,
                       "Skip the 2x dilation probe");
    c_verify->add_flag("--no-rep-probe", st.no_rep_probe,
                       "fractional: skip the pointwise representation probe");
    add_common(c_verify, true);

    CLI::App* c_sweep = app.add_subcommand("sweep", "Fit implied-constant growth");
    bool sweep_sharp = false, sweep_beta = false;
    c_sweep->add_flag("--sharpness", sweep_sharp,
                      "Bump-family sweep along 1/eps (n= p= delta= q=|gamma= eps=..,..)");
    c_sweep->add_flag("--beta", sweep_beta,
                      "Weight-axis sweep along delta -> 0 (n= p= r= deltas=.. epss=..)");
    add_common(c_sweep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!config_path.empty()) apply_config(st, load_config(config_path));
        if (st.output.threads > 0) {
            setenv("MLAB_THREADS", std::to_string(st.output.threads).c_str(), 1);
        }

        if (app.got_subcommand(c_const)) {
            if (!ap_args.empty() || c_const->count("--ap")) {
                st.type = "ap";
                for (const std::string& a : ap_args) st.args.push_back(a);
            }
            if (want_a1) st.type = "a1";
            if (want_ainf) st.type = "ainf";
            if (want_ell) st.type = "ell";
            if (want_rhi) st.type = "rhi";
            if (!open_args.empty() || c_const->count("--open")) {
                st.type = "open";
                for (const std::string& a : open_args) st.args.push_back(a);
            }
            if (!mass_args.empty() || c_const->count("--mass")) {
                st.type = "mass";
                for (const std::string& a : mass_args) st.args.push_back(a);
            }
            return run_constant(st);
        }
        if (app.got_subcommand(c_op)) return run_operator(st);
        if (app.got_subcommand(c_norm)) return run_norm(st);
        if (app.got_subcommand(c_verify)) return run_verify(st);
        if (app.got_subcommand(c_sweep)) return run_sweep(st, sweep_sharp, sweep_beta);
        throw ConfigError("no subcommand given");
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "precondition error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "degenerate input: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
