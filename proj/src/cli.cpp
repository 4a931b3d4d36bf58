#include "semipert/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "semipert/bessel.hpp"
#include "semipert/convergence.hpp"
#include "semipert/oracle.hpp"
#include "semipert/volterra.hpp"

namespace semipert::cli {

using nlohmann::json;

namespace {

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

template <typename T>
T field(const json& object, const std::string& name, const std::string& path) {
    try {
        return object.at(name).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + path + "': " + e.what());
    }
}

template <typename T>
T field_or(const json& object, const std::string& name, const std::string& path, T fallback) {
    if (!object.contains(name)) return fallback;
    return field<T>(object, name, path);
}

RateField parse_walk(const json& walk) {
    if (!walk.is_object()) throw ConfigError("field 'walk': expected an object");
    const Rates background{field_or<double>(walk, "background_lambda", "walk.background_lambda", 1.0),
                           field_or<double>(walk, "background_mu", "walk.background_mu", 1.0)};
    std::map<Site, Rates> defects;
    if (walk.contains("defects")) {
        const json& list = walk.at("defects");
        if (!list.is_array()) throw ConfigError("field 'walk.defects': expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string path = "walk.defects[" + std::to_string(i) + "]";
            const Site site = field<Site>(list[i], "site", path + ".site");
            const Rates r{field<double>(list[i], "lambda", path + ".lambda"), field<double>(list[i], "mu", path + ".mu")};
            if (!defects.emplace(site, r).second) throw ConfigError("field '" + path + "': duplicate site");
        }
    }
    try {
        return RateField(background, std::move(defects));
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("field 'walk': ") + e.what());
    }
}

InversionScheme parse_inversion(const json& j) {
    const auto method = field_or<std::string>(j, "method", "inversion.method", "talbot");
    InversionScheme scheme;
    if (method == "talbot") {
        scheme = InversionScheme::talbot(field_or<int>(j, "nodes", "inversion.nodes", 32));
    } else if (method == "gaver_stehfest") {
        scheme = InversionScheme::gaver_stehfest(field_or<int>(j, "nodes", "inversion.nodes", 12));
    } else {
        throw ConfigError("field 'inversion.method': expected 'talbot' or 'gaver_stehfest'");
    }
    return scheme;
}

std::string method_name(InversionMethod m) { return m == InversionMethod::talbot ? "talbot" : "gaver_stehfest"; }

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Long-format table of t,x,y,value,method rows.
class ResultTable {
public:
    void add(const std::string& method, std::span<const SitePair> pairs, std::span<const double> times,
             const std::vector<std::vector<double>>& values) {
        methods_.push_back(method);
        values_.push_back(values);
        pairs_.assign(pairs.begin(), pairs.end());
        times_.assign(times.begin(), times.end());
    }

    std::string csv() const {
        std::ostringstream out;
        out << "t,x,y,value,method\n";
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            for (std::size_t k = 0; k < times_.size(); ++k) {
                for (std::size_t m = 0; m < methods_.size(); ++m) {
                    out << format_double(times_[k]) << ',' << pairs_[p].x << ',' << pairs_[p].y << ','
                        << format_double(values_[m][p][k]) << ',' << methods_[m] << '\n';
                }
            }
        }
        return out.str();
    }

    /// Max |a - b| over every row, for each pair of methods.
    json discrepancies(double& overall) const {
        json out = json::object();
        overall = 0.0;
        for (std::size_t a = 0; a < methods_.size(); ++a) {
            for (std::size_t b = a + 1; b < methods_.size(); ++b) {
                double worst = 0.0;
                for (std::size_t p = 0; p < pairs_.size(); ++p) {
                    for (std::size_t k = 0; k < times_.size(); ++k) {
                        worst = std::max(worst, std::abs(values_[a][p][k] - values_[b][p][k]));
                    }
                }
                out[methods_[a] + "_vs_" + methods_[b]] = worst;
                overall = std::max(overall, worst);
            }
        }
        return out;
    }

private:
    std::vector<std::string> methods_;
    std::vector<std::vector<std::vector<double>>> values_;
    std::vector<SitePair> pairs_;
    std::vector<double> times_;
};

Perturbation walk_perturbation(const RunConfig& config) {
    return perturbation_from(build_walk_generator(config.walk), build_walk_generator(RateField(config.walk.background())));
}

std::vector<std::vector<double>> sample_at(const GreenPath& path, const TimeGrid& grid, std::span<const double> times) {
    std::vector<std::vector<double>> out(path.values.size(), std::vector<double>(times.size()));
    for (std::size_t p = 0; p < path.values.size(); ++p) {
        for (std::size_t k = 0; k < times.size(); ++k) out[p][k] = path.values[p][grid.index_of(times[k])];
    }
    return out;
}

std::vector<std::vector<double>> run_laplace(const RunConfig& config, std::span<const double> times) {
    const HomogeneousWalk base(config.walk.background());
    const Perturbation d = walk_perturbation(config);
    std::vector<double> positive;
    for (double t : times) {
        if (t > 0.0) positive.push_back(t);
    }
    const auto inner = greens_exact(base, d, config.targets, positive, config.inversion);
    std::vector<std::vector<double>> out(config.targets.size(), std::vector<double>(times.size()));
    for (std::size_t p = 0; p < config.targets.size(); ++p) {
        std::size_t j = 0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            // The inversion needs t > 0; at t = 0 the initial condition is exact.
            out[p][k] = times[k] > 0.0 ? inner[p][j++] : (config.targets[p].x == config.targets[p].y ? 1.0 : 0.0);
        }
    }
    return out;
}

std::vector<std::vector<double>> run_oracle(const RunConfig& config, std::span<const double> times, double& max_leak) {
    const TruncatedSystem sys(build_walk_generator(config.walk), config.window);
    std::vector<std::vector<double>> out(config.targets.size(), std::vector<double>(times.size()));
    std::map<Site, std::vector<Eigen::VectorXd>> rows;
    max_leak = 0.0;
    for (const auto& p : config.targets) {
        if (rows.count(p.x)) continue;
        std::vector<Eigen::VectorXd> states;
        Eigen::VectorXd state = sys.embed(L1Vector::delta(p.x));
        double now = 0.0;
        for (double t : times) {
            state = evolve(sys, state, t - now, config.oracle_tol, Direction::forward);
            now = t;
            max_leak = std::max(max_leak, 1.0 - state.sum());
            states.push_back(state);
        }
        rows.emplace(p.x, std::move(states));
    }
    for (std::size_t p = 0; p < config.targets.size(); ++p) {
        const auto& states = rows.at(config.targets[p].x);
        for (std::size_t k = 0; k < times.size(); ++k) {
            out[p][k] = states[k](static_cast<Eigen::Index>(sys.index(config.targets[p].y)));
        }
    }
    return out;
}

bool wants(const RunConfig& config, const std::string& method) {
    return config.method == "all" || config.method == method;
}

}  // namespace

std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("line 1: top level must be an object");

    RunConfig config;
    config.source = doc;
    if (!doc.contains("walk")) throw ConfigError("field 'walk': required");
    config.walk = parse_walk(doc.at("walk"));
    config.t_max = field_or<double>(doc, "t_max", "t_max", config.t_max);
    config.h = field_or<double>(doc, "h", "h", config.h);
    config.window = field_or<Site>(doc, "window", "window", config.window);
    config.oracle_tol = field_or<double>(doc, "oracle_tol", "oracle_tol", config.oracle_tol);
    config.tolerance = field_or<double>(doc, "tolerance", "tolerance", config.tolerance);
    config.method = field_or<std::string>(doc, "method", "method", config.method);
    config.output_times = field_or<std::vector<double>>(doc, "output_times", "output_times", {});
    if (doc.contains("targets")) {
        const auto raw = field<std::vector<std::vector<Site>>>(doc, "targets", "targets");
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i].size() != 2) throw ConfigError("field 'targets[" + std::to_string(i) + "]': expected [x, y]");
            config.targets.push_back({raw[i][0], raw[i][1]});
        }
    }
    if (doc.contains("inversion")) config.inversion = parse_inversion(doc.at("inversion"));
    if (doc.contains("convergence")) {
        const json& c = doc.at("convergence");
        config.radii = field_or<std::vector<Site>>(c, "radii", "convergence.radii", {});
        if (c.contains("q0")) {
            std::map<Site, double> q;
            const json& list = c.at("q0");
            if (!list.is_array()) throw ConfigError("field 'convergence.q0': expected an array");
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string path = "convergence.q0[" + std::to_string(i) + "]";
                q[field<Site>(list[i], "site", path + ".site")] += field<double>(list[i], "value", path + ".value");
            }
            config.q0 = L1Vector(std::move(q));
        }
    }
    if (doc.contains("bessel")) {
        const json& b = doc.at("bessel");
        config.bessel_n_max = field_or<int>(b, "n_max", "bessel.n_max", config.bessel_n_max);
        config.bessel_x = field_or<std::vector<double>>(b, "x", "bessel.x", config.bessel_x);
    }
    validate(config);
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void apply_overrides(RunConfig& config, const Overrides& o) {
    if (o.method) config.method = *o.method;
    if (o.h) config.h = *o.h;
    if (o.t_max) config.t_max = *o.t_max;
    if (o.window) config.window = *o.window;
    if (o.talbot_m) config.inversion = InversionScheme::talbot(*o.talbot_m);
    validate(config);
}

void validate(const RunConfig& c) {
    if (!(c.h > 0.0) || !std::isfinite(c.h)) throw ConfigError("field 'h': must be > 0");
    if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) throw ConfigError("field 't_max': must be > 0");
    if (c.window < 1) throw ConfigError("field 'window': must be >= 1");
    if (!(c.oracle_tol > 0.0)) throw ConfigError("field 'oracle_tol': must be > 0");
    if (!(c.tolerance > 0.0)) throw ConfigError("field 'tolerance': must be > 0");
    static const std::vector<std::string> methods{"volterra", "laplace", "oracle", "all"};
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) {
        throw ConfigError("field 'method': expected volterra, laplace, oracle or all");
    }
    try {
        TimeGrid::covering(c.t_max, c.h);
        c.inversion.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("fields 't_max'/'h'/'inversion': ") + e.what());
    }
    for (std::size_t i = 0; i < c.output_times.size(); ++i) {
        const double t = c.output_times[i];
        if (!(t >= 0.0) || t > c.t_max * (1.0 + 1e-12)) {
            throw ConfigError("field 'output_times[" + std::to_string(i) + "]': must lie in [0, t_max]");
        }
    }
    for (std::size_t i = 0; i < c.targets.size(); ++i) {
        if (2 * std::abs(c.targets[i].x) > c.window || 2 * std::abs(c.targets[i].y) > c.window) {
            throw ConfigError("field 'targets[" + std::to_string(i) + "]': sites must satisfy |x|, |y| <= window / 2");
        }
    }
    if (!std::is_sorted(c.radii.begin(), c.radii.end())) throw ConfigError("field 'convergence.radii': must be ascending");
    for (Site r : c.radii) {
        if (r < 0) throw ConfigError("field 'convergence.radii': radii must be >= 0");
    }
    if (c.bessel_n_max < 0) throw ConfigError("field 'bessel.n_max': must be >= 0");
    for (double x : c.bessel_x) {
        if (!(x >= 0.0)) throw ConfigError("field 'bessel.x': arguments must be >= 0");
    }
}

std::vector<double> resolved_times(const RunConfig& config) {
    const TimeGrid grid = TimeGrid::covering(config.t_max, config.h);
    std::vector<double> out;
    if (config.output_times.empty()) {
        for (std::size_t i = 0; i <= 10; ++i) {
            const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(grid.steps) * i / 10.0));
            out.push_back(grid.at(k));
        }
        out.erase(std::unique(out.begin(), out.end()), out.end());
    } else {
        try {
            for (double t : config.output_times) out.push_back(grid.at(grid.index_of(t)));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("field 'output_times': ") + e.what());
        }
        std::sort(out.begin(), out.end());
    }
    return out;
}

RunOutput run(const std::string& command, const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    RunOutput result;
    json& summary = result.summary;
    summary["command"] = command;
    summary["inputs"] = config.source;
    summary["resolved"] = {{"t_max", config.t_max},
                           {"h", config.h},
                           {"window", config.window},
                           {"method", config.method},
                           {"inversion", {{"method", method_name(config.inversion.method)},
                                          {"nodes", config.inversion.nodes}}},
                           {"oracle_tol", config.oracle_tol}};

    try {
        if (command == "bessel") {
            std::ostringstream out;
            out << "n,x,value\n";
            for (double x : config.bessel_x) {
                const auto table = scaled_bessel_table(config.bessel_n_max, x);
                for (int n = 0; n <= config.bessel_n_max; ++n) {
                    out << n << ',' << format_double(x) << ',' << format_double(table.values[static_cast<std::size_t>(n)])
                        << '\n';
                }
            }
            result.csv = out.str();
            summary["status"] = "ok";
        } else if (command == "convergence") {
            if (config.radii.empty()) throw ConfigError("field 'convergence.radii': required for the convergence command");
            const TimeGrid grid = TimeGrid::covering(config.t_max, config.h);
            StudyOptions options;
            options.oracle_tol = config.oracle_tol;
            const auto report = convergence_study(config.walk, config.q0, grid, config.radii, options);
            std::ostringstream out;
            out << "radius,bn_norm,error,defect_integral,wn_measured,wn_operator,bound,bound_operator,"
                   "gronwall_printed,gronwall_time_scaled\n";
            json rows = json::array();
            bool bounds_hold = true;
            for (const auto& r : report.rows) {
                out << r.radius << ',' << format_double(r.bn_norm) << ',' << format_double(r.error) << ','
                    << format_double(r.defect_integral) << ',' << format_double(r.wn_measured) << ','
                    << format_double(r.wn_operator) << ',' << format_double(r.bound) << ','
                    << format_double(r.bound_operator) << ',' << format_double(r.gronwall.printed) << ','
                    << format_double(r.gronwall.time_scaled) << '\n';
                const bool holds = r.error <= r.bound_operator + 5e-3;
                bounds_hold = bounds_hold && holds;
                rows.push_back({{"radius", r.radius}, {"error", r.error}, {"bound", r.bound},
                                {"bound_operator", r.bound_operator}, {"bound_holds", holds}});
            }
            result.csv = out.str();
            summary["window"] = report.window;
            summary["w_operator"] = report.w_operator;
            summary["w_measured"] = report.w_measured;
            summary["rows"] = rows;
            summary["tolerances"] = {{"bound_slack", 5e-3}};
            summary["status"] = bounds_hold ? "pass" : "fail";
            if (!bounds_hold) result.status = 1;
        } else if (command == "solve" || command == "laplace" || command == "oracle" || command == "compare") {
            if (config.targets.empty()) throw ConfigError("field 'targets': at least one pair required");
            const auto times = resolved_times(config);
            const TimeGrid grid = TimeGrid::covering(config.t_max, config.h);
            ResultTable table;
            json tolerances = json::object();
            if (command == "solve") {
                const Perturbation d = walk_perturbation(config);
                const HomogeneousWalk base(config.walk.background());
                table.add("volterra_backward", config.targets, times,
                          sample_at(solve_backward(base, d, config.targets, grid), grid, times));
                table.add("volterra_forward", config.targets, times,
                          sample_at(solve_forward(base, d, config.targets, grid), grid, times));
            } else {
                const bool all = command == "compare";
                if ((all && wants(config, "volterra")) || command == "solve") {
                    const HomogeneousWalk base(config.walk.background());
                    table.add("volterra", config.targets, times,
                              sample_at(solve_backward(base, walk_perturbation(config), config.targets, grid), grid,
                                        times));
                }
                if ((all && wants(config, "laplace")) || command == "laplace") {
                    table.add("laplace", config.targets, times, run_laplace(config, times));
                }
                if ((all && wants(config, "oracle")) || command == "oracle") {
                    double leak = 0.0;
                    table.add("oracle", config.targets, times, run_oracle(config, times, leak));
                    summary["oracle_max_leak"] = leak;
                    if (leak > config.oracle_tol) {
                        summary["warnings"].push_back("oracle boundary leak " + format_double(leak) +
                                                      " exceeds oracle_tol; widen the window");
                    }
                }
            }
            result.csv = table.csv();
            double overall = 0.0;
            summary["max_discrepancy"] = table.discrepancies(overall);
            summary["max_discrepancy_overall"] = overall;
            summary["tolerances"] = {{"compare", config.tolerance}, {"oracle_tol", config.oracle_tol}};
            if (command == "compare" || command == "solve") {
                const bool pass = overall <= config.tolerance;
                summary["status"] = pass ? "pass" : "fail";
                if (!pass) result.status = 1;
            } else {
                summary["status"] = "ok";
            }
        } else {
            throw ConfigError("unknown command '" + command + "'");
        }
    } catch (const NumericalError& e) {
        result.status = 3;
        summary["status"] = "error";
        summary["partial"] = true;
        summary["error"] = e.what();
    }
    summary["wall_time_seconds"] = elapsed_seconds(start);
    return result;
}

}  // namespace semipert::cli
