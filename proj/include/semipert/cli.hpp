#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semipert/coord_ops.hpp"
#include "semipert/laplace.hpp"

namespace semipert::cli {

/// Invalid configuration. The message names the offending line or field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    RateField walk;
    double t_max = 1.0;
    double h = 0.01;
    std::vector<double> output_times;  // empty: eleven evenly spaced grid nodes
    std::vector<SitePair> targets;
    Site window = 60;
    InversionScheme inversion = InversionScheme::talbot();
    double oracle_tol = 1e-10;
    double tolerance = 1e-3;  // compare: pass threshold on the max discrepancy
    std::string method = "all";

    // convergence
    std::vector<Site> radii;
    L1Vector q0 = L1Vector::delta(0);

    // bessel
    int bessel_n_max = 10;
    std::vector<double> bessel_x{0.5, 1.0, 2.0, 5.0, 10.0};

    nlohmann::json source;  // parsed document, echoed in summaries
};

/// Command-line values that override the file.
struct Overrides {
    std::optional<std::string> method;
    std::optional<double> h;
    std::optional<double> t_max;
    std::optional<Site> window;
    std::optional<int> talbot_m;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void apply_overrides(RunConfig& config, const Overrides& overrides);
/// Cross-field checks; throws ConfigError.
void validate(const RunConfig& config);

/// Output times snapped to grid nodes.
std::vector<double> resolved_times(const RunConfig& config);

struct RunOutput {
    int status = 0;  // 0 ok, 1 compare failed its tolerance, 3 numerical failure
    std::string csv;
    nlohmann::json summary;
};

/// Commands: solve, laplace, oracle, compare, convergence, bessel.
RunOutput run(const std::string& command, const RunConfig& config);

/// 17 significant digits; used for every CSV cell.
std::string format_double(double v);

}  // namespace semipert::cli
