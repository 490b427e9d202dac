#pragma once

// JSON readers/writers for measures, lifted measures, control systems,
// constraint-set specs and reports; CSV writers for solver traces.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mfv/solver.hpp"

namespace mfv {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Malformed or inconsistent configuration.
class ConfigError : public Error
{
public:
    using Error::Error;
};

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

// {"d": d, "atoms": [[x_1..x_d], ...], "weights": [...]}. Bare numbers are
// accepted as atoms when d = 1; "d" is optional; missing weights mean uniform.
AtomicMeasure measure_from_json(const Json& j);
Json to_json(const AtomicMeasure& m);

// {"base": <measure>, "fibers": [{"atom": i, "velocities": [[...]], "weights": [...]}]}.
// "atom" is a base atom index, or that atom's coordinates; every atom needs one fiber.
LiftedMeasure lifted_from_json(const Json& j);
Json to_json(const LiftedMeasure& b);

// {"name": "constant-controls", "controls": [...]} or
// {"name": "mean-drift", "kappa": k, "controls": [...]}.
ControlSystem system_from_json(const Json& j);

// {"kind": "finite-set", "members": [...], "resolution": r}
// {"kind": "dirac-pair-family", "center": c, "direction": e, "epsilon": eps, "resolution": r}
// {"kind": "parametric-curve", "curve": "translate", "base": m, "direction": e,
//  "t_min": a, "t_max": b, "resolution": r}
SetOracle oracle_from_json(const Json& j);

Json to_json(const TangencyReport& report);

// t,dist_to_K,residual per grid time.
void write_flow_csv(std::ostream& out, const SolveResult& result);

std::string format_g17(double x);

} // namespace mfv
