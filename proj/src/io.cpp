#include "mfv/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

namespace mfv {

namespace {

const Json& field(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(std::string("missing required field \"") + key + "\"");
    return j.at(key);
}

double number(const Json& j, const char* what)
{
    if (!j.is_number())
        throw ConfigError(std::string(what) + " must be a number");
    return j.get<double>();
}

double number_field(const Json& j, const char* key)
{
    return number(field(j, key), key);
}

double number_or(const Json& j, const char* key, double fallback)
{
    return j.contains(key) ? number_field(j, key) : fallback;
}

// A bare number is a 1-vector.
Eigen::VectorXd vector_from_json(const Json& j, const char* what)
{
    if (j.is_number())
        return Eigen::VectorXd::Constant(1, j.get<double>());
    if (!j.is_array() || j.empty())
        throw ConfigError(std::string(what) + " must be a number or a nonempty array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k)
        v(static_cast<Eigen::Index>(k)) = number(j[k], what);
    return v;
}

std::vector<Eigen::VectorXd> vectors_from_json(const Json& j, const char* what)
{
    if (!j.is_array() || j.empty())
        throw ConfigError(std::string(what) + " must be a nonempty array");
    std::vector<Eigen::VectorXd> out;
    for (const auto& item : j)
        out.push_back(vector_from_json(item, what));
    return out;
}

Json vector_to_json(const Eigen::VectorXd& v)
{
    Json out = Json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k)
        out.push_back(v(k));
    return out;
}

} // namespace

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& value)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << value.dump(2) << '\n';
}

AtomicMeasure measure_from_json(const Json& j)
{
    const std::vector<Eigen::VectorXd> coords = vectors_from_json(field(j, "atoms"), "atoms");
    std::vector<TorusPoint> atoms;
    for (const auto& c : coords)
        atoms.emplace_back(c);
    if (j.contains("d")) {
        const Json& d = j.at("d");
        if (!d.is_number_unsigned() || d.get<std::size_t>() != atoms.front().dim())
            throw ConfigError("measure field \"d\" does not match the atom dimension");
    }
    if (!j.contains("weights"))
        return AtomicMeasure::uniform(atoms);
    const Eigen::VectorXd w = vector_from_json(j.at("weights"), "weights");
    if (static_cast<std::size_t>(w.size()) != atoms.size())
        throw ConfigError("measure needs one weight per atom");
    return AtomicMeasure(atoms, w);
}

Json to_json(const AtomicMeasure& m)
{
    Json atoms = Json::array();
    for (const auto& x : m.atoms())
        atoms.push_back(vector_to_json(x.coords()));
    return {{"d", m.dim()}, {"atoms", atoms}, {"weights", vector_to_json(m.weights())}};
}

LiftedMeasure lifted_from_json(const Json& j)
{
    const AtomicMeasure base = measure_from_json(field(j, "base"));
    const Json& fibers = field(j, "fibers");
    if (!fibers.is_array())
        throw ConfigError("fibers must be an array");
    std::vector<Fiber> out(base.size());
    std::vector<bool> seen(base.size(), false);
    for (const auto& f : fibers) {
        const Json& index = field(f, "atom");
        std::optional<std::size_t> atom;
        if (index.is_number_unsigned() && index.get<std::size_t>() < base.size())
            atom = index.get<std::size_t>();
        else if (!index.is_number_integer())
            atom = base.find(TorusPoint(vector_from_json(index, "atom")));
        if (!atom)
            throw ConfigError("fiber atom must be a base atom index or the coordinates of a base atom");
        if (seen[*atom])
            throw ConfigError("base atom has more than one fiber");
        const std::vector<Eigen::VectorXd> vel = vectors_from_json(field(f, "velocities"), "velocities");
        Eigen::MatrixXd V(vel.front().size(), static_cast<Eigen::Index>(vel.size()));
        for (std::size_t k = 0; k < vel.size(); ++k) {
            require_same_dim(base.dim(), static_cast<std::size_t>(vel[k].size()));
            V.col(static_cast<Eigen::Index>(k)) = vel[k];
        }
        const Eigen::VectorXd w = f.contains("weights")
                                      ? vector_from_json(f.at("weights"), "weights")
                                      : Eigen::VectorXd::Constant(V.cols(), 1.0 / static_cast<double>(V.cols()));
        if (w.size() != V.cols())
            throw ConfigError("fiber needs one weight per velocity");
        out[*atom] = make_fiber(V, w);
        seen[*atom] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ConfigError("every base atom needs a fiber");
    return LiftedMeasure(base, std::move(out));
}

Json to_json(const LiftedMeasure& b)
{
    Json fibers = Json::array();
    for (std::size_t i = 0; i < b.base().size(); ++i) {
        const Fiber& f = b.fiber(i);
        Json vel = Json::array();
        for (std::size_t k = 0; k < f.size(); ++k)
            vel.push_back(vector_to_json(f.velocity(k)));
        fibers.push_back({{"atom", i},
                          {"velocities", vel},
                          {"weights", vector_to_json(f.weights)}});
    }
    return {{"base", to_json(b.base())}, {"fibers", fibers}};
}

ControlSystem system_from_json(const Json& j)
{
    const Json& name = field(j, "name");
    if (!name.is_string())
        throw ConfigError("system name must be a string");
    std::vector<Eigen::VectorXd> controls = vectors_from_json(field(j, "controls"), "controls");
    const std::string n = name.get<std::string>();
    if (n == "constant-controls")
        return constant_controls(std::move(controls));
    if (n == "mean-drift")
        return mean_drift(number_field(j, "kappa"), std::move(controls));
    throw ConfigError("unknown system \"" + n + "\" (expected constant-controls or mean-drift)");
}

SetOracle oracle_from_json(const Json& j)
{
    const Json& kind = field(j, "kind");
    if (!kind.is_string())
        throw ConfigError("K kind must be a string");
    const std::string k = kind.get<std::string>();
    if (k == "finite-set") {
        const Json& members = field(j, "members");
        if (!members.is_array() || members.empty())
            throw ConfigError("finite-set K needs a nonempty members array");
        std::vector<AtomicMeasure> out;
        for (const auto& m : members)
            out.push_back(measure_from_json(m));
        return SetOracle::finite(std::move(out), number_or(j, "resolution", 1e-12));
    }
    if (k == "dirac-pair-family")
        return SetOracle::dirac_pair(TorusPoint(vector_from_json(field(j, "center"), "center")),
                                     vector_from_json(field(j, "direction"), "direction"),
                                     number_field(j, "epsilon"), number_field(j, "resolution"));
    if (k == "parametric-curve") {
        const Json& curve = field(j, "curve");
        if (curve != "translate")
            throw ConfigError("parametric-curve supports curve = \"translate\"");
        return SetOracle::translated(measure_from_json(field(j, "base")),
                                     vector_from_json(field(j, "direction"), "direction"),
                                     number_field(j, "t_min"), number_field(j, "t_max"),
                                     number_field(j, "resolution"));
    }
    throw ConfigError("unknown K kind \"" + k + "\"");
}

Json to_json(const TangencyReport& report)
{
    Json out = {{"taus", report.taus},
                {"ratios", report.ratios},
                {"verdict", to_string(report.verdict)},
                {"threshold", report.threshold}};
    if (!report.diagnostic.empty())
        out["diagnostic"] = report.diagnostic;
    return out;
}

std::string format_g17(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_flow_csv(std::ostream& out, const SolveResult& result)
{
    out << "t,dist_to_K,residual\n";
    for (const auto& d : result.diagnostics)
        out << format_g17(d.t) << ',' << format_g17(d.dist_to_K) << ',' << format_g17(d.aumann) << '\n';
}

} // namespace mfv
