#include "mfv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mfv {

std::string to_string(SolveMode mode)
{
    return mode == SolveMode::ForwardSelector ? "forward" : "viable";
}

Selector control_selector(const ControlSystem& sys, std::size_t k)
{
    if (k >= sys.controls.size())
        throw Error("selector control index " + std::to_string(k) + " is out of range");
    return [&sys, k](const TorusPoint& x, const AtomicMeasure& m) { return sys.field(x, m, sys.controls[k]); };
}

Selector barycenter_selector(const ControlSystem& sys)
{
    return [&sys](const TorusPoint& x, const AtomicMeasure& m) {
        return Velocity(vectogram(sys, x, m).vertices.rowwise().mean());
    };
}

double SolveResult::step() const
{
    const auto& grid = bundle.grid();
    return grid.size() < 2 ? 0.0 : grid[1] - grid[0];
}

double SolveResult::max_dist_to_K() const
{
    double out = 0.0;
    for (const auto& d : diagnostics)
        out = std::max(out, d.dist_to_K);
    return out;
}

namespace {

std::string describe(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

} // namespace

ViabilityViolation::ViabilityViolation(std::size_t step, AtomicMeasure nu, double score)
    : Error("viability condition violated at step " + std::to_string(step) + " (best tangency ratio " +
            describe(score) + ")"),
      step_(step), nu_(std::move(nu)), score_(score)
{
}

namespace {

void check_config(const AtomicMeasure& m0, const ControlSystem& sys, const SolveConfig& cfg)
{
    require_same_dim(sys.dim, m0.dim());
    if (!(cfg.horizon > 0))
        throw Error("solver horizon must be positive");
    if (cfg.steps == 0)
        throw Error("solver needs at least one step");
    if (cfg.max_trajectories == 0)
        throw Error("trajectory cap must be positive");
}

std::vector<double> uniform_grid(double horizon, std::size_t steps)
{
    std::vector<double> grid(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j)
        grid[j] = horizon * static_cast<double>(j) / static_cast<double>(steps);
    return grid;
}

// Particle state shared by both schemes: polylines under construction.
struct Particles
{
    std::vector<Trajectory> paths;
    std::vector<double> weights;

    static Particles from(const AtomicMeasure& m0)
    {
        Particles p;
        for (std::size_t i = 0; i < m0.size(); ++i) {
            Trajectory t;
            t.points.push_back(m0.atom(i));
            p.paths.push_back(std::move(t));
            p.weights.push_back(m0.weight(i));
        }
        return p;
    }

    Eigen::VectorXd weight_vector() const
    {
        return Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    }

    AtomicMeasure current() const
    {
        std::vector<TorusPoint> ends;
        ends.reserve(paths.size());
        for (const auto& p : paths)
            ends.push_back(p.back());
        return AtomicMeasure(ends, weight_vector());
    }

    // Atom index of every trajectory endpoint in m.
    std::vector<std::size_t> atoms_in(const AtomicMeasure& m) const
    {
        std::vector<std::size_t> out;
        out.reserve(paths.size());
        for (const auto& p : paths) {
            const auto a = m.find(p.back(), 2.0 * kMergeTolerance);
            if (!a)
                throw Error("internal error: trajectory endpoint is not an atom of the current measure");
            out.push_back(*a);
        }
        return out;
    }
};

// Merges the lightest trajectories sharing an endpoint into the heaviest one
// there until at most cap remain. Returns the added merge error.
double enforce_cap(Particles& particles, std::size_t cap, std::size_t& merges)
{
    const std::size_t count = particles.paths.size();
    if (count <= cap)
        return 0.0;
    const AtomicMeasure m = particles.current();
    const std::vector<std::size_t> atom = particles.atoms_in(m);

    std::vector<std::size_t> heaviest(m.size(), count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t& h = heaviest[atom[i]];
        if (h == count || particles.weights[i] > particles.weights[h])
            h = i;
    }
    std::vector<std::size_t> mergeable;
    for (std::size_t i = 0; i < count; ++i)
        if (heaviest[atom[i]] != i)
            mergeable.push_back(i);
    const std::size_t excess = count - cap;
    if (mergeable.size() < excess)
        throw SizeLimitError("trajectory count " + std::to_string(count) + " exceeds the cap of " +
                             std::to_string(cap) + " and too few trajectories share endpoints");
    std::stable_sort(mergeable.begin(), mergeable.end(), [&](std::size_t a, std::size_t b) {
        return particles.weights[a] < particles.weights[b];
    });

    double error = 0.0;
    std::vector<bool> removed(count, false);
    for (std::size_t q = 0; q < excess; ++q) {
        const std::size_t i = mergeable[q];
        const std::size_t h = heaviest[atom[i]];
        double gap = 0.0;
        for (std::size_t k = 0; k < particles.paths[i].points.size(); ++k)
            gap = std::max(gap, torus_distance(particles.paths[i].points[k], particles.paths[h].points[k]));
        error += particles.weights[i] * gap;
        particles.weights[h] += particles.weights[i];
        removed[i] = true;
    }
    Particles kept;
    for (std::size_t i = 0; i < count; ++i) {
        if (removed[i])
            continue;
        kept.paths.push_back(std::move(particles.paths[i]));
        kept.weights.push_back(particles.weights[i]);
    }
    particles = std::move(kept);
    merges += excess;
    return error;
}

double step_aumann_residual(const Velocity& displacement, double dt, const VectogramVertices& verts)
{
    return dist_to_step_aumann(displacement, {AumannPiece{dt, verts}});
}

SolveResult finish(SolveMode mode, Particles particles, const std::vector<double>& grid,
                   std::vector<GridDiagnostics> diagnostics)
{
    SolveResult result;
    result.mode = mode;
    result.bundle = PathBundle(grid, std::move(particles.paths), particles.weight_vector());
    for (double t : grid)
        result.flow.push_back(evaluate(result.bundle, t));
    result.diagnostics = std::move(diagnostics);
    return result;
}

} // namespace

SolveResult solve_forward(const AtomicMeasure& m0, const ControlSystem& sys, const SolveConfig& cfg,
                          const SetOracle* K)
{
    check_config(m0, sys, cfg);
    if (!cfg.selector)
        throw Error("forward mode needs a selector");
    const std::vector<double> grid = uniform_grid(cfg.horizon, cfg.steps);
    const double dt = grid[1] - grid[0];

    Particles particles = Particles::from(m0);
    std::vector<GridDiagnostics> diagnostics(grid.size());
    for (std::size_t j = 0; j < cfg.steps; ++j) {
        const AtomicMeasure mu = particles.current();
        const std::vector<std::size_t> atom = particles.atoms_in(mu);
        GridDiagnostics& diag = diagnostics[j];
        diag.t = grid[j];
        if (K)
            diag.dist_to_K = K->nearest(mu).distance;

        std::vector<Velocity> velocity(mu.size());
        std::vector<VectogramVertices> verts(mu.size());
        for (std::size_t a = 0; a < mu.size(); ++a) {
            verts[a] = vectogram(sys, mu.atom(a), mu);
            velocity[a] = cfg.selector(mu.atom(a), mu);
            const double gap = dist_to_vectogram(velocity[a], verts[a]);
            if (gap > 1e-9)
                throw Error("selector leaves the vectogram at step " + std::to_string(j) + ", atom " +
                            std::to_string(a) + " (distance " + describe(gap) + ")");
            diag.feasibility += mu.weight(a) * gap;
        }
        for (std::size_t i = 0; i < particles.paths.size(); ++i) {
            Trajectory& path = particles.paths[i];
            const Velocity dx = dt * velocity[atom[i]];
            path.points.push_back(translate(path.back(), dx, 1.0));
            path.displacements.push_back(dx);
            diag.aumann += particles.weights[i] * step_aumann_residual(dx, dt, verts[atom[i]]);
        }
    }
    diagnostics.back().t = grid.back();
    if (K)
        diagnostics.back().dist_to_K = K->nearest(particles.current()).distance;
    return finish(SolveMode::ForwardSelector, std::move(particles), grid, std::move(diagnostics));
}

SolveResult solve_viable(const AtomicMeasure& m0, const ControlSystem& sys, const SetOracle& K,
                         const SolveConfig& cfg)
{
    check_config(m0, sys, cfg);
    require_same_dim(K.dim(), m0.dim());
    const std::vector<double> grid = uniform_grid(cfg.horizon, cfg.steps);
    const double dt = grid[1] - grid[0];
    if (sys.bound_R > 0 && dt > 0.5 * K.resolution() / sys.bound_R * (1.0 + 1e-12))
        throw Error("step T/n = " + describe(dt) + " exceeds resolution / (2 R) = " +
                    describe(0.5 * K.resolution() / sys.bound_R) + "; increase n or the oracle resolution");
    const double start_distance = K.nearest(m0).distance;
    if (start_distance > K.resolution() + 1e-12)
        throw Error("initial measure is not in K: dist(m0, K) = " + describe(start_distance));

    const double tau0 = std::ldexp(dt, cfg.witness.levels - 1);
    std::vector<std::string> warnings;
    const std::vector<AtomicMeasure> probes = K.samples(cfg.condition_samples);
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const ConditionResult probe = viability_condition_check(probes[k], K, sys, tau0, cfg.witness);
        if (!probe.found)
            warnings.push_back("condition not found at K sample " + std::to_string(k) + " (score " +
                               describe(probe.score) + ")");
    }

    Particles particles = Particles::from(m0);
    std::vector<GridDiagnostics> diagnostics(grid.size());
    double merge_error = 0.0;
    std::size_t merges = 0;
    for (std::size_t j = 0; j < cfg.steps; ++j) {
        const AtomicMeasure mu = particles.current();
        GridDiagnostics& diag = diagnostics[j];
        diag.t = grid[j];
        const NearestMeasure near = K.nearest(mu);
        diag.dist_to_K = near.distance;
        const AtomicMeasure& nu = near.witness;

        const ConditionResult cond = viability_condition_check(nu, K, sys, tau0, cfg.witness);
        diag.witness_score = cond.score;
        if (!cond.found)
            throw ViabilityViolation(j, nu, cond.score);

        const WassersteinResult coupling = wasserstein1(mu, nu);
        diag.coupling = coupling.distance;
        const LiftedMeasure lift = compose(coupling.plan, cond.witness);
        diag.feasibility = feasibility_residual(lift, sys);

        std::vector<VectogramVertices> verts(mu.size());
        for (std::size_t a = 0; a < mu.size(); ++a)
            verts[a] = vectogram(sys, mu.atom(a), mu);

        const std::vector<std::size_t> atom = particles.atoms_in(mu);
        Particles next;
        for (std::size_t i = 0; i < particles.paths.size(); ++i) {
            const Fiber& fiber = lift.fiber(atom[i]);
            for (std::size_t k = 0; k < fiber.size(); ++k) {
                Trajectory path = particles.paths[i];
                const Velocity dx = dt * fiber.velocity(k);
                path.points.push_back(translate(path.back(), dx, 1.0));
                path.displacements.push_back(dx);
                const double w = particles.weights[i] * fiber.weights(static_cast<Eigen::Index>(k));
                diag.aumann += w * step_aumann_residual(dx, dt, verts[atom[i]]);
                next.paths.push_back(std::move(path));
                next.weights.push_back(w);
            }
        }
        particles = std::move(next);
        merge_error += enforce_cap(particles, cfg.max_trajectories, merges);
    }
    diagnostics.back().t = grid.back();
    diagnostics.back().dist_to_K = K.nearest(particles.current()).distance;

    SolveResult result =
        finish(SolveMode::ViableTracking, std::move(particles), grid, std::move(diagnostics));
    for (std::size_t j = 1; j < cfg.steps; ++j)
        result.coupling_rate = std::max(result.coupling_rate, result.diagnostics[j].coupling / grid[j]);
    result.merge_error = merge_error;
    result.merges = merges;
    result.warnings = std::move(warnings);
    return result;
}

double solution_residual(const SolveResult& result, const ControlSystem& sys, double s, double r)
{
    const PathBundle& chi = result.bundle;
    const std::size_t ks = chi.node_index(s);
    const std::size_t kr = chi.node_index(r);
    if (ks >= kr)
        throw Error("solution residual needs s < r");
    const auto& grid = chi.grid();

    std::vector<std::vector<VectogramVertices>> verts(kr - ks);
    for (std::size_t k = ks; k < kr; ++k) {
        const AtomicMeasure& m = result.flow[k];
        for (std::size_t i = 0; i < chi.size(); ++i)
            verts[k - ks].push_back(vectogram(sys, chi.path(i).points[k], m));
    }

    double total = 0.0;
    for (std::size_t i = 0; i < chi.size(); ++i) {
        double local = 0.0;
        for (std::size_t a = ks; a < kr; a += kMaxAumannPieces) {
            const std::size_t b = std::min(a + kMaxAumannPieces, kr);
            std::vector<AumannPiece> pieces;
            for (std::size_t k = a; k < b; ++k)
                pieces.push_back({grid[k + 1] - grid[k], verts[k - ks][i]});
            local += dist_to_step_aumann(chi.cover_displacement(i, grid[a], grid[b]), pieces);
        }
        total += chi.weight(i) * local;
    }
    return total;
}

} // namespace mfv
