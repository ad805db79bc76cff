#include "ckor/systems.hpp"

#include <cmath>
#include <iostream>

#include "ckor/error.hpp"
#include "ckor/rng.hpp"

namespace ckor {

ControlAffineOde duffing()
{
    ControlAffineOde ode;
    ode.name = "duffing";
    ode.state_dim = 2;
    ode.input_dim = 1;
    ode.drift = [](const Vector& x) {
        Vector f(2);
        f << x[1], x[0] - x[0] * x[0] * x[0] - 0.5 * x[1];
        return f;
    };
    ode.input_matrix = [](const Vector& x) {
        Matrix g(2, 1);
        g << 0.0, 2.0 + std::sin(x[0]);
        return g;
    };
    return ode;
}

ControlAffineOde van_der_pol()
{
    ControlAffineOde ode;
    ode.name = "van_der_pol";
    ode.state_dim = 2;
    ode.input_dim = 1;
    ode.drift = [](const Vector& x) {
        Vector f(2);
        f << x[1], -x[0] - 0.5 * x[1] * (1.0 - x[0] * x[0]);
        return f;
    };
    ode.input_matrix = [](const Vector& x) {
        Matrix g(2, 1);
        g << 0.0, x[0];
        return g;
    };
    return ode;
}

ControlAffineOde system_by_name(const std::string& name)
{
    if (name == "duffing") return duffing();
    if (name == "van_der_pol") return van_der_pol();
    throw InputError("unknown system '" + name + "'");
}

Vector van_der_pol_optimal_feedback(const Vector& x)
{
    Vector u(1);
    u[0] = -x[0] * x[1];
    return u;
}

bool Box::contains(const Vector& v) const
{
    return v.size() == lower.size() && (v.array() >= lower.array()).all() && (v.array() <= upper.array()).all();
}

void SimConfig::validate() const
{
    if (!(sample_time > 0.0)) throw InputError("sample time must be positive");
    if (substeps < 1) throw InputError("substeps must be at least 1");
}

Vector rk4_step(const ControlAffineOde& ode, const Vector& x, const Vector& u, double h)
{
    if (!(h > 0.0)) throw InputError("rk4_step: step must be positive");
    if (x.size() != ode.state_dim || u.size() != ode.input_dim) throw InputError("rk4_step: dimension mismatch");
    const Matrix g1 = ode.input_matrix(x);
    const Vector k1 = ode.drift(x) + g1 * u;
    const Vector x2 = x + 0.5 * h * k1;
    const Vector k2 = ode.drift(x2) + ode.input_matrix(x2) * u;
    const Vector x3 = x + 0.5 * h * k2;
    const Vector k3 = ode.drift(x3) + ode.input_matrix(x3) * u;
    const Vector x4 = x + h * k3;
    const Vector k4 = ode.drift(x4) + ode.input_matrix(x4) * u;
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

Vector advance(const ControlAffineOde& ode, Vector x, const Vector& u, const SimConfig& cfg, std::size_t step)
{
    const double h = cfg.sample_time / cfg.substeps;
    for (int s = 0; s < cfg.substeps; ++s) x = rk4_step(ode, x, u, h);
    if (!x.allFinite()) throw SimulationError("non-finite state", step);
    if (x.cwiseAbs().maxCoeff() > cfg.divergence_threshold) throw SimulationError("state diverged", step);
    return x;
}

}  // namespace

Matrix simulate(const ControlAffineOde& ode, const Vector& x0, const Eigen::Ref<const Matrix>& inputs,
                const SimConfig& cfg)
{
    cfg.validate();
    if (x0.size() != ode.state_dim) throw InputError("simulate: initial state has wrong dimension");
    if (inputs.rows() > 0 && inputs.cols() != ode.input_dim) throw InputError("simulate: input dimension mismatch");
    Matrix traj(inputs.rows() + 1, ode.state_dim);
    traj.row(0) = x0.transpose();
    Vector x = x0;
    bool warned = false;
    for (Index k = 0; k < inputs.rows(); ++k) {
        const Vector u = inputs.row(k).transpose();
        if (cfg.input_bounds && !warned && !cfg.input_bounds->contains(u)) {
            std::cerr << "warning: " << ode.name << ": input at step " << k << " outside declared bounds\n";
            warned = true;
        }
        x = advance(ode, x, u, cfg, static_cast<std::size_t>(k + 1));
        traj.row(k + 1) = x.transpose();
    }
    return traj;
}

Matrix initial_conditions(const InitialConditionSpec& spec, std::uint64_t seed)
{
    if (const auto* grid = std::get_if<GridInitialConditions>(&spec)) {
        const auto d = static_cast<Index>(grid->points_per_dim.size());
        if (d == 0 || grid->box.lower.size() != d || grid->box.upper.size() != d) {
            throw InputError("grid initial conditions: dimension mismatch");
        }
        Index total = 1;
        for (int p : grid->points_per_dim) {
            if (p < 1) throw InputError("grid initial conditions: need at least one point per dimension");
            total *= p;
        }
        Matrix out(total, d);
        // First coordinate varies slowest.
        for (Index i = 0; i < total; ++i) {
            Index rem = i;
            for (Index k = d - 1; k >= 0; --k) {
                const int p = grid->points_per_dim[static_cast<std::size_t>(k)];
                const Index j = rem % p;
                rem /= p;
                const double lo = grid->box.lower[k];
                const double hi = grid->box.upper[k];
                out(i, k) = p == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(j) / (p - 1);
            }
        }
        return out;
    }
    if (const auto* rnd = std::get_if<RandomInitialConditions>(&spec)) {
        const Index d = rnd->box.lower.size();
        if (rnd->box.upper.size() != d) throw InputError("random initial conditions: box dimension mismatch");
        Rng rng(seed);
        Matrix out(static_cast<Index>(rnd->count), d);
        for (Index i = 0; i < out.rows(); ++i)
            for (Index k = 0; k < d; ++k) out(i, k) = rng.uniform(rnd->box.lower[k], rnd->box.upper[k]);
        return out;
    }
    return std::get<ExplicitInitialConditions>(spec).states;
}

namespace {

Vector uniform_in(Rng& rng, const Box& box)
{
    Vector v(box.lower.size());
    for (Index k = 0; k < v.size(); ++k) v[k] = rng.uniform(box.lower[k], box.upper[k]);
    return v;
}

}  // namespace

SnapshotDataset generate_snapshots(const ControlAffineOde& ode, const TrajectorySpec& spec, const SimConfig& cfg,
                                   std::uint64_t seed)
{
    cfg.validate();
    if (spec.length < 1) throw InputError("trajectory length must be at least 1");
    // Initial conditions draw from their own stream so adding trajectories does not reshuffle inputs.
    const Matrix ics = initial_conditions(spec.initial_conditions, splitmix64(seed ^ 0x1C0FFEEULL));
    if (ics.cols() != ode.state_dim) throw InputError("initial conditions have wrong dimension");
    const Index n_traj = ics.rows();
    if (n_traj < 1) throw InputError("no initial conditions");
    const auto len = static_cast<Index>(spec.length);

    if (const auto* expl = std::get_if<ExplicitInput>(&spec.input_law)) {
        if (expl->inputs.rows() < len || expl->inputs.cols() != ode.input_dim) {
            throw InputError("explicit input sequence is shorter than the trajectory length or has wrong width");
        }
    }

    Matrix X(n_traj * len, ode.state_dim), U(n_traj * len, ode.input_dim), Xp(n_traj * len, ode.state_dim);
    for (Index t = 0; t < n_traj; ++t) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(t));
        Vector x = ics.row(t).transpose();
        for (Index k = 0; k < len; ++k) {
            Vector u(ode.input_dim);
            std::visit(
                [&](const auto& law) {
                    using Law = std::decay_t<decltype(law)>;
                    if constexpr (std::is_same_v<Law, UniformRandomInput>) {
                        u = uniform_in(rng, law.box);
                    } else if constexpr (std::is_same_v<Law, SinusoidInput>) {
                        const double time = static_cast<double>(k) * cfg.sample_time;
                        u.setConstant(law.amplitude * std::sin(law.angular_frequency * time + law.phase));
                    } else if constexpr (std::is_same_v<Law, FeedbackWithDisturbance>) {
                        u = law.feedback(x) + uniform_in(rng, law.disturbance);
                    } else {
                        u = law.inputs.row(k).transpose();
                    }
                },
                spec.input_law);
            if (u.size() != ode.input_dim) throw InputError("input law produced wrong input dimension");
            const Index row = t * len + k;
            X.row(row) = x.transpose();
            U.row(row) = u.transpose();
            try {
                x = advance(ode, x, u, cfg, static_cast<std::size_t>(k + 1));
            } catch (const SimulationError& e) {
                throw SimulationError("trajectory " + std::to_string(t) + ": " + e.what(), e.step());
            }
            Xp.row(row) = x.transpose();
        }
    }
    return SnapshotDataset(std::move(X), std::move(U), std::move(Xp),
                           std::vector<std::size_t>(static_cast<std::size_t>(n_traj), spec.length));
}

}  // namespace ckor
