#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ckor/data.hpp"
#include "ckor/types.hpp"

namespace ckor {

/// Continuous-time control-affine system x' = f(x) + sum_j g_j(x) u_j.
struct ControlAffineOde {
    std::string name;
    Index state_dim = 0;
    Index input_dim = 0;
    std::function<Vector(const Vector&)> drift;
    /// Columns are the input channels g_j(x); shape state_dim x input_dim.
    std::function<Matrix(const Vector&)> input_matrix;

    Vector operator()(const Vector& x, const Vector& u) const { return drift(x) + input_matrix(x) * u; }
};

/// Controlled damped Duffing oscillator.
ControlAffineOde duffing();

/// Van der Pol oscillator with the state-multiplied input x1 * u (linearly uncontrollable at 0).
ControlAffineOde van_der_pol();

/// Look up a built-in system by name ("duffing", "van_der_pol").
ControlAffineOde system_by_name(const std::string& name);

struct Box {
    Vector lower;
    Vector upper;

    bool contains(const Vector& v) const;
};

struct SimConfig {
    double sample_time = 0.01;
    int substeps = 1;
    std::optional<Box> input_bounds;
    /// Infinity-norm threshold treated as divergence.
    double divergence_threshold = 1e6;

    void validate() const;
};

/// One classical RK4 step with u held constant.
Vector rk4_step(const ControlAffineOde& ode, const Vector& x, const Vector& u, double h);

/// States at the sample instants: inputs.rows() + 1 rows, first row x0.
/// Each row of `inputs` is held over one sample interval.
Matrix simulate(const ControlAffineOde& ode, const Vector& x0, const Eigen::Ref<const Matrix>& inputs,
                const SimConfig& cfg);

// ---------------------------------------------------------------- data generation

/// Equidistant tensor grid with `points_per_dim` points per coordinate over [lower, upper].
struct GridInitialConditions {
    std::vector<int> points_per_dim;
    Box box;
};

/// `count` points uniform in the box.
struct RandomInitialConditions {
    std::size_t count = 0;
    Box box;
};

struct ExplicitInitialConditions {
    Matrix states;  // one initial condition per row
};

using InitialConditionSpec = std::variant<GridInitialConditions, RandomInitialConditions, ExplicitInitialConditions>;

/// Row-wise list of initial conditions.
Matrix initial_conditions(const InitialConditionSpec& spec, std::uint64_t seed);

/// i.i.d. uniform inputs in a box, redrawn each sample.
struct UniformRandomInput {
    Box box;
};

/// u(t) = amplitude * sin(angular_frequency * t + phase), same for every channel.
struct SinusoidInput {
    double amplitude = 1.0;
    double angular_frequency = 1.0;
    double phase = 0.0;
};

/// State feedback plus i.i.d. uniform disturbance.
struct FeedbackWithDisturbance {
    std::function<Vector(const Vector&)> feedback;
    Box disturbance;
};

/// Explicit sequence, one row per sample (shorter sequences are an error).
struct ExplicitInput {
    Matrix inputs;
};

using InputLaw = std::variant<UniformRandomInput, SinusoidInput, FeedbackWithDisturbance, ExplicitInput>;

/// The known optimal feedback u = -x1 * x2 for the Van der Pol example.
Vector van_der_pol_optimal_feedback(const Vector& x);

struct TrajectorySpec {
    InitialConditionSpec initial_conditions;
    InputLaw input_law;
    std::size_t length = 0;  // snapshots per trajectory
};

/// Concatenated (x_k, u_k, x_{k+1}) triples for every initial condition, one
/// segment per trajectory. Trajectory i draws from Rng::derive(seed, i).
SnapshotDataset generate_snapshots(const ControlAffineOde& ode, const TrajectorySpec& spec, const SimConfig& cfg,
                                   std::uint64_t seed);

}  // namespace ckor
