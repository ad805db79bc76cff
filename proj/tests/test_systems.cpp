#include <doctest.h>

#include <cmath>
#include <limits>

#include "ckor/error.hpp"
#include "ckor/systems.hpp"
#include "support.hpp"

using namespace ckor;
using test::max_abs;

namespace {

Vector v2(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

ControlAffineOde decay()
{
    ControlAffineOde ode;
    ode.name = "decay";
    ode.state_dim = 1;
    ode.input_dim = 1;
    ode.drift = [](const Vector& x) -> Vector { return -x; };
    ode.input_matrix = [](const Vector&) -> Matrix { return Matrix::Zero(1, 1); };
    return ode;
}

double decay_error(double h)
{
    SimConfig cfg;
    cfg.sample_time = h;
    const auto steps = static_cast<Index>(std::llround(1.0 / h));
    const Matrix traj = simulate(decay(), Vector::Ones(1), Matrix::Zero(steps, 1), cfg);
    return std::abs(traj(steps, 0) - std::exp(-1.0));
}

}  // namespace

TEST_CASE("duffing vector field at hand-evaluated points")
{
    const ControlAffineOde d = duffing();
    CHECK(d.drift(v2(0, 0)) == v2(0, 0));
    CHECK(d.input_matrix(v2(0, 0)) == Matrix(v2(0, 2)));
    CHECK(d.drift(v2(1, 0)) == v2(0, 0));
    CHECK(max_abs(d.drift(v2(2, 1)) - v2(1, -6.5)) <= 1e-15);
}

TEST_CASE("van der pol vector field at hand-evaluated points")
{
    const ControlAffineOde v = van_der_pol();
    CHECK(v.drift(v2(0, 0)) == v2(0, 0));
    CHECK(v.input_matrix(v2(0, 0.7)) == Matrix(v2(0, 0)));
    CHECK(max_abs(v.drift(v2(1, 1)) - v2(1, -1)) <= 1e-15);
    CHECK(van_der_pol_optimal_feedback(v2(2, 3))[0] == -6.0);
}

TEST_CASE("system lookup by name")
{
    CHECK(system_by_name("duffing").name == duffing().name);
    CHECK(system_by_name("van_der_pol").state_dim == 2);
    CHECK_THROWS(system_by_name("pendulum"));
}

TEST_CASE("rk4 step on exponential decay")
{
    const Vector x = rk4_step(decay(), Vector::Ones(1), Vector::Zero(1), 0.01);
    CHECK(x[0] == doctest::Approx(std::exp(-0.01)).epsilon(1e-10));
    CHECK(std::abs(x[0] - 0.990049834) <= 1e-9);
}

TEST_CASE("rk4 converges with order four")
{
    const double e1 = decay_error(0.02);
    const double e2 = decay_error(0.01);
    const double e3 = decay_error(0.005);
    CHECK(e1 / e2 >= 12.0);
    CHECK(e2 / e3 >= 12.0);
    CHECK(std::log2(e1 / e2) >= 3.9);
    CHECK(std::log2(e2 / e3) >= 3.9);
}

TEST_CASE("duffing equilibrium is preserved")
{
    const Vector x = rk4_step(duffing(), v2(1, 0), Vector::Zero(1), 0.01);
    CHECK(max_abs(x - v2(1, 0)) <= 1e-15);
    SimConfig cfg;
    const Matrix traj = simulate(duffing(), v2(1, 0), Matrix::Zero(250, 1), cfg);
    CHECK(max_abs(traj.rowwise() - v2(1, 0).transpose()) <= 1e-14);
}

TEST_CASE("zero-length input yields only the initial state")
{
    const Matrix traj = simulate(duffing(), v2(0.3, -0.2), Matrix::Zero(0, 1), SimConfig{});
    REQUIRE(traj.rows() == 1);
    CHECK(traj.row(0) == v2(0.3, -0.2).transpose());
}

TEST_CASE("duffing rollout matches the refined-integration golden state")
{
    SimConfig cfg;
    cfg.sample_time = 0.01;
    const Matrix traj = simulate(duffing(), v2(1, 1), Matrix::Zero(100, 1), cfg);
    // RK4 with 100 substeps per sample, pinned.
    const Vector golden = v2(1.4291024947766728, -0.32303297645051982);
    CHECK(max_abs(traj.row(100).transpose() - golden) <= 1e-6);

    SimConfig fine = cfg;
    fine.substeps = 100;
    const Matrix ref = simulate(duffing(), v2(1, 1), Matrix::Zero(100, 1), fine);
    CHECK(max_abs(ref.row(100).transpose() - golden) <= 1e-12);
}

TEST_CASE("simulate with one substep composes rk4 steps exactly")
{
    Rng rng(12);
    const Matrix inputs = test::uniform_matrix(rng, 40, 1, -2.0, 2.0);
    SimConfig cfg;
    cfg.sample_time = 0.05;
    const ControlAffineOde ode = van_der_pol();
    const Matrix traj = simulate(ode, v2(0.5, -1), inputs, cfg);
    Vector x = v2(0.5, -1);
    for (Index k = 0; k < inputs.rows(); ++k) {
        x = rk4_step(ode, x, inputs.row(k).transpose(), 0.05);
        CHECK(traj.row(k + 1) == x.transpose());
    }
}

TEST_CASE("divergence and non-finite states raise simulation errors")
{
    ControlAffineOde blow;
    blow.name = "blow";
    blow.state_dim = 1;
    blow.input_dim = 1;
    blow.drift = [](const Vector& x) -> Vector { return x.array().square().matrix(); };
    blow.input_matrix = [](const Vector&) -> Matrix { return Matrix::Zero(1, 1); };
    SimConfig cfg;
    cfg.sample_time = 0.1;
    CHECK_THROWS_AS(simulate(blow, Vector::Constant(1, 5.0), Matrix::Zero(100, 1), cfg), SimulationError);

    ControlAffineOde nan_ode = decay();
    nan_ode.drift = [](const Vector& x) -> Vector {
        return Vector::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
    };
    CHECK_THROWS_AS(simulate(nan_ode, Vector::Ones(1), Matrix::Zero(3, 1), cfg), SimulationError);
}

TEST_CASE("inputs outside the declared bounds warn but still simulate")
{
    SimConfig cfg;
    cfg.input_bounds = Box{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
    Matrix traj;
    CHECK_NOTHROW(traj = simulate(duffing(), v2(0, 0), Matrix::Constant(3, 1, 2.0), cfg));
    CHECK(traj == simulate(duffing(), v2(0, 0), Matrix::Constant(3, 1, 2.0), SimConfig{}));
}

TEST_CASE("one trajectory of length three has the shift structure")
{
    TrajectorySpec spec;
    spec.initial_conditions = ExplicitInitialConditions{Matrix(v2(0.5, 0.5).transpose())};
    spec.input_law = UniformRandomInput{Box{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)}};
    spec.length = 3;
    const SnapshotDataset ds = generate_snapshots(duffing(), spec, SimConfig{}, 4);
    REQUIRE(ds.size() == 3);
    CHECK(ds.segments == std::vector<std::size_t>{3});
    for (Index i = 0; i + 1 < 3; ++i) CHECK(ds.X_plus.row(i) == ds.X.row(i + 1));
    CHECK(ds.X.row(0) == v2(0.5, 0.5).transpose());
}

TEST_CASE("14 by 14 grid yields 196 initial conditions on the box")
{
    const GridInitialConditions grid{{14, 14}, Box{v2(-2.25, -2.25), v2(2.25, 2.25)}};
    const Matrix ics = initial_conditions(grid, 0);
    CHECK(ics.rows() == 196);
    CHECK(ics.cwiseAbs().maxCoeff() == 2.25);
    CHECK(ics.col(0).minCoeff() == -2.25);
}

TEST_CASE("generated datasets are deterministic and shift-structured per segment")
{
    TrajectorySpec spec;
    spec.initial_conditions = RandomInitialConditions{5, Box{v2(-2, -2), v2(2, 2)}};
    spec.input_law = UniformRandomInput{Box{Vector::Constant(1, -2.0), Vector::Constant(1, 2.0)}};
    spec.length = 20;
    const SnapshotDataset a = generate_snapshots(duffing(), spec, SimConfig{}, 99);
    const SnapshotDataset b = generate_snapshots(duffing(), spec, SimConfig{}, 99);
    const SnapshotDataset c = generate_snapshots(duffing(), spec, SimConfig{}, 100);
    CHECK(a.X == b.X);
    CHECK(a.U == b.U);
    CHECK(a.X_plus == b.X_plus);
    CHECK(a.X != c.X);
    REQUIRE(a.segments.size() == 5);
    const auto offsets = a.segment_offsets();
    for (std::size_t s = 0; s < 5; ++s) {
        for (std::size_t i = 0; i + 1 < a.segments[s]; ++i) {
            const auto r = static_cast<Index>(offsets[s] + i);
            CHECK(a.X_plus.row(r) == a.X.row(r + 1));
        }
    }
    CHECK(a.U.cwiseAbs().maxCoeff() <= 2.0);
}

TEST_CASE("sinusoid and feedback input laws")
{
    TrajectorySpec spec;
    spec.initial_conditions = ExplicitInitialConditions{Matrix(v2(1, 0).transpose())};
    spec.input_law = SinusoidInput{2.0, 3.0, 0.5};
    spec.length = 10;
    SimConfig cfg;
    cfg.sample_time = 0.1;
    const SnapshotDataset s = generate_snapshots(duffing(), spec, cfg, 0);
    for (Index k = 0; k < 10; ++k) CHECK(s.U(k, 0) == doctest::Approx(2.0 * std::sin(3.0 * 0.1 * k + 0.5)));

    spec.input_law = FeedbackWithDisturbance{van_der_pol_optimal_feedback, Box{Vector::Zero(1), Vector::Zero(1)}};
    spec.initial_conditions = ExplicitInitialConditions{Matrix(v2(1, 1).transpose())};
    cfg.sample_time = 0.05;
    const SnapshotDataset f = generate_snapshots(van_der_pol(), spec, cfg, 0);
    for (Index k = 0; k < 10; ++k) CHECK(f.U(k, 0) == doctest::Approx(-f.X(k, 0) * f.X(k, 1)));
}
