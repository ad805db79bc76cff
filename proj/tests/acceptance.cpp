// Acceptance gate: one PASS/FAIL line per criterion. Tolerances and runtime
// limits are fixed here; the process exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "ckor/cli.hpp"
#include "ckor/error.hpp"
#include "ckor/mpc.hpp"
#include "ckor/predictor.hpp"
#include "ckor/qp.hpp"
#include "ckor/rng.hpp"
#include "ckor/systems.hpp"

using namespace ckor;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const fs::path kConfigDir = CKOR_CONFIG_DIR;
const fs::path kScratch = CKOR_ACCEPTANCE_TMP;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_seconds, const std::function<Outcome()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] %2d %s: %s; runtime %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", id, title,
                o.detail.c_str(), secs, limit_seconds, in_time ? "" : " EXCEEDED");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double max_abs(const Matrix& M)
{
    return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

Matrix uniform(Rng& rng, Index r, Index c, double lo, double hi)
{
    Matrix M(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) M(i, j) = rng.uniform(lo, hi);
    return M;
}

SnapshotDataset duffing_random(std::size_t traj, std::size_t length, double sample_time, double box,
                               std::uint64_t seed)
{
    TrajectorySpec spec;
    spec.initial_conditions =
        RandomInitialConditions{traj, Box{Vector::Constant(2, -box), Vector::Constant(2, box)}};
    spec.input_law = UniformRandomInput{Box{Vector::Constant(1, -2.0), Vector::Constant(1, 2.0)}};
    spec.length = length;
    SimConfig cfg;
    cfg.sample_time = sample_time;
    return generate_snapshots(duffing(), spec, cfg, seed);
}

// Gaussian kernel by explicit loops; independent of the library kernels.
Matrix oracle_composite(const Matrix& X, const Matrix& U, const Matrix& X2, const Matrix& U2, double mu)
{
    Matrix G(X.rows(), X2.rows());
    for (Index i = 0; i < X.rows(); ++i) {
        for (Index j = 0; j < X2.rows(); ++j) {
            double d2 = 0.0, uu = 0.0;
            for (Index k = 0; k < X.cols(); ++k) d2 += (X(i, k) - X2(j, k)) * (X(i, k) - X2(j, k));
            for (Index k = 0; k < U.cols(); ++k) uu += U(i, k) * U2(j, k);
            G(i, j) = std::exp(-d2 / mu) * (1.0 + uu);
        }
    }
    return G;
}

ExperimentConfig shipped_config(const std::string& name)
{
    ExperimentConfig cfg = load_config(kConfigDir / name);
    cfg.output_dir = kScratch / fs::path(name).stem();
    return cfg;
}

template <class Fn>
double median_seconds(int repeats, Fn&& fn)
{
    std::vector<double> t;
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

// ---------------------------------------------------------------- criteria

Outcome krr_equivalence()
{
    double worst = 0.0;
    for (std::uint64_t d = 0; d < 3; ++d) {
        const SnapshotDataset ds = duffing_random(10, 5, 0.05, 2.0, 100 + d);
        const double mu = 1.0, gamma = 1e-4;
        const CkorModel m = fit_ckor(ds, KernelSpec::gaussian(mu), KernelSpec::linear(), gamma);
        Matrix Kreg = oracle_composite(ds.X, ds.U, ds.X, ds.U, mu);
        Kreg.diagonal().array() += static_cast<double>(ds.size()) * gamma;
        const Matrix alpha = Eigen::FullPivLU<Matrix>(Kreg).solve(ds.X_plus);
        Rng rng(200 + d);
        const Matrix Xq = uniform(rng, 100, 2, -2.0, 2.0);
        const Matrix Uq = uniform(rng, 100, 1, -2.0, 2.0);
        const Matrix oracle = oracle_composite(Xq, Uq, ds.X, ds.U, mu) * alpha;
        Matrix got(100, 2);
        for (Index i = 0; i < 100; ++i) got.row(i) = rollout(m, Xq.row(i).transpose(), Uq.row(i)).outputs.row(0);
        worst = std::max(worst, max_abs(got - oracle) / max_abs(oracle));
    }
    return {worst <= 1e-10, fmt("max relative error %.2e (tol 1e-10)", worst)};
}

Outcome bilinear_equivalence()
{
    const SnapshotDataset ds = duffing_random(20, 10, 0.01, 2.0, 7);
    const CkorModel m = fit_ckor(ds, KernelSpec::gaussian(1.0), KernelSpec::linear(), 1e-4);
    const std::vector<Matrix> B = control_channels(m);
    Rng rng(8);
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
        const Vector x0 = uniform(rng, 2, 1, -1.5, 1.5);
        const Matrix inputs = uniform(rng, 50, 1, -2.0, 2.0);
        const Rollout r = rollout(m, x0, inputs);
        Vector z = m.lifting(x0, inputs.row(0).transpose());
        for (Index k = 0; k < 50; ++k) {
            worst = std::max(worst, max_abs(r.outputs.row(k).transpose() - m.C * z));
            if (k + 1 < 50) z = m.A * z + inputs(k + 1, 0) * (B[0] * z);
        }
    }
    return {worst <= 1e-12, fmt("max abs deviation %.2e (tol 1e-12)", worst)};
}

// Well-separated Duffing snapshots: every Gram is comfortably full rank.
SnapshotDataset separated_snapshots()
{
    return duffing_random(40, 1, 0.1, 2.5, 31);
}

Outcome nystrom_consistency()
{
    const SnapshotDataset ds = separated_snapshots();
    const KernelSpec kx = KernelSpec::gaussian(0.5);
    std::vector<std::size_t> all(40);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const CkorModel full = fit_ckor(ds, kx, KernelSpec::linear(), 1e-4);
    const CkorModel ny = fit_ny_ckor(ds, make_inducing(ds, all), kx, KernelSpec::linear(), 1e-4);

    const Matrix Kp = gram(kx, ds.X_plus);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(Kp).eigenvalues();
    const double cond = ev.maxCoeff() / ev.minCoeff();

    const double a_err = (ny.A - full.A).norm() / full.A.norm();
    Rng rng(3);
    double r_err = 0.0;
    for (int s = 0; s < 10; ++s) {
        const Vector x0 = uniform(rng, 2, 1, -2.0, 2.0);
        const Matrix inputs = uniform(rng, 50, 1, -2.0, 2.0);
        const Matrix a = rollout(full, x0, inputs).outputs;
        const Matrix b = rollout(ny, x0, inputs).outputs;
        r_err = std::max(r_err, max_abs(a - b) / std::max(1e-300, max_abs(a)));
    }
    const bool pass = a_err <= 1e-6 && r_err <= 1e-6;
    return {pass, fmt("A rel. error %.2e, ", a_err) + fmt("rollout rel. error %.2e (tol 1e-6), ", r_err) +
                      fmt("successor Gram condition %.1e", cond)};
}

Outcome pod_exactness()
{
    // Part a: tau = 100 on a full-rank inducing Gram.
    const SnapshotDataset ds = separated_snapshots();
    const InducingSet ind = subsample_uniform(ds, 30, 1);
    const CkorModel parent = fit_ny_ckor(ds, ind, KernelSpec::gaussian(0.5), KernelSpec::linear(), 1e-4);
    const ReducedModel red = pod_reduce(parent, PodTruncation::threshold(100.0));
    Rng rng(4);
    double dev = 0.0;
    for (int s = 0; s < 10; ++s) {
        const Vector x0 = uniform(rng, 2, 1, -2.0, 2.0);
        const Matrix inputs = uniform(rng, 50, 1, -2.0, 2.0);
        const Matrix a = rollout(parent, x0, inputs).outputs;
        const Matrix b = rollout(red, x0, inputs).outputs;
        dev = std::max(dev, max_abs(a - b) / std::max(1.0, max_abs(a)));
    }
    const bool part_a = dev <= 1e-8 && red.lifted_dim() == 30;

    // Part b: tau = 99.99 on a Duffing Ny-cKOR fit (n = 1000, m = 200); the
    // bandwidth is picked on a validation split by parent 100-step RMSE.
    const ExperimentConfig cfg = shipped_config("duffing_sweep.json");
    const SnapshotDataset pool = load_dataset(cfg, *cfg.data.train, SeedStream::Train);
    const SnapshotDataset test = load_dataset(cfg, *cfg.data.test, SeedStream::Test);
    TrajectorySpec vspec = *cfg.data.test->generate;
    vspec.initial_conditions = RandomInitialConditions{20, Box{Vector::Constant(2, -2.0), Vector::Constant(2, 2.0)}};
    const SnapshotDataset val =
        generate_snapshots(duffing(), vspec, cfg.sim, derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::Validation)));
    Rng sub(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::Subsample)));
    const SnapshotDataset train = select_rows(pool, sub.sample_without_replacement(static_cast<std::size_t>(pool.size()), 1000));
    const InducingSet centers = subsample_uniform(train, 200, derive_seed(cfg.seed, 5));

    double best_mu = 0.0, best_val = kInf;
    for (const double mu : {0.5, 1.0, 2.0, 3.5, 5.0}) {
        const CkorModel m = fit_ny_ckor(train, centers, KernelSpec::gaussian(mu), KernelSpec::linear(), 1e-9);
        const double v = evaluate(m, val, 100).mean_rmse;
        if (v < best_val) {
            best_val = v;
            best_mu = mu;
        }
    }
    const CkorModel ny = fit_ny_ckor(train, centers, KernelSpec::gaussian(best_mu), KernelSpec::linear(), 1e-9);
    const ReducedModel r = pod_reduce(ny, PodTruncation::threshold(99.99));
    const double parent_rmse = evaluate(ny, test, 100).mean_rmse;
    const double reduced_rmse = evaluate(r, test, 100).mean_rmse;
    const double degradation = reduced_rmse / parent_rmse - 1.0;
    const bool part_b = degradation <= 0.10;

    std::string detail = fmt("(a) tau=100 max deviation %.2e (tol 1e-8), ", dev) +
                         "rank " + std::to_string(red.lifted_dim()) + "/30; " +
                         fmt("(b) mu=%.2f, ", best_mu) + "r=" + std::to_string(r.lifted_dim()) + "/200, " +
                         fmt("parent 100-step RMSE %.4g, ", parent_rmse) + fmt("reduced %.4g, ", reduced_rmse) +
                         fmt("degradation %.1f%% (tol 10%%)", 100.0 * degradation);
    return {part_a && part_b, detail};
}

Outcome accuracy_vs_bandwidth()
{
    const ExperimentConfig cfg = shipped_config("duffing_sweep.json");
    const SnapshotDataset train = load_dataset(cfg, *cfg.data.train, SeedStream::Train);
    const SnapshotDataset test = load_dataset(cfg, *cfg.data.test, SeedStream::Test);
    const SweepOutput out = run_sweep(cfg, train, test, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<double> ck, bd;
    for (const SweepCell& c : out.cells) {
        if (c.estimator == Estimator::Ckor) ck.push_back(c.mean_rmse);
        if (c.estimator == Estimator::Bedmdc) bd.push_back(c.mean_rmse);
    }
    if (ck.size() != bd.size() || ck.size() < 8) return {false, "sweep grid is smaller than 8 bandwidths"};
    std::size_t wins = 0;
    for (std::size_t i = 0; i < ck.size(); ++i) wins += ck[i] <= bd[i] ? 1 : 0;
    const double frac = static_cast<double>(wins) / static_cast<double>(ck.size());
    const double ck_min = *std::min_element(ck.begin(), ck.end());
    const double bd_min = *std::min_element(bd.begin(), bd.end());
    const bool pass = frac >= 0.8 && ck_min <= bd_min;
    return {pass, "cKOR <= bEDMDc on " + std::to_string(wins) + "/" + std::to_string(ck.size()) + " bandwidths" +
                      fmt(" (need 80%%), best cKOR %.3e", ck_min) + fmt(" vs best bEDMDc %.3e", bd_min)};
}

Outcome accuracy_vs_size()
{
    const ExperimentConfig cfg = shipped_config("duffing_size_sweep.json");
    const SnapshotDataset train = load_dataset(cfg, *cfg.data.train, SeedStream::Train);
    const SnapshotDataset test = load_dataset(cfg, *cfg.data.test, SeedStream::Test);
    const SweepOutput out = run_sweep(cfg, train, test, std::max(1u, std::thread::hardware_concurrency()));
    bool pass = true;
    std::string detail = "mean 200-step RMSE";
    for (const std::size_t n : cfg.sweep->train_sizes) {
        double ck = kInf, ny = kInf, bd = kInf;
        for (const SweepCell& c : out.cells) {
            if (c.train_size != n) continue;
            if (c.estimator == Estimator::Ckor) ck = c.mean_rmse;
            if (c.estimator == Estimator::NyCkor) ny = c.mean_rmse;
            if (c.estimator == Estimator::Bedmdc) bd = c.mean_rmse;
        }
        const bool ok = ck <= bd && ny <= bd;
        pass = pass && ok;
        detail += "; n=" + std::to_string(n) + fmt(" cKOR %.3g", ck) + fmt(" Ny %.3g", ny) + fmt(" bEDMDc %.3g", bd) +
                  (ok ? "" : " (violated)");
    }
    return {pass, detail};
}

Outcome complexity()
{
    const ExperimentConfig cfg = shipped_config("duffing_sweep.json");
    const SnapshotDataset pool = load_dataset(cfg, *cfg.data.train, SeedStream::Train);
    Rng sub(99);
    const SnapshotDataset all = select_rows(pool, sub.sample_without_replacement(static_cast<std::size_t>(pool.size()), 2000));
    const KernelSpec kx = KernelSpec::gaussian(1.0);
    auto first = [&](Index n) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return select_rows(all, idx);
    };
    double t_ck[3], t_ny[3];
    const Index sizes[3] = {500, 1000, 2000};
    for (int i = 0; i < 3; ++i) {
        const SnapshotDataset ds = first(sizes[i]);
        const InducingSet ind = subsample_uniform(ds, 200, 1);
        t_ck[i] = median_seconds(3, [&] { (void)fit_ckor(ds, kx, KernelSpec::linear(), 1e-6); });
        t_ny[i] = median_seconds(3, [&] { (void)fit_ny_ckor(ds, ind, kx, KernelSpec::linear(), 1e-6); });
    }
    const double ck_exponent = std::log(t_ck[2] / t_ck[0]) / std::log(4.0);
    const double ny_ratio = t_ny[2] / t_ny[0];

    double t_nu_ny[3], t_nu_bd[3];
    const Index nus[3] = {1, 4, 8};
    for (int i = 0; i < 3; ++i) {
        Rng rng(500 + static_cast<std::uint64_t>(i));
        const SnapshotDataset ds(uniform(rng, 2000, 2, -2, 2), uniform(rng, 2000, nus[i], -1, 1),
                                 uniform(rng, 2000, 2, -2, 2));
        const InducingSet ind = subsample_uniform(ds, 200, 2);
        t_nu_ny[i] = median_seconds(3, [&] { (void)fit_ny_ckor(ds, ind, kx, KernelSpec::linear(), 1e-6); });
        t_nu_bd[i] = median_seconds(3, [&] { (void)fit_bedmdc(ds, ind, kx, 1e-6); });
    }
    const double ny_nu_ratio = t_nu_ny[2] / t_nu_ny[0];
    const double bd_nu_ratio = t_nu_bd[2] / t_nu_bd[0];
    const bool pass = ck_exponent > 2.0 && ny_ratio <= 8.0 && ny_nu_ratio <= 2.0 && bd_nu_ratio >= 8.0;
    return {pass, fmt("cKOR time exponent %.2f (need > 2), ", ck_exponent) +
                      fmt("Ny t(2000)/t(500) %.2f (need <= 8), ", ny_ratio) +
                      fmt("Ny t(n_u=8)/t(n_u=1) %.2f (need <= 2), ", ny_nu_ratio) +
                      fmt("bEDMDc %.1f (need >= 8)", bd_nu_ratio)};
}

// Dual projected gradient (accelerated) for min 1/2 x'Px + q'x, l <= Ax <= u, A = [I; G].
Vector dual_projected_gradient(const QuadraticProgram& qp)
{
    const Index n = qp.size();
    const Index m = qp.G.rows();
    Matrix A(n + m, n);
    A << Matrix::Identity(n, n), qp.G;
    Vector lo(n + m), hi(n + m);
    lo << qp.lower, qp.g_lower;
    hi << qp.upper, qp.g_upper;
    const Eigen::LLT<Matrix> llt(qp.P);
    const Matrix Pinv = llt.solve(Matrix::Identity(n, n));
    // Variables lambda = [lambda_upper; lambda_lower] >= 0; multipliers of infinite bounds stay 0.
    const Matrix M = A * Pinv * A.transpose();
    const double L = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(M).eigenvalues().maxCoeff();
    auto primal = [&](const Vector& lu, const Vector& ll) -> Vector {
        return -Pinv * (qp.q + A.transpose() * (lu - ll));
    };
    auto project = [&](Vector& lu, Vector& ll) {
        for (Index i = 0; i < n + m; ++i) {
            lu[i] = std::isfinite(hi[i]) ? std::max(0.0, lu[i]) : 0.0;
            ll[i] = std::isfinite(lo[i]) ? std::max(0.0, ll[i]) : 0.0;
        }
    };
    Vector lu = Vector::Zero(n + m), ll = Vector::Zero(n + m);
    Vector yu = lu, yl = ll;
    double t = 1.0;
    for (int it = 0; it < 2000000; ++it) {
        const Vector x = primal(yu, yl);
        const Vector Ax = A * x;
        // Gradient of the concave dual: d/dlu = Ax - hi, d/dll = lo - Ax.
        Vector nu = yu, nl = yl;
        for (Index i = 0; i < n + m; ++i) {
            if (std::isfinite(hi[i])) nu[i] += (Ax[i] - hi[i]) / L;
            if (std::isfinite(lo[i])) nl[i] += (lo[i] - Ax[i]) / L;
        }
        project(nu, nl);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        const double moved = std::max((nu - lu).cwiseAbs().maxCoeff(), (nl - ll).cwiseAbs().maxCoeff());
        yu = nu + beta * (nu - lu);
        yl = nl + beta * (nl - ll);
        lu = nu;
        ll = nl;
        t = t_next;
        if (moved < 1e-15 && it > 100) break;
    }
    return primal(lu, ll);
}

Outcome qp_correctness()
{
    Rng rng(2024);
    QpSettings settings;
    double worst_gap = 0.0, worst_kkt = 0.0, worst_violation = 0.0;
    int unconverged = 0;
    for (int t = 0; t < 50; ++t) {
        const Index n = 2 + static_cast<Index>(rng.below(19));  // 2..20
        const Index m = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        const Matrix F = uniform(rng, n, n, -1, 1);
        QuadraticProgram qp =
            QuadraticProgram::unconstrained(F.transpose() * F + 0.1 * Matrix::Identity(n, n), uniform(rng, n, 1, -5, 5));
        // Bounds around a feasible point so every instance is feasible.
        const Vector x0 = uniform(rng, n, 1, -0.5, 0.5);
        qp.lower = x0 - uniform(rng, n, 1, 0.1, 1.0);
        qp.upper = x0 + uniform(rng, n, 1, 0.1, 1.0);
        if (t % 3 == 0) qp.upper[0] = kInf;
        qp.G = uniform(rng, m, n, -1, 1);
        const Vector g0 = qp.G * x0;
        qp.g_lower = g0 - uniform(rng, m, 1, 0.05, 0.5);
        qp.g_upper = g0 + uniform(rng, m, 1, 0.05, 0.5);
        if (t % 4 == 1) qp.g_lower[0] = -kInf;

        const QpSolution s = solve_qp(qp, settings);
        if (!s.converged) ++unconverged;
        const Vector oracle = dual_projected_gradient(qp);
        worst_gap = std::max(worst_gap, std::abs(s.objective - qp.objective(oracle)));
        worst_kkt = std::max({worst_kkt, s.primal_residual, s.dual_residual});
        const Vector gx = qp.G * s.x;
        const double viol = std::max({(qp.lower - s.x).maxCoeff(), (s.x - qp.upper).maxCoeff(),
                                      (qp.g_lower - gx).maxCoeff(), (gx - qp.g_upper).maxCoeff(), 0.0});
        worst_violation = std::max(worst_violation, viol);
    }
    const bool pass = unconverged == 0 && worst_gap <= 1e-6 && worst_kkt <= 1e-6 && worst_violation <= 1e-6;
    return {pass, fmt("max objective gap %.2e (tol 1e-6), ", worst_gap) + fmt("max KKT residual %.2e (tol 1e-6), ", worst_kkt) +
                      fmt("max violation %.2e, ", worst_violation) + std::to_string(unconverged) + " unconverged"};
}

Outcome van_der_pol_mpc()
{
    const ExperimentConfig cfg = shipped_config("vdp_mpc.json");
    const MpcOutput lpv = cmd_mpc(cfg);
    const ExperimentConfig lcfg = shipped_config("vdp_lmpc.json");
    const MpcOutput lmpc = cmd_mpc(lcfg);

    bool all_stabilized = lpv.runs.size() == 4;
    std::string detail = "LPV-MPC |x(10 s)|_inf:";
    for (const MpcRun& r : lpv.runs) {
        all_stabilized = all_stabilized && r.stabilized && r.log.final_time >= 10.0 - 1e-9;
        detail += fmt(" %.3f", r.final_error);
    }
    detail += " (tol 0.15); deviation from optimal-feedback trajectory (RMSE):";
    SimConfig sim = cfg.sim;
    for (const MpcRun& r : lpv.runs) {
        const Index K = r.log.steps();
        Matrix opt(K, 2);
        Vector x = r.x0;
        for (Index k = 0; k < K; ++k) {
            opt.row(k) = x.transpose();
            x = simulate(van_der_pol(), x, van_der_pol_optimal_feedback(x).transpose(), sim).row(1).transpose();
        }
        detail += fmt(" %.3f", rmse(r.log.states, opt));
    }
    bool lmpc_fails = lmpc.runs.size() == 4;
    for (const MpcRun& r : lmpc.runs) lmpc_fails = lmpc_fails && !r.stabilized;
    int flagged = 0;
    for (const MpcRun& r : lmpc.runs) flagged += r.log.failed ? 1 : 0;
    detail += "; LMPC stabilizes none: " + std::string(lmpc_fails ? "yes" : "no") + " (" + std::to_string(flagged) +
              "/4 runs flagged failed)";
    return {all_stabilized && lmpc_fails, detail};
}

Outcome duffing_tracking()
{
    const ExperimentConfig cfg = shipped_config("duffing_mpc.json");
    const MpcOutput out = cmd_mpc(cfg);
    if (out.runs.size() != 1) return {false, "expected one run"};
    const MpcRun& run = out.runs.front();
    const MpcConfig& mc = *cfg.mpc;
    const double ts = cfg.sim.sample_time;

    // Reference active at each logged instant and the switch instants.
    std::vector<Index> switch_steps;
    std::vector<std::pair<Index, Vector>> segs;
    Index acc = 0;
    for (const auto& [seconds, target] : mc.reference) {
        const auto steps = static_cast<Index>(std::llround(seconds / ts));
        if (!segs.empty()) switch_steps.push_back(acc);
        segs.emplace_back(steps, target);
        acc += steps;
    }
    auto ref_at = [&](Index k) -> const Vector& {
        Index start = 0;
        for (const auto& [steps, target] : segs) {
            if (k < start + steps) return target;
            start += steps;
        }
        return segs.back().second;
    };
    const Index K = run.log.steps();
    auto error_at = [&](Index k) { return (run.log.states.row(k).transpose() - ref_at(k)).norm(); };
    auto first_within = [&](Index from, Index to) -> Index {
        for (Index k = from; k < std::min(to, K); ++k)
            if (error_at(k) <= 0.1) return k;
        return -1;
    };

    bool pass = !run.log.failed && !switch_steps.empty();
    std::string detail;
    const Index window = static_cast<Index>(std::llround(3.0 / ts));
    for (const Index s : switch_steps) {
        const Index hit = first_within(s, s + window + 1);
        pass = pass && hit >= 0;
        detail += fmt("switch at %.2f s: ", s * ts) +
                  (hit >= 0 ? fmt("|x - x_ref| <= 0.1 after %.2f s", (hit - s) * ts) : std::string("not within 3 s")) +
                  " (limit 3 s); ";
    }
    const Index first_segment_end = switch_steps.empty() ? K : switch_steps.front();
    const Index initial = first_within(0, first_segment_end);
    detail += initial >= 0 ? fmt("initial transient within 0.1 at %.2f s", initial * ts)
                           : std::string("initial transient never within 0.1");
    if (window < K) detail += fmt(", error 3 s after start %.3f", error_at(window));
    detail += fmt("; final error %.3f", (run.log.final_state - ref_at(K)).norm());
    return {pass, detail};
}

Outcome rk4_order()
{
    ControlAffineOde ode;
    ode.name = "decay";
    ode.state_dim = 1;
    ode.input_dim = 1;
    ode.drift = [](const Vector& x) -> Vector { return -x; };
    ode.input_matrix = [](const Vector&) -> Matrix { return Matrix::Zero(1, 1); };
    auto err = [&](double h) {
        SimConfig cfg;
        cfg.sample_time = h;
        const auto steps = static_cast<Index>(std::llround(1.0 / h));
        return std::abs(simulate(ode, Vector::Ones(1), Matrix::Zero(steps, 1), cfg)(steps, 0) - std::exp(-1.0));
    };
    const double e1 = err(0.02), e2 = err(0.01), e3 = err(0.005);
    const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
    return {std::min(p1, p2) >= 3.9, fmt("orders %.3f", p1) + fmt(", %.3f (need >= 3.9)", p2)};
}

}  // namespace

int main()
{
    fs::create_directories(kScratch);
    criterion(1, "one-step rollout equals naive KRR", 10, krr_equivalence);
    criterion(2, "recursion equals explicit bilinear channels", 5, bilinear_equivalence);
    criterion(3, "Nystrom with m = n equals full estimator", 10, nystrom_consistency);
    criterion(4, "POD exactness and truncation degradation", 30, pod_exactness);
    criterion(5, "Duffing one-step accuracy over bandwidths", 300, accuracy_vs_bandwidth);
    criterion(6, "Duffing 200-step accuracy over training size", 600, accuracy_vs_size);
    criterion(7, "fit-time complexity trends", 600, complexity);
    criterion(8, "QP solver against projected-gradient oracle", 30, qp_correctness);
    criterion(9, "Van der Pol LPV-MPC stabilizes, LMPC fails", 600, van_der_pol_mpc);
    criterion(10, "Duffing MPC reference tracking", 300, duffing_tracking);
    criterion(11, "RK4 convergence order", 1, rk4_order);
    std::printf("[NOTE] 12 Karman vortex numbers: not reproducible without the external CFD data; "
                "covered by criteria 3 and 4 and the CSV round-trip tests\n");
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
