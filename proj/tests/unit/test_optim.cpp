#include <doctest.h>

#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "oracles.hpp"
#include "rgd/errors.hpp"
#include "rgd/optim.hpp"

using namespace rgd;
using mest::RhoKind;

namespace {

Dataset noisy_regression(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::student_t_distribution<double> t(2.5);
  Dataset data;
  data.inputs.resize(n, d);
  data.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double y = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      data.inputs(i, j) = z(rng);
      y += (j + 1.0) * data.inputs(i, j);
    }
    data.targets[i] = y + t(rng);
  }
  return data;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Eigen::VectorXd w(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    w[j] = z(rng);
  }
  return w;
}

OptimState start_at(Eigen::VectorXd w, double alpha) {
  OptimState s;
  s.w = std::move(w);
  s.alpha = alpha;
  return s;
}

StoppingRule iters(long k) {
  StoppingRule s;
  s.max_iters = k;
  return s;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("RGD with the quadratic rho reproduces full-batch gradient descent") {
  std::mt19937_64 rng(11);
  const Dataset data = noisy_regression(rng, 40, 3);
  const LinearRegression model(3);
  RobustConfig cfg;
  cfg.rho = mest::RhoFunction(RhoKind::quadratic_test_only);
  const OptimState s = start_at(Eigen::VectorXd::Zero(3), 0.1);
  const Trajectory a = rgd_run(model, data, cfg, s, Constraint::unconstrained(), iters(25));
  const Trajectory b = erm_gd_run(model, data, s, Constraint::unconstrained(), iters(25));
  REQUIRE(a.states.size() == 26);
  REQUIRE(b.states.size() == 26);
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(max_abs(a.states[k].w - b.states[k].w) <= 1e-10);
    CHECK(a.states[k].grad_evals == b.states[k].grad_evals);
  }
  CHECK(a.final_state().grad_evals == 25 * 40);
}

TEST_CASE("a zero-gradient start stays put") {
  Dataset data;
  data.inputs.resize(4, 2);
  data.inputs << 1, 0, 0, 1, 1, 1, 2, -1;
  const Eigen::Vector2d w_star(0.5, -1.5);
  data.targets = data.inputs * w_star;
  const LinearRegression model(2);
  const Trajectory traj = rgd_run(model, data, RobustConfig{}, start_at(w_star, 0.3),
                                  Constraint::unconstrained(), iters(10));
  for (const OptimState& s : traj.states) {
    CHECK(max_abs(s.w - w_star) == 0.0);
  }
}

TEST_CASE("oracle descent on a quadratic follows the closed-form contraction") {
  std::mt19937_64 rng(12);
  const Eigen::Index d = 4;
  Eigen::MatrixXd A(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    A.row(i) = random_vector(rng, d).transpose();
  }
  const Eigen::MatrixXd sigma = A * A.transpose() / d + 0.5 * Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd w_star = random_vector(rng, d);
  const GradientOracle grad = [&](const Eigen::VectorXd& w) { return Eigen::VectorXd(sigma * (w - w_star)); };
  const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sigma).eigenvalues().maxCoeff();
  const double alpha = 1.0 / lmax;
  const Eigen::VectorXd w0 = random_vector(rng, d, 3.0);
  const Trajectory traj = oracle_gd_run(grad, start_at(w0, alpha), Constraint::unconstrained(), iters(30));
  const Eigen::MatrixXd contraction = Eigen::MatrixXd::Identity(d, d) - alpha * sigma;
  Eigen::VectorXd expect = w0 - w_star;
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    expect = contraction * expect;
    CHECK(std::abs((traj.states[t].w - w_star).norm() - expect.norm()) <= 1e-8);
    CHECK(traj.states[t].grad_evals == 0);
  }
}

TEST_CASE("full-batch descent matches the iteration on the empirical covariance") {
  std::mt19937_64 rng(13);
  const Dataset data = noisy_regression(rng, 50, 3);
  const LinearRegression model(3);
  const double n = static_cast<double>(data.size());
  const Eigen::MatrixXd cov = data.inputs.transpose() * data.inputs / n;
  const Eigen::VectorXd xy = data.inputs.transpose() * data.targets / n;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  const Trajectory traj = erm_gd_run(model, data, start_at(w, 0.2), Constraint::unconstrained(), iters(15));
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    w = w - 0.2 * (cov * w - xy);
    CHECK(max_abs(traj.states[t].w - w) <= 1e-10);
  }
}

TEST_CASE("SGD on a single row equals the full-batch step") {
  std::mt19937_64 rng(14);
  const Dataset data = noisy_regression(rng, 1, 3);
  const LinearRegression model(3);
  const OptimState s = start_at(random_vector(rng, 3), 0.05);
  const Trajectory a = sgd_run(model, data, s, Constraint::unconstrained(), iters(8), 99);
  const Trajectory b = erm_gd_run(model, data, s, Constraint::unconstrained(), iters(8));
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(max_abs(a.states[k].w - b.states[k].w) <= 1e-14);
  }
}

TEST_CASE("SVRG: snapshot step is a full gradient step and accounting follows epochs") {
  std::mt19937_64 rng(15);
  const Dataset data = noisy_regression(rng, 10, 2);
  const LinearRegression model(2);
  const OptimState s = start_at(random_vector(rng, 2), 0.05);
  const Trajectory traj = svrg_run(model, data, s, Constraint::unconstrained(), iters(10), 5);
  REQUIRE(traj.states.size() == 11);
  CHECK(max_abs(traj.states[1].w - (s.w - 0.05 * model.mean_gradient(s.w, data))) <= 1e-14);
  // Epoch of 5 steps: 10 for the snapshot, then four single rows.
  const long want[] = {0, 10, 11, 12, 13, 14, 24, 25, 26, 27, 28};
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    CHECK(traj.states[k].grad_evals == want[k]);
  }
  CHECK(traj.steps[5].evals == 10);

  // Inner corrections are unbiased: averaging the corrected direction over
  // every row recovers the full gradient at any point.
  const Eigen::VectorXd snap = s.w;
  const Eigen::VectorXd w = random_vector(rng, 2);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(2);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    avg += model.row_gradient(w, data, i) - model.row_gradient(snap, data, i);
  }
  avg = avg / 10.0 + model.mean_gradient(snap, data);
  CHECK(max_abs(avg - model.mean_gradient(w, data)) <= 1e-12);
}

TEST_CASE("budgets are never exceeded") {
  std::mt19937_64 rng(16);
  const Dataset data = noisy_regression(rng, 10, 2);
  const LinearRegression model(2);
  const OptimState s = start_at(Eigen::VectorXd::Zero(2), 0.05);
  StoppingRule stop = iters(1000);
  stop.budget = 20;

  const Trajectory svrg = svrg_run(model, data, s, Constraint::unconstrained(), stop, 3);
  CHECK(svrg.reason == StopReason::budget);
  CHECK(svrg.iterations() == 5);
  CHECK(svrg.final_state().grad_evals == 14);

  const Trajectory sgd = sgd_run(model, data, s, Constraint::unconstrained(), stop, 3);
  CHECK(sgd.iterations() == 20);
  CHECK(sgd.final_state().grad_evals == 20);

  const Trajectory gd = erm_gd_run(model, data, s, Constraint::unconstrained(), stop);
  CHECK(gd.iterations() == 2);

  RgdOptions mb;
  mb.batch_size = 3;
  const Trajectory rgd = rgd_run(model, data, RobustConfig{}, s, Constraint::unconstrained(), stop, mb);
  CHECK(rgd.iterations() == 6);
  CHECK(rgd.final_state().grad_evals == 18);
  for (const Trajectory* t : {&svrg, &sgd, &gd, &rgd}) {
    for (const OptimState& st : t->states) {
      CHECK(st.grad_evals <= 20);
    }
  }
}

TEST_CASE("stochastic runs are deterministic in the seed") {
  std::mt19937_64 rng(17);
  const Dataset data = noisy_regression(rng, 30, 3);
  const LinearRegression model(3);
  const OptimState s = start_at(Eigen::VectorXd::Zero(3), 0.05);
  RgdOptions mb;
  mb.batch_size = 7;
  mb.seed = 42;
  const auto a = rgd_run(model, data, RobustConfig{}, s, Constraint::unconstrained(), iters(12), mb);
  const auto b = rgd_run(model, data, RobustConfig{}, s, Constraint::unconstrained(), iters(12), mb);
  const auto c = svrg_run(model, data, s, Constraint::unconstrained(), iters(12), 42);
  const auto e = svrg_run(model, data, s, Constraint::unconstrained(), iters(12), 42);
  const auto f = svrg_run(model, data, s, Constraint::unconstrained(), iters(12), 43);
  CHECK(max_abs(a.final_state().w - b.final_state().w) == 0.0);
  CHECK(max_abs(c.final_state().w - e.final_state().w) == 0.0);
  CHECK(max_abs(c.final_state().w - f.final_state().w) > 0.0);
}

TEST_CASE("projection onto a ball is non-expansive and iterates stay feasible") {
  std::mt19937_64 rng(18);
  const Eigen::VectorXd center = random_vector(rng, 3);
  const Constraint ball = Constraint::l2_ball(center, 0.7);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::VectorXd u = random_vector(rng, 3, 2.0);
    const Eigen::VectorXd v = random_vector(rng, 3, 2.0);
    const Eigen::VectorXd pu = ball.project(u);
    CHECK(ball.contains(pu));
    CHECK((pu - ball.project(v)).norm() <= (u - v).norm() + 1e-12);
    CHECK(max_abs(ball.project(pu) - pu) <= 1e-15);
  }
  CHECK_THROWS_AS(Constraint::l2_ball(center, 0.0), InvalidConfig);

  const Dataset data = noisy_regression(rng, 40, 3);
  const LinearRegression model(3);
  const Constraint tight = Constraint::l2_ball(Eigen::VectorXd::Zero(3), 0.5);
  const Trajectory traj =
      rgd_run(model, data, RobustConfig{}, start_at(Eigen::VectorXd::Zero(3), 0.2), tight, iters(20));
  for (const OptimState& s : traj.states) {
    CHECK(tight.contains(s.w));
  }
  // The unconstrained minimizer (1, 2, 3) is far outside, so the run ends on the boundary.
  CHECK(traj.final_state().w.norm() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("geometric median: exact cases") {
  Eigen::MatrixXd one(2, 1);
  one << 3.0, -4.0;
  CHECK(max_abs(geometric_median(one).point - one.col(0)) == 0.0);

  Eigen::MatrixXd tri(2, 3);
  tri << 0.0, 1.0, 0.5,
         0.0, 0.0, std::sqrt(3.0) / 2.0;
  const Eigen::Vector2d centroid = tri.rowwise().mean();
  CHECK(max_abs(geometric_median(tri).point - centroid) <= 1e-9);

  Eigen::MatrixXd line(1, 4);
  line << 0.0, 1.0, 2.0, 10.0;
  const GeometricMedian gm = geometric_median(line);
  const std::vector<double> xs{0.0, 1.0, 2.0, 10.0};
  CHECK(geometric_median_objective(line, gm.point) <=
        static_cast<double>(oracle::grid_l1_min(xs, -1.0L, 11.0L, 12000)) + 1e-9);
  CHECK(gm.point[0] >= 1.0 - 1e-9);
  CHECK(gm.point[0] <= 2.0 + 1e-9);

  // A data point that is the median: three collinear, middle one wins.
  Eigen::MatrixXd col(2, 3);
  col << 0.0, 1.0, 2.0,
         0.0, 1.0, 2.0;
  CHECK(max_abs(geometric_median(col).point - Eigen::Vector2d(1.0, 1.0)) <= 1e-9);
  CHECK_THROWS_AS(geometric_median(Eigen::MatrixXd(2, 0)), InvalidInput);
}

TEST_CASE("geometric median: random instances against nested golden-section search") {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd pts(3, 7);
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
      pts.col(k) = random_vector(rng, 3, 2.0);
    }
    if (rep % 5 == 0) {
      pts.col(6) *= 50.0;
    }
    const GeometricMedian gm = geometric_median(pts);
    const double got = geometric_median_objective(pts, gm.point);
    const double best = static_cast<double>(oracle::brute_force_geometric_median_value(pts));
    CHECK(got <= best * (1.0 + 1e-8) + 1e-12);
    CHECK(gm.converged);

    Eigen::MatrixXd shuffled = pts;
    std::vector<Eigen::Index> order{6, 2, 4, 0, 5, 1, 3};
    for (Eigen::Index k = 0; k < 7; ++k) {
      shuffled.col(k) = pts.col(order[static_cast<std::size_t>(k)]);
    }
    CHECK(max_abs(geometric_median(shuffled).point - gm.point) <= 1e-8);
  }
}

TEST_CASE("median-of-means descent") {
  CHECK(mom_partition_count(100, 5) == 10);
  CHECK(mom_partition_count(10, 5) == 2);
  CHECK(mom_partition_count(2000, 40) == 25);
  CHECK_THROWS_AS(mom_partition_count(0, 3), InvalidInput);

  Dataset same;
  same.inputs = Eigen::MatrixXd(6, 2);
  same.targets = Eigen::VectorXd::Constant(6, 2.0);
  for (Eigen::Index i = 0; i < 6; ++i) {
    same.inputs.row(i) << 1.0, -0.5;
  }
  const LinearRegression model(2);
  const OptimState s = start_at(Eigen::VectorXd::Zero(2), 0.3);
  const auto mom = median_of_means_gd_run(model, same, 3, s, Constraint::unconstrained(), iters(5));
  const auto gd = erm_gd_run(model, same, s, Constraint::unconstrained(), iters(5));
  for (std::size_t k = 0; k < mom.states.size(); ++k) {
    CHECK(max_abs(mom.states[k].w - gd.states[k].w) <= 1e-12);
  }

  // One row per block: the direction is the geometric median of the row gradients.
  std::mt19937_64 rng(20);
  const Dataset three = noisy_regression(rng, 3, 2);
  const Eigen::VectorXd w0 = random_vector(rng, 2);
  const auto step = median_of_means_gd_run(model, three, 3, start_at(w0, 0.1), Constraint::unconstrained(), iters(1));
  Eigen::MatrixXd rows(2, 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    rows.col(i) = model.row_gradient(w0, three, i);
  }
  CHECK(max_abs(step.states[1].w - (w0 - 0.1 * geometric_median(rows).point)) <= 1e-10);
  CHECK(step.states[1].grad_evals == 3);

  // Remainder rows join the last block: n = 7, 3 blocks of 2, 2, 3.
  const Dataset seven = noisy_regression(rng, 7, 2);
  const auto rem = median_of_means_gd_run(model, seven, 3, start_at(w0, 0.1), Constraint::unconstrained(), iters(1));
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(2, 3);
  const int block_of[] = {0, 0, 1, 1, 2, 2, 2};
  const double sizes[] = {2.0, 2.0, 3.0};
  for (Eigen::Index i = 0; i < 7; ++i) {
    means.col(block_of[i]) += model.row_gradient(w0, seven, i) / sizes[block_of[i]];
  }
  CHECK(max_abs(rem.states[1].w - (w0 - 0.1 * geometric_median(means).point)) <= 1e-10);

  CHECK_THROWS_AS(median_of_means_gd_run(model, three, 4, s, Constraint::unconstrained(), iters(1)),
                  InvalidConfig);
  CHECK_THROWS_AS(median_of_means_gd_run(model, three, 1, s, Constraint::unconstrained(), iters(1)),
                  InvalidConfig);
}

TEST_CASE("re-weighted descent damps a gross outlier") {
  std::mt19937_64 rng(21);
  Dataset data = noisy_regression(rng, 60, 2);
  data.targets[0] += 1e4;
  const LinearRegression model(2);
  const OptimState s = start_at(Eigen::VectorXd::Zero(2), 0.5);
  const auto rw = reweighted_gd_run(model, data, mest::RhoFunction::gudermannian(), s,
                                    Constraint::unconstrained(), iters(200));
  const auto gd = erm_gd_run(model, data, s, Constraint::unconstrained(), iters(200));
  const Eigen::Vector2d truth(1.0, 2.0);
  CHECK((rw.final_state().w - truth).norm() < 0.5);
  CHECK((rw.final_state().w - truth).norm() < (gd.final_state().w - truth).norm());
}

TEST_CASE("stopping rules") {
  std::mt19937_64 rng(22);
  const Dataset data = noisy_regression(rng, 30, 2);
  const LinearRegression model(2);
  StoppingRule stop = iters(10000);
  stop.grad_norm_tol = 1e-6;
  const auto traj = erm_gd_run(model, data, start_at(Eigen::VectorXd::Zero(2), 0.3),
                               Constraint::unconstrained(), stop);
  CHECK(traj.reason == StopReason::grad_tol);
  CHECK(traj.iterations() < 10000);
  CHECK(max_abs(model.mean_gradient(traj.final_state().w, data)) < 1e-6);
  // The last (unused) gradient evaluation is still charged.
  CHECK(traj.final_state().grad_evals == 30 * (traj.iterations() + 1));

  const GradientOracle blow_up = [](const Eigen::VectorXd& w) { Eigen::VectorXd g = 1e200 * w; return g; };
  const auto div = oracle_gd_run(blow_up, start_at(Eigen::VectorXd::Ones(2), 1e200), Constraint::unconstrained(),
                                 iters(50));
  CHECK(div.diverged());
  CHECK(!div.message.empty());
  for (const OptimState& st : div.states) {
    CHECK(st.w.allFinite());
  }

  StoppingRule bad = iters(0);
  CHECK_THROWS_AS(erm_gd_run(model, data, start_at(Eigen::VectorXd::Zero(2), 0.3), Constraint::unconstrained(), bad),
                  InvalidConfig);
  CHECK_THROWS_AS(erm_gd_run(model, data, start_at(Eigen::VectorXd::Zero(3), 0.3), Constraint::unconstrained(),
                             iters(1)),
                  InvalidInput);
  CHECK_THROWS_AS(erm_gd_run(model, data, start_at(Eigen::VectorXd::Zero(2), -1.0), Constraint::unconstrained(),
                             iters(1)),
                  InvalidConfig);
}
