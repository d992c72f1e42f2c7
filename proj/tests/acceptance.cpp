// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kgd/experiments.hpp"
#include "kgd/oracles.hpp"
#include "kgd/samplers.hpp"

using namespace kgd;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double rel(double a, double b, double floor = 1e-3) { return std::abs(a - b) / std::max(std::abs(b), floor); }

double rel(const Vector& a, const Vector& b, double floor = 1e-3) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), floor);
}

Vector fd_vec(const std::function<double(const Vector&)>& f, const Vector& x) {
  return oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return f(Vector(z)); }, x);
}

// --- 1 ----------------------------------------------------------------------

void ksd_equivalence(Outcome& out) {
  RandomStream rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 5);
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 30.0);
    Vector var(d);
    for (std::size_t a = 0; a < d; ++a) var(static_cast<Eigen::Index>(a)) = 0.3 + 2.0 * rng.uniform();
    const ReferenceDistribution ref(rng.normal_vector(d), var);
    const auto loss = LinearLoss::quadratic(0.1 + 2.0 * rng.uniform(), rng.normal_vector(d));
    const double ell = 0.3 + 2.0 * rng.uniform();
    const auto kernel = trial % 2 ? ScalarKernelSpec::gaussian(ell) : ScalarKernelSpec::imq(ell);
    const EmpiricalMeasure q(rng.normal_matrix(d, n, 2.0));
    const double kgd = kgd_v_squared(ref, *loss, kernel, q).value_squared;
    const double ksd = oracles::reference_ksd_squared(
        [&](const Eigen::Ref<const Vector>& x) -> Vector { return ref.log_grad(x) - loss->grad_u(x); }, kernel, q);
    worst = std::max(worst, std::abs(kgd - ksd) / std::abs(ksd));
  }
  out.detail << "max relative gap " << worst << " over 50 configurations; ";
  out.check(worst <= 1e-12, "relative gap <= 1e-12");
}

// --- 2 ----------------------------------------------------------------------

void identity_rate(Outcome& out) {
  const std::vector<std::size_t> grid{25, 50, 100, 200, 400, 800};
  const auto study = experiments::identity_study(2, grid, 100, 1.0, 202);
  out.detail << "slope of log E[KGD_V^2] " << study.mean_slope << "; ";
  out.check(study.mean_slope >= -1.15 && study.mean_slope <= -0.85, "slope in [-1.15, -0.85]");
  double worst_z = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) worst_z = std::max(worst_z, std::abs(study.u_mean[k]) / study.u_se[k]);
  out.detail << "max |U mean| / SE " << worst_z << "; ";
  out.check(worst_z <= 3.0, "U-statistic mean within 3 SE of 0 at every n");
}

// --- 3 ----------------------------------------------------------------------

void clt_scaling(Outcome& out) {
  const std::vector<std::size_t> grid{100, 200, 400, 800, 1600};
  for (std::size_t d : {2u, 5u}) {
    const auto study = experiments::clt_study(d, grid, 200, 1.0, 1.0, 303);
    out.detail << "d=" << d << " sd slope " << study.sd_slope << "; ";
    out.check(std::abs(study.sd_slope + 0.5) <= 0.15, "slope -0.5 +- 0.15 at d=" + std::to_string(d));
  }
}

// --- 4 ----------------------------------------------------------------------

double euclid_worst(const VariationalLoss& loss, std::size_t dim, double spread, const Vector& center,
                    RandomStream& rng, int instances, double h0) {
  double worst = 0.0;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
    Matrix atoms = spread * rng.normal_matrix(dim, n);
    atoms.colwise() += center;
    const EmpiricalMeasure q(atoms);
    worst = std::max(worst, euclid_identity_check(loss, q, static_cast<std::size_t>(trial) % n, h0));
  }
  return worst;
}

void gradient_gates(Outcome& out) {
  RandomStream rng(404);

  // (a) variational gradient = n x Euclidean gradient, absolute max-norm residual.
  // The LV loss is steep (gradients ~1e3), so its central differences need a smaller step.
  struct Entry {
    std::string name;
    std::shared_ptr<VariationalLoss> loss;
    std::size_t dim;
    double spread;
    Vector center;
    double h0 = 1e-5;  // FD step scale of the oracle
  };
  auto gauss_w = [](const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
    return std::exp(-0.5 * (x - y).squaredNorm());
  };
  auto gauss_g = [gauss_w](const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) -> Vector {
    return -(x - y) * gauss_w(x, y);
  };
  const auto lv_data = models::gen_lv_data(0);
  std::vector<Entry> entries{
      {"zero", std::make_shared<ZeroLoss>(), 2, 1.0, Vector::Zero(2)},
      {"quadratic-potential", LinearLoss::quadratic(1.5, Vector::Ones(3)), 3, 1.0, Vector::Zero(3)},
      {"interaction", InteractionLoss::quadratic(1.0), 3, 1.0, Vector::Zero(3)},
      {"gaussian-interaction", std::make_shared<InteractionLoss>(gauss_w, gauss_g), 2, 1.0, Vector::Zero(2)},
      {"mfnn", std::make_shared<MFNNLoss>(models::gen_mfnn_data(0, 300), 300.0), 4, 1.0, Vector::Zero(4)},
      {"pcuq-lv",
       std::make_shared<PCUQLoss>(std::make_shared<models::LotkaVolterraModel>(), lv_data.observations, 0.1 / 61.0), 2,
       0.05, models::LVParams::data_generating().x, 1e-6},
  };
  for (const auto& e : entries) {
    const double worst = euclid_worst(*e.loss, e.dim, e.spread, e.center, rng, 20, e.h0);
    out.detail << e.name << " " << worst << "; ";
    out.check(worst < 1e-4, "Euclidean identity for " + e.name);
  }

  // (b) LV sensitivities at t = 60
  double worst_sens = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    models::LVParams p = models::LVParams::data_generating();
    if (trial > 0) p.x += 0.1 * rng.normal_vector(2);
    const auto traj = models::lv_sensitivities(p);
    for (Eigen::Index k = 0; k < 2; ++k) {
      const double h = 1e-5 * (1.0 + std::abs(p.x[k]));
      models::LVParams up = p, down = p;
      up.x[k] += h;
      down.x[k] -= h;
      const Vector fd = (models::lv_solve(up).states.back() - models::lv_solve(down).states.back()) / (2.0 * h);
      worst_sens = std::max(worst_sens, rel(Vector(traj.sensitivities.back().col(k)), fd, 1e-12));
    }
  }
  out.detail << "LV sensitivity " << worst_sens << "; ";
  out.check(worst_sens <= 1e-4, "LV sensitivities vs FD at t=60");

  // (c) kernel derivatives
  double worst_k = 0.0;
  const std::vector<ScalarKernelSpec> scalars{ScalarKernelSpec::imq(0.8), ScalarKernelSpec::gaussian(1.3),
                                              ScalarKernelSpec::mixture({std::sqrt(0.03), std::sqrt(0.1)}),
                                              ScalarKernelSpec::mixture({0.1, 1.0, 3.0}, {}, KernelFamily::Gaussian)};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 4);
    const Vector x = rng.normal_vector(d), y = rng.normal_vector(d);
    for (const auto& spec : scalars) {
      const double s = spec.lengthscales.front();
      const Vector xs = s * x, ys = s * y;  // keep pairs on the kernel's own length scale
      const auto b = kernel_derivatives(spec, xs, ys);
      worst_k = std::max(worst_k, rel(b.grad1, fd_vec([&](const Vector& z) { return kernel_eval(spec, z, ys); }, xs)));
      worst_k = std::max(worst_k, rel(b.grad2, fd_vec([&](const Vector& z) { return kernel_eval(spec, xs, z); }, ys)));
      double trace = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        trace += fd_vec([&](const Vector& z) { return kernel_derivatives(spec, z, ys).grad2(static_cast<Eigen::Index>(a)); },
                        xs)(static_cast<Eigen::Index>(a));
      }
      worst_k = std::max(worst_k, rel(b.trace12, trace));
    }
    const auto lin = normalized_linear_derivatives(1.0, x, y);
    worst_k = std::max(worst_k, rel(lin.grad1, fd_vec([&](const Vector& z) { return normalized_linear_eval(1.0, z, y); }, x)));
    worst_k = std::max(worst_k, rel(lin.grad2, fd_vec([&](const Vector& z) { return normalized_linear_eval(1.0, x, z); }, y)));

    const RecommendedKernelSpec rec{1.0, 0.5, ScalarKernelSpec::imq(1.0)};
    const auto blocks = recommended_eval(rec, x, y);
    const auto n = static_cast<Eigen::Index>(d);
    Vector div1 = Vector::Zero(n), div2 = Vector::Zero(n);
    double div12 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        div1(j) += fd_vec([&](const Vector& z) { return recommended_eval(rec, z, y).value(i, j); }, x)(i);
        div2(i) += fd_vec([&](const Vector& z) { return recommended_eval(rec, x, z).value(i, j); }, y)(j);
      }
      div12 += fd_vec([&](const Vector& z) { return recommended_eval(rec, z, y).div2(i); }, x)(i);
    }
    worst_k = std::max({worst_k, rel(blocks.div1, div1), rel(blocks.div2, div2), rel(blocks.div12, div12)});
  }
  out.detail << "kernel derivatives " << worst_k << "; ";
  out.check(worst_k <= 1e-5, "kernel derivatives vs FD");
}

// --- 5 ----------------------------------------------------------------------

std::vector<double> vgd_trace(std::size_t n, std::uint64_t seed, std::size_t steps) {
  const auto ref = ReferenceDistribution::standard_normal(2);
  const ZeroLoss zero;
  const auto kernel = ScalarKernelSpec::imq(1.0);
  RandomStream rng(seed);
  SamplerState state(EmpiricalMeasure(rng.normal_matrix(2, n, 3.0)));
  OptimizerSpec opt;
  opt.step_size = 0.05;
  std::vector<double> trace{kgd_v_squared(ref, zero, kernel, state.q).value_squared};
  for (std::size_t t = 0; t < steps; ++t) {
    vgd_step(state, ref, zero, kernel, opt);
    trace.push_back(kgd_v_squared(ref, zero, kernel, state.q).value_squared);
  }
  return trace;
}

void vgd_trend(Outcome& out) {
  const auto trace = vgd_trace(50, 505, 500);
  out.detail << "KGD_V^2 " << trace.front() << " -> " << trace.back() << "; ";
  out.check(trace.back() < 0.2 * trace.front(), "final < 0.2 x initial");

  auto time_average = [](std::size_t n) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto t = vgd_trace(n, 5000 + seed, 500);
      double avg = 0.0;
      for (double v : t) avg += v;
      total += avg / static_cast<double>(t.size());
    }
    return total / 5.0;
  };
  const double avg25 = time_average(25), avg100 = time_average(100);
  out.detail << "time-averaged KGD_V^2 n=25 " << avg25 << ", n=100 " << avg100 << "; ";
  out.check(avg100 <= avg25, "time average at n=100 <= n=25");
}

// --- 6 ----------------------------------------------------------------------

void stepsize_u_shape(Outcome& out) {
  experiments::StepsizeParams params;  // desk scale: N=300, n=50, T=200, 5 replicates
  params.seed = 606;
  const auto rows = experiments::mfnn_stepsize(params);
  double lo = NAN, mid = NAN, hi = NAN;
  for (const auto& r : rows) {
    if (std::abs(r.log10_eps + 6.0) < 1e-9) lo = r.median;
    if (std::abs(r.log10_eps + 3.5) < 1e-9) mid = r.median;
    if (std::abs(r.log10_eps + 1.0) < 1e-9) hi = r.median;
  }
  out.detail << "median KGD_V^2 at eps 1e-6: " << lo << ", 10^-3.5: " << mid << ", 1e-1: " << hi << "; ";
  out.check(mid < lo && mid < hi, "U-shape");
}

// --- 7 ----------------------------------------------------------------------

void greedy_sanity(Outcome& out) {
  const auto ref = ReferenceDistribution::standard_normal(1);
  const ZeroLoss zero;
  const auto kernel = ScalarKernelSpec::imq(1.0);
  const auto search = SearchSpec::grid(Vector::Constant(1, -3.0), Vector::Constant(1, 3.0), 61);
  std::optional<EmpiricalMeasure> q;
  double first_kgd = 0.0, first_x = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto r = greedy_next(q, ref, zero, kernel, search);
    q = q ? q->with_atom(r.point) : EmpiricalMeasure(Matrix(r.point));
    if (k == 0) {
      first_x = r.point(0);
      first_kgd = kgd_v_squared(ref, zero, kernel, *q).value_squared;
    }
  }
  const double last = kgd_v_squared(ref, zero, kernel, *q).value_squared;
  out.detail << "first point " << first_x << ", KGD_V^2 after 1: " << first_kgd << ", after 20: " << last << "; ";
  out.check(std::abs(first_x) <= 1e-3, "first point within 1e-3 of 0");
  out.check(last < first_kgd, "KGD after 20 < after 1");
}

// --- 8 ----------------------------------------------------------------------

void stein_algebra(Outcome& out) {
  RandomStream rng(808);
  double worst_matrix = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = 1 + static_cast<std::size_t>(k % 4);
    const RecommendedKernelSpec spec{0.5 + rng.uniform(), 0.0, ScalarKernelSpec::imq(0.5 + rng.uniform())};
    const Vector x = rng.normal_vector(d), y = rng.normal_vector(d), bx = rng.normal_vector(d), by = rng.normal_vector(d);
    const double m = matrix_stein_kernel_value(recommended_eval(spec, x, y), bx, by);
    auto bundle = kernel_derivatives(spec.base, x, y);
    bundle += normalized_linear_derivatives(spec.c, x, y);
    worst_matrix = std::max(worst_matrix, std::abs(m - stein_kernel_value(bundle, bx, by)) / std::max(1.0, std::abs(m)));
  }
  out.detail << "matrix vs scalar " << worst_matrix << "; ";
  out.check(worst_matrix <= 1e-12, "matrix path with s=0 equals scalar path");

  const auto mfnn = std::make_shared<MFNNLoss>(models::gen_mfnn_data(8, 50), 300.0);
  double worst_sym = 0.0, worst_eig = 0.0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t d = k % 2 ? 4 : 2;
    const auto ref = ReferenceDistribution::standard_normal(d);
    std::shared_ptr<VariationalLoss> loss;
    if (d == 4 && k % 4 == 1) loss = mfnn;
    else if (k % 3 == 0) loss = InteractionLoss::quadratic(0.5 + rng.uniform());
    else loss = std::make_shared<ZeroLoss>();
    const KernelSpec kernel = k % 5 == 0 ? KernelSpec(RecommendedKernelSpec{1.0, 0.5, ScalarKernelSpec::imq(1.0)})
                                         : KernelSpec(ScalarKernelSpec::imq(0.5 + rng.uniform()));
    const EmpiricalMeasure q(rng.normal_matrix(d, 10 + static_cast<std::size_t>(k), 2.0));
    const Matrix g = stein_gram(SteinKernelContext(ref, *loss, kernel, q));
    const double norm = g.norm();
    worst_sym = std::max(worst_sym, (g - g.transpose()).cwiseAbs().maxCoeff() / norm);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(g, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    worst_eig = std::max(worst_eig, -min_eig / norm);
  }
  out.detail << "Gram asymmetry " << worst_sym << ", most negative eigenvalue / |G| " << -worst_eig << "; ";
  out.check(worst_sym <= 1e-12, "Gram symmetry");
  out.check(worst_eig <= 1e-10, "Gram min eigenvalue >= -1e-10 |G|");
}

// --- 9 ----------------------------------------------------------------------

void pcuq_closed_forms(Outcome& out) {
  RandomStream rng(909);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double m = 3.0 * rng.normal(), mp = 3.0 * rng.normal(), sigma = 0.05 + 2.0 * rng.uniform();
    const double gh = oracles::gauss_hermite_2d(
        [](double a, double b) { return std::exp(-0.5 * (a - b) * (a - b)); }, m, mp, sigma, 60);
    worst = std::max(worst, std::abs(gh - gaussian_pair_overlap(m - mp, sigma)));
  }
  out.detail << "overlap vs Gauss-Hermite " << worst << "; ";
  out.check(worst <= 1e-8, "overlap closed form");

  const auto p = models::LVParams::data_generating();
  const Eigen::Vector2d eq(p.gamma / p.delta, p.alpha() / p.beta());
  const double rhs = models::lv_rhs(p, eq).cwiseAbs().maxCoeff();
  out.detail << "RHS at equilibrium " << rhs << "; ";
  out.check(rhs <= 1e-10, "LV equilibrium");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    void (*run)(Outcome&);
  };
  const std::vector<Criterion> criteria{
      {1, "KSD equivalence", 5.0, ksd_equivalence},
      {2, "identity-property rate", 60.0, identity_rate},
      {3, "CLT scaling", 300.0, clt_scaling},
      {4, "gradient gates", 120.0, gradient_gates},
      {5, "VGD descent trend", 120.0, vgd_trend},
      {6, "MFLD step-size U-shape", 600.0, stepsize_u_shape},
      {7, "greedy sanity", 30.0, greedy_sanity},
      {8, "Stein-kernel algebra", 30.0, stein_algebra},
      {9, "PCUQ closed forms", 30.0, pcuq_closed_forms},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    out.detail.precision(4);
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "[exception: " << e.what() << "] ";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.check(seconds < c.budget_seconds, "runtime budget");
    if (!out.pass) ++failures;
    std::printf("%s criterion %d (%s): %s(%.1f s of %.0f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.str().c_str(), seconds, c.budget_seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
