// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

#include "it2lss/bench_pendulum.hpp"
#include "it2lss/dissipativity.hpp"
#include "it2lss/io.hpp"
#include "oracles.hpp"

namespace {

using namespace it2lss;
using testing::Rng;
namespace oracle = testing::oracle;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  std::printf("criterion %2d %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", name.c_str(),
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Matrix eye(Index n) { return Matrix::Identity(n, n); }

// Dense grid at ten times the build density, bounds taken from the stored
// corner tables; the best band counts for each index.
double dense_envelope_margin(const LargeScaleSystem& sys, const FouPartition& part) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sp = part.at(i);
    const auto& box = sp.box();
    std::vector<std::size_t> per_dim;
    for (auto c : box.cells_per_dim) {
      per_dim.push_back(c * (part.options.samples_per_cell - 1) * 10 + 1);
    }
    for (std::size_t a = 0; a < per_dim[0]; ++a) {
      for (std::size_t b = 0; b < per_dim[1]; ++b) {
        Vector x(2);
        x << box.lower[0] + (box.upper[0] - box.lower[0]) * double(a) / double(per_dim[0] - 1),
            box.lower[1] + (box.upper[1] - box.lower[1]) * double(b) / double(per_dim[1] - 1);
        const Matrix h = combined_grades(sys, i, x);
        for (Index l = 0; l < h.rows(); ++l) {
          for (Index j = 0; j < h.cols(); ++j) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t z = 0; z <= part.tau(); ++z) {
              const auto gb = reconstruct_bounds(part, i, x, l, j, z);
              best = std::max(best, std::min(h(l, j) - gb.lower, gb.upper - h(l, j)));
            }
            worst = std::min(worst, best);
          }
        }
      }
    }
  }
  return worst;
}

// Library sides match the hand sides and the library agrees the bound holds.
bool agrees(const BoundPair& b, double lhs, double rhs) {
  const double tol = 1e-12 * std::max(1.0, std::abs(rhs));
  return std::abs(b.lhs - lhs) <= tol && std::abs(b.rhs - rhs) <= tol && b.holds(tol);
}

int shell(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  pendulum::BenchOptions opts;
  const auto t0 = clock::now();
  std::optional<pendulum::BenchResult> bench;
  std::string bench_error;
  try {
    bench = pendulum::run_benchmark_scenario(opts);
  } catch (const std::exception& e) {
    bench_error = e.what();
  }
  const double wall = std::chrono::duration<double>(clock::now() - t0).count();
  auto need_bench = [&]() -> const pendulum::BenchResult& {
    if (!bench) throw std::runtime_error("benchmark failed: " + bench_error);
    return *bench;
  };

  report(1, "pendulum gamma_min in (0, 1.5] under 60 s", [&] {
    const auto& b = need_bench();
    const double g = b.gamma.gamma_min;
    const double ref = b.report["gamma"]["reference"].get<double>();
    return Outcome{g > 0.0 && g <= 1.5 && wall < 60.0 && ref == 0.333,
                   fmt2("gamma_min=%.6g vs reference 0.333, wall %.2f s", g, wall)};
  });

  report(2, "open-loop growth over 5 s exceeds 10", [&] {
    const auto& b = need_bench();
    return Outcome{b.open_loop_growth > 10.0, fmt("growth=%.6g", b.open_loop_growth)};
  });

  report(3, "closed-loop ||x(20)|| <= 1e-2", [&] {
    const auto& b = need_bench();
    const bool full = std::abs(b.closed_loop.t.back() - opts.simulation.T) < 1e-9;
    const bool ok = !b.closed_loop.diverged && full && b.closed_loop_final <= 1e-2;
    return Outcome{ok, fmt("||x(20)||=%.6g", b.closed_loop_final)};
  });

  report(4, "attenuation ratio <= gamma_min (1 + 1e-3)", [&] {
    const auto& b = need_bench();
    // Independent ratio: trapezoid energies straight from the trajectory.
    const auto& tr = b.from_rest;
    double ez = 0.0, ew = 0.0;
    for (std::size_t k = 1; k < tr.t.size(); ++k) {
      const double dt = tr.t[k] - tr.t[k - 1];
      for (std::size_t i = 0; i < tr.z.size(); ++i) {
        const auto kk = static_cast<Index>(k);
        ez += 0.5 * dt * (tr.z[i].row(kk - 1).squaredNorm() + tr.z[i].row(kk).squaredNorm());
        ew += 0.5 * dt * (tr.w[i].row(kk - 1).squaredNorm() + tr.w[i].row(kk).squaredNorm());
      }
    }
    const double ratio = std::sqrt(ez / ew);
    const bool ok = ratio <= b.gamma.gamma_min * (1.0 + 1e-3) &&
                    std::abs(ratio - b.attenuation) <= 1e-9 * std::max(1.0, ratio);
    return Outcome{ok, fmt2("ratio=%.6g, gamma_min=%.6g", ratio, b.gamma.gamma_min)};
  });

  report(5, "Lyapunov decrease on 20 seeded states", [&] {
    const auto& b = need_bench();
    const bool ok = b.lyapunov.runs == 20 && b.lyapunov.violations == 0 && !b.lyapunov.diverged;
    return Outcome{ok, std::to_string(b.lyapunov.runs - b.lyapunov.violations) + "/" +
                           std::to_string(b.lyapunov.runs) + " strictly decreasing, " +
                           fmt("worst step ratio %.6g", b.lyapunov.worst_step_ratio)};
  });

  report(6, "quadratic form equals hand expansion, 150 trials", [&] {
    Rng rng(6);
    double worst = 0.0;
    for (int t = 0; t < 150; ++t) {
      const auto in = oracle::random_instance(rng);
      std::vector<Vector> x, w;
      for (std::size_t i = 0; i < in.sys.size(); ++i) {
        x.push_back(rng.vector(2));
        w.push_back(rng.vector(2));
      }
      const double got = oracle::assembled_form(in, x, w);
      const double expect = oracle::hand_expansion(in, x, w);
      worst = std::max(worst, std::abs(got - expect) / std::max(1.0, std::abs(expect)));
    }
    return Outcome{worst <= 1e-8, fmt("worst relative error %.3g", worst)};
  });

  report(7, "Schur lift negativity equivalence, 200 trials", [&] {
    Rng rng(7);
    int disagreements = 0, negative = 0;
    double lift = 0.0;
    for (int t = 0; t < 200; ++t) {
      const auto s = oracle::schur_trial(rng);
      disagreements += s.quad_negative != s.lifted_negative;
      negative += s.quad_negative;
      lift = std::max({lift, s.lift_error, s.quad_error});
    }
    return Outcome{disagreements == 0 && lift < 1e-12 && negative > 0 && negative < 200,
                   std::to_string(disagreements) + " disagreements, " + std::to_string(negative) +
                       " negative, " + fmt("max entry error %.3g", lift)};
  });

  report(8, "FOU envelope on 10x audit grid, margin >= -1e-8", [&] {
    const auto sys = pendulum::build_system(opts.params, true);
    const auto part = build_partition(sys, pendulum::operating_box(opts.params, opts.cells_per_dim),
                                      opts.partition);
    const double lib = audit_envelope(sys, part, 10).min_margin;
    const double dense = dense_envelope_margin(sys, part);
    return Outcome{lib >= -1e-8 && dense >= -1e-8,
                   fmt2("cell audit %.3g, dense grid %.3g", lib, dense)};
  });

  report(9, "grade normalization over 1000 states", [&] {
    Rng rng(9);
    const auto pend = pendulum::build_system(opts.params, true);
    const auto box = pendulum::operating_box(opts.params, opts.cells_per_dim);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const auto rnd = testing::random_system(rng);
      Vector xp(2);
      xp << rng.uniform(box.lower[0], box.upper[0]), rng.uniform(box.lower[1], box.upper[1]);
      const Vector xr = rng.vector(2);
      for (std::size_t i = 0; i < 2; ++i) {
        for (const auto& [sys, x] : {std::pair{&pend, xp}, std::pair{&rnd, xr}}) {
          const Matrix h = combined_grades(*sys, i, x);
          const Vector m = controller_grades(sys->controller(i), x);
          const Vector w = plant_grades(sys->subsystem(i), x);
          double s = 0.0;
          for (Index l = 0; l < h.rows(); ++l)
            for (Index j = 0; j < h.cols(); ++j) s += h(l, j);
          worst = std::max({worst, std::abs(s - 1.0), std::abs(m.sum() - 1.0),
                            std::abs(w.sum() - 1.0)});
          if (h.minCoeff() < 0.0) worst = std::max(worst, 1.0);
        }
      }
    }
    return Outcome{worst <= 1e-9, fmt("max |sum - 1| = %.3g", worst)};
  });

  report(10, "performance presets and admissibility validator", [&] {
    int mismatches = 0;
    auto same = [&](const Matrix& a, const Matrix& b) { mismatches += !(a == b); };
    const double g = 0.7;
    const auto hinf = presets::h_infinity(g, 2, 3);
    same(hinf.phi, Matrix::Zero(2, 2));
    same(hinf.psi1, -eye(2));
    same(hinf.psi2, Matrix::Zero(2, 3));
    same(hinf.psi3, g * g * eye(3));
    const auto e2p = presets::energy_to_peak(g, 2, 3);
    same(e2p.phi, eye(2));
    same(e2p.psi1, Matrix::Zero(2, 2));
    same(e2p.psi2, Matrix::Zero(2, 3));
    same(e2p.psi3, g * g * eye(3));
    const auto pas = presets::passivity(g, 2, 2);
    same(pas.phi, Matrix::Zero(2, 2));
    same(pas.psi1, Matrix::Zero(2, 2));
    same(pas.psi2, eye(2));
    same(pas.psi3, g * eye(2));
    const auto vsp = presets::very_strict_passivity(0.25, 0.5, 2, 2);
    same(vsp.phi, Matrix::Zero(2, 2));
    same(vsp.psi1, -0.25 * eye(2));
    same(vsp.psi2, eye(2));
    same(vsp.psi3, -0.5 * eye(2));
    Matrix q(2, 2), s(2, 1), r(1, 1);
    q << -2.0, 0.5, 0.5, -1.0;
    s << 1.0, -1.0;
    r << 3.0;
    const auto qsr = presets::qsr(q, s, r, 0.75);
    same(qsr.phi, Matrix::Zero(2, 2));
    same(qsr.psi1, q);
    same(qsr.psi2, s);
    same(qsr.psi3, (r - 0.75 * eye(1)));
    for (const auto* p : {&hinf, &e2p, &pas, &vsp, &qsr}) mismatches += p->rho != 0.0;

    // Energy-to-peak with a nonzero feedthrough must be flagged, and only
    // on the feedthrough item.
    Rng rng(10);
    const auto sys = testing::random_system(rng);
    const auto rep = validate_admissibility(presets::energy_to_peak(1.0, 1, 1), sys);
    bool flagged = !rep.passed();
    for (const auto& it : rep.items) flagged = flagged && (it.passed == (it.item != 3));
    const bool clean = validate_admissibility(presets::energy_to_peak(1.0, 1, 1),
                                              pendulum::build_system())
                           .passed();
    return Outcome{mismatches == 0 && flagged && clean,
                   std::to_string(mismatches) + " entry mismatches, violation " +
                       (flagged ? "flagged" : "missed")};
  });

  report(11, "Jensen and Young bounds, 1000 trials each", [&] {
    Rng rng(11);
    int violations = 0, disagreements = 0, equality_misses = 0;
    for (int t = 0; t < 1000; ++t) {
      const std::size_t d = 1 + rng.index(6);
      const Index n = 1 + static_cast<Index>(rng.index(4));
      const Matrix f = rng.matrix(n, n);
      const Matrix w = f * f.transpose();
      std::vector<Vector> xs;
      for (std::size_t k = 0; k < d; ++k) xs.push_back(rng.vector(n, 3.0));
      const auto [lhs, rhs] = oracle::jensen_sides(xs, w);
      const auto b = jensen_bound(xs, w);
      violations += lhs > rhs + 1e-12 * std::max(1.0, rhs);
      disagreements += !agrees(b, lhs, rhs);
    }
    for (int t = 0; t < 1000; ++t) {
      const Index n = 1 + static_cast<Index>(rng.index(5));
      const Vector x = rng.vector(n, 4.0), y = rng.vector(n, 4.0);
      const double kappa = std::exp(rng.uniform(-4.0, 4.0));
      const auto [lhs, rhs] = oracle::young_sides(x, y, kappa);
      const auto b = young_bound(x, y, kappa);
      violations += lhs > rhs + 1e-12 * std::max(1.0, rhs);
      disagreements += !agrees(b, lhs, rhs);
    }
    // Equality cases on integer data, where the arithmetic is exact.
    for (int t = 0; t < 100; ++t) {
      Vector x(3);
      for (Index r = 0; r < 3; ++r) x(r) = std::round(rng.uniform(-5.0, 5.0));
      const auto jb = jensen_bound(std::vector<Vector>(1 + rng.index(5), x), eye(3));
      const auto yb = young_bound(x, x / 2.0, 2.0);
      equality_misses += (jb.lhs != jb.rhs) + (yb.lhs != yb.rhs);
    }
    return Outcome{violations == 0 && disagreements == 0 && equality_misses == 0,
                   std::to_string(violations) + " violations, " + std::to_string(disagreements) +
                       " oracle disagreements, " + std::to_string(equality_misses) +
                       " inexact equality cases"};
  });

  report(12, "disturbance-free variant synthesizes and decreases V", [&] {
    const auto& b = need_bench();
    const auto& l = b.lyapunov_disturbance_free;
    const bool ok = b.disturbance_free.has_value() && l.runs == 20 && l.violations == 0 &&
                    !l.diverged;
    return Outcome{ok, std::to_string(l.runs - l.violations) + "/" + std::to_string(l.runs) +
                           " strictly decreasing, " + fmt("worst step ratio %.6g", l.worst_step_ratio)};
  });

  report(13, "repeated bench runs give byte-identical reports", [&] {
    const fs::path root = fs::temp_directory_path() / "it2lss_acceptance";
    fs::remove_all(root);
    const std::string base = std::string(IT2LSS_CLI) + " bench pendulum --config " +
                             IT2LSS_CONFIG_DIR + "/pendulum.json --seed 42 --out ";
    const int a = shell(base + (root / "a").string());
    const int c = shell(base + (root / "b").string());
    if (a != 0 || c != 0) {
      return Outcome{false, "exit codes " + std::to_string(a) + ", " + std::to_string(c)};
    }
    const auto ra = io::read_text(root / "a" / "report.json");
    const auto rb = io::read_text(root / "b" / "report.json");
    return Outcome{ra == rb && !ra.empty(), std::to_string(ra.size()) + " bytes, " +
                                                (ra == rb ? "identical" : "different")};
  });

  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
