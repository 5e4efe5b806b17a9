// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "carleman/report.hpp"
#include "carleman/study.hpp"

using namespace carleman;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(6);
  o << x;
  return o.str();
}

Outcome gap_facts() {
  bool ok = spectral_gap(circle_spectrum(10000)) == 1.0;
  std::string detail = "circle kappa = " + fmt(spectral_gap(circle_spectrum(10000)));
  for (int n = 3; n <= 8; ++n) {
    const double kappa = spectral_gap(sphere_spectrum(n, 10000));
    const double bound = sphere_gap_lower_bound(n);
    ok = ok && kappa >= bound;
    detail += "; n=" + std::to_string(n) + " kappa=" + fmt(kappa) + ">=" + fmt(bound);
  }
  return {ok, detail};
}

Outcome tau_table() {
  bool ok = tau_min_exact(3) == make_rational(8, 1) && tau_min_exact(4) == make_rational(6, 1) &&
            tau_min_exact(6) == make_rational(7, 1);
  for (int n = 3; n <= 1000; ++n) ok = ok && make_rational(5, 1) < tau_min_exact(n);
  return {ok, "tau(3)=8, tau(4)=6, tau(6)=7, tau(n)>5 for n=3..1000"};
}

Outcome multiplier_correctness() {
  double worst = 0.0;
  std::size_t envelope_failures = 0, points = 0;
  for (double lambda : {0.0, 1.0, 2.0, 5.0, 12.0})
    for (double tau : {8.0, 9.0, 20.0})
      for (double eta : {-3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0}) {
        const double m = multiplier_closed(lambda, tau, eta);
        worst = std::max(worst, std::abs(m - multiplier_quadrature(lambda, tau, eta, 1e3, 0.05)));
        if (lambda >= 1.0) {
          ++points;
          if (std::abs(m) > multiplier_decay_bound(lambda, tau, eta)) ++envelope_failures;
        }
      }
  return {worst <= 1e-6 && envelope_failures == 0,
          "max |closed - quadrature| = " + fmt(worst) + "; envelope failures " + std::to_string(envelope_failures) +
              "/" + std::to_string(points)};
}

Outcome projector_algebra() {
  const int band = 32;
  const auto grid = build_grid(band);
  const auto s = sphere_spectrum(3, band + 1);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_field = [&] {
    auto f = zero_field(band, grid);
    for (double& c : f.coeffs) c = normal(rng);
    return f;
  };
  // f passes through the grid so the check includes the transform
  const auto f0 = random_field(), g = random_field();
  const auto f = analyze(synthesize(f0, *grid), band, grid);
  double transform = 0.0;
  for (std::size_t i = 0; i < f.coeffs.size(); ++i)
    transform = std::max(transform, std::abs(f.coeffs[i] - f0.coeffs[i]));
  double idem = 0.0, adj = 0.0;
  std::vector<double> total(f.coeffs.size(), 0.0);
  for (int k = 0; k <= band; ++k) {
    const auto pf = project_cluster(f, k, s);
    const auto ppf = project_cluster(pf, k, s);
    for (std::size_t i = 0; i < pf.coeffs.size(); ++i) {
      idem = std::max(idem, std::abs(ppf.coeffs[i] - pf.coeffs[i]));
      total[i] += pf.coeffs[i];
    }
    adj = std::max(adj, std::abs(inner_product(pf, g) - inner_product(f, project_cluster(g, k, s))));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < total.size(); ++i) sum = std::max(sum, std::abs(total[i] - f.coeffs[i]));
  return {idem <= 1e-12 && adj <= 1e-12 && sum <= 1e-12 && transform <= 1e-12,
          "transform round trip " + fmt(transform) + ", idempotence " + fmt(idem) + ", self-adjointness " + fmt(adj) +
              ", sum-to-identity " + fmt(sum)};
}

Outcome cluster_growth() {
  StudyConfig c;
  c.k_max = 20;
  const auto r = pipelines::cluster_constants(c);
  const auto& fit = r.results["growth_fit"];
  return {r.all_passed(), "exponent " + fmt(fit["exponent"].get<double>()) + " <= " + fmt(1.0 / 6.0 + 0.1) +
                              "; Hoelder chain " + (r.assertions[0].passed ? "holds" : "fails")};
}

double round_trip_error(double tau, double h) {
  const auto spec = std::make_shared<const Spectrum>(sphere_spectrum(3, 25));
  const double sigma = std::min(0.25, distance_to_spectrum(tau, *spec));
  ProductField u(TimeGrid(6.0, h), spec, make_params(3, tau, sigma));
  double c = 1.0;
  for (int l : {0, 1, 2, 7, 8, 9, 19, 20, 21}) {
    std::vector<double> v(u.grid().size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double t = u.grid().node(i) - 0.1 * l;
      v[i] = c * std::exp(-t * t);
    }
    u.set_profile(sh_index(l, 0), std::move(v));
    c *= -0.8;
  }
  const auto back = crop_time(solve_conjugated(conjugated_apply(u, tau), tau), u.grid());
  return l2_norm(linear_combination(1.0, back, -1.0, u)) / l2_norm(u);
}

Outcome solver_round_trip() {
  bool ok = true;
  std::string detail;
  for (double tau : {8.0, 9.0, 20.0}) {
    const double coarse = round_trip_error(tau, 0.01), fine = round_trip_error(tau, 0.005);
    ok = ok && coarse <= 1e-4 && fine <= 2.5e-5;
    detail += (detail.empty() ? "" : "; ") + std::string("tau=") + fmt(tau) + " h=0.01: " + fmt(coarse) +
              ", h=0.005: " + fmt(fine) + ", order " + fmt(std::log2(coarse / fine));
  }
  return {ok, detail};
}

Outcome flaw_reproduction() {
  const auto taus = linear_grid(4.5, 20.0, 32);
  const auto ts = log_grid(1e-3, 1e2, 61);
  const std::vector<int> ns{3, 4, 5, 6, 7, 8};
  const auto scan = scan_flawed_inequality(taus, ts, ns);
  std::string detail = "no violation found";
  if (scan.counterexample) {
    const auto& ce = *scan.counterexample;
    detail = "violation at tau=" + fmt(ce.parameters[0].second) + " t=" + fmt(ce.parameters[1].second) +
             " n=" + fmt(ce.parameters[2].second) + " (lhs " + fmt(ce.lhs) + " > rhs " + fmt(ce.rhs) + ")";
  }
  // the location named as typical for the flaw
  const auto typical = check_flawed_inequality(10.0, 1.0, 3);
  detail += "; tau=10 t=1 n=3 excess " + fmt(-typical.diagnostic("relative_margin"));
  detail += "; premise failures " + std::to_string(scan.premise_failures) + "/" + std::to_string(scan.premise_points);
  return {scan.counterexample.has_value() && scan.premise_failures == 0 && scan.premise_points > 0, detail};
}

Outcome proof_step_boundedness() {
  const double pp = 6.0;
  const auto c = proof_constants(pp);
  const auto dts = log_grid(1e-3, 10.0, 50);
  std::size_t violations = 0, guard_failures = 0;
  double sup_sum = 0.0, sup_I = 0.0, sup_J = 0.0;
  for (double tau : {8.0, 12.0, 16.0, 20.0, 40.0})
    for (double dt : dts) {
      const auto s = kernel_sum_bound(tau, dt, pp);
      sup_sum = std::max(sup_sum, s.diagnostic("normalized"));
      if (s.diagnostic("normalized") > c.g_sum) ++violations;
      const auto j = integral_J_bound(tau, dt, pp);
      sup_J = std::max(sup_J, j.diagnostic("normalized"));
      if (j.diagnostic("normalized") > std::max(c.j_small, c.j_large)) ++violations;
      if (dt <= split_point(tau, pp)) {
        const auto [i, jj] = integral_bounds(tau, dt, pp);
        sup_I = std::max(sup_I, i.diagnostic("normalized"));
        if (i.diagnostic("normalized") > c.small_gap) ++violations;
      } else {
        try {
          integral_I_bound(tau, dt, pp);
          ++guard_failures;
        } catch (const regime_error&) {
        }
      }
    }
  return {violations == 0 && guard_failures == 0,
          "sup normalized: sum " + fmt(sup_sum) + " <= " + fmt(c.g_sum) + ", I " + fmt(sup_I) + " <= " +
              fmt(c.small_gap) + ", J " + fmt(sup_J) + " <= " + fmt(std::max(c.j_small, c.j_large)) +
              "; violations " + std::to_string(violations) + ", guard failures " + std::to_string(guard_failures)};
}

Outcome carleman_scaling() {
  StudyConfig c;
  c.sigma_list = {0.5, 0.25, 0.1, 0.05};
  const auto r = pipelines::carleman_sweep(c);
  std::string detail = "c_fit " + fmt(r.results["c_fit"].get<double>());
  if (!r.results["fit"]["exponent"].is_null())
    detail += ", fitted exponent " + fmt(r.results["fit"]["exponent"].get<double>()) + " (envelope -1/3)";
  for (const auto& a : r.assertions) detail += "; " + a.name + (a.passed ? ": yes" : ": NO");
  return {r.all_passed(), detail};
}

Outcome hls_invariance() {
  const std::vector<HlsFunction> family{box_function()};
  const std::vector<double> dilations{0.5, 1.0, 2.0};
  const auto r = hls_probe(1.2, family, dilations);
  std::string detail = "ratios";
  for (const auto& row : r.rows) detail += " " + fmt(row.ratio);
  detail += "; spread " + fmt(r.max_dilation_spread) + "; kernel exponent " + fmt(r.kernel_exponent);
  return {r.max_dilation_spread <= 0.03 && std::abs(r.kernel_exponent - 1.0 / 3.0) < 1e-15, detail};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "carleman_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  const auto config = root / "study.ini";
  std::ofstream(config) << "[study]\nmanifold=sphere\nn=3\nj_max=200\ntrials=4\nseed=7\n\n"
                           "[parameters]\ntau_values=8,9,20\nsigma_list=0.5,0.25,0.1,0.05\n";
  std::size_t compared = 0, differing = 0;
  std::string detail;
  for (const auto& command : known_commands()) {
    for (int run = 0; run < 2; ++run) {
      const auto out = root / (command + std::to_string(run));
      const std::string cmd = std::string("\"") + CARLEMAN_LAB + "\" " + command + " --config \"" + config.string() +
                              "\" --out \"" + out.string() + "\" > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (status != 0) detail += command + " exited with status " + std::to_string(status) + "; ";
    }
    for (const auto& entry : std::filesystem::directory_iterator(root / (command + "0"))) {
      ++compared;
      const auto twin = root / (command + "1") / entry.path().filename();
      if (!std::filesystem::exists(twin) || slurp(entry.path()) != slurp(twin)) {
        ++differing;
        detail += entry.path().filename().string() + " differs; ";
      }
    }
  }
  std::filesystem::remove_all(root);
  detail += std::to_string(compared) + " files compared across " + std::to_string(known_commands().size()) +
            " commands, " + std::to_string(differing) + " differ";
  return {differing == 0 && compared >= 3 * known_commands().size() && detail.find("status") == std::string::npos,
          detail};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "spectral gap facts", 1.0, gap_facts},
      {2, "tau(n) table", 1.0, tau_table},
      {3, "multiplier closed form vs quadrature", 10.0, multiplier_correctness},
      {4, "cluster projector algebra at band 32", 10.0, projector_algebra},
      {5, "cluster constant growth", 120.0, cluster_growth},
      {6, "solver round trip", 120.0, solver_round_trip},
      {7, "flawed comparison reproduced", 10.0, flaw_reproduction},
      {8, "proof-step boundedness", 30.0, proof_step_boundedness},
      {9, "Carleman constant scaling in sigma", 600.0, carleman_scaling},
      {10, "HLS dilation invariance", 10.0, hls_invariance},
      {11, "CLI determinism", 600.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = o.passed && in_budget;
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s (%s) [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                o.detail.c_str(), secs, c.budget_seconds, in_budget ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
