// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is the
// number of failures. Pass criterion names to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../common/oracles.hpp"
#include "../common/tempdir.hpp"
#include "nlcms/cascade.hpp"
#include "nlcms/channel_models.hpp"
#include "nlcms/elm_core.hpp"
#include "nlcms/experiment.hpp"
#include "nlcms/nl_frontend.hpp"

using namespace nlcms;
using namespace nlcms::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

CMatrix random_cmatrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = sample_cn(rng, 1.0);
  return m;
}

std::vector<std::uint64_t> seeds(std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

ExperimentConfig sweep_base(std::vector<std::string> datasets) {
  ExperimentConfig c;
  c.datasets = std::move(datasets);
  c.data_root = NLCMS_DATA_DIR;
  c.seeds = seeds(10);
  c.record_wallclock = false;
  return c;
}

// Mean test accuracy keyed by (variant, n_r, K label); error rows count as failures.
struct Means {
  std::map<std::tuple<std::string, std::size_t, std::string>, double> acc;
  std::size_t errors = 0;

  double at(const std::string& v, std::size_t n, const std::string& k = "rayleigh") const {
    return acc.at({v, n, k});
  }
};

Means mean_test_accuracy(const std::vector<ExperimentRecord>& records) {
  std::map<std::tuple<std::string, std::size_t, std::string>, std::pair<double, std::size_t>> sums;
  Means m;
  for (const auto& r : records) {
    const std::string k = r.ricean_k ? fmt("%g", *r.ricean_k) : "rayleigh";
    auto& [s, n] = sums[{r.variant, r.n_r, k}];
    if (!r.error.empty()) {
      ++m.errors;
      ++n;
      continue;
    }
    s += r.test_accuracy;
    ++n;
  }
  for (const auto& [key, v] : sums) m.acc[key] = v.first / static_cast<double>(v.second);
  return m;
}

// Strictly increasing with at most one adjacent pair allowed to be flat or to
// dip by no more than `slack`.
Outcome trend(const std::vector<double>& means, const std::vector<std::size_t>& n_r, double floor) {
  std::string detail = "mean test accuracy";
  for (std::size_t i = 0; i < means.size(); ++i) detail += fmt(" N_r=%zu:%.4f", n_r[i], means[i]);
  std::size_t relaxed = 0;
  bool ok = true;
  for (std::size_t i = 1; i < means.size(); ++i) {
    if (means[i] > means[i - 1]) continue;
    if (means[i - 1] - means[i] <= 0.005 && ++relaxed <= 1) continue;
    ok = false;
  }
  const bool above = means.back() >= floor;
  detail += fmt("; trend %s, final %s %.2f", ok ? "ok" : "broken", above ? ">=" : "<", floor);
  return {ok && above, detail};
}

Outcome activation_oracle() {
  const double b = 0.7;
  const auto F = [b](double u) { return std::max(0.0, u - b); };
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double v = b * (1.01 + (10.0 - 1.01) * i / 99.0);
    const double exact = amam_exact(v, b);
    worst = std::max(worst, std::abs(amam_quadrature(F, v) - exact) / exact);
  }
  return {worst < 1e-6, fmt("max relative error %.3e over 100 points (bar 1e-6)", worst)};
}

Outcome ridge_correctness() {
  Rng rng(derive_seed(0, {hash_string("ridge")}));
  std::uniform_int_distribution<int> dim(4, 120);
  std::uniform_real_distribution<double> log_ridge(-6.0, 0.0);
  double worst_ne = 0.0, worst_pd = 0.0;
  std::size_t wide = 0, tall = 0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index d = dim(rng), n = dim(rng);
    (d < n ? wide : tall)++;
    const CMatrix G = random_cmatrix(d, n, rng);
    const CVector z = random_cmatrix(d, 1, rng).col(0);
    const double ridge = std::pow(10.0, log_ridge(rng));
    const CVector primal = ridge_solve(G, z, ridge, SolverPath::Primal).w_star;
    const CVector dual = ridge_solve(G, z, ridge, SolverPath::Dual).w_star;
    const CVector w = ridge_solve(G, z, ridge).w_star;
    const CVector rhs = G.adjoint() * z;
    worst_ne = std::max(worst_ne, (G.adjoint() * (G * w) + ridge * w - rhs).norm() / rhs.norm());
    worst_pd = std::max(worst_pd, (primal - dual).norm() / dual.norm());
  }
  return {worst_ne < 1e-8 && worst_pd < 1e-8,
          fmt("normal-equation residual %.3e, primal/dual gap %.3e (bar 1e-8); %zu D<N_r, %zu D>=N_r",
              worst_ne, worst_pd, wide, tall)};
}

Outcome interpolation() {
  // D = N_r = N_t = 64: square Rayleigh channel at unit pathloss, features in [0, 1].
  const std::size_t n = 64, n_t = 64;
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(seed, {hash_string("interp")}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RMatrix X(n, n_t);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = u(rng);
    CVector z(n);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = u(rng) < 0.5 ? 1.0 : 0.0;
    const CMatrix H = sample_rayleigh(n, n_t, 0.0, rng);
    const BiasVector bias = sample_bias(n, H.norm(), n_t, rng);
    const ActivationMatrix G = build_activation_matrix(X, H, bias, ActivationMode::Approximate);
    const CVector w = ridge_solve(G.G, z, 1e-10).w_star;
    const double rel = (z - G.G * w).norm() / z.norm();
    worst = std::max(worst, rel);
    ok += rel < 1e-6;
  }
  return {ok == 10, fmt("%zu/10 seeds below 1e-6 relative training error (worst %.3e)", ok, worst)};
}

Outcome gradient_fidelity() {
  Rng rng(derive_seed(0, {hash_string("gradient")}));
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto ch = random_channels(8, 4, {16, 16}, rng);
    const CascadeState s = random_state(ch, rng);
    const IdealWeights target{random_cmatrix(8, 1, rng).col(0), 1e-6, SolverPath::Primal};
    const auto grad = objective_and_gradient(target, s, ch).second;
    worst = std::max(worst, max_relative_error(flatten(grad),
                                               finite_difference_gradient(target.w_star, s, ch)));
  }
  return {worst < 1e-4, fmt("max relative error %.3e over 10 instances (bar 1e-4)", worst)};
}

Outcome pgd_sanity() {
  Rng rng(derive_seed(0, {hash_string("pgd")}));
  bool monotone = true;
  for (int t = 0; t < 5; ++t) {
    const auto ch = random_channels(16, 4, {32, 32, 32}, rng);
    const IdealWeights target{random_cmatrix(16, 1, rng).col(0), 1e-6, SolverPath::Primal};
    PgdOptions opts;
    opts.max_iters = 400;
    const auto trace = pgd_fit(target, ch, opts, rng).second;
    for (std::size_t i = 1; i < trace.objective_per_iter.size(); ++i)
      monotone &= trace.objective_per_iter[i] <= trace.objective_per_iter[i - 1];
  }
  const auto ch = random_channels(16, 4, {32, 32}, rng);
  const CascadeState s0 = random_state(ch, rng);
  const IdealWeights reachable{s0.rho * cascade_transfer(s0, ch), 1e-6, SolverPath::Primal};
  const auto trace = pgd_fit(reachable, ch, PgdOptions{}, rng, s0).second;
  const double first = trace.objective_per_iter.front();
  return {monotone && first == 0.0,
          fmt("best-so-far monotone: %s; fixed-point objective at init %.3e",
              monotone ? "yes" : "no", first)};
}

Outcome wbcd_trend() {
  ExperimentConfig c = sweep_base({"wbcd"});
  c.variants = {Variant::IdealWeights};
  const Means m = mean_test_accuracy(run(c));
  std::vector<double> means;
  for (auto n : c.n_r) means.push_back(m.at("ideal", n));
  Outcome o = trend(means, c.n_r, 0.90);
  if (m.errors) o = {false, o.detail + fmt("; %zu error rows", m.errors)};
  return o;
}

Outcome ota_gap() {
  ExperimentConfig c = sweep_base({"wbcd"});
  c.n_r = {64, 256};
  c.num_layers = 3;
  c.layer_size = 256;
  const auto records = run(c);
  const Means m = mean_test_accuracy(records);
  bool ok = m.errors == 0;
  std::string detail;
  for (auto n : c.n_r) {
    const double gap = m.at("ideal", n) - m.at("ota", n);
    ok &= gap <= 0.03;
    double obj = 0.0;
    for (const auto& r : records)
      if (r.variant == "ota" && r.n_r == n) obj += r.pgd_final_objective / 10.0;
    detail += fmt("N_r=%zu ideal %.4f ota %.4f gap %+.2f pts (mean residual %.3g); ", n,
                  m.at("ideal", n), m.at("ota", n), 100.0 * gap, obj);
  }
  return {ok, detail + "bar 3 pts"};
}

Outcome ricean_trend() {
  ExperimentConfig c = sweep_base({"wbcd"});
  c.variants = {Variant::IdealWeights};
  c.n_r = {256};
  c.ricean_k = {0.0, 100.0, std::nullopt};
  const Means m = mean_test_accuracy(run(c));
  const double k0 = m.at("ideal", 256, "0"), k100 = m.at("ideal", 256, "100");
  const double rayleigh = m.at("ideal", 256);
  return {m.errors == 0 && k0 - k100 >= 0.05,
          fmt("K=0 %.4f, K=100 %.4f, drop %.2f pts (bar 5); Rayleigh %.4f", k0, k100,
              100.0 * (k0 - k100), rayleigh)};
}

Outcome determinism() {
  ExperimentConfig c = sweep_base({"wbcd"});
  c.n_r = {16, 64};
  c.ricean_k = {std::nullopt, 10.0};
  c.snr_db = {5.0, 15.0};
  c.seeds = {0, 1, 2};
  c.num_layers = 2;
  c.layer_size = 64;
  c.pgd.max_iters = 200;
  TempDir dir;
  write_csv(run(c), dir.path() / "a.csv");
  c.workers = 3;
  write_csv(run(c), dir.path() / "b.csv");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(dir.path() / "a.csv"), b = slurp(dir.path() / "b.csv");
  const std::size_t rows = static_cast<std::size_t>(std::count(a.begin(), a.end(), '\n')) - 1;
  return {!a.empty() && a == b,
          fmt("%zu rows, reruns (1 and 3 workers) %s", rows, a == b ? "byte-identical" : "differ")};
}

Outcome mnist_trend() {
  ExperimentConfig c = sweep_base({"mnist"});
  c.variants = {Variant::IdealWeights};
  const Means m = mean_test_accuracy(run(c));
  std::vector<double> means;
  for (auto n : c.n_r) means.push_back(m.at("ideal", n));
  Outcome o = trend(means, c.n_r, 0.80);
  if (m.errors) o = {false, o.detail + fmt("; %zu error rows", m.errors)};
  return o;
}

const std::vector<Criterion> kCriteria = {
    {"activation-oracle", 1.0, activation_oracle},
    {"ridge-correctness", 10.0, ridge_correctness},
    {"interpolation", 5.0, interpolation},
    {"gradient-fidelity", 30.0, gradient_fidelity},
    {"pgd-sanity", 5.0, pgd_sanity},
    {"wbcd-trend", 600.0, wbcd_trend},
    {"ota-gap", 1200.0, ota_gap},
    {"ricean-trend", 900.0, ricean_trend},
    {"determinism", 600.0, determinism},
    {"mnist-trend", 1200.0, mnist_trend},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.size() == 1 && (wanted[0] == "--list" || wanted[0] == "-l")) {
    for (const auto& c : kCriteria) std::printf("%s\n", c.name.c_str());
    return 0;
  }
  int failures = 0;
  std::size_t ran = 0;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    const auto& c = kCriteria[i];
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget_s;
    std::printf("%s %zu %s: %s [%.2f s, budget %.0f s%s]\n", o.pass && in_budget ? "PASS" : "FAIL",
                i + 1, c.name.c_str(), o.detail.c_str(), secs, c.budget_s,
                in_budget ? "" : ", over budget");
    std::fflush(stdout);
    failures += !(o.pass && in_budget);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion matched; use --list\n");
    return 2;
  }
  return failures;
}
