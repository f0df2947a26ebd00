// permix command-line front-end: sampling, demixing, weight estimation,
// hard-instance inspection, determinant verification, TV scans, and moment
// checks, with reproducible seeding and machine-readable reports.
//
// Exit codes: 0 success, 1 domain/input errors, 2 usage errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <permix/demix_mallows.hpp>
#include <permix/demix_noiseless.hpp>
#include <permix/io.hpp>
#include <permix/moments.hpp>
#include <permix/parallel.hpp>

#include <boost/rational.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;
using permix::Permutation;
using Rational = boost::rational<long long>;

constexpr std::uint64_t kDefaultSeed = 20240901;

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void emit(const json& report, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream out(output_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + output_path);
    out << report.dump(2) << "\n";
  }
}

void emit_text(const std::string& text, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(output_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + output_path);
    out << text;
  }
}

json timing_block(const Stopwatch& watch) {
  return json{{"timestamp", iso_timestamp()},
              {"wall_time_ms", watch.ms()},
              {"workers", permix::worker_count()}};
}

json perm_list(const std::vector<Permutation>& perms) {
  json arr = json::array();
  for (const auto& p : perms) arr.push_back(p.to_string());
  return arr;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
  return grid;
}

permix::DemixConfig demix_config(const std::string& mode, long long n_prime,
                                 std::uint64_t seed, int weight_grid,
                                 int prune_radius, bool no_prune,
                                 const std::string& backend) {
  permix::DemixConfig cfg;
  if (mode == "theoretical") cfg.mode = permix::DemixMode::kTheoretical;
  cfg.n_prime = n_prime;
  cfg.seed = seed;
  cfg.weight_grid = weight_grid;
  cfg.prune = !no_prune;
  cfg.prune_radius = prune_radius;
  if (backend == "exact") cfg.backend = permix::MarginalBackend::kExact;
  if (backend == "simulate") cfg.backend = permix::MarginalBackend::kSimulate;
  return cfg;
}

// ---- subcommand bodies ----

int run_sample(int n, double phi, const std::string& central, int count,
               std::uint64_t seed, const std::string& output) {
  Permutation pi =
      central.empty() ? Permutation::identity(n) : Permutation::parse(central);
  if (pi.size() != n)
    throw std::invalid_argument("central permutation size does not match --n");
  const permix::MallowsMixture mix =
      permix::MallowsMixture::single(permix::MallowsModel(pi, phi));
  const permix::SampleSet samples = permix::sample_many(mix, count, seed);
  std::ostringstream buf;
  permix::write_samples(buf, samples);
  emit_text(buf.str(), output);
  return 0;
}

int run_demix(const std::string& samples_path, int k, double phi, double gamma,
              const std::string& mode, long long n_prime, std::uint64_t seed,
              double delta, int weight_grid, int prune_radius, bool no_prune,
              const std::string& backend, const std::string& output) {
  const Stopwatch watch;
  const permix::SampleSet samples = permix::read_samples_file(samples_path);
  const auto cfg = demix_config(mode, n_prime, seed, weight_grid, prune_radius,
                                no_prune, backend);
  const auto result = permix::demix_mallows(samples, k, phi, gamma, delta, cfg);

  json queries = json::array();
  for (const auto& rec : result.records) {
    json r{{"J", rec.J.values()},
           {"memo_hit", rec.memo_hit}};
    if (!rec.memo_hit) {
      r["best_tv"] = rec.best_tv;
      r["tv_margin"] = rec.runner_up_tv - rec.best_tv;
    }
    queries.push_back(std::move(r));
  }
  json report{
      {"command", "demix"},
      {"config",
       {{"samples", samples_path},
        {"k", k},
        {"phi", phi},
        {"gamma", gamma},
        {"mode", mode},
        {"n_prime", n_prime},
        {"seed", seed},
        {"delta", delta},
        {"weight_grid", weight_grid},
        {"prune_radius", prune_radius},
        {"prune", !no_prune},
        {"backend", backend}}},
      {"result",
       {{"centrals", perm_list(result.centrals)},
        {"query_count", result.queries},
        {"query_budget_bound", permix::weak_query_bound(samples.n(), k)},
        {"queries", queries}}},
      {"timing", timing_block(watch)}};
  emit(report, output);
  return 0;
}

int run_weights(const std::string& samples_path, const std::string& centrals_path,
                double phi, double gamma, long long n_prime, int weight_grid,
                std::uint64_t seed, const std::string& backend,
                const std::string& output) {
  const Stopwatch watch;
  const permix::SampleSet samples = permix::read_samples_file(samples_path);
  std::vector<Permutation> centrals;
  {
    std::ifstream in(centrals_path);
    if (!in) throw std::runtime_error("cannot open for reading: " + centrals_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      centrals.push_back(Permutation::parse(line));
    }
  }
  if (centrals.empty())
    throw std::invalid_argument("centrals file holds no permutations");
  auto cfg = demix_config("practical", n_prime, seed, weight_grid, 0, false,
                          backend);
  const auto w = permix::estimate_weights(samples, phi, gamma, centrals, cfg);
  json report{{"command", "weights"},
              {"config",
               {{"samples", samples_path},
                {"centrals", centrals_path},
                {"phi", phi},
                {"gamma", gamma},
                {"n_prime", n_prime},
                {"weight_grid", weight_grid},
                {"seed", seed},
                {"backend", backend}}},
              {"result",
               {{"centrals", perm_list(centrals)}, {"weights", w}}},
              {"timing", timing_block(watch)}};
  emit(report, output);
  return 0;
}

int run_noiseless_demo(int n, int k, std::uint64_t seed,
                       const std::string& output) {
  const Stopwatch watch;
  permix::Rng rng{seed};

  // plant a mixture with weights on the 1/64 grid
  std::set<Permutation> support;
  long long space = 1;
  for (int i = 2; i <= n && space < k; ++i) space *= i;
  const int kk = static_cast<int>(std::min<long long>(k, space));
  while (static_cast<int>(support.size()) < kk)
    support.insert(permix::random_permutation(n, rng));
  std::vector<Permutation> perms(support.begin(), support.end());
  std::set<long long> cuts;
  while (static_cast<int>(cuts.size()) < kk - 1)
    cuts.insert(1 + static_cast<long long>(rng.uniform_int(63)));
  std::vector<long long> numer;
  long long prev = 0;
  for (long long c : cuts) {
    numer.push_back(c - prev);
    prev = c;
  }
  numer.push_back(64 - prev);

  std::vector<permix::DeltaMixture<Rational>::Component> comps;
  for (int i = 0; i < kk; ++i)
    comps.emplace_back(perms[static_cast<std::size_t>(i)],
                       Rational(numer[static_cast<std::size_t>(i)], 64));
  const permix::DeltaMixture<Rational> planted(std::move(comps));

  permix::TruthStrongOracle<Rational> strong(planted);
  const auto recovered_mixture = permix::demix_strong<Rational>(strong, n, k);

  permix::TruthWeakOracle weak(perms);
  const auto recovered_set = permix::insertion_demixing(weak, n, k);

  json planted_json = json::array();
  for (const auto& [p, w] : planted.components())
    planted_json.push_back(json{{"central", p.to_string()},
                                {"weight", boost::rational_cast<double>(w)},
                                {"weight_exact", std::to_string(w.numerator()) +
                                                     "/" +
                                                     std::to_string(w.denominator())}});
  json report{
      {"command", "noiseless-demo"},
      {"config", {{"n", n}, {"k", k}, {"seed", seed}}},
      {"result",
       {{"planted", planted_json},
        {"strong_oracle",
         {{"recovered", recovered_mixture == planted},
          {"query_count", strong.budget()},
          {"query_budget_bound", permix::strong_query_bound(n, k)}}},
        {"weak_oracle",
         {{"recovered", recovered_set == perms},
          {"recovered_set", perm_list(recovered_set)},
          {"query_count", weak.budget()},
          {"query_budget_bound", permix::weak_query_bound(n, k)}}}}},
      {"timing", timing_block(watch)}};
  emit(report, output);
  return 0;
}

int run_hard_instance(int m, int ell, const std::string& output) {
  const Stopwatch watch;
  const auto h = permix::hard_instance(m);
  json report{{"command", "hard-instance"},
              {"config", {{"m", m}, {"ell", ell}}},
              {"result",
               {{"n", h.n()},
                {"sigma1", perm_list(h.sigma1)},
                {"sigma2", perm_list(h.sigma2)},
                {"ell", ell},
                {"indistinguishable", permix::indistinguishable(h, ell)}}},
              {"timing", timing_block(watch)}};
  emit(report, output);
  return 0;
}

int run_verify_determinant(int r, const std::string& convention,
                           const std::string& output) {
  const Stopwatch watch;
  permix::LConvention conv = permix::LConvention::kSum;
  if (convention == "max") conv = permix::LConvention::kMax;
  if (convention == "min") conv = permix::LConvention::kMin;
  const auto rep = permix::check_L_invertible(r, conv);
  json report{{"command", "verify-determinant"},
              {"config", {{"r", r}, {"convention", convention}}},
              {"result",
               {{"invertible", rep.invertible},
                {"min_singular_value", rep.min_singular_value},
                {"block_min_singular_values", rep.block_min_singular},
                {"block_max_singular_values", rep.block_max_singular}}},
              {"timing", timing_block(watch)}};
  emit(report, output);
  return 0;
}

int run_tv_scan(int m, const std::string& grid_csv, bool drop_largest,
                const std::string& output) {
  const auto h = permix::hard_instance(m);
  const auto scan =
      permix::tv_slope_scan(h, parse_grid(grid_csv), drop_largest);
  std::ostringstream csv;
  csv << "eps,tv,log_eps,log_tv\n";
  csv.precision(17);
  for (std::size_t i = 0; i < scan.eps_grid.size(); ++i)
    csv << scan.eps_grid[i] << ',' << scan.tv_values[i] << ','
        << std::log(scan.eps_grid[i]) << ',' << std::log(scan.tv_values[i])
        << "\n";
  csv << "# fitted_slope," << scan.fitted_slope << "\n";
  emit_text(csv.str(), output);
  return 0;
}

int run_moments(int m, int max_ell, const std::string& output) {
  const Stopwatch watch;
  const auto h = permix::hard_instance(m);
  json report{{"command", "moments"},
              {"config", {{"m", m}, {"max_ell", max_ell}}},
              {"result",
               {{"n", h.n()},
                {"match_order", permix::moments_match(h, max_ell)}}},
              {"timing", timing_block(watch)}};
  emit(report, output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permix: learning mixtures of permutations from groups of "
               "pairwise comparisons"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string output;
  app.add_option("--output", output, "write the report to a file instead of stdout");

  // sample
  auto* sample = app.add_subcommand("sample", "draw from a Mallows model");
  int s_n = 4;
  double s_phi = 0.5;
  std::string s_central;
  int s_count = 1000;
  std::uint64_t s_seed = kDefaultSeed;
  sample->add_option("--n", s_n, "permutation size")->required();
  sample->add_option("--phi", s_phi, "noise parameter in (0,1)")->required();
  sample->add_option("--central", s_central,
                     "central permutation in display notation (default id)");
  sample->add_option("--count", s_count, "number of draws");
  sample->add_option("--seed", s_seed, "random seed");

  // demix
  auto* demix = app.add_subcommand("demix", "recover central permutations");
  std::string d_samples;
  int d_k = 2;
  double d_phi = 0.5, d_gamma = 0.0, d_delta = 0.05;
  std::string d_mode = "practical", d_backend = "auto";
  long long d_nprime = 20000;
  std::uint64_t d_seed = kDefaultSeed;
  int d_grid = 0, d_radius = 0;
  bool d_noprune = false;
  demix->add_option("--samples", d_samples, "sample file")->required();
  demix->add_option("--k", d_k, "number of components")->required();
  demix->add_option("--phi", d_phi, "noise parameter")->required();
  demix->add_option("--gamma", d_gamma, "minimum component weight (default 1/k)");
  demix->add_option("--mode", d_mode, "theoretical|practical")
      ->check(CLI::IsMember({"theoretical", "practical"}));
  demix->add_option("--n-prime", d_nprime, "simulation draws");
  demix->add_option("--seed", d_seed, "random seed");
  demix->add_option("--delta", d_delta, "failure probability");
  demix->add_option("--weight-grid", d_grid, "weight grid size L (0 = auto)");
  demix->add_option("--prune-radius", d_radius, "rank window radius (0 = auto)");
  demix->add_flag("--no-prune", d_noprune, "disable candidate pruning");
  demix->add_option("--backend", d_backend, "auto|exact|simulate")
      ->check(CLI::IsMember({"auto", "exact", "simulate"}));

  // weights
  auto* weights = app.add_subcommand("weights", "estimate mixture weights");
  std::string w_samples, w_centrals, w_backend = "auto";
  double w_phi = 0.5, w_gamma = 0.1;
  long long w_nprime = 0;
  int w_grid = 0;
  std::uint64_t w_seed = kDefaultSeed;
  weights->add_option("--samples", w_samples, "sample file")->required();
  weights->add_option("--centrals", w_centrals, "file of central permutations")
      ->required();
  weights->add_option("--phi", w_phi, "noise parameter")->required();
  weights->add_option("--gamma", w_gamma, "minimum component weight")->required();
  weights->add_option("--n-prime", w_nprime, "simulation draws (0 = auto)");
  weights->add_option("--weight-grid", w_grid, "grid size L (0 = ceil(k sqrt N))");
  weights->add_option("--seed", w_seed, "random seed");
  weights->add_option("--backend", w_backend, "auto|exact|simulate")
      ->check(CLI::IsMember({"auto", "exact", "simulate"}));

  // noiseless-demo
  auto* demo = app.add_subcommand("noiseless-demo",
                                  "plant a mixture and demix it with "
                                  "ground-truth oracles");
  int nd_n = 8, nd_k = 3;
  std::uint64_t nd_seed = kDefaultSeed;
  demo->add_option("--n", nd_n, "permutation size");
  demo->add_option("--k", nd_k, "number of components");
  demo->add_option("--seed", nd_seed, "random seed");

  // hard-instance
  auto* hard = app.add_subcommand("hard-instance",
                                  "emit the two indistinguishable families");
  int h_m = 2, h_ell = 3;
  hard->add_option("--m", h_m, "construction order")->required();
  hard->add_option("--ell", h_ell, "comparison arity to check")->required();

  // verify-determinant
  auto* verify = app.add_subcommand("verify-determinant",
                                    "certify invertibility of the insertion "
                                    "matrix blocks");
  int v_r = 2;
  std::string v_conv = "sum";
  verify->add_option("--r", v_r, "matrix order (blocks of size r!)")->required();
  verify->add_option("--convention", v_conv, "identity-entry convention")
      ->check(CLI::IsMember({"sum", "max", "min"}));

  // tv-scan
  auto* scan = app.add_subcommand("tv-scan",
                                  "exact TV of the hard-instance mixtures on "
                                  "an eps grid");
  int t_m = 2;
  std::string t_grid = "0.1,0.0316227766016838,0.01,0.00316227766016838,0.001";
  bool t_drop = false;
  scan->add_option("--m", t_m, "construction order")->required();
  scan->add_option("--eps-grid", t_grid, "comma-separated decreasing eps values");
  scan->add_flag("--drop-largest", t_drop, "exclude the largest eps from the fit");

  // moments
  auto* moments = app.add_subcommand("moments", "distance-moment match order");
  int mo_m = 2, mo_ell = 4;
  moments->add_option("--m", mo_m, "construction order")->required();
  moments->add_option("--max-ell", mo_ell, "highest order to test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*sample)
      return run_sample(s_n, s_phi, s_central, s_count, s_seed, output);
    if (*demix)
      return run_demix(d_samples, d_k, d_phi,
                       d_gamma > 0 ? d_gamma : 1.0 / d_k, d_mode, d_nprime,
                       d_seed, d_delta, d_grid, d_radius, d_noprune, d_backend,
                       output);
    if (*weights)
      return run_weights(w_samples, w_centrals, w_phi, w_gamma, w_nprime,
                         w_grid, w_seed, w_backend, output);
    if (*demo) return run_noiseless_demo(nd_n, nd_k, nd_seed, output);
    if (*hard) return run_hard_instance(h_m, h_ell, output);
    if (*verify) return run_verify_determinant(v_r, v_conv, output);
    if (*scan) return run_tv_scan(t_m, t_grid, t_drop, output);
    if (*moments) return run_moments(mo_m, mo_ell, output);
  } catch (const std::invalid_argument& e) {
    std::cerr << "domain: " << e.what() << "\n";
    return 1;
  } catch (const permix::feasibility_error& e) {
    std::cerr << "domain: " << e.what() << "\n";
    return 1;
  } catch (const permix::enumeration_cap_error& e) {
    std::cerr << "domain: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "input: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
