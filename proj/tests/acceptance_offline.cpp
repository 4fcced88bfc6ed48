// Offline acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "lpbias/audit.hpp"
#include "lpbias/bias_core.hpp"
#include "lpbias/error.hpp"
#include "lpbias/mock_backend.hpp"
#include "lpbias/stats/nmf.hpp"
#include "lpbias/stats/permutation.hpp"
#include "lpbias/stats/spearman.hpp"
#include "lpbias/topics.hpp"
#include "lpbias/weat.hpp"
#include "oracles.hpp"
#include "support.hpp"
// Last: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include "fake_mlm_server.hpp"

using namespace lpbias;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

#define CHECK(cond, why)            \
  do {                              \
    if (!(cond)) out.fail(why);     \
  } while (0)

std::vector<double> uniform_values(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

Outcome permutation_oracle() {
  Outcome out;
  std::mt19937_64 gen(101);
  std::size_t cases = 0;
  for (std::size_t na = 1; na <= 6; ++na) {
    for (std::size_t nb = 1; nb <= 6; ++nb) {
      for (int trial = 0; trial < 5; ++trial) {
        auto a = uniform_values(na, gen), b = uniform_values(nb, gen);
        auto exact = stats::permutation_pvalue(a, b, stats::mean_difference, {});
        double oracle_p = oracle::mean_diff_pvalue(a, b);
        CHECK(exact.exact, "expected exact enumeration");
        CHECK(exact.p_value == oracle_p, "exact p differs from oracle at " + std::to_string(na) + "+" +
                                             std::to_string(nb));
        stats::PermutationConfig mc{1, 10'000, 1000 + static_cast<std::uint64_t>(cases)};
        auto approx = stats::permutation_pvalue(a, b, stats::mean_difference, mc);
        double se = std::sqrt(oracle_p * (1.0 - oracle_p) / 10'000.0);
        CHECK(!approx.exact && approx.n_used == 10'000, "Monte Carlo path not taken");
        CHECK(std::abs(approx.p_value - oracle_p) <= 3 * se + 1.0 / 10'001.0,
              "Monte Carlo p outside 3 SE at " + std::to_string(na) + "+" + std::to_string(nb));
        ++cases;
      }
    }
  }
  out.detail = out.ok ? std::to_string(cases) + " cases, exact and Monte Carlo" : out.detail;
  return out;
}

MockConfig random_table(const Template& t, const std::vector<std::string>& targets,
                        const std::string& attribute, std::mt19937_64& gen) {
  MockConfig c;
  auto tgt = testing_support::word_index(t.text, "[TARGET]");
  auto att = testing_support::word_index(t.text, "[ATTRIBUTE]");
  auto prior = testing_support::sentence(t.text, "", "");
  auto shown = testing_support::sentence(t.text, "", attribute);
  c.predictions[prior][tgt] = testing_support::random_dist(targets, gen);
  c.predictions[prior][att] = testing_support::random_dist({attribute, "other"}, gen);
  c.predictions[shown][tgt] = testing_support::random_dist(targets, gen);
  return c;
}

Outcome log_prob_engine() {
  Outcome out;
  // Hand table: p_tgt(he) = 0.4, p_prior(he) = 0.2, p_tgt(she) = 0.1, p_prior(she) = 0.2.
  MockConfig c;
  c.predictions["[MASK] is a [MASK]"][0] = {{"he", 0.2}, {"she", 0.2}, {"it", 0.6}};
  c.predictions["[MASK] is a [MASK]"][3] = {{"nurse", 1.0}};
  c.predictions["[MASK] is a nurse"][0] = {{"he", 0.4}, {"she", 0.1}, {"it", 0.5}};
  MockBackend hand(c);
  Template t{"t", "[TARGET] is a [ATTRIBUTE]", Number::any};
  TargetWord he{"he", Number::singular}, she{"she", Number::singular};
  CHECK(std::abs(increased_log_probability(hand, t, he, "nurse").score - std::log(2.0)) <= 1e-12,
        "increased log probability of 'he' is not ln 2");
  CHECK(std::abs(increased_log_probability(hand, t, she, "nurse").score - std::log(0.5)) <= 1e-12,
        "increased log probability of 'she' is not ln 0.5");
  CHECK(std::abs(log_prob_bias_score(hand, t, he, she, "nurse") - std::log(4.0)) <= 1e-12,
        "bias score is not ln 4");

  std::mt19937_64 gen(202);
  const std::vector<Template> templates{{"a", "[TARGET] is a [ATTRIBUTE]", Number::any},
                                        {"b", "the [ATTRIBUTE] said [TARGET] left", Number::any},
                                        {"c", "[TARGET] likes [ATTRIBUTE] a lot", Number::any}};
  const std::vector<std::string> targets{"t1", "t2", "t3", "t4"};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& tm = templates[trial % templates.size()];
    auto cfg = random_table(tm, targets, "w", gen);
    MockBackend b(cfg);
    TargetWord x{"t1", Number::any}, y{"t2", Number::any};
    auto prior = testing_support::sentence(tm.text, "", "");
    auto shown = testing_support::sentence(tm.text, "", "w");
    auto tgt = testing_support::word_index(tm.text, "[TARGET]");
    double expect = std::log(cfg.predictions[shown][tgt]["t1"] / cfg.predictions[prior][tgt]["t1"]) -
                    std::log(cfg.predictions[shown][tgt]["t2"] / cfg.predictions[prior][tgt]["t2"]);
    double s = log_prob_bias_score(b, tm, x, y, "w");
    CHECK(std::abs(s - expect) <= 1e-12, "random table differs from hand ratio");
    CHECK(std::abs(s + log_prob_bias_score(b, tm, y, x, "w")) <= 1e-12, "antisymmetry violated");
    CHECK(log_prob_bias_score(b, tm, x, x, "w") == 0.0, "self score is not zero");
  }
  if (out.ok) out.detail = "hand values and 1000 random tables";
  return out;
}

EmbeddedWordSet vec_set(const std::string& label, const std::vector<std::vector<double>>& vs) {
  std::vector<std::pair<std::string, EmbeddingVector>> e;
  for (std::size_t i = 0; i < vs.size(); ++i) e.emplace_back(label + std::to_string(i), EmbeddingVector{vs[i], 0});
  return EmbeddedWordSet(label, std::move(e));
}

Outcome weat_oracle() {
  Outcome out;
  std::mt19937_64 gen(303);
  std::normal_distribution<double> nd;
  auto vecs = [&](std::size_t n) {
    std::vector<std::vector<double>> v(n, std::vector<double>(2));
    for (auto& x : v)
      for (auto& c : x) c = nd(gen);
    return v;
  };
  std::size_t cases = 0;
  for (std::size_t n = 2; n <= 4; ++n) {
    for (int trial = 0; trial < 50; ++trial, ++cases) {
      auto xv = vecs(n), yv = vecs(n), av = vecs(1 + trial % 4), bv = vecs(1 + (trial + 1) % 4);
      auto r = weat_test(vec_set("x", xv), vec_set("y", yv), vec_set("a", av), vec_set("b", bv), {});
      auto o = oracle::weat(xv, yv, av, bv);
      CHECK(std::abs(r.statistic - o.S) <= 1e-9, "S differs from oracle");
      CHECK(std::abs(r.effect_size - o.d) <= 1e-9, "d differs from oracle");
      CHECK(std::abs(r.p_value - o.p) <= 1e-9, "p differs from oracle");
      EmbeddingVector w{xv[0], 0}, w7{{xv[0][0] * 7.5, xv[0][1] * 7.5}, 0};
      auto a = vec_set("a", av), b = vec_set("b", bv);
      CHECK(std::abs(weat_association(w, a, b) + weat_association(w, b, a)) <= 1e-15,
            "s antisymmetry violated");
      CHECK(std::abs(weat_association(w, a, b) - weat_association(w7, a, b)) <= 1e-12,
            "cosine scale invariance violated");
    }
  }
  if (out.ok) out.detail = std::to_string(cases) + " toy cases, sizes 2+2 to 4+4";
  return out;
}

Outcome spearman_oracle() {
  Outcome out;
  std::mt19937_64 gen(404);
  std::uniform_int_distribution<int> small(0, 6), len(3, 40);
  std::normal_distribution<double> nd;
  std::size_t cases = 0;
  while (cases < 1000) {
    std::size_t n = static_cast<std::size_t>(len(gen));
    std::vector<double> x(n), y(n);
    bool ties = cases % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? small(gen) : nd(gen);
      y[i] = ties ? small(gen) : 0.5 * x[i] + nd(gen);
    }
    auto rx = oracle::ranks(x), ry = oracle::ranks(y);
    if (std::equal(rx.begin() + 1, rx.end(), rx.begin()) || std::equal(ry.begin() + 1, ry.end(), ry.begin()))
      continue;
    ++cases;
    auto c = stats::spearman(x, y);
    CHECK(std::abs(c.rho - oracle::spearman(x, y)) <= 1e-12, "rho differs from oracle");
    std::vector<double> fx(n);
    for (std::size_t i = 0; i < n; ++i) fx[i] = std::exp(x[i] / 3.0) * 2.0 - 1.0;
    CHECK(std::abs(stats::spearman(fx, y).rho - c.rho) <= 1e-12, "monotone invariance violated");
  }
  if (out.ok) out.detail = "1000 random inputs, half with ties";
  return out;
}

Outcome nmf_checks() {
  Outcome out;
  std::uniform_real_distribution<double> u;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 gen(seed);
    Eigen::MatrixXd v(20, 50);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = u(gen);
    auto r = stats::nmf(v, {5, 200, 0.0, seed});
    CHECK(r.error_trace.size() == 201, "expected 200 iterations");
    for (std::size_t i = 1; i < r.error_trace.size(); ++i)
      CHECK(r.error_trace[i] <= r.error_trace[i - 1] + 1e-10, "error increased");
    CHECK(r.w.minCoeff() >= 0.0 && r.h.minCoeff() >= 0.0, "negative factor entry");
  }
  Eigen::VectorXd a(8), b(12);
  a << 1, 2, 0.5, 3, 1.5, 0.2, 0.7, 2.2;
  b << 0.3, 1, 2, 0.7, 0.1, 1.2, 0.9, 2.5, 0.4, 0.6, 1.1, 0.05;
  Eigen::MatrixXd v = a * b.transpose();
  auto r = stats::nmf(v, {1, 2000, 0.0, 7});
  double err = stats::reconstruction_error(v, r.w, r.h);
  CHECK(err < 1e-6, "rank-1 error " + std::to_string(err));
  CHECK(r.w.minCoeff() >= 0.0 && r.h.minCoeff() >= 0.0, "negative factor entry");
  if (out.ok) {
    std::ostringstream os;
    os << "10 random 20x50 runs monotone; rank-1 error " << err;
    out.detail = os.str();
  }
  return out;
}

Outcome gpr_pipeline() {
  Outcome out;
  auto backend = MockBackend::load(testing_support::fixture("mock_gap.json"));
  auto data = load_gap(testing_support::fixture("gap_fixture.tsv"));
  CHECK(data.instances.size() == 10, "fixture did not parse to 10 rows");
  GprPipelineOptions o;
  o.stopwords = load_stopwords(testing_support::data_file("stopwords_en.txt"));
  o.nmf.k = 3;
  auto r1 = run_gpr_pipeline(backend, data.instances, o);
  auto r2 = run_gpr_pipeline(backend, data.instances, o);
  CHECK(r1.probabilities.size() == 10, "not every row was scored");
  for (std::size_t i = 0; i < r1.probabilities.size(); ++i) {
    const auto& p = r1.probabilities[i];
    CHECK(std::abs(p[0] + p[1] + p[2] - 1.0) <= 1e-6 && p[0] >= 0 && p[1] >= 0 && p[2] >= 0,
          "invalid simplex");
    CHECK(p == r2.probabilities[i], "not deterministic");
  }
  CHECK(r1.neither.p_value == r2.neither.p_value, "NEITHER p not deterministic");

  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> u;
  std::size_t cases = 0;
  for (std::size_t n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 40; ++trial, ++cases) {
      std::vector<double> p(n);
      std::vector<Gender> g(n);
      std::unique_ptr<bool[]> gold(new bool[n]());
      for (auto& v : p) v = trial % 3 == 0 ? std::round(u(gen) * 3) / 3 : u(gen);
      for (std::size_t i = 0; i < n; ++i) g[i] = i % 2 ? Gender::male : Gender::female;
      std::shuffle(g.begin(), g.end(), gen);
      std::vector<double> f, m;
      for (std::size_t i = 0; i < n; ++i) (g[i] == Gender::female ? f : m).push_back(p[i]);
      auto r = neither_gap_analysis(p, g, std::span<const bool>(gold.get(), n), {});
      CHECK(r.p_value == oracle::mean_diff_pvalue(f, m), "NEITHER gap p differs from the shuffle oracle");
    }
  }
  if (out.ok) out.detail = "10-row fixture deterministic; " + std::to_string(cases) + " toy oracle cases";
  return out;
}

int run_cli(const std::string& args) {
  std::string cmd = "'" + std::string(LPBIAS_CLI) + "' " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_replay() {
  Outcome out;
  auto dir = testing_support::temp_dir("acceptance-cli");
  const std::string backend = " --backend mock:" + testing_support::fixture("mock_career_family.json");
  std::string cats;
  for (const char* c : {"career_family", "math_arts"})
    cats += " --category " + testing_support::data_file(std::string("stimuli/") + c + ".json");
  auto a = dir / "a", b = dir / "b", c = dir / "c";
  CHECK(run_cli("probe" + backend + " --category " + testing_support::data_file("stimuli/career_family.json") +
                " --seed 11 --out " + a.string()) == 0,
        "probe run failed");
  CHECK(run_cli("replay " + (a / "manifest.json").string() + " --out " + b.string()) == 0, "replay failed");
  CHECK(run_cli("replay " + (a / "manifest.json").string() + " --out " + c.string()) == 0, "replay failed");
  for (const char* f : {"probe.json", "summary.csv"}) {
    auto ra = testing_support::slurp((a / f).string());
    CHECK(!ra.empty() && ra == testing_support::slurp((b / f).string()) &&
              ra == testing_support::slurp((c / f).string()),
          std::string(f) + " differs across replay");
  }

  auto bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run_cli("probe" + backend + " --category " + bad.string() + " --out " + (dir / "x").string()) == 1,
        "malformed category did not exit 1");
  CHECK(run_cli("probe" + backend + " --category " + (dir / "absent.json").string()) == 1,
        "missing category did not exit 1");
  CHECK(run_cli("probe --category x.json") == 1, "missing --backend did not exit 1");
  testing_support::FakeMlmServer server;
  CHECK(run_cli("weat --mode static --backend http:" + server.address() + cats) == 1,
        "static mode on a masked LM did not exit 1");
  CHECK(run_cli("probe --backend http:127.0.0.1:" + std::to_string(testing_support::closed_port()) + cats) == 2, "unreachable backend did not exit 2");
  std::ofstream(dir / "tampered.json") << "{}";
  CHECK(run_cli("replay " + (dir / "tampered.json").string()) == 1, "malformed manifest did not exit 1");
  if (out.ok) out.detail = "byte-identical reports; exit codes 0/1/2 as documented";
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "permutation oracle equivalence", permutation_oracle},
      {2, "log-prob engine correctness", log_prob_engine},
      {3, "WEAT oracle equivalence", weat_oracle},
      {4, "Spearman oracle and invariance", spearman_oracle},
      {5, "NMF monotonicity and rank-1 recovery", nmf_checks},
      {6, "GPR pipeline smoke", gpr_pipeline},
      {7, "CLI replay and exit codes", cli_replay},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.id == 1 && secs >= 60.0) o.fail("took " + std::to_string(secs) + " s");
    std::printf("%s criterion %d (%s): %s [%.2fs]\n", o.ok ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs);
    failures += !o.ok;
  }
  return failures == 0 ? 0 : 1;
}
