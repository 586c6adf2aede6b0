// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.
#include "canclust/clusim.hpp"
#include "canclust/golden.hpp"
#include "canclust/pipeline.hpp"

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

using namespace canclust;
using namespace canclust::testing;

namespace {

constexpr std::size_t kReplicates = 20;
constexpr double kLevel = 0.05;

struct Outcome {
  enum State { pass, fail, skip } state;
  std::string detail;
};

class Clock {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

RunConfig ward_config() {
  RunConfig config;
  config.linkages = {Linkage::ward};
  config.params = {-5.0, 0.9};
  config.significance = kLevel;
  return config;
}

SynthSpec replicate_spec(std::size_t replicate) {
  SynthSpec spec;  // 4 groups x 4 signals, 60 s at 10 Hz, rho 0.95
  spec.seed = 1 + replicate;
  return spec;
}

/// p-value of the Ward test for one seeded replicate of 12 benign + 3 attacked captures.
double attack_replicate(std::size_t replicate, const nlohmann::json& attack) {
  RunConfig config = ward_config();
  SynthPlan plan;
  plan.base = replicate_spec(replicate);
  plan.benign_count = 12;
  nlohmann::json doc = attack;
  doc["count"] = 3;
  plan.attacks = synth_plan_from_json({{"attacks", {doc}}}).attacks;
  config.synth = plan;
  return run(config).tests.at(0).test.p_value;
}

Outcome benign_pair_count() {
  Clock clock;
  SynthPlan plan;
  plan.benign_count = 12;
  RunConfig config = ward_config();
  config.synth = plan;
  const auto report = run(config);
  const auto n = report.baselines.at(0).benign.values.size();
  const double t = clock.seconds();
  return {n == 66 && t < 1.0 ? Outcome::pass : Outcome::fail,
          fmt("%.0f benign-benign values (want 66) in %.2f s (limit 1 s)", static_cast<double>(n), t)};
}

Outcome detection(const nlohmann::json& attack, std::size_t need) {
  Clock clock;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < kReplicates; ++i) hits += attack_replicate(i, attack) < kLevel;
  const double t = clock.seconds();
  return {hits >= need && t < 60.0 ? Outcome::pass : Outcome::fail,
          fmt("detected in %.0f of 20 replicates (need >= %.0f) in %.1f s", static_cast<double>(hits),
              static_cast<double>(need), t)};
}

Outcome type_one() {
  Clock clock;
  std::size_t rejections = 0;
  for (std::size_t i = 0; i < kReplicates; ++i) {
    RunConfig config = ward_config();
    SynthPlan plan;
    plan.base = replicate_spec(i);
    plan.benign_count = 15;
    config.synth = plan;
    auto all = load_captures(config);
    CaptureSet set;
    set.benign.assign(all.benign.begin(), all.benign.begin() + 12);
    set.attacks.push_back({"pseudo", {all.benign.begin() + 12, all.benign.end()}});
    rejections += analyze(set, config).tests.at(0).test.p_value < kLevel;
  }
  const double t = clock.seconds();
  return {rejections <= 3 && t < 60.0 ? Outcome::pass : Outcome::fail,
          fmt("rejected in %.0f of 20 null replicates (limit 3) in %.1f s", static_cast<double>(rejections), t)};
}

Outcome identity_symmetry() {
  Rng rng(5005);
  double worst_id = 0, worst_sym = 0;
  const HierarchyParams params;
  for (int i = 0; i < 100; ++i) {
    const auto n = 2 + static_cast<std::size_t>(rng.uniform() * 19);
    const auto a = random_dendrogram(rng, n);
    const auto b = random_dendrogram(rng, n);
    worst_id = std::max(worst_id, std::fabs(similarity(a, a, params).value - 1.0));
    worst_sym = std::max(worst_sym, std::fabs(similarity(a, b, params).value - similarity(b, a, params).value));
  }
  return {worst_id <= 1e-12 && worst_sym <= 1e-12 ? Outcome::pass : Outcome::fail,
          fmt("max |sim(D,D)-1| = %.2e, max |sim(A,B)-sim(B,A)| = %.2e (tol 1e-12)", worst_id, worst_sym)};
}

Outcome ppr_oracle() {
  Rng rng(6006);
  double worst = 0;
  std::size_t cases = 0;
  for (std::size_t n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto t = random_dendrogram(rng, n);
      const HierarchyParams params{rng.uniform(-6, 6), rng.uniform(0.05, 0.95)};
      const auto aff = affinity(t, params);
      const auto want = linear_solve_affinity(transition_matrix(t, params.r), params.alpha);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::fabs(aff.p(i, j) - want(i, j)));
      }
      ++cases;
    }
  }
  return {worst <= 1e-10 ? Outcome::pass : Outcome::fail,
          fmt("%.0f trees, max |power - solve| = %.2e (tol 1e-10)", static_cast<double>(cases), worst)};
}

Outcome mst_oracle() {
  Rng rng(7007);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 2 + static_cast<std::size_t>(rng.uniform() * 7);
    const auto d = random_dissimilarity(rng, n);
    const auto t = agglomerate(d, Linkage::single);
    const auto want = kruskal_weights(d.d);
    for (std::size_t k = 0; k < want.size(); ++k) mismatches += t.merges()[k].height != want[k];
  }
  return {mismatches == 0 ? Outcome::pass : Outcome::fail,
          fmt("100 matrices, %.0f height mismatches (exact equality)", static_cast<double>(mismatches))};
}

Outcome mann_whitney_oracle() {
  Rng rng(8008);
  double worst = 0;
  std::size_t u_violations = 0;
  for (std::size_t n1 = 1; n1 <= 8; ++n1) {
    for (std::size_t n2 = 1; n2 <= 8; ++n2) {
      for (int trial = 0; trial < 50; ++trial) {
        const auto [x, y] = tie_free_samples(rng, n1, n2, rng.uniform(-1, 1));
        worst = std::max(worst, std::fabs(mann_whitney(x, y).p_value - brute_force_mann_whitney(x, y).p_two_sided));
        u_violations += mann_whitney_u(x, y) + mann_whitney_u(y, x) != static_cast<double>(n1 * n2);
      }
    }
  }
  return {worst <= 1e-12 && u_violations == 0 ? Outcome::pass : Outcome::fail,
          fmt("3200 samples, max |exact - enumeration| = %.2e (tol 1e-12), %.0f U-sum violations", worst,
              static_cast<double>(u_violations))};
}

Outcome tree_band() {
  const std::vector<std::string> ids{"X1", "X2", "X3", "X4"};
  const Dendrogram a(ids, {{0, 1, 1, 0}, {4, 3, 2, 0}, {5, 2, 3, 0}}, Linkage::average);
  const Dendrogram b(ids, {{0, 1, 1, 0}, {4, 2, 2, 0}, {5, 3, 3, 0}}, Linkage::average);
  const Dendrogram c(ids, {{0, 2, 1, 0}, {1, 3, 2, 0}, {4, 5, 3, 0}}, Linkage::average);
  const HierarchyParams params{5.0, 0.9};
  const double ab = similarity(a, b, params).value;
  const double bc = similarity(b, c, params).value;
  const bool ok = std::fabs(ab - 0.82) <= 0.05 && std::fabs(bc - 0.76) <= 0.05;
  return {ok ? Outcome::pass : Outcome::fail, fmt("sim(a,b) = %.3f (0.82), sim(b,c) = %.3f (0.76), band 0.05", ab, bc)};
}

/// Expects $CANCLUST_ROAD_DIR/benign/*.csv and one subdirectory per attack kind.
Outcome road_reproduction() {
  const char* root = std::getenv("CANCLUST_ROAD_DIR");
  if (root == nullptr || !std::filesystem::is_directory(root)) {
    return {Outcome::skip, "CANCLUST_ROAD_DIR not set; external data required"};
  }
  RunConfig config;
  config.benign_paths = expand_inputs((std::filesystem::path(root) / "benign").string());
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_directory() || entry.path().filename() == "benign") continue;
    config.attack_groups.push_back({entry.path().filename().string(), expand_inputs(entry.path().string())});
  }
  std::sort(config.attack_groups.begin(), config.attack_groups.end(),
            [](const AttackGroupPaths& x, const AttackGroupPaths& y) { return x.kind < y.kind; });
  config.alignment = Alignment::intersect;
  const auto report = run(config);
  std::size_t ward_hits = 0, kinds = 0;
  bool average_misses_correlated = false;
  for (const auto& t : report.tests) {
    if (t.linkage == Linkage::ward) {
      ++kinds;
      ward_hits += t.test.significant;
    }
    if (t.linkage == Linkage::average && t.attack_kind.find("correlated") != std::string::npos) {
      average_misses_correlated = !t.test.significant;
    }
  }
  const bool ok = kinds > 0 && ward_hits == kinds && average_misses_correlated;
  return {ok ? Outcome::pass : Outcome::fail,
          fmt("ward flagged %.0f of %.0f kinds; average %s the correlated attack", static_cast<double>(ward_hits),
              static_cast<double>(kinds)) +
              (average_misses_correlated ? "missed" : "flagged")};
}

} // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  static const Criterion criteria[] = {
      {"1 benign pair count", benign_pair_count},
      {"2 synthetic correlated-break detection",
       [] {
         return detection({{"kind", "correlated_break"}, {"label", "correlated"}, {"target_group", 0}}, 18);
       }},
      {"3 type-I calibration", type_one},
      {"4 max-value attack detection",
       [] {
         return detection({{"kind", "max_value"},
                           {"label", "max_value"},
                           {"targets", {synth_signal_id(0, 0)}},
                           {"start_s", 20.0},
                           {"end_s", 40.0}},
                          15);
       }},
      {"5 similarity identity and symmetry", identity_symmetry},
      {"6 ppr oracle equivalence", ppr_oracle},
      {"7 single-linkage mst oracle", mst_oracle},
      {"8 mann-whitney exact oracle", mann_whitney_oracle},
      {"9 three-tree similarity band", tree_band},
      {"10 road reproduction (conditional)", road_reproduction},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o{Outcome::fail, {}};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.detail = std::string("threw: ") + e.what();
    }
    const char* tag = o.state == Outcome::pass ? "PASS" : o.state == Outcome::skip ? "SKIP" : "FAIL";
    std::printf("%s  %s: %s\n", tag, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.state == Outcome::fail;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
