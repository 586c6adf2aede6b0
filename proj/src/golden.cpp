#include "canclust/golden.hpp"

#include "canclust/clusim.hpp"
#include "canclust/error.hpp"
#include "canclust/hierarchy.hpp"
#include "canclust/ingest.hpp"
#include "canclust/pipeline.hpp"
#include "canclust/stats.hpp"
#include "canclust/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace canclust {
namespace fs = std::filesystem;

namespace {

// Figure values are read off a drawing, hence the loose band.
constexpr double kFigureTolerance = 0.05;
constexpr double kFormulaTolerance = 1e-9;

constexpr double kTreeR = 5.0;
constexpr double kTreeAlpha = 0.9;
constexpr double kTreeAB = 0.82;
constexpr double kTreeBC = 0.76;

const HierarchyParams kFixtureParams{-5.0, 0.9};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing fixture " + path.filename().string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string matrix_csv(const std::vector<std::string>& ids, const Matrix& m) {
  std::ostringstream s;
  write_matrix_csv(s, ids, m);
  return s.str();
}

std::pair<std::vector<std::string>, Matrix> read_matrix_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw DataError(path.filename().string() + ": empty matrix");
  const std::vector<std::string> ids(rows[0].begin() + 1, rows[0].end());
  const auto n = ids.size();
  if (rows.size() != n + 1) throw DataError(path.filename().string() + ": expected " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i + 1].size() != n + 1) throw DataError(path.filename().string() + ": ragged row");
    for (std::size_t j = 0; j < n; ++j) m(i, j) = std::stod(rows[i + 1][j + 1]);
  }
  return {ids, m};
}

/// Empty when equal within tol, else the first difference.
std::string json_diff(const nlohmann::json& got, const nlohmann::json& want, double tol, const std::string& at) {
  if (got.is_number() && want.is_number()) {
    const double g = got.get<double>();
    const double w = want.get<double>();
    if (std::fabs(g - w) <= tol) return {};
    std::ostringstream s;
    s << at << ": got " << format_double(g) << ", expected " << format_double(w);
    return s.str();
  }
  if (got.type() != want.type()) return at + ": type differs";
  if (got.is_array()) {
    if (got.size() != want.size()) return at + ": length " + std::to_string(got.size()) + " vs " + std::to_string(want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (auto d = json_diff(got[i], want[i], tol, at + "[" + std::to_string(i) + "]"); !d.empty()) return d;
    }
    return {};
  }
  if (got.is_object()) {
    for (auto it = want.begin(); it != want.end(); ++it) {
      if (!got.contains(it.key())) return at + "." + it.key() + ": missing";
      if (auto d = json_diff(got[it.key()], it.value(), tol, at + "." + it.key()); !d.empty()) return d;
    }
    for (auto it = got.begin(); it != got.end(); ++it) {
      if (!want.contains(it.key())) return at + "." + it.key() + ": unexpected";
    }
    return {};
  }
  return got == want ? std::string{} : at + ": value differs";
}

std::string matrix_diff(const std::vector<std::string>& ids, const Matrix& got, const fs::path& expected, double tol) {
  const auto [want_ids, want] = read_matrix_csv(expected);
  if (want_ids != ids) return "element ids differ";
  double worst = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) worst = std::max(worst, std::fabs(got(i, j) - want(i, j)));
  }
  if (worst <= tol) return {};
  return "max deviation " + format_double(worst);
}

// ---- inputs ----------------------------------------------------------------

/// Four series: X2 stays close to X1, X3 drifts further, X4 is mostly unrelated.
SignalCapture nested_series() {
  SignalCapture c;
  c.capture_id = "nested";
  const char* names[] = {"X1", "X2", "X3", "X4"};
  for (const auto* n : names) c.signals.push_back({n, {}, {}});
  for (int k = 0; k < 200; ++k) {
    const double t = k / 10.0;
    const double base = std::sin(0.5 * t);
    const double v[] = {base, base + 0.15 * std::sin(2.3 * t), base + 0.6 * std::sin(2.3 * t) + 0.4 * std::cos(1.7 * t),
                        0.3 * base + std::cos(1.1 * t)};
    for (std::size_t i = 0; i < 4; ++i) {
      c.signals[i].timestamps.push_back(t);
      c.signals[i].values.push_back(v[i]);
    }
  }
  return c;
}

std::vector<std::string> four_leaves() { return {"X1", "X2", "X3", "X4"}; }

// Heights only carry the order of merges; the hop-depth weighting ignores them.
Dendrogram tree_a() { return {four_leaves(), {{0, 1, 1, 0}, {4, 3, 2, 0}, {5, 2, 3, 0}}, Linkage::average}; }
Dendrogram tree_b() { return {four_leaves(), {{0, 1, 1, 0}, {4, 2, 2, 0}, {5, 3, 3, 0}}, Linkage::average}; }
Dendrogram tree_c() { return {four_leaves(), {{0, 2, 1, 0}, {1, 3, 2, 0}, {4, 5, 3, 0}}, Linkage::average}; }

/// ((A,B),C) and ((D,E),F) joined at the root.
Dendrogram projection_tree() {
  return {{"A", "B", "C", "D", "E", "F"},
          {{0, 1, 0.1, 0}, {3, 4, 0.2, 0}, {6, 2, 0.3, 0}, {7, 5, 0.4, 0}, {8, 9, 0.9, 0}},
          Linkage::complete};
}

nlohmann::json report_plan() {
  return {{"base", {{"duration_s", 30.0}, {"seed", 7}}},
          {"benign_count", 3},
          {"attacks", {{{"kind", "correlated_break"}, {"label", "correlated"}, {"count", 2}, {"target_group", 0}}}}};
}

RunConfig report_config(const nlohmann::json& plan) {
  RunConfig config;
  config.synth = synth_plan_from_json(plan);
  config.linkages = {Linkage::complete, Linkage::ward};
  return config;
}

// ---- oracles ---------------------------------------------------------------

/// Two-sided exact Mann-Whitney p by listing every split of the pooled sample.
double brute_force_mw_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto n = pooled.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(x.size()), true);
  const double u_obs = mann_whitney_u(x, y);
  std::size_t total = 0, le = 0, ge = 0;
  do {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? a : b).push_back(pooled[i]);
    const double u = mann_whitney_u(a, b);
    ++total;
    le += u <= u_obs;
    ge += u >= u_obs;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  const double p = 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
  return std::min(1.0, p);
}

/// Solves p (I - alpha W) = (1 - alpha) e_i for every i by Gaussian elimination.
Matrix solved_affinity(const Matrix& w, double alpha) {
  const auto n = w.rows();
  Matrix out(n, n);
  for (std::size_t focal = 0; focal < n; ++focal) {
    // Transposed system: (I - alpha W)^T p^T = (1 - alpha) e_focal.
    Matrix a(n, n + 1);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) a(r, c) = (r == c ? 1.0 : 0.0) - alpha * w(c, r);
      a(r, n) = r == focal ? 1.0 - alpha : 0.0;
    }
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t pivot = col;
      for (std::size_t r = col + 1; r < n; ++r) {
        if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
      }
      for (std::size_t c = 0; c <= n; ++c) std::swap(a(col, c), a(pivot, c));
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col) continue;
        const double f = a(r, col) / a(col, col);
        for (std::size_t c = col; c <= n; ++c) a(r, c) -= f * a(col, c);
      }
    }
    for (std::size_t j = 0; j < n; ++j) out(focal, j) = a(j, n) / a(j, j);
  }
  return out;
}

// ---- cases -----------------------------------------------------------------

struct CaseDef {
  GoldenCase spec;
  std::function<void(const fs::path&)> write_inputs;
  std::function<void(const fs::path&)> write_expected;
  /// Empty string on success.
  std::function<std::string(const fs::path&, const GoldenCase&)> check;
};

Dendrogram nested_dendrogram(const fs::path& dir) {
  const auto capture = parse_capture(dir / "nested_series.csv", CsvFormat::wide);
  return agglomerate(to_dissimilarity(pearson_matrix(resample(capture))), Linkage::single);
}

nlohmann::json similarity_records(const nlohmann::json& doc) {
  std::vector<NamedDendrogram> trees;
  for (const auto& t : doc.at("trees")) trees.push_back({t.at("capture_id"), dendrogram_from_json(t.at("dendrogram"))});
  const HierarchyParams params{doc.at("r").get<double>(), doc.at("alpha").get<double>()};
  const auto sample = benign_pairs(trees, params, Alignment::strict);
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < sample.values.size(); ++i) {
    out.push_back({{"capture_a", sample.pair_ids[i].first},
                   {"capture_b", sample.pair_ids[i].second},
                   {"similarity", sample.values[i]},
                   {"aligned", sample.aligned[i]}});
  }
  return out;
}

std::string jsonl(const nlohmann::json& records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

nlohmann::json read_jsonl(const fs::path& path) {
  std::istringstream in(read_text(path));
  nlohmann::json out = nlohmann::json::array();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

std::vector<CaseDef> case_defs() {
  std::vector<CaseDef> defs;

  defs.push_back({{"nested_merge_order", {"nested_series.csv"}, "nested_dendrogram.json", kFormulaTolerance},
                  [](const fs::path& d) { write_text(d / "nested_series.csv", to_wide_csv(nested_series())); },
                  [](const fs::path& d) { write_text(d / "nested_dendrogram.json", dump(to_json(nested_dendrogram(d)))); },
                  [](const fs::path& d, const GoldenCase& c) {
                    return json_diff(to_json(nested_dendrogram(d)), read_json(d / c.expected), c.tolerance, "");
                  }});

  defs.push_back(
      {{"three_tree_similarity", {"tree_a.json", "tree_b.json", "tree_c.json"}, "three_tree_similarity.json", kFigureTolerance},
       [](const fs::path& d) {
         write_text(d / "tree_a.json", dump(to_json(tree_a())));
         write_text(d / "tree_b.json", dump(to_json(tree_b())));
         write_text(d / "tree_c.json", dump(to_json(tree_c())));
       },
       [](const fs::path& d) {
         write_text(d / "three_tree_similarity.json",
                    dump({{"r", kTreeR}, {"alpha", kTreeAlpha}, {"a_b", kTreeAB}, {"b_c", kTreeBC}}));
       },
       [](const fs::path& d, const GoldenCase& c) {
         const auto want = read_json(d / c.expected);
         const HierarchyParams params{want.at("r").get<double>(), want.at("alpha").get<double>()};
         const auto a = dendrogram_from_json(read_json(d / "tree_a.json"));
         const auto b = dendrogram_from_json(read_json(d / "tree_b.json"));
         const auto cc = dendrogram_from_json(read_json(d / "tree_c.json"));
         const nlohmann::json got = {{"r", params.r},
                                     {"alpha", params.alpha},
                                     {"a_b", similarity(a, b, params).value},
                                     {"b_c", similarity(b, cc, params).value}};
         return json_diff(got, want, c.tolerance, "");
       }});

  defs.push_back({{"mann_whitney_exact_3_3", {"mw_3_3.json"}, "mw_3_3_expected.json", kFormulaTolerance},
                  [](const fs::path& d) { write_text(d / "mw_3_3.json", dump({{"x", {1, 2, 3}}, {"y", {4, 5, 6}}})); },
                  [](const fs::path& d) {
                    const auto in = read_json(d / "mw_3_3.json");
                    const auto x = in.at("x").get<std::vector<double>>();
                    const auto y = in.at("y").get<std::vector<double>>();
                    write_text(d / "mw_3_3_expected.json",
                               dump({{"u", mann_whitney_u(x, y)}, {"p_value", brute_force_mw_p(x, y)}, {"method", "exact"}}));
                  },
                  [](const fs::path& d, const GoldenCase& c) {
                    const auto in = read_json(d / "mw_3_3.json");
                    const auto r = mann_whitney(in.at("x").get<std::vector<double>>(), in.at("y").get<std::vector<double>>());
                    const nlohmann::json got = {{"u", r.u_statistic}, {"p_value", r.p_value}, {"method", to_string(r.method)}};
                    return json_diff(got, read_json(d / c.expected), c.tolerance, "");
                  }});

  defs.push_back({{"projection_transition", {"projection_tree.json"}, "projection_w.csv", kFormulaTolerance},
                  [](const fs::path& d) { write_text(d / "projection_tree.json", dump(to_json(projection_tree()))); },
                  [](const fs::path& d) {
                    const auto tree = dendrogram_from_json(read_json(d / "projection_tree.json"));
                    write_text(d / "projection_w.csv", matrix_csv(tree.leaf_ids(), transition_matrix(tree, kFixtureParams.r)));
                  },
                  [](const fs::path& d, const GoldenCase& c) {
                    const auto tree = dendrogram_from_json(read_json(d / "projection_tree.json"));
                    return matrix_diff(tree.leaf_ids(), transition_matrix(tree, kFixtureParams.r), d / c.expected,
                                       c.tolerance);
                  }});

  defs.push_back({{"affinity_linear_solve", {"projection_tree.json"}, "affinity.csv", kFormulaTolerance},
                  [](const fs::path&) {},
                  [](const fs::path& d) {
                    const auto tree = dendrogram_from_json(read_json(d / "projection_tree.json"));
                    const auto w = transition_matrix(tree, kFixtureParams.r);
                    write_text(d / "affinity.csv", matrix_csv(tree.leaf_ids(), solved_affinity(w, kFixtureParams.alpha)));
                  },
                  [](const fs::path& d, const GoldenCase& c) {
                    const auto tree = dendrogram_from_json(read_json(d / "projection_tree.json"));
                    const auto aff = affinity(tree, kFixtureParams);
                    return matrix_diff(aff.element_ids, aff.p, d / c.expected, c.tolerance);
                  }});

  defs.push_back({{"similarity_records", {"synth_trees.json"}, "similarity_records.jsonl", kFormulaTolerance},
                  [](const fs::path& d) {
                    SynthSpec spec;
                    spec.duration_s = 20.0;
                    nlohmann::json trees = nlohmann::json::array();
                    for (std::uint64_t i = 0; i < 4; ++i) {
                      spec.seed = 100 + i;
                      const auto capture = generate(spec, "synth_" + std::to_string(i));
                      const auto tree =
                          agglomerate(to_dissimilarity(pearson_matrix(resample(capture))), Linkage::ward);
                      trees.push_back({{"capture_id", capture.capture_id}, {"dendrogram", to_json(tree)}});
                    }
                    write_text(d / "synth_trees.json",
                               dump({{"r", kFixtureParams.r}, {"alpha", kFixtureParams.alpha}, {"trees", trees}}));
                  },
                  [](const fs::path& d) {
                    write_text(d / "similarity_records.jsonl", jsonl(similarity_records(read_json(d / "synth_trees.json"))));
                  },
                  [](const fs::path& d, const GoldenCase& c) {
                    return json_diff(similarity_records(read_json(d / "synth_trees.json")), read_jsonl(d / c.expected),
                                     c.tolerance, "");
                  }});

  defs.push_back({{"report_snapshot", {"report_plan.json"}, "report_snapshot.json", kFormulaTolerance},
                  [](const fs::path& d) { write_text(d / "report_plan.json", dump(report_plan())); },
                  [](const fs::path& d) {
                    const auto config = report_config(read_json(d / "report_plan.json"));
                    write_text(d / "report_snapshot.json", dump(to_json(run(config))));
                  },
                  [](const fs::path& d, const GoldenCase& c) {
                    const auto config = report_config(read_json(d / "report_plan.json"));
                    return json_diff(to_json(run(config)), read_json(d / c.expected), c.tolerance, "");
                  }});
  return defs;
}

} // namespace

std::vector<GoldenCase> read_golden_cases(const fs::path& dir) {
  const auto doc = read_json(dir / "cases.json");
  std::vector<GoldenCase> out;
  try {
    for (const auto& c : doc.at("cases")) {
      out.push_back({c.at("name"), c.at("inputs").get<std::vector<std::string>>(), c.at("expected"),
                     c.at("tolerance").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("cases.json: ") + e.what());
  }
  return out;
}

std::vector<GoldenOutcome> verify_goldens(const fs::path& dir) {
  std::vector<GoldenOutcome> out;
  std::vector<GoldenCase> cases;
  try {
    cases = read_golden_cases(dir);
  } catch (const Error& e) {
    out.push_back({"cases.json", false, e.what()});
    return out;
  }
  const auto defs = case_defs();
  for (const auto& def : defs) {
    const auto it = std::find_if(cases.begin(), cases.end(), [&](const GoldenCase& c) { return c.name == def.spec.name; });
    if (it == cases.end()) {
      out.push_back({def.spec.name, false, "not listed in cases.json"});
      continue;
    }
    GoldenOutcome outcome{it->name, false, {}};
    try {
      for (const auto& input : it->inputs) {
        if (!fs::exists(dir / input)) throw DataError("missing fixture " + input);
      }
      outcome.detail = def.check(dir, *it);
      outcome.passed = outcome.detail.empty();
    } catch (const std::exception& e) {
      outcome.detail = e.what();
    }
    out.push_back(std::move(outcome));
  }
  for (const auto& c : cases) {
    if (std::none_of(defs.begin(), defs.end(), [&](const CaseDef& d) { return d.spec.name == c.name; })) {
      out.push_back({c.name, false, "unknown case"});
    }
  }
  return out;
}

void regenerate_goldens(const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& def : case_defs()) {
    def.write_inputs(dir);
    def.write_expected(dir);
    cases.push_back({{"name", def.spec.name},
                     {"inputs", def.spec.inputs},
                     {"expected", def.spec.expected},
                     {"tolerance", def.spec.tolerance}});
  }
  write_text(dir / "cases.json", dump({{"schema", 1}, {"cases", cases}}));
}

} // namespace canclust
