#include "canclust/pipeline.hpp"

#include "canclust/error.hpp"

#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace canclust {

void RunConfig::validate() const {
  if (!synth) {
    if (benign_paths.size() < 2) {
      throw ConfigError("need at least 2 benign captures, got " + std::to_string(benign_paths.size()));
    }
    for (const auto& group : attack_groups) {
      if (group.kind.empty()) throw ConfigError("attack group without a kind");
      if (group.paths.empty()) throw ConfigError("attack group '" + group.kind + "' has no captures");
    }
  } else if (synth->benign_count < 2) {
    throw ConfigError("synth plan needs at least 2 benign captures");
  }
  if (linkages.empty()) throw ConfigError("at least one linkage is required");
  if (!(frequency_hz > 0.0)) throw ConfigError("frequency must be positive");
  if (!(significance > 0.0 && significance < 1.0)) throw ConfigError("significance must lie in (0, 1)");
  params.validate();
}

namespace {

nlohmann::json paths_json(const std::vector<std::filesystem::path>& paths) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

std::string label_of(const std::optional<std::string>& kind) { return kind ? *kind : "benign"; }

} // namespace

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json linkages = nlohmann::json::array();
  for (const auto l : config.linkages) linkages.push_back(to_string(l));
  nlohmann::json attacks = nlohmann::json::object();
  for (const auto& g : config.attack_groups) attacks[g.kind] = paths_json(g.paths);
  nlohmann::json out = {
      {"benign", paths_json(config.benign_paths)},
      {"attacks", std::move(attacks)},
      {"frequency_hz", config.frequency_hz},
      {"linkages", std::move(linkages)},
      {"r", config.params.r},
      {"alpha", config.params.alpha},
      {"significance", config.significance},
      {"alternative", to_string(config.alternative)},
      {"dissimilarity", to_string(config.dissimilarity)},
      {"allow_intersection", config.alignment == Alignment::intersect},
  };
  if (config.format) out["format"] = *config.format == CsvFormat::wide ? "wide_csv" : "long_csv";
  if (config.synth) {
    const auto& b = config.synth->base;
    nlohmann::json attacks_plan = nlohmann::json::array();
    for (const auto& a : config.synth->attacks) {
      nlohmann::json end = std::isfinite(a.attack.end_s) ? nlohmann::json(a.attack.end_s) : nlohmann::json();
      attacks_plan.push_back({{"label", a.kind_label},
                              {"kind", to_string(a.attack.kind)},
                              {"count", a.count},
                              {"targets", a.attack.targets},
                              {"start_s", a.attack.start_s},
                              {"end_s", end}});
    }
    out["synth"] = {{"base",
                     {{"n_groups", b.n_groups},
                      {"signals_per_group", b.signals_per_group},
                      {"duration_s", b.duration_s},
                      {"rate_hz", b.rate_hz},
                      {"intra_group_rho", b.intra_group_rho},
                      {"noise_sigma", b.noise_sigma},
                      {"seed", b.seed},
                      {"binary_signals", b.binary_signals}}},
                    {"benign_count", config.synth->benign_count},
                    {"attacks", std::move(attacks_plan)}};
  }
  return out;
}

CaptureSet load_captures(const RunConfig& config) {
  CaptureSet set;
  if (config.synth) {
    for (auto& capture : realize(*config.synth)) {
      if (!capture.label.is_attack()) {
        set.benign.push_back(std::move(capture));
        continue;
      }
      const auto kind = *capture.label.attack_kind;
      auto it = std::find_if(set.attacks.begin(), set.attacks.end(), [&](const auto& g) { return g.first == kind; });
      if (it == set.attacks.end()) {
        set.attacks.emplace_back(kind, std::vector<SignalCapture>{});
        it = std::prev(set.attacks.end());
      }
      it->second.push_back(std::move(capture));
    }
    return set;
  }
  auto load = [&](const std::filesystem::path& path, const CaptureLabel& label) {
    auto capture = parse_capture(path, config.format ? *config.format : detect_format(path));
    capture.label = label;
    return capture;
  };
  for (const auto& p : config.benign_paths) set.benign.push_back(load(p, CaptureLabel::benign()));
  for (const auto& group : config.attack_groups) {
    auto& out = set.attacks.emplace_back(group.kind, std::vector<SignalCapture>{});
    for (const auto& p : group.paths) out.second.push_back(load(p, CaptureLabel::attack(group.kind)));
  }
  return set;
}

DendrogramCache::Entry& DendrogramCache::entry(const SignalCapture& capture) {
  if (const auto it = entries_.find(capture.capture_id); it != entries_.end()) return it->second;
  try {
    Entry e;
    e.matrix = resample(capture, config_.frequency_hz);
    e.dissimilarity = to_dissimilarity(pearson_matrix(e.matrix), config_.dissimilarity);
    return entries_.emplace(capture.capture_id, std::move(e)).first->second;
  } catch (const DataError& err) {
    const auto where = capture.source_path.empty() ? capture.capture_id : capture.source_path;
    throw DataError(where + ": " + err.what());
  }
}

const SignalMatrix& DendrogramCache::matrix(const SignalCapture& capture) { return entry(capture).matrix; }

const Dendrogram& DendrogramCache::dendrogram(const SignalCapture& capture, Linkage linkage) {
  auto& e = entry(capture);
  for (const auto& [l, tree] : e.trees) {
    if (l == linkage) return tree;
  }
  ++cluster_calls_;
  e.trees.emplace_back(linkage, agglomerate(e.dissimilarity, linkage));
  return e.trees.back().second;
}

VerdictReport analyze(const CaptureSet& captures, const RunConfig& config) {
  config.validate();
  if (captures.benign.size() < 2) {
    throw ConfigError("need at least 2 benign captures, got " + std::to_string(captures.benign.size()));
  }
  {
    std::set<std::string> ids;
    auto check = [&](const SignalCapture& c) {
      if (!ids.insert(c.capture_id).second) throw ConfigError("capture id '" + c.capture_id + "' is not unique");
    };
    for (const auto& c : captures.benign) check(c);
    for (const auto& [kind, group] : captures.attacks) {
      for (const auto& c : group) check(c);
    }
  }

  VerdictReport report;
  report.config = to_json(config);
  report.significance = config.significance;
  report.params = config.params;

  DendrogramCache cache(config);
  auto diagnose = [&](const SignalCapture& c) {
    const auto& m = cache.matrix(c);
    report.captures.push_back(CaptureDiagnostics{c.capture_id, c.source_path, c.label.attack_kind,
                                                 c.signals.size(), m.signal_count(), m.length(),
                                                 m.dropped_constant});
  };
  for (const auto& c : captures.benign) diagnose(c);
  for (const auto& [kind, group] : captures.attacks) {
    for (const auto& c : group) diagnose(c);
  }

  auto trees_for = [&](const std::vector<SignalCapture>& group, Linkage linkage) {
    std::vector<NamedDendrogram> out;
    for (const auto& c : group) out.push_back({c.capture_id, cache.dendrogram(c, linkage)});
    return out;
  };

  std::vector<std::vector<NamedDendrogram>> benign_trees;
  for (const auto linkage : config.linkages) {
    benign_trees.push_back(trees_for(captures.benign, linkage));
    report.baselines.push_back({linkage, benign_pairs(benign_trees.back(), config.params, config.alignment)});
  }
  for (const auto& [kind, group] : captures.attacks) {
    if (group.empty()) continue;
    for (std::size_t li = 0; li < config.linkages.size(); ++li) {
      const auto linkage = config.linkages[li];
      auto sample = attack_vs_benign(kind, trees_for(group, linkage), benign_trees[li], config.params,
                                     config.alignment);
      // x = attack-benign, y = benign-benign: "less" asks whether attacks look less similar.
      auto test = mann_whitney(sample.values, report.baselines[li].benign.values, config.alternative,
                               config.significance);
      report.tests.push_back(AttackTest{kind, linkage, test, std::move(sample)});
    }
  }
  return report;
}

namespace {

nlohmann::json sample_json(const SimilaritySample& s) {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    pairs.push_back({{"a", s.pair_ids[i].first},
                     {"b", s.pair_ids[i].second},
                     {"similarity", s.values[i]},
                     {"aligned", s.aligned[i]}});
  }
  return pairs;
}

} // namespace

nlohmann::json to_json(const VerdictReport& report) {
  nlohmann::json captures = nlohmann::json::array();
  for (const auto& c : report.captures) {
    captures.push_back({{"capture_id", c.capture_id},
                        {"source_path", c.source_path},
                        {"label", label_of(c.attack_kind)},
                        {"signals_in", c.signals_in},
                        {"signals_retained", c.signals_retained},
                        {"length", c.length},
                        {"dropped_constant", c.dropped_constant}});
  }
  nlohmann::json baselines = nlohmann::json::array();
  for (const auto& b : report.baselines) {
    baselines.push_back({{"linkage", to_string(b.linkage)},
                         {"n_pairs", b.benign.values.size()},
                         {"pairs", sample_json(b.benign)}});
  }
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : report.tests) {
    const auto& baseline = std::find_if(report.baselines.begin(), report.baselines.end(),
                                        [&](const LinkageBaseline& b) { return b.linkage == t.linkage; });
    tests.push_back({{"attack_kind", t.attack_kind},
                     {"linkage", to_string(t.linkage)},
                     {"r", report.params.r},
                     {"alpha", report.params.alpha},
                     {"n_benign_pairs", baseline->benign.values.size()},
                     {"n_attack_pairs", t.sample.values.size()},
                     {"u", t.test.u_statistic},
                     {"p_value", t.test.p_value},
                     {"method", to_string(t.test.method)},
                     {"significant", t.test.significant},
                     {"pairs", sample_json(t.sample)}});
  }
  return {{"schema", kReportSchema},
          {"config", report.config},
          {"captures", std::move(captures)},
          {"benign_baselines", std::move(baselines)},
          {"tests", std::move(tests)}};
}

VerdictReport run(const RunConfig& config) {
  config.validate();
  auto report = analyze(load_captures(config), config);
  if (!config.output_dir.empty()) {
    write_outputs(report, config.output_dir);
    if (config.dump_matrices) {
      // Matrices are rebuilt here so the report path stays free of debug state.
      DendrogramCache cache(config);
      const auto set = load_captures(config);
      const auto dir = config.output_dir / "matrices";
      std::filesystem::create_directories(dir);
      auto dump = [&](const SignalCapture& c) {
        const auto& m = cache.matrix(c);
        const auto rho = pearson_matrix(m);
        std::ofstream(dir / (c.capture_id + "_rho.csv")) << [&] {
          std::ostringstream s;
          write_matrix_csv(s, rho.signal_ids, rho.rho);
          return s.str();
        }();
        const auto d = to_dissimilarity(rho, config.dissimilarity);
        std::ofstream out(dir / (c.capture_id + "_d.csv"));
        write_matrix_csv(out, d.signal_ids, d.d);
      };
      for (const auto& c : set.benign) dump(c);
      for (const auto& [kind, group] : set.attacks) {
        for (const auto& c : group) dump(c);
      }
    }
  }
  return report;
}

namespace {

std::string safe_name(std::string s) {
  for (auto& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  }
  return s;
}

void write_density(const std::filesystem::path& path, const SimilaritySample& sample) {
  std::vector<DensityPoint> curve;
  try {
    curve = density_export(sample.values);
  } catch (const DataError&) {
    return;  // fewer than 2 values or zero spread: nothing to plot
  }
  std::ofstream out(path);
  out << "x,density\n";
  for (const auto& p : curve) out << format_double(p.x) << ',' << format_double(p.density) << '\n';
}

} // namespace

void write_outputs(const VerdictReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "density");
  std::ofstream(dir / "report.json") << to_json(report).dump(2) << '\n';

  std::ofstream jsonl(dir / "similarities.jsonl");
  auto emit = [&](const SimilaritySample& s, Linkage linkage) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const nlohmann::json rec = {{"capture_a", s.pair_ids[i].first},
                                  {"capture_b", s.pair_ids[i].second},
                                  {"linkage", to_string(linkage)},
                                  {"r", report.params.r},
                                  {"alpha", report.params.alpha},
                                  {"similarity", s.values[i]},
                                  {"group", s.group_name()},
                                  {"aligned", s.aligned[i]}};
      jsonl << rec.dump() << '\n';
    }
  };
  for (const auto& b : report.baselines) {
    emit(b.benign, b.linkage);
    write_density(dir / "density" / (std::string(to_string(b.linkage)) + "__benign_benign.csv"), b.benign);
  }
  for (const auto& t : report.tests) {
    emit(t.sample, t.linkage);
    write_density(dir / "density" / (std::string(to_string(t.linkage)) + "__" + safe_name(t.attack_kind) + ".csv"),
                  t.sample);
  }
}

VerdictSummary verdict(const VerdictReport& report) {
  VerdictSummary summary;
  for (const auto& c : report.captures) {
    if (!c.attack_kind) ++summary.benign_captures;
  }
  std::vector<Linkage> linkages;
  for (const auto& b : report.baselines) linkages.push_back(b.linkage);
  for (const auto& t : report.tests) {
    auto it = std::find_if(summary.rows.begin(), summary.rows.end(),
                           [&](const VerdictSummary::Row& r) { return r.attack_kind == t.attack_kind; });
    if (it == summary.rows.end()) {
      summary.rows.push_back({t.attack_kind, {}, {}});
      it = std::prev(summary.rows.end());
    }
    it->p_values.emplace_back(t.linkage, t.test.p_value);
    if (t.test.significant) it->detected_by.push_back(t.linkage);
  }
  for (const auto l : linkages) {
    std::size_t hits = 0;
    for (const auto& row : summary.rows) {
      hits += static_cast<std::size_t>(std::count(row.detected_by.begin(), row.detected_by.end(), l));
    }
    summary.tallies.push_back({l, {hits, summary.rows.size()}});
  }
  return summary;
}

std::string VerdictSummary::render() const {
  std::ostringstream out;
  out << "benign captures: " << benign_captures << '\n';
  if (rows.empty()) {
    out << "no attack groups; nothing to test\n";
    return out.str();
  }
  out << "attack kind";
  for (const auto& [l, p] : rows.front().p_values) out << '\t' << to_string(l);
  out << "\tdetected by\n";
  for (const auto& row : rows) {
    out << row.attack_kind;
    for (const auto& [l, p] : row.p_values) {
      char buf[32];
      const bool hit = std::find(row.detected_by.begin(), row.detected_by.end(), l) != row.detected_by.end();
      std::snprintf(buf, sizeof buf, "%.3f%s", p, hit ? "*" : "");
      out << '\t' << buf;
    }
    out << '\t';
    if (row.detected_by.empty()) out << '-';
    for (std::size_t i = 0; i < row.detected_by.size(); ++i) {
      out << (i ? "," : "") << to_string(row.detected_by[i]);
    }
    out << '\n';
  }
  for (const auto& [l, tally] : tallies) {
    out << to_string(l) << " detected " << tally.first << " of " << tally.second << '\n';
  }
  return out.str();
}

std::vector<std::filesystem::path> expand_inputs(const std::string& pattern) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  if (std::filesystem::is_directory(pattern, ec)) {
    for (const auto& entry : std::filesystem::directory_iterator(pattern)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") out.push_back(entry.path());
    }
  } else {
    glob_t g{};
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ConfigError("no capture files match '" + pattern + "'");
  return out;
}

void apply_manifest(RunConfig& config, const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot open manifest '" + manifest.string() + "'");
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.value("schema", 0) != 1) throw ConfigError("unsupported manifest schema");
    const auto base = manifest.parent_path();
    for (const auto& entry : doc.at("captures")) {
      const auto path = base / entry.at("path").get<std::string>();
      if (entry.at("label").get<std::string>() == "benign") {
        config.benign_paths.push_back(path);
        continue;
      }
      const auto kind = entry.at("kind").get<std::string>();
      auto it = std::find_if(config.attack_groups.begin(), config.attack_groups.end(),
                             [&](const AttackGroupPaths& g) { return g.kind == kind; });
      if (it == config.attack_groups.end()) {
        config.attack_groups.push_back({kind, {}});
        it = std::prev(config.attack_groups.end());
      }
      it->paths.push_back(path);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest '" + manifest.string() + "': " + e.what());
  }
}

} // namespace canclust
