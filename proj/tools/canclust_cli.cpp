// canclust: command-line front end for the forensic pipeline.
#include "canclust/clusim.hpp"
#include "canclust/error.hpp"
#include "canclust/golden.hpp"
#include "canclust/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

namespace {

using namespace canclust;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct AnalyzeOptions {
  std::vector<std::string> benign;
  std::vector<std::string> attacks;  // kind=<dir|glob>
  std::string manifest;
  std::string linkages = "single,complete,average,ward";
  std::string dissimilarity = "abs";
  std::string alternative = "two_sided";
  std::string format;
  double freq = kDefaultFrequencyHz;
  double r = HierarchyParams{}.r;
  double alpha = HierarchyParams{}.alpha;
  double significance = kDefaultSignificance;
  bool allow_intersection = false;
  bool dump_matrices = false;
  std::string out;
};

CsvFormat parse_format(const std::string& name) {
  if (name == "wide" || name == "wide_csv") return CsvFormat::wide;
  if (name == "long" || name == "long_csv") return CsvFormat::long_form;
  throw ConfigError("unknown format '" + name + "' (expected wide or long)");
}

void note_intersections(const VerdictReport& report) {
  std::map<std::string, std::size_t> retained;
  for (const auto& c : report.captures) retained[c.capture_id] = c.signals_retained;
  std::size_t reduced = 0;
  auto scan = [&](const SimilaritySample& s) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const auto full = std::max(retained[s.pair_ids[i].first], retained[s.pair_ids[i].second]);
      reduced += s.aligned[i] < full;
    }
  };
  for (const auto& b : report.baselines) scan(b.benign);
  for (const auto& t : report.tests) scan(t.sample);
  if (reduced > 0) std::cerr << "note: " << reduced << " pairs compared on an intersected signal set\n";
}

int run_analyze(const AnalyzeOptions& o) {
  RunConfig config;
  if (!o.manifest.empty()) apply_manifest(config, o.manifest);
  for (const auto& pattern : o.benign) {
    const auto paths = expand_inputs(pattern);
    config.benign_paths.insert(config.benign_paths.end(), paths.begin(), paths.end());
  }
  for (const auto& spec : o.attacks) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--attack expects kind=<dir|glob>, got '" + spec + "'");
    const auto kind = spec.substr(0, eq);
    auto it = std::find_if(config.attack_groups.begin(), config.attack_groups.end(),
                           [&](const AttackGroupPaths& g) { return g.kind == kind; });
    if (it == config.attack_groups.end()) {
      config.attack_groups.push_back({kind, {}});
      it = std::prev(config.attack_groups.end());
    }
    const auto paths = expand_inputs(spec.substr(eq + 1));
    it->paths.insert(it->paths.end(), paths.begin(), paths.end());
  }
  if (!o.format.empty()) config.format = parse_format(o.format);
  config.frequency_hz = o.freq;
  config.linkages = parse_linkage_list(o.linkages);
  config.params = {o.r, o.alpha};
  config.significance = o.significance;
  config.alternative = parse_alternative(o.alternative);
  config.dissimilarity = parse_dissimilarity_kind(o.dissimilarity);
  config.alignment = o.allow_intersection ? Alignment::intersect : Alignment::strict;
  config.output_dir = o.out;
  config.dump_matrices = o.dump_matrices;

  const auto report = run(config);
  if (config.alignment == Alignment::intersect) note_intersections(report);
  std::cout << verdict(report).render();
  return 0;
}

int run_synth(const std::string& spec_path, const std::string& out) {
  std::ifstream in(spec_path);
  if (!in) throw ConfigError("cannot open synth spec '" + spec_path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("synth spec '" + spec_path + "': " + e.what());
  }
  const auto plan = synth_plan_from_json(doc);
  plan.base.validate();
  const auto manifest = write_plan(plan, out);
  std::cout << "wrote " << manifest.at("captures").size() << " captures to " << out << '\n';
  return 0;
}

int run_simtest(const std::string& a_path, const std::string& b_path, const std::string& linkage_name, double freq,
                const HierarchyParams& params, const std::string& dissimilarity, bool allow_intersection) {
  params.validate();
  if (!(freq > 0.0)) throw ConfigError("frequency must be positive");
  const auto linkage = parse_linkage(linkage_name);
  const auto kind = parse_dissimilarity_kind(dissimilarity);
  auto tree = [&](const std::string& path) {
    const auto capture = parse_capture(path, detect_format(path));
    try {
      return agglomerate(to_dissimilarity(pearson_matrix(resample(capture, freq)), kind), linkage);
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what());
    }
  };
  const auto a = tree(a_path);
  const auto b = tree(b_path);
  const auto score = similarity(a, b, params, allow_intersection ? Alignment::intersect : Alignment::strict);
  std::printf("similarity %.6f over %zu signals\n", score.value, score.aligned_count());
  for (const auto& [id, s] : score.per_element) std::printf("  %s\t%.6f\n", id.c_str(), s);
  for (const auto& id : score.excluded) std::printf("  excluded %s\n", id.c_str());
  return 0;
}

int run_goldens(bool regen, const std::string& dir) {
  if (regen) {
    regenerate_goldens(dir);
    std::cout << "regenerated fixtures in " << dir << '\n';
    return 0;
  }
  int failed = 0;
  for (const auto& o : verify_goldens(dir)) {
    std::cout << (o.passed ? "PASS " : "FAIL ") << o.name;
    if (!o.detail.empty()) std::cout << ": " << o.detail;
    std::cout << '\n';
    failed += !o.passed;
  }
  return failed == 0 ? 0 : kExitData;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masquerade-attack forensics on CAN signal captures"};
  app.require_subcommand(1);

  AnalyzeOptions analyze;
  auto* cmd_analyze = app.add_subcommand("analyze", "Compare attack captures against a benign baseline");
  cmd_analyze->add_option("--benign", analyze.benign, "Benign captures: directory or glob (repeatable)");
  cmd_analyze->add_option("--attack", analyze.attacks, "Attack captures as kind=<dir|glob> (repeatable)");
  cmd_analyze->add_option("--manifest", analyze.manifest, "manifest.json written by `synth`");
  cmd_analyze->add_option("--linkage", analyze.linkages, "Comma-separated linkages")->capture_default_str();
  cmd_analyze->add_option("--freq", analyze.freq, "Resampling frequency in Hz")->capture_default_str();
  cmd_analyze->add_option("--r", analyze.r, "Level scaling parameter")->capture_default_str();
  cmd_analyze->add_option("--alpha", analyze.alpha, "Diffusion continuation probability")->capture_default_str();
  cmd_analyze->add_option("--significance", analyze.significance, "Test level")->capture_default_str();
  cmd_analyze->add_option("--alternative", analyze.alternative, "two_sided, less or greater")->capture_default_str();
  cmd_analyze->add_option("--dissimilarity", analyze.dissimilarity, "abs (1-|rho|) or signed ((1-rho)/2)")
      ->capture_default_str();
  cmd_analyze->add_option("--format", analyze.format, "wide or long (detected per file when omitted)");
  cmd_analyze->add_flag("--allow-intersection", analyze.allow_intersection,
                        "Compare captures on their common signals instead of failing");
  cmd_analyze->add_flag("--dump-matrices", analyze.dump_matrices, "Also write rho and d matrices as CSV");
  cmd_analyze->add_option("--out", analyze.out, "Output directory")->required();

  std::string synth_spec, synth_out;
  auto* cmd_synth = app.add_subcommand("synth", "Generate synthetic benign and attacked captures");
  cmd_synth->add_option("--spec", synth_spec, "Synth plan JSON")->required();
  cmd_synth->add_option("--out", synth_out, "Output directory")->required();

  std::string sim_a, sim_b, sim_linkage = "ward", sim_dissimilarity = "abs";
  double sim_freq = kDefaultFrequencyHz;
  HierarchyParams sim_params;
  bool sim_intersect = false;
  auto* cmd_sim = app.add_subcommand("simtest", "Similarity of one pair of captures");
  cmd_sim->add_option("--a", sim_a, "First capture")->required();
  cmd_sim->add_option("--b", sim_b, "Second capture")->required();
  cmd_sim->add_option("--linkage", sim_linkage)->capture_default_str();
  cmd_sim->add_option("--freq", sim_freq)->capture_default_str();
  cmd_sim->add_option("--r", sim_params.r)->capture_default_str();
  cmd_sim->add_option("--alpha", sim_params.alpha)->capture_default_str();
  cmd_sim->add_option("--dissimilarity", sim_dissimilarity)->capture_default_str();
  cmd_sim->add_flag("--allow-intersection", sim_intersect);

  std::string golden_dir = std::string("fixtures/") + kFixtureVersion;
  auto* cmd_goldens = app.add_subcommand("goldens", "Check or rewrite the golden fixtures");
  cmd_goldens->require_subcommand(1);
  cmd_goldens->fallthrough();
  cmd_goldens->add_subcommand("verify", "Recompute every case and compare");
  auto* cmd_regen = cmd_goldens->add_subcommand("regen", "Rewrite every fixture");
  cmd_goldens->add_option("--dir", golden_dir, "Fixture directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*cmd_analyze) return run_analyze(analyze);
    if (*cmd_synth) return run_synth(synth_spec, synth_out);
    if (*cmd_sim) return run_simtest(sim_a, sim_b, sim_linkage, sim_freq, sim_params, sim_dissimilarity, sim_intersect);
    if (*cmd_goldens) return run_goldens(cmd_regen->parsed(), golden_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
