#pragma once

#include "canclust/clusim.hpp"
#include "canclust/correlation.hpp"
#include "canclust/hierarchy.hpp"
#include "canclust/ingest.hpp"
#include "canclust/stats.hpp"
#include "canclust/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace canclust {

inline constexpr int kReportSchema = 1;

struct AttackGroupPaths {
  std::string kind;
  std::vector<std::filesystem::path> paths;
};

struct RunConfig {
  std::vector<std::filesystem::path> benign_paths;
  std::vector<AttackGroupPaths> attack_groups;
  /// Used instead of the paths when set.
  std::optional<SynthPlan> synth;

  std::optional<CsvFormat> format;  // detected per file when unset
  double frequency_hz = kDefaultFrequencyHz;
  std::vector<Linkage> linkages{std::begin(kAllLinkages), std::end(kAllLinkages)};
  HierarchyParams params;
  double significance = kDefaultSignificance;
  Alternative alternative = Alternative::two_sided;
  DissimilarityKind dissimilarity = DissimilarityKind::one_minus_abs_rho;
  Alignment alignment = Alignment::strict;
  std::filesystem::path output_dir;
  bool dump_matrices = false;

  /// Throws ConfigError. Checks only what can be known before loading data.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);

/// Per-capture preprocessing facts.
struct CaptureDiagnostics {
  std::string capture_id;
  std::string source_path;
  std::optional<std::string> attack_kind;
  std::size_t signals_in = 0;
  std::size_t signals_retained = 0;
  std::size_t length = 0;
  std::vector<std::string> dropped_constant;
};

struct AttackTest {
  std::string attack_kind;
  Linkage linkage = Linkage::ward;
  TestResult test;
  SimilaritySample sample;
};

struct LinkageBaseline {
  Linkage linkage = Linkage::ward;
  SimilaritySample benign;
};

struct VerdictReport {
  nlohmann::json config;
  std::vector<CaptureDiagnostics> captures;
  std::vector<LinkageBaseline> baselines;
  /// Attack-kind major, then linkage in configured order.
  std::vector<AttackTest> tests;
  double significance = kDefaultSignificance;
  HierarchyParams params;
};

nlohmann::json to_json(const VerdictReport& report);

/// Captures grouped by role, already parsed or synthesized.
struct CaptureSet {
  std::vector<SignalCapture> benign;
  std::vector<std::pair<std::string, std::vector<SignalCapture>>> attacks;
};

/// Reads every capture named by the config (or realizes its synth plan).
CaptureSet load_captures(const RunConfig& config);

/// One dendrogram per capture and linkage, built on first use.
class DendrogramCache {
public:
  explicit DendrogramCache(const RunConfig& config) : config_(config) {}

  /// Preprocesses the capture if needed; the result stays valid for the cache's lifetime.
  const SignalMatrix& matrix(const SignalCapture& capture);
  const Dendrogram& dendrogram(const SignalCapture& capture, Linkage linkage);
  std::size_t cluster_calls() const noexcept { return cluster_calls_; }

private:
  struct Entry {
    SignalMatrix matrix;
    DissimilarityMatrix dissimilarity;
    std::vector<std::pair<Linkage, Dendrogram>> trees;
  };
  Entry& entry(const SignalCapture& capture);

  const RunConfig& config_;
  std::map<std::string, Entry, std::less<>> entries_;
  std::size_t cluster_calls_ = 0;
};

/// Preprocess, cluster, compare and test already-loaded captures. Errors name
/// the capture that caused them.
VerdictReport analyze(const CaptureSet& captures, const RunConfig& config);

/// load_captures + analyze + write_outputs. Nothing is written unless the
/// whole analysis succeeds.
VerdictReport run(const RunConfig& config);

/// report.json, similarities.jsonl and density/*.csv under `dir`.
void write_outputs(const VerdictReport& report, const std::filesystem::path& dir);

/// Per attack kind: which linkages flagged it.
struct VerdictSummary {
  struct Row {
    std::string attack_kind;
    std::vector<std::pair<Linkage, double>> p_values;
    std::vector<Linkage> detected_by;
  };
  std::vector<Row> rows;
  /// Per linkage: (detected, total attack kinds).
  std::vector<std::pair<Linkage, std::pair<std::size_t, std::size_t>>> tallies;
  std::size_t benign_captures = 0;

  /// Table with p-values at three decimals, significant ones starred, then
  /// one "ward detected 5 of 5" line per linkage.
  std::string render() const;
};

VerdictSummary verdict(const VerdictReport& report);

/// Expands a directory (all *.csv inside, sorted) or a glob pattern.
std::vector<std::filesystem::path> expand_inputs(const std::string& pattern);

/// Reads a `synth` manifest into benign paths and attack groups.
void apply_manifest(RunConfig& config, const std::filesystem::path& manifest);

} // namespace canclust
