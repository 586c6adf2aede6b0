#pragma once

#include "canclust/ingest.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace canclust {

/// Synthetic capture layout: `n_groups` groups of `signals_per_group`
/// signals, each group driven by its own latent process.
struct SynthSpec {
  std::size_t n_groups = 4;
  std::size_t signals_per_group = 4;
  double duration_s = 60.0;
  double rate_hz = 10.0;
  double intra_group_rho = 0.95;
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;
  /// Extra 0/1 signals; binary signal k thresholds the latent of group k mod n_groups.
  std::size_t binary_signals = 0;

  void validate() const;
  std::size_t sample_count() const;
};

/// "ID_1g0_sig_s", e.g. group 2 signal 1 -> "ID_120_sig_1".
std::string synth_signal_id(std::size_t group, std::size_t signal);
std::string synth_binary_id(std::size_t index);
std::vector<std::string> group_signal_ids(const SynthSpec& spec, std::size_t group);

/// Each member i of group g is a_i * (s * L_g + e_i) + b_i, where L_g is a
/// standardized smooth latent series, e_i ~ N(0, noise_sigma^2) and s is
/// chosen so the expected intra-group correlation equals intra_group_rho.
/// All samples share the timestamps k / rate_hz.
SignalCapture generate(const SynthSpec& spec, std::string capture_id = "synth");

enum class AttackKind { correlated_break, max_value, binary_flip };

AttackKind parse_attack_kind(std::string_view name);
std::string_view to_string(AttackKind kind);

/// Window bounds are seconds from the capture's first timestamp. An infinite
/// end runs to the end of the capture.
struct AttackSpec {
  AttackKind kind = AttackKind::correlated_break;
  std::vector<std::string> targets;
  double start_s = 0.0;
  double end_s = std::numeric_limits<double>::infinity();
};

/// Rewrites target values inside the window. Timestamps and every value
/// outside the window or outside the targets are left untouched. The result
/// is labelled with the attack kind unless there are no targets, in which
/// case the capture is returned as is.
SignalCapture inject(const SignalCapture& capture, const AttackSpec& attack, std::uint64_t seed);

/// A batch of benign captures plus attacked variants, for the `synth` command.
struct SynthPlan {
  struct AttackGroup {
    std::string kind_label;  // e.g. "correlated"
    std::size_t count = 0;
    AttackSpec attack;
  };

  SynthSpec base;
  std::size_t benign_count = 12;
  std::vector<AttackGroup> attacks;
};

SynthPlan synth_plan_from_json(const nlohmann::json& doc);

/// Every capture of the plan in manifest order: benign first, then each attack group.
std::vector<SignalCapture> realize(const SynthPlan& plan);

/// Writes one wide CSV per capture plus `manifest.json` into `out_dir`.
/// Returns the manifest document.
nlohmann::json write_plan(const SynthPlan& plan, const std::filesystem::path& out_dir);

} // namespace canclust
