#include "canclust/synth.hpp"

#include "canclust/error.hpp"
#include "canclust/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace canclust {

namespace {

// Latent dynamics: a damped velocity driving a leaky integrator. Both poles
// sit inside the unit circle so the process is stationary and independent
// latents decorrelate as captures grow longer.
constexpr double kVelocityMemory = 0.9;
constexpr double kLevelMemory = 0.95;
constexpr std::size_t kBurnIn = 200;

std::vector<double> latent_series(Rng& rng, std::size_t length) {
  std::vector<double> out(length);
  double velocity = 0.0;
  double level = 0.0;
  for (std::size_t k = 0; k < kBurnIn + length; ++k) {
    velocity = kVelocityMemory * velocity + rng.normal();
    level = kLevelMemory * level + velocity;
    if (k >= kBurnIn) out[k - kBurnIn] = level;
  }
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(length);
  double ss = 0.0;
  for (const double v : out) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(length));
  for (auto& v : out) v = (v - mean) / sd;
  return out;
}

/// Span of the capture in seconds; `first` receives its earliest timestamp.
double capture_span(const SignalCapture& capture, double& first) {
  first = std::numeric_limits<double>::infinity();
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& s : capture.signals) {
    if (s.timestamps.empty()) continue;
    first = std::min(first, s.timestamps.front());
    last = std::max(last, s.timestamps.back());
  }
  return last - first;
}

} // namespace

void SynthSpec::validate() const {
  if (n_groups < 1) throw ConfigError("n_groups must be >= 1");
  if (signals_per_group < 1) throw ConfigError("signals_per_group must be >= 1");
  if (!(duration_s > 0.0) || !(rate_hz > 0.0)) throw ConfigError("duration_s and rate_hz must be positive");
  if (duration_s * rate_hz < 2.0) throw ConfigError("duration_s * rate_hz must be at least 2");
  if (!(intra_group_rho > 0.0 && intra_group_rho <= 1.0)) throw ConfigError("intra_group_rho must lie in (0, 1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise_sigma must be >= 0");
}

std::size_t SynthSpec::sample_count() const {
  return static_cast<std::size_t>(std::floor(duration_s * rate_hz + 1e-9));
}

std::string synth_signal_id(std::size_t group, std::size_t signal) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "ID_%03zX_sig_%zu", 0x100 + 0x10 * group, signal);
  return buf;
}

std::string synth_binary_id(std::size_t index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "ID_%03zX_bin_0", 0x700 + index);
  return buf;
}

std::vector<std::string> group_signal_ids(const SynthSpec& spec, std::size_t group) {
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < spec.signals_per_group; ++s) ids.push_back(synth_signal_id(group, s));
  return ids;
}

SignalCapture generate(const SynthSpec& spec, std::string capture_id) {
  spec.validate();
  const auto length = spec.sample_count();
  std::vector<double> times(length);
  for (std::size_t k = 0; k < length; ++k) times[k] = static_cast<double>(k) / spec.rate_hz;

  const bool noisy = spec.noise_sigma > 0.0 && spec.intra_group_rho < 1.0;
  const double scale =
      noisy ? spec.noise_sigma * std::sqrt(spec.intra_group_rho / (1.0 - spec.intra_group_rho)) : 1.0;

  SignalCapture capture{std::move(capture_id), {}, {}, CaptureLabel::benign()};
  std::vector<std::vector<double>> latents;
  for (std::size_t g = 0; g < spec.n_groups; ++g) {
    Rng latent_rng(derive_seed(spec.seed, g));
    latents.push_back(latent_series(latent_rng, length));
    Rng member_rng(derive_seed(spec.seed, 1000 + g));
    for (std::size_t s = 0; s < spec.signals_per_group; ++s) {
      const double gain = member_rng.uniform(0.5, 2.0);
      const double offset = member_rng.uniform(-10.0, 10.0);
      RawSignal sig{synth_signal_id(g, s), times, std::vector<double>(length)};
      for (std::size_t k = 0; k < length; ++k) {
        const double noise = noisy ? spec.noise_sigma * member_rng.normal() : 0.0;
        sig.values[k] = gain * (scale * latents[g][k] + noise) + offset;
      }
      capture.signals.push_back(std::move(sig));
    }
  }
  for (std::size_t b = 0; b < spec.binary_signals; ++b) {
    const auto& latent = latents[b % spec.n_groups];
    RawSignal sig{synth_binary_id(b), times, std::vector<double>(length)};
    for (std::size_t k = 0; k < length; ++k) sig.values[k] = latent[k] > 0.0 ? 1.0 : 0.0;
    capture.signals.push_back(std::move(sig));
  }
  return capture;
}

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "correlated_break") return AttackKind::correlated_break;
  if (name == "max_value") return AttackKind::max_value;
  if (name == "binary_flip") return AttackKind::binary_flip;
  throw ConfigError("unknown attack kind '" + std::string(name) + "'");
}

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::correlated_break: return "correlated_break";
    case AttackKind::max_value: return "max_value";
    case AttackKind::binary_flip: return "binary_flip";
  }
  return "?";
}

SignalCapture inject(const SignalCapture& capture, const AttackSpec& attack, std::uint64_t seed) {
  if (attack.targets.empty()) return capture;
  double first = 0.0;
  const double span = capture_span(capture, first);
  if (!(attack.start_s >= 0.0) || !(attack.start_s < attack.end_s) ||
      (std::isfinite(attack.end_s) && attack.end_s > span + 1e-9)) {
    throw ConfigError("attack window [" + format_double(attack.start_s) + ", " + format_double(attack.end_s) +
                      "] does not fit the capture span of " + format_double(span) + " s");
  }
  const double lo = first + attack.start_s;
  const double hi = first + attack.end_s;

  SignalCapture out = capture;
  out.label = CaptureLabel::attack(std::string(to_string(attack.kind)));
  Rng rng(seed);
  for (const auto& target : attack.targets) {
    auto it = std::find_if(out.signals.begin(), out.signals.end(),
                           [&](const RawSignal& s) { return s.signal_id == target; });
    if (it == out.signals.end()) throw ConfigError("attack target '" + target + "' is not in the capture");
    auto& values = it->values;
    const auto& times = it->timestamps;
    auto in_window = [&](std::size_t k) { return times[k] >= lo && times[k] <= hi; };

    switch (attack.kind) {
      case AttackKind::correlated_break: {
        const double n = static_cast<double>(values.size());
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double ss = 0.0;
        for (const double v : values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / n);
        for (std::size_t k = 0; k < values.size(); ++k) {
          if (in_window(k)) values[k] = mean + sd * rng.normal();
        }
        break;
      }
      case AttackKind::max_value: {
        const double top = *std::max_element(values.begin(), values.end());
        for (std::size_t k = 0; k < values.size(); ++k) {
          if (in_window(k)) values[k] = top;
        }
        break;
      }
      case AttackKind::binary_flip: {
        const bool binary = std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0 || v == 1.0; });
        if (!binary) throw DataError("binary_flip target '" + target + "' is not a 0/1 signal");
        for (std::size_t k = 0; k < values.size(); ++k) {
          if (in_window(k)) values[k] = 1.0 - values[k];
        }
        break;
      }
    }
  }
  return out;
}

namespace {

SynthSpec spec_from_json(const nlohmann::json& j, SynthSpec spec = {}) {
  spec.n_groups = j.value("n_groups", spec.n_groups);
  spec.signals_per_group = j.value("signals_per_group", spec.signals_per_group);
  spec.duration_s = j.value("duration_s", spec.duration_s);
  spec.rate_hz = j.value("rate_hz", spec.rate_hz);
  spec.intra_group_rho = j.value("intra_group_rho", spec.intra_group_rho);
  spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
  spec.seed = j.value("seed", spec.seed);
  spec.binary_signals = j.value("binary_signals", spec.binary_signals);
  spec.validate();
  return spec;
}

std::uint64_t attack_stream(std::size_t group, std::size_t index) {
  return 1'000'000ULL * (group + 1) + index;
}

std::string numbered(const std::string& prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return prefix + buf;
}

} // namespace

SynthPlan synth_plan_from_json(const nlohmann::json& doc) {
  try {
    SynthPlan plan;
    plan.base = spec_from_json(doc.value("base", nlohmann::json::object()));
    plan.benign_count = doc.value("benign_count", plan.benign_count);
    for (const auto& a : doc.value("attacks", nlohmann::json::array())) {
      SynthPlan::AttackGroup group;
      group.attack.kind = parse_attack_kind(a.at("kind").get<std::string>());
      group.kind_label = a.value("label", std::string(to_string(group.attack.kind)));
      group.count = a.value("count", std::size_t{1});
      group.attack.targets = a.value("targets", std::vector<std::string>{});
      if (a.contains("target_group")) {
        const auto ids = group_signal_ids(plan.base, a.at("target_group").get<std::size_t>());
        group.attack.targets.insert(group.attack.targets.end(), ids.begin(), ids.end());
      }
      group.attack.start_s = a.value("start_s", 0.0);
      if (a.contains("end_s")) group.attack.end_s = a.at("end_s").get<double>();
      plan.attacks.push_back(std::move(group));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed synth spec: ") + e.what());
  }
}

std::vector<SignalCapture> realize(const SynthPlan& plan) {
  std::vector<SignalCapture> out;
  for (std::size_t i = 0; i < plan.benign_count; ++i) {
    auto spec = plan.base;
    spec.seed = derive_seed(plan.base.seed, i);
    out.push_back(generate(spec, numbered("benign_", i)));
  }
  for (std::size_t g = 0; g < plan.attacks.size(); ++g) {
    const auto& group = plan.attacks[g];
    for (std::size_t i = 0; i < group.count; ++i) {
      auto spec = plan.base;
      spec.seed = derive_seed(plan.base.seed, attack_stream(g, i));
      auto clean = generate(spec, numbered("attack_" + group.kind_label + "_", i));
      auto attacked = inject(clean, group.attack, derive_seed(spec.seed, 0xA77AC4));
      attacked.label = CaptureLabel::attack(group.kind_label);
      out.push_back(std::move(attacked));
    }
  }
  return out;
}

nlohmann::json write_plan(const SynthPlan& plan, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  nlohmann::json captures = nlohmann::json::array();
  for (const auto& capture : realize(plan)) {
    const auto file = capture.capture_id + ".csv";
    write_wide_csv(capture, out_dir / file);
    nlohmann::json entry = {{"capture_id", capture.capture_id}, {"path", file}};
    if (capture.label.is_attack()) {
      entry["label"] = "attack";
      entry["kind"] = *capture.label.attack_kind;
    } else {
      entry["label"] = "benign";
    }
    captures.push_back(std::move(entry));
  }
  nlohmann::json manifest = {{"schema", 1}, {"captures", std::move(captures)}};
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
  return manifest;
}

} // namespace canclust
