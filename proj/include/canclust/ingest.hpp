#pragma once

#include "canclust/matrix.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace canclust {

/// Benign captures carry no kind; attack captures name their attack kind.
struct CaptureLabel {
  std::optional<std::string> attack_kind;

  static CaptureLabel benign() { return {}; }
  static CaptureLabel attack(std::string kind) { return {std::move(kind)}; }

  bool is_attack() const noexcept { return attack_kind.has_value(); }
  bool operator==(const CaptureLabel&) const = default;
};

/// One decoded signal with irregular sampling. Timestamps are strictly increasing.
struct RawSignal {
  std::string signal_id;
  std::vector<double> timestamps;
  std::vector<double> values;

  bool operator==(const RawSignal&) const = default;
};

struct SignalCapture {
  std::string capture_id;
  std::vector<RawSignal> signals;
  std::string source_path;
  CaptureLabel label;

  const RawSignal* find(std::string_view signal_id) const;
  bool operator==(const SignalCapture&) const = default;
};

/// Resampled, constant-pruned, centered unit-norm signals on a uniform grid.
struct SignalMatrix {
  std::string capture_id;
  std::vector<std::string> signal_ids;
  std::vector<double> grid;
  Matrix data;  // signal_ids.size() x grid.size()
  std::vector<std::string> dropped_constant;

  std::size_t signal_count() const noexcept { return signal_ids.size(); }
  std::size_t length() const noexcept { return grid.size(); }
};

enum class CsvFormat { wide, long_form };

/// Picks the format from the header line: `time,signal,value` is long, anything else wide.
CsvFormat detect_format(const std::filesystem::path& path);

/// Reads a signal-translated capture. capture_id is the file stem.
///
/// Wide files carry one column per signal and may leave cells empty where a
/// signal was not transmitted. Long files carry one `time,signal,value`
/// sample per row. Lines starting with `#` are skipped in both.
SignalCapture parse_capture(const std::filesystem::path& path, CsvFormat format);

/// Same as parse_capture, over in-memory text. `source` is used in error messages.
SignalCapture parse_capture_text(std::string_view text, CsvFormat format,
                                 std::string capture_id, std::string source = "<memory>");

inline constexpr double kDefaultFrequencyHz = 10.0;

/// Interpolates every signal onto a common grid at `frequency_hz`, drops
/// constant rows, then centers and scales each remaining row to unit l2 norm.
///
/// The grid covers only the window in which every signal has been observed;
/// no value is ever extrapolated.
SignalMatrix resample(const SignalCapture& capture, double frequency_hz = kDefaultFrequencyHz);

/// Piecewise-linear interpolation of one signal at sorted query times that lie
/// inside [timestamps.front(), timestamps.back()].
std::vector<double> interpolate_linear(const RawSignal& signal, std::span<const double> query);

/// Writes `capture` as wide CSV. Timestamps are the union over signals; cells
/// for signals without a sample at a timestamp are left empty.
void write_wide_csv(const SignalCapture& capture, const std::filesystem::path& path);
std::string to_wide_csv(const SignalCapture& capture);

/// Shortest round-trip decimal form, used for every number written to CSV.
std::string format_double(double v);

} // namespace canclust
