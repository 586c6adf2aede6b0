#include "canclust/ingest.hpp"

#include "canclust/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace canclust {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t begin = 0;
  while (true) {
    const auto comma = line.find(',', begin);
    cells.push_back(trim(line.substr(begin, comma == std::string_view::npos ? comma : comma - begin)));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return cells;
}

std::optional<double> to_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

/// Iterates content lines, skipping blanks and `#` comments.
class LineReader {
public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    while (pos_ < text_.size()) {
      const auto nl = text_.find('\n', pos_);
      const auto end = nl == std::string_view::npos ? text_.size() : nl;
      line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line_no_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
      if (trim(line).empty() || line.front() == '#') continue;
      return true;
    }
    return false;
  }

  std::size_t line_no() const noexcept { return line_no_; }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

void finalize_signal(RawSignal& s) {
  std::vector<std::size_t> order(s.timestamps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.timestamps[a] < s.timestamps[b]; });
  RawSignal sorted{s.signal_id, {}, {}};
  sorted.timestamps.reserve(order.size());
  sorted.values.reserve(order.size());
  for (const auto i : order) {
    if (!sorted.timestamps.empty() && sorted.timestamps.back() == s.timestamps[i]) {
      throw DataError("duplicate timestamp " + format_double(s.timestamps[i]) + " in signal '" +
                      s.signal_id + "'");
    }
    sorted.timestamps.push_back(s.timestamps[i]);
    sorted.values.push_back(s.values[i]);
  }
  s = std::move(sorted);
}

SignalCapture parse_wide(std::string_view text, std::string capture_id, const std::string& source) {
  LineReader reader(text);
  std::string_view line;
  if (!reader.next(line)) throw DataError(source + ": empty capture (no header)");
  const auto header = split_cells(line);
  if (header.front() != "time") {
    throw ParseError(source, reader.line_no(), "wide header must start with 'time'");
  }
  std::vector<RawSignal> columns;
  std::unordered_map<std::string_view, int> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw ParseError(source, reader.line_no(), "empty signal name in header");
    if (!seen.emplace(header[c], 0).second) {
      throw ParseError(source, reader.line_no(), "duplicate signal column '" + std::string(header[c]) + "'");
    }
    columns.push_back(RawSignal{std::string(header[c]), {}, {}});
  }

  while (reader.next(line)) {
    const auto cells = split_cells(line);
    if (cells.size() != header.size()) {
      throw ParseError(source, reader.line_no(),
                       "expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()));
    }
    const auto t = to_number(cells[0]);
    if (!t) throw ParseError(source, reader.line_no(), "invalid time '" + std::string(cells[0]) + "'");
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c].empty()) continue;
      const auto v = to_number(cells[c]);
      if (!v) {
        throw ParseError(source, reader.line_no(),
                         "invalid value '" + std::string(cells[c]) + "' for signal '" +
                             columns[c - 1].signal_id + "'");
      }
      columns[c - 1].timestamps.push_back(*t);
      columns[c - 1].values.push_back(*v);
    }
  }

  SignalCapture capture{std::move(capture_id), {}, source, CaptureLabel::benign()};
  for (auto& col : columns) {
    if (col.timestamps.empty()) continue;
    finalize_signal(col);
    capture.signals.push_back(std::move(col));
  }
  return capture;
}

SignalCapture parse_long(std::string_view text, std::string capture_id, const std::string& source) {
  LineReader reader(text);
  std::string_view line;
  if (!reader.next(line)) throw DataError(source + ": empty capture (no header)");
  const auto header = split_cells(line);
  if (header.size() != 3 || header[0] != "time" || header[1] != "signal" || header[2] != "value") {
    throw ParseError(source, reader.line_no(), "long header must be 'time,signal,value'");
  }
  std::vector<RawSignal> signals;
  std::unordered_map<std::string, std::size_t> index;
  while (reader.next(line)) {
    const auto cells = split_cells(line);
    if (cells.size() != 3) {
      throw ParseError(source, reader.line_no(), "expected 3 cells, found " + std::to_string(cells.size()));
    }
    const auto t = to_number(cells[0]);
    if (!t) throw ParseError(source, reader.line_no(), "invalid time '" + std::string(cells[0]) + "'");
    if (cells[1].empty()) throw ParseError(source, reader.line_no(), "empty signal name");
    const auto v = to_number(cells[2]);
    if (!v) throw ParseError(source, reader.line_no(), "invalid value '" + std::string(cells[2]) + "'");
    const auto [it, inserted] = index.emplace(std::string(cells[1]), signals.size());
    if (inserted) signals.push_back(RawSignal{it->first, {}, {}});
    signals[it->second].timestamps.push_back(*t);
    signals[it->second].values.push_back(*v);
  }
  for (auto& s : signals) finalize_signal(s);
  return SignalCapture{std::move(capture_id), std::move(signals), source, CaptureLabel::benign()};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_constant(std::span<const double> row) {
  const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
  return *hi - *lo < 1e-12 * std::max(1.0, std::abs(*hi));
}

} // namespace

const RawSignal* SignalCapture::find(std::string_view signal_id) const {
  for (const auto& s : signals) {
    if (s.signal_id == signal_id) return &s;
  }
  return nullptr;
}

CsvFormat detect_format(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cells = split_cells(line);
    if (cells.size() == 3 && cells[0] == "time" && cells[1] == "signal" && cells[2] == "value") {
      return CsvFormat::long_form;
    }
    return CsvFormat::wide;
  }
  return CsvFormat::wide;
}

SignalCapture parse_capture_text(std::string_view text, CsvFormat format, std::string capture_id,
                                 std::string source) {
  auto capture = format == CsvFormat::wide ? parse_wide(text, std::move(capture_id), source)
                                           : parse_long(text, std::move(capture_id), source);
  if (capture.signals.empty()) throw DataError(source + ": empty capture (no signal has samples)");
  return capture;
}

SignalCapture parse_capture(const std::filesystem::path& path, CsvFormat format) {
  return parse_capture_text(read_file(path), format, path.stem().string(), path.string());
}

std::vector<double> interpolate_linear(const RawSignal& signal, std::span<const double> query) {
  const auto& ts = signal.timestamps;
  const auto& vs = signal.values;
  std::vector<double> out;
  out.reserve(query.size());
  std::size_t j = 0;
  for (const double q : query) {
    while (j + 1 < ts.size() && ts[j + 1] <= q) ++j;
    if (j + 1 >= ts.size() || q <= ts[j]) {
      out.push_back(vs[j]);
      continue;
    }
    const double frac = (q - ts[j]) / (ts[j + 1] - ts[j]);
    const double v = vs[j] + frac * (vs[j + 1] - vs[j]);
    out.push_back(std::clamp(v, std::min(vs[j], vs[j + 1]), std::max(vs[j], vs[j + 1])));
  }
  return out;
}

SignalMatrix resample(const SignalCapture& capture, double frequency_hz) {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) {
    throw ConfigError("resampling frequency must be positive, got " + format_double(frequency_hz));
  }
  if (capture.signals.empty()) throw DataError(capture.capture_id + ": empty capture");

  double start = -std::numeric_limits<double>::infinity();
  double end = std::numeric_limits<double>::infinity();
  for (const auto& s : capture.signals) {
    if (s.timestamps.empty() || s.timestamps.size() != s.values.size()) {
      throw DataError(capture.capture_id + ": signal '" + s.signal_id + "' has no usable samples");
    }
    start = std::max(start, s.timestamps.front());
    end = std::min(end, s.timestamps.back());
  }
  const double span = end - start;
  const std::size_t length =
      span < 0.0 ? 0 : static_cast<std::size_t>(std::floor(span * frequency_hz + 1e-9)) + 1;
  if (length < 2) {
    throw DataError(capture.capture_id + ": insufficient overlap, common window [" + format_double(start) +
                    ", " + format_double(end) + "] holds fewer than 2 grid points");
  }

  SignalMatrix m;
  m.capture_id = capture.capture_id;
  m.grid.resize(length);
  for (std::size_t k = 0; k < length; ++k) {
    m.grid[k] = start + static_cast<double>(k) / frequency_hz;
  }
  m.grid.back() = std::min(m.grid.back(), end);

  std::vector<std::vector<double>> kept;
  for (const auto& s : capture.signals) {
    auto row = interpolate_linear(s, m.grid);
    if (is_constant(row)) {
      m.dropped_constant.push_back(s.signal_id);
      continue;
    }
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
    double sq = 0.0;
    for (auto& v : row) {
      v -= mean;
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) {
      m.dropped_constant.push_back(s.signal_id);
      continue;
    }
    for (auto& v : row) v /= norm;
    m.signal_ids.push_back(s.signal_id);
    kept.push_back(std::move(row));
  }
  if (kept.empty()) throw DataError(capture.capture_id + ": degenerate capture, every signal is constant");

  m.data = Matrix(kept.size(), length);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    std::copy(kept[i].begin(), kept[i].end(), m.data.row(i).begin());
  }
  return m;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string to_wide_csv(const SignalCapture& capture) {
  std::vector<double> times;
  for (const auto& s : capture.signals) times.insert(times.end(), s.timestamps.begin(), s.timestamps.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  std::string out = "time";
  for (const auto& s : capture.signals) {
    out += ',';
    out += s.signal_id;
  }
  out += '\n';
  std::vector<std::size_t> cursor(capture.signals.size(), 0);
  for (const double t : times) {
    out += format_double(t);
    for (std::size_t i = 0; i < capture.signals.size(); ++i) {
      out += ',';
      const auto& s = capture.signals[i];
      if (cursor[i] < s.timestamps.size() && s.timestamps[cursor[i]] == t) {
        out += format_double(s.values[cursor[i]]);
        ++cursor[i];
      }
    }
    out += '\n';
  }
  return out;
}

void write_wide_csv(const SignalCapture& capture, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_wide_csv(capture);
}

} // namespace canclust
