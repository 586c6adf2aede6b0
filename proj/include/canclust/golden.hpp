#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace canclust {

/// Versioned fixture directory name under the repository's fixtures/.
inline constexpr const char* kFixtureVersion = "v1";

struct GoldenCase {
  std::string name;
  std::vector<std::string> inputs;  // relative to the fixture directory
  std::string expected;
  double tolerance = 0.0;
};

struct GoldenOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Cases listed in `dir`/cases.json. Throws DataError if the index is unreadable.
std::vector<GoldenCase> read_golden_cases(const std::filesystem::path& dir);

/// Recomputes every case and compares it with its expected file. Missing or
/// malformed fixtures are reported as failures.
std::vector<GoldenOutcome> verify_goldens(const std::filesystem::path& dir);

/// Rewrites every fixture under `dir`. Output is byte-for-byte reproducible.
void regenerate_goldens(const std::filesystem::path& dir);

} // namespace canclust
