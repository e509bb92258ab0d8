#pragma once

#include "adlsense/event_model.hpp"
#include "adlsense/time.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testsupport {

inline adlsense::Instant ts(const std::string& s) { return adlsense::parse_rfc3339(s); }

inline adlsense::SensorEvent ev(const std::string& id, adlsense::SensorKind kind, const std::string& when, double value,
                                const std::string& room) {
  return adlsense::SensorEvent{id, kind, ts(when), value, room};
}

/// Per-test scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("adlsense-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

  std::string write(const std::string& name, const std::string& content) const {
    auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testsupport
