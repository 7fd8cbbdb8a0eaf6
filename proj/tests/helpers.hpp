#pragma once

#include "oracles.hpp"

#include "sensespace/error.hpp"
#include "sensespace/linalg.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

namespace testing {

inline sensespace::linalg::Vector to_eigen(const oracle::Vec& v) {
  sensespace::linalg::Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

inline oracle::Vec to_std(const sensespace::linalg::Vector& v) {
  return oracle::Vec(v.data(), v.data() + v.size());
}

inline double max_abs_diff(const oracle::Vec& a, const sensespace::linalg::Vector& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[static_cast<Eigen::Index>(i)]));
  return m;
}

inline std::filesystem::path fixture_dir() { return SENSESPACE_FIXTURE_DIR; }

/// Fresh empty directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sensespace-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing

#define CHECK_THROWS_CODE(expr, expected_code)                     \
  do {                                                             \
    bool thrown_ = false;                                          \
    try {                                                          \
      (void)(expr);                                                \
    } catch (const sensespace::Error& e_) {                        \
      thrown_ = true;                                              \
      CHECK_MESSAGE(e_.code() == (expected_code), std::string(e_.name()));    \
    }                                                              \
    CHECK_MESSAGE(thrown_, "expected an error from " #expr);       \
  } while (0)
