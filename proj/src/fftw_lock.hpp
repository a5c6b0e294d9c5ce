#pragma once

#include <mutex>

namespace lcs::detail {

// FFTW's planner is not re-entrant; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace lcs::detail
