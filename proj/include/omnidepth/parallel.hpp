#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omnidepth {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Restores the previous OpenMP thread count on scope exit.
class ScopedThreads {
 public:
  explicit ScopedThreads(int n) : previous_(max_threads()) { set_threads(n); }
  ~ScopedThreads() { set_threads(previous_); }
  ScopedThreads(const ScopedThreads&) = delete;
  ScopedThreads& operator=(const ScopedThreads&) = delete;

 private:
  int previous_;
};

// Selects the kernel flavour. kSerial is the reference implementation kept
// for testing; kParallel must produce bit-identical results.
enum class Exec { kSerial, kParallel };

}  // namespace omnidepth
