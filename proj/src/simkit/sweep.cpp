#include "smd/simkit/sweep.hpp"

#include <omp.h>

#include <exception>

namespace smd::simkit {

std::vector<Report> run_sweep(const std::vector<SimConfig>& configs, int threads) {
  std::vector<Report> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const long n = static_cast<long>(configs.size());
  if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = run_config(configs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<Report> run_sweep_serial(const std::vector<SimConfig>& configs) {
  std::vector<Report> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(run_config(c));
  return out;
}

}  // namespace smd::simkit
