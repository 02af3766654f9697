#pragma once

#include <vector>

#include "smd/simkit/simulator.hpp"

namespace smd::simkit {

// Runs independent configurations. Each simulation stays single-threaded; the
// OpenMP version spreads whole runs over threads, the serial one is the
// reference the tests compare it with. Results are in input order.
std::vector<Report> run_sweep(const std::vector<SimConfig>& configs, int threads = 0);
std::vector<Report> run_sweep_serial(const std::vector<SimConfig>& configs);

}  // namespace smd::simkit
