#pragma once

#include <iosfwd>
#include <string>

#include "spdelab/config.hpp"

namespace spdelab {

// Orchestration of the CLI pipelines. Every pipeline writes its artifacts plus
// a manifest.json into the config's output directory and returns the process
// exit code: 0 iff every enabled inequality check passed.
//
// Output files are byte-identical for identical (config, seed) regardless of
// thread count; timestamps only ever appear in the manifest.

int run_kernel(const ExperimentConfig& cfg, std::ostream& log);
int run_constants(const ExperimentConfig& cfg, std::ostream& log);
int run_simulate(const ExperimentConfig& cfg, std::ostream& log);
int run_verify_tci(const ExperimentConfig& cfg, std::ostream& log);

int run_w2(const std::string& csv_a, const std::string& csv_b, const std::string& method,
           double epsilon, const std::string& out_dir, std::ostream& log);

int run_repr_check(const std::string& test_case, std::size_t replicas, std::uint64_t seed,
                   const std::string& out_dir, std::ostream& log);

// Formats a double with enough digits to round-trip (shared by CSV writers).
std::string format_double(double v);

} // namespace spdelab
