#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctrlab/model.hpp"

namespace ctrlab {

// Built-in benchmark problem with whatever closed-form knowledge is available.
struct Benchmark {
  std::string name;
  std::string description;
  ProblemSpec spec;
  // Targets used by the oracle suite; chosen away from cut loci where the
  // benchmark has one.
  std::vector<Vector> sample_targets;
  // Closed-form value V(x) when known for the benchmark's (x0, T).
  std::optional<double> (*value_oracle)(const ProblemSpec& spec, const Vector& target) = nullptr;
  std::string provenance;
};

std::vector<std::string> benchmark_names();

// Throws kConfig for unknown names.
Benchmark make_benchmark(const std::string& name);

// Controllability Gramian of the double integrator on [0, T].
Matrix double_integrator_gramian(double horizon);

}  // namespace ctrlab
