#pragma once

#include <stdexcept>
#include <string>

namespace acgeom {

struct structural_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct precondition_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct singularity_error : std::runtime_error {
  double condition;
  singularity_error(const std::string& what, double cond)
      : std::runtime_error(what), condition(cond) {}
};

struct parse_error : std::runtime_error {
  std::string path;
  parse_error(const std::string& p, const std::string& what)
      : std::runtime_error(p + ": " + what), path(p) {}
};

struct validation_error : std::runtime_error {
  double residual;
  validation_error(const std::string& what, double r) : std::runtime_error(what), residual(r) {}
};

// Geodesic left the region where the jets are trusted.
struct trust_radius_error : std::runtime_error {
  double exit_time;
  trust_radius_error(const std::string& what, double t) : std::runtime_error(what), exit_time(t) {}
};

}  // namespace acgeom
