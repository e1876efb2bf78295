#pragma once

// Independent numerical oracles used by the test suites. These deliberately
// take different algorithmic routes than the library code they check.

#include <map>
#include <string>

#include "panda/integrator.hpp"
#include "panda/registry.hpp"

namespace panda::oracles {

// Largest Lyapunov exponent by tangent-vector propagation with periodic
// renormalization (Benettin). The tangent dynamics are evaluated through
// central finite differences of the RHS, so no analytic Jacobian enters.
double benettin_lyapunov(const SystemSpec& spec, double renorm_dt, int n_intervals,
                         double transient_time);

// Least-squares slope of log C(r) vs log r for the correlation integral over
// the same percentile window the production estimator uses.
double loglog_correlation_dimension(const MatrixXd& points, double lo_pct, double hi_pct);

// Reference fine-tolerance trajectory for a founder, cached per process.
const Trajectory& founder_reference(const std::string& name, int n_points = 4096);

}  // namespace panda::oracles
