#pragma once

#include <functional>
#include <string>
#include <utility>

#include "panda/common.hpp"
#include "panda/registry.hpp"
#include "panda/rng.hpp"

namespace panda {

enum class OdeMethod { RK45, DOP853 };

struct IntegrationConfig {
    double rtol = 1e-9;
    double atol = 1e-10;
    double t0 = 0.0;
    double t1 = 1.0;
    int n_points = 2;
    double max_wall_seconds = 5.0;
    double min_step = 1e-10;
    double amplitude_bound = 1e4;
    OdeMethod method = OdeMethod::RK45;
    // When positive, integrate with this constant step and no error control
    // (used by convergence-order tests).
    double fixed_step = 0.0;

    void validate() const;
};

enum class GuardOutcome { Completed, StepFloor, AmplitudeBlowup, Timeout };

struct GuardReport {
    GuardOutcome outcome = GuardOutcome::Completed;
    double t_reached = 0.0;
    std::string detail;
};

const char* to_string(GuardOutcome o);
GuardOutcome guard_outcome_from_string(const std::string& s);

struct Trajectory {
    MatrixXd values;  // channels x timesteps
    double dt = 0.0;
    double t0 = 0.0;
    std::string spec_ref;

    long channels() const { return values.rows(); }
    long timesteps() const { return values.cols(); }
};

using OdeFn = std::function<void(double t, const VectorXd& y, VectorXd& dy)>;

// Adaptive embedded Runge-Kutta integration with uniform resampling through
// cubic Hermite interpolation on accepted steps. Guard trips return the
// partial trajectory; they are outcomes, not errors.
std::pair<Trajectory, GuardReport> integrate_fn(const OdeFn& f, const VectorXd& x0,
                                                const IntegrationConfig& config);

std::pair<Trajectory, GuardReport> integrate(const SystemSpec& spec, const VectorXd& x0,
                                             const IntegrationConfig& config);

// Coarse-tolerance run from the spec's default initial condition; discards the
// first half as transient and returns a uniformly sampled remaining state.
VectorXd sample_on_attractor_ic(const SystemSpec& spec, Rng& rng);

// Default fine-tolerance sampling configuration for a spec's standardized
// horizon of n_points samples.
IntegrationConfig sampling_config(const SystemSpec& spec, int n_points);

}  // namespace panda
