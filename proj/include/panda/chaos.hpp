#pragma once

#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "panda/common.hpp"
#include "panda/integrator.hpp"
#include "panda/rng.hpp"

namespace panda {

enum class TransientReason { FixedPoint, Diverged };

struct SelectConfig {
    double k_threshold = 0.7;
    double recurrence_eps_frac = 0.02;
    double recurrence_reject = 0.8;
    double spectral_reject = 0.9;
    int n_c = 16;
    std::uint64_t seed = 0x01BA11;
    double amplitude_bound = 1e4;
};

struct ChaosVerdict {
    bool accepted = false;
    std::optional<TransientReason> transient_reason;
    std::optional<double> k_statistic;
    std::optional<double> recurrence_fraction;
    std::optional<double> spectral_peak_ratio;
    std::optional<double> lyapunov_estimate;
    std::optional<std::string> failed_stage;
};

// Stage 1: cull trajectories that settled to a fixed point or left the
// amplitude bound.
std::optional<TransientReason> reject_transient(const Trajectory& traj,
                                                double amplitude_bound = 1e4);

// Gottwald-Melbourne 0-1 test, translation-variable correlation form, median
// over n_c random frequencies c in (pi/5, 4pi/5). The series is decimated
// internally to a few samples per mean-crossing period; oversampled flows
// otherwise hide their diffusive signature. Throws InvalidInput on constant
// or non-oscillatory input.
double zero_one_test(const VectorXd& series, int n_c, Rng& rng);

// Decimation stride the 0-1 test will apply to a series (exposed for tests).
int zero_one_stride(const VectorXd& series);

// Fraction of final-half states with an eps-close non-temporal neighbor whose
// recurrence intervals concentrate on a single period (CV < 0.1).
double recurrence_limit_cycle_test(const Trajectory& traj, double eps_frac);

// Hann periodogram concentration: power in the top-5 bins over total non-DC
// power.
double spectral_peak_test(const VectorXd& series);

// Largest Lyapunov exponent from the mean log divergence of nearest
// non-temporal neighbors; slope of the first third of the divergence curve.
double rosenstein_lyapunov(const Trajectory& traj, int mean_period_samples);

ChaosVerdict select(const Trajectory& traj, const SelectConfig& config = {});

nlohmann::json verdict_to_json(const ChaosVerdict& v);
ChaosVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace panda
