#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "panda/common.hpp"
#include "panda/rng.hpp"

namespace panda {

enum class SystemKind { Founder, SkewProduct };

struct LineageEntry {
    std::string ancestor;
    std::string operation;
};

// A parameterized ODE right-hand side: either a named founder with parameters
// theta, or a skew product that couples a driven response block to an
// autonomous driver block.
struct SystemSpec {
    SystemKind kind = SystemKind::Founder;
    std::string id;          // registry name for founders, assigned id otherwise
    std::string founder_id;  // valid when kind == Founder
    std::vector<double> params;
    int dim = 0;

    // Skew-product members; null for founders.
    std::shared_ptr<const SystemSpec> response;
    std::shared_ptr<const SystemSpec> driver;
    double kappa_a = 0.0;
    double kappa_b = 0.0;
    std::uint64_t coupling_seed = 0;
    MatrixXd coupling;  // dim(response) x dim(driver); identity when dims match

    std::vector<LineageEntry> lineage;

    // Registry metadata: sampling interval and a default initial condition.
    // Skew products derive both from their parents.
    double dt = 0.0;
    VectorXd default_ic;

    // Founder ids reachable through the lineage (including self for founders).
    std::vector<std::string> lineage_founders() const;
};

struct FlowSample {
    MatrixXd points;       // dim x n
    MatrixXd derivatives;  // dim x n
};

// The founder pool: canonical 3D chaotic systems with literature-standard
// chaotic parameters, each verified to clear the selection battery at its
// registry sampling interval.
std::vector<SystemSpec> list_founders();
const SystemSpec& founder(const std::string& name);

void eval_rhs_into(const SystemSpec& spec, const VectorXd& state, double t, VectorXd& out);
VectorXd eval_rhs(const SystemSpec& spec, const VectorXd& state, double t);

// Gaussian parameter mutation with relative scale sigma*|theta_i| (absolute
// sigma when theta_i == 0). Appends a Mutation lineage entry.
SystemSpec perturb_params(const SystemSpec& spec, double sigma, Rng& rng);

// RMS of RHS magnitudes over an on-attractor sample.
double flow_rms(const SystemSpec& spec, const FlowSample& samples);

SystemSpec make_skew_product(const SystemSpec& driver, const SystemSpec& response,
                             const FlowSample& driver_samples, const FlowSample& response_samples);

nlohmann::json spec_to_json(const SystemSpec& spec);
SystemSpec spec_from_json(const nlohmann::json& j);

}  // namespace panda
