#include "panda/registry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace panda {

namespace {

using RhsFn = void (*)(const std::vector<double>& p, const double* x, double* dx);

void rhs_lorenz(const std::vector<double>& p, const double* s, double* d) {
    const double sigma = p[0], rho = p[1], beta = p[2];
    d[0] = sigma * (s[1] - s[0]);
    d[1] = s[0] * (rho - s[2]) - s[1];
    d[2] = s[0] * s[1] - beta * s[2];
}

void rhs_rossler(const std::vector<double>& p, const double* s, double* d) {
    const double a = p[0], b = p[1], c = p[2];
    d[0] = -s[1] - s[2];
    d[1] = s[0] + a * s[1];
    d[2] = b + s[2] * (s[0] - c);
}

void rhs_thomas(const std::vector<double>& p, const double* s, double* d) {
    const double b = p[0];
    d[0] = std::sin(s[1]) - b * s[0];
    d[1] = std::sin(s[2]) - b * s[1];
    d[2] = std::sin(s[0]) - b * s[2];
}

void rhs_chen(const std::vector<double>& p, const double* s, double* d) {
    const double a = p[0], b = p[1], c = p[2];
    d[0] = a * (s[1] - s[0]);
    d[1] = (c - a) * s[0] - s[0] * s[2] + c * s[1];
    d[2] = s[0] * s[1] - b * s[2];
}

void rhs_halvorsen(const std::vector<double>& p, const double* s, double* d) {
    const double a = p[0];
    d[0] = -a * s[0] - 4.0 * s[1] - 4.0 * s[2] - s[1] * s[1];
    d[1] = -a * s[1] - 4.0 * s[2] - 4.0 * s[0] - s[2] * s[2];
    d[2] = -a * s[2] - 4.0 * s[0] - 4.0 * s[1] - s[0] * s[0];
}

void rhs_dadras(const std::vector<double>& p, const double* s, double* d) {
    const double a = p[0], b = p[1], c = p[2], e = p[3], f = p[4];
    d[0] = s[1] - a * s[0] + b * s[1] * s[2];
    d[1] = c * s[1] - s[0] * s[2] + s[2];
    d[2] = e * s[0] * s[1] - f * s[2];
}

// Langford's rotationally forced family; "aizawa" and "langford" are two
// chaotic parameter points of it.
void rhs_langford_family(const std::vector<double>& p, const double* s, double* d) {
    const double a = p[0], b = p[1], c = p[2], w = p[3], e = p[4], f = p[5];
    const double x = s[0], y = s[1], z = s[2];
    d[0] = (z - b) * x - w * y;
    d[1] = w * x + (z - b) * y;
    d[2] = c + a * z - z * z * z / 3.0 - (x * x + y * y) * (1.0 + e * z) + f * z * x * x * x;
}

void rhs_rabinovich_fabrikant(const std::vector<double>& p, const double* s, double* d) {
    const double alpha = p[0], gamma = p[1];
    const double x = s[0], y = s[1], z = s[2];
    d[0] = y * (z - 1.0 + x * x) + gamma * x;
    d[1] = x * (3.0 * z + 1.0 - x * x) + gamma * y;
    d[2] = -2.0 * z * (alpha + x * y);
}

void rhs_sprott_b(const std::vector<double>& p, const double* s, double* d) {
    const double a = p[0], b = p[1], c = p[2];
    d[0] = a * s[1] * s[2];
    d[1] = s[0] - b * s[1];
    d[2] = c - s[0] * s[1];
}

void rhs_sprott_c(const std::vector<double>& p, const double* s, double* d) {
    const double a = p[0], b = p[1], c = p[2];
    d[0] = a * s[1] * s[2];
    d[1] = s[0] - b * s[1];
    d[2] = c - s[0] * s[0];
}

void rhs_chua(const std::vector<double>& p, const double* s, double* d) {
    const double alpha = p[0], beta = p[1], m0 = p[2], m1 = p[3];
    const double x = s[0];
    const double fx = m1 * x + 0.5 * (m0 - m1) * (std::fabs(x + 1.0) - std::fabs(x - 1.0));
    d[0] = alpha * (s[1] - x - fx);
    d[1] = s[0] - s[1] + s[2];
    d[2] = -beta * s[1];
}

struct FounderDef {
    const char* name;
    RhsFn fn;
    std::vector<double> params;
    std::vector<double> ic;
    double dt;
};

// Sampling intervals are hand-chosen per system so that a 4096-point
// trajectory spans enough Lyapunov times for the divergence-curve fit while
// keeping several samples per dominant oscillation.
const std::vector<FounderDef>& founder_defs() {
    static const std::vector<FounderDef> defs = {
        {"lorenz", rhs_lorenz, {10.0, 28.0, 8.0 / 3.0}, {1.0, 1.0, 1.05}, 0.02},
        {"rossler", rhs_rossler, {0.2, 0.2, 5.7}, {1.0, 1.0, 0.0}, 0.25},
        {"thomas", rhs_thomas, {0.18}, {1.1, 1.1, -0.01}, 0.55},
        {"chen", rhs_chen, {35.0, 3.0, 28.0}, {-3.0, 2.0, 20.0}, 0.009},
        {"halvorsen", rhs_halvorsen, {1.4}, {-5.0, 0.0, 0.0}, 0.022},
        {"dadras", rhs_dadras, {3.0, 2.7, 1.7, 2.0, 9.0}, {1.1, 2.1, -2.0}, 0.08},
        {"aizawa", rhs_langford_family, {0.95, 0.7, 0.6, 3.5, 0.2, 0.15}, {0.1, 1.0, 0.01}, 0.11},
        {"rabinovich_fabrikant", rhs_rabinovich_fabrikant, {1.1, 0.87}, {-1.0, 0.0, 0.5}, 0.14},
        {"sprott_b", rhs_sprott_b, {1.0, 1.0, 1.0}, {0.05, 0.05, 0.05}, 0.10},
        {"sprott_c", rhs_sprott_c, {1.0, 1.0, 1.0}, {0.05, 0.05, 0.05}, 0.12},
        {"chua", rhs_chua, {9.0, 100.0 / 7.0, -8.0 / 7.0, -5.0 / 7.0}, {0.1, 0.0, 0.0}, 0.10},
        {"langford", rhs_langford_family, {0.95, 0.7, 0.6, 3.5, 0.1, 0.1}, {0.1, 1.0, 0.01}, 0.09},
    };
    return defs;
}

const FounderDef& founder_def(const std::string& name) {
    for (const auto& d : founder_defs())
        if (name == d.name) return d;
    throw InvalidInput("unknown founder id: " + name);
}

MatrixXd build_coupling(int rows, int cols, std::uint64_t seed) {
    if (rows == cols) return MatrixXd::Identity(rows, cols);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd c(rows, cols);
    for (int i = 0; i < rows; ++i) {
        double norm2 = 0.0;
        for (int j = 0; j < cols; ++j) {
            c(i, j) = normal(rng);
            norm2 += c(i, j) * c(i, j);
        }
        const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-300));
        for (int j = 0; j < cols; ++j) c(i, j) *= inv;
    }
    return c;
}

void collect_founders(const SystemSpec& spec, std::set<std::string>& out) {
    if (spec.kind == SystemKind::Founder) out.insert(spec.founder_id);
    for (const auto& e : spec.lineage) out.insert(e.ancestor);
    if (spec.response) collect_founders(*spec.response, out);
    if (spec.driver) collect_founders(*spec.driver, out);
}

}  // namespace

std::vector<std::string> SystemSpec::lineage_founders() const {
    std::set<std::string> names;
    collect_founders(*this, names);
    // Lineage entries may reference assigned ids of intermediate systems;
    // keep only names that exist in the founder registry.
    std::vector<std::string> out;
    for (const auto& n : names) {
        for (const auto& d : founder_defs()) {
            if (n == d.name) {
                out.push_back(n);
                break;
            }
        }
    }
    return out;
}

std::vector<SystemSpec> list_founders() {
    std::vector<SystemSpec> out;
    for (const auto& d : founder_defs()) {
        SystemSpec s;
        s.kind = SystemKind::Founder;
        s.id = d.name;
        s.founder_id = d.name;
        s.params = d.params;
        s.dim = 3;
        s.dt = d.dt;
        s.default_ic = Eigen::Map<const VectorXd>(d.ic.data(), static_cast<long>(d.ic.size()));
        out.push_back(std::move(s));
    }
    return out;
}

const SystemSpec& founder(const std::string& name) {
    static const std::map<std::string, SystemSpec> by_name = [] {
        std::map<std::string, SystemSpec> m;
        for (auto& f : list_founders()) m.emplace(f.id, f);
        return m;
    }();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw InvalidInput("unknown founder id: " + name);
    return it->second;
}

void eval_rhs_into(const SystemSpec& spec, const VectorXd& state, double t, VectorXd& out) {
    if (state.size() != spec.dim)
        throw InvalidInput("state dimension " + std::to_string(state.size()) +
                           " does not match spec dim " + std::to_string(spec.dim));
    out.resize(spec.dim);
    if (spec.kind == SystemKind::Founder) {
        founder_def(spec.founder_id).fn(spec.params, state.data(), out.data());
    } else {
        const int da = spec.response->dim;
        const int db = spec.driver->dim;
        VectorXd fa(da), fb(db);
        const VectorXd xa = state.head(da);
        const VectorXd xb = state.tail(db);
        eval_rhs_into(*spec.response, xa, t, fa);
        eval_rhs_into(*spec.driver, xb, t, fb);
        if (spec.coupling.rows() == da && spec.coupling.cols() == db && da != db)
            out.head(da) = spec.kappa_a * fa + spec.kappa_b * (spec.coupling * fb);
        else
            out.head(da) = spec.kappa_a * fa + spec.kappa_b * fb;
        out.tail(db) = fb;
    }
    for (long i = 0; i < out.size(); ++i)
        if (!std::isfinite(out[i])) throw NumericError("non-finite RHS value", i);
}

VectorXd eval_rhs(const SystemSpec& spec, const VectorXd& state, double t) {
    VectorXd out;
    eval_rhs_into(spec, state, t, out);
    return out;
}

SystemSpec perturb_params(const SystemSpec& spec, double sigma, Rng& rng) {
    if (sigma < 0.0) throw InvalidInput("mutation sigma must be >= 0");
    SystemSpec out = spec;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& theta : out.params) {
        const double scale = theta != 0.0 ? sigma * std::fabs(theta) : sigma;
        theta += scale * normal(rng);
    }
    std::ostringstream op;
    op << "mutate(sigma=" << sigma << ")";
    out.lineage.push_back({spec.id, op.str()});
    return out;
}

double flow_rms(const SystemSpec& spec, const FlowSample& samples) {
    (void)spec;
    const long n = samples.derivatives.cols();
    if (n == 0 || samples.derivatives.rows() == 0) throw InvalidInput("empty flow sample");
    if (samples.points.rows() != samples.derivatives.rows() ||
        samples.points.cols() != samples.derivatives.cols())
        throw InvalidInput("flow sample points/derivatives shape mismatch");
    if (!samples.derivatives.allFinite() || !samples.points.allFinite())
        throw InvalidInput("flow sample contains non-finite values");
    const double ms = samples.derivatives.array().square().mean();
    if (ms <= 0.0)
        throw DegenerateFlowError("all-zero flow field; cannot scale a skew product");
    return std::sqrt(ms);
}

SystemSpec make_skew_product(const SystemSpec& driver, const SystemSpec& response,
                             const FlowSample& driver_samples,
                             const FlowSample& response_samples) {
    SystemSpec out;
    out.kind = SystemKind::SkewProduct;
    out.response = std::make_shared<SystemSpec>(response);
    out.driver = std::make_shared<SystemSpec>(driver);
    out.dim = response.dim + driver.dim;
    out.kappa_a = 1.0 / flow_rms(response, response_samples);
    out.kappa_b = 1.0 / flow_rms(driver, driver_samples);
    out.coupling_seed = derive_seed(0x5157ull, {static_cast<std::uint64_t>(response.dim),
                                                static_cast<std::uint64_t>(driver.dim)});
    out.coupling = build_coupling(response.dim, driver.dim, out.coupling_seed);
    out.dt = std::min(response.dt, driver.dt);
    out.default_ic.resize(out.dim);
    out.default_ic.head(response.dim) = response.default_ic;
    out.default_ic.tail(driver.dim) = driver.default_ic;
    out.lineage = response.lineage;
    out.lineage.insert(out.lineage.end(), driver.lineage.begin(), driver.lineage.end());
    out.lineage.push_back({response.id, "skew_response"});
    out.lineage.push_back({driver.id, "skew_driver"});
    return out;
}

nlohmann::json spec_to_json(const SystemSpec& spec) {
    nlohmann::json j;
    j["kind"] = spec.kind == SystemKind::Founder ? "founder" : "skew_product";
    j["id"] = spec.id;
    j["params"] = spec.params;
    j["dim"] = spec.dim;
    nlohmann::json lin = nlohmann::json::array();
    for (const auto& e : spec.lineage) lin.push_back({{"ancestor", e.ancestor}, {"op", e.operation}});
    j["lineage"] = lin;
    if (spec.kind == SystemKind::Founder) {
        j["founder_id"] = spec.founder_id;
    } else {
        j["kappa_a"] = spec.kappa_a;
        j["kappa_b"] = spec.kappa_b;
        j["coupling_seed"] = spec.coupling_seed;
        j["response"] = spec_to_json(*spec.response);
        j["driver"] = spec_to_json(*spec.driver);
    }
    return j;
}

SystemSpec spec_from_json(const nlohmann::json& j) {
    SystemSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    s.id = j.at("id").get<std::string>();
    s.params = j.at("params").get<std::vector<double>>();
    s.dim = j.at("dim").get<int>();
    for (const auto& e : j.at("lineage"))
        s.lineage.push_back({e.at("ancestor").get<std::string>(), e.at("op").get<std::string>()});
    if (kind == "founder") {
        s.kind = SystemKind::Founder;
        s.founder_id = j.at("founder_id").get<std::string>();
        const auto& def = founder_def(s.founder_id);
        s.dt = def.dt;
        s.default_ic = Eigen::Map<const VectorXd>(def.ic.data(), static_cast<long>(def.ic.size()));
    } else if (kind == "skew_product") {
        s.kind = SystemKind::SkewProduct;
        s.response = std::make_shared<SystemSpec>(spec_from_json(j.at("response")));
        s.driver = std::make_shared<SystemSpec>(spec_from_json(j.at("driver")));
        s.kappa_a = j.at("kappa_a").get<double>();
        s.kappa_b = j.at("kappa_b").get<double>();
        s.coupling_seed = j.at("coupling_seed").get<std::uint64_t>();
        s.coupling = build_coupling(s.response->dim, s.driver->dim, s.coupling_seed);
        s.dt = std::min(s.response->dt, s.driver->dt);
        s.default_ic.resize(s.dim);
        s.default_ic.head(s.response->dim) = s.response->default_ic;
        s.default_ic.tail(s.driver->dim) = s.driver->default_ic;
    } else {
        throw InvalidInput("unknown system kind: " + kind);
    }
    if (s.kappa_a < 0.0 || s.kappa_b < 0.0) throw InvalidInput("negative skew scale factor");
    return s;
}

}  // namespace panda
