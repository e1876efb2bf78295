#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <vector>

#include "panda/rng.hpp"

namespace panda::oracles {

double benettin_lyapunov(const SystemSpec& spec, double renorm_dt, int n_intervals,
                         double transient_time) {
    const int d = spec.dim;
    // Tangent propagation via a finite-difference directional derivative of
    // the flow: integrate the state together with the tangent vector.
    const double fd_eps = 1e-7;
    OdeFn joint = [&](double t, const VectorXd& s, VectorXd& ds) {
        ds.resize(2 * d);
        const VectorXd x = s.head(d);
        const VectorXd v = s.tail(d);
        VectorXd fx(d), fplus(d), fminus(d);
        eval_rhs_into(spec, x, t, fx);
        const double vn = std::max(v.norm(), 1e-300);
        const VectorXd vhat = v / vn;
        eval_rhs_into(spec, x + fd_eps * vhat, t, fplus);
        eval_rhs_into(spec, x - fd_eps * vhat, t, fminus);
        ds.head(d) = fx;
        ds.tail(d) = (vn / (2.0 * fd_eps)) * (fplus - fminus);
    };

    IntegrationConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
    cfg.max_wall_seconds = 120.0;

    // Settle onto the attractor first.
    VectorXd x = spec.default_ic;
    {
        IntegrationConfig warm = cfg;
        warm.t1 = transient_time;
        warm.n_points = 2;
        auto [traj, rep] = integrate(spec, x, warm);
        if (rep.outcome != GuardOutcome::Completed)
            throw std::runtime_error("benettin transient failed");
        x = traj.values.col(traj.timesteps() - 1);
    }

    Rng rng = make_rng(1234);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = normal(rng);
    v.normalize();

    double log_sum = 0.0;
    int counted = 0;
    const int skip = std::max(5, n_intervals / 20);  // let v align with the unstable direction
    for (int k = 0; k < n_intervals; ++k) {
        VectorXd s0(2 * d);
        s0.head(d) = x;
        s0.tail(d) = v;
        IntegrationConfig leg = cfg;
        leg.t1 = renorm_dt;
        leg.n_points = 2;
        auto [traj, rep] = integrate_fn(joint, s0, leg);
        if (rep.outcome != GuardOutcome::Completed)
            throw std::runtime_error("benettin leg failed: " + rep.detail);
        const VectorXd s1 = traj.values.col(traj.timesteps() - 1);
        x = s1.head(d);
        VectorXd w = s1.tail(d);
        const double growth = w.norm();
        if (k >= skip) {
            log_sum += std::log(growth);
            ++counted;
        }
        v = w / growth;
    }
    return log_sum / (counted * renorm_dt);
}

double loglog_correlation_dimension(const MatrixXd& points, double lo_pct, double hi_pct) {
    const long n = points.cols();
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) dists.push_back((points.col(i) - points.col(j)).norm());
    std::sort(dists.begin(), dists.end());
    const auto pct = [&](double p) {
        const double idx = p / 100.0 * (dists.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const double frac = idx - lo;
        return dists[lo] * (1 - frac) + dists[std::min(lo + 1, dists.size() - 1)] * frac;
    };
    const double rlo = pct(lo_pct), rhi = pct(hi_pct);

    const int n_bins = 20;
    std::vector<double> lx, ly;
    for (int b = 0; b < n_bins; ++b) {
        const double r = rlo * std::pow(rhi / rlo, static_cast<double>(b) / (n_bins - 1));
        const double c =
            static_cast<double>(std::lower_bound(dists.begin(), dists.end(), r) - dists.begin()) /
            dists.size();
        if (c > 0) {
            lx.push_back(std::log(r));
            ly.push_back(std::log(c));
        }
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= lx.size();
    my /= lx.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

const Trajectory& founder_reference(const std::string& name, int n_points) {
    static std::map<std::string, Trajectory> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    const std::string key = name + "/" + std::to_string(n_points);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    const SystemSpec& spec = founder(name);
    Rng rng = make_rng(derive_seed(99, {static_cast<std::uint64_t>(n_points)}));
    const VectorXd x0 = sample_on_attractor_ic(spec, rng);
    auto [traj, rep] = integrate(spec, x0, sampling_config(spec, n_points));
    if (rep.outcome != GuardOutcome::Completed)
        throw std::runtime_error("founder reference integration failed for " + name);
    return cache.emplace(key, std::move(traj)).first->second;
}

}  // namespace panda::oracles
