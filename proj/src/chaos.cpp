#include "panda/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "panda/fft.hpp"

namespace panda {

namespace {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0 || syy <= 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::optional<TransientReason> reject_transient(const Trajectory& traj, double amplitude_bound) {
    if (traj.timesteps() < 512) throw InvalidInput("transient test needs >= 512 timesteps");
    if (traj.values.array().abs().maxCoeff() > amplitude_bound ||
        !traj.values.allFinite())
        return TransientReason::Diverged;

    const long t = traj.timesteps();
    const long tail = t / 4;
    bool all_flat = true;
    for (long c = 0; c < traj.channels(); ++c) {
        const auto whole = traj.values.row(c);
        const auto last = traj.values.row(c).tail(tail);
        const double global_sd = std::sqrt((whole.array() - whole.mean()).square().mean());
        const double tail_sd = std::sqrt((last.array() - last.mean()).square().mean());
        // A channel counts as live when its tail still moves relative to the
        // channel's own scale (or absolute scale for near-constant channels).
        if (tail_sd >= 1e-6 * std::max(global_sd, 1e-12)) {
            all_flat = false;
            break;
        }
    }
    if (all_flat) return TransientReason::FixedPoint;
    return std::nullopt;
}

int zero_one_stride(const VectorXd& series) {
    const long n = series.size();
    const double mean = series.mean();
    long crossings = 0;
    for (long i = 1; i < n; ++i)
        if ((series[i] - mean) * (series[i - 1] - mean) < 0.0) ++crossings;
    if (crossings < 4) return -1;  // degenerate: no oscillation to sample
    const double period = 2.0 * static_cast<double>(n) / static_cast<double>(crossings);
    const long max_stride = std::max<long>(1, n / 512);
    const long stride = std::lround(period / 6.0);
    return static_cast<int>(std::clamp<long>(stride, 1, max_stride));
}

double zero_one_test(const VectorXd& series, int n_c, Rng& rng) {
    if (series.size() < 1000) throw InvalidInput("0-1 test needs >= 1000 samples");
    if (!series.allFinite()) throw InvalidInput("0-1 test input must be finite");
    const double sd = std::sqrt((series.array() - series.mean()).square().mean());
    if (sd <= 0.0) throw InvalidInput("0-1 test input is constant");

    const int stride = zero_one_stride(series);
    if (stride < 0) throw InvalidInput("0-1 test input does not oscillate about its mean");

    const long m = (series.size() + stride - 1) / stride;
    VectorXd phi(m);
    for (long i = 0; i < m; ++i) phi[i] = series[i * stride];
    phi.array() -= phi.mean();

    const long nn = phi.size();
    const long ncut = nn / 10;
    if (ncut < 8) throw InvalidInput("0-1 test input too short after decimation");

    std::uniform_real_distribution<double> draw_c(M_PI / 5.0, 4.0 * M_PI / 5.0);
    std::vector<double> ks;
    ks.reserve(n_c);
    std::vector<double> p(nn), q(nn), msd(ncut), idx(ncut);
    for (int trial = 0; trial < n_c; ++trial) {
        const double c = draw_c(rng);
        double cp = 0.0, cq = 0.0;
        for (long j = 0; j < nn; ++j) {
            const double arg = c * static_cast<double>(j + 1);
            cp += phi[j] * std::cos(arg);
            cq += phi[j] * std::sin(arg);
            p[j] = cp;
            q[j] = cq;
        }
        for (long lag = 1; lag <= ncut; ++lag) {
            double acc = 0.0;
            for (long j = 0; j + lag < nn; ++j) {
                const double dp = p[j + lag] - p[j];
                const double dq = q[j + lag] - q[j];
                acc += dp * dp + dq * dq;
            }
            msd[lag - 1] = acc / static_cast<double>(nn - lag);
            idx[lag - 1] = static_cast<double>(lag);
        }
        ks.push_back(pearson(idx, msd));
    }
    std::nth_element(ks.begin(), ks.begin() + ks.size() / 2, ks.end());
    double k = ks[ks.size() / 2];
    if (ks.size() % 2 == 0) {
        const double hi = k;
        const double lo = *std::max_element(ks.begin(), ks.begin() + ks.size() / 2);
        k = 0.5 * (lo + hi);
    }
    return std::clamp(k, -0.05, 1.05);
}

double recurrence_limit_cycle_test(const Trajectory& traj, double eps_frac) {
    if (traj.timesteps() < 1024) throw InvalidInput("recurrence test needs >= 1024 timesteps");
    const long t = traj.timesteps();
    const long n = t / 2;
    const MatrixXd x = traj.values.rightCols(n);  // channels x n
    const long excl = std::max<long>(1, n / 20);

    double diam2 = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j)
            diam2 = std::max(diam2, (x.col(i) - x.col(j)).squaredNorm());
    if (diam2 <= 0.0) return 1.0;  // all states identical: perfectly recurrent
    const double eps2 = eps_frac * eps_frac * diam2;

    long recurrent = 0;
    std::vector<long> visits;
    for (long i = 0; i < n; ++i) {
        visits.clear();
        for (long j = 0; j < n; ++j) {
            if (std::labs(j - i) <= excl) continue;
            if ((x.col(i) - x.col(j)).squaredNorm() < eps2) visits.push_back(j);
        }
        if (visits.size() < 2) continue;
        // Collapse consecutive indices into orbit passes and measure the
        // spacing between pass starts.
        std::vector<double> intervals;
        long pass_start = visits[0];
        for (std::size_t v = 1; v < visits.size(); ++v) {
            if (visits[v] != visits[v - 1] + 1) {
                intervals.push_back(static_cast<double>(visits[v] - pass_start));
                pass_start = visits[v];
            }
        }
        if (intervals.size() < 2) continue;
        double mean = std::accumulate(intervals.begin(), intervals.end(), 0.0) / intervals.size();
        double var = 0.0;
        for (double iv : intervals) var += (iv - mean) * (iv - mean);
        var /= intervals.size();
        const double cv = mean > 0 ? std::sqrt(var) / mean : 1.0;
        if (cv < 0.1) ++recurrent;
    }
    return static_cast<double>(recurrent) / static_cast<double>(n);
}

double spectral_peak_test(const VectorXd& series) {
    if (series.size() < 1024) throw InvalidInput("spectral test needs >= 1024 samples");
    auto power = periodogram_hann(series);
    std::vector<double> bins(power.begin() + 1, power.end());  // drop DC
    const double total = std::accumulate(bins.begin(), bins.end(), 0.0);
    if (total <= 0.0) return 1.0;
    std::partial_sort(bins.begin(), bins.begin() + std::min<std::size_t>(5, bins.size()),
                      bins.end(), std::greater<double>());
    double top = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, bins.size()); ++i) top += bins[i];
    return top / total;
}

double rosenstein_lyapunov(const Trajectory& traj, int mean_period_samples) {
    const long n = traj.timesteps();
    if (n < 2048) throw InvalidInput("Lyapunov estimate needs >= 2048 timesteps");
    const MatrixXd& x = traj.values;
    const long kmax = n / 10;
    const long excl = std::clamp<long>(mean_period_samples, 1, kmax);

    // Nearest neighbor outside the temporal exclusion window, brute force.
    std::vector<long> nbr(n, -1);
    for (long i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        long bestj = -1;
        for (long j = 0; j < n; ++j) {
            if (std::labs(j - i) <= excl) continue;
            const double d2 = (x.col(i) - x.col(j)).squaredNorm();
            if (d2 < best) {
                best = d2;
                bestj = j;
            }
        }
        nbr[i] = bestj;
    }

    std::vector<double> logd(kmax, 0.0);
    std::vector<long> count(kmax, 0);
    for (long i = 0; i < n; ++i) {
        const long j = nbr[i];
        if (j < 0) continue;
        const long m = std::min({n - i, n - j, kmax});
        for (long k = 0; k < m; ++k) {
            const double d = (x.col(i + k) - x.col(j + k)).norm();
            if (d > 0.0) {
                logd[k] += std::log(d);
                ++count[k];
            }
        }
    }

    std::vector<double> ks, ys;
    const long fit_end = std::max<long>(2, kmax / 3);
    for (long k = 0; k < fit_end; ++k) {
        if (count[k] == 0) continue;
        ks.push_back(static_cast<double>(k));
        ys.push_back(logd[k] / count[k]);
    }
    if (ks.size() < 2) throw InvalidInput("divergence curve too sparse for a slope fit");

    // Least-squares slope of the initial linear region.
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        mx += ks[i];
        my += ys[i];
    }
    mx /= ks.size();
    my /= ks.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sxy += (ks[i] - mx) * (ys[i] - my);
        sxx += (ks[i] - mx) * (ks[i] - mx);
    }
    return (sxy / sxx) / traj.dt;
}

ChaosVerdict select(const Trajectory& traj, const SelectConfig& config) {
    ChaosVerdict v;

    if (auto reason = reject_transient(traj, config.amplitude_bound)) {
        v.transient_reason = reason;
        v.failed_stage = "transient";
        return v;
    }

    const VectorXd series = traj.values.row(0).transpose();
    Rng rng = make_rng(config.seed);
    try {
        v.k_statistic = zero_one_test(series, config.n_c, rng);
    } catch (const InvalidInput&) {
        v.failed_stage = "zero_one";
        return v;
    }
    if (*v.k_statistic <= config.k_threshold) {
        v.failed_stage = "zero_one";
        return v;
    }

    v.recurrence_fraction = recurrence_limit_cycle_test(traj, config.recurrence_eps_frac);
    if (*v.recurrence_fraction > config.recurrence_reject) {
        v.failed_stage = "recurrence";
        return v;
    }

    v.spectral_peak_ratio = spectral_peak_test(series);
    if (*v.spectral_peak_ratio > config.spectral_reject) {
        v.failed_stage = "spectral";
        return v;
    }

    const int mean_period =
        std::min(dominant_period_samples(series), static_cast<int>(traj.timesteps() / 10));
    v.lyapunov_estimate = rosenstein_lyapunov(traj, mean_period);
    if (*v.lyapunov_estimate <= 0.0) {
        v.failed_stage = "lyapunov";
        return v;
    }

    v.accepted = true;
    return v;
}

nlohmann::json verdict_to_json(const ChaosVerdict& v) {
    nlohmann::json j;
    j["accepted"] = v.accepted;
    if (v.transient_reason)
        j["transient_reason"] =
            *v.transient_reason == TransientReason::FixedPoint ? "fixed_point" : "diverged";
    if (v.k_statistic) j["k_statistic"] = *v.k_statistic;
    if (v.recurrence_fraction) j["recurrence_fraction"] = *v.recurrence_fraction;
    if (v.spectral_peak_ratio) j["spectral_peak_ratio"] = *v.spectral_peak_ratio;
    if (v.lyapunov_estimate) j["lyapunov_estimate"] = *v.lyapunov_estimate;
    if (v.failed_stage) j["failed_stage"] = *v.failed_stage;
    return j;
}

ChaosVerdict verdict_from_json(const nlohmann::json& j) {
    ChaosVerdict v;
    v.accepted = j.at("accepted").get<bool>();
    if (j.contains("transient_reason"))
        v.transient_reason = j["transient_reason"] == "fixed_point" ? TransientReason::FixedPoint
                                                                    : TransientReason::Diverged;
    if (j.contains("k_statistic")) v.k_statistic = j["k_statistic"].get<double>();
    if (j.contains("recurrence_fraction"))
        v.recurrence_fraction = j["recurrence_fraction"].get<double>();
    if (j.contains("spectral_peak_ratio"))
        v.spectral_peak_ratio = j["spectral_peak_ratio"].get<double>();
    if (j.contains("lyapunov_estimate")) v.lyapunov_estimate = j["lyapunov_estimate"].get<double>();
    if (j.contains("failed_stage")) v.failed_stage = j["failed_stage"].get<std::string>();
    return v;
}

}  // namespace panda
