#include "panda/integrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace panda {

void IntegrationConfig::validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw InvalidInput("tolerances must be positive");
    if (!(t1 > t0)) throw InvalidInput("t1 must exceed t0");
    if (n_points < 2) throw InvalidInput("n_points must be >= 2");
    if (!(min_step > 0.0)) throw InvalidInput("min_step must be positive");
}

const char* to_string(GuardOutcome o) {
    switch (o) {
        case GuardOutcome::Completed: return "completed";
        case GuardOutcome::StepFloor: return "step_floor";
        case GuardOutcome::AmplitudeBlowup: return "amplitude_blowup";
        case GuardOutcome::Timeout: return "timeout";
    }
    return "unknown";
}

GuardOutcome guard_outcome_from_string(const std::string& s) {
    if (s == "completed") return GuardOutcome::Completed;
    if (s == "step_floor") return GuardOutcome::StepFloor;
    if (s == "amplitude_blowup") return GuardOutcome::AmplitudeBlowup;
    if (s == "timeout") return GuardOutcome::Timeout;
    throw InvalidInput("unknown guard outcome: " + s);
}

namespace {

struct StepResult {
    VectorXd y1;
    VectorXd f1;
    double err = 0.0;  // scaled error norm; accept when <= 1
};

double error_norm(const VectorXd& err, const VectorXd& y0, const VectorXd& y1, double atol,
                  double rtol) {
    double acc = 0.0;
    for (long i = 0; i < err.size(); ++i) {
        const double sk = atol + rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
        const double q = err[i] / sk;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

// Dormand-Prince 5(4), FSAL.
class Rk45Stepper {
  public:
    explicit Rk45Stepper(const OdeFn& f) : f_(f) {}
    int order() const { return 5; }

    StepResult step(double t, const VectorXd& y, const VectorXd& f0, double h, double atol,
                    double rtol) {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

        k2_.resize(y.size());
        f_(t + h * a21, y + h * a21 * f0, k2_);
        f_(t + h * 0.3, y + h * (a31 * f0 + a32 * k2_), k3_);
        f_(t + h * 0.8, y + h * (a41 * f0 + a42 * k2_ + a43 * k3_), k4_);
        f_(t + h * (8.0 / 9), y + h * (a51 * f0 + a52 * k2_ + a53 * k3_ + a54 * k4_), k5_);
        f_(t + h, y + h * (a61 * f0 + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_), k6_);
        StepResult r;
        r.y1 = y + h * (b1 * f0 + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        r.f1.resize(y.size());
        f_(t + h, r.y1, r.f1);  // FSAL stage, also reused as the next step's f0
        const VectorXd err =
            h * (e1 * f0 + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * r.f1);
        r.err = error_norm(err, y, r.y1, atol, rtol);
        return r;
    }

  private:
    const OdeFn& f_;
    VectorXd k2_, k3_, k4_, k5_, k6_;
};

// Hairer-Norsett-Wanner eighth-order Dormand-Prince with the combined
// fifth/third order error estimate.
class Dop853Stepper {
  public:
    explicit Dop853Stepper(const OdeFn& f) : f_(f) {}
    int order() const { return 8; }

    StepResult step(double t, const VectorXd& y, const VectorXd& k1, double h, double atol,
                    double rtol) {
        static constexpr double c2 = 0.526001519587677318785587544488e-01,
                                c3 = 0.789002279381515978178381316732e-01,
                                c4 = 0.118350341907227396726757197510e+00,
                                c5 = 0.281649658092772603273242802490e+00,
                                c6 = 0.333333333333333333333333333333e+00, c7 = 0.25e+00,
                                c8 = 0.307692307692307692307692307692e+00,
                                c9 = 0.651282051282051282051282051282e+00, c10 = 0.6e+00,
                                c11 = 0.857142857142857142857142857142e+00;
        static constexpr double b1 = 5.42937341165687622380535766363e-2,
                                b6 = 4.45031289275240888144113950566e0,
                                b7 = 1.89151789931450038304281599044e0,
                                b8 = -5.8012039600105847814672114227e0,
                                b9 = 3.1116436695781989440891606237e-1,
                                b10 = -1.52160949662516078556178806805e-1,
                                b11 = 2.01365400804030348374776537501e-1,
                                b12 = 4.47106157277725905176885569043e-2;
        static constexpr double a21 = 5.26001519587677318785587544488e-2,
                                a31 = 1.97250569845378994544595329183e-2,
                                a32 = 5.91751709536136983633785987549e-2,
                                a41 = 2.95875854768068491816892993775e-2,
                                a43 = 8.87627564304205475450678981324e-2,
                                a51 = 2.41365134159266685502369798665e-1,
                                a53 = -8.84549479328286085344864962717e-1,
                                a54 = 9.24834003261792003115737966543e-1,
                                a61 = 3.7037037037037037037037037037e-2,
                                a64 = 1.70828608729473871279604482173e-1,
                                a65 = 1.25467687566822425016691814123e-1, a71 = 3.7109375e-2,
                                a74 = 1.70252211019544039314978060272e-1,
                                a75 = 6.02165389804559606850219397283e-2, a76 = -1.7578125e-2;
        static constexpr double a81 = 3.70920001185047927108779319836e-2,
                                a84 = 1.70383925712239993810214054705e-1,
                                a85 = 1.07262030446373284651809199168e-1,
                                a86 = -1.53194377486244017527936158236e-2,
                                a87 = 8.27378916381402288758473766002e-3,
                                a91 = 6.24110958716075717114429577812e-1,
                                a94 = -3.36089262944694129406857109825e0,
                                a95 = -8.68219346841726006818189891453e-1,
                                a96 = 2.75920996994467083049415600797e1,
                                a97 = 2.01540675504778934086186788979e1,
                                a98 = -4.34898841810699588477366255144e1,
                                a101 = 4.77662536438264365890433908527e-1,
                                a104 = -2.48811461997166764192642586468e0,
                                a105 = -5.90290826836842996371446475743e-1,
                                a106 = 2.12300514481811942347288949897e1,
                                a107 = 1.52792336328824235832596922938e1,
                                a108 = -3.32882109689848629194453265587e1,
                                a109 = -2.03312017085086261358222928593e-2;
        static constexpr double a111 = -9.3714243008598732571704021658e-1,
                                a114 = 5.18637242884406370830023853209e0,
                                a115 = 1.09143734899672957818500254654e0,
                                a116 = -8.14978701074692612513997267357e0,
                                a117 = -1.85200656599969598641566180701e1,
                                a118 = 2.27394870993505042818970056734e1,
                                a119 = 2.49360555267965238987089396762e0,
                                a1110 = -3.0467644718982195003823669022e0,
                                a121 = 2.27331014751653820792359768449e0,
                                a124 = -1.05344954667372501984066689879e1,
                                a125 = -2.00087205822486249909675718444e0,
                                a126 = -1.79589318631187989172765950534e1,
                                a127 = 2.79488845294199600508499808837e1,
                                a128 = -2.85899827713502369474065508674e0,
                                a129 = -8.87285693353062954433549289258e0,
                                a1210 = 1.23605671757943030647266201528e1,
                                a1211 = 6.43392746015763530355970484046e-1;
        static constexpr double bhh1 = 0.244094488188976377952755905512e+00,
                                bhh2 = 0.733846688281611857341361741547e+00,
                                bhh3 = 0.220588235294117647058823529412e-01;
        static constexpr double er1 = 0.1312004499419488073250102996e-01,
                                er6 = -0.1225156446376204440720569753e+01,
                                er7 = -0.4957589496572501915214079952e+00,
                                er8 = 0.1664377182454986536961530415e+01,
                                er9 = -0.3503288487499736816886487290e+00,
                                er10 = 0.3341791187130174790297318841e+00,
                                er11 = 0.8192320648511571246570742613e-01,
                                er12 = -0.2235530786388629525884427845e-01;

        const long n = y.size();
        k2.resize(n); k3.resize(n); k4.resize(n); k5.resize(n); k6.resize(n);
        k7.resize(n); k8.resize(n); k9.resize(n); k10.resize(n); kb.resize(n); kc.resize(n);

        f_(t + c2 * h, y + h * (a21 * k1), k2);
        f_(t + c3 * h, y + h * (a31 * k1 + a32 * k2), k3);
        f_(t + c4 * h, y + h * (a41 * k1 + a43 * k3), k4);
        f_(t + c5 * h, y + h * (a51 * k1 + a53 * k3 + a54 * k4), k5);
        f_(t + c6 * h, y + h * (a61 * k1 + a64 * k4 + a65 * k5), k6);
        f_(t + c7 * h, y + h * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6), k7);
        f_(t + c8 * h, y + h * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7), k8);
        f_(t + c9 * h,
           y + h * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8), k9);
        f_(t + c10 * h,
           y + h * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 +
                    a109 * k9),
           k10);
        f_(t + c11 * h,
           y + h * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 + a118 * k8 +
                    a119 * k9 + a1110 * k10),
           kb);
        f_(t + h,
           y + h * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 +
                    a129 * k9 + a1210 * k10 + a1211 * kb),
           kc);

        StepResult r;
        // Eighth-order combination; kc and kb now hold stages 12 and 11.
        VectorXd ksum = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 +
                        b11 * kb + b12 * kc;
        r.y1 = y + h * ksum;

        double err3 = 0.0, err5 = 0.0;
        for (long i = 0; i < n; ++i) {
            const double sk = atol + rtol * std::max(std::fabs(y[i]), std::fabs(r.y1[i]));
            double q = (ksum[i] - bhh1 * k1[i] - bhh2 * k9[i] - bhh3 * kc[i]) / sk;
            err3 += q * q;
            q = (er1 * k1[i] + er6 * k6[i] + er7 * k7[i] + er8 * k8[i] + er9 * k9[i] +
                 er10 * k10[i] + er11 * kb[i] + er12 * kc[i]) / sk;
            err5 += q * q;
        }
        double deno = err5 + 0.01 * err3;
        if (deno <= 0.0) deno = 1.0;
        r.err = std::fabs(h) * err5 * std::sqrt(1.0 / (deno * static_cast<double>(n)));
        r.f1.resize(n);
        f_(t + h, r.y1, r.f1);
        return r;
    }

  private:
    const OdeFn& f_;
    VectorXd k2, k3, k4, k5, k6, k7, k8, k9, k10, kb, kc;
};

double initial_step(const OdeFn& f, double t0, const VectorXd& y0, const VectorXd& f0,
                    double atol, double rtol, double hmax, int order) {
    double dnf = 0.0, dny = 0.0;
    for (long i = 0; i < y0.size(); ++i) {
        const double sk = atol + rtol * std::fabs(y0[i]);
        dnf += (f0[i] / sk) * (f0[i] / sk);
        dny += (y0[i] / sk) * (y0[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax);
    VectorXd y1 = y0 + h * f0;
    VectorXd f1(y0.size());
    f(t0 + h, y1, f1);
    double der2 = 0.0;
    for (long i = 0; i < y0.size(); ++i) {
        const double sk = atol + rtol * std::fabs(y0[i]);
        const double q = (f1[i] - f0[i]) / sk;
        der2 += q * q;
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::fabs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::fabs(h) * 1e-3)
                                     : std::pow(0.01 / der12, 1.0 / order);
    return std::min({100.0 * h, h1, hmax});
}

// Cubic Hermite evaluation on [t, t+h] given endpoint states and derivatives.
VectorXd hermite(double theta, double h, const VectorXd& y0, const VectorXd& f0,
                 const VectorXd& y1, const VectorXd& f1) {
    const double t2 = theta * theta, t3 = t2 * theta;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + theta;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

}  // namespace

std::pair<Trajectory, GuardReport> integrate_fn(const OdeFn& f, const VectorXd& x0,
                                                const IntegrationConfig& cfg) {
    cfg.validate();
    for (long i = 0; i < x0.size(); ++i)
        if (!std::isfinite(x0[i])) throw InvalidInput("non-finite initial state");

    const auto wall_start = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
            .count();
    };

    Trajectory traj;
    traj.t0 = cfg.t0;
    traj.dt = (cfg.t1 - cfg.t0) / (cfg.n_points - 1);
    traj.values.resize(x0.size(), cfg.n_points);

    GuardReport report;
    report.outcome = GuardOutcome::Completed;

    int emitted = 0;
    const auto out_time = [&](int k) { return cfg.t0 + k * traj.dt; };

    Rk45Stepper rk45(f);
    Dop853Stepper dop853(f);
    const int order = cfg.method == OdeMethod::RK45 ? rk45.order() : dop853.order();

    double t = cfg.t0;
    VectorXd y = x0;
    VectorXd fy(x0.size());

    const auto finish = [&](GuardOutcome outcome, const std::string& detail) {
        report.outcome = outcome;
        report.t_reached = t;
        report.detail = detail;
        traj.values.conservativeResize(Eigen::NoChange, emitted);
        return std::make_pair(std::move(traj), std::move(report));
    };

    try {
        f(t, y, fy);
    } catch (const NumericError& e) {
        return finish(GuardOutcome::AmplitudeBlowup, e.what());
    }
    if (!fy.allFinite()) return finish(GuardOutcome::AmplitudeBlowup, "non-finite RHS at t0");

    traj.values.col(emitted++) = y;

    double h;
    if (cfg.fixed_step > 0.0)
        h = cfg.fixed_step;
    else
        h = initial_step(f, t, y, fy, cfg.atol, cfg.rtol, cfg.t1 - cfg.t0, order);

    while (t < cfg.t1) {
        if (elapsed() > cfg.max_wall_seconds)
            return finish(GuardOutcome::Timeout, "wall clock guard tripped");
        if (cfg.fixed_step <= 0.0 && h < cfg.min_step)
            return finish(GuardOutcome::StepFloor, "step size fell below floor");
        bool last = false;
        if (t + h >= cfg.t1) {
            h = cfg.t1 - t;
            last = true;
        }

        StepResult r;
        try {
            r = cfg.method == OdeMethod::RK45 ? rk45.step(t, y, fy, h, cfg.atol, cfg.rtol)
                                              : dop853.step(t, y, fy, h, cfg.atol, cfg.rtol);
        } catch (const NumericError& e) {
            return finish(GuardOutcome::AmplitudeBlowup, e.what());
        }
        if (!r.y1.allFinite() || !std::isfinite(r.err))
            return finish(GuardOutcome::AmplitudeBlowup, "non-finite state during step");

        const bool accept = cfg.fixed_step > 0.0 || r.err <= 1.0;
        if (accept) {
            // Emit any output samples inside the accepted interval.
            while (emitted < cfg.n_points && out_time(emitted) <= t + h + 1e-14 * (cfg.t1 - cfg.t0)) {
                const double theta = std::clamp((out_time(emitted) - t) / h, 0.0, 1.0);
                traj.values.col(emitted) = hermite(theta, h, y, fy, r.y1, r.f1);
                ++emitted;
            }
            t += h;
            y = r.y1;
            fy = r.f1;
            for (long i = 0; i < y.size(); ++i) {
                if (std::fabs(y[i]) > cfg.amplitude_bound)
                    return finish(GuardOutcome::AmplitudeBlowup,
                                  "amplitude bound exceeded at component " + std::to_string(i));
            }
            if (last && emitted >= cfg.n_points) break;
        }
        if (cfg.fixed_step <= 0.0) {
            const double expo = 1.0 / order;
            double fac;
            if (r.err <= 0.0)
                fac = 5.0;
            else
                fac = std::clamp(0.9 * std::pow(r.err, -expo), 0.2, 5.0);
            if (!accept) fac = std::min(fac, 1.0);
            h *= fac;
            h = std::min(h, cfg.t1 - cfg.t0);
        }
        if (last && accept) break;
    }

    // Numerical slack can leave the final sample unemitted; it equals y(t1).
    while (emitted < cfg.n_points && t >= cfg.t1 - 1e-12 * std::max(1.0, std::fabs(cfg.t1))) {
        traj.values.col(emitted++) = y;
    }

    report.t_reached = t;
    if (emitted == cfg.n_points && t >= cfg.t1 - 1e-12 * std::max(1.0, std::fabs(cfg.t1))) {
        report.outcome = GuardOutcome::Completed;
        report.t_reached = cfg.t1;
        return {std::move(traj), std::move(report)};
    }
    return finish(GuardOutcome::StepFloor, "integration stalled before t1");
}

std::pair<Trajectory, GuardReport> integrate(const SystemSpec& spec, const VectorXd& x0,
                                             const IntegrationConfig& config) {
    if (x0.size() != spec.dim)
        throw InvalidInput("initial state dimension does not match spec dim");
    OdeFn f = [&spec](double t, const VectorXd& y, VectorXd& dy) {
        eval_rhs_into(spec, y, t, dy);
    };
    auto result = integrate_fn(f, x0, config);
    result.first.spec_ref = spec.id;
    return result;
}

IntegrationConfig sampling_config(const SystemSpec& spec, int n_points) {
    IntegrationConfig cfg;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-10;
    cfg.t0 = 0.0;
    cfg.t1 = spec.dt * (n_points - 1);
    cfg.n_points = n_points;
    return cfg;
}

VectorXd sample_on_attractor_ic(const SystemSpec& spec, Rng& rng) {
    IntegrationConfig cfg;
    cfg.rtol = 1e-6;
    cfg.atol = 1e-7;
    cfg.t0 = 0.0;
    const int n = 2048;
    cfg.t1 = spec.dt * (n - 1);
    cfg.n_points = n;
    auto [traj, report] = integrate(spec, spec.default_ic, cfg);
    if (report.outcome != GuardOutcome::Completed)
        throw UnsampleableSystemError("coarse run tripped guard: " + report.detail);
    std::uniform_int_distribution<int> pick(n / 2, n - 1);
    return traj.values.col(pick(rng));
}

}  // namespace panda
