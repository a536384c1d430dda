#include "mixqnm/volterra.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <map>

namespace mixqnm {

void check_config(const OracleConfig& cfg)
{
    if (!(cfg.memory_cut > 0.0 && cfg.memory_cut <= 1e-4))
        throw ConfigError("bad-memory-cut", "oracle.memory_cut must lie in (0, 1e-4]");
    if (cfg.dt < 0.0 || std::isnan(cfg.dt))
        throw ConfigError("bad-dt", "oracle.dt must be positive");
}

double default_dt(const SpectralModel& model, const ModeParams& p)
{
    double s = p.omegas().maxCoeff();
    for (const auto& ch : model.channels)
        s = std::max(s, ch.lambda);
    return 0.25 / s;
}

VolterraSystem correlator_volterra(const BlockSystem& sys)
{
    VolterraSystem vs;
    vs.Omega = sys.Omega;
    const Mat2d ts = tilde_scale(sys.params);
    const Vec2d w = sys.params.omegas();
    for (const auto& t : sys.sigma_terms)
        vs.memory.push_back({t.row, t.src, t.coeff * ts(t.a, t.b), t.a, t.b, t.sigma * w(t.x)});
    for (const auto& t : sys.noise_terms)
        vs.drive.push_back({t.row, t.coeff * ts(t.a, t.b), t.a, t.b, t.sigma * w(t.x)});
    return vs;
}

VolterraSystem amplitude_volterra(const ModeParams& p)
{
    // alpha_c = phi_c + i pi_c / w_c and its conjugate; phi = (alpha + conj alpha) / 2
    VolterraSystem vs;
    const Vec2d w = p.omegas();
    vs.Omega.resize(4);
    vs.Omega << -w(0), -w(1), w(0), w(1);
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
            for (int src : {d, 2 + d}) {
                vs.memory.push_back({c, src, -I / (2.0 * w(c)), c, d, 0.0});
                vs.memory.push_back({2 + c, src, I / (2.0 * w(c)), c, d, 0.0});
            }
    return vs;
}

namespace {

using GL = boost::math::quadrature::gauss<double, 8>;

// Gauss-Legendre nodes and weights on [a, b], split into n pieces
void gl_nodes(double a, double b, int n, std::vector<double>& x, std::vector<double>& wt)
{
    x.clear();
    wt.clear();
    const auto& ab = GL::abscissa();
    const auto& ww = GL::weights();
    const double h = (b - a) / n;
    for (int k = 0; k < n; ++k) {
        const double m = a + (k + 0.5) * h, r = 0.5 * h;
        for (std::size_t i = 0; i < ab.size(); ++i) {
            for (int sgn : {-1, 1}) {
                if (ab[i] == 0.0 && sgn < 0)
                    continue;
                x.push_back(m + sgn * r * ab[i]);
                wt.push_back(r * ww[i]);
            }
        }
    }
}

Mat2d sigma_t(const SpectralModel& model, double t)
{
    Mat2d s = Mat2d::Zero();
    for (const auto& ch : model.channels) {
        const Mat2d c = channel_coupling(ch);
        if (!c.isZero(0.0))
            s += c * channel_sigma_t(ch, t);
    }
    return s;
}

Mat2d noise_t(const SpectralModel& model, double beta, double t)
{
    Mat2d s = Mat2d::Zero();
    for (const auto& ch : model.channels) {
        const Mat2d c = channel_coupling(ch);
        if (!c.isZero(0.0))
            s += c * channel_noise_t(ch, beta, t);
    }
    return s;
}

// int_0^1 (1-u) e^{izu} du and int_0^1 u e^{izu} du
std::pair<cplx, cplx> phi01(double z)
{
    if (std::abs(z) < 1e-3) {
        const cplx iz = I * z;
        return {0.5 + iz / 6.0 + iz * iz / 24.0, 0.5 + iz / 3.0 + iz * iz / 8.0};
    }
    const cplx iz = I * z, e = std::exp(iz);
    const cplx p1 = e / iz - (e - 1.0) / (iz * iz);
    return {(e - 1.0) / iz - p1, p1};
}

struct Pair {
    int row, src;
    double delta;
    cplx p0, p1;
    VecXc Wf;    // full weights j = 0..M
    VecXc WL;    // left half-hat weights j = 0..M (WL(0) unused)
};

struct Engine {
    const VolterraSystem& vs;
    const SpectralModel& model;
    ModeParams p;
    double h;
    int M = 0;
    int nsub = 1;
    std::vector<Pair> pairs;
    double trunc_err = 0.0;

    Engine(const VolterraSystem& v, const SpectralModel& m, const ModeParams& pp, double dt, double cut)
        : vs(v), model(m), p(pp), h(dt)
    {
        double scale = p.omegas().maxCoeff();
        for (const auto& ch : model.channels)
            scale = std::max(scale, ch.lambda);
        nsub = std::max(1, int(std::ceil(h * scale / 0.5)));
        window(cut);
        weights();
    }

    void window(double cut)
    {
        if (vs.memory.empty())
            return;
        double lmin = std::numeric_limits<double>::infinity();
        for (const auto& ch : model.channels)
            lmin = std::min(lmin, ch.lambda);
        const double tscan = 80.0 / lmin;
        const double step = std::min(h, 0.05 / lmin);
        double peak = 0.0, last = 0.0;
        for (double t = step; t <= tscan; t += step) {
            const double v = sigma_t(model, t).cwiseAbs().maxCoeff();
            peak = std::max(peak, v);
            if (v > cut * peak)
                last = t;
        }
        if (peak == 0.0) {
            M = 0;
            return;
        }
        M = std::max(2, int(std::ceil(last / h)) + 1);
        trunc_err = cut * peak * 10.0 / lmin;
    }

    void weights()
    {
        if (M == 0)
            return;
        std::map<std::pair<int, int>, std::vector<const VolterraSystem::Memory*>> groups;
        for (const auto& m : vs.memory)
            groups[{m.row, m.src}].push_back(&m);
        for (const auto& [key, terms] : groups) {
            Pair pr;
            pr.row = key.first;
            pr.src = key.second;
            pr.delta = vs.Omega(pr.src) - vs.Omega(pr.row);
            std::tie(pr.p0, pr.p1) = phi01(pr.delta * h);
            pr.Wf = VecXc::Zero(M + 1);
            pr.WL = VecXc::Zero(M + 1);
            pairs.push_back(pr);
        }
        std::vector<double> x, wt;
        for (int j = 0; j < M; ++j) {
            gl_nodes(j * h, (j + 1) * h, nsub, x, wt);
            for (std::size_t q = 0; q < x.size(); ++q) {
                const double tau = x[q];
                const Mat2d S = sigma_t(model, tau);
                const double u = (tau - j * h) / h;
                std::size_t ip = 0;
                for (const auto& [key, terms] : groups) {
                    Pair& pr = pairs[ip++];
                    cplx g = 0.0;
                    for (const auto* m : terms)
                        g += m->coeff * S(m->a, m->b) * std::exp(I * m->nu * tau);
                    g *= std::exp(-I * vs.Omega(pr.src) * tau) * wt[q];
                    pr.Wf(j) += (1.0 - u) * g;
                    pr.Wf(j + 1) += u * g;
                    pr.WL(j + 1) += u * g;
                }
            }
        }
        // the right half of the last hat lies beyond the window
        for (auto& pr : pairs)
            pr.Wf(M) = pr.WL(M);
    }
};

// cumulative noise integrals for one row: P = int n, Q = int n e^{-i Omega u}, U = int u n
struct DriveState {
    cplx P = 0.0, Q = 0.0, U = 0.0;
};

cplx drive_J(const DriveState& d, double Om, double t)
{
    if (Om == 0.0)
        return t * d.P - d.U;
    return (std::exp(-I * Om * t) * d.P - d.Q) / (-I * Om);
}

OracleTrajectory run(const VolterraSystem& vs, const SpectralModel& model, const ModeParams& p, const VecXc& y0,
                     double h, double cut, bool noise, int record_every, double t_max)
{
    const int n = int(vs.Omega.size());
    Engine eng(vs, model, p, h, cut);
    const int M = eng.M;
    const long steps = long(std::ceil(t_max / h - 1e-9));
    const int L = M + 1;

    OracleTrajectory out;
    out.dt = h;
    out.window = M;
    out.trunc_err = eng.trunc_err;

    // history: column per component, newest first, stored twice for contiguous windows
    Eigen::MatrixXcd hist = Eigen::MatrixXcd::Zero(2 * L, n);
    int pos = 0;
    auto push = [&](const VecXc& y) {
        pos = (pos + L - 1) % L;
        hist.row(pos) = y.transpose();
        hist.row(pos + L) = y.transpose();
    };

    // distinct phase rates
    std::vector<double> deltas;
    std::vector<int> pair_delta(eng.pairs.size());
    for (std::size_t k = 0; k < eng.pairs.size(); ++k) {
        auto it = std::find(deltas.begin(), deltas.end(), eng.pairs[k].delta);
        if (it == deltas.end()) {
            deltas.push_back(eng.pairs[k].delta);
            it = deltas.end() - 1;
        }
        pair_delta[k] = int(it - deltas.begin());
    }
    std::vector<cplx> phase(deltas.size());

    // noise drive bookkeeping
    std::vector<DriveState> dstate(n);
    std::vector<char> has_drive(n, 0);
    for (const auto& d : vs.drive)
        has_drive[d.row] = 1;
    bool drive_active = noise && !vs.drive.empty();
    double nmax = 0.0;
    double lmin = std::numeric_limits<double>::infinity();
    for (const auto& ch : model.channels)
        lmin = std::min(lmin, ch.lambda);
    const double drive_cap = p.zero_temperature() ? 400.0 / lmin : 400.0 / lmin + 40.0 * p.beta;
    std::vector<double> x, wt;

    VecXc y = y0, yprev = y0;
    VecXc Cn = VecXc::Zero(eng.pairs.size());
    double norm0 = 1.0 + y0.norm();

    auto record = [&](long step) {
        const double t = step * h;
        VecXc d(n);
        for (int r = 0; r < n; ++r)
            d(r) = std::exp(I * vs.Omega(r) * t) * y(r);
        out.t.push_back(t);
        out.state.push_back(d);
    };
    record(0);
    push(y);

    for (long s = 0; s < steps; ++s) {
        const double tn = s * h, tn1 = (s + 1) * h;
        // noise increments over [tn, tn1]
        VecXc dJ = VecXc::Zero(n);
        if (drive_active) {
            std::vector<DriveState> next = dstate;
            gl_nodes(tn, tn1, eng.nsub, x, wt);
            double local = 0.0;
            for (std::size_t q = 0; q < x.size(); ++q) {
                const double u = x[q];
                const Mat2d Nm = noise_t(model, p.beta, u);
                local = std::max(local, Nm.cwiseAbs().maxCoeff());
                for (const auto& d : vs.drive) {
                    const cplx v = d.coeff * Nm(d.a, d.b) * std::exp(I * d.nu * u) * wt[q];
                    next[d.row].P += v;
                    next[d.row].Q += v * std::exp(-I * vs.Omega(d.row) * u);
                    next[d.row].U += v * u;
                }
            }
            nmax = std::max(nmax, local);
            for (int r = 0; r < n; ++r)
                if (has_drive[r])
                    dJ(r) = drive_J(next[r], vs.Omega(r), tn1) - drive_J(dstate[r], vs.Omega(r), tn);
            dstate = next;
            if ((tn1 > 20.0 / lmin && local < 1e-15 * nmax) || tn1 > drive_cap) {
                drive_active = false;
                out.trunc_err = std::max(out.trunc_err, local * tn1);
            }
        } else {
            for (int r = 0; r < n; ++r)
                if (has_drive[r])
                    dJ(r) = drive_J(dstate[r], vs.Omega(r), tn1) - drive_J(dstate[r], vs.Omega(r), tn);
        }

        for (std::size_t k = 0; k < deltas.size(); ++k)
            phase[k] = std::exp(I * deltas[k] * tn);

        // history part of C(n+1): j >= 1 uses y(n), y(n-1), ...
        const long m1 = s + 1;
        VecXc Ch(eng.pairs.size());
        for (std::size_t k = 0; k < eng.pairs.size(); ++k) {
            const Pair& pr = eng.pairs[k];
            if (M == 0) {
                Ch(k) = 0.0;
                continue;
            }
            if (m1 > M) {
                Ch(k) = pr.Wf.segment(1, M).transpose() * hist.col(pr.src).segment(pos, M);
            } else {
                cplx acc = 0.0;
                for (long j = 1; j < m1; ++j)
                    acc += pr.Wf(j) * hist(pos + j - 1, pr.src);
                acc += pr.WL(m1) * hist(pos + m1 - 1, pr.src);
                Ch(k) = acc;
            }
        }

        auto advance = [&](const VecXc& ystar, VecXc& Cnext) {
            VecXc yn = y + dJ;
            for (std::size_t k = 0; k < eng.pairs.size(); ++k) {
                const Pair& pr = eng.pairs[k];
                Cnext(k) = Ch(k) + (M > 0 ? pr.Wf(0) * ystar(pr.src) : cplx(0.0));
                yn(pr.row) += h * phase[pair_delta[k]] * (pr.p0 * Cn(k) + pr.p1 * Cnext(k));
            }
            return yn;
        };
        VecXc Cnext(eng.pairs.size());
        const VecXc ypred = s == 0 ? y : VecXc(2.0 * y - yprev);
        VecXc ynew = advance(ypred, Cnext);
        ynew = advance(ynew, Cnext);

        yprev = y;
        y = ynew;
        Cn = Cnext;
        push(y);
        if ((s + 1) % record_every == 0 || s + 1 == steps)
            record(s + 1);
        if ((s & 1023) == 0 && !(y.norm() <= std::exp(10.0) * (norm0 + 1.0)))
            throw NumericError("oracle instability: state norm grew beyond e^10 at t = " + std::to_string(tn1));
    }
    out.rich_err.assign(out.t.size(), 0.0);
    return out;
}

} // namespace

OracleTrajectory integrate(const VolterraSystem& vs, const SpectralModel& model, const ModeParams& p,
                           const VecXc& y0, const OracleConfig& cfg, double t_max)
{
    check_config(cfg);
    check_params(p);
    if (!(t_max > 0.0))
        throw PreconditionError("t_max must be positive");
    const double h = cfg.dt > 0.0 ? cfg.dt : default_dt(model, p);
    const long steps = long(std::ceil(t_max / h - 1e-9));
    const int every = cfg.record_every > 0 ? cfg.record_every : int(std::max<long>(1, steps / 4000));
    OracleTrajectory coarse = run(vs, model, p, y0, h, cfg.memory_cut, cfg.noise, every, t_max);
    if (!cfg.richardson)
        return coarse;
    OracleTrajectory fine = run(vs, model, p, y0, 0.5 * h, cfg.memory_cut, cfg.noise, 2 * every, t_max);
    const std::size_t nrec = std::min(fine.t.size(), coarse.t.size());
    fine.t.resize(nrec);
    fine.state.resize(nrec);
    fine.rich_err.assign(nrec, 0.0);
    for (std::size_t i = 0; i < nrec; ++i)
        fine.rich_err[i] = (fine.state[i] - coarse.state[i]).cwiseAbs().maxCoeff() / 3.0;
    return fine;
}

OracleTrajectory integrate_amplitudes(const SpectralModel& model, const ModeParams& p, const Vec2d& phi0,
                                      const Vec2d& pi0, const OracleConfig& cfg, double t_max)
{
    const Vec2d w = p.omegas();
    VecXc y0(4);
    for (int c = 0; c < 2; ++c) {
        y0(c) = phi0(c) + I * pi0(c) / w(c);
        y0(2 + c) = std::conj(y0(c));
    }
    OracleTrajectory tr = integrate(amplitude_volterra(p), model, p, y0, cfg, t_max);
    for (auto& s : tr.state) {
        VecXc o(4);
        for (int c = 0; c < 2; ++c) {
            o(c) = 0.5 * (s(c) + s(2 + c));
            o(2 + c) = w(c) * (s(c) - s(2 + c)) / (2.0 * I);
        }
        s = o;
    }
    return tr;
}

OracleTrajectory integrate_correlators(const SpectralModel& model, const ModeParams& p, const Vec16c& D0,
                                       const OracleConfig& cfg, double t_max)
{
    const BlockSystem sys = correlator_blocks(model, p);
    return integrate(correlator_volterra(sys), model, p, VecXc(D0), cfg, t_max);
}

OracleTrajectory integrate_correlators_rwa(const SpectralModel& model, const ModeParams& p, const Vec16c& D0,
                                           const OracleConfig& cfg, double t_max)
{
    const BlockSystem sys = correlator_blocks(model, p);
    VolterraSystem vs = correlator_volterra(sys);
    std::erase_if(vs.memory, [](const VolterraSystem::Memory& m) { return m.row < 8 && m.src >= 8; });
    return integrate(vs, model, p, VecXc(D0), cfg, t_max);
}

Trajectory to_trajectory(const OracleTrajectory& tr, Regime regime, const OracleTrajectory* vac)
{
    if (vac && vac->t.size() != tr.t.size())
        throw PreconditionError("vacuum run must share the time grid");
    Trajectory out;
    out.regime = regime;
    out.provenance = "oracle";
    out.t = tr.t;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        if (tr.state[i].size() != 16)
            throw PreconditionError("to_trajectory needs a correlator run");
        out.D.push_back(tr.state[i]);
        out.A_vac.push_back(vac ? Vec4c(vac->state[i].head<4>()) : Vec4c(1.0, 0.0, 0.0, 1.0));
        out.phi.push_back(Vec2d::Zero());
        out.pi.push_back(Vec2d::Zero());
    }
    return out;
}

SingleSpeciesTrajectory single_species_reference(const SpectralModel& model, const ModeParams& p, int c, double A0,
                                                 double A0_minus, cplx B0, const std::vector<double>& tgrid)
{
    check_params(p);
    for (const auto& ch : model.channels)
        if (channel_coupling(ch)(1 - c, 1 - c) != 0.0)
            throw PreconditionError("single-species reference needs the other field decoupled");
    const double w = p.omega(c);
    const KernelMatrix km = boundary_kernels(model, p, w, true);
    const double sR = km.sigma_R(c, c), sI = km.sigma_I(c, c), nI = km.noise_I(c, c);
    const cplx sp(sR, sI), sm = std::conj(sp);
    const double coth = p.zero_temperature() ? 1.0 : 2.0 * bose_occupation(p.beta, w) + 1.0;
    const double n = 0.5 * (coth - 1.0);
    SingleSpeciesTrajectory out;
    out.Gamma = 2.0 * sI;
    out.Omega = w + sR;
    out.t = tgrid;
    const double G = out.Gamma, Om = out.Omega;
    const double N0 = 0.5 * (A0 - 1.0);
    for (double t : tgrid) {
        const double e = std::exp(-G * t);
        const cplx rot = std::exp(-2.0 * I * Om * t);
        const double reB = ((sp - sm * rot) * B0).real();
        out.A.push_back((A0 + reB / w) * e + ((1.0 - sR / w) * coth + 2.0 * nI / w) * (1.0 - e));
        out.A_vac.push_back(1.0 + (-sR + 2.0 * nI) / w * (1.0 - e));
        out.Ntilde.push_back((1.0 - sR / w * e - 2.0 * nI / w * (1.0 - e)) * n * (1.0 - e) +
                             (N0 * (1.0 + (sR - 2.0 * nI) / w * (1.0 - e)) + reB / (2.0 * w)) * e);
        out.B.push_back((B0 * rot + (A0 + A0_minus) / (2.0 * w) * (rot * sm - sp)) * e -
                        2.0 * nI / w * (1.0 + rot * e) +
                        coth / w * (I * e * (1.0 - rot) * sI - (1.0 - e) * sR));
    }
    return out;
}

} // namespace mixqnm
