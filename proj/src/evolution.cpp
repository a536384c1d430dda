#include "mixqnm/evolution.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

namespace mixqnm {

InitialState InitialState::vacuum()
{
    InitialState s;
    for (int blk : {A_k, A_mk}) {
        s.D(flat(blk, 0, 0)) = 1.0;
        s.D(flat(blk, 1, 1)) = 1.0;
    }
    return s;
}

void check_initial(const InitialState& init)
{
    const double tol = 1e-12;
    for (int blk : {A_k, A_mk}) {
        const Vec4c a = init.D.segment<4>(4 * blk);
        if (std::abs(a(1) - std::conj(a(2))) > tol)
            throw PreconditionError("initial " + block_name(blk) + ": A12 != conj(A21)");
        if (std::abs(a(0).imag()) > tol || std::abs(a(3).imag()) > tol)
            throw PreconditionError("initial " + block_name(blk) + ": complex population");
        if (a(0).real() < 1.0 - tol || a(3).real() < 1.0 - tol)
            throw PreconditionError("initial " + block_name(blk) + ": population below vacuum");
    }
    if ((init.D.segment<4>(12) - init.D.segment<4>(8).conjugate()).norm() > tol)
        throw PreconditionError("initial B_k* != conj(B_k)");
}

Vec16c ModeSum::operator()(double t) const
{
    Vec16c d = constant;
    for (const auto& [p, v] : terms)
        d += std::exp(p * t) * v;
    return d;
}

namespace {

// residue used in the time-domain solution: the A- and B-part Green's functions
// are diagonal at leading order outside the nearly-degenerate regime
Mat4c evolution_residue(const CorrMode& m, Regime r)
{
    if (r == Regime::nearly_degenerate)
        return m.residue;
    Mat4c e = Mat4c::Zero();
    e(2 * m.c + m.d, 2 * m.c + m.d) = 1.0;
    return e;
}

// v / s for a fixed-point term; an undamped mode is allowed only without drive
Vec4c over(const Vec4c& v, cplx s)
{
    if (s != 0.0)
        return v / s;
    if (v.isZero(0.0))
        return Vec4c::Zero();
    throw NumericError("undamped mode with nonzero drive: limit does not exist");
}

cplx bare_pole(const BlockSystem& sys, const CorrMode& m) { return I * sys.Omega(flat(m.block, m.c, m.d)); }

void add_term(ModeSum& ms, int blk, cplx p, const Vec4c& v)
{
    Vec16c full = Vec16c::Zero();
    full.segment<4>(4 * blk) = v;
    ms.terms.emplace_back(p, full);
}

// sum of Sigma_I over both index orders at w_bar, over 2 w_bar; vacuum part of the noise drive
Vec4c vacuum_drive(const BlockSystem& sys)
{
    const double wb = sys.params.omega_bar();
    const Mat2d si = boundary_kernels(sys.kernels->model(), sys.params, wb).sigma_I;
    Vec4c v;
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
            v(2 * c + d) = (si(c, d) + si(d, c)) / (2.0 * wb);
    return v;
}

} // namespace

Solution correlator_solution(const CorrelatorSpectrum& spec, const BlockSystem& sys, const InitialState& init,
                             const EvolveOptions& opt)
{
    Solution sol;
    const Regime r = spec.regime;
    const bool near = r == Regime::nearly_degenerate;
    const ModeParams& p = sys.params;

    Vec16c N0;
    Vec4c vac_drive = Vec4c::Zero();
    if (near) {
        vac_drive = vacuum_drive(sys);
        const double coth = p.zero_temperature() ? 1.0 : 2.0 * bose_occupation(p.beta, p.omega_bar()) + 1.0;
        N0.setZero();
        for (int blk : {A_k, A_mk})
            N0.segment<4>(4 * blk) = coth * vac_drive;
    } else {
        N0 = N_vector(sys, 0.0);
    }

    const Vec4c unit(1.0, 0.0, 0.0, 1.0);
    sol.A_vac.constant.setZero();
    for (int blk : {A_k, A_mk}) {
        const Vec4c a0 = init.D.segment<4>(4 * blk);
        const Vec4c n0 = N0.segment<4>(4 * blk);
        for (const auto& m : spec.blocks[blk]) {
            const Mat4c R = evolution_residue(m, r);
            const Vec4c fixed = over(R * n0, -m.pole);
            sol.D.constant.segment<4>(4 * blk) += fixed;
            add_term(sol.D, blk, m.pole, R * a0 - fixed);
            if (near && blk == A_k) {
                const Vec4c vfix = over(R * vac_drive, -m.pole);
                sol.A_vac.constant.segment<4>(0) += vfix;
                add_term(sol.A_vac, 0, m.pole, R * unit - vfix);
            }
        }
    }
    if (!near)
        sol.A_vac.constant.segment<4>(0) = unit;
    for (int blk : {B_k, B_ks})
        for (const auto& m : spec.blocks[blk])
            add_term(sol.D, blk, m.pole, evolution_residue(m, r) * init.D.segment<4>(4 * blk));

    if (opt.keep == KeepOrder::g2_partial) {
        sol.warnings.push_back("incomplete O(g^2): cross-block and B-part noise terms only");
        const Mat16c K0 = K_matrix(sys, 0.0);
        const Vec16c Nx = N_vector(sys, 0.0);
        for (int a : {A_k, A_mk})
            for (int b : {B_k, B_ks})
                for (const auto& ma : spec.blocks[a])
                    for (const auto& mb : spec.blocks[b]) {
                        const Mat4c Ra = evolution_residue(ma, r), Rb = evolution_residue(mb, r);
                        const cplx la = bare_pole(sys, ma), lb = bare_pole(sys, mb);
                        const Mat16c Ka = K_matrix(sys, la), Kb = K_matrix(sys, lb);
                        const Vec16c Na = N_vector(sys, la);
                        const Vec4c A0 = init.D.segment<4>(4 * a), B0 = init.D.segment<4>(4 * b);
                        // A-part fed by B: -G_A K_AB G_B (B(0) + N_B/s)
                        add_term(sol.D, a, ma.pole, -Ra * block_of(Ka, a, b) * Rb * B0 / (la - lb));
                        add_term(sol.D, a, mb.pole, Ra * block_of(Kb, a, b) * Rb * B0 / (la - lb));
                        const Vec4c nb0 = Nx.segment<4>(4 * b);
                        const Vec4c nba = Na.segment<4>(4 * b);
                        sol.D.constant.segment<4>(4 * a) -= over(Ra * block_of(K0, a, b) * Rb * nb0, ma.pole * lb);
                        add_term(sol.D, a, ma.pole, -over(Ra * block_of(Ka, a, b) * Rb * nba, ma.pole * (la - lb)));
                        // B-part fed by A: -G_B K_BA G_A (A(0) + N_A/s)
                        add_term(sol.D, b, mb.pole, -Rb * block_of(Kb, b, a) * Ra * A0 / (lb - la));
                        add_term(sol.D, b, ma.pole, Rb * block_of(Ka, b, a) * Ra * A0 / (lb - la));
                        const Vec4c na0 = Nx.segment<4>(4 * a);
                        const Vec4c naa = Na.segment<4>(4 * a);
                        sol.D.constant.segment<4>(4 * b) -= over(Rb * block_of(K0, b, a) * Ra * na0, lb * ma.pole);
                        add_term(sol.D, b, ma.pole, -over(Rb * block_of(Ka, b, a) * Ra * naa, ma.pole * (la - lb)));
                    }
        // B-part own noise: G_B N_B/s with bare fast poles
        for (int b : {B_k, B_ks})
            for (const auto& mb : spec.blocks[b]) {
                const Mat4c Rb = evolution_residue(mb, r);
                const cplx lb = bare_pole(sys, mb);
                sol.D.constant.segment<4>(4 * b) += Rb * Nx.segment<4>(4 * b) / (-lb);
                add_term(sol.D, b, mb.pole, Rb * N_vector(sys, lb).segment<4>(4 * b) / lb);
            }
    }

    double gmax = 0.0;
    for (int blk = 0; blk < 4; ++blk)
        for (const auto& m : spec.blocks[blk])
            gmax = std::max(gmax, -m.pole.real());
    if (!p.zero_temperature() && p.beta * gmax > 0.1)
        sol.warnings.push_back("beta*Gamma = " + std::to_string(p.beta * gmax) +
                               " > 0.1: noise kernel truncation outside its validity");
    return sol;
}

Trajectory evolve_correlators(const CorrelatorSpectrum& spec, const AmplitudeSpectrum& amp, const BlockSystem& sys,
                              const InitialState& init, const std::vector<double>& tgrid, const EvolveOptions& opt)
{
    if (spec.regime != amp.regime)
        throw PreconditionError("regime mismatch");
    check_initial(init);
    const Solution sol = correlator_solution(spec, sys, init, opt);
    Trajectory tr;
    tr.regime = spec.regime;
    tr.warnings = sol.warnings;
    tr.t = tgrid;
    const AmplitudeTrajectory at = evolve_amplitudes(amp, init.phi0, init.pi0, tgrid);
    tr.phi = at.phi;
    tr.pi = at.pi;
    tr.D.reserve(tgrid.size());
    tr.A_vac.reserve(tgrid.size());
    for (double t : tgrid) {
        tr.D.push_back(sol.D(t));
        tr.A_vac.push_back(sol.A_vac(t).segment<4>(0));
    }
    return tr;
}

Observables observables(const Trajectory& traj)
{
    Observables ob;
    const bool near = traj.regime == Regime::nearly_degenerate;
    bool guard = false;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        const Vec4c a = traj.A(i);
        const Vec4c vac = traj.A_vac[i];
        const Vec4c exc = a - vac;
        Vec4d S;
        if (near) {
            S(0) = 0.5 * (exc(0) + exc(3)).real();
            S(1) = 0.5 * (exc(0) - exc(3)).real();
            S(2) = 0.5 * (exc(1) + exc(2)).real();
            S(3) = ((exc(1) - exc(2)) / (2.0 * I)).real();
        } else {
            S(0) = 0.5 * (a(0) + a(3)).real() - 1.0;
            S(1) = 0.5 * (a(0) - a(3)).real();
            S(2) = 0.5 * (a(1) + a(2)).real();
            S(3) = ((a(1) - a(2)) / (2.0 * I)).real();
        }
        ob.S.push_back(S);
        ob.N_raw.emplace_back(0.5 * (a(0).real() - 1.0), 0.5 * (a(3).real() - 1.0));
        Vec2d nt;
        for (int c = 0; c < 2; ++c) {
            const double v = vac(3 * c).real();
            if (v < 0.5)
                guard = true;
            nt(c) = exc(3 * c).real() / (2.0 * v);
        }
        ob.Ntilde.push_back(nt);
    }
    if (guard)
        ob.diagnostics.push_back("vacuum collapse: A_vac below 0.5, parameters outside validity");
    return ob;
}

FinalValue final_value(const BlockSystem& sys, const CorrelatorSpectrum* spec)
{
    if (spec) {
        for (const auto& blk : spec->blocks)
            for (const auto& m : blk)
                if (m.pole.real() >= 0.0)
                    throw NumericError("limit does not exist: pole " + m.label + " has Re s >= 0");
    }
    const Mat16c G = G_inverse(sys, 0.0);
    Eigen::JacobiSVD<Mat16c> svd(G);
    const auto& sv = svd.singularValues();
    FinalValue fv;
    fv.condition = sv(15) > 0.0 ? sv(0) / sv(15) : std::numeric_limits<double>::infinity();
    if (!(fv.condition <= 1e12))
        throw NumericError("singular final-value system, condition number " + std::to_string(fv.condition));
    fv.D_inf = G.fullPivLu().solve(N_vector(sys, 0.0));
    return fv;
}

double default_t_max(const CorrelatorSpectrum& spec)
{
    double gmin = std::numeric_limits<double>::infinity();
    for (int blk : {A_k, A_mk})
        for (const auto& m : spec.blocks[blk])
            gmin = std::min(gmin, -m.pole.real());
    if (!(gmin > 0.0))
        return 1e6;
    return std::min(6.0 / gmin, 1e6);
}

std::vector<double> uniform_grid(double t_max, int n_points)
{
    if (n_points < 2 || !(t_max > 0.0))
        throw PreconditionError("grid needs t_max > 0 and at least two points");
    std::vector<double> g(n_points);
    for (int i = 0; i < n_points; ++i)
        g[i] = t_max * i / (n_points - 1);
    return g;
}

} // namespace mixqnm
