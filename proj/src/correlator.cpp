#include "mixqnm/correlator.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace mixqnm {

std::string block_name(int blk)
{
    static const char* names[] = {"A_k", "A_-k", "B_k", "B_k*"};
    return names[blk];
}

const KernelMatrix& KernelSampler::at(double omega) const
{
    {
        std::lock_guard lock(mu_);
        auto it = cache_.find(omega);
        if (it != cache_.end())
            return it->second;
    }
    // Sigma(-i w) = conj Sigma(i w), likewise for N
    KernelMatrix km = boundary_kernels(model_, p_, std::abs(omega), true);
    if (omega < 0.0) {
        km.sigma_I = -km.sigma_I;
        km.noise_I = -km.noise_I;
        km.omega = omega;
    }
    std::lock_guard lock(mu_);
    return cache_.emplace(omega, km).first->second;
}

namespace {

void add_sigma(BlockSystem& sys, int blk, int c, int d, cplx coeff, int a, int b, int sigma, int x, bool left,
               int src)
{
    SigmaTerm t;
    t.row = flat(blk, c, d);
    t.src = src;
    t.coeff = coeff;
    t.a = a;
    t.b = b;
    t.sigma = sigma;
    t.x = x;
    t.left = left;
    sys.sigma_terms.push_back(t);
}

void add_noise(BlockSystem& sys, int blk, int c, int d, double coeff, int a, int b, int sigma, int x)
{
    sys.noise_terms.push_back({flat(blk, c, d), cplx(coeff), a, b, sigma, x});
}

double imag_axis(cplx s)
{
    if (s.real() != 0.0)
        throw PreconditionError("kernels are only sampled on the imaginary axis");
    return s.imag();
}

} // namespace

BlockSystem correlator_blocks(const SpectralModel& model, const ModeParams& p)
{
    check_params(p);
    BlockSystem sys;
    sys.params = p;
    sys.kernels = std::make_shared<KernelSampler>(model, p);
    const Vec2d w = p.omegas();
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
            sys.Omega(flat(A_k, c, d)) = w(c) - w(d);
            sys.Omega(flat(A_mk, c, d)) = w(c) - w(d);
            sys.Omega(flat(B_k, c, d)) = -(w(c) + w(d));
            sys.Omega(flat(B_ks, c, d)) = w(c) + w(d);
            for (int b = 0; b < 2; ++b) {
                add_sigma(sys, A_k, c, d, I, c, b, -1, d, true, flat(B_k, d, b));
                add_sigma(sys, A_k, c, d, I, c, b, -1, d, true, flat(A_k, b, d));
                add_sigma(sys, A_k, c, d, -I, d, b, 1, c, false, flat(A_k, c, b));
                add_sigma(sys, A_k, c, d, -I, d, b, 1, c, false, flat(B_ks, c, b));

                add_sigma(sys, A_mk, c, d, I, c, b, -1, d, true, flat(B_k, b, d));
                add_sigma(sys, A_mk, c, d, I, c, b, -1, d, true, flat(A_mk, b, d));
                add_sigma(sys, A_mk, c, d, -I, d, b, 1, c, false, flat(A_mk, c, b));
                add_sigma(sys, A_mk, c, d, -I, d, b, 1, c, false, flat(B_ks, b, c));

                add_sigma(sys, B_k, c, d, -I, c, b, -1, d, true, flat(B_k, b, d));
                add_sigma(sys, B_k, c, d, -I, c, b, -1, d, true, flat(A_mk, b, d));
                add_sigma(sys, B_k, c, d, -I, d, b, -1, c, false, flat(B_k, c, b));
                add_sigma(sys, B_k, c, d, -I, d, b, -1, c, false, flat(A_k, b, c));

                add_sigma(sys, B_ks, c, d, I, c, b, 1, d, true, flat(B_ks, b, d));
                add_sigma(sys, B_ks, c, d, I, c, b, 1, d, true, flat(A_mk, d, b));
                add_sigma(sys, B_ks, c, d, I, d, b, 1, c, false, flat(B_ks, c, b));
                add_sigma(sys, B_ks, c, d, I, d, b, 1, c, false, flat(A_k, c, b));
            }
            for (int blk : {A_k, A_mk}) {
                add_noise(sys, blk, c, d, 2.0, c, d, -1, d);
                add_noise(sys, blk, c, d, 2.0, d, c, 1, c);
            }
            add_noise(sys, B_k, c, d, -2.0, d, c, -1, c);
            add_noise(sys, B_k, c, d, -2.0, c, d, -1, d);
            add_noise(sys, B_ks, c, d, -2.0, d, c, 1, c);
            add_noise(sys, B_ks, c, d, -2.0, c, d, 1, d);
        }
    return sys;
}

namespace {

// kernel value (sigma or noise) at s - i sigma w_x
cplx kernel_at(const BlockSystem& sys, double nu, int sigma, int x, int a, int b, KernelArg arg, bool noise)
{
    const ModeParams& p = sys.params;
    double f = nu - sigma * p.omega(x);
    if (arg == KernelArg::snapped) {
        const double wb = p.omega_bar();
        // untilded value at +-w_bar over 2 w_bar
        const double fs = f >= 0.0 ? wb : -wb;
        const KernelMatrix& km = sys.kernels->at(fs);
        const double back = 1.0 / tilde_scale(p)(a, b);
        const cplx v = noise ? km.noise()(a, b) : km.sigma()(a, b);
        return v * back / (2.0 * wb);
    }
    const KernelMatrix& km = sys.kernels->at(f);
    return noise ? km.noise()(a, b) : km.sigma()(a, b);
}

bool in_block(int row, int src) { return row / 4 == src / 4; }

} // namespace

Mat16c K_matrix(const BlockSystem& sys, cplx s, KernelArg arg, TermMask mask)
{
    const double nu = imag_axis(s);
    Mat16c K = Mat16c::Zero();
    for (const auto& t : sys.sigma_terms) {
        if ((t.left && !mask.left) || (!t.left && !mask.right))
            continue;
        const bool same = in_block(t.row, t.src);
        if ((same && !mask.same_block) || (!same && !mask.cross_block))
            continue;
        K(t.row, t.src) -= t.coeff * kernel_at(sys, nu, t.sigma, t.x, t.a, t.b, arg, false);
    }
    return K;
}

Vec16c N_vector(const BlockSystem& sys, cplx s, KernelArg arg)
{
    const double nu = imag_axis(s);
    Vec16c N = Vec16c::Zero();
    for (const auto& t : sys.noise_terms)
        N(t.row) += t.coeff * kernel_at(sys, nu, t.sigma, t.x, t.a, t.b, arg, true);
    return N;
}

Mat16c G_inverse(const BlockSystem& sys, cplx s, KernelArg arg)
{
    Mat16c G = -I * sys.Omega.cast<cplx>().asDiagonal().toDenseMatrix();
    G.diagonal().array() += s;
    return G + K_matrix(sys, s, arg);
}

Mat4c block_of(const Mat16c& m, int row_blk, int col_blk) { return m.block<4, 4>(4 * row_blk, 4 * col_blk); }

namespace {

std::string mode_label(int blk, int c, int d)
{
    const std::string l = std::to_string(c + 1), r = std::to_string(d + 1);
    switch (blk) {
    case A_k:
    case A_mk: return "{a" + l + "dag,a" + r + "}";
    case B_k: return "{a" + l + ",a" + r + "}";
    default: return "{a" + l + "dag,a" + r + "dag}";
    }
}

// generator restricted to one block with kernels sampled at s0
Mat4c block_generator(const BlockSystem& sys, int blk, cplx s0, KernelArg arg, TermMask mask)
{
    mask.cross_block = false;
    Mat4c M = block_of(-K_matrix(sys, s0, arg, mask), blk, blk);
    return M;
}

void non_degenerate_block(const BlockSystem& sys, int blk, CorrelatorSpectrum& out)
{
    Vec4c lam;
    for (int i = 0; i < 4; ++i)
        lam(i) = I * sys.Omega(4 * blk + i);
    for (int i = 0; i < 4; ++i) {
        const Mat4c V = block_generator(sys, blk, lam(i), KernelArg::exact, {});
        CorrMode& m = out.blocks[blk][i];
        m.block = blk;
        m.c = i / 2;
        m.d = i % 2;
        m.label = mode_label(blk, m.c, m.d);
        m.pole = lam(i) + V(i, i);
        m.residue.setZero();
        m.residue(i, i) = 1.0;
        for (int k = 0; k < 4; ++k) {
            if (k == i)
                continue;
            const cplx gap = lam(i) - lam(k);
            if (std::abs(gap) < 1e-12 * (1.0 + std::abs(lam(i)))) {
                if (std::abs(V(k, i)) + std::abs(V(i, k)) > 0.0)
                    out.diagnostics.push_back("degenerate bare pair coupled in " + block_name(blk));
                continue;
            }
            m.residue(k, i) += V(k, i) / gap;
            m.residue(i, k) += V(i, k) / gap;
        }
    }
}

// two distinct eigenvalues of a 4x4 generator of the form L (x) 1 or 1 (x) R
std::array<cplx, 2> two_eigenvalues(const Mat4c& M)
{
    Eigen::ComplexEigenSolver<Mat4c> es(M, false);
    Vec4c ev = es.eigenvalues();
    std::array<int, 4> idx{0, 1, 2, 3};
    // pair each eigenvalue with its nearest partner
    int partner = 1;
    double best = std::abs(ev(0) - ev(1));
    for (int j = 2; j < 4; ++j)
        if (std::abs(ev(0) - ev(j)) < best)
            best = std::abs(ev(0) - ev(j)), partner = j;
    std::vector<int> rest;
    for (int j = 1; j < 4; ++j)
        if (j != partner)
            rest.push_back(j);
    (void)idx;
    return {0.5 * (ev(0) + ev(partner)), 0.5 * (ev(rest[0]) + ev(rest[1]))};
}

void nearly_degenerate_block(const BlockSystem& sys, int blk, const OnePointSpectrum& op, CorrelatorSpectrum& out)
{
    // bare pole of the block used only to pick the kernel sign
    const cplx s0 = I * sys.Omega(4 * blk);
    const Vec2d w = sys.params.omegas();
    Vec4c Wl, Wr;
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
            const int i = 2 * c + d;
            switch (blk) {
            case A_k:
            case A_mk: Wl(i) = I * w(c), Wr(i) = -I * w(d); break;
            case B_k: Wl(i) = -I * w(c), Wr(i) = -I * w(d); break;
            default: Wl(i) = I * w(c), Wr(i) = I * w(d); break;
            }
        }
    const Mat4c Ml = Mat4c(Wl.asDiagonal()) + block_generator(sys, blk, s0, KernelArg::snapped, {true, false, true, false});
    const Mat4c Mr = Mat4c(Wr.asDiagonal()) + block_generator(sys, blk, s0, KernelArg::snapped, {false, true, true, false});

    // label the eigenvalues by the one-point poles they reproduce
    const bool ldag = blk != B_k, rdag = blk == B_ks;
    auto onept = [&](int c, bool dag) { return dag ? op.modes_adag[c].pole : op.modes_a[c].pole; };
    auto order = [&](std::array<cplx, 2> mu, bool dag) {
        if (std::abs(mu[0] - onept(0, dag)) + std::abs(mu[1] - onept(1, dag)) >
            std::abs(mu[1] - onept(0, dag)) + std::abs(mu[0] - onept(1, dag)))
            std::swap(mu[0], mu[1]);
        return mu;
    };
    const auto mu = order(two_eigenvalues(Ml), ldag);
    const auto nu = order(two_eigenvalues(Mr), rdag);
    const Mat4c Id = Mat4c::Identity();
    std::array<Mat4c, 2> Pl, Pr;
    Pl[0] = (Ml - mu[1] * Id) / (mu[0] - mu[1]);
    Pl[1] = (Ml - mu[0] * Id) / (mu[1] - mu[0]);
    Pr[0] = (Mr - nu[1] * Id) / (nu[0] - nu[1]);
    Pr[1] = (Mr - nu[0] * Id) / (nu[1] - nu[0]);
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
            CorrMode& m = out.blocks[blk][2 * c + d];
            m.block = blk;
            m.c = c;
            m.d = d;
            m.label = mode_label(blk, c, d);
            m.pole = mu[c] + nu[d];
            m.residue = Pl[c] * Pr[d];
        }
}

void hierarchy_block(int blk, const OnePointSpectrum& op, CorrelatorSpectrum& out)
{
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
            CorrMode& m = out.blocks[blk][2 * c + d];
            m.block = blk;
            m.c = c;
            m.d = d;
            m.label = mode_label(blk, c, d);
            m.pole = kronecker_pole(op, blk, c, d);
            m.residue.setZero();
            m.residue(2 * c + d, 2 * c + d) = 1.0;
        }
}

// Residue of the A-part Green's function at the fast B-type poles after eliminating B.
double cross_block_size(const BlockSystem& sys, const CorrelatorSpectrum& spec)
{
    double worst = 0.0;
    for (int bblk : {B_k, B_ks})
        for (const auto& m : spec.blocks[bblk]) {
            const cplx s0 = I * sys.Omega(4 * bblk + 2 * m.c + m.d);
            const Mat16c K = K_matrix(sys, s0);
            for (int ablk : {A_k, A_mk}) {
                Mat4c MA = block_of(-K, ablk, ablk);
                MA.diagonal() += I * sys.Omega.segment<4>(4 * ablk).cast<cplx>();
                const Mat4c R = (m.pole * Mat4c::Identity() - MA).inverse();
                const Mat4c r = R * block_of(K, ablk, bblk) * m.residue * block_of(K, bblk, ablk) * R;
                worst = std::max(worst, r.norm());
            }
        }
    return worst;
}

} // namespace

CorrelatorSpectrum correlator_spectrum(const BlockSystem& sys, const OnePointSpectrum& onept, Regime regime)
{
    CorrelatorSpectrum spec;
    spec.regime = regime;
    for (int blk = 0; blk < 4; ++blk) {
        if (regime == Regime::non_degenerate)
            non_degenerate_block(sys, blk, spec);
        else if (regime == Regime::nearly_degenerate)
            nearly_degenerate_block(sys, blk, onept, spec);
        else
            hierarchy_block(blk, onept, spec);
    }
    spec.cross_block = cross_block_size(sys, spec);
    return spec;
}

namespace {

const QnmMode& left_mode(const OnePointSpectrum& op, int blk, int c)
{
    return blk == B_k ? op.modes_a[c] : op.modes_adag[c];
}

const QnmMode& right_mode(const OnePointSpectrum& op, int blk, int d)
{
    return blk == B_ks ? op.modes_adag[d] : op.modes_a[d];
}

} // namespace

cplx kronecker_pole(const OnePointSpectrum& op, int blk, int c, int d)
{
    return left_mode(op, blk, c).pole + right_mode(op, blk, d).pole;
}

Mat4c kronecker_residue(const OnePointSpectrum& op, int blk, int c, int d)
{
    return Eigen::kroneckerProduct(left_mode(op, blk, c).residue, right_mode(op, blk, d).residue).eval();
}

KroneckerReport kronecker_check(const CorrelatorSpectrum& spec, const OnePointSpectrum& onept)
{
    KroneckerReport rep;
    for (int blk = 0; blk < 4; ++blk)
        for (const auto& m : spec.blocks[blk]) {
            const double scale = 1.0 + std::abs(m.pole);
            rep.pole_deviation = std::max(rep.pole_deviation, std::abs(m.pole - kronecker_pole(onept, blk, m.c, m.d)) / scale);
            Mat4c expect = kronecker_residue(onept, blk, m.c, m.d);
            Mat4c diff = m.residue - expect;
            if (spec.regime != Regime::nearly_degenerate) {
                // first order resolves the O(1) entry and the entries one index flip away from it
                const int i = 2 * m.c + m.d;
                auto near = [i](int k) { return k == i || k == (i ^ 1) || k == (i ^ 2); };
                for (int r = 0; r < 4; ++r)
                    for (int q = 0; q < 4; ++q)
                        if (!((r == i && near(q)) || (q == i && near(r))))
                            diff(r, q) = 0.0;
            }
            rep.residue_deviation = std::max(rep.residue_deviation, diff.norm() / std::max(1.0, m.residue.norm()));
        }
    rep.pass = rep.pole_deviation <= 1e-10 && rep.residue_deviation <= 1e-10;
    return rep;
}

} // namespace mixqnm
