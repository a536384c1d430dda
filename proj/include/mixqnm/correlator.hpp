#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "mixqnm/onepoint.hpp"

namespace mixqnm {

// D = (A_k[11,12,21,22], A_-k[...], B_k[...], B_k^*[...])
enum Block { A_k = 0, A_mk = 1, B_k = 2, B_ks = 3 };
inline int flat(int blk, int c, int d) { return 4 * blk + 2 * c + d; }
std::string block_name(int blk);

// coeff * int_0^t Sigma~_ab(tau) e^{i sigma w_x tau} D_src(t - tau) dtau in d D_row/dt.
// left = the term acts on the first index of the row correlator.
struct SigmaTerm {
    int row = 0, src = 0;
    cplx coeff{};
    int a = 0, b = 0;
    int sigma = 0, x = 0;
    bool left = true;
};

// coeff * int_0^t N~_ab(t') e^{i sigma w_x t'} dt' in d D_row/dt.
struct NoiseTerm {
    int row = 0;
    cplx coeff{};
    int a = 0, b = 0;
    int sigma = 0, x = 0;
};

// Memoized boundary kernels at real frequencies.
class KernelSampler {
public:
    KernelSampler(SpectralModel model, ModeParams p) : model_(std::move(model)), p_(p) {}
    const KernelMatrix& at(double omega) const;
    const SpectralModel& model() const { return model_; }
    const ModeParams& params() const { return p_; }

private:
    SpectralModel model_;
    ModeParams p_;
    // map nodes are stable, so references survive later inserts
    mutable std::map<double, KernelMatrix> cache_;
    mutable std::mutex mu_;
};

struct BlockSystem {
    ModeParams params;
    Vec16<double> Omega = Vec16<double>::Zero();
    std::vector<SigmaTerm> sigma_terms;
    std::vector<NoiseTerm> noise_terms;
    std::shared_ptr<KernelSampler> kernels;
};

BlockSystem correlator_blocks(const SpectralModel& model, const ModeParams& p);

// How the kernel argument s - i sigma w_x is evaluated.
enum class KernelArg {
    exact,   // boundary value at the true frequency, tilde normalization
    snapped  // +-i w_bar with 1/(2 w_bar) normalization (nearly-degenerate truncation)
};

struct TermMask {
    bool left = true, right = true;
    bool same_block = true, cross_block = true;
};

// s must lie on the imaginary axis.
Mat16c K_matrix(const BlockSystem& sys, cplx s, KernelArg arg = KernelArg::exact, TermMask mask = {});
Vec16c N_vector(const BlockSystem& sys, cplx s, KernelArg arg = KernelArg::exact);
Mat16c G_inverse(const BlockSystem& sys, cplx s, KernelArg arg = KernelArg::exact);
Mat4c block_of(const Mat16c& m, int row_blk, int col_blk);

struct CorrMode {
    int block = 0, c = 0, d = 0;
    cplx pole{};
    Mat4c residue = Mat4c::Zero();
    std::string label;
};

struct CorrelatorSpectrum {
    std::array<std::array<CorrMode, 4>, 4> blocks{};
    Regime regime = Regime::non_degenerate;
    // largest fast-pole residue of the eliminated A-part Green's function
    double cross_block = 0.0;
    std::vector<std::string> diagnostics;

    const CorrMode& mode(int blk, int c, int d) const { return blocks[blk][2 * c + d]; }
};

CorrelatorSpectrum correlator_spectrum(const BlockSystem& sys, const OnePointSpectrum& onept, Regime regime);

// Expected pole and residue of mode (c,d) of a block from the one-point QNMs.
cplx kronecker_pole(const OnePointSpectrum& op, int blk, int c, int d);
Mat4c kronecker_residue(const OnePointSpectrum& op, int blk, int c, int d);

struct KroneckerReport {
    double pole_deviation = 0.0;
    double residue_deviation = 0.0; // relative to the residue norm
    bool pass = false;
};

KroneckerReport kronecker_check(const CorrelatorSpectrum& spec, const OnePointSpectrum& onept);

} // namespace mixqnm
