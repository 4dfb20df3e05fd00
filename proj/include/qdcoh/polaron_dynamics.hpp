// polaron_dynamics.hpp: Polaron-frame master equation for the driven two-level emitter:
// generator assembly, steady state, exact propagation and the optical g1(tau).
//
// Basis {|0>, |X>}; sigma = |0><X|. Density matrices are vectorised column-major,
// vec(A rho B) = (B^T kron A) vec(rho).

#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qdcoh/error.hpp"
#include "qdcoh/phonon.hpp"
#include "qdcoh/scenario.hpp"

namespace qdcoh::dynamics {

using cplx = std::complex<double>;
using DensityMatrix = Eigen::Matrix2cd;
using Superoperator = Eigen::Matrix4cd;
using VecOp = Eigen::Vector4cd;

namespace ops {

inline Eigen::Matrix2cd sigma() {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 1) = 1.0;
    return m;
}
inline Eigen::Matrix2cd sigma_dag() { return sigma().adjoint(); }
inline Eigen::Matrix2cd sigma_x() { return sigma() + sigma_dag(); }
inline Eigen::Matrix2cd sigma_y() { return cplx(0.0, 1.0) * (sigma() - sigma_dag()); }
inline Eigen::Matrix2cd sigma_z() {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = -1.0;
    m(1, 1) = 1.0;
    return m;
}
inline Eigen::Matrix2cd excited() { return sigma_dag() * sigma(); }

inline VecOp vec(const Eigen::Matrix2cd& m) {
    return Eigen::Map<const VecOp>(m.data());
}
inline Eigen::Matrix2cd unvec(const VecOp& v) {
    return Eigen::Map<const Eigen::Matrix2cd>(v.data());
}

inline Superoperator kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Superoperator out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

// rho -> A rho B
inline Superoperator sandwich(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    return kron(b.transpose(), a);
}

inline Superoperator commutator(const Eigen::Matrix2cd& h) {
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    return sandwich(h, id) - sandwich(id, h);
}

// L_O[rho] = 2 O rho O^dag - {O^dag O, rho}
inline Superoperator lindblad(const Eigen::Matrix2cd& o) {
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    const Eigen::Matrix2cd odo = o.adjoint() * o;
    return 2.0 * sandwich(o, o.adjoint()) - sandwich(odo, id) - sandwich(id, odo);
}

// rho -> [A, B rho] plus the linear extension of its Hermitian conjugate,
// rho -> rho B^dag A^dag - A^dag rho B^dag.
inline Superoperator commutator_with_hc(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    const Superoperator direct = sandwich(a * b, id) - sandwich(b, a);
    const Superoperator conj = sandwich(id, b.adjoint() * a.adjoint()) - sandwich(a.adjoint(), b.adjoint());
    return direct + conj;
}

inline cplx trace_of(const VecOp& v) { return v(0) + v(3); }

} // namespace ops

struct GeneratorOptions {
    bool polaron_dissipator{true};
    // Prefactor of the polaron dissipator: (Omega/2)^2 with the bare Rabi frequency
    // (default) or (Omega_R/2)^2 with the renormalised one.
    bool bare_rabi_prefactor{true};
};

struct Generator {
    Superoperator drive = Superoperator::Zero();
    Superoperator polaron = Superoperator::Zero();
    Superoperator radiative = Superoperator::Zero();
    Superoperator dephasing = Superoperator::Zero();
    double gamma{0.0};               // ps^-1, radiative rate
    double lindblad_dephasing{0.0};  // ps^-1, coefficient gamma in (gamma/2) L_{sigma^dag sigma}
    double rabi{0.0};                // ps^-1, Omega_R

    Superoperator total() const { return drive + polaron + radiative + dephasing; }
};

// Assembles -i[(Omega_R/2) sigma_x - Delta sigma^dag sigma, .] + K + (Gamma/2) L_sigma
// + (gamma/2) L_{sigma^dag sigma}. `b` is the Franck-Condon factor B (renormalises the drive).
inline Generator build_generator(const EmitterCavityScenario& scenario, double b,
                                 const phonon::PolaronRates& rates, double lindblad_dephasing,
                                 GeneratorOptions opts = {}) {
    if (!(lindblad_dephasing >= 0.0) || !std::isfinite(lindblad_dephasing))
        throw ValidationError("build_generator: pure-dephasing rate must be >= 0");
    if (!(b > 0.0 && b <= 1.0)) throw ValidationError("build_generator: B must lie in (0,1]");
    const auto derived = derive_emitter_cavity_rates(scenario);
    for (double r : {rates.gamma0_x, rates.gammac_y, rates.gammas_y})
        if (!std::isfinite(r)) throw ValidationError("build_generator: non-finite polaron rate");

    Generator g;
    g.gamma = derived.gamma;
    g.lindblad_dephasing = lindblad_dephasing;
    g.rabi = scenario.rabi;

    const Eigen::Matrix2cd h = 0.5 * scenario.rabi * ops::sigma_x() -
                               scenario.laser_detuning * ops::excited();
    g.drive = cplx(0.0, -1.0) * ops::commutator(h);
    g.radiative = 0.5 * derived.gamma * ops::lindblad(ops::sigma());
    g.dephasing = 0.5 * lindblad_dephasing * ops::lindblad(ops::excited());

    if (opts.polaron_dissipator) {
        const double omega = opts.bare_rabi_prefactor ? scenario.rabi / b : scenario.rabi;
        const double pref = -(0.5 * omega) * (0.5 * omega);
        const Eigen::Matrix2cd sy_part = rates.gammas_y * ops::sigma_z() + rates.gammac_y * ops::sigma_y();
        g.polaron = pref * (rates.gamma0_x * ops::commutator_with_hc(ops::sigma_x(), ops::sigma_x()) +
                            ops::commutator_with_hc(ops::sigma_y(), sy_part));
    }
    return g;
}

// exp(L tau) by eigendecomposition; near-defective generators fall back to Pade
// scaling-and-squaring per call.
class Propagator {
public:
    explicit Propagator(const Superoperator& l) : l_(l) {
        Eigen::ComplexEigenSolver<Superoperator> es(l_);
        if (es.info() != Eigen::Success) {
            diagonal_ = false;
            return;
        }
        v_ = es.eigenvectors();
        lambda_ = es.eigenvalues();
        Eigen::JacobiSVD<Superoperator> svd(v_);
        const auto sv = svd.singularValues();
        diagonal_ = sv(3) > 0.0 && sv(0) / sv(3) < 1e8;
        if (diagonal_) vinv_ = v_.inverse();
    }

    bool diagonalizable() const noexcept { return diagonal_; }
    const Eigen::Vector4cd& eigenvalues() const noexcept { return lambda_; }
    const Superoperator& eigenvectors() const noexcept { return v_; }
    const Superoperator& inverse_eigenvectors() const noexcept { return vinv_; }

    VecOp apply(const VecOp& x, double tau) const {
        if (tau < 0.0) throw ValidationError("evolve: tau must be >= 0");
        VecOp out;
        if (diagonal_) {
            const VecOp c = vinv_ * x;
            VecOp scaled;
            for (int k = 0; k < 4; ++k) scaled(k) = std::exp(lambda_(k) * tau) * c(k);
            out = v_ * scaled;
        } else {
            const Superoperator m = l_ * tau;
            out = m.exp() * x;
        }
        if (!out.allFinite()) {
            std::ostringstream os;
            os << "evolve: non-finite state at tau = " << tau << " ps";
            throw NumericalError(os.str());
        }
        return out;
    }

private:
    Superoperator l_;
    Superoperator v_ = Superoperator::Identity();
    Superoperator vinv_ = Superoperator::Identity();
    Eigen::Vector4cd lambda_ = Eigen::Vector4cd::Zero();
    bool diagonal_{false};
};

inline DensityMatrix steady_state(const Generator& gen) {
    const Superoperator l = gen.total();
    Superoperator a = l;
    // Replace the first equation by the trace constraint.
    a.row(0) << 1.0, 0.0, 0.0, 1.0;
    VecOp rhs = VecOp::Zero();
    rhs(0) = 1.0;
    Eigen::FullPivLU<Superoperator> lu(a);
    lu.setThreshold(1e-12);
    if (lu.rank() < 4)
        throw NumericalError("steady_state: null space of the generator is not one-dimensional");
    const VecOp x = lu.solve(rhs);
    const double residual = (l * x).norm();
    if (!(residual < 1e-12) || !x.allFinite()) {
        std::ostringstream os;
        os << "steady_state: residual " << residual << " exceeds 1e-12";
        throw NumericalError(os.str());
    }
    DensityMatrix rho = ops::unvec(x);
    return 0.5 * (rho + rho.adjoint().eval());
}

inline DensityMatrix evolve(const Generator& gen, const DensityMatrix& rho0, double tau) {
    const Propagator p(gen.total());
    return ops::unvec(p.apply(ops::vec(rho0), tau));
}

struct ExponentialMode {
    cplx rate;    // ps^-1, eigenvalue of the generator
    cplx weight;  // contribution to the raw g1 at tau = 0
};

struct CorrelationTrace {
    std::vector<double> tau;       // ps
    std::vector<cplx> g1_opt;      // raw B^2 <sigma^dag(tau) sigma(0)>
    std::vector<cplx> g1_inc;      // raw g1_opt - g1_coh
    cplx g1_coh{0.0, 0.0};         // raw coherent (tau -> infinity) value
    double b{1.0};
    std::vector<ExponentialMode> modes;  // g1_opt(tau) = sum_k weight_k exp(rate_k tau), if diagonalizable

    double norm() const { return g1_opt.empty() ? 0.0 : g1_opt.front().real(); }
    std::vector<cplx> normalized_opt() const {
        std::vector<cplx> out(g1_opt);
        const double n = norm();
        for (auto& v : out) v = n > 0.0 ? v / n : cplx{};
        return out;
    }
};

// Optical first-order correlation via the quantum regression theorem.
class OpticalCorrelation {
public:
    OpticalCorrelation(const Generator& gen, double b)
        : b_(b), prop_(gen.total()), rho_ss_(steady_state(gen)) {
        x0_ = ops::vec(ops::sigma() * rho_ss_);
        const cplx mean = (ops::sigma() * rho_ss_).trace();
        coh_ = b_ * b_ * std::norm(mean);
        if (prop_.diagonalizable()) {
            const VecOp c = prop_.inverse_eigenvectors() * x0_;
            const Eigen::Matrix2cd sd = ops::sigma_dag();
            for (int k = 0; k < 4; ++k) {
                const Eigen::Matrix2cd mode = ops::unvec(prop_.eigenvectors().col(k));
                modes_.push_back({prop_.eigenvalues()(k), b_ * b_ * (sd * mode).trace() * c(k)});
            }
        }
    }

    cplx operator()(double tau) const {
        const VecOp x = prop_.apply(x0_, tau);
        return b_ * b_ * (ops::sigma_dag() * ops::unvec(x)).trace();
    }

    const DensityMatrix& steady() const noexcept { return rho_ss_; }
    cplx coherent() const noexcept { return coh_; }
    double b() const noexcept { return b_; }
    const std::vector<ExponentialMode>& modes() const noexcept { return modes_; }

private:
    double b_;
    Propagator prop_;
    DensityMatrix rho_ss_;
    VecOp x0_;
    cplx coh_;
    std::vector<ExponentialMode> modes_;
};

inline CorrelationTrace g1_optical(const Generator& gen, std::span<const double> tau_grid, double b) {
    const OpticalCorrelation corr(gen, b);
    CorrelationTrace t;
    t.b = b;
    t.tau.assign(tau_grid.begin(), tau_grid.end());
    t.g1_coh = corr.coherent();
    t.modes = corr.modes();
    t.g1_opt.reserve(tau_grid.size());
    t.g1_inc.reserve(tau_grid.size());
    for (double tau : tau_grid) {
        t.g1_opt.push_back(corr(tau));
        t.g1_inc.push_back(t.g1_opt.back() - t.g1_coh);
    }
    return t;
}

struct G1Decomposition {
    cplx g1_coh;                 // raw
    std::vector<cplx> g1_inc;    // raw
    double coherent_fraction;    // g1_coh / g1_opt(0)
};

// Requires the trace to reach |g1_inc(tau_end)| < 1e-6 g1(0).
inline G1Decomposition decompose_g1(const CorrelationTrace& trace) {
    require(!trace.g1_opt.empty(), "decompose_g1: empty trace");
    const double g0 = trace.norm();
    if (g0 <= 0.0) return {trace.g1_coh, trace.g1_inc, 0.0};
    const double tail = std::abs(trace.g1_opt.back() - trace.g1_coh);
    if (tail > 1e-6 * g0) {
        // Estimate the horizon from the slowest nonzero mode.
        double slowest = 0.0;
        for (const auto& m : trace.modes)
            if (std::abs(m.rate) > 1e-14 && std::abs(m.weight) > 0.0)
                slowest = slowest == 0.0 ? -m.rate.real() : std::min(slowest, -m.rate.real());
        std::ostringstream os;
        os << "decompose_g1: |g1_inc(" << trace.tau.back() << " ps)| = " << tail / g0
           << " of g1(0) exceeds 1e-6";
        if (slowest > 0.0) os << "; extend tau to at least " << std::log(1e6) / slowest << " ps";
        throw ValidationError(os.str());
    }
    return {trace.g1_coh, trace.g1_inc, trace.g1_coh.real() / g0};
}

} // namespace qdcoh::dynamics
