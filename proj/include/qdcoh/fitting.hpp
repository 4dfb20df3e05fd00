// fitting.hpp: Nonlinear least squares and the parameter-extraction procedures built on it.
//
// The engine minimises chi^2 = sum ((y - f(x; p)) / sigma)^2 in a transformed space where
// bounds disappear: p = lo + e^q for a lower bound, hi - e^q for an upper bound and a
// logistic map for both. A Nelder-Mead simplex finds the basin and Levenberg-Marquardt with
// a central-difference Jacobian polishes it. Only chi^2-decreasing steps are accepted.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qdcoh/coherence.hpp"
#include "qdcoh/error.hpp"
#include "qdcoh/phonon.hpp"
#include "qdcoh/scenario.hpp"
#include "qdcoh/units.hpp"

namespace qdcoh::fit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Parameter {
    std::string name;
    std::string unit;
    double initial{0.0};
    double lower{-kInf};
    double upper{kInf};
};

struct FitOptions {
    int simplex_iterations{4000};
    int max_iterations{200};          // Levenberg-Marquardt steps
    double gradient_tolerance{1e-7};  // max cosine between residual and Jacobian columns
    bool multistart{false};           // five deterministic starts, best chi^2 kept
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<std::string> units;
    std::vector<double> values;
    std::vector<double> std_errors;
    double rss{0.0};  // weighted residual sum of squares
    std::size_t points{0};
    int iterations{0};
    bool converged{false};
    double gradient_norm{0.0};
    std::vector<double> history;  // chi^2 after each accepted step
    std::vector<std::string> warnings;

    std::size_t index(const std::string& name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw ValidationError("FitResult: no parameter named " + name);
        return static_cast<std::size_t>(it - names.begin());
    }
    double value(const std::string& name) const { return values[index(name)]; }
    double error(const std::string& name) const { return std_errors[index(name)]; }
    double reduced_chi2() const {
        return points > values.size() ? rss / static_cast<double>(points - values.size()) : 0.0;
    }
};

// Predictions at every data abscissa for a parameter vector.
using VectorModel = std::function<std::vector<double>(std::span<const double> params)>;
using ScalarModel = std::function<double(double x, std::span<const double> params)>;

namespace detail {

class Transform {
public:
    explicit Transform(std::span<const Parameter> ps) : ps_(ps.begin(), ps.end()) {}

    double to_param(std::size_t j, double q) const {
        const auto& p = ps_[j];
        const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
        if (lo && hi) return p.lower + (p.upper - p.lower) / (1.0 + std::exp(-q));
        if (lo) return p.lower + std::exp(q);
        if (hi) return p.upper - std::exp(q);
        return q;
    }
    double to_internal(std::size_t j, double x) const {
        const auto& p = ps_[j];
        const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
        if (lo && hi) {
            const double u = (x - p.lower) / (p.upper - p.lower);
            return std::log(u / (1.0 - u));
        }
        if (lo) return std::log(x - p.lower);
        if (hi) return std::log(p.upper - x);
        return x;
    }
    // dp/dq
    double slope(std::size_t j, double q) const {
        const auto& p = ps_[j];
        const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
        if (lo && hi) {
            const double s = 1.0 / (1.0 + std::exp(-q));
            return (p.upper - p.lower) * s * (1.0 - s);
        }
        if (lo) return std::exp(q);
        if (hi) return -std::exp(q);
        return 1.0;
    }
    std::vector<double> params(const Eigen::VectorXd& q) const {
        std::vector<double> out(static_cast<std::size_t>(q.size()));
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = to_param(j, q(static_cast<Eigen::Index>(j)));
        return out;
    }

private:
    std::vector<Parameter> ps_;
};

class Objective {
public:
    Objective(const VectorModel& model, std::span<const double> y, std::span<const double> sigma,
              const Transform& t)
        : model_(model), y_(y.begin(), y.end()), t_(t) {
        w_.assign(y.size(), 1.0);
        for (std::size_t i = 0; i < sigma.size(); ++i) w_[i] = 1.0 / sigma[i];
        for (std::size_t i = 0; i < y.size(); ++i) scale_ += y[i] * y[i] * w_[i] * w_[i];
        scale_ = std::sqrt(scale_);
    }

    // Weighted data norm; residuals below ~1e-13 of it are rounding noise.
    double scale() const noexcept { return scale_; }

    Eigen::VectorXd residuals(const Eigen::VectorXd& q) const {
        const auto p = t_.params(q);
        const auto f = model_(p);
        if (f.size() != y_.size()) throw NumericalError("least_squares_fit: model returned wrong length");
        Eigen::VectorXd r(static_cast<Eigen::Index>(y_.size()));
        for (std::size_t i = 0; i < y_.size(); ++i) {
            const double v = (y_[i] - f[i]) * w_[i];
            r(static_cast<Eigen::Index>(i)) = std::isfinite(v) ? v : 1e150;
        }
        return r;
    }
    double chi2(const Eigen::VectorXd& q) const { return residuals(q).squaredNorm(); }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& q) const {
        const auto k = q.size();
        Eigen::MatrixXd j(static_cast<Eigen::Index>(y_.size()), k);
        for (Eigen::Index c = 0; c < k; ++c) {
            const double h = 1e-6 * std::max(1.0, std::abs(q(c)));
            Eigen::VectorXd qp = q, qm = q;
            qp(c) += h;
            qm(c) -= h;
            j.col(c) = (residuals(qp) - residuals(qm)) / (2.0 * h);
        }
        return j;
    }

    std::size_t size() const noexcept { return y_.size(); }

private:
    const VectorModel& model_;
    std::vector<double> y_;
    std::vector<double> w_;
    double scale_{0.0};
    const Transform& t_;
};

// Largest cosine between the residual vector and a Jacobian column; zero at a stationary point
// and for residuals at the rounding floor of the data.
inline double gradient_cosine(const Eigen::MatrixXd& j, const Eigen::VectorXd& r, double data_scale = 0.0) {
    const double rn = r.norm();
    if (rn <= 1e-13 * data_scale || rn == 0.0) return 0.0;
    const Eigen::VectorXd g = j.transpose() * r;
    double worst = 0.0;
    for (Eigen::Index c = 0; c < j.cols(); ++c) {
        const double cn = j.col(c).norm();
        if (cn > 0.0) worst = std::max(worst, std::abs(g(c)) / (cn * rn));
    }
    return worst;
}

struct Trial {
    Eigen::VectorXd q;
    double chi2{kInf};
    int iterations{0};
    bool converged{false};
    double gradient{kInf};
    std::vector<double> history;
};

inline Eigen::VectorXd nelder_mead(const Objective& obj, Eigen::VectorXd start, int max_iter, Trial& log) {
    const auto k = start.size();
    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(k + 1), start);
    std::vector<double> f(static_cast<std::size_t>(k + 1));
    for (Eigen::Index c = 0; c < k; ++c) x[static_cast<std::size_t>(c + 1)](c) += 0.1 * std::abs(start(c)) + 0.1;
    for (std::size_t i = 0; i < x.size(); ++i) f[i] = obj.chi2(x[i]);
    std::vector<std::size_t> order(x.size());
    auto sort = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
    };
    sort();
    double best = f[order.front()];
    log.history.push_back(best);
    for (int it = 0; it < max_iter; ++it) {
        const std::size_t hi = order.back(), lo = order.front(), nh = order[order.size() - 2];
        double diam = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) diam = std::max(diam, (x[i] - x[lo]).cwiseAbs().maxCoeff());
        if (diam < 1e-10 || f[hi] - f[lo] <= 1e-15 * f[lo]) break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
        for (std::size_t i = 0; i < x.size(); ++i)
            if (i != hi) centroid += x[i];
        centroid /= static_cast<double>(k);
        const Eigen::VectorXd xr = centroid + (centroid - x[hi]);
        const double fr = obj.chi2(xr);
        if (fr < f[lo]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - x[hi]);
            const double fe = obj.chi2(xe);
            if (fe < fr) x[hi] = xe, f[hi] = fe;
            else x[hi] = xr, f[hi] = fr;
        } else if (fr < f[nh]) {
            x[hi] = xr, f[hi] = fr;
        } else {
            const bool outside = fr < f[hi];
            const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                               : Eigen::VectorXd(centroid + 0.5 * (x[hi] - centroid));
            const double fc = obj.chi2(xc);
            if (fc < (outside ? fr : f[hi])) {
                x[hi] = xc, f[hi] = fc;
            } else {
                for (std::size_t i = 0; i < x.size(); ++i) {
                    if (i == lo) continue;
                    x[i] = x[lo] + 0.5 * (x[i] - x[lo]);
                    f[i] = obj.chi2(x[i]);
                }
            }
        }
        sort();
        ++log.iterations;
        if (f[order.front()] < best) {
            best = f[order.front()];
            log.history.push_back(best);
        }
    }
    return x[order.front()];
}

inline Trial run_from(const Objective& obj, const Eigen::VectorXd& start, const FitOptions& opt) {
    Trial t;
    Eigen::VectorXd q = nelder_mead(obj, start, opt.simplex_iterations, t);
    Eigen::VectorXd r = obj.residuals(q);
    double chi2 = r.squaredNorm();
    double lambda = 1e-3;
    Eigen::MatrixXd j = obj.jacobian(q);
    for (int it = 0; it < opt.max_iterations; ++it) {
        t.gradient = gradient_cosine(j, r, obj.scale());
        if (t.gradient <= opt.gradient_tolerance) {
            t.converged = true;
            break;
        }
        const Eigen::MatrixXd a = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * a.diagonal().cwiseMax(1e-300);
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd qn = q + step;
            const Eigen::VectorXd rn = obj.residuals(qn);
            const double cn = rn.squaredNorm();
            if (cn < chi2) {
                const double gain = (chi2 - cn) / std::max(chi2, 1e-300);
                q = qn;
                r = rn;
                chi2 = cn;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                t.history.push_back(chi2);
                if (gain < 1e-15) lambda = 1e16;  // no further progress possible
                break;
            }
            lambda *= 10.0;
        }
        ++t.iterations;
        j = obj.jacobian(q);
        if (!accepted || lambda >= 1e16) {
            t.gradient = gradient_cosine(j, r, obj.scale());
            t.converged = t.gradient <= opt.gradient_tolerance;
            break;
        }
    }
    if (t.history.empty() || t.history.back() != chi2) t.history.push_back(chi2);
    t.q = q;
    t.chi2 = chi2;
    return t;
}

} // namespace detail

inline FitResult least_squares_fit(const VectorModel& model, std::span<const double> y,
                                   std::span<const double> sigma, std::span<const Parameter> params,
                                   const FitOptions& opt = {}) {
    const std::size_t k = params.size();
    if (k == 0) throw ValidationError("least_squares_fit: no parameters");
    if (y.size() < k) {
        std::ostringstream os;
        os << "least_squares_fit: " << y.size() << " data points for " << k << " parameters";
        throw ValidationError(os.str());
    }
    if (!sigma.empty()) {
        require(sigma.size() == y.size(), "least_squares_fit: sigma length differs from data");
        for (double s : sigma) require(s > 0.0 && std::isfinite(s), "least_squares_fit: sigma must be > 0");
    }
    for (double v : y) require(std::isfinite(v), "least_squares_fit: non-finite data value");
    for (const auto& p : params) {
        require(std::isfinite(p.initial), "least_squares_fit: non-finite initial value for " + p.name);
        require(p.initial > p.lower && p.initial < p.upper,
                "least_squares_fit: initial value outside bounds for " + p.name);
    }

    const detail::Transform tr(params);
    const detail::Objective obj(model, y, sigma, tr);
    Eigen::VectorXd q0(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) q0(static_cast<Eigen::Index>(j)) = tr.to_internal(j, params[j].initial);

    std::vector<Eigen::VectorXd> starts{q0};
    if (opt.multistart) {
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k));
        Eigen::VectorXd alt(static_cast<Eigen::Index>(k));
        for (Eigen::Index c = 0; c < alt.size(); ++c) alt(c) = c % 2 ? -1.0 : 1.0;
        for (double s : {0.7, -0.7}) {
            starts.emplace_back(q0 + s * ones);
            starts.emplace_back(q0 + s * alt);
        }
    }
    detail::Trial best;
    int total_iterations = 0;
    for (const auto& s : starts) {
        auto t = detail::run_from(obj, s, opt);
        total_iterations += t.iterations;
        if (t.chi2 < best.chi2) best = std::move(t);
    }

    FitResult out;
    out.points = y.size();
    out.rss = best.chi2;
    out.iterations = total_iterations;
    out.converged = best.converged;
    out.gradient_norm = best.gradient;
    out.history = best.history;
    for (std::size_t j = 0; j < k; ++j) {
        out.names.push_back(params[j].name);
        out.units.push_back(params[j].unit);
        out.values.push_back(tr.to_param(j, best.q(static_cast<Eigen::Index>(j))));
    }
    if (!out.converged) out.warnings.push_back("least_squares_fit: did not reach the gradient tolerance");

    // Covariance from the local quadratic approximation, in the physical parameters.
    Eigen::MatrixXd jp = obj.jacobian(best.q);
    for (std::size_t j = 0; j < k; ++j) {
        const auto c = static_cast<Eigen::Index>(j);
        jp.col(c) /= tr.slope(j, best.q(c));
    }
    const Eigen::MatrixXd a = jp.transpose() * jp;
    // Supplied sigma is taken as absolute; otherwise the residual variance sets the scale.
    const double s2 = !sigma.empty() ? 1.0 : (out.points > k ? out.rss / static_cast<double>(out.points - k) : 0.0);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    out.std_errors.assign(k, kInf);
    if (lu.isInvertible() && a.allFinite()) {
        const Eigen::MatrixXd cov = lu.inverse() * s2;
        for (std::size_t j = 0; j < k; ++j) {
            const double v = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
            out.std_errors[j] = std::sqrt(std::max(0.0, v));
        }
    } else {
        out.warnings.push_back("least_squares_fit: singular normal matrix, parameters not identifiable");
    }
    return out;
}

inline FitResult least_squares_fit(const ScalarModel& model, std::span<const double> x, std::span<const double> y,
                                   std::span<const double> sigma, std::span<const Parameter> params,
                                   const FitOptions& opt = {}) {
    require(x.size() == y.size(), "least_squares_fit: x and y lengths differ");
    const std::vector<double> xs(x.begin(), x.end());
    const VectorModel vm = [&model, xs](std::span<const double> p) {
        std::vector<double> f(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) f[i] = model(xs[i], p);
        return f;
    };
    return least_squares_fit(vm, y, sigma, params, opt);
}

namespace detail {

// Weighted linear least squares y ~ X beta with standard errors scaled by the residual variance.
inline FitResult linear_fit(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> sigma,
                            std::vector<std::string> names, std::vector<std::string> units) {
    const auto n = x.rows(), k = x.cols();
    if (n < k) throw ValidationError("linear fit: fewer data points than parameters");
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    if (!sigma.empty()) {
        require(static_cast<Eigen::Index>(sigma.size()) == n, "linear fit: sigma length differs from data");
        for (Eigen::Index i = 0; i < n; ++i) {
            require(sigma[static_cast<std::size_t>(i)] > 0.0, "linear fit: sigma must be > 0");
            w(i) = 1.0 / sigma[static_cast<std::size_t>(i)];
        }
    }
    const Eigen::MatrixXd xw = w.asDiagonal() * x;
    Eigen::VectorXd yw(n);
    for (Eigen::Index i = 0; i < n; ++i) yw(i) = w(i) * y[static_cast<std::size_t>(i)];
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    if (qr.rank() < k) throw ValidationError("linear fit: design matrix is rank deficient");
    const Eigen::VectorXd beta = qr.solve(yw);
    const Eigen::VectorXd r = yw - xw * beta;

    FitResult out;
    out.names = std::move(names);
    out.units = std::move(units);
    out.points = static_cast<std::size_t>(n);
    out.rss = r.squaredNorm();
    out.iterations = 1;
    out.converged = true;
    out.gradient_norm = gradient_cosine(xw, r, yw.norm());
    out.history = {out.rss};
    const double s2 = !sigma.empty() ? 1.0 : (n > k ? out.rss / static_cast<double>(n - k) : 0.0);
    const Eigen::MatrixXd cov = (xw.transpose() * xw).inverse() * s2;
    for (Eigen::Index j = 0; j < k; ++j) {
        out.values.push_back(beta(j));
        out.std_errors.push_back(std::sqrt(std::max(0.0, cov(j, j))));
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------------------
// Phonon parameters from the short-time visibility

struct PhononFit {
    FitResult fit;
    double alpha{0.0};  // ps^2
    double nu_c{0.0};   // ps^-1
    bool degenerate{false};
};

// v(tau) = (1 - epsilon) |exp(phi(tau) - phi(0))| at fixed temperature; optical decay and
// virtual dephasing are neglected on this time scale.
inline std::vector<double> phonon_visibility_model(std::span<const double> tau, double alpha, double nu_c,
                                                   double kelvin, double epsilon) {
    const phonon::PhononPropagator prop(PhononEnvironment{alpha, nu_c, 0.0, kelvin});
    std::vector<double> v(tau.size());
    if (alpha == 0.0) {
        std::fill(v.begin(), v.end(), 1.0 - epsilon);
        return v;
    }
    const phonon::cplx phi0 = prop(0.0);
    for (std::size_t i = 0; i < tau.size(); ++i) v[i] = (1.0 - epsilon) * std::abs(std::exp(prop(tau[i]) - phi0));
    return v;
}

inline PhononFit fit_phonon_params(std::span<const double> tau, std::span<const double> v, double kelvin,
                                   double epsilon, std::span<const double> sigma = {}) {
    require(tau.size() == v.size(), "fit_phonon_params: column lengths differ");
    require(tau.size() >= 4, "fit_phonon_params: need at least 4 points");
    require(kelvin > 0.0, "fit_phonon_params: temperature must be > 0");
    require(epsilon >= 0.0 && epsilon < 1.0, "fit_phonon_params: epsilon must lie in [0,1)");
    for (double t : tau) require(t >= 0.0 && t <= 10.0 + 1e-9, "fit_phonon_params: data must lie in 0 <= tau <= 10 ps");

    const double top = 1.0 - epsilon;
    // Plateau: points beyond 60% of the covered range; drop: first crossing of the midpoint.
    const double tmax = *std::max_element(tau.begin(), tau.end());
    double plateau = 0.0, p2 = 0.0;
    std::size_t np = 0;
    for (std::size_t i = 0; i < tau.size(); ++i)
        if (tau[i] >= 0.6 * tmax) {
            plateau += v[i];
            p2 += v[i] * v[i];
            ++np;
        }
    plateau /= static_cast<double>(np);
    const double spread = np > 1 ? std::sqrt(std::max(0.0, p2 / static_cast<double>(np) - plateau * plateau)) : 0.0;
    const double depth = top - plateau;

    PhononFit out;
    if (depth <= std::max(3.0 * spread, 1e-3 * top)) {
        out.degenerate = true;
        out.fit.names = {"alpha", "nu_c"};
        out.fit.units = {"ps^2", "ps^-1"};
        out.fit.values = {0.0, std::numeric_limits<double>::quiet_NaN()};
        out.fit.std_errors = {kInf, kInf};
        out.fit.points = tau.size();
        for (double x : v) out.fit.rss += (x - top) * (x - top);
        out.fit.warnings.push_back("fit_phonon_params: no resolvable sideband drop; alpha ~ 0 and nu_c is unidentifiable");
        out.nu_c = out.fit.values[1];
        return out;
    }

    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < tau.size(); ++i) pts.emplace_back(tau[i], v[i]);
    std::sort(pts.begin(), pts.end());
    double t_half = pts.back().first;
    for (const auto& [t, x] : pts)
        if (x <= top - 0.5 * depth) {
            t_half = std::max(t, 0.05);
            break;
        }
    const double nu0 = 1.0 / t_half;
    const double b2 = std::clamp(plateau / top, 1e-6, 1.0 - 1e-9);
    const double alpha0 = -2.0 * std::log(b2) / (nu0 * nu0);

    const std::vector<double> ts(tau.begin(), tau.end());
    const VectorModel model = [ts, kelvin, epsilon](std::span<const double> p) {
        return phonon_visibility_model(ts, p[0], p[1], kelvin, epsilon);
    };
    const std::vector<Parameter> params{{"alpha", "ps^2", alpha0, 0.0}, {"nu_c", "ps^-1", nu0, 0.0}};
    out.fit = least_squares_fit(model, v, sigma, params, {.multistart = true});
    out.alpha = out.fit.values[0];
    out.nu_c = out.fit.values[1];
    return out;
}

// ---------------------------------------------------------------------------------------
// Virtual-dephasing prefactor with a constant offset

struct DephasingFit {
    FitResult fit;
    double mu{0.0};      // ps^2
    double offset{0.0};  // ps^-1
};

// rate(T) = mu * shape(T) + c, linear in (mu, c).
inline DephasingFit fit_dephasing_prefactor(std::span<const double> kelvin, std::span<const double> rate,
                                            const PhononEnvironment& env, std::span<const double> sigma = {}) {
    require(kelvin.size() == rate.size(), "fit_dephasing_prefactor: column lengths differ");
    std::vector<double> distinct(kelvin.begin(), kelvin.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    require(distinct.size() >= 3, "fit_dephasing_prefactor: need at least 3 distinct temperatures");

    const auto n = static_cast<Eigen::Index>(kelvin.size());
    Eigen::MatrixXd x(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = phonon::dephasing_shape(env.at(kelvin[static_cast<std::size_t>(i)]));
        x(i, 1) = 1.0;
    }
    DephasingFit out;
    out.fit = detail::linear_fit(x, rate, sigma, {"mu", "offset"}, {"ps^2", "ps^-1"});
    if (out.fit.values[0] < 0.0) {
        out.fit = detail::linear_fit(x.col(1), rate, sigma, {"offset"}, {"ps^-1"});
        out.fit.names.insert(out.fit.names.begin(), "mu");
        out.fit.units.insert(out.fit.units.begin(), "ps^2");
        out.fit.values.insert(out.fit.values.begin(), 0.0);
        out.fit.std_errors.insert(out.fit.std_errors.begin(), 0.0);
        out.fit.warnings.push_back("fit_dephasing_prefactor: negative best-fit mu clamped to 0");
    }
    out.mu = out.fit.values[0];
    out.offset = out.fit.values[1];
    return out;
}

// ---------------------------------------------------------------------------------------
// Thermal redshift

struct RedshiftFit {
    FitResult fit;
    double s{0.0};     // Huang-Rhys-like factor
    double e_ph{0.0};  // meV
    bool identifiable{true};
};

inline RedshiftFit fit_redshift(std::span<const double> kelvin, std::span<const double> shift,
                                std::span<const double> sigma = {}) {
    require(kelvin.size() == shift.size(), "fit_redshift: column lengths differ");
    require(kelvin.size() >= 3, "fit_redshift: need at least 3 points");
    for (double t : kelvin) require(t >= 0.0, "fit_redshift: temperatures must be >= 0");

    std::size_t imax = 0;
    for (std::size_t i = 1; i < shift.size(); ++i)
        if (std::abs(shift[i]) > std::abs(shift[imax])) imax = i;
    const double dmax = std::abs(shift[imax]);
    require(dmax > 0.0 && kelvin[imax] > 0.0, "fit_redshift: no shift in the data");
    double t_on = kelvin[imax];
    for (std::size_t i = 0; i < shift.size(); ++i)
        if (std::abs(shift[i]) >= 0.1 * dmax && kelvin[i] > 0.0) t_on = std::min(t_on, kelvin[i]);
    const double e0 = 2.0 * units::kB * t_on;
    const double s0 = std::max(1e-6, -shift[imax] / coherence::redshift_model(kelvin[imax], 1.0, e0));

    const std::vector<double> ts(kelvin.begin(), kelvin.end());
    const ScalarModel model = [](double t, std::span<const double> p) {
        return coherence::redshift_model(t, p[0], p[1]);
    };
    const std::vector<Parameter> params{{"S", "", s0, 0.0}, {"E_ph", "meV", e0, 0.0}};
    RedshiftFit out;
    out.fit = least_squares_fit(model, ts, shift, sigma, params, {.multistart = true});
    out.s = out.fit.values[0];
    out.e_ph = out.fit.values[1];
    const double rel = out.fit.std_errors[1] / out.e_ph;
    if (!(rel <= 0.5)) {
        out.identifiable = false;
        out.fit.warnings.push_back("fit_redshift: insufficient curvature, E_ph is not identifiable");
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Quantum-confined Stark shift and bias compensation

struct StarkFit {
    FitResult fit;
    coherence::StarkCoefficients coeffs;
    double bias_min{0.0};  // V
    double bias_max{0.0};  // V
    double tuning_range() const {
        double lo = std::min(coherence::stark_model(bias_min, coeffs), coherence::stark_model(bias_max, coeffs));
        double hi = std::max(coherence::stark_model(bias_min, coeffs), coherence::stark_model(bias_max, coeffs));
        if (coeffs.c2 != 0.0) {
            const double v = -coeffs.c1 / (2.0 * coeffs.c2);
            if (v > bias_min && v < bias_max) {
                lo = std::min(lo, coherence::stark_model(v, coeffs));
                hi = std::max(hi, coherence::stark_model(v, coeffs));
            }
        }
        return hi - lo;
    }
};

inline StarkFit fit_stark_shift(std::span<const double> bias, std::span<const double> energy,
                                std::span<const double> sigma = {}) {
    require(bias.size() == energy.size(), "fit_stark_shift: column lengths differ");
    require(bias.size() >= 3, "fit_stark_shift: need at least 3 bias points");
    const auto n = static_cast<Eigen::Index>(bias.size());
    Eigen::MatrixXd x(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = bias[static_cast<std::size_t>(i)];
        x(i, 0) = 1.0;
        x(i, 1) = v;
        x(i, 2) = v * v;
    }
    StarkFit out;
    out.fit = detail::linear_fit(x, energy, sigma, {"c0", "c1", "c2"}, {"meV", "meV/V", "meV/V^2"});
    out.coeffs = {out.fit.values[0], out.fit.values[1], out.fit.values[2]};
    const auto [lo, hi] = std::minmax_element(bias.begin(), bias.end());
    out.bias_min = *lo;
    out.bias_max = *hi;
    return out;
}

struct CompensationPlan {
    double bias{0.0};   // V
    double shift{0.0};  // meV, model energy change relative to the reference bias
    bool monotonic_branch{true};
    std::string warning;
};

// Bias within the fitted window whose Stark shift relative to `reference_bias` cancels a
// thermal shift `redshift` (meV, negative for a redshift).
inline CompensationPlan plan_compensation(const StarkFit& f, double redshift, double reference_bias) {
    const double target = -redshift;
    const double range = f.tuning_range();
    if (std::abs(target) > range) {
        std::ostringstream os;
        os << "plan_compensation: required shift " << std::abs(target) << " meV exceeds the tuning range "
           << range << " meV";
        throw ValidationError(os.str());
    }
    const auto& c = f.coeffs;
    const double e_ref = coherence::stark_model(reference_bias, c);
    // c2 V^2 + c1 V + (c0 - e_ref - target) = 0
    std::vector<double> roots;
    const double k0 = c.c0 - e_ref - target;
    if (std::abs(c.c2) < 1e-300) {
        if (c.c1 != 0.0) roots.push_back(-k0 / c.c1);
    } else {
        const double disc = c.c1 * c.c1 - 4.0 * c.c2 * k0;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double qv = -0.5 * (c.c1 + std::copysign(sq, c.c1));
            if (qv != 0.0) roots.push_back(k0 / qv);
            roots.push_back(qv / c.c2);
        }
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(f.bias_max - f.bias_min));
    std::vector<double> inside;
    for (double r : roots)
        if (r >= f.bias_min - tol && r <= f.bias_max + tol) inside.push_back(std::clamp(r, f.bias_min, f.bias_max));
    if (inside.empty()) {
        std::ostringstream os;
        os << "plan_compensation: shift " << target << " meV is not reachable from " << reference_bias
           << " V inside the bias window [" << f.bias_min << ", " << f.bias_max << "] V";
        throw ValidationError(os.str());
    }
    const bool has_vertex = std::abs(c.c2) > 0.0;
    const double vertex = has_vertex ? -c.c1 / (2.0 * c.c2) : 0.0;
    auto same_branch = [&](double v) {
        if (!has_vertex) return true;
        return (v - vertex) * (reference_bias - vertex) >= 0.0;
    };
    std::stable_sort(inside.begin(), inside.end(), [&](double a, double b) {
        if (same_branch(a) != same_branch(b)) return same_branch(a);
        return std::abs(a - reference_bias) < std::abs(b - reference_bias);
    });
    CompensationPlan p;
    p.bias = inside.front();
    p.shift = coherence::stark_model(p.bias, c) - e_ref;
    p.monotonic_branch = same_branch(p.bias);
    if (!p.monotonic_branch)
        p.warning = "plan_compensation: solution lies past the vertex of the Stark parabola (non-monotonic branch)";
    return p;
}

// ---------------------------------------------------------------------------------------
// Rabi calibration

struct RabiCalibration {
    FitResult fit;
    double slope{0.0};             // ps^-1 per sqrt(power unit)
    double free_intercept{0.0};    // ps^-1, from the unconstrained line
    double intercept_error{0.0};
    bool poor_fit{false};
    std::string warning;

    double omega_at(double power) const {
        require(power >= 0.0, "calibrate_rabi: power must be >= 0");
        return slope * std::sqrt(power);
    }
    double power_for(double omega_r) const {
        require(omega_r >= 0.0, "calibrate_rabi: Rabi frequency must be >= 0");
        const double r = omega_r / slope;
        return r * r;
    }
};

// Omega_R = slope * sqrt(P), fitted through the origin. A free-intercept fit flags offsets.
inline RabiCalibration calibrate_rabi(std::span<const double> sqrt_power, std::span<const double> omega_r) {
    require(sqrt_power.size() == omega_r.size(), "calibrate_rabi: column lengths differ");
    require(sqrt_power.size() >= 2, "calibrate_rabi: need at least 2 powers");
    for (double x : sqrt_power) require(x >= 0.0, "calibrate_rabi: sqrt(power) must be >= 0");
    const auto n = static_cast<Eigen::Index>(sqrt_power.size());
    Eigen::MatrixXd x(n, 1), x2(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = sqrt_power[static_cast<std::size_t>(i)];
        x2(i, 0) = 1.0;
        x2(i, 1) = x(i, 0);
    }
    RabiCalibration out;
    out.fit = detail::linear_fit(x, omega_r, {}, {"slope"}, {"ps^-1/sqrt(power)"});
    out.slope = out.fit.values[0];
    if (!(out.slope > 0.0)) throw ValidationError("calibrate_rabi: non-positive slope");
    if (n >= 3) {
        const auto free = detail::linear_fit(x2, omega_r, {}, {"intercept", "slope"}, {"ps^-1", "ps^-1/sqrt(power)"});
        out.free_intercept = free.values[0];
        out.intercept_error = free.std_errors[0];
        const double scale = *std::max_element(omega_r.begin(), omega_r.end());
        if (std::abs(out.free_intercept) > 3.0 * out.intercept_error &&
            std::abs(out.free_intercept) > 1e-9 * std::abs(scale)) {
            out.poor_fit = true;
            std::ostringstream os;
            os << "calibrate_rabi: free intercept " << out.free_intercept << " +- " << out.intercept_error
               << " ps^-1 is inconsistent with a line through the origin";
            out.warning = os.str();
            out.fit.warnings.push_back(out.warning);
        }
    }
    return out;
}

} // namespace qdcoh::fit
