#include "lrlab/quadratic.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

#include "lrlab/localization.hpp"

namespace lrlab {

namespace {

void add_pair(Eigen::MatrixXd& k, std::size_t a, std::size_t b, double coeff) {
    // c * i g_a g_b (a < b) contributes K_ab += 2c in X = (i/4) g^T K g
    k(a, b) += 2.0 * coeff;
    k(b, a) -= 2.0 * coeff;
}

}  // namespace

Eigen::MatrixXd QuadraticChain::hamiltonian_form() const {
    if (length == 0) throw std::invalid_argument("empty chain");
    if (std::size_t(bonds.size()) + 1 != length || std::size_t(fields.size()) != length)
        throw std::invalid_argument("coupling vectors do not match the chain length");
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * length, 2 * length);
    for (std::size_t x = 0; x < length; ++x) {
        if (fields(x) != 0.0) add_pair(k, 2 * x, 2 * x + 1, fields(x));
        if (x + 1 < length && bonds(x) != 0.0) add_pair(k, 2 * x + 1, 2 * x + 2, bonds(x));
    }
    return k;
}

QuadraticChain QuadraticChain::truncated(double k) const {
    if (k < 0) throw std::invalid_argument("truncation radius must be nonnegative");
    QuadraticChain out = *this;
    for (std::size_t x = 0; x < length; ++x) {
        const double d = std::abs(double(x) - double(x0));
        if (d > k / 2.0) {
            out.fields(x) = 0.0;
            if (x + 1 < length) out.bonds(x) = 0.0;
        } else if (x + 1 < length && k < 2.0) {
            out.bonds(x) = 0.0;  // E_{B_{k/2}(x)} cuts the two-site piece
        }
    }
    return out;
}

QuadraticObservable quadratic_sigma_x(std::size_t length, std::size_t site) {
    if (site >= length) throw std::invalid_argument("site out of range");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * length, 2 * length);
    add_pair(m, 2 * site, 2 * site + 1, 1.0);
    return {std::move(m)};
}

double quadratic_norm(const QuadraticObservable& x) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x.form);
    return svd.singularValues().sum() / 4.0;
}

double quadratic_commutator_norm(const QuadraticObservable& x, const QuadraticObservable& y) {
    // [X_M, X_N] = i X_{[M,N]}
    const Eigen::MatrixXd c = x.form * y.form - y.form * x.form;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(c);
    return svd.singularValues().sum() / 4.0;
}

QuadraticObservable quadratic_project_interval(const QuadraticObservable& x, long lo, long hi,
                                               std::size_t length) {
    Eigen::MatrixXd kept = Eigen::MatrixXd::Zero(2 * length, 2 * length);
    const long a_lo = std::max<long>(0, 2 * lo);
    const long a_hi = std::min<long>(long(2 * length) - 1, 2 * hi + 1);
    if (a_lo <= a_hi) {
        const long n = a_hi - a_lo + 1;
        kept.block(a_lo, a_lo, n, n) = x.form.block(a_lo, a_lo, n, n);
    }
    return {std::move(kept)};
}

double quadratic_ball_residual(const QuadraticObservable& x, std::size_t x0, double r,
                               std::size_t length) {
    const long lo = long(std::ceil(double(x0) - r));
    const long hi = long(std::floor(double(x0) + r));
    const auto kept = quadratic_project_interval(x, lo, hi, length);
    return quadratic_norm({x.form - kept.form});
}

double quadratic_localized_norm(const QuadraticObservable& x, const DecayFunction& F,
                                std::size_t x0, std::size_t length) {
    const double base = quadratic_norm(x);
    const double r_cover = std::max(double(x0), double(length - 1 - x0));
    std::vector<double> radii, residuals;
    for (double r = 0.0; r <= r_cover; r += 1.0) {
        radii.push_back(r);
        residuals.push_back(quadratic_ball_residual(x, x0, r, length));
    }
    return base + tail_supremum(radii, residuals, F);
}

QuadraticPropagator::QuadraticPropagator(const QuadraticChain& chain) : length_(chain.length) {
    const Eigen::MatrixXd k = chain.hamiltonian_form();
    const Eigen::MatrixXcd herm = Complex(0.0, 1.0) * k.cast<Complex>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
}

QuadraticObservable QuadraticPropagator::evolve(double s, double t,
                                                const QuadraticObservable& x) const {
    if (std::size_t(x.form.rows()) != 2 * length_)
        throw std::invalid_argument("observable size does not match the chain");
    if (s == t) return x;
    // alpha_{s,t}(gamma) = exp((t-s) K) gamma, so M -> R^T M R
    const double dt = t - s;
    Eigen::VectorXcd phases(eigenvalues_.size());
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i)
        phases(i) = std::exp(Complex(0.0, -dt * eigenvalues_(i)));
    const Eigen::MatrixXcd rc = eigenvectors_ * phases.asDiagonal() * eigenvectors_.adjoint();
    const Eigen::MatrixXd r = rc.real();
    return {(r.transpose() * x.form * r).eval()};
}

}  // namespace lrlab
