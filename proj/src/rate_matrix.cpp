#include "nvcav/rate_matrix.hpp"

#include "nvcav/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace nvcav
{

RateMatrix::RateMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), m_(Eigen::MatrixXd::Zero(labels_.size(), labels_.size()))
{
    if (labels_.empty())
        throw std::invalid_argument("RateMatrix: no states");
}

RateMatrix::RateMatrix(Eigen::MatrixXd generator, std::vector<std::string> labels)
    : labels_(std::move(labels)), m_(std::move(generator))
{
    if (m_.rows() != m_.cols() || m_.rows() == 0)
        throw ValidationError("RateMatrix: generator must be square and non-empty");
    if (labels_.empty())
        for (Eigen::Index i = 0; i < m_.rows(); ++i)
            labels_.push_back("s" + std::to_string(i));
    if (static_cast<Eigen::Index>(labels_.size()) != m_.rows())
        throw ValidationError("RateMatrix: label count does not match generator size");
}

std::size_t RateMatrix::index(std::string_view label) const
{
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label)
            return i;
    throw std::out_of_range("unknown state '" + std::string(label) + "'");
}

void RateMatrix::add_rate(std::size_t from, std::size_t to, double rate)
{
    if (from >= size() || to >= size())
        throw std::out_of_range("RateMatrix::add_rate: state index out of range");
    if (from == to)
        throw std::invalid_argument("RateMatrix::add_rate: self edge");
    if (!(rate >= 0.0) || !std::isfinite(rate))
        throw std::domain_error("RateMatrix::add_rate: rate must be finite and >= 0");
    const auto f = static_cast<Eigen::Index>(from);
    const auto t = static_cast<Eigen::Index>(to);
    m_(t, f) += rate;
    m_(f, f) -= rate;
}

void RateMatrix::add_rate(std::string_view from, std::string_view to, double rate)
{
    add_rate(index(from), index(to), rate);
}

void RateMatrix::validate(double tol) const
{
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < m_.cols(); ++j)
    {
        for (Eigen::Index i = 0; i < m_.rows(); ++i)
            if (i != j && m_(i, j) < 0.0)
                throw ValidationError("generator has a negative off-diagonal entry at (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
        const double s = m_.col(j).sum();
        if (std::abs(s) > tol * scale)
            throw ValidationError("generator column " + std::to_string(j) + " sums to " + std::to_string(s));
    }
}

Eigen::VectorXd RateMatrix::steady_state() const
{
    validate();
    const auto n = m_.rows();
    Eigen::MatrixXd a(n + 1, n);
    a.topRows(n) = m_;
    a.row(n).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    b(n) = 1.0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < n)
        throw ValidationError("steady state is not unique (reducible generator)");
    Eigen::VectorXd p = qr.solve(b);
    for (auto &v : p)
        if (v < 0.0 && v > -1e-12)
            v = 0.0;
    return p / p.sum();
}

Eigen::MatrixXd RateMatrix::propagator(double dt) const
{
    if (dt < 0.0)
        throw std::domain_error("propagator: dt must be >= 0");
    if (dt == 0.0)
        return Eigen::MatrixXd::Identity(m_.rows(), m_.cols());
    Eigen::MatrixXd scaled = m_ * dt;
    return scaled.exp();
}

void check_population(const Eigen::VectorXd &p, double tol)
{
    if (p.size() == 0)
        throw ValidationError("empty population vector");
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (!(p(i) >= -tol))
            throw ValidationError("population entry " + std::to_string(i) + " is negative");
    if (std::abs(p.sum() - 1.0) > tol)
        throw ValidationError("populations sum to " + std::to_string(p.sum()));
}

Eigen::VectorXd propagate(const RateMatrix &generator, const Eigen::VectorXd &p0, double dt)
{
    generator.validate();
    if (p0.size() != static_cast<Eigen::Index>(generator.size()))
        throw ValidationError("population vector size does not match generator");
    check_population(p0);
    Eigen::VectorXd p = generator.propagator(dt) * p0;
    for (auto &v : p)
        if (v < 0.0)
            v = 0.0;
    return p / p.sum();
}

} // namespace nvcav
