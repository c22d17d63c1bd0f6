#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nvcav
{

// Generator of a continuous-time population model, dp/dt = M p.
// Column j holds the outflow of state j: M(i, j) is the rate j -> i and the
// diagonal carries minus the total outflow, so columns sum to zero.
class RateMatrix
{
public:
    explicit RateMatrix(std::vector<std::string> labels);
    // Wraps an existing generator; labels default to s0, s1, ...
    explicit RateMatrix(Eigen::MatrixXd generator, std::vector<std::string> labels = {});

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string> &labels() const { return labels_; }
    std::size_t index(std::string_view label) const;

    // Adds `rate` (>= 0) to the from -> to edge.
    void add_rate(std::size_t from, std::size_t to, double rate);
    void add_rate(std::string_view from, std::string_view to, double rate);
    double rate(std::size_t from, std::size_t to) const { return m_(to, from); }

    const Eigen::MatrixXd &generator() const { return m_; }

    // Throws ValidationError if off-diagonals are negative or a column sum
    // exceeds tol (relative to the largest rate).
    void validate(double tol = 1e-9) const;

    // Null vector normalised to unit sum. Throws ValidationError when the
    // stationary distribution is not unique.
    Eigen::VectorXd steady_state() const;

    // exp(M dt).
    Eigen::MatrixXd propagator(double dt) const;

private:
    std::vector<std::string> labels_;
    Eigen::MatrixXd m_;
};

// Population after dt. p0 must be a probability vector (tol 1e-9); rounding
// negatives at the 1e-12 level are clamped and the result renormalised.
Eigen::VectorXd propagate(const RateMatrix &generator, const Eigen::VectorXd &p0, double dt);

// Throws ValidationError unless p is non-negative and sums to one within tol.
void check_population(const Eigen::VectorXd &p, double tol = 1e-9);

} // namespace nvcav
