#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace copreg {

struct validation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct not_positive_definite_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class CorrelationKind { exchangeable, ar1, markov, unstructured };

/// CLI spellings: exch, ar1, markov, unstructured.
CorrelationKind correlation_kind_from_name(const std::string& name);
std::string correlation_kind_name(CorrelationKind kind);

/// Parametric latent correlation structure.  Construct through the factory
/// functions, which validate the admissible parameter range.
struct CorrelationStructure {
    CorrelationKind kind;
    int dim = 1;
    double rho = 0.0;
    Eigen::VectorXd times;    // markov only, strictly increasing
    Eigen::MatrixXd matrix;   // unstructured only

    static CorrelationStructure exchangeable(int dim, double rho);
    static CorrelationStructure ar1(int dim, double rho);
    static CorrelationStructure markov(double rho, Eigen::VectorXd times);
    static CorrelationStructure unstructured(Eigen::MatrixXd matrix);
};

/// Admissible open interval for rho given structure kind and dimension.
/// Exchangeable: (-1/(d-1), 1); AR(1): (-1, 1); Markov: [0, 1).
std::pair<double, double> rho_range(CorrelationKind kind, int dim);

Eigen::MatrixXd build_matrix(const CorrelationStructure& s);

struct CholeskyFactor {
    Eigen::MatrixXd lower;
    int dim() const { return static_cast<int>(lower.rows()); }
};

/// Lower-triangular factor with L L^T = R.  Throws
/// not_positive_definite_error when a pivot falls at or below 1e-12.
CholeskyFactor cholesky(const Eigen::MatrixXd& R);

} // namespace copreg
