#include "copreg/correlation.hpp"

#include <cmath>

namespace copreg {

CorrelationKind correlation_kind_from_name(const std::string& name) {
    if (name == "exch") return CorrelationKind::exchangeable;
    if (name == "ar1") return CorrelationKind::ar1;
    if (name == "markov") return CorrelationKind::markov;
    if (name == "unstructured") return CorrelationKind::unstructured;
    throw validation_error("unknown correlation structure: " + name);
}

std::string correlation_kind_name(CorrelationKind kind) {
    switch (kind) {
        case CorrelationKind::exchangeable: return "exch";
        case CorrelationKind::ar1: return "ar1";
        case CorrelationKind::markov: return "markov";
        case CorrelationKind::unstructured: return "unstructured";
    }
    return "?";
}

std::pair<double, double> rho_range(CorrelationKind kind, int dim) {
    switch (kind) {
        case CorrelationKind::exchangeable:
            return {dim > 1 ? -1.0 / (dim - 1) : -1.0, 1.0};
        case CorrelationKind::ar1:
            return {-1.0, 1.0};
        case CorrelationKind::markov:
            return {0.0, 1.0};
        case CorrelationKind::unstructured:
            break;
    }
    throw validation_error("rho_range: structure has no scalar parameter");
}

CorrelationStructure CorrelationStructure::exchangeable(int dim, double rho) {
    if (dim < 1) throw validation_error("exchangeable: dim must be >= 1");
    const auto [lo, hi] = rho_range(CorrelationKind::exchangeable, dim);
    if (!(rho > lo && rho < hi)) {
        throw validation_error("exchangeable: rho outside (-1/(d-1), 1)");
    }
    CorrelationStructure s;
    s.kind = CorrelationKind::exchangeable;
    s.dim = dim;
    s.rho = rho;
    return s;
}

CorrelationStructure CorrelationStructure::ar1(int dim, double rho) {
    if (dim < 1) throw validation_error("ar1: dim must be >= 1");
    if (!(rho > -1.0 && rho < 1.0)) throw validation_error("ar1: rho outside (-1, 1)");
    CorrelationStructure s;
    s.kind = CorrelationKind::ar1;
    s.dim = dim;
    s.rho = rho;
    return s;
}

CorrelationStructure CorrelationStructure::markov(double rho, Eigen::VectorXd times) {
    // negative rho excluded: fractional powers are undefined for
    // non-integer time gaps
    if (!(rho >= 0.0 && rho < 1.0)) throw validation_error("markov: rho outside [0, 1)");
    if (times.size() < 1) throw validation_error("markov: empty time vector");
    for (int j = 1; j < times.size(); ++j) {
        if (!(times[j] > times[j - 1])) {
            throw validation_error("markov: times must be strictly increasing");
        }
    }
    CorrelationStructure s;
    s.kind = CorrelationKind::markov;
    s.dim = static_cast<int>(times.size());
    s.rho = rho;
    s.times = std::move(times);
    return s;
}

CorrelationStructure CorrelationStructure::unstructured(Eigen::MatrixXd matrix) {
    const int d = static_cast<int>(matrix.rows());
    if (matrix.cols() != d || d < 1) throw validation_error("unstructured: not square");
    for (int j = 0; j < d; ++j) {
        if (std::fabs(matrix(j, j) - 1.0) > 1e-12) {
            throw validation_error("unstructured: diagonal must be 1");
        }
        for (int k = 0; k < j; ++k) {
            if (std::fabs(matrix(j, k) - matrix(k, j)) > 1e-12) {
                throw validation_error("unstructured: not symmetric");
            }
        }
    }
    cholesky(matrix);  // positive definiteness check
    CorrelationStructure s;
    s.kind = CorrelationKind::unstructured;
    s.dim = d;
    s.matrix = std::move(matrix);
    return s;
}

Eigen::MatrixXd build_matrix(const CorrelationStructure& s) {
    const int d = s.dim;
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(d, d);
    switch (s.kind) {
        case CorrelationKind::exchangeable:
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    if (j != k) R(j, k) = s.rho;
            break;
        case CorrelationKind::ar1:
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    R(j, k) = std::pow(s.rho, std::abs(j - k));
            break;
        case CorrelationKind::markov:
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    if (j != k) R(j, k) = std::pow(s.rho, std::fabs(s.times[j] - s.times[k]));
            break;
        case CorrelationKind::unstructured:
            R = s.matrix;
            break;
    }
    return R;
}

CholeskyFactor cholesky(const Eigen::MatrixXd& R) {
    const int d = static_cast<int>(R.rows());
    if (R.cols() != d) throw validation_error("cholesky: not square");
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        double pivot = R(j, j);
        for (int k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
        if (!(pivot > 1e-12)) {
            throw not_positive_definite_error("cholesky: pivot <= 1e-12 at column " +
                                              std::to_string(j));
        }
        L(j, j) = std::sqrt(pivot);
        for (int i = j + 1; i < d; ++i) {
            double s = R(i, j);
            for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / L(j, j);
        }
    }
    return {std::move(L)};
}

} // namespace copreg
