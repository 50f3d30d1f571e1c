#ifndef QFLUCT_TYPES_HPP
#define QFLUCT_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qf {

typedef double Real;
typedef std::complex<Real> Complex;

typedef Eigen::Matrix<Real, Eigen::Dynamic, 1> RVec;
typedef Eigen::Matrix<Complex, Eigen::Dynamic, 1> CVec;
typedef Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> RMat;
typedef Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> CMat;

constexpr Real kPi = 3.14159265358979323846;

enum class ErrorKind {
    Validation,
    Resolution,
    InvalidPotential,
    Convergence,
    Numeric,
    Contract,
    Assembly,
    Truncation,
    Diverged,
};

// Exit-code relevant split: validation-type errors are the caller's fault.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    bool is_validation() const {
        return kind_ == ErrorKind::Validation || kind_ == ErrorKind::Resolution ||
               kind_ == ErrorKind::InvalidPotential || kind_ == ErrorKind::Contract;
    }

private:
    ErrorKind kind_;
};

const char* error_kind_name(ErrorKind k);

// Frobenius norm; for operator matrices this is the Hilbert-Schmidt norm.
template <typename Derived>
Real hs_norm(const Eigen::MatrixBase<Derived>& m) {
    return m.norm();
}

template <typename Derived>
Real hermitian_defect(const Eigen::MatrixBase<Derived>& m) {
    return (m - m.adjoint()).norm();
}

template <typename Derived>
Real symmetric_defect(const Eigen::MatrixBase<Derived>& m) {
    return (m - m.transpose()).norm();
}

}  // namespace qf

#endif  // QFLUCT_TYPES_HPP
