#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace twophoton {

using cplx = std::complex<double>;
inline constexpr cplx I_UNIT{0.0, 1.0};

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SizingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class CVector {
public:
    CVector() = default;
    explicit CVector(std::size_t n) : a_(n, cplx{}) {}
    CVector(std::initializer_list<cplx> v) : a_(v) {}
    explicit CVector(std::vector<cplx> v) : a_(std::move(v)) {}

    static CVector basis(std::size_t n, std::size_t k);

    std::size_t dim() const { return a_.size(); }
    cplx& operator[](std::size_t i) { return a_[i]; }
    const cplx& operator[](std::size_t i) const { return a_[i]; }
    cplx* data() { return a_.data(); }
    const cplx* data() const { return a_.data(); }
    const std::vector<cplx>& values() const { return a_; }

    double norm2() const;
    double norm() const;
    bool is_zero() const;

    CVector& operator+=(const CVector& o);
    CVector& operator-=(const CVector& o);
    CVector& operator*=(cplx s);
    // y += s * x
    void axpy(cplx s, const CVector& x);

private:
    std::vector<cplx> a_;
};

CVector operator+(CVector a, const CVector& b);
CVector operator-(CVector a, const CVector& b);
CVector operator*(cplx s, CVector a);
cplx dot(const CVector& a, const CVector& b);  // <a|b>, conjugate-linear in a

class COperator {
public:
    COperator() = default;
    explicit COperator(std::size_t n) : n_(n), a_(n * n, cplx{}) {}
    COperator(std::size_t n, std::vector<cplx> rowmajor);

    static COperator identity(std::size_t n);
    static COperator diagonal(const std::vector<cplx>& d);
    static COperator outer(const CVector& a, const CVector& b);  // |a><b|

    std::size_t dim() const { return n_; }
    cplx& operator()(std::size_t r, std::size_t c) { return a_[r * n_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return a_[r * n_ + c]; }
    const cplx* data() const { return a_.data(); }
    cplx* data() { return a_.data(); }

    COperator adjoint() const;
    COperator transpose() const;
    cplx trace() const;
    double max_abs() const;
    bool is_finite() const;
    bool is_zero() const;

    COperator& operator+=(const COperator& o);
    COperator& operator-=(const COperator& o);
    COperator& operator*=(cplx s);

private:
    std::size_t n_ = 0;
    std::vector<cplx> a_;
};

COperator operator+(COperator a, const COperator& b);
COperator operator-(COperator a, const COperator& b);
COperator operator*(cplx s, COperator a);
COperator operator*(const COperator& a, const COperator& b);
CVector operator*(const COperator& a, const CVector& x);

double max_abs_diff(const COperator& a, const COperator& b);
double max_abs_diff(const CVector& a, const CVector& b);

// Scaling and squaring with a degree-13 Padé kernel.
COperator matexp(const COperator& a);

inline constexpr std::size_t DEFAULT_KRON_CAP = 1u << 14;
COperator kron(const COperator& a, const COperator& b, std::size_t cap = DEFAULT_KRON_CAP);
CVector kron(const CVector& a, const CVector& b);

// Solve A X = B by LU with partial pivoting.
COperator solve(const COperator& a, const COperator& b);

struct EigenResult {
    std::vector<double> values;  // ascending
    COperator vectors;           // columns are eigenvectors
};
// Cyclic complex Jacobi for Hermitian input. Only the upper triangle is read.
EigenResult eigh(const COperator& h);

struct HermitianReport {
    double hermiticity_defect;
    double min_eigenvalue;
    cplx trace;
};
HermitianReport hermitian_part_checks(const COperator& rho);

}  // namespace twophoton
