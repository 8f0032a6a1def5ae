#include "twophoton/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace twophoton {

CVector CVector::basis(std::size_t n, std::size_t k) {
    CVector v(n);
    v[k] = 1.0;
    return v;
}

double CVector::norm2() const {
    double s = 0.0;
    for (const auto& x : a_) s += std::norm(x);
    return s;
}

double CVector::norm() const { return std::sqrt(norm2()); }

bool CVector::is_zero() const {
    return std::all_of(a_.begin(), a_.end(), [](cplx x) { return x == cplx{}; });
}

CVector& CVector::operator+=(const CVector& o) {
    if (o.dim() != dim()) throw InvalidInput("vector dimension mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

CVector& CVector::operator-=(const CVector& o) {
    if (o.dim() != dim()) throw InvalidInput("vector dimension mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

CVector& CVector::operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
}

void CVector::axpy(cplx s, const CVector& x) {
    if (x.dim() != dim()) throw InvalidInput("vector dimension mismatch");
    if (s == cplx{}) return;
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += s * x.a_[i];
}

CVector operator+(CVector a, const CVector& b) { return a += b; }
CVector operator-(CVector a, const CVector& b) { return a -= b; }
CVector operator*(cplx s, CVector a) { return a *= s; }

cplx dot(const CVector& a, const CVector& b) {
    if (a.dim() != b.dim()) throw InvalidInput("vector dimension mismatch");
    cplx s{};
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

COperator::COperator(std::size_t n, std::vector<cplx> rowmajor) : n_(n), a_(std::move(rowmajor)) {
    if (a_.size() != n * n) throw InvalidInput("operator entry count does not match dimension");
}

COperator COperator::identity(std::size_t n) {
    COperator m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

COperator COperator::diagonal(const std::vector<cplx>& d) {
    COperator m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

COperator COperator::outer(const CVector& a, const CVector& b) {
    if (a.dim() != b.dim()) throw InvalidInput("outer product dimension mismatch");
    COperator m(a.dim());
    for (std::size_t r = 0; r < a.dim(); ++r)
        for (std::size_t c = 0; c < b.dim(); ++c) m(r, c) = a[r] * std::conj(b[c]);
    return m;
}

COperator COperator::adjoint() const {
    COperator m(n_);
    for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t c = 0; c < n_; ++c) m(c, r) = std::conj((*this)(r, c));
    return m;
}

COperator COperator::transpose() const {
    COperator m(n_);
    for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t c = 0; c < n_; ++c) m(c, r) = (*this)(r, c);
    return m;
}

cplx COperator::trace() const {
    cplx s{};
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
}

double COperator::max_abs() const {
    double m = 0.0;
    for (const auto& x : a_) m = std::max(m, std::abs(x));
    return m;
}

bool COperator::is_finite() const {
    return std::all_of(a_.begin(), a_.end(),
                       [](cplx x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

bool COperator::is_zero() const {
    return std::all_of(a_.begin(), a_.end(), [](cplx x) { return x == cplx{}; });
}

COperator& COperator::operator+=(const COperator& o) {
    if (o.n_ != n_) throw InvalidInput("operator dimension mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

COperator& COperator::operator-=(const COperator& o) {
    if (o.n_ != n_) throw InvalidInput("operator dimension mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

COperator& COperator::operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
}

COperator operator+(COperator a, const COperator& b) { return a += b; }
COperator operator-(COperator a, const COperator& b) { return a -= b; }
COperator operator*(cplx s, COperator a) { return a *= s; }

COperator operator*(const COperator& a, const COperator& b) {
    const std::size_t n = a.dim();
    if (b.dim() != n) throw InvalidInput("operator dimension mismatch");
    COperator m(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < n; ++k) {
            const cplx x = a(r, k);
            if (x == cplx{}) continue;
            for (std::size_t c = 0; c < n; ++c) m(r, c) += x * b(k, c);
        }
    return m;
}

CVector operator*(const COperator& a, const CVector& x) {
    const std::size_t n = a.dim();
    if (x.dim() != n) throw InvalidInput("operator/vector dimension mismatch");
    CVector y(n);
    for (std::size_t r = 0; r < n; ++r) {
        cplx s{};
        for (std::size_t c = 0; c < n; ++c) s += a(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

double max_abs_diff(const COperator& a, const COperator& b) { return (a - b).max_abs(); }

double max_abs_diff(const CVector& a, const CVector& b) {
    if (a.dim() != b.dim()) throw InvalidInput("vector dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

namespace {

double norm1(const COperator& a) {
    double best = 0.0;
    for (std::size_t c = 0; c < a.dim(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < a.dim(); ++r) s += std::abs(a(r, c));
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

COperator solve(const COperator& a, const COperator& b) {
    const std::size_t n = a.dim();
    if (b.dim() != n) throw InvalidInput("solve: dimension mismatch");
    COperator lu = a;
    COperator x = b;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::abs(lu(r, k)) > std::abs(lu(piv, k))) piv = r;
        if (lu(piv, k) == cplx{}) throw NumericError("solve: singular matrix");
        if (piv != k)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(lu(k, c), lu(piv, c));
                std::swap(x(k, c), x(piv, c));
            }
        for (std::size_t r = k + 1; r < n; ++r) {
            const cplx f = lu(r, k) / lu(k, k);
            if (f == cplx{}) continue;
            for (std::size_t c = k; c < n; ++c) lu(r, c) -= f * lu(k, c);
            for (std::size_t c = 0; c < n; ++c) x(r, c) -= f * x(k, c);
        }
    }
    for (std::size_t kk = n; kk-- > 0;) {
        for (std::size_t c = 0; c < n; ++c) {
            cplx s = x(kk, c);
            for (std::size_t j = kk + 1; j < n; ++j) s -= lu(kk, j) * x(j, c);
            x(kk, c) = s / lu(kk, kk);
        }
    }
    return x;
}

COperator matexp(const COperator& a) {
    if (!a.is_finite()) throw InvalidInput("matexp: non-finite entries");
    const std::size_t n = a.dim();
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double nrm = norm1(a);
    int s = 0;
    if (nrm > theta13) s = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / theta13))));
    COperator as = std::ldexp(1.0, -s) * a;

    const COperator id = COperator::identity(n);
    const COperator a2 = as * as;
    const COperator a4 = a2 * a2;
    const COperator a6 = a2 * a4;
    COperator u_inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
    COperator u = as * (a6 * u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    COperator v_inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
    COperator v = a6 * v_inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    COperator r = solve(v - u, v + u);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

COperator kron(const COperator& a, const COperator& b, std::size_t cap) {
    const std::size_t na = a.dim(), nb = b.dim();
    if (na != 0 && nb > cap / na) throw SizingError("kron: dimension exceeds cap");
    COperator m(na * nb);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < na; ++j) {
            const cplx x = a(i, j);
            if (x == cplx{}) continue;
            for (std::size_t k = 0; k < nb; ++k)
                for (std::size_t l = 0; l < nb; ++l) m(i * nb + k, j * nb + l) = x * b(k, l);
        }
    return m;
}

CVector kron(const CVector& a, const CVector& b) {
    CVector v(a.dim() * b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t k = 0; k < b.dim(); ++k) v[i * b.dim() + k] = a[i] * b[k];
    return v;
}

EigenResult eigh(const COperator& h) {
    const std::size_t n = h.dim();
    COperator a(n);
    for (std::size_t r = 0; r < n; ++r) {
        a(r, r) = h(r, r).real();
        for (std::size_t c = r + 1; c < n; ++c) {
            a(r, c) = h(r, c);
            a(c, r) = std::conj(h(r, c));
        }
    }
    COperator v = COperator::identity(n);

    double frob = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) frob += std::norm(a(r, c));
    const double target = 1e-32 * std::max(frob, 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = r + 1; c < n; ++c) off += std::norm(a(r, c));
        if (off <= target) break;

        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double mag = std::abs(a(p, q));
                if (mag == 0.0) continue;
                const cplx phase = a(p, q) / mag;  // e^{i phi}
                const double app = a(p, p).real(), aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // U restricted to (p,q): rows p = (c, s), q = conj(phase) * (-s, c)
                const cplx upp = c, upq = s, uqp = -s * std::conj(phase), uqq = c * std::conj(phase);
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = akp * upp + akq * uqp;
                    a(k, q) = akp * upq + akq * uqq;
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp * upp + vkq * uqp;
                    v(k, q) = vkp * upq + vkq * uqq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
                    a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
    EigenResult res{std::vector<double>(n), COperator(n)};
    for (std::size_t k = 0; k < n; ++k) {
        res.values[k] = a(order[k], order[k]).real();
        for (std::size_t r = 0; r < n; ++r) res.vectors(r, k) = v(r, order[k]);
    }
    return res;
}

HermitianReport hermitian_part_checks(const COperator& rho) {
    const COperator adj = rho.adjoint();
    const double defect = max_abs_diff(rho, adj);
    const COperator herm = 0.5 * (rho + adj);
    const auto eig = eigh(herm);
    const double min_eig = eig.values.empty() ? 0.0 : eig.values.front();
    return {defect, min_eig, rho.trace()};
}

}  // namespace twophoton
