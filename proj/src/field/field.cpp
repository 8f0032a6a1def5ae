#include "twophoton/field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "twophoton/format.hpp"

namespace twophoton {

TimeGrid TimeGrid::from_span(double t0, double t_end, std::size_t m) {
    if (m < 1) throw InvalidInput("time grid needs at least one bin");
    if (!(t_end > t0)) throw InvalidInput("time grid needs t_end > t0");
    return from_step(t0, (t_end - t0) / static_cast<double>(m), m);
}

TimeGrid TimeGrid::from_step(double t0, double tau, std::size_t m) {
    if (m < 1) throw InvalidInput("time grid needs at least one bin");
    if (!(tau > 0.0) || !std::isfinite(tau) || !std::isfinite(t0)) throw InvalidInput("time grid needs finite tau > 0");
    TimeGrid g;
    g.t0_ = t0;
    g.tau_ = tau;
    g.m_ = m;
    return g;
}

std::string to_string(ChannelMode m) {
    return m == ChannelMode::unidirectional ? "unidirectional" : "bidirectional";
}

ChannelMode channel_mode_from_string(const std::string& s) {
    if (s == "unidirectional" || s == "uni") return ChannelMode::unidirectional;
    if (s == "bidirectional" || s == "bi") return ChannelMode::bidirectional;
    throw InvalidInput("unknown channel mode '" + s + "'");
}

namespace {

double param(const ShapeParams& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end()) throw InvalidInput("missing shape parameter '" + key + "'");
    if (!std::isfinite(it->second)) throw InvalidInput("non-finite shape parameter '" + key + "'");
    return it->second;
}

double param_or(const ShapeParams& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

constexpr double kTailLog = 36.84136148790474;  // ln(1e16)

}  // namespace

PulseShape::PulseShape(std::string name, ShapeParams params) : name_(std::move(name)), params_(std::move(params)) {
    if (name_ == "rectangular") {
        const double a = param(params_, "start"), b = param(params_, "end");
        if (!(b > a)) throw InvalidInput("rectangular pulse needs end > start");
        lo_ = a;
        hi_ = b;
    } else if (name_ == "decaying_exponential") {
        const double g = param(params_, "gamma"), s = param(params_, "start");
        if (!(g > 0)) throw InvalidInput("exponential pulse needs gamma > 0");
        lo_ = s;
        hi_ = s + kTailLog / g;
    } else if (name_ == "rising_exponential") {
        const double g = param(params_, "gamma"), p = param(params_, "peak");
        if (!(g > 0)) throw InvalidInput("exponential pulse needs gamma > 0");
        lo_ = p - kTailLog / g;
        hi_ = p;
    } else if (name_ == "gaussian" || name_ == "chirped_gaussian") {
        const double c = param(params_, "center"), s = param(params_, "sigma");
        if (!(s > 0)) throw InvalidInput("gaussian pulse needs sigma > 0");
        if (name_ == "chirped_gaussian") param(params_, "chirp");
        lo_ = c - 9.0 * s;
        hi_ = c + 9.0 * s;
    } else {
        throw InvalidInput("unknown pulse shape '" + name_ + "'");
    }
}

cplx PulseShape::operator()(double t) const {
    double amp = 0.0;
    double phase = -param_or(params_, "omega", 0.0) * t;
    if (name_ == "rectangular") {
        if (t >= lo_ && t < hi_) amp = 1.0 / std::sqrt(hi_ - lo_);
    } else if (name_ == "decaying_exponential") {
        const double g = params_.at("gamma");
        if (t >= lo_) amp = std::sqrt(g) * std::exp(-0.5 * g * (t - lo_));
    } else if (name_ == "rising_exponential") {
        const double g = params_.at("gamma");
        if (t <= hi_) amp = std::sqrt(g) * std::exp(0.5 * g * (t - hi_));
    } else {
        const double c = params_.at("center"), s = params_.at("sigma");
        const double x = t - c;
        amp = std::pow(2.0 * std::numbers::pi * s * s, -0.25) * std::exp(-x * x / (4.0 * s * s));
        if (name_ == "chirped_gaussian") phase -= params_.at("chirp") * x * x;
    }
    return std::polar(amp, phase);
}

double rising_truncation_start(double gamma, double peak, double eps) {
    if (!(gamma > 0) || !(eps > 0) || !(eps < 1)) throw InvalidInput("rising_truncation_start: bad parameters");
    return peak + std::log(eps) / gamma;
}

PhotonProfile::PhotonProfile(TimeGrid grid, std::vector<cplx> xi) : grid_(grid), xi_(std::move(xi)) {
    if (xi_.size() != grid_.bins()) throw InvalidInput("profile sample count does not match grid");
    if (std::abs(mass() - 1.0) > 1e-10) throw InvalidInput("profile is not normalized");
}

PhotonProfile PhotonProfile::normalized(TimeGrid grid, std::vector<cplx> xi) {
    if (xi.size() != grid.bins()) throw InvalidInput("profile sample count does not match grid");
    double m = 0.0;
    for (const auto& x : xi) {
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) throw InvalidInput("non-finite profile sample");
        m += grid.tau() * std::norm(x);
    }
    if (!(m > 0.0)) throw InvalidInput("profile has zero mass on the grid");
    const double s = 1.0 / std::sqrt(m);
    for (auto& x : xi) x *= s;
    return PhotonProfile(grid, std::move(xi));
}

PhotonProfile PhotonProfile::zero(TimeGrid grid) {
    PhotonProfile p;
    p.grid_ = grid;
    p.xi_.assign(grid.bins(), cplx{});
    return p;
}

double PhotonProfile::mass() const {
    double m = 0.0;
    for (const auto& x : xi_) m += std::norm(x);
    return m * grid_.tau();
}

PhotonProfile sample_profile(const PulseShape& shape, const TimeGrid& grid) {
    std::vector<cplx> xi(grid.bins());
    for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = shape(grid.time(k));
    return PhotonProfile::normalized(grid, std::move(xi));
}

PhotonProfile profile_library(const std::string& name, const ShapeParams& params, const TimeGrid& grid) {
    return sample_profile(PulseShape(name, params), grid);
}

namespace {
void require_same_grid(const TimeGrid& a, const TimeGrid& b) {
    if (!(a == b)) throw InvalidInput("grid mismatch");
}
}  // namespace

cplx overlap(const PhotonProfile& xi, const PhotonProfile& phi) {
    require_same_grid(xi.grid(), phi.grid());
    cplx s{};
    for (std::size_t k = 0; k < xi.bins(); ++k) s += std::conj(xi[k]) * phi[k];
    return s * xi.grid().tau();
}

double normalization_factor_separable(const PhotonProfile& xi, const PhotonProfile& phi) {
    return 1.0 + std::norm(overlap(xi, phi));
}

std::vector<cplx> tail_sums(const PhotonProfile& a, const PhotonProfile& b) {
    require_same_grid(a.grid(), b.grid());
    const std::size_t m = a.bins();
    std::vector<cplx> out(m + 1, cplx{});
    for (std::size_t k = m; k-- > 0;) out[k] = out[k + 1] + a.grid().tau() * std::conj(a[k]) * b[k];
    return out;
}

TwoPhotonAmplitude::TwoPhotonAmplitude(TimeGrid grid, ChannelMode mode)
    : grid_(grid), mode_(mode), phi_(grid.bins() * grid.bins(), cplx{}) {}

TwoPhotonAmplitude::TwoPhotonAmplitude(TimeGrid grid, ChannelMode mode, std::vector<cplx> rowmajor)
    : grid_(grid), mode_(mode), phi_(std::move(rowmajor)) {
    if (phi_.size() != grid_.bins() * grid_.bins()) throw InvalidInput("amplitude sample count does not match grid");
}

TwoPhotonAmplitude separable_amplitude(const PhotonProfile& xi, const PhotonProfile& phi, ChannelMode mode) {
    require_same_grid(xi.grid(), phi.grid());
    TwoPhotonAmplitude a(xi.grid(), mode);
    for (std::size_t k2 = 0; k2 < a.bins(); ++k2)
        for (std::size_t k1 = 0; k1 < a.bins(); ++k1) a(k2, k1) = phi[k2] * xi[k1];
    return a;
}

cplx inner_product(const TwoPhotonAmplitude& phi, const TwoPhotonAmplitude& psi) {
    require_same_grid(phi.grid(), psi.grid());
    if (phi.mode() != psi.mode()) throw InvalidInput("inner_product: channel mode mismatch");
    const std::size_t m = phi.bins();
    const double t2 = phi.grid().tau() * phi.grid().tau();
    cplx s{};
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) {
            cplx v = psi(a, b);
            if (phi.mode() == ChannelMode::unidirectional) v += psi(b, a);
            s += std::conj(phi(a, b)) * v;
        }
    return s * t2;
}

double two_photon_norm(const TwoPhotonAmplitude& phi) { return inner_product(phi, phi).real(); }

TwoPhotonAmplitude normalized(const TwoPhotonAmplitude& phi) {
    const double n = two_photon_norm(phi);
    if (!(n > 0.0)) throw InvalidInput("amplitude has zero norm");
    std::vector<cplx> v = phi.samples();
    for (auto& x : v) x /= std::sqrt(n);
    return TwoPhotonAmplitude(phi.grid(), phi.mode(), std::move(v));
}

TwoPhotonAmplitude symmetrize(const TwoPhotonAmplitude& phi) {
    if (phi.mode() != ChannelMode::unidirectional) throw InvalidInput("symmetrize: unidirectional amplitude required");
    const double n = two_photon_norm(phi);
    if (!(n > 1e-300)) throw InvalidInput("symmetrize: degenerate (purely antisymmetric) amplitude");
    const std::size_t m = phi.bins();
    TwoPhotonAmplitude out(phi.grid(), phi.mode());
    const double s = 1.0 / (2.0 * std::sqrt(n));
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) out(a, b) = (phi(a, b) + phi(b, a)) * s;
    return out;
}

double antisymmetry_defect(const TwoPhotonAmplitude& phi) {
    double d = 0.0, scale = 0.0;
    for (std::size_t a = 0; a < phi.bins(); ++a)
        for (std::size_t b = 0; b < phi.bins(); ++b) {
            d = std::max(d, std::abs(phi(a, b) - phi(b, a)));
            scale = std::max(scale, std::abs(phi(a, b)));
        }
    return scale > 0 ? d / scale : 0.0;
}

double ModeDecomposition::total_mass() const {
    double s = dropped_mass;
    for (double u : weights) s += u * u;
    return s;
}

namespace {

// Deterministic sign/phase convention: the first significant entry gets a positive real part
// (takagi, where only a sign is free) or is made real positive (schmidt).
std::size_t first_significant(const std::vector<cplx>& v) {
    double mx = 0.0;
    for (const auto& x : v) mx = std::max(mx, std::abs(x));
    for (std::size_t k = 0; k < v.size(); ++k)
        if (std::abs(v[k]) > 1e-8 * mx) return k;
    return 0;
}

bool lex_less(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].real() != b[k].real()) return a[k].real() < b[k].real();
        if (a[k].imag() != b[k].imag()) return a[k].imag() < b[k].imag();
    }
    return false;
}

struct RawMode {
    double u;
    std::vector<cplx> a, b;
};

void order_modes(std::vector<RawMode>& modes) {
    std::stable_sort(modes.begin(), modes.end(), [](const RawMode& x, const RawMode& y) {
        if (std::abs(x.u - y.u) > 1e-12) return x.u > y.u;
        return lex_less(x.a, y.a);
    });
}

ModeDecomposition finish(DecompositionKind kind, std::vector<RawMode> raw, const TimeGrid& grid, double tol) {
    order_modes(raw);
    ModeDecomposition dec{kind, {}, {}, {}, 0.0};
    const double inv = 1.0 / std::sqrt(grid.tau());
    for (auto& m : raw) {
        if (m.u < tol) {
            dec.dropped_mass += m.u * m.u;
            continue;
        }
        for (auto& x : m.a) x *= inv;
        for (auto& x : m.b) x *= inv;
        dec.weights.push_back(m.u);
        dec.first.emplace_back(grid, std::move(m.a));
        if (kind == DecompositionKind::schmidt_biphoton) dec.second.emplace_back(grid, std::move(m.b));
    }
    return dec;
}

ModeDecomposition takagi(const TwoPhotonAmplitude& phi, double tol) {
    const std::size_t m = phi.bins();
    const double tau = phi.grid().tau();
    // A = tau * S is complex symmetric; with A = B + iC the real symmetric matrix
    // [[B, C], [C, -B]] has eigenpairs (sigma, [x; y]) with A conj(x + iy) = sigma (x + iy).
    COperator big(2 * m);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) {
            const cplx a = 0.5 * tau * (phi(r, c) + phi(c, r));
            big(r, c) = a.real();
            big(r, m + c) = a.imag();
            big(m + r, c) = a.imag();
            big(m + r, m + c) = -a.real();
        }
    const EigenResult eig = eigh(big);
    double scale = 0.0;
    for (double v : eig.values) scale = std::max(scale, std::abs(v));
    const double zero_cut = 1e-13 * std::max(scale, 1e-300);

    std::vector<RawMode> raw;
    double kept = 0.0;
    for (std::size_t k = 2 * m; k-- > 0 && raw.size() < m;) {
        const double sigma = eig.values[k];
        if (sigma <= zero_cut) break;
        std::vector<cplx> v(m);
        for (std::size_t r = 0; r < m; ++r) v[r] = cplx(eig.vectors(r, k).real(), eig.vectors(m + r, k).real());
        const double nv = std::sqrt(std::accumulate(v.begin(), v.end(), 0.0,
                                                    [](double s, cplx x) { return s + std::norm(x); }));
        for (auto& x : v) x /= nv;
        const std::size_t f = first_significant(v);
        const bool flip = v[f].real() < 0 || (v[f].real() == 0 && v[f].imag() < 0);
        if (flip)
            for (auto& x : v) x = -x;
        kept += sigma * sigma;
        raw.push_back({sigma, std::move(v), {}});
    }
    ModeDecomposition dec = finish(DecompositionKind::takagi_symmetric, std::move(raw), phi.grid(), tol);
    // Mass below the numerical-zero cut belongs to the dropped share.
    double total = 0.0;
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) total += std::norm(0.5 * tau * (phi(r, c) + phi(c, r)));
    dec.dropped_mass += std::max(0.0, total - kept);
    return dec;
}

ModeDecomposition schmidt(const TwoPhotonAmplitude& phi, double tol) {
    const std::size_t m = phi.bins();
    const double tau = phi.grid().tau();
    COperator a(m);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) a(r, c) = tau * phi(r, c);
    const EigenResult eig = eigh(a.adjoint() * a);

    std::vector<RawMode> raw;
    double kept = 0.0;
    const double scale = eig.values.empty() ? 0.0 : std::sqrt(std::max(0.0, eig.values.back()));
    const double zero_cut = 1e-13 * std::max(scale, 1e-300);
    for (std::size_t k = m; k-- > 0;) {
        std::vector<cplx> v(m), w(m);
        for (std::size_t r = 0; r < m; ++r) v[r] = eig.vectors(r, k);
        double nw = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            cplx s{};
            for (std::size_t c = 0; c < m; ++c) s += a(r, c) * v[c];
            w[r] = s;
            nw += std::norm(s);
        }
        // |A v| rather than sqrt(lambda): eigenvalues of A^H A lose half the digits.
        const double sigma = std::sqrt(nw);
        if (sigma <= zero_cut) continue;
        for (auto& x : w) x /= sigma;
        const double lam = nw;
        // tau Phi = sum sigma w v^H: channel-1 mode is conj(v), channel-2 mode is w.
        std::vector<cplx> xi(m);
        for (std::size_t r = 0; r < m; ++r) xi[r] = std::conj(v[r]);
        const std::size_t f = first_significant(xi);
        const cplx ph = std::abs(xi[f]) > 0 ? xi[f] / std::abs(xi[f]) : cplx(1.0);
        for (auto& x : xi) x /= ph;
        for (auto& x : w) x *= ph;
        kept += lam;
        raw.push_back({sigma, std::move(xi), std::move(w)});
    }
    ModeDecomposition dec = finish(DecompositionKind::schmidt_biphoton, std::move(raw), phi.grid(), tol);
    double total = 0.0;
    for (const auto& x : phi.samples()) total += std::norm(tau * x);
    dec.dropped_mass += std::max(0.0, total - kept);
    return dec;
}

}  // namespace

ModeDecomposition decompose(const TwoPhotonAmplitude& phi, double tol, SymmetryPolicy policy) {
    if (!(tol > 0)) throw InvalidInput("decompose: tol must be positive");
    if (phi.mode() == ChannelMode::bidirectional) return schmidt(phi, tol);
    if (antisymmetry_defect(phi) > 1e-12) {
        if (policy == SymmetryPolicy::reject) throw InvalidInput("decompose: amplitude is not symmetric");
        return takagi(symmetrize(phi), tol);
    }
    return takagi(phi, tol);
}

TwoPhotonAmplitude reconstruct(const ModeDecomposition& dec) {
    if (dec.first.empty()) throw InvalidInput("reconstruct: empty decomposition");
    const TimeGrid grid = dec.first.front().grid();
    const bool tak = dec.kind == DecompositionKind::takagi_symmetric;
    TwoPhotonAmplitude out(grid, tak ? ChannelMode::unidirectional : ChannelMode::bidirectional);
    for (std::size_t n = 0; n < dec.weights.size(); ++n) {
        const PhotonProfile& x = dec.first[n];
        const PhotonProfile& y = tak ? dec.first[n] : dec.second[n];
        for (std::size_t k2 = 0; k2 < out.bins(); ++k2)
            for (std::size_t k1 = 0; k1 < out.bins(); ++k1) out(k2, k1) += dec.weights[n] * y[k2] * x[k1];
    }
    return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto b = tok.find_first_not_of(" \t\r");
        const auto e = tok.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : tok.substr(b, e - b + 1));
    }
    return out;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw InvalidInput("malformed number '" + s + "'");
    return v;
}

std::size_t to_index(const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw InvalidInput("malformed index '" + s + "'");
    return static_cast<std::size_t>(v);
}

// Reads the "# names" and "# values" header pair and returns the value fields.
std::vector<std::string> read_header(std::istream& is, std::size_t expected) {
    std::string names, values;
    if (!std::getline(is, names) || !std::getline(is, values) || names.rfind("# ", 0) != 0 ||
        values.rfind("# ", 0) != 0)
        throw InvalidInput("CSV header missing");
    auto f = split_csv(values.substr(2));
    if (f.size() != expected) throw InvalidInput("CSV header has wrong field count");
    return f;
}

}  // namespace

void write_amplitude_csv(std::ostream& os, const TwoPhotonAmplitude& phi) {
    const TimeGrid& g = phi.grid();
    os << "# t0,tau,M,channel_mode\n";
    os << "# " << fmt17(g.t0()) << ',' << fmt17(g.tau()) << ',' << g.bins() << ',' << to_string(phi.mode()) << '\n';
    os << "k2,k1,re,im\n";
    for (std::size_t k2 = 0; k2 < phi.bins(); ++k2)
        for (std::size_t k1 = 0; k1 < phi.bins(); ++k1) {
            const cplx v = phi(k2, k1);
            os << k2 << ',' << k1 << ',' << fmt17(v.real()) << ',' << fmt17(v.imag()) << '\n';
        }
}

TwoPhotonAmplitude read_amplitude_csv(std::istream& is) {
    const auto h = read_header(is, 4);
    const TimeGrid g = TimeGrid::from_step(to_double(h[0]), to_double(h[1]), to_index(h[2]));
    TwoPhotonAmplitude phi(g, channel_mode_from_string(h[3]));
    std::string line;
    std::getline(is, line);  // column names
    std::vector<bool> seen(g.bins() * g.bins(), false);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 4) throw InvalidInput("amplitude row needs 4 fields: " + line);
        const std::size_t k2 = to_index(f[0]), k1 = to_index(f[1]);
        if (k2 >= g.bins() || k1 >= g.bins()) throw InvalidInput("amplitude index out of range: " + line);
        phi(k2, k1) = cplx(to_double(f[2]), to_double(f[3]));
        seen[k2 * g.bins() + k1] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
        throw InvalidInput("amplitude CSV is missing entries");
    return phi;
}

void write_profile_csv(std::ostream& os, const PhotonProfile& p) {
    const TimeGrid& g = p.grid();
    os << "# t0,tau,M\n";
    os << "# " << fmt17(g.t0()) << ',' << fmt17(g.tau()) << ',' << g.bins() << '\n';
    os << "k,re,im\n";
    for (std::size_t k = 0; k < p.bins(); ++k)
        os << k << ',' << fmt17(p[k].real()) << ',' << fmt17(p[k].imag()) << '\n';
}

PhotonProfile read_profile_csv(std::istream& is) {
    const auto h = read_header(is, 3);
    const TimeGrid g = TimeGrid::from_step(to_double(h[0]), to_double(h[1]), to_index(h[2]));
    std::vector<cplx> xi(g.bins());
    std::vector<bool> seen(g.bins(), false);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 3) throw InvalidInput("profile row needs 3 fields: " + line);
        const std::size_t k = to_index(f[0]);
        if (k >= g.bins()) throw InvalidInput("profile index out of range: " + line);
        xi[k] = cplx(to_double(f[1]), to_double(f[2]));
        seen[k] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
        throw InvalidInput("profile CSV is missing entries");
    return PhotonProfile(g, std::move(xi));
}

}  // namespace twophoton
