#include "dls/quadratic.hpp"

#include "dls/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace dls {

std::string QuadObservable::to_string() const {
    switch (kind) {
        case QuadKind::constant: return "1";
        case QuadKind::rho: return "Rho(" + std::to_string(x) + ")";
        case QuadKind::j: return "J(" + std::to_string(x) + "," + std::to_string(y) + ")";
        case QuadKind::e: return "E(" + std::to_string(x) + "," + std::to_string(y) + ")";
        case QuadKind::f: return "F(" + std::to_string(x) + "," + std::to_string(y) + ")";
        case QuadKind::g: return "G(" + std::to_string(x) + "," + std::to_string(y) + ")";
    }
    return "?";
}

QuadCombination QuadCombination::constant_term(double c) {
    QuadCombination q;
    q.constant_ = c;
    return q;
}

QuadCombination& QuadCombination::add(const QuadObservable& o, double coef) {
    if (coef == 0.0) return *this;
    QuadObservable k = o;
    switch (o.kind) {
        case QuadKind::constant:
            constant_ += coef;
            return *this;
        case QuadKind::rho:
            k.y = k.x;
            break;
        case QuadKind::e:
            if (o.x == o.y) {
                k = QuadObservable::Rho(o.x);
                coef *= 2.0;
            } else if (o.x > o.y) {
                std::swap(k.x, k.y);
            }
            break;
        case QuadKind::j:
            if (o.x == o.y) return *this;
            if (o.x > o.y) {
                std::swap(k.x, k.y);
                coef = -coef;
            }
            break;
        case QuadKind::f:
        case QuadKind::g:
            if (o.x > o.y) std::swap(k.x, k.y);
            break;
    }
    auto [it, inserted] = terms_.try_emplace(k, coef);
    if (!inserted) {
        it->second += coef;
        if (it->second == 0.0) terms_.erase(it);
    }
    return *this;
}

double QuadCombination::coefficient(const QuadObservable& o) const {
    QuadCombination probe(o, 1.0);
    if (probe.terms_.empty()) return o.kind == QuadKind::constant ? constant_ : 0.0;
    const auto& [key, scale] = *probe.terms_.begin();
    const auto it = terms_.find(key);
    return it == terms_.end() ? 0.0 : it->second / scale;
}

QuadCombination& QuadCombination::prune(double tol) {
    std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
    if (std::abs(constant_) <= tol) constant_ = 0.0;
    return *this;
}

double QuadCombination::max_abs_coefficient() const {
    double m = std::abs(constant_);
    for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

QuadCombination& QuadCombination::operator+=(const QuadCombination& o) {
    for (const auto& [k, c] : o.terms_) add(k, c);
    constant_ += o.constant_;
    return *this;
}

QuadCombination& QuadCombination::operator-=(const QuadCombination& o) {
    for (const auto& [k, c] : o.terms_) add(k, -c);
    constant_ -= o.constant_;
    return *this;
}

QuadCombination& QuadCombination::operator*=(double s) {
    if (s == 0.0) {
        terms_.clear();
        constant_ = 0.0;
        return *this;
    }
    for (auto& [k, c] : terms_) c *= s;
    constant_ *= s;
    return *this;
}

std::string QuadCombination::to_string() const {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    auto emit = [&](double c, const std::string& name) {
        if (!first) os << (c < 0 ? " - " : " + ");
        else if (c < 0) os << "-";
        os << std::abs(c);
        if (!name.empty()) os << "*" << name;
        first = false;
    };
    for (const auto& [k, c] : terms_) emit(c, k.to_string());
    if (constant_ != 0.0 || first) emit(constant_, "");
    return os.str();
}

bool equivalent(const QuadCombination& a, const QuadCombination& b, double rel_tol) {
    const QuadCombination d = a - b;
    const double scale = std::max({1.0, a.max_abs_coefficient(), b.max_abs_coefficient()});
    return d.max_abs_coefficient() <= rel_tol * scale;
}

QuadObservable normalized(const QuadObservable& o, const ChainConfig& config) {
    if (o.kind == QuadKind::constant) return QuadObservable::one();
    QuadObservable r = o;
    if (o.kind == QuadKind::rho) r.y = r.x;
    r.x = config.wrap(r.x);
    r.y = config.wrap(r.y);
    if (!config.has_site(r.x) || !config.has_site(r.y))
        throw std::out_of_range("observable " + o.to_string() + " references a site outside 1.." +
                                std::to_string(config.n_sites));
    return r;
}

namespace {

// Complex monomial picture: a real quadratic observable is
//   sum_{a,b} h_ab psi_a psi*_b + sum_{a<=b} (p_ab psi_a psi_b + c.c.) + const
// with h Hermitian. Operators act monomial by monomial.
using Pair = std::pair<int, int>;

struct MonomialForm {
    std::map<Pair, Complex> herm;
    std::map<Pair, Complex> anom;
    double constant = 0.0;

    void add_herm(int a, int b, Complex c) { herm[{a, b}] += c; }
    void add_anom(int a, int b, Complex c) {
        if (a > b) std::swap(a, b);
        anom[{a, b}] += c;
    }
};

constexpr Complex kI{0.0, 1.0};

MonomialForm to_monomials(const QuadCombination& q) {
    MonomialForm m;
    m.constant = q.constant();
    for (const auto& [o, c] : q.terms()) {
        switch (o.kind) {
            case QuadKind::constant: m.constant += c; break;
            case QuadKind::rho: m.add_herm(o.x, o.x, c); break;
            case QuadKind::e:
                m.add_herm(o.x, o.y, c);
                m.add_herm(o.y, o.x, c);
                break;
            case QuadKind::j:
                m.add_herm(o.x, o.y, -kI * c);
                m.add_herm(o.y, o.x, kI * c);
                break;
            case QuadKind::f: m.add_anom(o.x, o.y, c); break;
            case QuadKind::g: m.add_anom(o.x, o.y, -kI * c); break;
        }
    }
    return m;
}

QuadCombination from_monomials(const MonomialForm& m) {
    QuadCombination q = QuadCombination::constant_term(m.constant);
    for (const auto& [ab, c] : m.herm) {
        const auto [a, b] = ab;
        if (a == b) {
            q.add(QuadObservable::Rho(a), c.real());
        } else if (a < b) {
            const auto it = m.herm.find({b, a});
            const Complex partner = it == m.herm.end() ? Complex{} : std::conj(it->second);
            const Complex h = 0.5 * (c + partner);
            q.add(QuadObservable::E(a, b), h.real());
            q.add(QuadObservable::J(a, b), -h.imag());
        } else if (m.herm.find({b, a}) == m.herm.end()) {
            // lone lower-triangle entry: its partner is implicitly zero
            const Complex h = 0.5 * std::conj(c);
            q.add(QuadObservable::E(b, a), h.real());
            q.add(QuadObservable::J(b, a), -h.imag());
        }
    }
    for (const auto& [ab, d] : m.anom) {
        q.add(QuadObservable::F(ab.first, ab.second), d.real());
        q.add(QuadObservable::G(ab.first, ab.second), -d.imag());
    }
    return q.prune(0.0);
}

struct Neighbor {
    int site;
    double weight;
};

// Row a of the discrete Laplacian psi(x+1) + psi(x-1) - 2 psi(x).
std::vector<Neighbor> laplacian_row(int a, const ChainConfig& config) {
    std::vector<Neighbor> row;
    row.reserve(3);
    if (config.is_open()) {
        if (a > 1) row.push_back({a - 1, 1.0});
        if (a < config.n_sites) row.push_back({a + 1, 1.0});
    } else {
        row.push_back({config.wrap(a - 1), 1.0});
        row.push_back({config.wrap(a + 1), 1.0});
    }
    row.push_back({a, -2.0});
    return row;
}

// d psi_a/dt = -i (Lap psi)_a, d psi*_b/dt = +i (Lap psi*)_b.
MonomialForm hamiltonian_part(const MonomialForm& in, const ChainConfig& config) {
    MonomialForm out;
    for (const auto& [ab, c] : in.herm) {
        const auto [a, b] = ab;
        for (const auto& n : laplacian_row(a, config)) out.add_herm(n.site, b, -kI * n.weight * c);
        for (const auto& n : laplacian_row(b, config)) out.add_herm(a, n.site, kI * n.weight * c);
    }
    for (const auto& [ab, d] : in.anom) {
        const auto [a, b] = ab;
        for (const auto& n : laplacian_row(a, config)) out.add_anom(n.site, b, -kI * n.weight * d);
        for (const auto& n : laplacian_row(b, config)) out.add_anom(a, n.site, -kI * n.weight * d);
    }
    return out;
}

// (gamma/2) sum_x d_theta(x)^2 multiplies a monomial by -(gamma/2) sum_x q_x^2,
// q_x the net phase charge at x (+1 per psi_x, -1 per psi*_x).
MonomialForm noise_part(const MonomialForm& in, double gamma) {
    MonomialForm out;
    for (const auto& [ab, c] : in.herm) {
        if (ab.first != ab.second) out.herm[ab] += -gamma * c;
    }
    for (const auto& [ab, d] : in.anom) {
        const double charge2 = ab.first == ab.second ? 4.0 : 2.0;
        out.anom[ab] += -0.5 * gamma * charge2 * d;
    }
    return out;
}

// (delta/2){mu (d_r^2 + d_i^2) - (psi_r d_r + psi_i d_i)} at site s, i.e.
// (delta/2){4 mu d_psi d_psi* - psi d_psi - psi* d_psi*}.
void add_reservoir(const MonomialForm& in, int s, double delta, double mu, MonomialForm& out) {
    for (const auto& [ab, c] : in.herm) {
        const int hits = (ab.first == s) + (ab.second == s);
        if (hits) out.herm[ab] += -0.5 * delta * hits * c;
        if (ab.first == s && ab.second == s) out.constant += 2.0 * delta * mu * c.real();
    }
    for (const auto& [ab, d] : in.anom) {
        const int hits = (ab.first == s) + (ab.second == s);
        if (hits) out.anom[ab] += -0.5 * delta * hits * d;
    }
}

void accumulate(MonomialForm& into, const MonomialForm& from) {
    for (const auto& [k, v] : from.herm) into.herm[k] += v;
    for (const auto& [k, v] : from.anom) into.anom[k] += v;
    into.constant += from.constant;
}

QuadCombination normalized_combination(const QuadCombination& comb, const ChainConfig& config) {
    return normalized(comb, config);
}

}  // namespace

QuadCombination normalized(const QuadCombination& comb, const ChainConfig& config) {
    QuadCombination q = QuadCombination::constant_term(comb.constant());
    for (const auto& [o, c] : comb.terms()) q.add(normalized(o, config), c);
    return q;
}

QuadCombination apply_generator(const QuadCombination& comb, const ChainConfig& config,
                                unsigned parts) {
    const MonomialForm in = to_monomials(normalized_combination(comb, config));
    MonomialForm out;
    if (parts & GeneratorPart::hamiltonian) accumulate(out, hamiltonian_part(in, config));
    if (parts & GeneratorPart::phase_noise) accumulate(out, noise_part(in, config.gamma));
    if ((parts & GeneratorPart::reservoirs) && config.is_open()) {
        add_reservoir(in, 1, config.delta, config.mu_left, out);
        add_reservoir(in, config.n_sites, config.delta, config.mu_right, out);
    }
    return from_monomials(out);
}

QuadCombination apply_generator(const QuadObservable& obs, const ChainConfig& config,
                                unsigned parts) {
    return apply_generator(QuadCombination(obs), config, parts);
}

QuadCombination apply_phase_derivative(const QuadCombination& comb, int x,
                                       const ChainConfig& config) {
    const int site = config.wrap(x);
    if (!config.has_site(site))
        throw std::out_of_range("phase derivative at site " + std::to_string(x) + " outside chain");
    const MonomialForm in = to_monomials(normalized_combination(comb, config));
    MonomialForm out;
    for (const auto& [ab, c] : in.herm) {
        const int q = (ab.first == site) - (ab.second == site);
        if (q) out.herm[ab] += -kI * static_cast<double>(q) * c;
    }
    for (const auto& [ab, d] : in.anom) {
        const int q = (ab.first == site) + (ab.second == site);
        if (q) out.anom[ab] += -kI * static_cast<double>(q) * d;
    }
    return from_monomials(out);
}

QuadCombination apply_phase_derivative(const QuadObservable& obs, int x, const ChainConfig& config) {
    return apply_phase_derivative(QuadCombination(obs), x, config);
}

double evaluate(const QuadObservable& obs, const ChainState& s, const ChainConfig& config) {
    const QuadObservable o = normalized(obs, config);
    switch (o.kind) {
        case QuadKind::constant: return 1.0;
        case QuadKind::rho: return std::norm(s(o.x));
        case QuadKind::j: return 2.0 * (s(o.x) * std::conj(s(o.y))).imag();
        case QuadKind::e: return 2.0 * (s(o.x) * std::conj(s(o.y))).real();
        case QuadKind::f: return 2.0 * (s(o.x) * s(o.y)).real();
        case QuadKind::g: return 2.0 * (s(o.x) * s(o.y)).imag();
    }
    return 0.0;
}

double evaluate(const QuadCombination& comb, const ChainState& s, const ChainConfig& config) {
    double v = comb.constant();
    for (const auto& [o, c] : comb.terms()) v += c * evaluate(o, s, config);
    return v;
}

ChainState random_probe_state(const ChainConfig& config, std::uint64_t seed, std::uint32_t trial) {
    const CounterRng rng(seed, trial);
    std::vector<double> z(2 * static_cast<std::size_t>(config.n_sites));
    rng.normals(0, 0, z);
    ChainState s;
    s.psi.resize(static_cast<std::size_t>(config.n_sites));
    for (std::size_t x = 0; x < s.psi.size(); ++x) s.psi[x] = {z[2 * x], z[2 * x + 1]};
    return s;
}

IdentityCheck verify_identity(const QuadCombination& lhs, const QuadCombination& rhs,
                              const ChainConfig& config, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("verify_identity: trials must be >= 1");
    IdentityCheck r;
    for (int t = 0; t < trials; ++t) {
        const ChainState s = random_probe_state(config, seed, static_cast<std::uint32_t>(t));
        r.max_residual = std::max(r.max_residual,
                                  std::abs(evaluate(lhs, s, config) - evaluate(rhs, s, config)));
    }
    r.canonical_equal = equivalent(normalized_combination(lhs, config),
                                   normalized_combination(rhs, config));
    r.pass = r.canonical_equal;
    return r;
}

namespace {

struct LinearFit {
    Eigen::VectorXd solution;
    double residual = 0.0;
};

// Columns are canonical combinations; finds the minimum-norm least-squares
// combination reproducing `target`.
LinearFit solve_columns(const std::vector<QuadCombination>& columns, const QuadCombination& target) {
    std::map<QuadObservable, int> rows;
    auto index_of = [&rows](const QuadObservable& o) {
        return rows.try_emplace(o, static_cast<int>(rows.size())).first->second;
    };
    for (const auto& col : columns) {
        for (const auto& [o, c] : col.terms()) index_of(o);
        index_of(QuadObservable::one());
    }
    for (const auto& [o, c] : target.terms()) index_of(o);
    index_of(QuadObservable::one());

    const int m = static_cast<int>(rows.size());
    const int n = static_cast<int>(columns.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < n; ++j) {
        for (const auto& [o, c] : columns[static_cast<std::size_t>(j)].terms()) a(rows.at(o), j) = c;
        a(rows.at(QuadObservable::one()), j) = columns[static_cast<std::size_t>(j)].constant();
    }
    for (const auto& [o, c] : target.terms()) b(rows.at(o)) = c;
    b(rows.at(QuadObservable::one())) = target.constant();

    LinearFit fit;
    if (n == 0) {
        fit.solution = Eigen::VectorXd();
        fit.residual = b.cwiseAbs().maxCoeff();
        return fit;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    fit.solution = cod.solve(b);
    for (auto& v : fit.solution)
        if (std::abs(v) < 1e-13) v = 0.0;
    fit.residual = (a * fit.solution - b).cwiseAbs().maxCoeff();
    return fit;
}

}  // namespace

FitResult fit_decomposition(const QuadObservable& target, const std::vector<QuadObservable>& basis,
                            const ChainConfig& config) {
    const QuadObservable t = normalized(target, config);
    const QuadCombination target_comb(t);
    std::vector<QuadObservable> nb;
    nb.reserve(basis.size());
    for (const auto& b : basis) nb.push_back(normalized(b, config));

    const auto same_as_target = [&](const QuadObservable& o) {
        return equivalent(QuadCombination(o), target_comb) ||
               equivalent(QuadCombination(o), -1.0 * target_comb);
    };

    std::vector<QuadCombination> images;
    images.reserve(nb.size());
    for (const auto& b : nb) images.push_back(apply_generator(b, config));

    FitResult best;
    best.residual = std::numeric_limits<double>::infinity();
    const double tol = 1e-10 * std::max(1.0, target_comb.max_abs_coefficient());

    for (const bool restricted : {true, false}) {
        std::vector<QuadCombination> columns;
        std::vector<std::pair<bool, std::size_t>> meaning;  // (is generator column, basis index)
        for (std::size_t i = 0; i < nb.size(); ++i) {
            if (!restricted || same_as_target(nb[i])) {
                columns.push_back(images[i]);
                meaning.emplace_back(true, i);
            }
        }
        for (std::size_t j = 0; j < nb.size(); ++j) {
            if (!same_as_target(nb[j])) {
                columns.emplace_back(nb[j]);
                meaning.emplace_back(false, j);
            }
        }
        const LinearFit fit = solve_columns(columns, target_comb);

        FitResult r;
        r.generator_coeffs.assign(nb.size(), 0.0);
        r.direct_coeffs.assign(nb.size(), 0.0);
        for (std::size_t k = 0; k < meaning.size(); ++k) {
            const double c = fit.solution(static_cast<Eigen::Index>(k));
            const auto [is_gen, i] = meaning[k];
            (is_gen ? r.generator_coeffs : r.direct_coeffs)[i] = c;
            if (c == 0.0) continue;
            (is_gen ? r.generator_argument : r.remainder).add(nb[i], c);
        }
        r.rhs = apply_generator(r.generator_argument, config) + r.remainder;
        r.residual = fit.residual;
        r.feasible = fit.residual <= tol;
        if (r.feasible) {
            r.message = restricted ? "exact decomposition with the target under the generator"
                                   : "exact decomposition over the full basis (minimum norm)";
            return r;
        }
        if (r.residual < best.residual) best = std::move(r);
    }
    best.feasible = false;
    best.message = "no exact decomposition in the span of the basis (residual " +
                   std::to_string(best.residual) + ")";
    return best;
}

}  // namespace dls
