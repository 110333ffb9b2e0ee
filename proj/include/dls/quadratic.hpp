#pragma once

// Closed algebra of real quadratic observables of the chain and the exact
// action of the generator and of the phase derivatives on it.
//
//   Rho(x)  = |psi_x|^2
//   J(x,y)  = -i(psi_x psi*_y - psi*_x psi_y)     = 2 Im(psi_x psi*_y)
//   E(x,y)  =  psi_x psi*_y + psi*_x psi_y        = 2 Re(psi_x psi*_y)
//   F(x,y)  = 2{psi_r(x)psi_r(y) - psi_i(x)psi_i(y)} = 2 Re(psi_x psi_y)
//   G(x,y)  = 2{psi_r(x)psi_i(y) + psi_i(x)psi_r(y)} = 2 Im(psi_x psi_y)
//
// G is the partner of F needed for closure: the Hamiltonian flow and the
// phase derivatives rotate F into G.

#include "dls/chain.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dls {

enum class QuadKind : std::uint8_t { constant, rho, j, e, f, g };

struct QuadObservable {
    QuadKind kind = QuadKind::constant;
    int x = 0;
    int y = 0;

    static QuadObservable one() { return {}; }
    static QuadObservable Rho(int x) { return {QuadKind::rho, x, x}; }
    static QuadObservable J(int x, int y) { return {QuadKind::j, x, y}; }
    static QuadObservable E(int x, int y) { return {QuadKind::e, x, y}; }
    static QuadObservable F(int x, int y) { return {QuadKind::f, x, y}; }
    static QuadObservable G(int x, int y) { return {QuadKind::g, x, y}; }

    std::string to_string() const;

    friend auto operator<=>(const QuadObservable&, const QuadObservable&) = default;
};

/// Finite real linear combination of quadratic observables plus a constant,
/// kept in canonical form: E, F, G with x <= y, J with x < y, E(x,x) folded
/// into 2 Rho(x), J(x,x) dropped.
class QuadCombination {
public:
    using Terms = std::map<QuadObservable, double>;

    QuadCombination() = default;
    QuadCombination(const QuadObservable& o, double coef = 1.0) { add(o, coef); }  // NOLINT

    static QuadCombination constant_term(double c);

    QuadCombination& add(const QuadObservable& o, double coef);
    QuadCombination& add_constant(double c) {
        constant_ += c;
        return *this;
    }

    const Terms& terms() const { return terms_; }
    double constant() const { return constant_; }
    double coefficient(const QuadObservable& o) const;
    bool empty() const { return terms_.empty() && constant_ == 0.0; }

    /// Drops coefficients with |c| <= tol.
    QuadCombination& prune(double tol = 0.0);
    double max_abs_coefficient() const;

    QuadCombination& operator+=(const QuadCombination& o);
    QuadCombination& operator-=(const QuadCombination& o);
    QuadCombination& operator*=(double s);
    friend QuadCombination operator+(QuadCombination a, const QuadCombination& b) { return a += b; }
    friend QuadCombination operator-(QuadCombination a, const QuadCombination& b) { return a -= b; }
    friend QuadCombination operator*(double s, QuadCombination a) { return a *= s; }
    friend QuadCombination operator*(QuadCombination a, double s) { return a *= s; }

    std::string to_string() const;

private:
    Terms terms_;
    double constant_ = 0.0;
};

/// True iff both canonical forms agree coefficient by coefficient up to
/// `rel_tol` times the largest coefficient magnitude (at least 1).
bool equivalent(const QuadCombination& a, const QuadCombination& b, double rel_tol = 1e-12);

/// Wraps ring indices onto 1..N and checks open-chain indices; throws
/// std::out_of_range for labels that name no site.
QuadObservable normalized(const QuadObservable& o, const ChainConfig& config);
QuadCombination normalized(const QuadCombination& comb, const ChainConfig& config);

enum GeneratorPart : unsigned {
    hamiltonian = 1u,   // Liouville operator of the hopping chain
    phase_noise = 2u,   // (gamma/2) sum_x d_theta(x)^2
    reservoirs = 4u,    // boundary Ornstein-Uhlenbeck generators (open chain)
    bulk = hamiltonian | phase_noise,
    full = hamiltonian | phase_noise | reservoirs,
};

QuadCombination apply_generator(const QuadObservable& obs, const ChainConfig& config,
                                unsigned parts = GeneratorPart::full);
QuadCombination apply_generator(const QuadCombination& comb, const ChainConfig& config,
                                unsigned parts = GeneratorPart::full);

/// d_theta(x) F = psi_i(x) dF/dpsi_r(x) - psi_r(x) dF/dpsi_i(x).
QuadCombination apply_phase_derivative(const QuadObservable& obs, int x, const ChainConfig& config);
QuadCombination apply_phase_derivative(const QuadCombination& comb, int x,
                                       const ChainConfig& config);

double evaluate(const QuadObservable& obs, const ChainState& s, const ChainConfig& config);
double evaluate(const QuadCombination& comb, const ChainState& s, const ChainConfig& config);

/// State with i.i.d. standard Gaussian real and imaginary parts; trial t of
/// seed s is always the same state.
ChainState random_probe_state(const ChainConfig& config, std::uint64_t seed, std::uint32_t trial);

struct IdentityCheck {
    double max_residual = 0.0;    // largest |lhs - rhs| over the probe states
    bool canonical_equal = false;
    bool pass = false;            // canonical_equal
};

IdentityCheck verify_identity(const QuadCombination& lhs, const QuadCombination& rhs,
                              const ChainConfig& config, int trials, std::uint64_t seed);

/// target = generator(sum_i c_i b_i) + sum_j d_j b_j, with the target itself
/// excluded from the direct part. A first pass only lets the target appear
/// under the generator (the usual fluctuation-dissipation shape); if that is
/// infeasible the whole basis is used and the minimum-norm solution returned.
struct FitResult {
    bool feasible = false;
    std::vector<double> generator_coeffs;   // c_i, one per basis element
    std::vector<double> direct_coeffs;      // d_j, one per basis element
    QuadCombination generator_argument;     // sum_i c_i b_i
    QuadCombination remainder;              // sum_j d_j b_j
    QuadCombination rhs;                    // generator(argument) + remainder
    double residual = 0.0;                  // max canonical coefficient mismatch
    std::string message;
};

FitResult fit_decomposition(const QuadObservable& target, const std::vector<QuadObservable>& basis,
                            const ChainConfig& config);

}  // namespace dls
