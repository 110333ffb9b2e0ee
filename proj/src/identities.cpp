#include "dls/identities.hpp"

#include "json.hpp"

#include <stdexcept>
#include <utility>

namespace dls {

const char* to_string(IdentityStatus s) {
    switch (s) {
        case IdentityStatus::exact: return "exact";
        case IdentityStatus::repaired: return "repaired";
        case IdentityStatus::failed: return "failed";
    }
    return "?";
}

namespace {

using Q = QuadObservable;

class Catalogue {
public:
    explicit Catalogue(const IdentitySettings& s)
        : settings_(s),
          ring_(periodic_chain(s.n_sites, s.gamma)),
          open_(open_chain(s.n_sites, s.gamma, s.delta, s.mu_left, s.mu_right)) {
        if (s.n_sites < 6)
            throw std::invalid_argument("identity checks need n_sites >= 6 (stencils reach x-2..x+3)");
        ring_.validate();
        open_.validate();
    }

    std::vector<IdentityResult> run() {
        continuity();
        conservation();
        noise_preserves_density();
        exchange_as_phase_derivative();
        bulk_fd_ring();
        bulk_fd_open();
        boundary_fd();
        second_neighbour_fd();
        commutator();
        exchange_fd();
        return std::move(results_);
    }

private:
    const IdentitySettings& settings_;
    ChainConfig ring_;
    ChainConfig open_;
    std::vector<IdentityResult> results_;

    int n() const { return settings_.n_sites; }
    double g() const { return settings_.gamma; }

    QuadCombination gen(const QuadCombination& q, const ChainConfig& c,
                        unsigned parts = GeneratorPart::full) const {
        return apply_generator(q, c, parts);
    }

    void record(std::string name, std::string group, const ChainConfig& config, QuadCombination lhs,
                QuadCombination printed, std::optional<QuadCombination> repaired,
                std::optional<QuadCombination> generator_argument = std::nullopt,
                std::string note = {},
                std::optional<QuadCombination> direct_part = std::nullopt) {
        IdentityResult r;
        r.name = std::move(name);
        r.group = std::move(group);
        r.lhs = normalized(lhs, config);
        r.printed_rhs = normalized(printed, config);
        r.printed = verify_identity(r.lhs, r.printed_rhs, config, settings_.trials, settings_.seed);
        r.note = std::move(note);
        if (r.printed.pass) {
            r.status = IdentityStatus::exact;
            r.accepted_rhs = r.printed_rhs;
        } else if (repaired) {
            r.repaired_rhs = normalized(*repaired, config);
            r.repaired =
                verify_identity(r.lhs, *r.repaired_rhs, config, settings_.trials, settings_.seed);
            r.status = r.repaired.pass ? IdentityStatus::repaired : IdentityStatus::failed;
            r.accepted_rhs = *r.repaired_rhs;
            r.generator_argument = std::move(generator_argument);
            r.direct_part = std::move(direct_part);
        } else {
            r.status = IdentityStatus::failed;
            r.accepted_rhs = r.printed_rhs;
        }
        results_.push_back(std::move(r));
    }

    // Records an identity whose corrected form comes from fit_decomposition.
    void record_fit(std::string name, std::string group, const ChainConfig& config, const Q& target,
                    QuadCombination printed, const std::vector<Q>& basis) {
        const FitResult fit = fit_decomposition(target, basis, config);
        std::optional<QuadCombination> repaired;
        std::optional<QuadCombination> argument;
        std::optional<QuadCombination> direct;
        if (fit.feasible) {
            repaired = fit.rhs;
            argument = fit.generator_argument;
            direct = fit.remainder;
        }
        record(std::move(name), std::move(group), config, QuadCombination(target),
               std::move(printed), std::move(repaired), std::move(argument), fit.message,
               std::move(direct));
    }

    void continuity() {
        for (int x = 1; x <= n(); ++x) {
            record("continuity.ring.x=" + std::to_string(x), "continuity", ring_,
                   gen(Q::Rho(x), ring_), Q::J(x - 1, x) - QuadCombination(Q::J(x, x + 1)),
                   std::nullopt);
        }
        for (int x = 2; x <= n() - 1; ++x) {
            record("continuity.open.x=" + std::to_string(x), "continuity", open_,
                   gen(Q::Rho(x), open_), Q::J(x - 1, x) - QuadCombination(Q::J(x, x + 1)),
                   std::nullopt);
        }
        const double d = settings_.delta;
        // Printed boundary currents j_{0,1} = 2 mu_l - rho_1, j_{N,N+1} = -(2 mu_r - rho_N);
        // the corrected ones carry the coupling delta.
        const auto left_source = [&](double scale) {
            return scale * (QuadCombination::constant_term(2.0 * settings_.mu_left) -
                            QuadCombination(Q::Rho(1)));
        };
        const auto right_sink = [&](double scale) {
            return -scale * (QuadCombination::constant_term(2.0 * settings_.mu_right) -
                             QuadCombination(Q::Rho(n())));
        };
        record("continuity.open.x=1", "continuity", open_, gen(Q::Rho(1), open_),
               left_source(1.0) - QuadCombination(Q::J(1, 2)),
               left_source(d) - QuadCombination(Q::J(1, 2)), std::nullopt,
               "boundary current j_{0,1} carries the factor delta");
        record("continuity.open.x=N", "continuity", open_, gen(Q::Rho(n()), open_),
               QuadCombination(Q::J(n() - 1, n())) - right_sink(1.0),
               QuadCombination(Q::J(n() - 1, n())) - right_sink(d), std::nullopt,
               "boundary current j_{N,N+1} carries the factor delta");
    }

    void conservation() {
        QuadCombination ring_sum, open_sum;
        for (int x = 1; x <= n(); ++x) {
            ring_sum += gen(Q::Rho(x), ring_);
            open_sum += gen(Q::Rho(x), open_);
        }
        record("mass_conservation.ring", "conservation", ring_, ring_sum, {}, std::nullopt);
        const double d = settings_.delta;
        QuadCombination sources = QuadCombination::constant_term(2.0 * d * (settings_.mu_left +
                                                                            settings_.mu_right));
        sources.add(Q::Rho(1), -d).add(Q::Rho(n()), -d);
        record("mass_balance.open", "conservation", open_, open_sum, sources, std::nullopt);
    }

    void noise_preserves_density() {
        for (int x = 1; x <= n(); ++x) {
            record("noise_preserves_density.x=" + std::to_string(x), "noise", ring_,
                   gen(Q::Rho(x), ring_, GeneratorPart::phase_noise), {}, std::nullopt);
        }
    }

    void exchange_as_phase_derivative() {
        for (int x = 1; x <= n(); ++x) {
            record("exchange_is_minus_phase_derivative_of_current.x=" + std::to_string(x),
                   "phase-derivative", ring_,
                   apply_phase_derivative(Q::J(x + 1, x - 1), x + 1, ring_),
                   -1.0 * QuadCombination(Q::E(x + 1, x - 1)), std::nullopt);
        }
    }

    void bulk_fd_ring() {
        for (int x = 1; x <= n(); ++x) {
            // j = -(1/2g) L j + (1/g)(rho_{x+1} - rho_x) - (1/g)(E_{x+1,x-1} - E_{x,x-2})
            QuadCombination printed = (-0.5 / g()) * gen(Q::J(x, x + 1), ring_);
            printed.add(Q::Rho(x + 1), 1.0 / g()).add(Q::Rho(x), -1.0 / g());
            printed.add(Q::E(x + 1, x - 1), -1.0 / g()).add(Q::E(x, x - 2), 1.0 / g());
            record_fit("fd_bulk.ring.x=" + std::to_string(x), "fd-bulk", ring_, Q::J(x, x + 1),
                       printed,
                       {Q::J(x, x + 1), Q::Rho(x), Q::Rho(x + 1), Q::E(x + 1, x - 1),
                        Q::E(x, x + 2), Q::E(x, x - 2)});
        }
    }

    void bulk_fd_open() {
        for (int x = 2; x <= n() - 2; ++x) {
            // j = (1/g){(rho_{x+1} - rho_x) - (1/2)(E_{x,x+2} - E_{x-1,x+1})} - (1/2g) L j
            QuadCombination printed = (-0.5 / g()) * gen(Q::J(x, x + 1), open_);
            printed.add(Q::Rho(x + 1), 1.0 / g()).add(Q::Rho(x), -1.0 / g());
            printed.add(Q::E(x, x + 2), -0.5 / g()).add(Q::E(x - 1, x + 1), 0.5 / g());
            record_fit("fd_bulk.open.x=" + std::to_string(x), "fd-bulk", open_, Q::J(x, x + 1),
                       printed,
                       {Q::J(x, x + 1), Q::Rho(x), Q::Rho(x + 1), Q::E(x - 1, x + 1),
                        Q::E(x, x + 2)});
        }
    }

    void boundary_fd() {
        const double k = 4.0 * g() + settings_.delta;
        {
            QuadCombination printed = (-2.0 / k) * gen(Q::J(1, 2), open_);
            printed.add(Q::Rho(2), 4.0 / k).add(Q::Rho(1), -4.0 / k).add(Q::E(1, 3), -2.0 / k);
            record_fit("fd_boundary.left", "fd-boundary", open_, Q::J(1, 2), printed,
                       {Q::J(1, 2), Q::Rho(1), Q::Rho(2), Q::E(1, 3)});
        }
        {
            const int m = n();
            QuadCombination printed = (-2.0 / k) * gen(Q::J(m - 1, m), open_);
            printed.add(Q::Rho(m), 4.0 / k).add(Q::Rho(m - 1), -4.0 / k).add(Q::E(m, m - 2), 2.0 / k);
            record_fit("fd_boundary.right", "fd-boundary", open_, Q::J(m - 1, m), printed,
                       {Q::J(m - 1, m), Q::Rho(m - 1), Q::Rho(m), Q::E(m - 2, m)});
        }
    }

    void second_neighbour_fd() {
        for (int x = 1; x <= n(); ++x) {
            // j_{x+1,x-1} = -(1/2g) L j_{x+1,x-1} + (1/g) grad{E_{x+2,x-1} - E_{x+1,x}}
            QuadCombination printed = (-0.5 / g()) * gen(Q::J(x + 1, x - 1), ring_);
            printed.add(Q::E(x + 3, x), 1.0 / g()).add(Q::E(x + 2, x + 1), -1.0 / g());
            printed.add(Q::E(x + 2, x - 1), -1.0 / g()).add(Q::E(x + 1, x), 1.0 / g());
            record_fit("fd_second_neighbour_current.x=" + std::to_string(x), "fd-second-neighbour",
                       ring_, Q::J(x + 1, x - 1), printed,
                       {Q::J(x + 1, x - 1), Q::E(x, x - 1), Q::E(x + 1, x), Q::E(x + 2, x + 1),
                        Q::E(x + 1, x - 2), Q::E(x + 2, x - 1), Q::E(x + 3, x)});
        }
    }

    void commutator() {
        for (int x = 1; x <= n(); ++x) {
            const QuadCombination j(Q::J(x + 1, x - 1));
            const QuadCombination lhs =
                apply_phase_derivative(gen(j, ring_, GeneratorPart::bulk), x + 1, ring_) -
                gen(apply_phase_derivative(j, x + 1, ring_), ring_, GeneratorPart::bulk);
            // printed: 4 psi_i(x-1)(psi_i(x+2) + psi_i(x)) - 4 psi_r(x-1)(psi_r(x+2) + psi_r(x))
            QuadCombination printed;
            printed.add(Q::F(x - 1, x + 2), -2.0).add(Q::F(x - 1, x), -2.0);
            // corrected closed form, derived by hand on the monomials
            QuadCombination closed;
            closed.add(Q::J(x + 2, x - 1), 1.0).add(Q::J(x, x - 1), 1.0);
            record("commutator.x=" + std::to_string(x), "commutator", ring_, lhs, printed, closed,
                   std::nullopt, "[d_theta(x+1), L] j_{x+1,x-1} stays in the current family");
        }
    }

    void exchange_fd() {
        for (int x = 1; x <= n(); ++x) {
            // E_{x+1,x-1} = (1/g) L d_theta(x+1) j_{x+1,x-1} - 2 grad(F_{x+2,x-1} - F_{x+1,x})
            QuadCombination printed =
                (1.0 / g()) *
                gen(apply_phase_derivative(Q::J(x + 1, x - 1), x + 1, ring_), ring_);
            printed.add(Q::F(x + 3, x), -2.0).add(Q::F(x + 2, x + 1), 2.0);
            printed.add(Q::F(x + 2, x - 1), 2.0).add(Q::F(x + 1, x), -2.0);
            record_fit("fd_exchange.x=" + std::to_string(x), "fd-exchange", ring_,
                       Q::E(x + 1, x - 1), printed,
                       {Q::E(x + 1, x - 1), Q::J(x + 2, x - 1), Q::J(x, x - 1), Q::J(x + 1, x),
                        Q::J(x + 1, x - 2)});
        }
    }
};

nlohmann::ordered_json coefficients_json(const QuadCombination& q) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [o, c] : q.terms()) j[o.to_string()] = c;
    if (q.constant() != 0.0) j["1"] = q.constant();
    return j;
}

}  // namespace

std::vector<IdentityResult> check_identities(const IdentitySettings& settings) {
    if (settings.trials < 1) throw std::invalid_argument("identity checks need trials >= 1");
    return Catalogue(settings).run();
}

std::string identity_report_jsonl(const std::vector<IdentityResult>& results) {
    std::string out;
    for (const auto& r : results) {
        nlohmann::ordered_json j;
        j["name"] = r.name;
        j["group"] = r.group;
        j["status"] = to_string(r.status);
        j["max_residual"] = r.max_residual();
        j["printed_residual"] = r.printed.max_residual;
        if (r.generator_argument) {
            j["generator_argument"] = coefficients_json(*r.generator_argument);
            j["coefficients"] = coefficients_json(r.direct_part.value_or(QuadCombination{}));
        } else {
            j["coefficients"] = coefficients_json(r.accepted_rhs);
        }
        if (r.status != IdentityStatus::exact)
            j["printed_coefficients"] = coefficients_json(r.printed_rhs);
        if (!r.note.empty()) j["note"] = r.note;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace dls
