#pragma once

// Catalogue of the algebraic identities behind the diffusive scaling and the
// open-chain current estimates, each checked exactly on canonical forms.
//
// Every entry carries the identity as it is usually printed. When the printed
// form is not an identity of the generator, a corrected form is derived
// (from fit_decomposition, or from the alternative boundary-current
// convention) and checked instead; the entry is then reported as "repaired"
// with both residuals.

#include "dls/quadratic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dls {

enum class IdentityStatus { exact, repaired, failed };

const char* to_string(IdentityStatus s);

struct IdentitySettings {
    int n_sites = 8;
    double gamma = 1.0;
    double delta = 1.0;
    double mu_left = 1.0;
    double mu_right = 2.0;
    int trials = 100;
    std::uint64_t seed = 20240611;
};

struct IdentityResult {
    std::string name;
    std::string group;                // e.g. "continuity", "fd-bulk"
    IdentityStatus status = IdentityStatus::failed;
    QuadCombination lhs;
    QuadCombination printed_rhs;
    IdentityCheck printed;
    std::optional<QuadCombination> repaired_rhs;
    IdentityCheck repaired;
    /// Coefficients of the accepted right-hand side; for decompositions the
    /// generator argument is listed separately.
    QuadCombination accepted_rhs;
    std::optional<QuadCombination> generator_argument;
    std::optional<QuadCombination> direct_part;    // remainder of a decomposition
    std::string note;

    double max_residual() const {
        return status == IdentityStatus::repaired ? repaired.max_residual : printed.max_residual;
    }
};

std::vector<IdentityResult> check_identities(const IdentitySettings& settings);

/// One JSON object per line: name, group, status, max_residual,
/// printed_residual, coefficients, generator_argument, note.
std::string identity_report_jsonl(const std::vector<IdentityResult>& results);

}  // namespace dls
