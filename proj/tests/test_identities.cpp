#include "dls/identities.hpp"

#include <doctest.h>
#include <json.hpp>

#include <set>
#include <sstream>

using namespace dls;

TEST_CASE("every catalogued identity holds exactly or in repaired form") {
    for (const auto& [g, d] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
        IdentitySettings st;
        st.gamma = g;
        st.delta = d;
        const auto results = check_identities(st);
        REQUIRE(results.size() > 20);
        std::set<std::string> groups;
        for (const auto& r : results) {
            INFO(r.name << ": " << r.note);
            groups.insert(r.group);
            CHECK(r.status != IdentityStatus::failed);
            CHECK(r.max_residual() <= 1e-12 * std::max(1.0, r.accepted_rhs.max_abs_coefficient()) * 100);
            if (r.status == IdentityStatus::repaired) {
                CHECK(r.repaired.canonical_equal);
                CHECK(r.repaired.pass);
                CHECK_FALSE(r.printed.canonical_equal);
                CHECK(r.printed.max_residual > 1e-6);
            }
            if (r.group == "continuity" && r.name.find("open.x=") == std::string::npos)
                CHECK(r.status == IdentityStatus::exact);
            if (r.group == "noise" || r.group == "conservation") CHECK(r.status == IdentityStatus::exact);
        }
        CHECK(groups.count("fd-bulk") == 1);
        CHECK(groups.count("fd-boundary") == 1);
        CHECK(groups.count("commutator") == 1);
    }
}

TEST_CASE("identity report is one JSON object per line") {
    const auto results = check_identities({});
    std::istringstream in(identity_report_jsonl(results));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("name"));
        CHECK(j.contains("status"));
        CHECK(j.contains("max_residual"));
        CHECK(j.contains("coefficients"));
        ++n;
    }
    CHECK(n == results.size());
}

TEST_CASE("settings are validated") {
    IdentitySettings st;
    st.n_sites = 4;
    CHECK_THROWS(check_identities(st));
}
