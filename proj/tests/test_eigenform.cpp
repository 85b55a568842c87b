#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "qtml/arith.hpp"
#include "qtml/eigenform.hpp"
#include "test_util.hpp"

using namespace qtml;
using u64 = std::uint64_t;
using i64 = std::int64_t;

namespace {
double unnormalized(const eigenform::EigenformTable& t, u64 n) {
    return t.lambda(n) * std::pow((double)n, (t.kappa - 1) / 2.0);
}
}  // namespace

TEST_CASE("weight-12 coefficients are the Ramanujan tau values") {
    auto t = eigenform::eigenform_table(12, 30);
    const i64 tau[] = {1,      -24,    252,    -1472,   4830,
                       -6048,  -16744, 84480,  -113643, -115920,
                       534612, -370944};
    for (u64 n = 1; n <= 12; ++n)
        CHECK(unnormalized(t, n) == doctest::Approx((double)tau[n - 1])
                                        .epsilon(1e-12));
}

TEST_CASE("leading coefficients of the five convolved eigenforms") {
    // a(2), a(3) in the arithmetic normalization, one eigenform per weight
    struct Row { int k; double a2, a3; };
    const Row rows[] = {{16, 216.0, -3348.0},
                        {18, -528.0, -4284.0},
                        {20, 456.0, 50652.0},
                        {22, -288.0, -128844.0},
                        {26, -48.0, -195804.0}};
    for (const auto& r : rows) {
        auto t = eigenform::eigenform_table(r.k, 10);
        CHECK(unnormalized(t, 2) == doctest::Approx(r.a2).epsilon(1e-12));
        CHECK(unnormalized(t, 3) == doctest::Approx(r.a3).epsilon(1e-12));
    }
}

TEST_CASE("multiplicativity and Hecke recursion") {
    for (int k : {12, 16, 18, 20, 22, 26}) {
        auto t = eigenform::eigenform_table(k, 10000);
        // lambda(mn) = lambda(m) lambda(n) for coprime m, n
        for (u64 m : {2ull, 3ull, 5ull, 9ull, 25ull, 49ull})
            for (u64 n : {7ull, 11ull, 13ull, 121ull})
                if (std::gcd(m, n) == 1 && m * n <= 10000)
                    CHECK(std::abs(t.lambda(m * n) -
                                   t.lambda(m) * t.lambda(n)) < 1e-12);
        // lambda(p^{r+1}) = lambda(p) lambda(p^r) - lambda(p^{r-1})
        for (u64 p : {2ull, 3ull, 5ull, 7ull}) {
            u64 pr = p;
            double prev = 1.0;
            while (pr * p <= 10000) {
                CHECK(std::abs(t.lambda(pr * p) -
                               (t.lambda(p) * t.lambda(pr) - prev)) < 1e-12);
                prev = t.lambda(pr);
                pr *= p;
            }
        }
        // hecke_extend continues the recursion beyond the table
        for (u64 p : {2ull, 3ull}) {
            u64 pr = 1;
            for (int r = 1; pr <= 10000 / p; ++r) {
                pr *= p;
                CHECK(std::abs(eigenform::hecke_extend(t, p, r) -
                               t.lambda(pr)) < 1e-12);
            }
        }
    }
}

TEST_CASE("Deligne bound |lambda(n)| <= tau(n) up to 1e4") {
    for (int k : {12, 16, 18, 20, 22, 26}) {
        auto t = eigenform::eigenform_table(k, 10000);
        double worst = 0.0;
        for (u64 n = 1; n <= 10000; ++n)
            worst = std::max(worst, std::abs(t.lambda(n)) -
                                        (double)arith::divisor_count(n));
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("checksum: floating table matches the exact-integer series") {
    for (int k : {12, 16, 18, 20, 22, 26}) {
        auto t = eigenform::eigenform_table(k, 1000);
        auto exact = eigenform::exact_coefficients(k, 1000);
        CHECK(t.checksum == eigenform::series_checksum(exact));
    }
}

TEST_CASE("checksum is deterministic across rebuilds") {
    auto a = eigenform::eigenform_table(16, 500);
    auto b = eigenform::eigenform_table(16, 500);
    CHECK(a.checksum == b.checksum);
    for (u64 n = 1; n <= 500; ++n) CHECK(a.lambda(n) == b.lambda(n));
}

TEST_CASE("cache round-trip preserves the table") {
    namespace fs = std::filesystem;
    std::string dir = "qtml_test_cache_rt";
    fs::create_directories(dir);
    auto t = eigenform::eigenform_table(18, 2000);
    std::string path = eigenform::table_cache_path(dir, 18, 2000);
    eigenform::save_table(t, path);
    auto back = eigenform::load_table(path);
    REQUIRE(back.has_value());
    CHECK(back->kappa == 18);
    CHECK(back->n_max == 2000);
    CHECK(back->checksum == t.checksum);
    for (u64 n = 1; n <= 2000; ++n) CHECK(back->lambda(n) == t.lambda(n));
    fs::remove_all(dir);
}

TEST_CASE("load_table rejects truncated and mislabeled files") {
    namespace fs = std::filesystem;
    std::string dir = "qtml_test_cache_bad";
    fs::create_directories(dir);
    auto t = eigenform::eigenform_table(12, 500);
    std::string path = eigenform::table_cache_path(dir, 12, 500);
    eigenform::save_table(t, path);
    // truncate
    fs::resize_file(path, fs::file_size(path) - 16);
    CHECK(!eigenform::load_table(path).has_value());
    fs::remove_all(dir);
}

TEST_CASE("integrity_check accepts good tables and rejects tampering") {
    auto t = eigenform::eigenform_table(12, 5000);
    CHECK(eigenform::integrity_check(t));
    auto bad = t;
    bad.lam[100] = 99.0;  // violates the divisor bound at n = 101
    CHECK(!eigenform::integrity_check(bad));
    auto bad2 = t;
    bad2.lam[0] = 0.5;  // lambda(1) must be exactly 1
    CHECK(!eigenform::integrity_check(bad2));
}

TEST_CASE("unsupported weights are refused") {
    CHECK(!eigenform::weight_supported(14));
    CHECK(!eigenform::weight_supported(24));
    CHECK_THROWS(eigenform::eigenform_table(14, 100));
}
