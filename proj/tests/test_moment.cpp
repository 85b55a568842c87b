#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <sstream>

#include "doctest.h"
#include "qtml/moment.hpp"
#include "test_util.hpp"

using namespace qtml;
using cplx = std::complex<double>;
using u64 = std::uint64_t;
using i64 = std::int64_t;

namespace {
moment::MomentRequest small_request() {
    moment::MomentRequest rq;
    rq.kappa = 12;
    rq.x_grid = {60.0, 120.0, 240.0};
    return rq;
}
}  // namespace

TEST_CASE("request validation rejects malformed input") {
    auto rq = small_request();
    CHECK_NOTHROW(moment::validate_request(rq));
    auto bad = rq;
    bad.ell = 6;
    CHECK_THROWS(moment::validate_request(bad));
    bad = rq;
    bad.x_grid = {100.0, 100.0};
    CHECK_THROWS(moment::validate_request(bad));
    bad = rq;
    bad.alpha = cplx(0.4, 0.0);
    CHECK_THROWS(moment::validate_request(bad));
    bad = rq;
    bad.workers = 0;
    CHECK_THROWS(moment::validate_request(bad));
    bad = rq;
    bad.derivative = true;  // weight 12 has even sign: derivative undefined
    CHECK_THROWS(moment::validate_request(bad));
}

TEST_CASE("d_list enumerates odd squarefree d in the window support") {
    auto w = qtml::window::default_window();
    auto ds = moment::detail::d_list(w, 50.0);
    for (u64 d : ds) {
        CHECK(d % 2 == 1);
        CHECK(arith::is_squarefree(d));
        CHECK((double)d / 50.0 > 1.0);
        CHECK((double)d / 50.0 < 2.0);
    }
    CHECK(!ds.empty());
    // completeness against a naive filter
    std::vector<u64> ref;
    for (u64 d = 51; d < 100; d += 2)
        if (arith::is_squarefree(d)) ref.push_back(d);
    CHECK(ds == ref);
}

TEST_CASE("gamma_alpha is 1 at alpha = 0 and analytic nearby") {
    CHECK(std::abs(moment::gamma_alpha(12, cplx(0.0)) - 1.0) < 1e-14);
    // gamma_alpha(a) gamma_alpha(-a) = 1
    cplx a(0.03, 0.01);
    CHECK(std::abs(moment::gamma_alpha(12, a) * moment::gamma_alpha(12, -a) -
                   1.0) < 1e-13);
}

TEST_CASE("main term at alpha = 0 collapses to the unshifted constant") {
    auto t = testutil::table(12, 200000);
    auto rq = small_request();
    euler::EulerContext ctx(t, 1, rq.prime_cutoff);
    double c = 8.0 * qtml::window::mellin(rq.window, 1.0).real() /
               (moment::pi * moment::pi) * euler::sym_square_L(t, 1.0) *
               euler::Z_product(ctx, cplx(0.0)).real();
    for (double X : {100.0, 1000.0}) {
        cplx mt = moment::main_term(t, rq, X);
        CHECK(std::abs(mt.real() - c * X) < 1e-9 * c * X);
        CHECK(std::abs(mt.imag()) < 1e-12 * c * X);
    }
}

TEST_CASE("derivative main term gains exactly c log 2 per doubling") {
    auto t = testutil::table(18, 200000);
    auto w = qtml::window::default_window();
    euler::EulerContext ctx(t, 1, 100000);
    double c = 8.0 * qtml::window::mellin(w, 1.0).real() /
               (moment::pi * moment::pi) * euler::sym_square_L(t, 1.0) *
               euler::Z_product(ctx, cplx(0.0)).real();
    for (double X : {250.0, 400.0}) {
        double inc = moment::derivative_main_term(t, w, 2.0 * X) / (2.0 * X) -
                     moment::derivative_main_term(t, w, X) / X;
        CHECK(std::abs(inc - c * std::log(2.0)) < 1e-10);
    }
}

TEST_CASE("moment run is deterministic and worker-count independent") {
    auto t = testutil::table(12, 1000000);
    auto rq = small_request();
    rq.workers = 1;
    auto a = moment::run_moment(t, rq);
    rq.workers = 3;
    auto b = moment::run_moment(t, rq);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].M == b.rows[i].M);  // bit-exact
        CHECK(a.rows[i].MT == b.rows[i].MT);
        CHECK(a.rows[i].d_count == b.rows[i].d_count);
    }
}

TEST_CASE("brute moment row equals a hand-rolled d-sum at tiny X") {
    auto t = testutil::table(12, 1000000);
    auto rq = small_request();
    rq.x_grid = {40.0};
    auto rep = moment::run_moment(t, rq);
    REQUIRE(rep.rows.size() == 1);
    // recompute directly with central_value_direct
    cplx acc = 0.0;
    u64 count = 0;
    arith::SquarefreeStream(41, 79, true).for_each([&](u64 d) {
        auto v = lfun::central_value_direct(t, {d, cplx(0.0), 12}, 1e-10);
        acc += (double)arith::kronecker((i64)(8 * d), 1) * v.value *
               rq.window((double)d / 40.0);
        ++count;
    });
    CHECK(rep.rows[0].d_count == count);
    CHECK(std::abs(rep.rows[0].M - acc) < 1e-8 * std::abs(acc));
}

TEST_CASE("CSV output: fixed header, stable formatting") {
    auto t = testutil::table(12, 1000000);
    auto rq = small_request();
    rq.x_grid = {40.0, 80.0, 160.0};
    auto rep = moment::run_moment(t, rq);
    std::ostringstream a, b;
    moment::write_csv(a, rep);
    moment::write_csv(b, rep);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# qtml v1");
    std::getline(in, line);
    CHECK(line == "X,M,MT,R,R_norm");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("residual analysis recovers a planted decay exponent") {
    moment::MomentReport rep;
    for (double X : {100.0, 200.0, 400.0, 800.0, 1600.0}) {
        moment::MomentRow row;
        row.X = X;
        row.MT = X;
        row.R = std::pow(X, 0.5);
        row.M = row.MT + row.R;
        row.R_norm = row.R / std::sqrt(X);
        row.tail_bound = 1e-12;
        rep.rows.push_back(row);
    }
    auto fit = moment::residual_analysis(rep);
    REQUIRE(fit.slope_defined);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(fit.slope_lo <= 0.5);
    CHECK(fit.slope_hi >= 0.5);
    CHECK(fit.rnorm_ratio == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("residual analysis flags rows at the noise floor") {
    moment::MomentReport rep;
    for (double X : {100.0, 200.0, 400.0}) {
        moment::MomentRow row;
        row.X = X;
        row.MT = X;
        row.R = 1e-15;
        row.M = row.MT;
        row.R_norm = row.R / std::sqrt(X);
        row.tail_bound = 1e-9;
        rep.rows.push_back(row);
    }
    auto fit = moment::residual_analysis(rep);
    CHECK(!fit.slope_defined);
    CHECK(!fit.flags.empty());
}

TEST_CASE("compensated summation beats naive accumulation") {
    std::vector<cplx> v(100000, cplx(0.1, -0.1));
    cplx s = moment::detail::kahan_sum(v);
    CHECK(std::abs(s.real() - 10000.0) < 1e-10);
    CHECK(std::abs(s.imag() + 10000.0) < 1e-10);
}
