// qtml: quadratic-twist moment laboratory.
//
// Subcommands:
//   coeffs    build / verify the eigenform coefficient cache
//   verify    run an identity-verification suite
//   moment    brute-force moment sweep vs predicted main term
//   constants print the moment constants with convergence diagnostics
//
// Exit codes: 0 success, 1 verification failure, 2 usage/config error,
// 3 environment (disk/cache) error.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qtml/arith.hpp"
#include "qtml/eigenform.hpp"
#include "qtml/euler.hpp"
#include "qtml/gauss.hpp"
#include "qtml/kernel.hpp"
#include "qtml/lfun.hpp"
#include "qtml/moment.hpp"
#include "qtml/special.hpp"
#include "qtml/window.hpp"

namespace {

using cplx = std::complex<double>;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitEnv = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EnvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VerifyFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    int weight = 12;
    u64 ell = 1;
    double alpha_re = 0.0;
    double alpha_im = 0.0;
    std::vector<double> x_grid = {250.0, 500.0, 1000.0, 2000.0};
    std::string window = "default";
    std::string g_variant = "narrow";
    u64 prime_cutoff = 100000;
    unsigned accel_depth = 0;
    unsigned workers = 1;
    std::string cache_dir = "qtml_cache";
    std::string out;
    u64 seed = 20260823;
    bool derivative = false;
};

std::string grid_to_string(const std::vector<double>& g) {
    std::ostringstream os;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i) os << ',';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.10g", g[i]);
        os << buf;
    }
    return os.str();
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> g;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        double v = std::stod(item, &pos);
        if (pos != item.size())
            throw UsageError("bad x-grid entry: " + item);
        g.push_back(v);
    }
    if (g.empty()) throw UsageError("empty x-grid");
    return g;
}

void emit_config(std::ostream& os, const RunConfig& c) {
    os << "weight=" << c.weight << "\n";
    os << "ell=" << c.ell << "\n";
    os << "alpha_re=" << c.alpha_re << "\n";
    os << "alpha_im=" << c.alpha_im << "\n";
    os << "x_grid=" << grid_to_string(c.x_grid) << "\n";
    os << "window=" << c.window << "\n";
    os << "g_variant=" << c.g_variant << "\n";
    os << "prime_cutoff=" << c.prime_cutoff << "\n";
    os << "accel_depth=" << c.accel_depth << "\n";
    os << "workers=" << c.workers << "\n";
    os << "cache_dir=" << c.cache_dir << "\n";
    os << "out=" << c.out << "\n";
    os << "seed=" << c.seed << "\n";
    os << "derivative=" << (c.derivative ? 1 : 0) << "\n";
}

void apply_config_line(RunConfig& c, const std::string& key,
                       const std::string& val) {
    try {
        if (key == "weight") c.weight = std::stoi(val);
        else if (key == "ell") c.ell = std::stoull(val);
        else if (key == "alpha_re") c.alpha_re = std::stod(val);
        else if (key == "alpha_im") c.alpha_im = std::stod(val);
        else if (key == "x_grid") c.x_grid = parse_grid(val);
        else if (key == "window") c.window = val;
        else if (key == "g_variant") c.g_variant = val;
        else if (key == "prime_cutoff") c.prime_cutoff = std::stoull(val);
        else if (key == "accel_depth") c.accel_depth = (unsigned)std::stoul(val);
        else if (key == "workers") c.workers = (unsigned)std::stoul(val);
        else if (key == "cache_dir") c.cache_dir = val;
        else if (key == "out") c.out = val;
        else if (key == "seed") c.seed = std::stoull(val);
        else if (key == "derivative") c.derivative = std::stoi(val) != 0;
        else throw UsageError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw UsageError("bad value for config key " + key + ": " + val);
    }
}

void load_config_file(RunConfig& c, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw EnvError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::size_t h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        auto strip = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            auto e = s.find_last_not_of(" \t\r");
            if (e == std::string::npos) return std::string();
            s.erase(e + 1);
            return s;
        };
        line = strip(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) +
                             ": expected key=value");
        apply_config_line(c, strip(line.substr(0, eq)),
                          strip(line.substr(eq + 1)));
    }
}

qtml::window::WindowSpec make_window(const std::string& tag) {
    if (tag == "default") return qtml::window::default_window();
    throw UsageError("unknown window tag: " + tag + " (supported: default)");
}

// Loads a cached table, refusing corrupted caches; builds on a clean miss.
qtml::eigenform::EigenformTable load_table_checked(int kappa, u64 n_max,
                                                   const std::string& dir) {
    namespace ef = qtml::eigenform;
    std::string path = ef::table_cache_path(dir, kappa, n_max);
    if (std::filesystem::exists(path)) {
        auto t = ef::load_table(path);
        if (!t || t->kappa != kappa || t->n_max != n_max ||
            !ef::integrity_check(*t))
            throw EnvError("coefficient cache failed integrity check: " +
                           path + " (delete the file to rebuild)");
        return *t;
    }
    try {
        return ef::eigenform_table_cached(kappa, n_max, dir);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw EnvError(std::string("cache build failed: ") + e.what());
    }
}

// ---------------------------------------------------------------- coeffs ---

int cmd_coeffs(const RunConfig& cfg, u64 n_max) {
    auto t = load_table_checked(cfg.weight, n_max, cfg.cache_dir);
    std::string path =
        qtml::eigenform::table_cache_path(cfg.cache_dir, cfg.weight, n_max);
    std::printf("weight       %d\n", t.kappa);
    std::printf("n_max        %llu\n", (unsigned long long)t.n_max);
    std::printf("checksum     %llu\n", (unsigned long long)t.checksum);
    std::printf("cache_file   %s\n", path.c_str());
    std::printf("byte_length  %llu\n",
                (unsigned long long)std::filesystem::file_size(path));
    return kExitOk;
}

// ---------------------------------------------------------------- verify ---

struct SuiteResult {
    int cases = 0;
    double max_defect = 0.0;
    double tolerance = 0.0;
    bool pass() const { return max_defect < tolerance; }
};

void report_case(const char* what, double defect) {
    std::printf("  %-44s defect %.3e\n", what, defect);
}

SuiteResult suite_gauss(u64 seed) {
    SuiteResult r;
    r.tolerance = 1e-8;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<i64> pick_k(-60, 60);
    std::uniform_int_distribution<u64> pick_n(0, 250);
    for (int i = 0; i < 400; ++i) {
        i64 k = pick_k(rng);
        u64 n = 2 * pick_n(rng) + 1;
        double d = std::abs(qtml::gauss::gauss_sum(k, n).value -
                            qtml::gauss::gauss_sum_brute(k, n));
        r.max_defect = std::max(r.max_defect, d);
        ++r.cases;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "closed form vs brute (%d cases)", r.cases);
    report_case(buf, r.max_defect);
    return r;
}

SuiteResult suite_poisson(const qtml::window::WindowSpec& w) {
    SuiteResult r;
    r.tolerance = 1e-6;
    for (u64 n : {1ull, 3ull, 15ull, 105ull}) {
        for (double Z : {50.0, 200.0}) {
            int K = std::max(20, (int)(90.0 * (double)n / Z) + 1);
            auto pc = qtml::gauss::poisson_check(w, n, Z, K);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "poisson n=%llu Z=%.0f",
                          (unsigned long long)n, Z);
            report_case(buf, pc.defect);
            r.max_defect = std::max(r.max_defect, pc.defect);
            ++r.cases;
        }
    }
    return r;
}

SuiteResult suite_afe(const RunConfig& cfg) {
    namespace lf = qtml::lfun;
    SuiteResult r;
    r.tolerance = 1e-7;  // FE residual bound; variant agreement is tighter
    auto t12 = load_table_checked(12, 1000000, cfg.cache_dir);
    for (u64 d : {1ull, 5ull}) {
        for (double a : {0.0, 0.02}) {
            lf::TwistPoint pt{d, cplx(a, 0.0), 12};
            auto narrow = lf::central_value_direct(t12, pt, 1e-9);
            double q = 8.0 * (double)d;
            auto tr = lf::detail::afe_truncation(12, pt.alpha,
                                                 qtml::kernel::GTag::simple, q,
                                                 0.5e-9);
            auto cp = qtml::kernel::build_kernel_cache(
                12, pt.alpha, qtml::kernel::GTag::simple, 1e-5,
                1.3 * (double)tr.n_stop / q, 1e-12);
            auto cm = qtml::kernel::build_kernel_cache(
                12, -pt.alpha, qtml::kernel::GTag::simple, 1e-5,
                1.3 * (double)tr.n_stop / q, 1e-12);
            auto simple = lf::central_value(t12, cp, cm, pt, 1e-9);
            double rel = std::abs(simple.value - narrow.value) /
                         std::abs(narrow.value);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "G-variant d=%llu alpha=%.2f",
                          (unsigned long long)d, a);
            report_case(buf, rel);
            r.max_defect = std::max(r.max_defect, rel);
            ++r.cases;
        }
    }
    // functional equation: L(1/2+a) = rf(a) L(1/2-a)
    for (u64 d : {1ull, 5ull, 13ull, 29ull}) {
        cplx a(0.02, 0.0);
        auto lp = lf::central_value_direct(t12, {d, a, 12}, 1e-10);
        auto lm = lf::central_value_direct(t12, {d, -a, 12}, 1e-10);
        double res = std::abs(lp.value - lf::root_factor(12, a, d) * lm.value);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "FE residual d=%llu",
                      (unsigned long long)d);
        report_case(buf, res);
        r.max_defect = std::max(r.max_defect, res);
        ++r.cases;
    }
    // odd sign forces vanishing at the center for weight 2 mod 4
    auto t18 = load_table_checked(18, 100000, cfg.cache_dir);
    for (u64 d : {1ull, 3ull, 5ull, 7ull, 11ull}) {
        auto lv = lf::central_value_direct(t18, {d, cplx(0.0), 18}, 1e-9);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "forced zero d=%llu",
                      (unsigned long long)d);
        report_case(buf, std::abs(lv.value));
        r.max_defect = std::max(r.max_defect, std::abs(lv.value));
        ++r.cases;
    }
    return r;
}

SuiteResult suite_local(const RunConfig& cfg, u64 seed) {
    SuiteResult r;
    r.tolerance = 1e-10;
    auto t = load_table_checked(12, 100000, cfg.cache_dir);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<u64> pick_c(1, 10000);
    std::uniform_int_distribution<i64> pick_k(-50, 50);
    std::uniform_real_distribution<double> pick_re(0.55, 1.0),
        pick_im(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        u64 c = pick_c(rng);
        i64 k = pick_k(rng);
        if (k == 0) k = 1;
        i64 d1 = qtml::euler::detail::fundamental_part(k).first;
        double dd = qtml::euler::local_inversion_check(
            t, c, d1, cplx(pick_re(rng), pick_im(rng)));
        r.max_defect = std::max(r.max_defect, dd);
        ++r.cases;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "Moebius inversion (%d cases)", r.cases);
    report_case(buf, r.max_defect);
    return r;
}

SuiteResult suite_z1(const RunConfig& cfg) {
    SuiteResult r;
    r.tolerance = 1e-5;
    auto t = load_table_checked(12, 1000000, cfg.cache_dir);
    for (u64 ell : {1ull, 3ull, 45ull}) {
        for (u64 a : {1ull, 5ull}) {
            if (std::gcd(a, 2 * ell) != 1) continue;
            qtml::euler::EulerContext ctx(t, ell, 100000);
            auto z = qtml::euler::Z1_series_vs_product(ctx, a, cplx(0.6, 0.0),
                                                       1000000);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "Z1 ell=%llu a=%llu",
                          (unsigned long long)ell, (unsigned long long)a);
            report_case(buf, z.defect);
            r.max_defect = std::max(r.max_defect, z.defect);
            ++r.cases;
        }
    }
    return r;
}

SuiteResult suite_z2(const RunConfig& cfg) {
    SuiteResult r;
    r.tolerance = 1e-4;
    auto t = load_table_checked(12, 1000000, cfg.cache_dir);
    for (i64 k : {1ll, 2ll, 3ll, 5ll, -1ll}) {
        for (u64 ell : {1ull, 9ull, 45ull}) {
            auto z = qtml::euler::Z2_factorization_check(
                t, 1, k, ell, cplx(0.75, 0.0), 1000000, 1000000, 10000);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "Z2 k=%lld ell=%llu",
                          (long long)k, (unsigned long long)ell);
            report_case(buf, z.defect);
            r.max_defect = std::max(r.max_defect, z.defect);
            ++r.cases;
        }
    }
    return r;
}

SuiteResult suite_complic(const RunConfig& cfg) {
    SuiteResult r;
    r.tolerance = 1e-12;
    auto t = load_table_checked(12, 100000, cfg.cache_dir);
    const auto& primes = qtml::arith::prime_sieve::instance().primes();
    for (u64 p : primes) {
        if (p > 100) break;
        if (p == 2) continue;
        for (double g : {0.3, 0.7}) {
            for (bool adiv : {false, true}) {
                double d = qtml::euler::complic_local_check(t, p, adiv,
                                                            cplx(g, 0.0));
                r.max_defect = std::max(r.max_defect, d);
                ++r.cases;
            }
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "per-prime H-sum identity (%d cases)",
                  r.cases);
    report_case(buf, r.max_defect);
    return r;
}

SuiteResult suite_zn(const RunConfig& cfg) {
    SuiteResult r;
    r.tolerance = 1e-6;
    auto t = load_table_checked(12, 1000000, cfg.cache_dir);
    for (u64 ell : {1ull, 45ull}) {
        qtml::euler::EulerContext ctx(t, ell, 100000);
        cplx ref = qtml::euler::Z_product(ctx, cplx(0.0));
        for (unsigned N : {0u, 1u, 2u}) {
            double d =
                std::abs(qtml::euler::ZN_accelerated(ctx, cplx(0.0), N) - ref);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "Z^N ell=%llu N=%u",
                          (unsigned long long)ell, N);
            report_case(buf, d);
            r.max_defect = std::max(r.max_defect, d);
            ++r.cases;
        }
    }
    // raw-cutoff requirement per depth (documented, not gated)
    {
        qtml::euler::EulerContext ctx(t, 1, 400000);
        cplx ref = qtml::euler::Z_product(ctx, cplx(0.0));
        for (unsigned N : {0u, 1u, 2u}) {
            u64 last_bad = 0;
            for (u64 P = 100; P <= 400000; P = (u64)(P * 1.15) + 1) {
                cplx v = qtml::euler::Z_product_raw(ctx, cplx(0.0), N, P);
                if (std::abs(v - ref) >= 1e-6) last_bad = P;
            }
            std::printf("  cutoff for 1e-6 at depth N=%u: P > %llu\n", N,
                        (unsigned long long)last_bad);
        }
    }
    return r;
}

int cmd_verify(const RunConfig& cfg, const std::string& suite) {
    auto w = make_window(cfg.window);
    SuiteResult r;
    std::printf("suite %s\n", suite.c_str());
    if (suite == "gauss") r = suite_gauss(cfg.seed);
    else if (suite == "poisson") r = suite_poisson(w);
    else if (suite == "afe") r = suite_afe(cfg);
    else if (suite == "local") r = suite_local(cfg, cfg.seed);
    else if (suite == "z1") r = suite_z1(cfg);
    else if (suite == "z2") r = suite_z2(cfg);
    else if (suite == "complic") r = suite_complic(cfg);
    else if (suite == "zn") r = suite_zn(cfg);
    else
        throw UsageError(
            "unknown suite: " + suite +
            " (choose gauss|poisson|afe|local|z1|z2|complic|zn)");
    std::printf("%s: %d cases, max defect %.3e (tolerance %.0e)\n",
                r.pass() ? "PASS" : "FAIL", r.cases, r.max_defect,
                r.tolerance);
    return r.pass() ? kExitOk : kExitVerifyFail;
}

// ---------------------------------------------------------------- moment ---

json report_to_json(const RunConfig& cfg, const qtml::moment::MomentReport& rep) {
    json rows = json::array();
    for (const auto& row : rep.rows) {
        rows.push_back({{"X", row.X},
                        {"M_re", row.M.real()},
                        {"M_im", row.M.imag()},
                        {"MT_re", row.MT.real()},
                        {"MT_im", row.MT.imag()},
                        {"R_re", row.R.real()},
                        {"R_im", row.R.imag()},
                        {"R_norm_re", row.R_norm.real()},
                        {"R_norm_im", row.R_norm.imag()},
                        {"tail_bound", row.tail_bound},
                        {"d_count", row.d_count}});
    }
    std::ostringstream cfgs;
    emit_config(cfgs, cfg);
    return json{{"format", "qtml v1"},
                {"config", cfgs.str()},
                {"weight", rep.kappa},
                {"ell", rep.ell},
                {"alpha_re", rep.alpha.real()},
                {"alpha_im", rep.alpha.imag()},
                {"derivative", rep.derivative},
                {"g_variant", qtml::kernel::gtag_name(rep.g_tag)},
                {"prime_cutoff", rep.prime_cutoff},
                {"accel_depth", rep.accel_depth},
                {"tol", rep.tol},
                {"rows", rows},
                {"fit",
                 {{"slope_defined", rep.fit.slope_defined},
                  {"slope_lo", rep.fit.slope_lo},
                  {"slope_hi", rep.fit.slope_hi},
                  {"slope", rep.fit.slope},
                  {"rnorm_ratio", rep.fit.rnorm_ratio},
                  {"flags", rep.fit.flags}}}};
}

int cmd_moment(const RunConfig& cfg) {
    namespace mo = qtml::moment;
    mo::MomentRequest rq;
    rq.kappa = cfg.weight;
    rq.ell = cfg.ell;
    rq.alpha = cplx(cfg.alpha_re, cfg.alpha_im);
    rq.x_grid = cfg.x_grid;
    rq.window = make_window(cfg.window);
    rq.derivative = cfg.derivative;
    rq.g_tag = qtml::kernel::parse_gtag(cfg.g_variant);
    rq.prime_cutoff = cfg.prime_cutoff;
    rq.accel_depth = cfg.accel_depth;
    rq.workers = cfg.workers;
    try {
        mo::validate_request(rq);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    // table length: AFE truncation at the largest conductor in the sweep
    double q_max = 8.0 * std::ceil(rq.window.x_hi * rq.x_grid.back());
    auto tr = qtml::lfun::detail::afe_truncation(
        rq.kappa, rq.alpha, rq.derivative ? qtml::kernel::GTag::narrow : rq.g_tag,
        q_max, 0.5 * rq.tol);
    u64 need = (u64)(1.05 * (double)tr.n_stop) + 16;
    if (need > 30000000)
        throw UsageError(
            "requested sweep needs " + std::to_string(need) +
            " coefficients; shrink the X grid or use g_variant=narrow");
    u64 n_max = 125000;
    while (n_max < need) n_max *= 2;
    if (std::max(rq.prime_cutoff, (u64)200000) > n_max)
        n_max = std::max(rq.prime_cutoff, (u64)200000);
    auto t = load_table_checked(cfg.weight, n_max, cfg.cache_dir);

    auto rep = mo::run_moment(t, rq);

    std::printf("# %s moment, weight %d, ell %llu, alpha %.6g%+.6gi\n",
                rq.derivative ? "derivative" : "central", rq.kappa,
                (unsigned long long)rq.ell, rq.alpha.real(), rq.alpha.imag());
    std::printf("%10s %14s %14s %12s %12s\n", "X", "M", "MT", "R", "R/sqrtX");
    for (const auto& row : rep.rows)
        std::printf("%10.0f %14.8f %14.8f %12.4e %12.4e\n", row.X,
                    row.M.real(), row.MT.real(), row.R.real(),
                    row.R_norm.real());
    if (rep.fit.slope_defined)
        std::printf(
            "log-log residual slope %.4f (95%% band [%.4f, %.4f]), "
            "R_norm spread x%.2f\n",
            rep.fit.slope, rep.fit.slope_lo, rep.fit.slope_hi,
            rep.fit.rnorm_ratio);
    for (const auto& f : rep.fit.flags) std::printf("note: %s\n", f.c_str());

    if (!cfg.out.empty()) {
        std::ofstream csv(cfg.out + ".csv");
        if (!csv) throw EnvError("cannot write " + cfg.out + ".csv");
        mo::write_csv(csv, rep);
        std::ofstream js(cfg.out + ".json");
        if (!js) throw EnvError("cannot write " + cfg.out + ".json");
        js << report_to_json(cfg, rep).dump(2) << "\n";
        std::printf("wrote %s.csv and %s.json\n", cfg.out.c_str(),
                    cfg.out.c_str());
    } else {
        mo::write_csv(std::cout, rep);
    }
    return kExitOk;
}

// ------------------------------------------------------------- constants ---

int cmd_constants(const RunConfig& cfg) {
    namespace eu = qtml::euler;
    auto w = make_window(cfg.window);
    u64 n_max = std::max<u64>(cfg.prime_cutoff, 200000);
    auto t = load_table_checked(cfg.weight, n_max, cfg.cache_dir);
    eu::EulerContext ctx(t, 1, cfg.prime_cutoff);

    double pi = qtml::moment::pi;
    cplx ph1 = qtml::window::mellin(w, 1.0);
    cplx phd = qtml::window::mellin_derivative(w, 1.0);
    auto L1 = eu::sym_square_L_full(t, 1.0, eu::SymSquareMethod::smoothed_series);
    double Ld = eu::sym_square_L_derivative(t, 1.0);
    auto z0 = eu::Z_product_info(ctx, cplx(0.0));
    double zd = eu::Z_star_derivative(t, cfg.prime_cutoff);
    double zd2 = eu::Z_star_derivative_complex_step(
        t, std::min<u64>(cfg.prime_cutoff, 10000));
    double psik =
        qtml::special::digamma(cplx(0.5 * cfg.weight, 0.0)).real();

    std::printf("weight                         %d\n", cfg.weight);
    std::printf("PhiTilde(1)                    %.12f\n", ph1.real());
    std::printf("PhiTilde'(1)/PhiTilde(1)       %.12f\n",
                (phd / ph1).real());
    std::printf("L(1, sym2 f)                   %.12f   (series err est %.1e)\n",
                L1.value, L1.err_estimate);
    std::printf("L'(1, sym2 f)                  %.12f\n", Ld);
    std::printf("Z*(0)                          %.12f   (tail est %.1e)\n",
                z0.value.real(), z0.tail_estimate);
    std::printf("Z*'(0)/Z*(0)                   %.12f   (complex-step %.10f)\n",
                zd, zd2);
    std::printf("digamma(kappa/2)               %.12f\n", psik);
    std::printf("8/pi^2                         %.12f\n", 8.0 / (pi * pi));
    std::printf("main-term constant 8Phi L Z/pi2 %.12f\n",
                8.0 * ph1.real() / (pi * pi) * L1.value * z0.value.real());
    if (cfg.ell != 1) {
        eu::EulerContext ctxl(t, cfg.ell, cfg.prime_cutoff);
        // Z(1/2, ell)/Z(1/2, 1): the sym^2 normalization cancels in the ratio
        cplx zl = eu::Z_product(ctxl, cplx(0.0));
        std::printf("Z(1/2, %llu)/Z(1/2, 1)          %.12f\n",
                    (unsigned long long)cfg.ell,
                    (zl / z0.value).real());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadratic-twist moment laboratory"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_file, emit_path, suite = "gauss";
    u64 coeffs_n_max = 100000;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "key=value config file");
        sub->add_option("--emit-config", emit_path,
                        "write the effective config to this path");
        sub->add_option("--weight", cfg.weight, "modular form weight");
        sub->add_option("--ell", cfg.ell, "odd twist parameter ell");
        sub->add_option("--alpha-re", cfg.alpha_re, "Re alpha");
        sub->add_option("--alpha-im", cfg.alpha_im, "Im alpha");
        sub->add_option_function<std::string>(
            "--x-grid",
            [&cfg](const std::string& s) { cfg.x_grid = parse_grid(s); },
            "comma-separated X grid");
        sub->add_option("--window", cfg.window, "window tag");
        sub->add_option("--g-variant", cfg.g_variant,
                        "AFE damping (simple|zeta_damped|narrow)");
        sub->add_option("--prime-cutoff", cfg.prime_cutoff,
                        "Euler product prime cutoff");
        sub->add_option("--accel-depth", cfg.accel_depth,
                        "Z^N acceleration depth");
        sub->add_option("--workers", cfg.workers, "worker thread count");
        sub->add_option("--cache-dir", cfg.cache_dir,
                        "coefficient cache directory");
        sub->add_option("--out", cfg.out, "output base path (csv+json)");
        sub->add_option("--seed", cfg.seed, "seed for randomized suites");
        sub->add_flag("--derivative", cfg.derivative,
                      "first-derivative moment (weight 2 mod 4)");
    };

    auto* sc = app.add_subcommand("coeffs", "build/inspect coefficient cache");
    add_common(sc);
    sc->add_option("--n-max", coeffs_n_max, "coefficients to tabulate");

    auto* sv = app.add_subcommand("verify", "run a verification suite");
    add_common(sv);
    sv->add_option("--suite", suite,
                   "gauss|poisson|afe|local|z1|z2|complic|zn");

    auto* sm = app.add_subcommand("moment", "moment sweep vs main term");
    add_common(sm);

    auto* sk = app.add_subcommand("constants", "print moment constants");
    add_common(sk);

    try {
        // two-phase parse: config file first, then flag overrides
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            return app.exit(e) == 0 ? kExitOk : kExitUsage;
        }
        if (!config_file.empty()) {
            RunConfig base;
            load_config_file(base, config_file);
            // re-apply command line on top of the file-provided defaults
            cfg = base;
            std::vector<const char*> args(argv, argv + argc);
            CLI::App app2{"override pass"};
            app2.require_subcommand(1);
            std::string cf2, ep2, suite2 = suite;
            u64 nm2 = coeffs_n_max;
            auto add2 = [&](CLI::App* sub) {
                sub->add_option("--config", cf2);
                sub->add_option("--emit-config", ep2);
                sub->add_option("--weight", cfg.weight);
                sub->add_option("--ell", cfg.ell);
                sub->add_option("--alpha-re", cfg.alpha_re);
                sub->add_option("--alpha-im", cfg.alpha_im);
                sub->add_option_function<std::string>(
                    "--x-grid",
                    [&cfg](const std::string& s) { cfg.x_grid = parse_grid(s); });
                sub->add_option("--window", cfg.window);
                sub->add_option("--g-variant", cfg.g_variant);
                sub->add_option("--prime-cutoff", cfg.prime_cutoff);
                sub->add_option("--accel-depth", cfg.accel_depth);
                sub->add_option("--workers", cfg.workers);
                sub->add_option("--cache-dir", cfg.cache_dir);
                sub->add_option("--out", cfg.out);
                sub->add_option("--seed", cfg.seed);
                sub->add_flag("--derivative", cfg.derivative);
            };
            auto* c2 = app2.add_subcommand("coeffs");
            add2(c2);
            c2->add_option("--n-max", nm2);
            auto* v2 = app2.add_subcommand("verify");
            add2(v2);
            v2->add_option("--suite", suite2);
            add2(app2.add_subcommand("moment"));
            add2(app2.add_subcommand("constants"));
            app2.parse(argc, argv);
            suite = suite2;
            coeffs_n_max = nm2;
        }
        if (!emit_path.empty()) {
            std::ofstream f(emit_path);
            if (!f) throw EnvError("cannot write config to " + emit_path);
            emit_config(f, cfg);
        }
        if (sc->parsed()) return cmd_coeffs(cfg, coeffs_n_max);
        if (sv->parsed()) return cmd_verify(cfg, suite);
        if (sm->parsed()) return cmd_moment(cfg);
        if (sk->parsed()) return cmd_constants(cfg);
        throw UsageError("no subcommand");
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.get_name().c_str());
        return kExitUsage;
    } catch (const EnvError& e) {
        std::fprintf(stderr, "environment error: %s\n", e.what());
        return kExitEnv;
    } catch (const VerifyFailure& e) {
        std::fprintf(stderr, "verification failure: %s\n", e.what());
        return kExitVerifyFail;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitVerifyFail;
    }
}
