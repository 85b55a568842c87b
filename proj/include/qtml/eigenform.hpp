// Exact generation of normalized Hecke eigenvalues lambda_f(n) for the
// one-dimensional cusp-form spaces of level 1 (weights 12,16,18,20,22,26).
//
// Strategy: eta(q)^3 = sum (-1)^m (2m+1) q^{m(m+1)/2} (sparse), raised to the
// 8th power by sparse-into-dense convolution gives Delta/q; weights > 12
// multiply by the sigma-sieve Eisenstein series, evaluated at prime indices
// only (composites follow from multiplicativity). Hot loops run modulo
// several 62-bit primes and are combined by CRT; a big-integer route covers
// small N for cross-verification.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qtml/arith.hpp"

namespace qtml::eigenform {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using boost::multiprecision::cpp_int;

// 62-bit working moduli (first entries) and the fixed checksum prime (last).
inline constexpr u64 crt_primes[7] = {
    4611686018427387847ull, 4611686018427387817ull, 4611686018427387787ull,
    4611686018427387761ull, 4611686018427387751ull, 4611686018427387737ull,
    4611686018427387733ull};
inline constexpr u64 checksum_prime = 4611686018427387709ull;
inline constexpr u64 checksum_base = 1000003ull;

struct ExactSeries {
    std::vector<cpp_int> c;  // coefficients of q^0 .. q^{N}
    std::size_t order() const { return c.empty() ? 0 : c.size() - 1; }
};

namespace detail {

// sparse terms (exponent, coefficient) of eta(q)^3, exponents <= N
inline std::vector<std::pair<u64, i64>> eta3_sparse(u64 N) {
    std::vector<std::pair<u64, i64>> t;
    for (u64 m = 0;; ++m) {
        u64 e = m * (m + 1) / 2;
        if (e > N) break;
        t.emplace_back(e, (m % 2 ? -1 : 1) * (i64)(2 * m + 1));
    }
    return t;
}

// sparse terms of prod (1-q^n) (Euler pentagonal)
inline std::vector<std::pair<u64, i64>> pentagonal_sparse(u64 N) {
    std::vector<std::pair<u64, i64>> t;
    t.emplace_back(0, 1);
    for (u64 k = 1;; ++k) {
        u64 e1 = k * (3 * k - 1) / 2, e2 = k * (3 * k + 1) / 2;
        if (e1 > N) break;
        i64 s = (k % 2 ? -1 : 1);
        t.emplace_back(e1, s);
        if (e2 <= N) t.emplace_back(e2, s);
    }
    return t;
}

inline u64 powmod(u64 a, u64 e, u64 m) {
    u64 r = 1;
    a %= m;
    while (e) {
        if (e & 1) r = (u128)r * a % m;
        a = (u128)a * a % m;
        e >>= 1;
    }
    return r;
}

// dense *= sparse (small signed coefficients), all mod m; in-place via a
// scratch buffer. Accumulates in 128 bits: |coef| < 2^12, values < 2^62.
inline void sparse_mul_mod(std::vector<u64>& dense,
                           const std::vector<std::pair<u64, i64>>& sparse,
                           u64 m, std::vector<u64>& scratch) {
    const std::size_t N = dense.size();
    scratch.assign(N, 0);
    for (std::size_t n = 0; n < N; ++n) {
        u128 pos = 0, neg = 0;
        for (const auto& [e, co] : sparse) {
            if (e > n) break;
            u64 v = dense[n - e];
            if (co >= 0)
                pos += (u128)v * (u64)co;
            else
                neg += (u128)v * (u64)(-co);
        }
        u64 p = (u64)(pos % m), q = (u64)(neg % m);
        scratch[n] = (p + m - q) % m;
    }
    dense.swap(scratch);
}

// Delta(q)/q mod m to order N-1, i.e. result[j] = a_Delta(j+1) mod m.
inline std::vector<u64> delta_over_q_mod(u64 N, u64 m) {
    auto e3 = eta3_sparse(N);
    std::vector<u64> dense(N, 0), scratch;
    for (const auto& [e, co] : e3)
        if (e < N) dense[e] = co >= 0 ? (u64)co % m : (m - (u64)(-co) % m) % m;
    for (int it = 0; it < 7; ++it) sparse_mul_mod(dense, e3, m, scratch);
    return dense;  // index j holds coefficient of q^j in eta^24 = Delta/q
}

// integer Eisenstein coefficient -2k/B_k
inline i64 eisenstein_constant(int k) {
    switch (k) {
        case 4: return 240;
        case 6: return -504;
        case 8: return 480;
        case 10: return -264;
        case 14: return -24;
    }
    throw std::invalid_argument("eisenstein_series: k must be in {4,6,8,10,14}");
}

// sigma_{k-1}(n) mod m for n <= N (harmonic sieve)
inline std::vector<u64> sigma_sieve_mod(u64 N, int k, u64 m) {
    std::vector<u64> s(N + 1, 0);
    for (u64 d = 1; d <= N; ++d) {
        u64 dk = powmod(d, (u64)(k - 1), m);
        for (u64 n = d; n <= N; n += d) s[n] = (s[n] + dk) % m;
    }
    return s;
}

struct crt_basis {
    std::vector<u64> primes;
    std::vector<cpp_int> prefix;  // prefix[i] = product of primes[0..i-1]
    cpp_int modulus;
};

inline crt_basis make_crt_basis(int count) {
    crt_basis b;
    b.modulus = 1;
    for (int i = 0; i < count; ++i) {
        b.primes.push_back(crt_primes[i]);
        b.prefix.push_back(b.modulus);
        b.modulus *= crt_primes[i];
    }
    return b;
}

// combine residues into the signed representative in (-M/2, M/2)
inline cpp_int crt_combine(const crt_basis& b, const std::vector<u64>& residues) {
    // incremental Garner-style combination
    cpp_int x = 0;
    for (std::size_t i = 0; i < b.primes.size(); ++i) {
        u64 p = b.primes[i];
        // t = (residues[i] - x) / prefix[i] mod p
        u64 cur = (x % p).convert_to<u64>();
        u64 diff = (residues[i] + p - cur) % p;
        u64 pref = (b.prefix[i] % p).convert_to<u64>();
        u64 t = (u128)diff * powmod(pref, p - 2, p) % p;
        x += b.prefix[i] * t;
    }
    if (x * 2 > b.modulus) x -= b.modulus;
    return x;
}

}  // namespace detail

// Exact q-expansion of Delta to order N (big-integer route, small N).
inline ExactSeries delta_series(u64 N, u64 cap = 20000) {
    if (N < 2) throw std::invalid_argument("delta_series: N >= 2 required");
    if (N > cap) throw std::length_error("delta_series: N exceeds memory budget cap");
    auto e3 = detail::eta3_sparse(N);
    std::vector<cpp_int> dense(N, 0), scratch(N);
    for (const auto& [e, co] : e3)
        if (e < N) dense[e] = co;
    for (int it = 0; it < 7; ++it) {
        for (std::size_t n = 0; n < N; ++n) {
            cpp_int acc = 0;
            for (const auto& [e, co] : e3) {
                if (e > n) break;
                acc += co * dense[n - e];
            }
            scratch[n] = acc;
        }
        dense.swap(scratch);
    }
    ExactSeries s;
    s.c.assign(N + 1, 0);
    for (u64 j = 0; j + 1 <= N; ++j) s.c[j + 1] = dense[j];
    return s;
}

// prod_{n>=1} (1-q^n) to order N, exact (pentagonal support).
inline ExactSeries pentagonal_series(u64 N) {
    ExactSeries s;
    s.c.assign(N + 1, 0);
    for (const auto& [e, co] : detail::pentagonal_sparse(N)) s.c[e] = co;
    return s;
}

// E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n, exact integers.
inline ExactSeries eisenstein_series(int k, u64 N) {
    i64 c = detail::eisenstein_constant(k);
    ExactSeries s;
    s.c.assign(N + 1, 0);
    s.c[0] = 1;
    std::vector<cpp_int> sig(N + 1, 0);
    for (u64 d = 1; d <= N; ++d) {
        cpp_int dk = 1;
        for (int i = 0; i < k - 1; ++i) dk *= d;
        for (u64 n = d; n <= N; n += d) sig[n] += dk;
    }
    for (u64 n = 1; n <= N; ++n) s.c[n] = c * sig[n];
    return s;
}

// exact product of two series, truncated to min order
inline ExactSeries multiply(const ExactSeries& a, const ExactSeries& b) {
    std::size_t N = std::min(a.order(), b.order());
    ExactSeries r;
    r.c.assign(N + 1, 0);
    for (std::size_t i = 0; i <= N; ++i) {
        if (a.c[i] == 0) continue;
        for (std::size_t j = 0; i + j <= N; ++j)
            if (b.c[j] != 0) r.c[i + j] += a.c[i] * b.c[j];
    }
    return r;
}

// polynomial-hash checksum of the exact coefficient vector a(1..N)
inline u64 series_checksum(const std::vector<cpp_int>& a1toN) {
    const u64 P = checksum_prime;
    u64 h = 0, rp = checksum_base;
    for (const auto& v : a1toN) {
        cpp_int r = v % P;
        if (r < 0) r += P;
        h = (h + (u128)r.convert_to<u64>() * rp) % P;
        rp = (u128)rp * checksum_base % P;
    }
    return h;
}

struct EigenformTable {
    int kappa = 12;
    u64 n_max = 0;
    std::vector<double> lam;  // lam[n-1] = lambda(n)
    u64 checksum = 0;

    double lambda(u64 n) const {
        if (n == 0 || n > n_max)
            throw std::out_of_range("EigenformTable::lambda: index out of range");
        return lam[n - 1];
    }
};

inline bool weight_supported(int kappa) {
    return kappa == 12 || kappa == 16 || kappa == 18 || kappa == 20 ||
           kappa == 22 || kappa == 26;
}

// lambda(p^r) by the Hecke two-term recursion from table values.
inline double hecke_extend(const EigenformTable& t, u64 p, int r) {
    if (r < 0) throw std::invalid_argument("hecke_extend: r >= 0");
    if (r == 0) return 1.0;
    double lp = t.lambda(p);
    if (r == 1) return lp;
    double prev = 1.0, cur = lp;
    for (int i = 1; i < r; ++i) {
        double next = lp * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

inline EigenformTable eigenform_table(int kappa, u64 n_max) {
    if (!weight_supported(kappa))
        throw std::invalid_argument("eigenform_table: weight not in {12,16,18,20,22,26}");
    if (n_max < 1) throw std::invalid_argument("eigenform_table: N_max >= 1");
    const u64 N = n_max;

    // how many 62-bit moduli for |a(n)| <= d(n) n^{(kappa-1)/2}
    double bits = 0.5 * (kappa - 1) * std::log2((double)std::max<u64>(N, 2)) + 40.0;
    int K = (int)(bits / 61.0) + 1;
    if (K > 7) throw std::length_error("eigenform_table: N_max too large for CRT basis");
    auto basis = detail::make_crt_basis(K);

    // local smallest-prime-factor sieve
    std::vector<u32> spf(N + 1, 0);
    for (u64 i = 2; i <= N; ++i) {
        if (spf[i] == 0)
            for (u64 j = i; j <= N; j += i)
                if (spf[j] == 0) spf[j] = (u32)i;
    }
    std::vector<u64> primes;
    for (u64 i = 2; i <= N; ++i)
        if (spf[i] == i) primes.push_back(i);

    // residues of a(p) per modulus (CRT moduli plus checksum modulus)
    std::vector<u64> moduli(basis.primes);
    moduli.push_back(checksum_prime);
    std::vector<std::vector<u64>> ap_res(moduli.size());
    auto work = [&](std::size_t mi) {
        const u64 m = moduli[mi];
        auto dq = detail::delta_over_q_mod(N, m);  // dq[j] = a_Delta(j+1) mod m
        ap_res[mi].resize(primes.size());
        if (kappa == 12) {
            for (std::size_t pi = 0; pi < primes.size(); ++pi)
                ap_res[mi][pi] = dq[primes[pi] - 1];
        } else {
            const int k = kappa - 12;
            i64 ec = detail::eisenstein_constant(k);
            u64 ecm = ec >= 0 ? (u64)ec % m : (m - (u64)(-ec) % m) % m;
            auto sig = detail::sigma_sieve_mod(N, k, m);
            std::vector<u64> esig(N + 1);  // ec * sigma_{k-1}(n) mod m
            esig[0] = 0;
            for (u64 n = 1; n <= N; ++n) esig[n] = (u128)ecm * sig[n] % m;
            for (std::size_t pi = 0; pi < primes.size(); ++pi) {
                const u64 p = primes[pi];
                // a(p) = a_Delta(p) + sum_{j=1}^{p-1} esig[j] a_Delta(p-j)
                u128 acc = dq[p - 1];
                int chunk = 0;
                for (u64 j = 1; j < p; ++j) {
                    acc += (u128)esig[j] * dq[p - j - 1];
                    if (++chunk == 8) {
                        acc %= m;
                        chunk = 0;
                    }
                }
                ap_res[mi][pi] = (u64)(acc % m);
            }
        }
    };
    {
        // moduli are independent; results are bitwise deterministic regardless
        // of scheduling
        unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        std::size_t nthreads = std::min<std::size_t>(hw, moduli.size());
        if (nthreads <= 1) {
            for (std::size_t mi = 0; mi < moduli.size(); ++mi) work(mi);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            for (std::size_t i = 0; i < nthreads; ++i)
                pool.emplace_back([&] {
                    for (std::size_t mi; (mi = next.fetch_add(1)) < moduli.size();)
                        work(mi);
                });
            for (auto& th : pool) th.join();
        }
    }

    // exact a(p) by CRT -> lambda(p), Deligne-checked
    const double half = 0.5 * (kappa - 1);
    std::vector<double> lam_p(primes.size());
    std::vector<u64> res(K);
    for (std::size_t pi = 0; pi < primes.size(); ++pi) {
        for (int i = 0; i < K; ++i) res[i] = ap_res[i][pi];
        cpp_int ap = detail::crt_combine(basis, res);
        double l = ap.convert_to<double>() / std::pow((double)primes[pi], half);
        if (std::abs(l) > 2.0 + 1e-9)
            throw std::runtime_error("eigenform_table: Deligne bound violated (CRT defect?)");
        lam_p[pi] = l;
    }

    EigenformTable t;
    t.kappa = kappa;
    t.n_max = N;
    t.lam.assign(N, 0.0);
    t.lam[0] = 1.0;

    // lambda at prime powers by Hecke recursion, composites multiplicatively
    std::map<u64, double> lam_pp;  // p^r -> lambda(p^r), r >= 1
    for (std::size_t pi = 0; pi < primes.size(); ++pi) {
        u64 p = primes[pi];
        double lp = lam_p[pi], prev = 1.0, cur = lp;
        for (u64 q = p;; ) {
            lam_pp[q] = cur;
            if (q > N / p) break;
            q *= p;
            double next = lp * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    for (u64 n = 2; n <= N; ++n) {
        u64 p = spf[n], q = p, rest = n / p;
        while (rest % p == 0) {
            rest /= p;
            q *= p;
        }
        t.lam[n - 1] = (rest == 1) ? lam_pp[q] : lam_pp[q] * t.lam[rest - 1];
    }

    // checksum over exact a(n) mod checksum_prime, all n, via integer
    // recursions in the residue field
    {
        const u64 P = checksum_prime;
        const auto& apP = ap_res.back();
        std::vector<u64> aP(N + 1, 0);
        aP[1] = 1 % P;
        std::map<u64, u64> app;  // prime power -> a mod P
        for (std::size_t pi = 0; pi < primes.size(); ++pi) {
            u64 p = primes[pi];
            u64 pk = detail::powmod(p, (u64)(kappa - 1), P);
            u64 prev = 1, cur = apP[pi];
            for (u64 q = p;;) {
                app[q] = cur;
                if (q > N / p) break;
                q *= p;
                u64 next = ((u128)apP[pi] * cur + (u128)(P - prev) * pk) % P;
                prev = cur;
                cur = next;
            }
        }
        for (u64 n = 2; n <= N; ++n) {
            u64 p = spf[n], q = p, rest = n / p;
            while (rest % p == 0) {
                rest /= p;
                q *= p;
            }
            aP[n] = (rest == 1) ? app[q] : (u64)((u128)app[q] * aP[rest] % P);
        }
        u64 h = 0, rp = checksum_base;
        for (u64 n = 1; n <= N; ++n) {
            h = (h + (u128)aP[n] * rp) % P;
            rp = (u128)rp * checksum_base % P;
        }
        t.checksum = h;
    }
    return t;
}

// Exact coefficient vector a(1..N) by the big-integer route (verification).
inline std::vector<cpp_int> exact_coefficients(int kappa, u64 N) {
    if (!weight_supported(kappa))
        throw std::invalid_argument("exact_coefficients: unsupported weight");
    ExactSeries d = delta_series(N);
    ExactSeries f = kappa == 12 ? d : multiply(d, eisenstein_series(kappa - 12, N));
    std::vector<cpp_int> a(f.c.begin() + 1, f.c.end());
    return a;
}

// --- persistent cache -------------------------------------------------------

inline std::string table_cache_path(const std::string& cache_dir, int kappa,
                                    u64 n_max) {
    return cache_dir + "/qtml_k" + std::to_string(kappa) + "_n" +
           std::to_string(n_max) + ".tbl";
}

inline void save_table(const EigenformTable& t, const std::string& path) {
    std::string tmp = path + ".tmp";
    FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw std::runtime_error("save_table: cannot open " + tmp);
    auto put = [&](const void* p, std::size_t n) {
        if (std::fwrite(p, 1, n, f) != n) {
            std::fclose(f);
            throw std::runtime_error("save_table: short write");
        }
    };
    put("QTML", 4);
    u32 version = 1, kap = (u32)t.kappa;
    put(&version, 4);
    put(&kap, 4);
    put(&t.n_max, 8);
    put(&t.checksum, 8);
    put(t.lam.data(), 8 * t.lam.size());
    std::fclose(f);
    std::filesystem::rename(tmp, path);
}

inline std::optional<EigenformTable> load_table(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return std::nullopt;
    auto fail = [&]() {
        std::fclose(f);
        return std::nullopt;
    };
    char magic[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "QTML", 4) != 0)
        return fail();
    u32 version = 0, kap = 0;
    u64 n_max = 0, checksum = 0;
    if (std::fread(&version, 4, 1, f) != 1 || version != 1) return fail();
    if (std::fread(&kap, 4, 1, f) != 1 || !weight_supported((int)kap)) return fail();
    if (std::fread(&n_max, 8, 1, f) != 1 || n_max == 0) return fail();
    if (std::fread(&checksum, 8, 1, f) != 1) return fail();
    EigenformTable t;
    t.kappa = (int)kap;
    t.n_max = n_max;
    t.checksum = checksum;
    t.lam.resize(n_max);
    if (std::fread(t.lam.data(), 8, n_max, f) != n_max) return fail();
    std::fclose(f);
    if (t.lam[0] != 1.0) return std::nullopt;
    return t;
}

// Cheap corruption gate for loaded tables: lambda(1) = 1, Deligne bound
// |lambda(n)| <= tau(n), multiplicativity on coprime pairs, and the
// p-power Hecke relation lambda(p^2) = lambda(p)^2 - 1, all on a fixed
// deterministic sample.  (The stored checksum covers the exact integer
// coefficients and is reproducible only by a full rebuild; this gate is
// the fast-path complement.)
inline bool integrity_check(const EigenformTable& t, u64 samples = 256) {
    if (t.lam.empty() || t.lam[0] != 1.0) return false;
    // full scan against the coarse divisor bound tau(n) <= sqrt(3n)
    for (u64 n = 2; n <= t.n_max; ++n) {
        double l = t.lam[n - 1];
        if (!std::isfinite(l) || l * l > 3.0 * (double)n) return false;
    }
    auto tau = [](u64 n) {
        u64 d = 0;
        for (u64 i = 1; i * i <= n; ++i)
            if (n % i == 0) d += (i * i == n) ? 1 : 2;
        return (double)d;
    };
    std::mt19937_64 rng(0x51a3c0defULL);
    std::uniform_int_distribution<u64> pick(1, t.n_max);
    for (u64 i = 0; i < samples; ++i) {
        u64 n = pick(rng);
        if (!(std::abs(t.lam[n - 1]) <= tau(n) + 1e-9)) return false;
        u64 m = pick(rng);
        if (std::gcd(m, n) == 1 && m <= t.n_max / n) {
            double lhs = t.lam[m * n - 1];
            double rhs = t.lam[m - 1] * t.lam[n - 1];
            if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(rhs)))
                return false;
        }
    }
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull}) {
        if (p * p > t.n_max) break;
        double lhs = t.lam[p * p - 1];
        double rhs = t.lam[p - 1] * t.lam[p - 1] - 1.0;
        if (std::abs(lhs - rhs) > 1e-10) return false;
    }
    return true;
}

inline EigenformTable eigenform_table_cached(int kappa, u64 n_max,
                                             const std::string& cache_dir) {
    std::filesystem::create_directories(cache_dir);
    std::string path = table_cache_path(cache_dir, kappa, n_max);
    if (auto t = load_table(path)) {
        if (t->kappa == kappa && t->n_max == n_max) return *t;
    }
    EigenformTable t = eigenform_table(kappa, n_max);
    save_table(t, path);
    return t;
}

}  // namespace qtml::eigenform
