// Exact integer arithmetic substrate: factorization, multiplicative
// functions, Kronecker symbols, square-free machinery.
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qtml::arith {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

// Sieve of smallest prime factors, built once on first use.
class prime_sieve {
public:
    static constexpr u64 limit = 1'000'000;

    static const prime_sieve& instance() {
        static const prime_sieve s;
        return s;
    }

    bool is_prime(u64 n) const {
        return n >= 2 && n <= limit && spf_[n] == n;
    }
    u64 smallest_factor(u64 n) const { return spf_[n]; }
    const std::vector<u64>& primes() const { return primes_; }

private:
    prime_sieve() : spf_(limit + 1, 0) {
        for (u64 i = 2; i <= limit; ++i) {
            if (spf_[i] == 0) {
                primes_.push_back(i);
                for (u64 j = i; j <= limit; j += i)
                    if (spf_[j] == 0) spf_[j] = i;
            }
        }
    }
    std::vector<u64> spf_;
    std::vector<u64> primes_;
};

struct Factorization {
    u64 value = 1;
    std::vector<std::pair<u64, int>> factors;  // (prime, exponent), primes increasing
};

namespace detail {

inline u64 mulmod(u64 a, u64 b, u64 m) { return (u128)a * b % m; }

inline u64 powmod(u64 a, u64 e, u64 m) {
    u64 r = 1;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

// Deterministic Miller-Rabin for 64-bit inputs.
inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int r = 0;
    while ((d & 1) == 0) { d >>= 1; ++r; }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 0; i + 1 < r; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) { witness = false; break; }
        }
        if (witness) return false;
    }
    return true;
}

inline u64 pollard_rho(u64 n) {
    if ((n & 1) == 0) return 2;
    u64 c = 1;
    for (;;) {
        u64 x = 2, y = 2, d = 1;
        auto f = [&](u64 v) { return (mulmod(v, v, n) + c) % n; };
        while (d == 1) {
            x = f(x);
            y = f(f(y));
            u64 diff = x > y ? x - y : y - x;
            d = std::gcd(diff, n);
        }
        if (d != n) return d;
        ++c;
    }
}

inline void factor_rec(u64 n, std::vector<u64>& out) {
    if (n == 1) return;
    if (is_prime_u64(n)) { out.push_back(n); return; }
    u64 d = pollard_rho(n);
    factor_rec(d, out);
    factor_rec(n / d, out);
}

}  // namespace detail

inline Factorization factorize(u64 n) {
    if (n == 0) throw std::invalid_argument("factorize: n must be positive");
    Factorization f;
    f.value = n;
    const auto& sieve = prime_sieve::instance();
    std::vector<u64> primes;
    // trial division by sieved primes up to cube-root-ish scale first
    for (u64 p : sieve.primes()) {
        if (p * p > n) break;
        while (n % p == 0) { primes.push_back(p); n /= p; }
    }
    if (n > 1) {
        if (n <= prime_sieve::limit || detail::is_prime_u64(n)) {
            primes.push_back(n);
        } else {
            detail::factor_rec(n, primes);
        }
    }
    std::sort(primes.begin(), primes.end());
    for (u64 p : primes) {
        if (!f.factors.empty() && f.factors.back().first == p)
            f.factors.back().second++;
        else
            f.factors.emplace_back(p, 1);
    }
    return f;
}

// Kronecker symbol (a/n), binary reciprocity algorithm (no factorization).
inline int kronecker(i64 a, i64 n) {
    if (a == 0 && n == 0) throw std::invalid_argument("kronecker(0,0) undefined");
    if (n == 0) return (a == 1 || a == -1) ? 1 : 0;
    int result = 1;
    if (n < 0) {
        n = -n;
        if (a < 0) result = -result;
    }
    if (n % 2 == 0) {
        if (a % 2 == 0) return 0;
        int e = 0;
        while (n % 2 == 0) { n /= 2; ++e; }
        // (a/2) = (-1)^{(a^2-1)/8}
        i64 am8 = ((a % 8) + 8) % 8;
        if (e % 2 == 1 && (am8 == 3 || am8 == 5)) result = -result;
    }
    a %= n;
    if (a < 0) a += n;
    // now n odd positive, 0 <= a < n
    while (a != 0) {
        int e = 0;
        while (a % 2 == 0) { a /= 2; ++e; }
        i64 nm8 = n % 8;
        if (e % 2 == 1 && (nm8 == 3 || nm8 == 5)) result = -result;
        // quadratic reciprocity for odd positive a, n
        if (a % 4 == 3 && n % 4 == 3) result = -result;
        std::swap(a, n);
        a %= n;
    }
    return n == 1 ? result : 0;
}

inline int mobius(u64 n) {
    auto f = factorize(n);
    for (const auto& [p, e] : f.factors)
        if (e >= 2) return 0;
    return f.factors.size() % 2 == 0 ? 1 : -1;
}

inline u64 euler_phi(u64 n) {
    auto f = factorize(n);
    u64 r = n;
    for (const auto& [p, e] : f.factors) r = r / p * (p - 1);
    return r;
}

inline u64 divisor_count(u64 n) {
    auto f = factorize(n);
    u64 r = 1;
    for (const auto& [p, e] : f.factors) r *= (u64)(e + 1);
    return r;
}

// sigma_k(n) = sum of k-th powers of divisors; 128-bit to cover the
// Eisenstein weights at desk scale, overflow-checked.
inline u128 sigma_k(u64 n, unsigned k) {
    auto f = factorize(n);
    u128 r = 1;
    for (const auto& [p, e] : f.factors) {
        u128 pk = 1, term = 1;
        for (unsigned i = 0; i < k; ++i) {
            u128 next = pk * p;
            if (p != 0 && next / p != pk) throw std::overflow_error("sigma_k overflow");
            pk = next;
        }
        u128 geom = 1;
        for (int i = 0; i < e; ++i) {
            geom = geom * pk + 1;  // 1 + p^k(1 + p^k(...))
        }
        term = geom;
        u128 next = r * term;
        if (term != 0 && next / term != r) throw std::overflow_error("sigma_k overflow");
        r = next;
    }
    return r;
}

// Decompose odd l = l1 * l2^2 with l1 squarefree.
inline std::pair<u64, u64> split_squarefree(u64 l) {
    if (l % 2 == 0) throw std::invalid_argument("split_squarefree: l must be odd");
    auto f = factorize(l);
    u64 l1 = 1, l2 = 1;
    for (const auto& [p, e] : f.factors) {
        if (e % 2 == 1) l1 *= p;
        for (int i = 0; i < e / 2; ++i) l2 *= p;
    }
    return {l1, l2};
}

inline bool is_squarefree(u64 n) {
    auto f = factorize(n);
    for (const auto& [p, e] : f.factors)
        if (e >= 2) return false;
    return true;
}

// Increasing enumeration of square-free d in [lo, hi], optionally odd only.
class SquarefreeStream {
public:
    SquarefreeStream(u64 lo, u64 hi, bool odd_only)
        : lo_(std::max<u64>(lo, 1)), hi_(hi), odd_only_(odd_only) {
        if (hi_ >= lo_) {
            flags_.assign(hi_ - lo_ + 1, true);
            for (u64 q = 2; q * q <= hi_; ++q) {
                u64 qq = q * q;
                for (u64 m = (lo_ + qq - 1) / qq * qq; m <= hi_; m += qq)
                    flags_[m - lo_] = false;
            }
        }
    }

    template <class F>
    void for_each(F&& fn) const {
        for (u64 d = lo_; d <= hi_ && d >= lo_; ++d) {
            if (odd_only_ && d % 2 == 0) continue;
            if (flags_[d - lo_]) fn(d);
        }
    }

    std::vector<u64> to_vector() const {
        std::vector<u64> v;
        for_each([&](u64 d) { v.push_back(d); });
        return v;
    }

private:
    u64 lo_, hi_;
    bool odd_only_;
    std::vector<bool> flags_;
};

}  // namespace qtml::arith
