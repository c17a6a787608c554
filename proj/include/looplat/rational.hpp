#ifndef LOOPLAT_RATIONAL_HPP
#define LOOPLAT_RATIONAL_HPP

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace looplat {

using Int = mpz_class;
using Rat = mpq_class;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Rat rat(long num, long den = 1) {
    if (den == 0) throw std::invalid_argument("rat: zero denominator");
    Rat q(num, den);
    q.canonicalize();
    return q;
}

inline Rat rat(const Int& num, const Int& den) {
    if (den == 0) throw std::invalid_argument("rat: zero denominator");
    Rat q(num, den);
    q.canonicalize();
    return q;
}

// Accepts "p", "p/q", and plain decimal strings like "-1.25".
inline Rat rat_from_string(const std::string& s) {
    if (s.empty()) throw ParseError("empty rational literal");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Rat q;
        if (q.set_str(s, 10) != 0) throw ParseError("bad rational literal: " + s);
        q.canonicalize();
        return q;
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        Rat q;
        if (q.set_str(s, 10) != 0) throw ParseError("bad rational literal: " + s);
        q.canonicalize();
        return q;
    }
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t frac_len = s.size() - dot - 1;
    if (digits.empty() || frac_len == 0) throw ParseError("bad decimal literal: " + s);
    Int num;
    if (num.set_str(digits, 10) != 0) throw ParseError("bad decimal literal: " + s);
    Int den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    return rat(num, den);
}

inline std::string rat_to_string(const Rat& q) { return q.get_str(); }

inline double to_double(const Rat& q) { return q.get_d(); }

inline Int factorial(unsigned n) {
    Int r = 1;
    for (unsigned k = 2; k <= n; ++k) r *= static_cast<long>(k);
    return r;
}

inline Int binomial(const Int& n, unsigned k) {
    Int r = 1;
    for (unsigned j = 0; j < k; ++j) {
        r *= (n - static_cast<long>(j));
        r /= static_cast<long>(j + 1);
    }
    return r;
}

struct VecHash {
    std::size_t operator()(const std::vector<int>& v) const {
        std::size_t h = 1469598103934665603ull;
        for (int x : v) {
            h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(x));
            h *= 1099511628211ull;
        }
        return h;
    }
};

}  // namespace looplat

#endif
