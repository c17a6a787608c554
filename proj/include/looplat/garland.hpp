#ifndef LOOPLAT_GARLAND_HPP
#define LOOPLAT_GARLAND_HPP

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "looplat/affine.hpp"
#include "looplat/rational.hpp"

namespace looplat {

struct InsufficientValues : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lambda_p from exp(sum_j X_j z^j / j) = sum_p Lambda_p z^p. Monomials are
// exponent vectors over X_1..X_p; every monomial has weighted degree
// sum j*e_j = p.
class LambdaPoly {
  public:
    unsigned p = 0;
    // exponent vector (length p, entry j-1 = exponent of X_j) -> coefficient
    std::map<std::vector<unsigned>, Rat> coeffs;

    static const LambdaPoly& get(unsigned p) {
        static std::vector<LambdaPoly> cache = [] {
            LambdaPoly one;
            one.p = 0;
            one.coeffs[{}] = 1;
            return std::vector<LambdaPoly>{one};
        }();
        while (cache.size() <= p) {
            unsigned q = static_cast<unsigned>(cache.size());
            LambdaPoly next;
            next.p = q;
            // q * Lambda_q = sum_{j=1}^{q} X_j Lambda_{q-j}
            for (unsigned j = 1; j <= q; ++j) {
                const LambdaPoly& prev = cache[q - j];
                for (const auto& [mono, c] : prev.coeffs) {
                    std::vector<unsigned> m(mono);
                    m.resize(q, 0);
                    m[j - 1] += 1;
                    next.coeffs[m] += c / q;
                }
            }
            for (auto it = next.coeffs.begin(); it != next.coeffs.end();)
                it = it->second == 0 ? next.coeffs.erase(it) : std::next(it);
            cache.push_back(std::move(next));
        }
        return cache[p];
    }

    // Deterministic text form, e.g. "(X1^2 + X2)/2".
    std::string to_string() const {
        if (coeffs.empty()) return "0";
        Int denom = 1;
        for (const auto& [m, c] : coeffs) denom = lcm(denom, c.get_den());
        std::vector<std::pair<std::vector<unsigned>, Int>> terms;
        for (const auto& [m, c] : coeffs) terms.emplace_back(m, Int(c.get_num() * (denom / c.get_den())));
        std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        std::ostringstream os;
        bool paren = denom != 1 && terms.size() > 1;
        if (paren) os << "(";
        bool first = true;
        for (const auto& [m, c] : terms) {
            Int a = c;
            if (!first) os << (a < 0 ? " - " : " + ");
            else if (a < 0) os << "-";
            first = false;
            Int mag = abs(a);
            bool any_var = std::any_of(m.begin(), m.end(), [](unsigned e) { return e > 0; });
            if (mag != 1 || !any_var) os << mag.get_str();
            bool star = mag != 1;
            for (std::size_t j = 0; j < m.size(); ++j) {
                if (m[j] == 0) continue;
                if (star) os << "*";
                os << "X" << (j + 1);
                if (m[j] > 1) os << "^" << m[j];
                star = true;
            }
        }
        if (paren) os << ")";
        if (denom != 1) os << "/" << denom.get_str();
        return os.str();
    }

  private:
    static Int lcm(const Int& a, const Int& b) {
        Int g;
        mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
        return a / g * b;
    }
};

inline const LambdaPoly& lambda_poly(unsigned p) { return LambdaPoly::get(p); }

// Exact evaluation at scalar values; uses the Newton-type recurrence, which
// agrees with substituting into lambda_poly(p).
inline Rat eval_lambda(unsigned p, const std::vector<Rat>& values) {
    if (values.size() < p) throw InsufficientValues("eval_lambda needs at least p values");
    std::vector<Rat> lam(p + 1);
    lam[0] = 1;
    for (unsigned q = 1; q <= p; ++q) {
        Rat s = 0;
        for (unsigned j = 1; j <= q; ++j) s += values[j - 1] * lam[q - j];
        lam[q] = s / q;
    }
    return lam[p];
}

// One factor of a U_Z(u^-) monomial: either a divided power xi_{-a}^(power)
// for a positive real affine root a, or an imaginary block
// Lambda_q(-r, j) built from xi_j(-r), xi_j(-2r), ...
struct UZFactor {
    enum class Kind { DividedPower, ImaginaryBlock } kind;
    AffineRoot root;    // divided power: the positive real root a
    unsigned power = 0; // divided power exponent p >= 1
    unsigned q = 0;     // imaginary block degree q >= 1
    int r = 0;          // imaginary block loop degree r >= 1 (uses t^{-r})
    std::size_t j = 0;  // imaginary block Cartan direction, 0-based
};

struct UZMonomial {
    std::vector<UZFactor> factors;

    long depth(const AffineData& ad) const {
        long d = 0;
        long iota_ht = 1;
        for (int c : ad.classical().highest_root()) iota_ht += c;
        for (const auto& f : factors) {
            if (f.kind == UZFactor::Kind::DividedPower) {
                auto ac = f.root.a_coords(ad.classical().highest_root());
                long ht = 0;
                for (int c : ac) ht += c;
                d += static_cast<long>(f.power) * ht;
            } else {
                d += static_cast<long>(f.q) * f.r * iota_ht;
            }
        }
        return d;
    }

    // Coordinates of the total weight drop over a_1..a_{ell+1}.
    std::vector<long> weight_drop(const AffineData& ad) const {
        std::vector<long> w(ad.num_simple(), 0);
        auto iota = ad.iota_coords();
        for (const auto& f : factors) {
            if (f.kind == UZFactor::Kind::DividedPower) {
                auto ac = f.root.a_coords(ad.classical().highest_root());
                for (std::size_t i = 0; i < w.size(); ++i) w[i] += static_cast<long>(f.power) * ac[i];
            } else {
                for (std::size_t i = 0; i < w.size(); ++i)
                    w[i] += static_cast<long>(f.q) * f.r * iota[i];
            }
        }
        return w;
    }
};

namespace detail {

struct UZGenerator {
    bool divided;   // true: divided powers of xi_{-root}; false: Lambda blocks for (r, j)
    AffineRoot root;
    int r = 0;
    std::size_t j = 0;
    std::vector<long> unit_drop;  // weight drop of exponent 1
    long unit_depth = 0;
};

inline std::vector<UZGenerator> uz_generators(const AffineData& ad, long depth_bound) {
    std::vector<UZGenerator> gens;
    auto iota = ad.iota_coords();
    long iota_ht = 0;
    for (int c : iota) iota_ht += c;
    int n_max = static_cast<int>(depth_bound);
    for (const auto& r : ad.roots_up_to(n_max)) {
        if (r.sign < 0 || r.imaginary) continue;
        auto ac = r.a_coords(ad.classical().highest_root());
        long ht = 0;
        for (int c : ac) ht += c;
        if (ht > depth_bound) continue;
        UZGenerator g;
        g.divided = true;
        g.root = r;
        g.unit_drop.assign(ac.begin(), ac.end());
        g.unit_depth = ht;
        gens.push_back(std::move(g));
    }
    for (int r = 1; static_cast<long>(r) * iota_ht <= depth_bound; ++r)
        for (std::size_t j = 0; j < ad.ell(); ++j) {
            UZGenerator g;
            g.divided = false;
            g.r = r;
            g.j = j;
            g.unit_drop.resize(ad.num_simple());
            for (std::size_t i = 0; i < g.unit_drop.size(); ++i) g.unit_drop[i] = r * iota[i];
            g.unit_depth = static_cast<long>(r) * iota_ht;
            gens.push_back(std::move(g));
        }
    // Fixed total order: divided powers by (height, a-coords), then imaginary
    // blocks by (r, j).
    std::sort(gens.begin(), gens.end(), [](const UZGenerator& a, const UZGenerator& b) {
        if (a.divided != b.divided) return a.divided;
        if (a.divided) {
            if (a.unit_depth != b.unit_depth) return a.unit_depth < b.unit_depth;
            return a.unit_drop < b.unit_drop;
        }
        if (a.r != b.r) return a.r < b.r;
        return a.j < b.j;
    });
    return gens;
}

template <typename Emit>
inline void uz_recurse(const AffineData& ad, const std::vector<UZGenerator>& gens, std::size_t gi,
                       std::vector<UZFactor>& acc, std::vector<long>& drop, long depth_left,
                       const std::vector<long>* target, const Emit& emit) {
    bool ok = true;
    if (target)
        for (std::size_t i = 0; i < drop.size(); ++i)
            if (drop[i] > (*target)[i]) ok = false;
    if (!ok) return;
    if (gi == gens.size()) {
        if (!target || drop == *target) emit(acc);
        return;
    }
    uz_recurse(ad, gens, gi + 1, acc, drop, depth_left, target, emit);
    const auto& g = gens[gi];
    if (g.unit_depth <= 0) return;
    long max_e = depth_left / g.unit_depth;
    std::vector<long> saved = drop;
    for (long e = 1; e <= max_e; ++e) {
        for (std::size_t i = 0; i < drop.size(); ++i) drop[i] = saved[i] + e * g.unit_drop[i];
        UZFactor f;
        if (g.divided) {
            f.kind = UZFactor::Kind::DividedPower;
            f.root = g.root;
            f.power = static_cast<unsigned>(e);
        } else {
            f.kind = UZFactor::Kind::ImaginaryBlock;
            f.q = static_cast<unsigned>(e);
            f.r = g.r;
            f.j = g.j;
        }
        acc.push_back(f);
        uz_recurse(ad, gens, gi + 1, acc, drop, depth_left - e * g.unit_depth, target, emit);
        acc.pop_back();
    }
    drop = saved;
}

}  // namespace detail

// All U_Z(u^-) monomials (h-binomial part omitted) of total depth <= bound,
// in a deterministic order.
inline std::vector<UZMonomial> enumerate_uz_monomials(const AffineData& ad, long depth_bound) {
    auto gens = detail::uz_generators(ad, depth_bound);
    std::vector<UZMonomial> out;
    std::vector<UZFactor> acc;
    std::vector<long> drop(ad.num_simple(), 0);
    detail::uz_recurse(ad, gens, 0, acc, drop, depth_bound, nullptr,
                       [&](const std::vector<UZFactor>& fs) { out.push_back(UZMonomial{fs}); });
    return out;
}

// Monomials whose weight drop equals the target coordinates exactly.
inline std::vector<UZMonomial> enumerate_uz_monomials_for_weight(const AffineData& ad,
                                                                 const std::vector<long>& target) {
    long depth = 0;
    for (long t : target) depth += t;
    auto gens = detail::uz_generators(ad, depth);
    std::vector<UZMonomial> out;
    std::vector<UZFactor> acc;
    std::vector<long> drop(ad.num_simple(), 0);
    detail::uz_recurse(ad, gens, 0, acc, drop, depth, &target,
                       [&](const std::vector<UZFactor>& fs) { out.push_back(UZMonomial{fs}); });
    return out;
}

}  // namespace looplat

#endif
