#ifndef LOOPLAT_CHEVALLEY_HPP
#define LOOPLAT_CHEVALLEY_HPP

#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "looplat/cartan.hpp"
#include "looplat/rational.hpp"

namespace looplat {

// Chevalley structure constants N(a,b) for a finite root system:
// [x_a, x_b] = N(a,b) x_{a+b} with |N(a,b)| = p(a,b)+1. Signs are fixed by the
// extraspecial-pair convention (positive there) and propagated through the
// invariant-form identity N(a,b) = N(b,c)(c,c)/(a,a) for a+b+c = 0; the whole
// table is validated by a Jacobi sweep at construction.
class ChevalleyConstants {
  public:
    explicit ChevalleyConstants(const RootSystem& rs) : rs_(&rs) {
        const auto& pos = rs.positive_roots();
        for (std::size_t gi = 0; gi < pos.size(); ++gi) {
            const auto& gamma = pos[gi];
            if (rs.height(gamma) == 1) continue;
            // Special pairs (alpha, beta), alpha before beta in the height/lex
            // order, alpha + beta = gamma. The first one is extraspecial.
            std::vector<std::pair<std::vector<int>, std::vector<int>>> special;
            for (const auto& alpha : pos) {
                auto beta = sub(gamma, alpha);
                if (!rs.is_root(beta)) continue;
                if (!precedes(alpha, beta)) continue;
                special.emplace_back(alpha, beta);
            }
            if (special.empty()) throw std::logic_error("no special pair for a non-simple root");
            const auto& [a1, b1] = special.front();
            set(a1, b1, Rat(p_value(a1, b1) + 1));
            for (std::size_t k = 1; k < special.size(); ++k) {
                const auto& [al, be] = special[k];
                // Jacobi on (a1, b1, -be) determines N(gamma, -be), then the
                // three-cycle identity gives N(al, be).
                Rat t = 0;
                auto d1 = sub(b1, be);
                if (rs.is_root(d1)) t += n_signed(b1, neg(be)) * n_signed(d1, a1);
                auto d2 = sub(a1, be);
                if (rs.is_root(d2)) t += n_signed(neg(be), a1) * n_signed(d2, b1);
                Rat n_gamma_mbe = -t / get(a1, b1);
                Rat val = n_gamma_mbe * rs.norm_sq(gamma) / rs.norm_sq(al);
                set(al, be, val);
            }
        }
        verify();
    }

    // N(a,b) for arbitrary signed roots with a+b a root.
    Rat n_signed(const std::vector<int>& a, const std::vector<int>& b) const {
        bool apos = is_positive(a), bpos = is_positive(b);
        if (apos && bpos) return get(a, b);
        if (!apos && !bpos) return -get(neg(a), neg(b));
        if (apos) return mixed(a, neg(b));
        return -mixed(b, neg(a));
    }

    // Largest k >= 0 with b - k a a root.
    int p_value(const std::vector<int>& a, const std::vector<int>& b) const {
        int p = 0;
        auto c = sub(b, a);
        while (rs_->is_root(c)) {
            ++p;
            c = sub(c, a);
        }
        return p;
    }

  private:
    static std::vector<int> sub(const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
        return r;
    }
    static std::vector<int> add(const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
        return r;
    }
    static std::vector<int> neg(const std::vector<int>& a) {
        std::vector<int> r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
        return r;
    }
    static bool is_positive(const std::vector<int>& a) {
        for (int x : a)
            if (x > 0) return true;
        return false;
    }
    bool precedes(const std::vector<int>& a, const std::vector<int>& b) const {
        int ha = rs_->height(a), hb = rs_->height(b);
        if (ha != hb) return ha < hb;
        return a < b;
    }

    void set(const std::vector<int>& a, const std::vector<int>& b, Rat v) {
        table_[{a, b}] = v;
        table_[{b, a}] = -v;
    }

    Rat get(const std::vector<int>& a, const std::vector<int>& b) const {
        auto it = table_.find({a, b});
        if (it == table_.end()) throw std::logic_error("Chevalley constant missing from table");
        return it->second;
    }

    // N(a, -beta) with a, beta positive and a - beta a root.
    Rat mixed(const std::vector<int>& a, const std::vector<int>& beta) const {
        auto delta = sub(a, beta);
        if (is_positive(delta)) {
            // N(a,-beta) = -N(beta, delta) (delta,delta)/(a,a)
            return -get(beta, delta) * rs_->norm_sq(delta) / rs_->norm_sq(a);
        }
        auto dp = neg(delta);
        // N(a,-beta) = N(delta', a) (delta',delta')/(beta,beta), delta' = beta-a.
        return get(dp, a) * rs_->norm_sq(dp) / rs_->norm_sq(beta);
    }

    // Full structure-constant sanity: |N| = p+1 and the Jacobi identity on
    // every root triple (brackets into h included).
    void verify() const {
        const auto& roots = rs_->all_roots();
        std::size_t ell = rs_->rank();
        // An element is a coefficient map: root index -> coeff, plus an
        // h-component over the simple coroots.
        struct Elem {
            std::map<std::size_t, Rat> x;
            std::vector<Rat> h;
        };
        std::unordered_map<std::vector<int>, std::size_t, VecHash> ridx;
        for (std::size_t i = 0; i < roots.size(); ++i) ridx[roots[i]] = i;

        auto bracket_basis = [&](std::size_t i, std::size_t j) {
            Elem e;
            e.h.assign(ell, Rat(0));
            const auto& a = roots[i];
            const auto& b = roots[j];
            auto s = add(a, b);
            bool zero = true;
            for (int v : s)
                if (v) zero = false;
            if (zero) {
                auto cr = rs_->coroot(a);
                e.h = cr;
                return e;
            }
            auto it = ridx.find(s);
            if (it != ridx.end()) e.x[it->second] = n_signed(a, b);
            return e;
        };
        auto bracket_h_elem = [&](const std::vector<Rat>& h, const Elem& e) {
            Elem r;
            r.h.assign(ell, Rat(0));
            for (const auto& [idx, c] : e.x) {
                Rat pair = 0;
                for (std::size_t i = 0; i < ell; ++i)
                    if (h[i] != 0) pair += h[i] * rs_->pairing_with_simple_coroot(roots[idx], i);
                if (pair != 0 && c != 0) r.x[idx] = pair * c;
            }
            return r;
        };
        auto bracket_elem_basis = [&](const Elem& e, std::size_t k) {
            Elem r;
            r.h.assign(ell, Rat(0));
            for (const auto& [idx, c] : e.x) {
                Elem t = bracket_basis(idx, k);
                for (auto& [ti, tc] : t.x) r.x[ti] += c * tc;
                for (std::size_t i = 0; i < ell; ++i) r.h[i] += c * t.h[i];
            }
            Elem hb = bracket_h_elem(e.h, Elem{{{k, Rat(1)}}, std::vector<Rat>(ell, Rat(0))});
            for (auto& [ti, tc] : hb.x) r.x[ti] += tc;
            return r;
        };
        for (std::size_t i = 0; i < roots.size(); ++i)
            for (std::size_t j = 0; j < roots.size(); ++j) {
                if (i == j) continue;
                auto s = add(roots[i], roots[j]);
                if (rs_->is_root(s)) {
                    Rat n = n_signed(roots[i], roots[j]);
                    int p = p_value(roots[i], roots[j]);
                    if (n != p + 1 && n != -(p + 1))
                        throw std::logic_error("Chevalley constant magnitude check failed");
                }
                for (std::size_t k = 0; k < roots.size(); ++k) {
                    // [[i,j],k] + [[j,k],i] + [[k,i],j] = 0
                    Elem t1 = bracket_elem_basis(bracket_basis(i, j), k);
                    Elem t2 = bracket_elem_basis(bracket_basis(j, k), i);
                    Elem t3 = bracket_elem_basis(bracket_basis(k, i), j);
                    std::map<std::size_t, Rat> acc;
                    for (auto* t : {&t1, &t2, &t3})
                        for (auto& [idx, c] : t->x) acc[idx] += c;
                    for (auto& [idx, c] : acc)
                        if (c != 0) throw std::logic_error("Jacobi identity failed for Chevalley constants");
                    std::vector<Rat> hacc(ell, Rat(0));
                    for (auto* t : {&t1, &t2, &t3})
                        for (std::size_t q = 0; q < ell; ++q) hacc[q] += t->h[q];
                    for (const auto& c : hacc)
                        if (c != 0) throw std::logic_error("Jacobi identity failed (h part)");
                }
            }
    }

    struct PairHash {
        std::size_t operator()(const std::pair<std::vector<int>, std::vector<int>>& p) const {
            VecHash vh;
            return vh(p.first) * 1000003u ^ vh(p.second);
        }
    };

    const RootSystem* rs_;
    std::unordered_map<std::pair<std::vector<int>, std::vector<int>>, Rat, PairHash> table_;
};

}  // namespace looplat

#endif
