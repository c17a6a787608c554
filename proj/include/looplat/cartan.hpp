#ifndef LOOPLAT_CARTAN_HPP
#define LOOPLAT_CARTAN_HPP

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "looplat/matrix.hpp"
#include "looplat/rational.hpp"

namespace looplat {

struct NotFiniteType : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotIrreducible : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotARoot : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IndexOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class CartanMatrix {
  public:
    CartanMatrix(std::size_t ell, std::vector<int> entries) : ell_(ell), a_(std::move(entries)) {
        if (a_.size() != ell_ * ell_) throw std::invalid_argument("Cartan matrix size mismatch");
        validate();
    }

    static CartanMatrix type_A(std::size_t n) { return simply_laced_chain(n); }

    static CartanMatrix type_B(std::size_t n) {
        if (n < 2) throw std::invalid_argument("B_n needs n >= 2");
        auto m = chain_entries(n);
        m[(n - 1) * n + (n - 2)] = -2;  // short alpha_n
        return CartanMatrix(n, m);
    }

    static CartanMatrix type_C(std::size_t n) {
        if (n < 2) throw std::invalid_argument("C_n needs n >= 2");
        auto m = chain_entries(n);
        m[(n - 2) * n + (n - 1)] = -2;  // long alpha_n
        return CartanMatrix(n, m);
    }

    static CartanMatrix type_D(std::size_t n) {
        if (n < 4) throw std::invalid_argument("D_n needs n >= 4");
        auto m = chain_entries(n);
        m[(n - 1) * n + (n - 2)] = 0;
        m[(n - 2) * n + (n - 1)] = 0;
        m[(n - 1) * n + (n - 3)] = -1;
        m[(n - 3) * n + (n - 1)] = -1;
        return CartanMatrix(n, m);
    }

    static CartanMatrix type_G2() { return CartanMatrix(2, {2, -1, -3, 2}); }

    static CartanMatrix type_F4() {
        return CartanMatrix(4, {2, -1, 0, 0, -1, 2, -1, 0, 0, -2, 2, -1, 0, 0, -1, 2});
    }

    static CartanMatrix from_type(const std::string& name) {
        if (name.size() < 2) throw std::invalid_argument("bad Cartan type: " + name);
        char fam = name[0];
        if (name == "G2") return type_G2();
        if (name == "F4") return type_F4();
        std::size_t n = std::stoul(name.substr(1));
        switch (fam) {
            case 'A':
            case 'a': return type_A(n);
            case 'B':
            case 'b': return type_B(n);
            case 'C':
            case 'c': return type_C(n);
            case 'D':
            case 'd': return type_D(n);
            default: throw std::invalid_argument("unknown Cartan type: " + name);
        }
    }

    std::size_t size() const { return ell_; }
    int operator()(std::size_t i, std::size_t j) const { return a_[i * ell_ + j]; }

    // Rational d_i > 0 with d_i A_ij = d_j A_ji (normalization free here).
    std::vector<Rat> symmetrizer() const {
        std::vector<Rat> d(ell_, Rat(0));
        d[0] = 1;
        std::vector<std::size_t> stack = {0};
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < ell_; ++j) {
                if ((*this)(i, j) == 0 || i == j) continue;
                Rat dj = d[i] * (*this)(i, j) / (*this)(j, i);
                if (d[j] == 0) {
                    d[j] = dj;
                    stack.push_back(j);
                } else if (d[j] != dj) {
                    throw NotFiniteType("Cartan matrix is not symmetrizable");
                }
            }
        }
        for (const auto& x : d)
            if (x <= 0) throw NotIrreducible("Cartan matrix is not irreducible (disconnected diagram)");
        return d;
    }

  private:
    static std::vector<int> chain_entries(std::size_t n) {
        std::vector<int> m(n * n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            m[i * n + i] = 2;
            if (i + 1 < n) {
                m[i * n + i + 1] = -1;
                m[(i + 1) * n + i] = -1;
            }
        }
        return m;
    }

    static CartanMatrix simply_laced_chain(std::size_t n) {
        if (n < 1) throw std::invalid_argument("A_n needs n >= 1");
        return CartanMatrix(n, chain_entries(n));
    }

    void validate() const {
        for (std::size_t i = 0; i < ell_; ++i) {
            if ((*this)(i, i) != 2) throw std::invalid_argument("Cartan diagonal entries must be 2");
            for (std::size_t j = 0; j < ell_; ++j) {
                if (i == j) continue;
                if ((*this)(i, j) > 0) throw std::invalid_argument("Cartan off-diagonal entries must be <= 0");
                if (((*this)(i, j) == 0) != (((*this)(j, i)) == 0))
                    throw std::invalid_argument("Cartan zero pattern must be symmetric");
            }
        }
        auto d = symmetrizer();
        QMatrix s(ell_, ell_);
        for (std::size_t i = 0; i < ell_; ++i)
            for (std::size_t j = 0; j < ell_; ++j) s(i, j) = d[i] * (*this)(i, j);
        if (!s.is_symmetric() || !s.is_positive_definite())
            throw NotFiniteType("Cartan matrix is not of finite type");
    }

    std::size_t ell_;
    std::vector<int> a_;
};

// Finite root system with the invariant form normalized to (theta, theta) = 2
// on the highest root theta.
class RootSystem {
  public:
    explicit RootSystem(CartanMatrix cartan) : cartan_(std::move(cartan)), form_(0, 0) {
        build();
    }

    const CartanMatrix& cartan() const { return cartan_; }
    std::size_t rank() const { return cartan_.size(); }

    const std::vector<std::vector<int>>& positive_roots() const { return positive_; }
    const std::vector<int>& highest_root() const { return highest_; }

    // (alpha_i, alpha_j) under the normalized form.
    const QMatrix& form_matrix() const { return form_; }

    bool is_root(const std::vector<int>& c) const { return index_.count(c) > 0; }

    int height(const std::vector<int>& c) const { return std::accumulate(c.begin(), c.end(), 0); }

    // <beta, alpha_i^vee> for beta given in Pi coordinates.
    int pairing_with_simple_coroot(const std::vector<int>& beta, std::size_t i) const {
        long p = 0;
        for (std::size_t j = 0; j < rank(); ++j) p += static_cast<long>(cartan_(i, j)) * beta[j];
        return static_cast<int>(p);
    }

    std::vector<int> reflect(const std::vector<int>& beta, std::size_t i) const {
        std::vector<int> r = beta;
        r[i] -= pairing_with_simple_coroot(beta, i);
        return r;
    }

    Rat form(const std::vector<int>& a, const std::vector<int>& b) const {
        Rat s = 0;
        for (std::size_t i = 0; i < rank(); ++i) {
            if (a[i] == 0) continue;
            for (std::size_t j = 0; j < rank(); ++j)
                if (b[j] != 0) s += Rat(a[i]) * form_(i, j) * b[j];
        }
        return s;
    }

    Rat norm_sq(const std::vector<int>& a) const { return form(a, a); }

    // alpha^vee over the simple coroots: alpha = sum c_i alpha_i gives
    // alpha^vee = sum c_i (alpha_i,alpha_i)/(alpha,alpha) alpha_i^vee.
    std::vector<Rat> coroot(const std::vector<int>& alpha) const {
        if (!is_root(alpha)) throw NotARoot("coroot of a non-root");
        Rat nn = norm_sq(alpha);
        std::vector<Rat> c(rank());
        for (std::size_t i = 0; i < rank(); ++i) c[i] = Rat(alpha[i]) * form_(i, i) / nn;
        return c;
    }

    const std::vector<std::vector<int>>& all_roots() const { return roots_; }

  private:
    void build() {
        std::size_t n = rank();
        auto d = cartan_.symmetrizer();
        QMatrix raw(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) raw(i, j) = d[i] * cartan_(i, j);

        std::unordered_set<std::vector<int>, VecHash> seen;
        std::vector<std::vector<int>> queue;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<int> e(n, 0);
            e[i] = 1;
            seen.insert(e);
            queue.push_back(e);
        }
        while (!queue.empty()) {
            auto beta = queue.back();
            queue.pop_back();
            for (std::size_t i = 0; i < n; ++i) {
                auto r = reflect(beta, i);
                if (seen.insert(r).second) queue.push_back(r);
            }
        }
        roots_.assign(seen.begin(), seen.end());
        for (const auto& r : roots_) {
            bool pos = std::all_of(r.begin(), r.end(), [](int x) { return x >= 0; });
            bool neg = std::all_of(r.begin(), r.end(), [](int x) { return x <= 0; });
            if (!pos && !neg) throw NotFiniteType("root closure produced a mixed-sign vector");
            if (pos) positive_.push_back(r);
        }
        std::sort(positive_.begin(), positive_.end(), [this](const auto& a, const auto& b) {
            int ha = height(a), hb = height(b);
            return ha != hb ? ha < hb : a < b;
        });
        highest_ = positive_.back();
        for (int c : highest_)
            if (c <= 0) throw NotIrreducible("highest root must have strictly positive coefficients");

        // Normalize so the highest root has squared length 2.
        Rat theta_sq = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) theta_sq += Rat(highest_[i]) * raw(i, j) * highest_[j];
        Rat c = Rat(2) / theta_sq;
        form_ = raw * c;

        for (const auto& r : roots_) index_.insert(r);
    }

    CartanMatrix cartan_;
    std::vector<std::vector<int>> roots_;
    std::vector<std::vector<int>> positive_;
    std::vector<int> highest_;
    QMatrix form_;
    std::unordered_set<std::vector<int>, VecHash> index_;
};

inline RootSystem build_root_system(const CartanMatrix& a) { return RootSystem(a); }

}  // namespace looplat

#endif
