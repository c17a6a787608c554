#ifndef LOOPLAT_AFFINE_HPP
#define LOOPLAT_AFFINE_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "looplat/cartan.hpp"
#include "looplat/matrix.hpp"
#include "looplat/rational.hpp"

namespace looplat {

struct NotDominated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Weight in the basis a_1..a_{ell+1}, Lambda_{ell+1} of (h^e)^*.
struct AffineWeight {
    std::vector<Rat> a;  // coefficients of a_1..a_{ell+1}
    Rat lambda;          // coefficient of Lambda_{ell+1}

    AffineWeight() = default;
    AffineWeight(std::size_t ell_plus_1, Rat lam = Rat(0)) : a(ell_plus_1, Rat(0)), lambda(std::move(lam)) {}

    bool operator==(const AffineWeight& o) const { return a == o.a && lambda == o.lambda; }
    bool operator!=(const AffineWeight& o) const { return !(*this == o); }

    AffineWeight operator+(const AffineWeight& o) const {
        AffineWeight r = *this;
        for (std::size_t i = 0; i < a.size(); ++i) r.a[i] += o.a[i];
        r.lambda += o.lambda;
        return r;
    }
    AffineWeight operator-(const AffineWeight& o) const {
        AffineWeight r = *this;
        for (std::size_t i = 0; i < a.size(); ++i) r.a[i] -= o.a[i];
        r.lambda -= o.lambda;
        return r;
    }
};

struct WeightDecomposition {
    Rat p;                       // <mu, c>
    std::vector<Rat> classical;  // coordinates of mu-bar over alpha_1..alpha_ell
    Rat iota_coeff;              // coefficient n of iota
};

// Affine real/imaginary root, stored with its classical part and loop degree.
struct AffineRoot {
    std::vector<int> classical;  // over Pi (all zero for imaginary roots)
    int n = 0;                   // iota coefficient
    bool imaginary = false;
    int mult = 1;
    int sign = 1;  // +1 if positive affine root

    std::vector<int> a_coords(const std::vector<int>& highest_root) const {
        // a_{ell+1} has classical part -highest_root, so alpha + n*iota in the
        // a-basis is (alpha + n*highest_root, n).
        std::size_t ell = highest_root.size();
        std::vector<int> c(ell + 1, 0);
        for (std::size_t i = 0; i < ell; ++i) c[i] = classical[i] + n * highest_root[i];
        c[ell] = n;
        return c;
    }
};

// Untwisted affinization of a finite root system: the affine Cartan matrix,
// the symmetrizing epsilons and the invariant form on the weight basis.
class AffineData {
  public:
    explicit AffineData(RootSystem rs) : rs_(std::move(rs)), form_(0, 0) {
        std::size_t ell = rs_.rank();
        std::size_t n = ell + 1;
        // Classical coordinates of a_1..a_{ell+1}; the last one is -theta.
        std::vector<std::vector<int>> cls(n);
        for (std::size_t i = 0; i < ell; ++i) {
            cls[i].assign(ell, 0);
            cls[i][i] = 1;
        }
        cls[ell].assign(ell, 0);
        for (std::size_t i = 0; i < ell; ++i) cls[ell][i] = -rs_.highest_root()[i];

        cartan_.assign(n * n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Rat v = 2 * rs_.form(cls[i], cls[j]) / rs_.form(cls[i], cls[i]);
                if (v.get_den() != 1) throw std::logic_error("affine Cartan entry not an integer");
                cartan_[i * n + j] = static_cast<int>(v.get_num().get_si());
            }

        eps_.resize(n);
        for (std::size_t i = 0; i < n; ++i) eps_[i] = Rat(2) / rs_.form(cls[i], cls[i]);

        // Form on the basis a_1..a_{ell+1}, Lambda_{ell+1}.
        form_ = QMatrix(n + 1, n + 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) form_(i, j) = Rat(cartan_[i * n + j]) / eps_[i];
        form_(n - 1, n) = form_(n, n - 1) = 1;  // (a_{ell+1}, Lambda) = 1
        // (a_i, Lambda) = 0 for i <= ell and (Lambda, Lambda) = 0 already hold.
    }

    const RootSystem& classical() const { return rs_; }
    std::size_t ell() const { return rs_.rank(); }
    std::size_t num_simple() const { return rs_.rank() + 1; }

    int affine_cartan(std::size_t i, std::size_t j) const { return cartan_[i * num_simple() + j]; }
    const Rat& epsilon(std::size_t i) const { return eps_[i]; }
    const QMatrix& form_matrix() const { return form_; }

    // iota = a_{ell+1} + sum d_i a_i in the a-basis.
    std::vector<int> iota_coords() const {
        std::vector<int> c(num_simple(), 0);
        for (std::size_t i = 0; i < ell(); ++i) c[i] = rs_.highest_root()[i];
        c[ell()] = 1;
        return c;
    }

    AffineWeight weight_from_a(std::vector<Rat> acoords, Rat lambda = Rat(0)) const {
        AffineWeight w;
        w.a = std::move(acoords);
        w.lambda = std::move(lambda);
        if (w.a.size() != num_simple()) throw std::invalid_argument("bad a-coordinate size");
        return w;
    }

    AffineWeight fundamental_weight() const {
        AffineWeight w(num_simple());
        w.lambda = 1;
        return w;
    }

    AffineWeight iota_weight() const {
        AffineWeight w(num_simple());
        auto c = iota_coords();
        for (std::size_t i = 0; i < c.size(); ++i) w.a[i] = c[i];
        return w;
    }

    AffineWeight simple_root_weight(std::size_t i) const {
        AffineWeight w(num_simple());
        w.a.at(i) = 1;
        return w;
    }

    // <mu, a_i^vee>, i in [0, ell] zero-based.
    Rat pair_coroot(const AffineWeight& mu, std::size_t i) const {
        if (i >= num_simple()) throw IndexOutOfRange("simple coroot index out of range");
        Rat s = 0;
        for (std::size_t j = 0; j < num_simple(); ++j)
            if (mu.a[j] != 0) s += mu.a[j] * affine_cartan(i, j);
        if (i == ell()) s += mu.lambda;
        return s;
    }

    // <mu, d>: only a_{ell+1} pairs with the degree derivation.
    Rat pair_d(const AffineWeight& mu) const { return mu.a[ell()]; }

    // <mu, c>: the central pairing (level).
    Rat pair_c(const AffineWeight& mu) const { return mu.lambda; }

    Rat form(const AffineWeight& x, const AffineWeight& y) const {
        std::size_t n = num_simple();
        std::vector<Rat> xv = x.a, yv = y.a;
        xv.push_back(x.lambda);
        yv.push_back(y.lambda);
        Rat s = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            if (xv[i] == 0) continue;
            for (std::size_t j = 0; j <= n; ++j)
                if (yv[j] != 0) s += xv[i] * form_(i, j) * yv[j];
        }
        return s;
    }

    AffineWeight reflect(const AffineWeight& mu, std::size_t i) const {
        Rat p = pair_coroot(mu, i);
        AffineWeight r = mu;
        r.a[i] -= p;
        return r;
    }

    bool in_tits_cone(const AffineWeight& mu) const { return pair_c(mu) > 0; }

    WeightDecomposition decompose(const AffineWeight& mu) const {
        WeightDecomposition d;
        d.p = mu.lambda;
        d.iota_coeff = mu.a[ell()];
        d.classical.resize(ell());
        for (std::size_t i = 0; i < ell(); ++i)
            d.classical[i] = mu.a[i] - mu.a[ell()] * rs_.highest_root()[i];
        return d;
    }

    AffineWeight recompose(const WeightDecomposition& d) const {
        AffineWeight w(num_simple());
        w.lambda = d.p;
        w.a[ell()] = d.iota_coeff;
        for (std::size_t i = 0; i < ell(); ++i)
            w.a[i] = d.classical[i] + d.iota_coeff * rs_.highest_root()[i];
        return w;
    }

    // Norm of the classical projection under the normalized form.
    Rat classical_norm_sq(const AffineWeight& mu) const {
        auto d = decompose(mu);
        Rat s = 0;
        const QMatrix& f = rs_.form_matrix();
        for (std::size_t i = 0; i < ell(); ++i) {
            if (d.classical[i] == 0) continue;
            for (std::size_t j = 0; j < ell(); ++j)
                if (d.classical[j] != 0) s += d.classical[i] * f(i, j) * d.classical[j];
        }
        return s;
    }

    // Dominant integral weight with given Dynkin labels c_i = <lambda, a_i^vee>
    // and <lambda, d> = 0.
    AffineWeight dominant_weight_from_labels(const std::vector<long>& labels) const {
        if (labels.size() != num_simple()) throw std::invalid_argument("need ell+1 Dynkin labels");
        std::size_t l = ell();
        QMatrix A(l, l);
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j < l; ++j) A(i, j) = affine_cartan(i, j);
        std::vector<Rat> rhs(l);
        for (std::size_t i = 0; i < l; ++i) rhs[i] = labels[i];
        std::vector<Rat> x = l ? A.solve(rhs) : std::vector<Rat>{};
        AffineWeight w(num_simple());
        for (std::size_t i = 0; i < l; ++i) w.a[i] = x[i];
        w.a[l] = 0;
        Rat y = Rat(labels[l]);
        for (std::size_t j = 0; j < l; ++j) y -= x[j] * affine_cartan(l, j);
        w.lambda = y;
        return w;
    }

    // Affine Weyl vector: <rho, a_i^vee> = 1 for all i, <rho, d> = 0.
    AffineWeight weyl_vector() const {
        std::vector<long> ones(num_simple(), 1);
        return dominant_weight_from_labels(ones);
    }

    // Positive affine roots with iota coefficient <= n_max, plus their
    // negatives (sign = -1).
    std::vector<AffineRoot> roots_up_to(int n_max) const {
        std::vector<AffineRoot> out;
        auto add_with_negative = [&out](AffineRoot r) {
            out.push_back(r);
            r.sign = -1;
            for (auto& c : r.classical) c = -c;
            r.n = -r.n;
            out.push_back(std::move(r));
        };
        for (int n = 0; n <= n_max; ++n) {
            for (const auto& alpha : rs_.positive_roots()) {
                AffineRoot r;
                r.classical = alpha;
                r.n = n;
                add_with_negative(r);
                if (n >= 1) {
                    AffineRoot m;
                    m.classical.assign(ell(), 0);
                    for (std::size_t i = 0; i < ell(); ++i) m.classical[i] = -alpha[i];
                    m.n = n;
                    add_with_negative(m);
                }
            }
            if (n >= 1) {
                AffineRoot im;
                im.classical.assign(ell(), 0);
                im.n = n;
                im.imaginary = true;
                im.mult = static_cast<int>(ell());
                add_with_negative(im);
            }
        }
        return out;
    }

    // (mu, root) under the invariant form, root given by classical part + n.
    Rat form_with_root(const AffineWeight& mu, const AffineRoot& r) const {
        auto d = decompose(mu);
        Rat s = 0;
        const QMatrix& f = rs_.form_matrix();
        for (std::size_t i = 0; i < ell(); ++i) {
            if (r.classical[i] == 0) continue;
            for (std::size_t j = 0; j < ell(); ++j)
                if (d.classical[j] != 0) s += Rat(r.classical[i]) * f(i, j) * d.classical[j];
        }
        // (mu, n*iota) = n * p  since (iota, Lambda) = 1 kills everything but
        // the level.
        s += Rat(r.n) * d.p;
        return s;
    }

  private:
    RootSystem rs_;
    std::vector<int> cartan_;
    std::vector<Rat> eps_;
    QMatrix form_;
};

inline AffineData affinize(const RootSystem& rs) { return AffineData(rs); }

// Depth and level of mu relative to a dominant lambda: lambda - mu = sum m_i a_i.
struct DepthLevel {
    long depth;
    long level;
    std::vector<long> m;
};

inline DepthLevel depth_level(const AffineData& ad, const AffineWeight& lambda, const AffineWeight& mu) {
    if (lambda.lambda != mu.lambda)
        throw NotDominated("weights differ in level direction (Lambda coefficient)");
    DepthLevel r{0, 0, {}};
    r.m.resize(ad.num_simple());
    for (std::size_t i = 0; i < ad.num_simple(); ++i) {
        Rat mi = lambda.a[i] - mu.a[i];
        if (mi.get_den() != 1 || mi < 0) throw NotDominated("mu is not dominated by lambda");
        r.m[i] = mi.get_num().get_si();
        r.depth += r.m[i];
    }
    r.level = r.m[ad.ell()];
    return r;
}

}  // namespace looplat

#endif
