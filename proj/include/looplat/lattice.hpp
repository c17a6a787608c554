#ifndef LOOPLAT_LATTICE_HPP
#define LOOPLAT_LATTICE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "looplat/matrix.hpp"
#include "looplat/rational.hpp"

namespace looplat {

struct ZeroRankLattice : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EnumerationBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Euclidean lattice presented by an exact rational Gram matrix. A twist
// delta rescales all norms by e^{-delta} (effective Gram e^{-2 delta} G);
// the exact matrix is kept untouched so rational comparisons stay exact.
struct GramLattice {
    std::size_t rank = 0;
    QMatrix gram;
    double twist = 0.0;
    std::string label;

    GramLattice() : gram(0, 0) {}
    GramLattice(QMatrix g, std::string lab = "", double tw = 0.0)
        : rank(g.rows()), gram(std::move(g)), twist(tw), label(std::move(lab)) {
        if (gram.rows() != gram.cols()) throw std::invalid_argument("Gram matrix must be square");
        if (!gram.is_symmetric()) throw std::invalid_argument("Gram matrix must be symmetric");
        if (rank > 0 && !gram.is_positive_definite())
            throw std::invalid_argument("Gram matrix must be positive definite");
    }

    static GramLattice standard(std::size_t n, std::string lab = "") {
        return GramLattice(QMatrix::identity(n), std::move(lab));
    }

    double norm_scale() const { return std::exp(-2.0 * twist); }
};

struct ThetaOptions {
    double tail_tolerance = 1e-12;
    std::optional<double> max_radius;  // cap on the effective enumeration radius
    double scale_t = 1.0;

    void validate() const {
        if (!(tail_tolerance > 0)) throw std::invalid_argument("tail_tolerance must be positive");
        if (!(scale_t > 0)) throw std::invalid_argument("scale_t must be positive");
        if (max_radius && !(*max_radius > 0)) throw std::invalid_argument("max_radius must be positive");
    }
};

inline double covolume(const GramLattice& L) {
    if (L.rank == 0) return 1.0;
    Rat d = L.gram.det();
    return std::sqrt(to_double(d)) * std::exp(-static_cast<double>(L.rank) * L.twist);
}

inline double arithmetic_degree(const GramLattice& L) { return -std::log(covolume(L)); }

inline GramLattice dual(const GramLattice& L) {
    if (L.rank == 0) return L;
    GramLattice D(L.gram.inverse(), L.label.empty() ? "" : L.label + "^dual");
    D.twist = -L.twist;
    return D;
}

inline GramLattice twist_by_O(const GramLattice& L, double delta) {
    GramLattice T = L;
    T.twist += delta;
    return T;
}

namespace detail {

// Fincke-Pohst enumeration over the exact Gram form q. Calls f(coeffs, q(v))
// for every nonzero v with q(v) <= radius_sq; the visitor may shrink the
// radius (shortest-vector search). Exact rational pruning throughout; floats
// only size the per-coordinate loop windows.
class Enumerator {
  public:
    Enumerator(const QMatrix& gram, std::int64_t node_budget = 200'000'000)
        : n_(gram.rows()), budget_(node_budget) {
        gram.ldlt(L_, D_);
        Dd_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) Dd_[i] = to_double(D_[i]);
    }

    // f returns the (possibly shrunk) radius^2 to continue with.
    void run(Rat radius_sq, const std::function<Rat(const std::vector<long>&, const Rat&)>& f) {
        x_.assign(n_, 0);
        radius_ = std::move(radius_sq);
        visit_ = f;
        nodes_ = 0;
        descend(static_cast<long>(n_) - 1, Rat(0));
    }

    std::int64_t nodes() const { return nodes_; }

  private:
    void descend(long i, const Rat& acc) {
        if (i < 0) {
            bool zero = true;
            for (long v : x_)
                if (v != 0) {
                    zero = false;
                    break;
                }
            if (!zero) {
                Rat r = visit_(x_, acc);
                if (r < radius_) radius_ = r;
            }
            return;
        }
        Rat c(0);
        for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n_; ++j)
            if (x_[j] != 0) c += L_(j, static_cast<std::size_t>(i)) * x_[j];
        Rat rem = radius_ - acc;
        if (rem < 0) return;
        double cd = to_double(c);
        double span = std::sqrt(std::max(0.0, to_double(rem) / Dd_[static_cast<std::size_t>(i)])) + 1e-9;
        long lo = static_cast<long>(std::floor(-cd - span)) - 1;
        long hi = static_cast<long>(std::ceil(-cd + span)) + 1;
        for (long v = lo; v <= hi; ++v) {
            if (++nodes_ > budget_) throw EnumerationBudgetExceeded("lattice enumeration budget exceeded");
            Rat t = c + v;
            Rat add = D_[static_cast<std::size_t>(i)] * t * t;
            Rat acc2 = acc + add;
            if (acc2 > radius_) continue;
            x_[static_cast<std::size_t>(i)] = v;
            descend(i - 1, acc2);
        }
        x_[static_cast<std::size_t>(i)] = 0;
    }

    std::size_t n_;
    std::int64_t budget_;
    QMatrix L_;
    std::vector<Rat> D_;
    std::vector<double> Dd_;
    std::vector<long> x_;
    Rat radius_;
    std::function<Rat(const std::vector<long>&, const Rat&)> visit_;
    std::int64_t nodes_ = 0;
};

}  // namespace detail

// Exact squared first minimum of the rational Gram form (twist excluded).
inline std::pair<Rat, std::vector<long>> shortest_vector_sq_exact(const QMatrix& gram) {
    if (gram.rows() == 0) throw ZeroRankLattice("shortest vector of the zero lattice");
    Rat best = gram(0, 0);
    std::vector<long> witness(gram.rows(), 0);
    witness[0] = 1;
    for (std::size_t i = 1; i < gram.rows(); ++i)
        if (gram(i, i) < best) {
            best = gram(i, i);
            std::fill(witness.begin(), witness.end(), 0);
            witness[i] = 1;
        }
    detail::Enumerator en(gram);
    en.run(best, [&](const std::vector<long>& x, const Rat& q) {
        if (q < best) {
            best = q;
            witness = x;
        }
        return best;
    });
    return {best, witness};
}

struct ShortestVector {
    double lambda1;           // effective (twisted) length
    Rat lambda1_sq_exact;     // exact squared length of the untwisted form
    std::vector<long> witness;
};

inline ShortestVector shortest_vector(const GramLattice& L) {
    auto [q, w] = shortest_vector_sq_exact(L.gram);
    return {std::sqrt(to_double(q)) * std::exp(-L.twist), q, w};
}

// Upper bound on sum_{||v|| > R} e^{-pi ||v||^2} over a rank-r lattice with
// first minimum lambda1, via shells of width lambda1/2. Shell terms are
// handled in the log domain; once they underflow while decreasing, the
// remaining tail is below any representable tolerance.
inline double gaussian_tail_bound(std::size_t r, double lambda1, double R) {
    double h = lambda1 / 2.0;
    double total = 0.0;
    double prev_log = std::numeric_limits<double>::infinity();
    double rr = static_cast<double>(r);
    for (int j = 0;; ++j) {
        double inner = R + j * h;
        double outer = R + (j + 1) * h;
        double log_term = rr * std::log(2.0 * outer / lambda1 + 1.0) - M_PI * inner * inner;
        double term = log_term < -745.0 ? 0.0 : std::exp(log_term);
        total += term;
        if (log_term < -745.0 && j > 2 && log_term < prev_log) {
            // The log-terms decrease from here on (the quadratic dominates),
            // so the remainder stays under DBL_MIN per shell.
            return total + 1e-300;
        }
        if (term < 1e-6 * total && j > 2) {
            double next_in = outer;
            double next_out = R + (j + 2) * h;
            double log_ratio = rr * (std::log(2.0 * next_out / lambda1 + 1.0) -
                                     std::log(2.0 * outer / lambda1 + 1.0)) -
                               M_PI * (next_in * next_in - inner * inner);
            if (log_ratio < std::log(0.5)) {
                double ratio = std::exp(log_ratio);
                return total + term * ratio / (1.0 - ratio);
            }
        }
        prev_log = log_term;
        if (j > 10000) return std::numeric_limits<double>::infinity();
    }
}

struct ThetaValue {
    double value = 0.0;       // log of the enumerated Gaussian sum
    double tail_bound = 0.0;  // certified bound on the omitted tail of the sum
    std::int64_t points = 1;  // lattice points enumerated (incl. 0)
};

// h^0_theta = log sum_v e^{-pi t ||v||^2}, with twist folded into the scale.
inline ThetaValue theta_h0_certified(const GramLattice& L, const ThetaOptions& opts = {}) {
    opts.validate();
    if (L.rank == 0) return {0.0, 0.0, 1};
    double s_eff = opts.scale_t * L.norm_scale();  // q_eff = s_eff * q_exact
    auto [l1sq, w] = shortest_vector_sq_exact(L.gram);
    double lambda1_eff = std::sqrt(to_double(l1sq) * s_eff);

    // Effective radius from the certified tail bound.
    double R = std::max(lambda1_eff, std::sqrt(std::log(2.0 / opts.tail_tolerance) / M_PI));
    double tail;
    while ((tail = gaussian_tail_bound(L.rank, lambda1_eff, R)) >= opts.tail_tolerance) {
        R += 0.25 * std::max(1.0, lambda1_eff);
        if (opts.max_radius && R > *opts.max_radius)
            throw EnumerationBudgetExceeded("max_radius too small to certify the theta tail");
        if (R > 1e9) throw EnumerationBudgetExceeded("theta tail cannot be certified");
    }
    if (opts.max_radius && R > *opts.max_radius)
        throw EnumerationBudgetExceeded("max_radius too small to certify the theta tail");

    Rat radius_sq_exact(R * R / s_eff);
    double sum = 1.0, comp = 0.0;  // Kahan; v = 0 contributes 1
    std::int64_t points = 1;
    detail::Enumerator en(L.gram);
    en.run(radius_sq_exact, [&](const std::vector<long>&, const Rat& q) {
        double term = std::exp(-M_PI * s_eff * to_double(q));
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        ++points;
        return radius_sq_exact;
    });
    return {std::log(sum), tail, points};
}

inline double theta_h0(const GramLattice& L, const ThetaOptions& opts = {}) {
    return theta_h0_certified(L, opts).value;
}

inline double theta_h1(const GramLattice& L, const ThetaOptions& opts = {}) {
    return theta_h0(dual(L), opts);
}

// h0 - h1 - deg; the Poisson identity makes this vanish at scale_t = 1,
// which is the scale this check always evaluates at.
inline double riemann_roch_residual(const GramLattice& L, const ThetaOptions& opts = {}) {
    ThetaOptions o = opts;
    o.scale_t = 1.0;
    return theta_h0(L, o) - theta_h1(L, o) - arithmetic_degree(L);
}

// log #{v : ||v||_eff <= 1}; the count includes v = 0.
inline double arakelov_h0(const GramLattice& L) {
    if (L.rank == 0) return 0.0;
    double scale = L.norm_scale();
    Rat radius_sq(1.0 / scale);
    std::int64_t count = 1;
    detail::Enumerator en(L.gram);
    en.run(radius_sq, [&](const std::vector<long>&, const Rat&) {
        ++count;
        return radius_sq;
    });
    return std::log(static_cast<double>(count));
}

namespace detail {

// log of the upper incomplete gamma function Gamma(a, x), a > 0, x >= 0.
inline double log_upper_gamma(double a, double x) {
    if (x <= 0) return std::lgamma(a);
    if (x < a + 1.0) {
        // Lower series: P(a,x) = gamma(a,x)/Gamma(a).
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
        }
        double logP = -x + a * std::log(x) - std::lgamma(a) + std::log(sum);
        double P = std::exp(logP);
        if (P >= 1.0) return -std::numeric_limits<double>::infinity();
        return std::lgamma(a) + std::log1p(-P);
    }
    // Continued fraction (modified Lentz), Gamma(a,x) = e^{-x} x^a * CF.
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 1000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return -x + a * std::log(x) + std::log(h);
}

}  // namespace detail

struct GroenewegenBound {
    double exact;                     // C(r, lambda1)
    std::optional<double> simplified; // present iff lambda1 > sqrt(r/(2 pi))
    double log_exact;                 // log C(r, lambda1), safe for huge ranks
    std::optional<double> log_simplified;
};

// Theorem bound C(r, lambda1) = 3^r (pi lambda1^2)^{-r/2} int_{pi lambda1^2}^inf u^{r/2} e^{-u} du.
inline GroenewegenBound groenewegen_bound(std::size_t r, double lambda1) {
    if (r == 0 || !(lambda1 > 0)) throw std::invalid_argument("groenewegen_bound: need r >= 1, lambda1 > 0");
    double rr = static_cast<double>(r);
    double x = M_PI * lambda1 * lambda1;
    double log_exact = rr * std::log(3.0) - (rr / 2.0) * std::log(x) + detail::log_upper_gamma(rr / 2.0 + 1.0, x);
    GroenewegenBound b{};
    b.log_exact = log_exact;
    b.exact = std::exp(log_exact);
    if (lambda1 > std::sqrt(rr / (2.0 * M_PI))) {
        double log_simpl = rr * std::log(3.0) - std::log1p(-rr / (2.0 * M_PI * lambda1 * lambda1)) - x;
        b.log_simplified = log_simpl;
        b.simplified = std::exp(log_simpl);
    }
    return b;
}

}  // namespace looplat

#endif
