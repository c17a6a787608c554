#ifndef LOOPLAT_WEIGHTS_HPP
#define LOOPLAT_WEIGHTS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "looplat/affine.hpp"
#include "looplat/rational.hpp"

namespace looplat {

struct NotDominant : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonPositiveLevel : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LevelOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Weights of V^lambda are keyed by the drop lambda - mu = sum m_i a_i,
// stored as the integer vector (m_1, ..., m_{ell+1}).
using WeightKey = std::vector<int>;

struct MaximalWeightInfo {
    WeightKey key;
    bool indeterminate = false;  // kept for the API; never set (mu+iota always testable)
};

struct LinearQuadraticReport {
    int a0_used = 1;
    Rat max_residual;
    bool contract_holds = false;
};

struct KPFit {
    double A = 0.0;
    double C = 1.0;
};

// Weight system of the irreducible highest-weight module V^lambda up to a
// level bound, multiplicities by the affine Freudenthal recursion (imaginary
// roots enter with multiplicity ell), exact rational arithmetic.
class WeightSystem {
  public:
    WeightSystem(const AffineData& ad, AffineWeight lambda, long level_bound,
                 std::size_t weight_budget = 2'000'000)
        : ad_(&ad), lambda_(std::move(lambda)), n_(level_bound), budget_(weight_budget) {
        validate();
        build();
    }

    const AffineData& affine() const { return *ad_; }
    const AffineWeight& highest_weight() const { return lambda_; }
    long level_bound() const { return n_; }

    AffineWeight weight_of(const WeightKey& m) const {
        AffineWeight w = lambda_;
        for (std::size_t i = 0; i < m.size(); ++i) w.a[i] -= m[i];
        return w;
    }

    Int mult(const WeightKey& m) const {
        long lev = m.empty() ? 0 : m[ad_->ell()];
        if (lev > n_) throw LevelOutOfRange("weight level exceeds the table bound");
        for (int x : m)
            if (x < 0) return 0;
        auto it = table_.find(m);
        return it == table_.end() ? Int(0) : it->second;
    }

    Int mult(const AffineWeight& mu) const { return mult(key_of(mu)); }

    WeightKey key_of(const AffineWeight& mu) const {
        auto dl = depth_level(*ad_, lambda_, mu);
        WeightKey k(dl.m.size());
        for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<int>(dl.m[i]);
        return k;
    }

    Int dim_level(long n) const {
        if (n > n_) throw LevelOutOfRange("level exceeds the table bound");
        if (n < 0 || static_cast<std::size_t>(n) >= by_level_.size()) return 0;
        Int d = 0;
        for (const auto& k : by_level_[static_cast<std::size_t>(n)]) d += table_.at(k);
        return d;
    }

    const std::vector<WeightKey>& level_slice(long n) const {
        static const std::vector<WeightKey> empty;
        if (n > n_) throw LevelOutOfRange("level exceeds the table bound");
        if (n < 0 || static_cast<std::size_t>(n) >= by_level_.size()) return empty;
        return by_level_[static_cast<std::size_t>(n)];
    }

    std::vector<WeightKey> all_keys_sorted() const {
        std::vector<WeightKey> out;
        for (const auto& lvl : by_level_) out.insert(out.end(), lvl.begin(), lvl.end());
        std::sort(out.begin(), out.end(), [this](const WeightKey& a, const WeightKey& b) {
            long la = a[ad_->ell()], lb = b[ad_->ell()];
            if (la != lb) return la < lb;
            long da = std::accumulate(a.begin(), a.end(), 0L);
            long db = std::accumulate(b.begin(), b.end(), 0L);
            if (da != db) return da < db;
            return a < b;
        });
        return out;
    }

    std::vector<MaximalWeightInfo> maximal_weights() const {
        std::vector<MaximalWeightInfo> out;
        auto iota = ad_->iota_coords();
        for (const auto& [k, m] : table_) {
            WeightKey up = k;
            bool neg = false;
            for (std::size_t i = 0; i < up.size(); ++i) {
                up[i] -= iota[i];
                if (up[i] < 0) neg = true;
            }
            bool is_weight_above = !neg && table_.count(up) > 0;
            if (!is_weight_above) out.push_back({k, false});
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
        return out;
    }

    // mu = eta - n' iota with eta maximal; returns (eta key, n').
    std::pair<WeightKey, long> maximal_decomposition(const WeightKey& k) const {
        auto iota = ad_->iota_coords();
        WeightKey cur = k;
        long steps = 0;
        while (true) {
            WeightKey up = cur;
            bool neg = false;
            for (std::size_t i = 0; i < up.size(); ++i) {
                up[i] -= iota[i];
                if (up[i] < 0) neg = true;
            }
            if (neg || table_.count(up) == 0) return {cur, steps};
            cur = up;
            ++steps;
        }
    }

    LinearQuadraticReport check_linear_quadratic() const {
        Rat lambda_sq = ad_->form(lambda_, lambda_);
        Rat p = ad_->pair_c(lambda_);
        LinearQuadraticReport rep;
        for (int a0 : {1, 2}) {
            Rat worst;
            bool first = true;
            for (const auto& [k, m] : table_) {
                AffineWeight mu = weight_of(k);
                Rat n = Rat(k[ad_->ell()]);
                Rat res = ad_->classical_norm_sq(mu) - Rat(2) / a0 * p * n;
                if (first || res > worst) {
                    worst = res;
                    first = false;
                }
            }
            rep.a0_used = a0;
            rep.max_residual = worst;
            rep.contract_holds = worst <= lambda_sq;
            if (rep.contract_holds) break;
        }
        return rep;
    }

    // Envelope fit mult(mu) <= C e^{A sqrt(n)}, tight at >= 1 point.
    KPFit fit_kp_constants() const {
        KPFit fit;
        for (std::size_t n = 1; n < by_level_.size(); ++n) {
            Int mx = 0;
            for (const auto& k : by_level_[n])
                if (table_.at(k) > mx) mx = table_.at(k);
            if (mx > 1) {
                double a = std::log(mx.get_d()) / std::sqrt(static_cast<double>(n));
                fit.A = std::max(fit.A, a);
            }
        }
        for (std::size_t n = 0; n < by_level_.size(); ++n)
            for (const auto& k : by_level_[n]) {
                double bound = std::exp(fit.A * std::sqrt(static_cast<double>(n)));
                fit.C = std::max(fit.C, table_.at(k).get_d() / bound);
            }
        return fit;
    }

    // Envelope fit dim_level(n) <= C e^{A sqrt(n)}, tight at >= 1 point.
    KPFit fit_dim_constants() const {
        KPFit fit;
        for (std::size_t n = 1; n < by_level_.size(); ++n) {
            Int d = dim_level(static_cast<long>(n));
            if (d > 1) fit.A = std::max(fit.A, std::log(d.get_d()) / std::sqrt(static_cast<double>(n)));
        }
        for (std::size_t n = 0; n < by_level_.size(); ++n) {
            double bound = std::exp(fit.A * std::sqrt(static_cast<double>(n)));
            fit.C = std::max(fit.C, dim_level(static_cast<long>(n)).get_d() / bound);
        }
        return fit;
    }

    struct CharacterTerm {
        WeightKey key;
        Int mult;
    };

    std::vector<CharacterTerm> formal_character(long n_max) const {
        if (n_max > n_) throw LevelOutOfRange("character level exceeds the table bound");
        std::vector<CharacterTerm> out;
        for (const auto& k : all_keys_sorted()) {
            if (k[ad_->ell()] > n_max) continue;
            out.push_back({k, table_.at(k)});
        }
        return out;
    }

    // Smallest exact h-scale over the level-n weights for diagonal torus data;
    // used by the tail bounds. exps[i] = log s_i (natural log), i 0-based.
    double min_log_classical_scale(long n, const std::vector<double>& coroot_log_scales) const {
        double best = 0.0;
        bool first = true;
        for (const auto& k : level_slice(n)) {
            AffineWeight mu = weight_of(k);
            double v = 0.0;
            for (std::size_t i = 0; i < ad_->num_simple(); ++i)
                if (coroot_log_scales[i] != 0.0)
                    v += coroot_log_scales[i] * to_double(ad_->pair_coroot(mu, i));
            if (first || v < best) {
                best = v;
                first = false;
            }
        }
        return first ? 0.0 : best;
    }

  private:
    void validate() const {
        if (n_ < 0) throw std::invalid_argument("level bound must be >= 0");
        if (!(ad_->pair_c(lambda_) > 0)) throw NonPositiveLevel("highest weight must have positive level");
        for (std::size_t i = 0; i < ad_->num_simple(); ++i) {
            Rat p = ad_->pair_coroot(lambda_, i);
            if (p < 0 || p.get_den() != 1) throw NotDominant("highest weight must be dominant integral");
        }
        Rat d = ad_->pair_d(lambda_);
        if (d.get_den() != 1) throw NotDominant("highest weight must pair integrally with d");
    }

    void build() {
        AffineWeight rho = ad_->weyl_vector();
        AffineWeight lr = lambda_ + rho;
        Rat lr_sq = ad_->form(lr, lr);

        // Positive affine roots with iota coefficient <= n_, as drop vectors.
        struct PosRoot {
            std::vector<int> acoords;
            AffineRoot root;
        };
        std::vector<PosRoot> roots;
        for (const auto& r : ad_->roots_up_to(static_cast<int>(n_))) {
            if (r.sign < 0) continue;
            roots.push_back({r.a_coords(ad_->classical().highest_root()), r});
        }

        std::size_t np = ad_->num_simple();
        WeightKey zero(np, 0);
        table_[zero] = 1;
        push_level(zero);

        std::vector<WeightKey> frontier = {zero};
        while (!frontier.empty()) {
            std::unordered_map<WeightKey, bool, VecHash> cand;
            for (const auto& k : frontier)
                for (std::size_t i = 0; i < np; ++i) {
                    WeightKey c = k;
                    c[i] += 1;
                    if (c[ad_->ell()] > n_) continue;
                    if (!table_.count(c)) cand[c] = true;
                }
            std::vector<WeightKey> next;
            for (auto& [k, unused] : cand) {
                Int m = freudenthal(k, roots, lr, lr_sq);
                if (m > 0) {
                    if (table_.size() >= budget_)
                        throw BudgetExceeded("weight table exceeds the configured budget");
                    table_[k] = m;
                    push_level(k);
                    next.push_back(k);
                }
            }
            frontier = std::move(next);
        }
    }

    template <typename Roots>
    Int freudenthal(const WeightKey& k, const Roots& roots, const AffineWeight& lr, const Rat& lr_sq) {
        AffineWeight mu = weight_of(k);
        AffineWeight rho = lr - lambda_;
        AffineWeight mu_rho = mu + rho;
        Rat denom = lr_sq - ad_->form(mu_rho, mu_rho);
        if (denom == 0) return 0;

        Rat total = 0;
        for (const auto& pr : roots) {
            // (mu + j a, a) = (mu, a) + j (a, a); imaginary roots have (a,a)=0.
            Rat mu_a = ad_->form_with_root(mu, pr.root);
            Rat a_a = pr.root.imaginary ? Rat(0) : ad_->classical().form(pr.root.classical, pr.root.classical);
            for (int j = 1;; ++j) {
                WeightKey up = k;
                bool ok = true;
                for (std::size_t i = 0; i < up.size(); ++i) {
                    up[i] -= j * pr.acoords[i];
                    if (up[i] < 0) ok = false;
                }
                if (!ok) break;
                auto it = table_.find(up);
                if (it != table_.end() && it->second > 0) {
                    Rat pairing = mu_a + Rat(j) * a_a;
                    total += Rat(pr.root.mult) * it->second * pairing;
                }
            }
        }
        Rat m = 2 * total / denom;
        if (m.get_den() != 1) throw std::logic_error("Freudenthal produced a non-integer multiplicity");
        if (m < 0) throw std::logic_error("Freudenthal produced a negative multiplicity");
        return m.get_num();
    }

    void push_level(const WeightKey& k) {
        std::size_t lev = static_cast<std::size_t>(k[ad_->ell()]);
        if (by_level_.size() <= lev) by_level_.resize(lev + 1);
        by_level_[lev].push_back(k);
    }

    const AffineData* ad_;
    AffineWeight lambda_;
    long n_;
    std::size_t budget_;
    std::unordered_map<WeightKey, Int, VecHash> table_;
    std::vector<std::vector<WeightKey>> by_level_;
};

inline WeightSystem weight_system(const AffineData& ad, const AffineWeight& lambda, long level_bound) {
    return WeightSystem(ad, lambda, level_bound);
}

}  // namespace looplat

#endif
