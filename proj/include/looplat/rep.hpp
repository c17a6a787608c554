#ifndef LOOPLAT_REP_HPP
#define LOOPLAT_REP_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "looplat/affine.hpp"
#include "looplat/chevalley.hpp"
#include "looplat/garland.hpp"
#include "looplat/matrix.hpp"
#include "looplat/rational.hpp"
#include "looplat/weights.hpp"

namespace looplat {

struct MultiplicityMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownGenerator : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RangeExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroScalar : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotUnipotentWord : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FactorizationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotIwasawaForm : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coordinates of a vector in the truncation, one entry per weight block.
using BlockVector = std::unordered_map<std::size_t, std::vector<Rat>>;

// Weight-graded linear operator: blocks[src][tgt] maps the src block into
// the tgt block (matrix is dim(tgt) x dim(src)).
struct BlockOperator {
    std::unordered_map<std::size_t, std::unordered_map<std::size_t, QMatrix>> blocks;

    bool is_zero() const {
        for (const auto& [s, row] : blocks)
            for (const auto& [t, m] : row)
                if (!m.is_zero()) return false;
        return true;
    }

    void add_block(std::size_t src, std::size_t tgt, const QMatrix& m) {
        if (m.is_zero()) return;
        auto it = blocks[src].find(tgt);
        if (it == blocks[src].end())
            blocks[src][tgt] = m;
        else
            it->second = it->second + m;
    }

    BlockOperator operator+(const BlockOperator& o) const {
        BlockOperator r = *this;
        for (const auto& [s, row] : o.blocks)
            for (const auto& [t, m] : row) r.add_block(s, t, m);
        return r;
    }

    BlockOperator operator-(const BlockOperator& o) const { return *this + o * Rat(-1); }

    BlockOperator operator*(const Rat& c) const {
        BlockOperator r;
        if (c == 0) return r;
        for (const auto& [s, row] : blocks)
            for (const auto& [t, m] : row) r.blocks[s][t] = m * c;
        return r;
    }

    // (*this) after `first`: v -> this(first(v)).
    BlockOperator compose(const BlockOperator& first) const {
        BlockOperator r;
        for (const auto& [s, row] : first.blocks)
            for (const auto& [mid, m1] : row) {
                auto it = blocks.find(mid);
                if (it == blocks.end()) continue;
                for (const auto& [t, m2] : it->second) r.add_block(s, t, m2 * m1);
            }
        return r;
    }

    BlockOperator commutator(const BlockOperator& o) const {
        return this->compose(o) - o.compose(*this);
    }

    BlockVector apply(const BlockVector& v) const {
        BlockVector r;
        for (const auto& [w, coords] : v) {
            auto it = blocks.find(w);
            if (it == blocks.end()) continue;
            for (const auto& [t, m] : it->second) {
                auto img = m.apply(coords);
                auto& acc = r[t];
                if (acc.empty()) acc.assign(img.size(), Rat(0));
                for (std::size_t i = 0; i < img.size(); ++i) acc[i] += img[i];
            }
        }
        for (auto it = r.begin(); it != r.end();) {
            bool z = std::all_of(it->second.begin(), it->second.end(), [](const Rat& x) { return x == 0; });
            it = z ? r.erase(it) : std::next(it);
        }
        return r;
    }
};

// Exact truncation of V^lambda to levels <= N: per-weight bases presented by
// f-monomial words, contravariant Gram matrices, generator matrices for the
// full affine Chevalley basis (built by bracket ladders from the simple
// generators), and the Garland integral lattice per weight space.
class RepTruncation {
  public:
    explicit RepTruncation(const WeightSystem& ws)
        : ws_(&ws), ad_(&ws.affine()), chev_(ws.affine().classical()) {
        build_skeleton();
    }

    const WeightSystem& weight_system() const { return *ws_; }
    const AffineData& affine() const { return *ad_; }
    long level_bound() const { return ws_->level_bound(); }

    std::size_t num_weights() const { return keys_.size(); }
    const std::vector<WeightKey>& weight_keys() const { return keys_; }
    const WeightKey& key(std::size_t w) const { return keys_[w]; }
    long level_of(std::size_t w) const { return keys_[w][ad_->ell()]; }
    std::size_t dim(std::size_t w) const { return dims_[w]; }
    const QMatrix& gram(std::size_t w) const { return gram_[w]; }

    std::optional<std::size_t> index_of(const WeightKey& k) const {
        auto it = widx_.find(k);
        if (it == widx_.end()) return std::nullopt;
        return it->second;
    }

    // The f-word presenting basis vector (w, col), outermost letter first.
    std::vector<std::size_t> basis_word(std::size_t w, std::size_t col) const {
        std::vector<std::size_t> word;
        while (w != root_widx_) {
            const auto& [i, parent_col] = provenance_[w][col];
            word.push_back(i);
            w = *index_of(parent_key(keys_[w], i));
            col = parent_col;
        }
        return word;
    }

    BlockVector highest_weight_vector() const {
        BlockVector v;
        v[root_widx_] = {Rat(1)};
        return v;
    }

    // e_i / f_i as block operators (i zero-based in [0, ell]).
    const BlockOperator& simple_e(std::size_t i) const { return e_ops_[i]; }
    const BlockOperator& simple_f(std::size_t i) const { return f_ops_[i]; }

    // E_beta (x) t^m for a classical root beta; exact loop-model matrices.
    const BlockOperator& loop_element(const std::vector<int>& beta, int m) const {
        auto key = std::make_pair(beta, m);
        auto it = loop_cache_.find(key);
        if (it != loop_cache_.end()) return it->second;
        BlockOperator op = build_loop_element(beta, m);
        return loop_cache_.emplace(key, std::move(op)).first->second;
    }

    // H_j (x) t^r, r != 0, j zero-based in [0, ell-1].
    const BlockOperator& imaginary_element(std::size_t j, int r) const {
        if (r == 0 || j >= ad_->ell()) throw UnknownGenerator("imaginary generator needs r != 0, j <= ell");
        auto key = std::make_pair(std::vector<int>{static_cast<int>(j)}, r);
        auto it = imag_cache_.find(key);
        if (it != imag_cache_.end()) return it->second;
        std::vector<int> alpha(ad_->ell(), 0);
        alpha[j] = 1;
        std::vector<int> malpha(ad_->ell(), 0);
        malpha[j] = -1;
        BlockOperator op = loop_element(alpha, r).commutator(loop_element(malpha, 0));
        return imag_cache_.emplace(key, std::move(op)).first->second;
    }

    // xi_a for a real affine root a (signed).
    const BlockOperator& chevalley_element(const AffineRoot& a) const {
        if (a.imaginary) throw UnknownGenerator("chevalley_element expects a real root");
        return loop_element(a.classical, a.n);
    }

    // Diagonal coroot pairing <mu, a_i^vee> on block w.
    Rat coroot_pairing(std::size_t w, std::size_t i) const {
        return ad_->pair_coroot(ws_->weight_of(keys_[w]), i);
    }

    // chi_a(s) = exp(s xi_a); exact, nilpotency from the level grading.
    BlockOperator chi(const AffineRoot& a, const Rat& s) const {
        BlockOperator id = identity();
        if (s == 0) return id;
        const BlockOperator& x = chevalley_element(a);
        BlockOperator acc = id;
        BlockOperator power = x;
        Rat coeff = s;
        for (unsigned k = 1;; ++k) {
            acc = acc + power * coeff;
            BlockOperator next = power.compose(x);
            if (next.is_zero()) break;
            power = std::move(next);
            coeff = coeff * s / static_cast<long>(k + 1);
            if (k > 4 * keys_.size() + 8) throw std::logic_error("chi: generator not nilpotent on truncation");
        }
        return acc;
    }

    BlockOperator w_element(const AffineRoot& a, const Rat& s) const {
        if (s == 0) throw ZeroScalar("w_a(0) undefined");
        AffineRoot ma = negate(a);
        return chi(a, s).compose(chi(ma, -Rat(1) / s)).compose(chi(a, s));
    }

    // h_a(s) = w_a(s) w_a(1)^{-1}; w_a(1)^{-1} = w_a(-1).
    BlockOperator h_element(const AffineRoot& a, const Rat& s) const {
        if (s == 0) throw ZeroScalar("h_a(0) undefined");
        return w_element(a, s).compose(w_element(a, Rat(-1)));
    }

    BlockOperator identity() const {
        BlockOperator id;
        for (std::size_t w = 0; w < keys_.size(); ++w) id.blocks[w][w] = QMatrix::identity(dims_[w]);
        return id;
    }

    // Integral basis of V_Z intersected with the weight space, columns in the
    // f-word basis coordinates, HNF-canonical.
    const QMatrix& integral_basis(std::size_t w) const {
        if (w >= keys_.size()) throw RangeExceeded("weight index out of range");
        if (integral_[w].rows() == 0 && dims_[w] > 0) build_integral_basis(w);
        return integral_[w];
    }

    // Gram matrix of the integral basis under the contravariant form.
    QMatrix integral_gram(std::size_t w) const {
        const QMatrix& b = integral_basis(w);
        return b.transpose() * gram_[w] * b;
    }

    static AffineRoot negate(AffineRoot a) {
        for (auto& c : a.classical) c = -c;
        a.n = -a.n;
        a.sign = -a.sign;
        return a;
    }

  private:
    WeightKey parent_key(const WeightKey& k, std::size_t i) const {
        WeightKey p = k;
        p[i] -= 1;
        return p;
    }

    void build_skeleton() {
        // Coherent order: increasing depth, then lexicographic.
        keys_ = ws_->all_keys_sorted();
        std::stable_sort(keys_.begin(), keys_.end(), [](const WeightKey& a, const WeightKey& b) {
            long da = std::accumulate(a.begin(), a.end(), 0L);
            long db = std::accumulate(b.begin(), b.end(), 0L);
            if (da != db) return da < db;
            return a < b;
        });
        for (std::size_t w = 0; w < keys_.size(); ++w) widx_[keys_[w]] = w;
        root_widx_ = widx_.at(WeightKey(ad_->num_simple(), 0));

        std::size_t np = ad_->num_simple();
        dims_.assign(keys_.size(), 0);
        gram_.assign(keys_.size(), QMatrix(0, 0));
        provenance_.assign(keys_.size(), {});
        integral_.assign(keys_.size(), QMatrix(0, 0));
        f_mat_.assign(np, std::unordered_map<std::size_t, QMatrix>{});
        e_mat_.assign(np, std::unordered_map<std::size_t, QMatrix>{});

        for (std::size_t w = 0; w < keys_.size(); ++w) {
            const WeightKey& k = keys_[w];
            Int expected = ws_->mult(k);
            if (w == root_widx_) {
                dims_[w] = 1;
                gram_[w] = QMatrix{{Rat(1)}};
                continue;
            }
            // Candidates f_i b over stored parents.
            struct Cand {
                std::size_t i, parent_w, col;
            };
            std::vector<Cand> cands;
            for (std::size_t i = 0; i < np; ++i) {
                if (k[i] == 0) continue;
                auto pw = index_of(parent_key(k, i));
                if (!pw) continue;
                for (std::size_t c = 0; c < dims_[*pw]; ++c) cands.push_back({i, *pw, c});
            }
            std::size_t nc = cands.size();
            QMatrix C(nc, nc);
            for (std::size_t aidx = 0; aidx < nc; ++aidx)
                for (std::size_t bidx = aidx; bidx < nc; ++bidx) {
                    Rat v = candidate_pairing(k, cands[aidx].i, cands[aidx].parent_w, cands[aidx].col,
                                              cands[bidx].i, cands[bidx].parent_w, cands[bidx].col);
                    C(aidx, bidx) = v;
                    C(bidx, aidx) = v;
                }

            // Greedy selection of a basis among the candidates.
            std::vector<std::size_t> sel;
            for (std::size_t cidx = 0; cidx < nc && sel.size() < expected.get_ui(); ++cidx) {
                std::vector<std::size_t> trial = sel;
                trial.push_back(cidx);
                if (C.submatrix(trial, trial).rank() == trial.size()) sel.push_back(cidx);
            }
            if (sel.size() != expected)
                throw MultiplicityMismatch("radical-quotient dimension disagrees with Freudenthal at a weight");
            dims_[w] = sel.size();
            gram_[w] = C.submatrix(sel, sel);
            for (std::size_t s : sel) provenance_[w].push_back({cands[s].i, cands[s].col});

            // f-matrices into this weight: coordinates of every candidate.
            QMatrix ginv = gram_[w].inverse();
            std::vector<std::vector<Rat>> coords(nc);
            for (std::size_t cidx = 0; cidx < nc; ++cidx) {
                std::vector<Rat> rhs(sel.size());
                for (std::size_t s = 0; s < sel.size(); ++s) rhs[s] = C(sel[s], cidx);
                coords[cidx] = ginv.apply(rhs);
            }
            for (std::size_t i = 0; i < np; ++i) {
                auto pw = index_of(parent_key(k, i));
                if (!pw) continue;
                QMatrix F(dims_[w], dims_[*pw]);
                bool any = false;
                for (std::size_t cidx = 0; cidx < nc; ++cidx) {
                    if (cands[cidx].i != i) continue;
                    any = true;
                    for (std::size_t r = 0; r < dims_[w]; ++r) F(r, cands[cidx].col) = coords[cidx][r];
                }
                if (any) f_mat_[i][*pw] = std::move(F);
            }

            // e-matrices out of this weight: e_i (f_j b) = f_j e_i b + [e_i,f_j] b.
            for (std::size_t i = 0; i < np; ++i) {
                auto tw = index_of(parent_key(k, i));  // target of e_i
                if (!tw) continue;
                QMatrix E(dims_[*tw], dims_[w]);
                bool nonzero = false;
                for (std::size_t col = 0; col < dims_[w]; ++col) {
                    auto [j, pcol] = provenance_[w][col];
                    auto pw = *index_of(parent_key(k, j));  // b lives here
                    std::vector<Rat> acc(dims_[*tw], Rat(0));
                    // f_j (e_i b)
                    auto gq = index_of(grandparent_key(k, i, j));
                    if (gq) {
                        auto eit = e_mat_[i].find(pw);
                        if (eit != e_mat_[i].end()) {
                            std::vector<Rat> eb(dims_[*gq], Rat(0));
                            for (std::size_t r = 0; r < dims_[*gq]; ++r) eb[r] = eit->second(r, pcol);
                            auto fit = f_mat_[j].find(*gq);
                            if (fit != f_mat_[j].end()) {
                                auto img = fit->second.apply(eb);
                                for (std::size_t r = 0; r < acc.size(); ++r) acc[r] += img[r];
                            }
                        }
                    }
                    if (i == j) {
                        Rat h = ad_->pair_coroot(ws_->weight_of(keys_[*tw]), i);
                        acc[pcol] += h;
                    }
                    for (std::size_t r = 0; r < acc.size(); ++r)
                        if (acc[r] != 0) {
                            E(r, col) = acc[r];
                            nonzero = true;
                        }
                }
                if (nonzero) e_mat_[i][w] = std::move(E);
            }
        }

        e_ops_.resize(np);
        f_ops_.resize(np);
        for (std::size_t i = 0; i < np; ++i) {
            for (const auto& [src, m] : e_mat_[i]) {
                auto t = index_of(parent_key(keys_[src], i));
                if (t) e_ops_[i].blocks[src][*t] = m;
            }
            for (const auto& [src, m] : f_mat_[i]) {
                WeightKey child = keys_[src];
                child[i] += 1;
                auto t = index_of(child);
                if (t) f_ops_[i].blocks[src][*t] = m;
            }
        }
    }

    WeightKey grandparent_key(const WeightKey& k, std::size_t i, std::size_t j) const {
        WeightKey g = k;
        g[i] -= 1;
        g[j] -= 1;
        return g;
    }

    // Shapovalov pairing of candidates f_i b and f_j b' at weight k.
    Rat candidate_pairing(const WeightKey& k, std::size_t i, std::size_t pwi, std::size_t coli,
                          std::size_t j, std::size_t pwj, std::size_t colj) const {
        Rat total = 0;
        // {f_i b, f_j b'} = {b, f_j e_i b'} + delta_ij <mu + a_i, a_i^vee> {b, b'}
        auto gq = index_of(grandparent_key(k, j, i));
        if (gq) {
            auto eit = e_mat_[i].find(pwj);
            if (eit != e_mat_[i].end()) {
                std::vector<Rat> eb(dims_[*gq], Rat(0));
                for (std::size_t r = 0; r < dims_[*gq]; ++r) eb[r] = eit->second(r, colj);
                auto fit = f_mat_[j].find(*gq);
                if (fit != f_mat_[j].end()) {
                    auto img = fit->second.apply(eb);  // in V_{mu+a_i}
                    const QMatrix& g = gram_[pwi];
                    for (std::size_t r = 0; r < img.size(); ++r)
                        if (img[r] != 0) total += g(coli, r) * img[r];
                }
            }
        }
        if (i == j) {
            AffineWeight parent = ws_->weight_of(keys_[pwi]);
            Rat h = ad_->pair_coroot(parent, i);
            total += h * gram_[pwi](coli, colj);
        }
        return total;
    }

    BlockOperator build_loop_element(const std::vector<int>& beta, int m) const {
        const RootSystem& rs = ad_->classical();
        std::size_t ell = ad_->ell();
        if (!rs.is_root(beta)) throw UnknownGenerator("not a classical root");
        const auto& theta = rs.highest_root();
        std::vector<int> mtheta(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) mtheta[i] = -theta[i];

        auto simple_index = [&](const std::vector<int>& b, int sign) -> std::optional<std::size_t> {
            int nz = 0;
            std::size_t idx = 0;
            for (std::size_t i = 0; i < b.size(); ++i) {
                if (b[i] == 0) continue;
                nz += std::abs(b[i]);
                idx = i;
                if (b[i] != sign) return std::nullopt;
            }
            if (nz == 1) return idx;
            return std::nullopt;
        };

        if (m == 0) {
            if (auto i = simple_index(beta, 1)) return e_ops_[*i];
            if (auto i = simple_index(beta, -1)) return f_ops_[*i];
            bool positive = std::all_of(beta.begin(), beta.end(), [](int x) { return x >= 0; });
            for (std::size_t i = 0; i < ell; ++i) {
                std::vector<int> step = beta;
                step[i] -= positive ? 1 : -1;
                if (!rs.is_root(step)) continue;
                std::vector<int> simple(beta.size(), 0);
                simple[i] = positive ? 1 : -1;
                Rat n = chev_.n_signed(simple, step);
                return loop_element(simple, 0).commutator(loop_element(step, 0)) * (Rat(1) / n);
            }
            throw std::logic_error("no descent step for classical root");
        }
        if (m == 1 && beta == mtheta) return e_ops_[ell];
        if (m == -1 && beta == theta) return f_ops_[ell];
        if (m == 1 || m == -1) {
            // Seed the whole t^{+-1} family at once. The Cartan ladder
            // theta^vee (x) t^{+-1} comes from one bracket with e/f_{ell+1};
            // it reaches every root pairing nontrivially with theta^vee, and
            // classical brackets spread to the rest.
            auto theta_cr = rs.coroot(theta);
            auto theta_pairing = [&](const std::vector<int>& b) {
                Rat p = 0;
                for (std::size_t i = 0; i < ell; ++i)
                    if (theta_cr[i] != 0) p += theta_cr[i] * rs.pairing_with_simple_coroot(b, i);
                return p;
            };
            BlockOperator cartan_t;  // theta^vee (x) t^m
            if (m == 1)
                cartan_t = e_ops_[ell].commutator(loop_element(theta, 0)) * Rat(-1);
            else
                cartan_t = f_ops_[ell].commutator(loop_element(mtheta, 0));
            for (const auto& psi : rs.all_roots()) {
                auto key = std::make_pair(psi, m);
                if (loop_cache_.count(key)) continue;
                Rat p = theta_pairing(psi);
                if (p == 0) continue;
                loop_cache_.emplace(key, cartan_t.commutator(loop_element(psi, 0)) * (Rat(1) / p));
            }
            for (bool changed = true; changed;) {
                changed = false;
                for (const auto& psi : rs.all_roots()) {
                    auto key = std::make_pair(psi, m);
                    if (loop_cache_.count(key)) continue;
                    for (std::size_t i = 0; i < ell && !loop_cache_.count(key); ++i)
                        for (int sgn : {1, -1}) {
                            std::vector<int> prev = psi;
                            prev[i] -= sgn;
                            auto pkey = std::make_pair(prev, m);
                            if (!rs.is_root(prev) || !loop_cache_.count(pkey)) continue;
                            std::vector<int> simple(psi.size(), 0);
                            simple[i] = sgn;
                            Rat n = chev_.n_signed(simple, prev);
                            loop_cache_.emplace(
                                key, loop_element(simple, 0).commutator(loop_cache_.at(pkey)) * (Rat(1) / n));
                            changed = true;
                            break;
                        }
                }
            }
            auto it = loop_cache_.find(std::make_pair(beta, m));
            if (it == loop_cache_.end()) throw std::logic_error("loop-degree-one family is incomplete");
            return it->second;
        }
        // |m| >= 2: ladder through H_j (x) t^{sign}.
        int s = m > 0 ? 1 : -1;
        std::size_t j = 0;
        int pair = 0;
        for (; j < ell; ++j) {
            pair = rs.pairing_with_simple_coroot(beta, j);
            if (pair != 0) break;
        }
        if (pair == 0) throw std::logic_error("root pairs to zero with all simple coroots");
        const BlockOperator& h = imaginary_element(j, s);
        return h.commutator(loop_element(beta, m - s)) * (Rat(1) / pair);
    }

    void build_integral_basis(std::size_t w) const {
        const WeightKey& k = keys_[w];
        std::vector<long> target(k.begin(), k.end());
        auto monos = enumerate_uz_monomials_for_weight(*ad_, target);
        std::vector<std::vector<Rat>> vecs;
        for (const auto& mono : monos) {
            BlockVector v = highest_weight_vector();
            for (auto it = mono.factors.rbegin(); it != mono.factors.rend(); ++it) {
                const UZFactor& f = *it;
                if (f.kind == UZFactor::Kind::DividedPower) {
                    const BlockOperator& xi = chevalley_element(negate(f.root));
                    for (unsigned p = 0; p < f.power; ++p) v = xi.apply(v);
                    Rat inv = Rat(1) / Rat(factorial(f.power));
                    for (auto& [bw, coords] : v)
                        for (auto& c : coords) c *= inv;
                } else {
                    // Lambda_q block on the vector via the Newton recurrence.
                    std::vector<BlockVector> lam(f.q + 1);
                    lam[0] = v;
                    for (unsigned q = 1; q <= f.q; ++q) {
                        BlockVector acc;
                        for (unsigned kk = 1; kk <= q; ++kk) {
                            const BlockOperator& x = imaginary_element(f.j, -static_cast<int>(kk) * f.r);
                            BlockVector term = x.apply(lam[q - kk]);
                            for (auto& [bw, coords] : term) {
                                auto& dst = acc[bw];
                                if (dst.empty()) dst.assign(coords.size(), Rat(0));
                                for (std::size_t r = 0; r < coords.size(); ++r) dst[r] += coords[r];
                            }
                        }
                        for (auto& [bw, coords] : acc)
                            for (auto& c : coords) c /= static_cast<long>(q);
                        lam[q] = std::move(acc);
                    }
                    v = std::move(lam[f.q]);
                }
                if (v.empty()) break;
            }
            auto it = v.find(w);
            if (it == v.end()) continue;
            vecs.push_back(it->second);
        }
        // Common denominator, HNF, rescale back.
        Int den = 1;
        for (const auto& vec : vecs)
            for (const auto& c : vec) {
                Int g;
                mpz_gcd(g.get_mpz_t(), den.get_mpz_t(), c.get_den().get_mpz_t());
                den = den / g * c.get_den();
            }
        std::vector<std::vector<Int>> cols;
        for (const auto& vec : vecs) {
            std::vector<Int> col(vec.size());
            bool nz = false;
            for (std::size_t r = 0; r < vec.size(); ++r) {
                Rat scaled = vec[r] * den;
                col[r] = scaled.get_num();
                if (col[r] != 0) nz = true;
            }
            if (nz) cols.push_back(std::move(col));
        }
        auto basis = hnf_column_basis(std::move(cols), dims_[w]);
        if (basis.size() != dims_[w])
            throw MultiplicityMismatch("integral lattice does not have full rank at a weight");
        QMatrix B(dims_[w], dims_[w]);
        for (std::size_t c = 0; c < basis.size(); ++c)
            for (std::size_t r = 0; r < dims_[w]; ++r) B(r, c) = Rat(basis[c][r]) / den;
        integral_[w] = std::move(B);
    }

    const WeightSystem* ws_;
    const AffineData* ad_;
    ChevalleyConstants chev_;
    std::vector<WeightKey> keys_;
    std::unordered_map<WeightKey, std::size_t, VecHash> widx_;
    std::size_t root_widx_ = 0;
    std::vector<std::size_t> dims_;
    std::vector<QMatrix> gram_;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> provenance_;
    mutable std::vector<QMatrix> integral_;
    std::vector<std::unordered_map<std::size_t, QMatrix>> f_mat_, e_mat_;
    std::vector<BlockOperator> e_ops_, f_ops_;

    struct LoopKeyHash {
        std::size_t operator()(const std::pair<std::vector<int>, int>& k) const {
            VecHash vh;
            return vh(k.first) * 1000003u ^ static_cast<std::size_t>(static_cast<unsigned>(k.second + (1 << 20)));
        }
    };
    mutable std::unordered_map<std::pair<std::vector<int>, int>, BlockOperator, LoopKeyHash> loop_cache_;
    mutable std::unordered_map<std::pair<std::vector<int>, int>, BlockOperator, LoopKeyHash> imag_cache_;
};

// Flat coordinate view of a set of weight blocks, in coherent order.
struct FlatSpace {
    std::vector<std::size_t> weights;
    std::vector<std::size_t> offsets;
    std::size_t dim = 0;
};

inline FlatSpace flat_space(const RepTruncation& rt, long min_level, long max_level) {
    FlatSpace s;
    for (std::size_t w = 0; w < rt.num_weights(); ++w) {
        long lev = rt.level_of(w);
        if (lev < min_level || lev > max_level) continue;
        s.weights.push_back(w);
        s.offsets.push_back(s.dim);
        s.dim += rt.dim(w);
    }
    return s;
}

inline QMatrix flatten_operator(const RepTruncation& rt, const BlockOperator& op, const FlatSpace& src,
                                const FlatSpace& tgt) {
    QMatrix m(tgt.dim, src.dim);
    std::unordered_map<std::size_t, std::size_t> tpos;
    for (std::size_t i = 0; i < tgt.weights.size(); ++i) tpos[tgt.weights[i]] = i;
    for (std::size_t i = 0; i < src.weights.size(); ++i) {
        auto it = op.blocks.find(src.weights[i]);
        if (it == op.blocks.end()) continue;
        for (const auto& [t, blk] : it->second) {
            auto jt = tpos.find(t);
            if (jt == tpos.end()) continue;
            std::size_t ro = tgt.offsets[jt->second], co = src.offsets[i];
            for (std::size_t r = 0; r < blk.rows(); ++r)
                for (std::size_t c = 0; c < blk.cols(); ++c)
                    if (blk(r, c) != 0) m(ro + r, co + c) = blk(r, c);
        }
    }
    return m;
}

inline QMatrix flat_gram(const RepTruncation& rt, const FlatSpace& s) {
    QMatrix g(s.dim, s.dim);
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
        const QMatrix& b = rt.gram(s.weights[i]);
        for (std::size_t r = 0; r < b.rows(); ++r)
            for (std::size_t c = 0; c < b.cols(); ++c)
                if (b(r, c) != 0) g(s.offsets[i] + r, s.offsets[i] + c) = b(r, c);
    }
    return g;
}

inline QMatrix flat_integral_basis(const RepTruncation& rt, const FlatSpace& s) {
    QMatrix g(s.dim, s.dim);
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
        const QMatrix& b = rt.integral_basis(s.weights[i]);
        for (std::size_t r = 0; r < b.rows(); ++r)
            for (std::size_t c = 0; c < b.cols(); ++c)
                if (b(r, c) != 0) g(s.offsets[i] + r, s.offsets[i] + c) = b(r, c);
    }
    return g;
}

using DMatrix = std::vector<std::vector<double>>;

namespace detail {

// Upper-triangular Cholesky factor: G = C^T C, positive diagonal.
inline DMatrix chol_upper(const DMatrix& g) {
    std::size_t n = g.size();
    DMatrix c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        double d = g[i][i];
        for (std::size_t k = 0; k < i; ++k) d -= c[k][i] * c[k][i];
        if (!(d > 0)) throw SingularInput("matrix is not positive definite");
        c[i][i] = std::sqrt(d);
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = g[i][j];
            for (std::size_t k = 0; k < i; ++k) s -= c[k][i] * c[k][j];
            c[i][j] = s / c[i][i];
        }
    }
    return c;
}

inline DMatrix dmat_mul(const DMatrix& a, const DMatrix& b) {
    std::size_t n = a.size(), m = b[0].size(), k = b.size();
    DMatrix c(n, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < k; ++q) {
            double x = a[i][q];
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) c[i][j] += x * b[q][j];
        }
    return c;
}

inline DMatrix dmat_transpose(const DMatrix& a) {
    DMatrix t(a[0].size(), std::vector<double>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
    return t;
}

// Inverse of an upper-triangular matrix.
inline DMatrix upper_inverse(const DMatrix& u) {
    std::size_t n = u.size();
    DMatrix inv(n, std::vector<double>(n, 0.0));
    for (std::size_t j = n; j-- > 0;) {
        if (u[j][j] == 0.0) throw SingularInput("singular triangular factor");
        inv[j][j] = 1.0 / u[j][j];
        for (std::size_t i = j; i-- > 0;) {
            double s = 0.0;
            for (std::size_t k = i + 1; k <= j; ++k) s += u[i][k] * inv[k][j];
            inv[i][j] = -s / u[i][i];
        }
    }
    return inv;
}

}  // namespace detail

struct IwasawaFactors {
    DMatrix k;  // contravariant-form orthogonal factor
    DMatrix b;  // upper triangular, positive diagonal
};

// M = K B with respect to the coherently ordered basis of V/V^n and the
// contravariant form: K^T G K = G, B upper triangular with positive diagonal.
inline IwasawaFactors iwasawa_truncated(const RepTruncation& rt, const BlockOperator& op, long n) {
    FlatSpace s = flat_space(rt, 0, n);
    QMatrix mq = flatten_operator(rt, op, s, s);
    QMatrix gq = flat_gram(rt, s);
    DMatrix m = mq.to_double();
    DMatrix g = gq.to_double();
    // W = M^T G M = B^T G B; with G = C^T C this gives C B = (orth) S, so
    // B = C^{-1} S for the Cholesky factor S of W.
    DMatrix w = detail::dmat_mul(detail::dmat_transpose(m), detail::dmat_mul(g, m));
    DMatrix c = detail::chol_upper(g);
    DMatrix sfac = detail::chol_upper(w);
    DMatrix b = detail::dmat_mul(detail::upper_inverse(c), sfac);
    DMatrix k = detail::dmat_mul(m, detail::dmat_mul(detail::upper_inverse(sfac), c));
    return {std::move(k), std::move(b)};
}

// Scalar action of a torus word and loop rotation on the weight mu:
// prod s_i^{<mu, a_i^vee>} * tau^{<mu, d>}.
inline Rat torus_scalar(const AffineData& ad, const std::vector<std::pair<std::size_t, Rat>>& h_factors,
                        const Rat& tau, const AffineWeight& mu) {
    if (tau == 0) throw ZeroScalar("eta(0) undefined");
    auto ipow = [](const Rat& base, long e) {
        Rat r = 1;
        Rat b = e >= 0 ? base : Rat(1) / base;
        for (long k = 0; k < std::abs(e); ++k) r *= b;
        return r;
    };
    Rat out = 1;
    for (const auto& [i, s] : h_factors) {
        if (s <= 0) throw ZeroScalar("h_{a_i}(s) needs s > 0");
        Rat e = ad.pair_coroot(mu, i);
        if (e.get_den() != 1) throw std::invalid_argument("torus_scalar needs integral coroot pairings");
        out *= ipow(s, e.get_num().get_si());
    }
    Rat ed = ad.pair_d(mu);
    if (ed.get_den() != 1) throw std::invalid_argument("torus_scalar needs integral d-pairing");
    out *= ipow(tau, ed.get_num().get_si());
    return out;
}

}  // namespace looplat

#endif
