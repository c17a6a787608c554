#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "looplat/lattice.hpp"

using namespace looplat;

namespace {

// Independent theta oracle: plain box sum over coefficient vectors.
double box_theta_sum(const QMatrix& g, int radius, double scale, double norm_cap_sq) {
    std::size_t r = g.rows();
    std::vector<long> x(r, -radius);
    double sum = 0.0;
    while (true) {
        Rat q = 0;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j) q += Rat(x[i]) * g(i, j) * x[j];
        double qd = to_double(q);
        if (qd <= norm_cap_sq) sum += std::exp(-M_PI * scale * qd);
        std::size_t k = 0;
        while (k < r && x[k] == radius) x[k++] = -radius;
        if (k == r) break;
        ++x[k];
    }
    return sum;
}

GramLattice random_lattice(std::mt19937& rng, int max_rank = 4) {
    std::uniform_int_distribution<int> rank_d(1, max_rank);
    std::uniform_int_distribution<int> num_d(-20, 20);
    std::uniform_int_distribution<int> den_d(1, 20);
    while (true) {
        std::size_t r = static_cast<std::size_t>(rank_d(rng));
        QMatrix g(r, r);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = i; j < r; ++j) {
                Rat v = rat(num_d(rng), den_d(rng));
                if (i == j) v = abs(v);  // rejection sampling handles definiteness
                g(i, j) = g(j, i) = v;
            }
        if (g.is_positive_definite()) return GramLattice(std::move(g));
    }
}

}  // namespace

TEST_CASE("covolume") {
    CHECK(covolume(GramLattice::standard(2)) == doctest::Approx(1.0).epsilon(1e-14));
    GramLattice L(QMatrix{{Rat(2), Rat(1)}, {Rat(1), Rat(2)}});
    CHECK(covolume(L) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    CHECK(covolume(GramLattice{}) == doctest::Approx(1.0));
    CHECK(arithmetic_degree(GramLattice{}) == doctest::Approx(0.0));
}

TEST_CASE("arithmetic degree and twists") {
    CHECK(arithmetic_degree(GramLattice::standard(3)) == doctest::Approx(0.0).epsilon(1e-14));
    GramLattice o_delta = twist_by_O(GramLattice::standard(1), 0.75);
    CHECK(arithmetic_degree(o_delta) == doctest::Approx(0.75).epsilon(1e-12));
    GramLattice four(QMatrix{{Rat(4)}});
    CHECK(arithmetic_degree(four) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

    std::mt19937 rng(7);
    GramLattice L = random_lattice(rng);
    GramLattice t1 = twist_by_O(twist_by_O(L, 0.3), 0.4);
    GramLattice t2 = twist_by_O(L, 0.7);
    CHECK(t1.norm_scale() == doctest::Approx(t2.norm_scale()).epsilon(1e-12));

    GramLattice half = twist_by_O(GramLattice::standard(1), std::log(2.0));
    CHECK(half.norm_scale() * 1.0 == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("dual") {
    GramLattice L(QMatrix{{Rat(2), Rat(1)}, {Rat(1), Rat(2)}});
    GramLattice d = dual(L);
    CHECK(d.gram(0, 0) == rat(2, 3));
    CHECK(d.gram(0, 1) == rat(-1, 3));
    CHECK(dual(d).gram == L.gram);
    CHECK(arithmetic_degree(d) == doctest::Approx(-arithmetic_degree(L)).epsilon(1e-12));
    CHECK(dual(GramLattice::standard(2)).gram == QMatrix::identity(2));
}

TEST_CASE("shortest vector") {
    auto sv = shortest_vector(GramLattice::standard(3));
    CHECK(sv.lambda1 == doctest::Approx(1.0));
    GramLattice L(QMatrix{{Rat(2), Rat(1)}, {Rat(1), Rat(2)}});
    auto sv2 = shortest_vector(L);
    CHECK(sv2.lambda1_sq_exact == Rat(2));

    // Brute-force oracle over a small coefficient box.
    Rat best = L.gram(0, 0);
    for (long a = -3; a <= 3; ++a)
        for (long b = -3; b <= 3; ++b) {
            if (a == 0 && b == 0) continue;
            Rat q = Rat(a) * L.gram(0, 0) * a + 2 * Rat(a) * L.gram(0, 1) * b + Rat(b) * L.gram(1, 1) * b;
            if (q < best) best = q;
        }
    CHECK(sv2.lambda1_sq_exact == best);

    GramLattice tw = twist_by_O(L, 0.5);
    CHECK(shortest_vector(tw).lambda1 == doctest::Approx(std::sqrt(2.0) * std::exp(-0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(shortest_vector(GramLattice{}), ZeroRankLattice);
}

TEST_CASE("theta invariants") {
    CHECK(theta_h0(GramLattice{}) == doctest::Approx(0.0));

    // Z: direct summation oracle over |k| <= 10.
    double s = 1.0;
    for (int k = 1; k <= 10; ++k) s += 2.0 * std::exp(-M_PI * k * k);
    double expect = std::log(s);
    CHECK(expect == doctest::Approx(0.0828978).epsilon(1e-5));
    CHECK(theta_h0(GramLattice::standard(1)) == doctest::Approx(expect).epsilon(1e-12));

    // Monotone under twists.
    GramLattice z = GramLattice::standard(1);
    double prev = theta_h0(twist_by_O(z, -0.5));
    for (double d : {0.0, 0.5, 1.0}) {
        double cur = theta_h0(twist_by_O(z, d));
        CHECK(cur > prev);
        prev = cur;
    }

    // h1 of self-dual lattice equals h0; explicit dual for [[4]].
    CHECK(theta_h1(z) == doctest::Approx(theta_h0(z)).epsilon(1e-13));
    GramLattice four(QMatrix{{Rat(4)}});
    GramLattice quarter(QMatrix{{rat(1, 4)}});
    CHECK(theta_h1(four) == doctest::Approx(theta_h0(quarter)).epsilon(1e-13));
    CHECK(theta_h1(GramLattice{}) == doctest::Approx(0.0));
}

TEST_CASE("theta enumeration agrees with the box oracle") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        GramLattice L = random_lattice(rng, 3);
        // Enumerate both ways within a fixed radius; skip lattices whose
        // radius-sqrt(5) ball is not covered by the coefficient box.
        double radius_sq = 5.0;
        {
            QMatrix inv = L.gram.inverse();
            bool covered = true;
            for (std::size_t i = 0; i < L.rank; ++i)
                if (std::sqrt(radius_sq * to_double(inv(i, i))) > 8.0) covered = false;
            if (!covered) {
                --trial;
                continue;
            }
        }
        double enum_sum = 1.0;
        detail::Enumerator en(L.gram);
        Rat rsq(radius_sq);
        en.run(rsq, [&](const std::vector<long>&, const Rat& q) {
            enum_sum += std::exp(-M_PI * to_double(q));
            return rsq;
        });
        double box = box_theta_sum(L.gram, 8, 1.0, radius_sq);
        CHECK(enum_sum == doctest::Approx(box).epsilon(1e-12));
    }
}

TEST_CASE("riemann-roch residual") {
    CHECK(std::fabs(riemann_roch_residual(GramLattice::standard(1))) < 1e-10);
    GramLattice L(QMatrix{{Rat(2), Rat(1)}, {Rat(1), Rat(2)}});
    CHECK(std::fabs(riemann_roch_residual(L)) < 1e-9);
    CHECK(std::fabs(riemann_roch_residual(twist_by_O(GramLattice::standard(1), 0.7))) < 1e-9);
}

TEST_CASE("riemann-roch over random lattices") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        GramLattice L = random_lattice(rng);
        ThetaOptions opts;
        opts.tail_tolerance = 1e-12;
        CHECK(std::fabs(riemann_roch_residual(L, opts)) < 10 * 1e-9);
    }
}

TEST_CASE("arakelov h0") {
    CHECK(arakelov_h0(GramLattice::standard(1)) == doctest::Approx(std::log(3.0)));
    CHECK(arakelov_h0(twist_by_O(GramLattice::standard(1), -10.0)) == doctest::Approx(0.0));
    CHECK(arakelov_h0(GramLattice{}) == doctest::Approx(0.0));
}

TEST_CASE("groenewegen bound") {
    auto b = groenewegen_bound(1, 2.0);
    REQUIRE(b.simplified.has_value());
    double direct = 3.0 / (1.0 - 1.0 / (8.0 * M_PI)) * std::exp(-4.0 * M_PI);
    CHECK(*b.simplified == doctest::Approx(direct).epsilon(1e-10));
    CHECK(*b.simplified == doctest::Approx(1.090e-5).epsilon(1e-3));
    CHECK(b.exact <= *b.simplified);

    // Theorem: h0 <= C(rank, lambda1), and exact <= simplified when defined.
    std::mt19937 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        GramLattice L = random_lattice(rng);
        auto sv = shortest_vector(L);
        auto gb = groenewegen_bound(L.rank, sv.lambda1);
        CHECK(theta_h0(L) <= gb.exact * (1 + 1e-12));
        if (gb.simplified) CHECK(gb.exact <= *gb.simplified * (1 + 1e-12));
    }
}

TEST_CASE("theta options validation and budget") {
    ThetaOptions bad;
    bad.tail_tolerance = 0.0;
    CHECK_THROWS_AS(theta_h0(GramLattice::standard(1), bad), std::invalid_argument);
    ThetaOptions capped;
    capped.max_radius = 0.5;
    CHECK_THROWS_AS(theta_h0(GramLattice::standard(1), capped), EnumerationBudgetExceeded);
}

TEST_CASE("construction guards") {
    CHECK_THROWS(GramLattice(QMatrix{{Rat(1), Rat(2)}, {Rat(2), Rat(1)}}));  // not PD
    CHECK_THROWS(GramLattice(QMatrix{{Rat(1), Rat(2)}, {Rat(3), Rat(1)}}));  // not symmetric
}

TEST_CASE("theta is nonnegative") {
    std::mt19937 rng(31337);
    for (int t = 0; t < 10; ++t) {
        GramLattice L = random_lattice(rng);
        CHECK(theta_h0(L) >= 0.0);
        CHECK(theta_h0(twist_by_O(L, 1.0)) >= 0.0);
    }
}
