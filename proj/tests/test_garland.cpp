#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <map>
#include <vector>

#include "looplat/garland.hpp"

using namespace looplat;

namespace {

// Oracle: multiply the truncated series exp(sum_j X_j z^j / j) symbolically
// and read off the z^p coefficient, with X_j specialized to scalars.
std::vector<Rat> series_oracle(const std::vector<Rat>& values, unsigned order) {
    std::vector<Rat> series(order + 1, Rat(0));
    series[0] = 1;
    for (unsigned j = 1; j <= order; ++j) {
        // multiply by exp(X_j z^j / j) truncated
        std::vector<Rat> factor(order + 1, Rat(0));
        factor[0] = 1;
        Rat term = 1;
        for (unsigned m = 1; m * j <= order; ++m) {
            term = term * values[j - 1] / Rat(static_cast<long>(j)) / Rat(static_cast<long>(m));
            factor[m * j] = term;
        }
        std::vector<Rat> out(order + 1, Rat(0));
        for (unsigned a = 0; a <= order; ++a)
            for (unsigned b = 0; a + b <= order; ++b) out[a + b] += series[a] * factor[b];
        series = std::move(out);
    }
    return series;
}

// Complete homogeneous symmetric polynomial h_p(y) by direct monomial
// enumeration.
Rat complete_homogeneous(unsigned p, const std::vector<Rat>& y) {
    if (p == 0) return 1;
    // iterate over multisets: exponents e_i >= 0 with sum = p
    std::vector<unsigned> e(y.size(), 0);
    Rat total = 0;
    // recursive lambda
    std::function<void(std::size_t, unsigned)> rec = [&](std::size_t i, unsigned left) {
        if (i + 1 == y.size()) {
            Rat term = 1;
            for (std::size_t k = 0; k < y.size(); ++k) {
                unsigned ex = (k == i) ? left : e[k];
                for (unsigned q = 0; q < ex; ++q) term *= y[k];
            }
            total += term;
            return;
        }
        for (unsigned v = 0; v <= left; ++v) {
            e[i] = v;
            rec(i + 1, left - v);
        }
        e[i] = 0;
    };
    rec(0, p);
    return total;
}

}  // namespace

TEST_CASE("lambda polynomials") {
    CHECK(lambda_poly(0).to_string() == "1");
    CHECK(lambda_poly(1).to_string() == "X1");
    CHECK(lambda_poly(2).to_string() == "(X1^2 + X2)/2");

    // Weighted degree invariant: every monomial of Lambda_p has sum j e_j = p.
    for (unsigned p = 0; p <= 8; ++p) {
        for (const auto& [mono, c] : lambda_poly(p).coeffs) {
            unsigned deg = 0;
            for (std::size_t j = 0; j < mono.size(); ++j) deg += (j + 1) * mono[j];
            CHECK(deg == p);
            CHECK(c != 0);
        }
    }

    // p! * Lambda_p has integer coefficients (regression, exact arithmetic).
    for (unsigned p = 0; p <= 10; ++p) {
        Int f = factorial(p);
        for (const auto& [mono, c] : lambda_poly(p).coeffs) {
            Rat scaled = c * f;
            CHECK(scaled.get_den() == 1);
        }
    }
}

TEST_CASE("eval_lambda against the generating series") {
    // X_j = j: coefficient of z^p in exp(sum z^j).
    std::vector<Rat> vals;
    for (unsigned j = 1; j <= 10; ++j) vals.push_back(Rat(static_cast<long>(j)));
    auto oracle = series_oracle(vals, 10);
    for (unsigned p = 0; p <= 10; ++p) CHECK(eval_lambda(p, vals) == oracle[p]);

    // X_1 = x, rest 0: Lambda_p = x^p / p!.
    std::vector<Rat> xonly(10, Rat(0));
    xonly[0] = rat(3, 2);
    for (unsigned p = 0; p <= 8; ++p) {
        Rat expect = 1;
        for (unsigned k = 0; k < p; ++k) expect *= rat(3, 2);
        expect /= Rat(factorial(p));
        CHECK(eval_lambda(p, xonly) == expect);
    }

    // All ones: Lambda_p = 1 for all p.
    std::vector<Rat> ones(12, Rat(1));
    for (unsigned p = 0; p <= 10; ++p) CHECK(eval_lambda(p, ones) == Rat(1));

    CHECK_THROWS_AS(eval_lambda(5, std::vector<Rat>{Rat(1)}), InsufficientValues);
}

TEST_CASE("power sums give complete homogeneous polynomials") {
    std::vector<Rat> y = {rat(1, 2), Rat(2), rat(-1, 3)};
    for (unsigned p = 0; p <= 8; ++p) {
        std::vector<Rat> powser;
        for (unsigned j = 1; j <= p + 1; ++j) {
            Rat s = 0;
            for (const auto& yi : y) {
                Rat t = 1;
                for (unsigned q = 0; q < j; ++q) t *= yi;
                s += t;
            }
            powser.push_back(s);
        }
        CHECK(eval_lambda(p, powser) == complete_homogeneous(p, y));
    }
}

TEST_CASE("symbolic and recurrence evaluation agree") {
    std::vector<Rat> vals = {rat(2, 3), Rat(-1), rat(5, 7), Rat(0), Rat(3), Rat(1), Rat(-2), rat(1, 5)};
    for (unsigned p = 0; p <= 8; ++p) {
        Rat sym = 0;
        for (const auto& [mono, c] : lambda_poly(p).coeffs) {
            Rat term = c;
            for (std::size_t j = 0; j < mono.size(); ++j)
                for (unsigned e = 0; e < mono[j]; ++e) term *= vals[j];
            sym += term;
        }
        CHECK(sym == eval_lambda(p, vals));
    }
}

TEST_CASE("uz monomial enumeration") {
    AffineData a1 = affinize(RootSystem(CartanMatrix::type_A(1)));
    auto m0 = enumerate_uz_monomials(a1, 0);
    REQUIRE(m0.size() == 1);
    CHECK(m0[0].factors.empty());

    auto m1 = enumerate_uz_monomials(a1, 1);
    CHECK(m1.size() == 3);  // empty, xi_{-a1}, xi_{-a2}
    int depth1 = 0;
    for (const auto& m : m1)
        if (m.depth(a1) == 1) {
            ++depth1;
            REQUIRE(m.factors.size() == 1);
            CHECK(m.factors[0].kind == UZFactor::Kind::DividedPower);
            CHECK(m.factors[0].power == 1);
        }
    CHECK(depth1 == 2);

    // Monomial count is nondecreasing in the depth bound.
    std::size_t prev = 0;
    for (long d = 0; d <= 6; ++d) {
        auto ms = enumerate_uz_monomials(a1, d);
        CHECK(ms.size() >= prev);
        prev = ms.size();
        for (const auto& m : ms) CHECK(m.depth(a1) <= d);
    }

    // Weight-targeted enumeration matches filtering the full list.
    std::vector<long> target = {2, 2};  // lambda - 2a1 - 2a2
    auto targeted = enumerate_uz_monomials_for_weight(a1, target);
    auto all = enumerate_uz_monomials(a1, 4);
    std::size_t expect = 0;
    for (const auto& m : all)
        if (m.weight_drop(a1) == target) ++expect;
    CHECK(targeted.size() == expect);
    CHECK(targeted.size() > 0);
    bool has_imaginary = false;
    for (const auto& m : targeted)
        for (const auto& f : m.factors)
            if (f.kind == UZFactor::Kind::ImaginaryBlock) has_imaginary = true;
    CHECK(has_imaginary);  // e.g. the Lambda_2(-1,1) block alone has drop 2*iota
}
