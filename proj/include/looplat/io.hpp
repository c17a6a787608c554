#ifndef LOOPLAT_IO_HPP
#define LOOPLAT_IO_HPP

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "looplat/affine.hpp"
#include "looplat/garland.hpp"
#include "looplat/cartan.hpp"
#include "looplat/lattice.hpp"
#include "looplat/probundle.hpp"
#include "looplat/rep.hpp"
#include "looplat/weights.hpp"

namespace looplat {

using Json = nlohmann::ordered_json;

// All floating-point output goes through one fixed 15-significant-digit
// formatter so identical jobs produce byte-identical JSON.
inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", x);
    return buf;
}

inline Json json_number(double x) { return Json(format_double(x)); }

inline Json rat_json(const Rat& q) { return Json(rat_to_string(q)); }

inline Json qmatrix_json(const QMatrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(rat_to_string(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json sparse_qmatrix_json(const QMatrix& m) {
    Json trip = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0) trip.push_back(Json::array({i, j, rat_to_string(m(i, j))}));
    return trip;
}

inline Json lattice_json(const GramLattice& L) {
    Json j;
    j["rank"] = L.rank;
    j["gram"] = qmatrix_json(L.gram);
    if (!L.label.empty()) j["label"] = L.label;
    if (L.twist != 0.0) j["twist"] = json_number(L.twist);
    return j;
}

inline GramLattice lattice_from_json(const Json& j) {
    std::size_t rank = j.at("rank").get<std::size_t>();
    QMatrix g(rank, rank);
    const Json& rows = j.at("gram");
    if (rows.size() != rank) throw ParseError("gram row count disagrees with rank");
    for (std::size_t i = 0; i < rank; ++i) {
        if (rows[i].size() != rank) throw ParseError("gram column count disagrees with rank");
        for (std::size_t c = 0; c < rank; ++c) {
            const Json& e = rows[i][c];
            if (e.is_number_integer())
                g(i, c) = Rat(e.get<long>());
            else if (e.is_number_float())
                g(i, c) = Rat(e.get<double>());
            else if (e.is_string())
                g(i, c) = rat_from_string(e.get<std::string>());
            else if (e.is_array() && e.size() == 2)
                g(i, c) = rat(Int(e[0].get<long>()), Int(e[1].get<long>()));
            else
                throw ParseError("bad gram entry");
        }
    }
    GramLattice L(std::move(g), j.value("label", std::string{}));
    if (j.contains("twist")) {
        const Json& t = j.at("twist");
        L.twist = t.is_string() ? std::stod(t.get<std::string>()) : t.get<double>();
    }
    return L;
}

inline Json roots_json(const RootSystem& rs) {
    Json j;
    j["rank"] = rs.rank();
    Json pos = Json::array();
    for (const auto& r : rs.positive_roots()) pos.push_back(r);
    j["positive_roots"] = pos;
    j["highest_root"] = rs.highest_root();
    j["form"] = qmatrix_json(rs.form_matrix());
    return j;
}

inline Json affine_json(const AffineData& ad, int n_max) {
    Json j;
    j["ell"] = ad.ell();
    Json cart = Json::array();
    for (std::size_t i = 0; i < ad.num_simple(); ++i) {
        Json row = Json::array();
        for (std::size_t c = 0; c < ad.num_simple(); ++c) row.push_back(ad.affine_cartan(i, c));
        cart.push_back(std::move(row));
    }
    j["affine_cartan"] = cart;
    Json eps = Json::array();
    for (std::size_t i = 0; i < ad.num_simple(); ++i) eps.push_back(rat_to_string(ad.epsilon(i)));
    j["epsilons"] = eps;
    j["form"] = qmatrix_json(ad.form_matrix());
    j["iota"] = ad.iota_coords();
    if (n_max >= 0) {
        Json roots = Json::array();
        for (const auto& r : ad.roots_up_to(n_max)) {
            Json rj;
            rj["a_coords"] = r.a_coords(ad.classical().highest_root());
            rj["type"] = r.imaginary ? "imaginary" : "real";
            rj["mult"] = r.mult;
            rj["sign"] = r.sign;
            roots.push_back(std::move(rj));
        }
        j["roots"] = roots;
    }
    return j;
}

inline Json weight_json(const AffineData& ad, const AffineWeight& w) {
    Json a = Json::array();
    for (const auto& c : w.a) a.push_back(rat_to_string(c));
    Json j;
    j["a_coords"] = a;
    j["fundamental_coeff"] = rat_to_string(w.lambda);
    auto d = ad.decompose(w);
    j["level"] = rat_to_string(d.p);
    Json cls = Json::array();
    for (const auto& c : d.classical) cls.push_back(rat_to_string(c));
    j["classical"] = cls;
    j["iota_coeff"] = rat_to_string(d.iota_coeff);
    return j;
}

inline Json weights_json(const WeightSystem& ws, long n_max) {
    Json j;
    const AffineData& ad = ws.affine();
    j["lambda"] = weight_json(ad, ws.highest_weight());
    j["level_bound"] = n_max;
    Json levels = Json::array();
    for (long n = 0; n <= n_max; ++n) {
        Json lj;
        lj["n"] = n;
        lj["dim"] = ws.dim_level(n).get_str();
        auto slice = ws.level_slice(n);
        std::vector<WeightKey> sorted(slice.begin(), slice.end());
        std::sort(sorted.begin(), sorted.end());
        Int max_mult = 0;
        Json wts = Json::array();
        for (const auto& k : sorted) {
            Json wj;
            wj["mu"] = weight_json(ad, ws.weight_of(k));
            wj["drop"] = k;
            wj["mult"] = ws.mult(k).get_str();
            if (ws.mult(k) > max_mult) max_mult = ws.mult(k);
            wts.push_back(std::move(wj));
        }
        lj["num_weights"] = sorted.size();
        lj["max_mult"] = max_mult.get_str();
        lj["weights"] = wts;
        levels.push_back(std::move(lj));
    }
    j["levels"] = levels;
    return j;
}

inline Json uz_monomials_json(const AffineData& ad, const std::vector<UZMonomial>& monos) {
    Json out = Json::array();
    for (const auto& m : monos) {
        Json mj;
        Json fac = Json::array();
        for (const auto& f : m.factors) {
            Json fj;
            if (f.kind == UZFactor::Kind::DividedPower) {
                fj["kind"] = "divided_power";
                fj["root_a_coords"] = f.root.a_coords(ad.classical().highest_root());
                fj["power"] = f.power;
            } else {
                fj["kind"] = "imaginary_block";
                fj["q"] = f.q;
                fj["r"] = f.r;
                fj["j"] = f.j + 1;
            }
            fac.push_back(std::move(fj));
        }
        mj["factors"] = fac;
        mj["depth"] = m.depth(ad);
        mj["weight_drop"] = m.weight_drop(ad);
        out.push_back(std::move(mj));
    }
    return out;
}

inline Json truncation_json(const RepTruncation& rt) {
    Json j;
    j["level_bound"] = rt.level_bound();
    Json wts = Json::array();
    for (std::size_t w = 0; w < rt.num_weights(); ++w) {
        Json wj;
        wj["drop"] = rt.key(w);
        wj["level"] = rt.level_of(w);
        wj["dim"] = rt.dim(w);
        wj["gram"] = sparse_qmatrix_json(rt.gram(w));
        wj["integral_basis"] = sparse_qmatrix_json(rt.integral_basis(w));
        wj["integral_gram"] = sparse_qmatrix_json(rt.integral_gram(w));
        wts.push_back(std::move(wj));
    }
    j["weights"] = wts;
    return j;
}

inline Json summability_json(const SummabilityReport& rep) {
    Json j;
    j["tau"] = rat_to_string(rep.tau);
    j["epsilon"] = json_number(rep.epsilon);
    j["t"] = json_number(rep.scale_t);
    Json levels = Json::array();
    for (const auto& l : rep.levels) {
        Json lj;
        lj["n"] = l.n;
        lj["rank"] = json_number(l.rank);
        lj["lambda1_lb"] = json_number(l.lambda1_lb);
        lj["lambda1_diag_lb"] = json_number(l.lambda1_diag_lb);
        if (l.lambda1_exact) lj["lambda1_exact"] = json_number(*l.lambda1_exact);
        if (l.h0_exact) lj["h0_exact"] = json_number(*l.h0_exact);
        if (l.h0_upper_log) {
            lj["h0_upper"] = json_number(std::exp(*l.h0_upper_log));
            lj["h0_upper_log"] = json_number(*l.h0_upper_log);
        }
        lj["term"] = json_number(l.term);
        lj["partial_sum"] = json_number(l.partial_sum);
        levels.push_back(std::move(lj));
    }
    j["levels"] = levels;
    j["tail_bound"] = json_number(rep.tail_bound);
    j["n_star"] = rep.n_star;
    j["crossover"] = rep.crossover;
    j["tail_start"] = rep.tail_start;
    j["verdict"] = rep.verdict;
    Json c;
    c["C1"] = json_number(rep.constants.C1);
    c["A1"] = json_number(rep.constants.A1);
    c["C2"] = json_number(rep.constants.C2);
    c["A2"] = json_number(rep.constants.A2);
    c["a0"] = rep.constants.a0;
    c["dim_fit_C"] = json_number(rep.dim_fit_C);
    c["dim_fit_A"] = json_number(rep.dim_fit_A);
    j["constants"] = c;
    j["tail_basis"] = rep.tail_basis;
    return j;
}

}  // namespace looplat

#endif
