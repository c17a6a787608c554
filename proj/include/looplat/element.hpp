#ifndef LOOPLAT_ELEMENT_HPP
#define LOOPLAT_ELEMENT_HPP

#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

#include "looplat/affine.hpp"
#include "looplat/rep.hpp"

namespace looplat {

struct GroupFactor {
    enum class Kind { Chi, H, W, Eta } kind;
    AffineRoot root;            // Chi / W
    std::size_t torus_index = 0;  // H (zero-based simple index)
    Rat s = 1;                  // Chi / H / W parameter
    Rat tau = 1;                // Eta parameter
};

struct GroupElement {
    std::vector<GroupFactor> word;
};

// x = u^- h eta(tau) canonical form (Iwasawa shape with respect to B^-).
struct IwasawaForm {
    std::vector<std::pair<AffineRoot, Rat>> uminus;     // negative real root factors, in order
    std::vector<std::pair<std::size_t, Rat>> h_factors; // (simple index, s > 0)
    Rat tau = 1;
};

inline bool is_negative_real_root(const AffineData& ad, const AffineRoot& r) {
    if (r.imaginary) return false;
    auto ac = r.a_coords(ad.classical().highest_root());
    bool any = false;
    for (int c : ac) {
        if (c > 0) return false;
        if (c < 0) any = true;
    }
    return any;
}

inline AffineWeight root_as_weight(const AffineData& ad, const AffineRoot& r) {
    auto ac = r.a_coords(ad.classical().highest_root());
    AffineWeight w(ad.num_simple());
    for (std::size_t i = 0; i < ac.size(); ++i) w.a[i] = ac[i];
    return w;
}

// Commute all torus and loop-rotation factors to the right; the unipotent
// word keeps its order with rescaled parameters.
inline IwasawaForm normalize_to_iwasawa(const AffineData& ad, const GroupElement& g) {
    IwasawaForm f;
    auto ipow = [](const Rat& base, long e) {
        Rat r = 1;
        Rat b = e >= 0 ? base : Rat(1) / base;
        for (long k = 0; k < (e >= 0 ? e : -e); ++k) r *= b;
        return r;
    };
    for (const auto& fac : g.word) {
        switch (fac.kind) {
            case GroupFactor::Kind::Eta:
                if (fac.tau == 0) throw ZeroScalar("eta(0) undefined");
                f.tau *= fac.tau;
                break;
            case GroupFactor::Kind::H:
                if (fac.s <= 0) throw NotIwasawaForm("torus factors need s > 0");
                if (fac.torus_index >= ad.num_simple()) throw IndexOutOfRange("torus index out of range");
                f.h_factors.emplace_back(fac.torus_index, fac.s);
                break;
            case GroupFactor::Kind::Chi: {
                if (!is_negative_real_root(ad, fac.root))
                    throw NotIwasawaForm("chi factors must use negative real affine roots");
                // Pull left through eta(tau) then through the torus word.
                Rat s = fac.s * ipow(f.tau, fac.root.n);
                AffineWeight rw = root_as_weight(ad, fac.root);
                for (const auto& [i, si] : f.h_factors) {
                    Rat e = ad.pair_coroot(rw, i);
                    s *= ipow(si, e.get_num().get_si());
                }
                if (s != 0) f.uminus.emplace_back(fac.root, s);
                break;
            }
            case GroupFactor::Kind::W:
                throw NotIwasawaForm("w-factors are not in B^- eta(tau) form");
        }
    }
    return f;
}

// --- word syntax -----------------------------------------------------------
//
//   element  := factor (';' factor)*
//   factor   := 'chi(' root ',' scalar ')' | 'h(a'K ',' scalar ')'
//             | 'w(' root ',' scalar ')'   | 'eta(' scalar ')'
//   root     := term (('+'|'-') term)*   with term = [INT '*'] ('a'K | 'd')
//   scalar   := rational ('p/q' or decimal)
//
// 'd' denotes the minimal positive imaginary root; e.g. "-a1+d".

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline AffineRoot parse_root(const AffineData& ad, const std::string& text) {
    std::vector<long> acoords(ad.num_simple(), 0);
    auto iota = ad.iota_coords();
    std::size_t pos = 0;
    std::string s = strip(text);
    if (s.empty()) throw ParseError("empty root literal");
    while (pos < s.size()) {
        long sign = 1;
        if (s[pos] == '+') ++pos;
        else if (s[pos] == '-') {
            sign = -1;
            ++pos;
        }
        long coeff = 1;
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos > start) {
            coeff = std::stol(s.substr(start, pos - start));
            if (pos < s.size() && s[pos] == '*') ++pos;
        }
        if (pos >= s.size()) throw ParseError("bad root literal: " + text);
        if (s[pos] == 'a') {
            ++pos;
            std::size_t ds = pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
            if (ds == pos) throw ParseError("bad simple root index in: " + text);
            std::size_t idx = std::stoul(s.substr(ds, pos - ds));
            if (idx < 1 || idx > ad.num_simple()) throw ParseError("simple root index out of range in: " + text);
            acoords[idx - 1] += sign * coeff;
        } else if (s[pos] == 'd') {
            ++pos;
            for (std::size_t i = 0; i < acoords.size(); ++i) acoords[i] += sign * coeff * iota[i];
        } else {
            throw ParseError("bad root literal: " + text);
        }
    }
    AffineRoot r;
    r.n = static_cast<int>(acoords[ad.ell()]);
    r.classical.assign(ad.ell(), 0);
    const auto& theta = ad.classical().highest_root();
    for (std::size_t i = 0; i < ad.ell(); ++i)
        r.classical[i] = static_cast<int>(acoords[i]) - r.n * theta[i];
    bool classical_zero = std::all_of(r.classical.begin(), r.classical.end(), [](int c) { return c == 0; });
    if (classical_zero) {
        if (r.n == 0) throw ParseError("zero is not a root: " + text);
        r.imaginary = true;
        r.mult = static_cast<int>(ad.ell());
    } else {
        std::vector<int> abs = r.classical;
        bool neg = std::all_of(abs.begin(), abs.end(), [](int c) { return c <= 0; });
        if (neg)
            for (auto& c : abs) c = -c;
        if (!ad.classical().is_root(abs)) throw ParseError("not an affine real root: " + text);
    }
    r.sign = (r.n > 0 || (r.n == 0 && std::any_of(r.classical.begin(), r.classical.end(),
                                                  [](int c) { return c > 0; })))
                 ? 1
                 : -1;
    return r;
}

}  // namespace detail

inline GroupElement parse_group_element(const AffineData& ad, const std::string& text) {
    GroupElement g;
    std::size_t pos = 0;
    std::string s = detail::strip(text);
    if (s.empty()) return g;
    while (pos < s.size()) {
        std::size_t semi = s.find(';', pos);
        std::string tok = detail::strip(s.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos));
        pos = semi == std::string::npos ? s.size() : semi + 1;
        if (tok.empty()) continue;
        auto open = tok.find('(');
        if (open == std::string::npos || tok.back() != ')') throw ParseError("bad factor: " + tok);
        std::string name = detail::strip(tok.substr(0, open));
        std::string args = tok.substr(open + 1, tok.size() - open - 2);
        GroupFactor f;
        if (name == "eta") {
            f.kind = GroupFactor::Kind::Eta;
            f.tau = rat_from_string(detail::strip(args));
        } else {
            auto comma = args.rfind(',');
            if (comma == std::string::npos) throw ParseError("factor needs two arguments: " + tok);
            std::string a1 = detail::strip(args.substr(0, comma));
            std::string a2 = detail::strip(args.substr(comma + 1));
            if (name == "chi" || name == "w") {
                f.kind = name == "chi" ? GroupFactor::Kind::Chi : GroupFactor::Kind::W;
                f.root = detail::parse_root(ad, a1);
                if (f.root.imaginary) throw ParseError("chi/w factors need real roots: " + tok);
                f.s = rat_from_string(a2);
            } else if (name == "h") {
                f.kind = GroupFactor::Kind::H;
                if (a1.size() < 2 || a1[0] != 'a') throw ParseError("h factor needs a simple root a<k>: " + tok);
                std::size_t idx = std::stoul(a1.substr(1));
                if (idx < 1 || idx > ad.num_simple()) throw ParseError("simple root index out of range: " + tok);
                f.torus_index = idx - 1;
                f.s = rat_from_string(a2);
            } else {
                throw ParseError("unknown factor kind: " + name);
            }
        }
        g.word.push_back(std::move(f));
    }
    return g;
}

}  // namespace looplat

#endif
