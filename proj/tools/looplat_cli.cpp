#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "looplat/io.hpp"

using namespace looplat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitCompute = 3;
constexpr int kExitTau = 4;
constexpr int kExitAdmissibility = 5;

void emit(const Json& j, const std::string& out_path) {
    std::string text = j.dump(2);
    text.push_back('\n');
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out_path);
        f << text;
    }
}

void maybe_cache(const std::string& name, const Json& j) {
    const char* dir = std::getenv("LOOPLAT_CACHE_DIR");
    if (!dir || !*dir) return;
    std::ofstream f(std::string(dir) + "/" + name + ".json");
    f << j.dump(2) << "\n";
}

std::vector<long> parse_labels(const std::string& text) {
    std::vector<long> labels;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) labels.push_back(std::stol(tok));
    return labels;
}

CartanMatrix cartan_from_arg(const std::string& arg) {
    if (arg.find('[') == std::string::npos) return CartanMatrix::from_type(arg);
    // Explicit matrix: [[2,-1],[-1,2]]
    Json j = Json::parse(arg);
    std::size_t n = j.size();
    std::vector<int> entries;
    for (const auto& row : j)
        for (const auto& e : row) entries.push_back(e.get<int>());
    return CartanMatrix(n, entries);
}

struct PipelineArgs {
    std::string cartan = "A1";
    std::string lambda = "0,1";
    long level_bound = 6;
    std::string element;
    long horizon = -1;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"theta invariants of twisted lattice towers from loop-group elements"};
    app.require_subcommand(1);

    std::string out_path;
    bool json_output = false;
    app.add_option("--out", out_path, "write output to this path instead of stdout");
    app.add_flag("--json", json_output, "emit machine-readable JSON (default on)");

    // lattice
    auto* lat = app.add_subcommand("lattice", "finite-rank lattice invariants from a JSON Gram matrix");
    std::string lat_in;
    double lat_twist = 0.0;
    double lat_tol = 1e-12;
    double lat_t = 1.0;
    lat->add_option("--in", lat_in, "input JSON file (default: stdin)");
    lat->add_option("--twist", lat_twist, "tensor by O(delta) before computing");
    lat->add_option("--tol", lat_tol, "theta tail tolerance");
    lat->add_option("--t", lat_t, "theta scale t");

    // roots
    auto* roots = app.add_subcommand("roots", "finite root system data");
    std::string roots_cartan = "A2";
    roots->add_option("--cartan", roots_cartan, "Cartan type (A2, B3, ...) or explicit matrix");

    // affine
    auto* aff = app.add_subcommand("affine", "untwisted affinization data");
    std::string aff_cartan = "A1";
    int aff_nmax = 2;
    aff->add_option("--cartan", aff_cartan, "Cartan type or explicit matrix");
    aff->add_option("--n-max", aff_nmax, "list affine roots up to this iota coefficient");

    // weights
    auto* wts = app.add_subcommand("weights", "weight multiplicities of a highest-weight module");
    PipelineArgs wargs;
    wts->add_option("--cartan", wargs.cartan, "Cartan type or explicit matrix");
    wts->add_option("--lambda", wargs.lambda, "Dynkin labels c_1,...,c_{ell+1}");
    wts->add_option("--level-bound", wargs.level_bound, "build the table up to this level");

    // rep
    auto* rep = app.add_subcommand("rep", "exact truncation of the highest-weight module");
    PipelineArgs rargs;
    rargs.level_bound = 4;
    rep->add_option("--cartan", rargs.cartan, "Cartan type or explicit matrix");
    rep->add_option("--lambda", rargs.lambda, "Dynkin labels");
    rep->add_option("--level-bound", rargs.level_bound, "truncation level bound");

    // bundle
    auto* bun = app.add_subcommand("bundle", "projective system of twisted quotient lattices");
    PipelineArgs bargs;
    bargs.level_bound = 4;
    bargs.element = "eta(1/2)";
    bun->add_option("--cartan", bargs.cartan, "Cartan type or explicit matrix");
    bun->add_option("--lambda", bargs.lambda, "Dynkin labels");
    bun->add_option("--level-bound", bargs.level_bound, "tower height");
    bun->add_option("--element", bargs.element, "group element word, e.g. chi(-a1,1);h(a1,2);eta(1/2)");

    // theta-finite
    auto* tf = app.add_subcommand("theta-finite", "strong summability / theta-finiteness verdicts");
    PipelineArgs targs;
    targs.level_bound = 6;
    targs.element = "eta(1/2)";
    std::vector<double> eps_list = {0.1};
    std::vector<double> t_list = {1.0};
    double tf_tol = 1e-8;
    long exact_cap = 6;
    tf->add_option("--cartan", targs.cartan, "Cartan type or explicit matrix");
    tf->add_option("--lambda", targs.lambda, "Dynkin labels");
    tf->add_option("--level-bound", targs.level_bound, "exact truncation level bound");
    tf->add_option("--horizon", targs.horizon, "summability horizon (default: max(level bound, 20))");
    tf->add_option("--element", targs.element, "group element word");
    tf->add_option("--epsilon", eps_list, "epsilon values for the strong condition");
    tf->add_option("--t", t_list, "theta-finiteness rescalings t > 0");
    tf->add_option("--tol", tf_tol, "tail certification tolerance");
    tf->add_option("--exact-cap", exact_cap, "compute exact kernels up to this level");

    CLI11_PARSE(app, argc, argv);
    (void)json_output;

    try {
        if (*lat) {
            Json input;
            try {
                if (lat_in.empty()) {
                    input = Json::parse(std::cin);
                } else {
                    std::ifstream f(lat_in);
                    if (!f) throw ParseError("cannot open " + lat_in);
                    input = Json::parse(f);
                }
            } catch (const Json::parse_error& e) {
                std::cerr << "error: bad lattice JSON: " << e.what() << "\n";
                return kExitParse;
            }
            GramLattice L = lattice_from_json(input);
            if (lat_twist != 0.0) L = twist_by_O(L, lat_twist);
            ThetaOptions opts;
            opts.tail_tolerance = lat_tol;
            opts.scale_t = lat_t;
            Json j;
            j["rank"] = L.rank;
            j["covol"] = json_number(covolume(L));
            j["deg"] = json_number(arithmetic_degree(L));
            j["h0"] = json_number(theta_h0(L, opts));
            j["h1"] = json_number(theta_h1(L, opts));
            j["rr_residual"] = json_number(riemann_roch_residual(L, opts));
            j["h0_ar"] = json_number(arakelov_h0(L));
            if (L.rank >= 1) {
                auto sv = shortest_vector(L);
                j["lambda1"] = json_number(sv.lambda1);
                auto gb = groenewegen_bound(L.rank, sv.lambda1);
                Json g;
                g["exact"] = json_number(gb.exact);
                g["log_exact"] = json_number(gb.log_exact);
                if (gb.simplified) g["simplified"] = json_number(*gb.simplified);
                j["groenewegen"] = g;
            }
            emit(j, out_path);
            return kExitOk;
        }

        if (*roots) {
            RootSystem rs(cartan_from_arg(roots_cartan));
            emit(roots_json(rs), out_path);
            return kExitOk;
        }

        if (*aff) {
            AffineData ad = affinize(RootSystem(cartan_from_arg(aff_cartan)));
            emit(affine_json(ad, aff_nmax), out_path);
            return kExitOk;
        }

        if (*wts) {
            AffineData ad = affinize(RootSystem(cartan_from_arg(wargs.cartan)));
            WeightSystem ws(ad, ad.dominant_weight_from_labels(parse_labels(wargs.lambda)), wargs.level_bound);
            emit(weights_json(ws, wargs.level_bound), out_path);
            return kExitOk;
        }

        if (*rep) {
            AffineData ad = affinize(RootSystem(cartan_from_arg(rargs.cartan)));
            WeightSystem ws(ad, ad.dominant_weight_from_labels(parse_labels(rargs.lambda)), rargs.level_bound);
            RepTruncation rt(ws);
            Json j = truncation_json(rt);
            maybe_cache("rep_" + rargs.cartan + "_" + std::to_string(rargs.level_bound), j);
            emit(j, out_path);
            return kExitOk;
        }

        if (*bun) {
            AffineData ad = affinize(RootSystem(cartan_from_arg(bargs.cartan)));
            WeightSystem ws(ad, ad.dominant_weight_from_labels(parse_labels(bargs.lambda)), bargs.level_bound);
            RepTruncation rt(ws);
            IwasawaForm x = normalize_to_iwasawa(ad, parse_group_element(ad, bargs.element));
            ProSystem ps(rt, x, bargs.level_bound);
            ps.check_admissibility();
            Json j;
            j["tau"] = rat_to_string(x.tau);
            Json levels = Json::array();
            for (long n = 0; n <= bargs.level_bound; ++n) {
                Json lj;
                lj["n"] = n;
                lj["rank"] = ps.quotient_lattice(n).rank;
                lj["kernel_rank"] = ps.kernel_lattice(n).rank;
                if (ps.kernel_lattice(n).rank > 0) {
                    auto sv = shortest_vector(ps.kernel_lattice(n));
                    lj["kernel_lambda1"] = json_number(sv.lambda1);
                    lj["kernel_h0"] = json_number(theta_h0(ps.kernel_lattice(n)));
                }
                lj["kernel_gram"] = sparse_qmatrix_json(ps.kernel_lattice(n).gram);
                levels.push_back(std::move(lj));
            }
            j["levels"] = levels;
            j["admissible"] = true;
            emit(j, out_path);
            return kExitOk;
        }

        if (*tf) {
            AffineData ad = affinize(RootSystem(cartan_from_arg(targs.cartan)));
            AffineWeight lambda = ad.dominant_weight_from_labels(parse_labels(targs.lambda));
            long horizon = targs.horizon > 0 ? targs.horizon : std::max<long>(targs.level_bound, 20);
            WeightSystem ws(ad, lambda, targs.level_bound);
            WeightSystem ws_big(ad, lambda, horizon);
            RepTruncation rt(ws);
            IwasawaForm x = normalize_to_iwasawa(ad, parse_group_element(ad, targs.element));
            double tau = to_double(x.tau);
            if (!(tau > 0 && tau < 1)) {
                std::cerr << "error: theta-finite needs 0 < tau < 1 (got " << tau << ")\n";
                return kExitTau;
            }
            ProSystem ps(rt, x, targs.level_bound);
            ps.check_admissibility();
            SummabilityOptions opts;
            opts.tol = tf_tol;
            opts.exact_level_cap = exact_cap;
            Json runs = Json::array();
            bool all_converged = true;
            for (double eps : eps_list)
                for (double t : t_list) {
                    SummabilityReport rep =
                        strong_summability(ps, ws_big, eps, horizon, opts, -0.5 * std::log(t), t);
                    all_converged = all_converged && rep.verdict == "CONVERGED";
                    runs.push_back(summability_json(rep));
                }
            Json j;
            j["element"] = targs.element;
            j["horizon"] = horizon;
            j["runs"] = runs;
            j["all_converged"] = all_converged;
            maybe_cache("theta_finite", j);
            emit(j, out_path);
            return all_converged ? kExitOk : kExitCompute;
        }
    } catch (const TauOutOfRange& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTau;
    } catch (const AdmissibilityFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAdmissibility;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const Json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCompute;
    }
    return kExitParse;
}
