#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vecbeck/beckmann.hpp"
#include "vecbeck/cones.hpp"
#include "vecbeck/io.hpp"
#include "vecbeck/lq.hpp"
#include "vecbeck/rng.hpp"
#include "vecbeck/schatten.hpp"

namespace {

using nlohmann::json;
using namespace vecbeck;

constexpr double pi = 3.14159265358979323846;

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    size_t start = 0;
    while (start <= s.size()) {
        const size_t pos = s.find(',', start);
        const std::string tok =
            pos == std::string::npos ? s.substr(start) : s.substr(start, pos - start);
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{}) throw std::runtime_error("bad numeric list entry '" + tok + "'");
        out.push_back(v);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<double> axis_list(const std::string& s, int dim, double fallback) {
    if (s.empty()) return std::vector<double>(dim, fallback);
    auto v = parse_list(s);
    if (static_cast<int>(v.size()) == 1) return std::vector<double>(dim, v[0]);
    if (static_cast<int>(v.size()) != dim)
        throw std::runtime_error("expected 1 or " + std::to_string(dim) + " list entries");
    return v;
}

int snap_cell(const GridSpec& g, const std::vector<double>& x) {
    std::array<int, 3> idx{0, 0, 0};
    for (int d = 0; d < g.dim; ++d) {
        const int i = static_cast<int>(std::floor((x[d] - g.origin[d]) / g.spacing[d]));
        idx[d] = std::clamp(i, 0, g.cells[d] - 1);
    }
    return g.ravel(idx);
}

json solve_report_json(const SolveReport& r) {
    json j;
    j["primal"] = r.primal;
    j["dual"] = r.dual;
    j["gap"] = r.gap;
    j["div_residual"] = r.div_residual;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    return j;
}

json problem_json(const Instance& inst) {
    json j;
    j["dim"] = inst.grid.dim;
    j["cells"] = json::array();
    for (int d = 0; d < inst.grid.dim; ++d) j["cells"].push_back(inst.grid.cells[d]);
    j["m"] = inst.m;
    if (inst.p)
        j["p"] = *inst.p;
    else
        j["p"] = nullptr;
    if (!inst.kind.empty()) j["kind"] = inst.kind;
    j["total_abs_mass"] = total_abs_mass(inst.measure);
    return j;
}

json params_json(const SolverParams& p) {
    json j;
    j["tau"] = p.tau;
    j["sigma"] = p.sigma;
    j["theta"] = p.theta;
    j["max_iters"] = p.max_iters;
    j["gap_tol"] = p.gap_tol;
    j["feas_tol"] = p.feas_tol;
    j["check_every"] = p.check_every;
    return j;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

struct GenArgs {
    std::string kind, output, cells = "64", a, b, v;
    int dim = 1, m = 0, bumps = 3;
    double p = 2.0, scale = 1.0;
    bool p_given = false;
    uint64_t seed = 1;
};

int cmd_gen(const GenArgs& ga) {
    if (ga.output.empty()) {
        std::cerr << "gen: --output is required\n";
        return 2;
    }
    if (ga.dim < 1 || ga.dim > 3) {
        std::cerr << "gen: --dim must be 1, 2 or 3\n";
        return 2;
    }
    GridSpec g;
    g.dim = ga.dim;
    const auto cells = axis_list(ga.cells, ga.dim, 64);
    for (int d = 0; d < g.dim; ++d) {
        g.cells[d] = static_cast<int>(cells[d]);
        if (g.cells[d] < 1) {
            std::cerr << "gen: cell counts must be positive\n";
            return 2;
        }
        g.spacing[d] = 1.0 / g.cells[d];
        g.origin[d] = 0.0;
    }
    g.validate();

    Instance inst;
    inst.grid = g;
    inst.kind = ga.kind;
    inst.seed = ga.seed;
    Rng rng(ga.seed);
    const int n_cells = g.cell_count();

    if (ga.kind == "two-dirac") {
        inst.m = ga.m > 0 ? ga.m : g.dim;
        inst.measure = VectorMeasure(g, inst.m);
        const auto a = axis_list(ga.a, g.dim, 0.25);
        const auto b = axis_list(ga.b, g.dim, 0.75);
        std::vector<double> v;
        if (ga.v.empty())
            v.assign(inst.m, 1.0 / std::sqrt(static_cast<double>(inst.m)));
        else {
            v = parse_list(ga.v);
            if (static_cast<int>(v.size()) != inst.m) {
                std::cerr << "gen: --v must list " << inst.m << " components\n";
                return 2;
            }
        }
        const int ka = snap_cell(g, a);
        const int kb = snap_cell(g, b);
        for (int c = 0; c < inst.m; ++c) {
            inst.measure.at(ka, c) += ga.scale * v[c];
            inst.measure.at(kb, c) -= ga.scale * v[c];
        }
    } else if (ga.kind == "random-balanced") {
        inst.m = ga.m > 0 ? ga.m : g.dim;
        inst.measure = VectorMeasure(g, inst.m);
        for (int k = 0; k < n_cells; ++k)
            for (int c = 0; c < inst.m; ++c) inst.measure.at(k, c) = ga.scale * rng.normal();
        for (int c = 0; c < inst.m; ++c) {
            long double s = 0.0L;
            for (int k = 0; k + 1 < n_cells; ++k) s += inst.measure.at(k, c);
            inst.measure.at(n_cells - 1, c) = static_cast<double>(-s);
        }
    } else if (ga.kind == "psd-field") {
        if (ga.m > 0 && ga.m != g.dim) {
            std::cerr << "gen: psd-field needs m equal to the grid dimension\n";
            return 2;
        }
        inst.m = g.dim;
        MatrixField s_field(g, g.dim, g.dim, FieldKind::density);
        double min_len = std::numeric_limits<double>::infinity();
        for (int d = 0; d < g.dim; ++d) min_len = std::min(min_len, g.cells[d] * g.spacing[d]);
        for (int r = 0; r < std::max(ga.bumps, 1); ++r) {
            const double iso = std::abs(rng.normal());
            const double aniso = std::abs(rng.normal());
            std::vector<double> u(g.dim);
            double un = 0.0;
            for (int d = 0; d < g.dim; ++d) {
                u[d] = rng.normal();
                un += u[d] * u[d];
            }
            un = std::sqrt(un);
            if (un == 0.0) {
                u[0] = 1.0;
                un = 1.0;
            }
            for (double& x : u) x /= un;
            const double rho = min_len * rng.uniform(0.12, 0.3);
            std::vector<double> center(g.dim);
            for (int d = 0; d < g.dim; ++d) {
                const double lo = g.origin[d] + 2.0 * g.spacing[d] + rho;
                const double hi = g.origin[d] + g.cells[d] * g.spacing[d] - 2.0 * g.spacing[d] - rho;
                center[d] = lo < hi ? rng.uniform(lo, hi)
                                    : g.origin[d] + 0.5 * g.cells[d] * g.spacing[d];
            }
            for (int k = 0; k < n_cells; ++k) {
                const auto x = g.center(k);
                double w = 1.0;
                for (int d = 0; d < g.dim; ++d) {
                    const double t = (x[d] - center[d]) / rho;
                    w -= t * t;
                }
                if (w <= 0.0) continue;
                const double phi = ga.scale * w * w * w;
                double* cell = s_field.cell(k);
                for (int i = 0; i < g.dim; ++i)
                    for (int j = 0; j < g.dim; ++j)
                        cell[i * g.dim + j] += phi * (aniso * u[i] * u[j] + (i == j ? iso : 0.0));
            }
        }
        // hard two-cell zero margin so the coordinate map is exactly optimal
        for (int k = 0; k < n_cells; ++k) {
            const auto idx = g.unravel(k);
            bool margin = false;
            for (int d = 0; d < g.dim; ++d)
                if (idx[d] < 2 || idx[d] >= g.cells[d] - 2) margin = true;
            if (margin)
                for (int e = 0; e < g.dim * g.dim; ++e) s_field.cell(k)[e] = 0.0;
        }
        inst.measure = psd_field_to_measure(s_field);
    } else if (ga.kind == "lq-separable") {
        inst.m = ga.m > 0 ? ga.m : g.dim;
        inst.measure = VectorMeasure(g, inst.m);
        inst.p = ga.p;
        const double len = g.cells[0] * g.spacing[0];
        const double vol = g.cell_volume();
        for (int k = 0; k < n_cells; ++k) {
            const auto x = g.center(k);
            inst.measure.at(k, 0) = ga.scale * std::cos(pi * (x[0] - g.origin[0]) / len) * vol;
        }
    } else {
        std::cerr << "gen: unknown --kind '" << ga.kind << "'\n";
        return 2;
    }
    if (ga.p_given) inst.p = ga.p;
    write_instance(inst, ga.output);
    return 0;
}

int cmd_solve(const std::string& input, const std::string& output, const SolverParams& params) {
    if (input.empty() || output.empty()) {
        std::cerr << "solve: --input and --output are required\n";
        return 2;
    }
    Instance inst;
    try {
        inst = read_instance(input);
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << '\n';
        return 2;
    }
    json j;
    j["format"] = format_version;
    j["problem"] = problem_json(inst);
    j["params"] = params_json(params);
    try {
        if (inst.p) {
            LqInstance li;
            li.grid = inst.grid;
            li.m = inst.m;
            li.p = *inst.p;
            li.q = conjugate_exponent(*inst.p);
            li.h = inst.measure;
            li.validate();
            LqSolution sol = solve_lq(li, params);
            j["report"] = solve_report_json(sol.report);
            if (lp_field_norm(sol.H, li.q) > 0.0) {
                const auto res = check_optifun(sol.f, sol.H, li.q);
                j["optifun_residuals"] = json::array({res[0], res[1], res[2], res[3]});
            }
            write_json(j, output + ".report.json");
            write_vector_field_csv(sol.f, output + ".f.csv");
            write_matrix_field_csv(sol.H, output + ".H.csv");
            return sol.report.converged ? 0 : 3;
        }
        BeckmannSolution sol = solve_beckmann(inst.measure, params);
        j["report"] = solve_report_json(sol.report);
        if (sol.report.primal > 0.0) j["optimality_residual"] = check_optimality(sol.M, sol.u);
        write_json(j, output + ".report.json");
        write_vector_field_csv(sol.u, output + ".u.csv");
        write_matrix_field_csv(sol.M, output + ".M.csv");
        return sol.report.converged ? 0 : 3;
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << '\n';
        return 2;
    }
}

int cmd_certify(const std::string& a_path, const std::string& b_path, double p, bool p_given,
                double tol, const std::string& output) {
    try {
        const Matrix a = read_matrix_csv(a_path);
        const Matrix b = read_matrix_csv(b_path);
        const EqualityCertificate cert =
            p_given ? certify_equality_pq(a, b, p, tol) : certify_equality_q1(a, b, tol);
        json j;
        j["format"] = format_version;
        j["mode"] = p_given ? "pq" : "q1";
        if (p_given) {
            j["p"] = p;
            j["q"] = conjugate_exponent(p);
        }
        j["holder_slack"] = holder_slack(a, b, p_given ? p : 1.0);
        j["accept"] = cert.accept;
        j["residual_symmetry"] = cert.residual_symmetry;
        j["residual_psd"] = cert.residual_psd;
        j["residual_isometry_or_power"] = cert.residual_isometry_or_power;
        j["residual_norm_bound"] = cert.residual_norm_bound;
        j["scaling_c"] = cert.scaling_c;
        j["tol"] = cert.tol;
        if (!output.empty()) write_json(j, output);
        std::cout << (cert.accept ? "accept" : "reject") << '\n';
        return cert.accept ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "certify: " << e.what() << '\n';
        return 2;
    }
}

int cmd_polar(const std::string& input, const std::string& output, const std::string& mode,
              const std::string& f_spec, double p, bool p_given, int witnesses, uint64_t seed,
              const std::string& cert_path, const SolverParams& params) {
    if (input.empty()) {
        std::cerr << "polar: --input is required\n";
        return 2;
    }
    try {
        const Instance inst = read_instance(input);
        PolarConeReport rep;
        if (mode == "monotone") {
            rep = monotone_membership(inst.measure, params, witnesses, seed);
        } else if (mode == "tangent-c1") {
            VectorField f;
            if (f_spec.empty() || f_spec == "identity")
                f = coordinate_field(inst.grid);
            else if (f_spec.rfind("csv:", 0) == 0)
                f = read_vector_field_csv(f_spec.substr(4));
            else
                throw std::invalid_argument("tangent-c1 --f must be 'identity' or 'csv:PATH'");
            rep = tangent_cone_check(inst.measure, f, params);
        } else if (mode == "sobolev") {
            const double pe = p_given ? p : (inst.p ? *inst.p : 2.0);
            VectorField f;
            if (f_spec.empty() || f_spec == "neumann") {
                f = neumann_oracle(inst.measure).f;
                const double s = lp_field_norm(discrete_gradient(f), pe);
                if (s <= 0.0)
                    throw std::invalid_argument("cannot build a base point from a zero measure");
                for (double& x : f.val) x /= s;
            } else if (f_spec.rfind("csv:", 0) == 0) {
                f = read_vector_field_csv(f_spec.substr(4));
            } else {
                throw std::invalid_argument("sobolev --f must be 'neumann' or 'csv:PATH'");
            }
            rep = sobolev_cone_check(inst.measure, f, pe, params, witnesses, seed);
        } else {
            std::cerr << "polar: unknown --mode '" << mode << "'\n";
            return 2;
        }

        json j;
        j["format"] = format_version;
        j["mode"] = rep.mode;
        j["member"] = rep.member;
        j["gap"] = rep.gap;
        j["dual_value"] = rep.dual_value;
        j["pairing_value"] = rep.pairing_value;
        j["tol"] = rep.tol;
        json cj;
        cj["symmetry_max"] = rep.cert_symmetry_max;
        cj["symmetry_mean"] = rep.cert_symmetry_mean;
        cj["psd_max"] = rep.cert_psd_max;
        cj["psd_mean"] = rep.cert_psd_mean;
        cj["isometry_max"] = rep.cert_isometry_max;
        cj["isometry_mean"] = rep.cert_isometry_mean;
        j["certificate_residuals"] = cj;
        if (rep.mode == "sobolev")
            j["divv"] = json::array({rep.divv[0], rep.divv[1], rep.divv[2], rep.divv[3]});
        if (rep.mode == "monotone") j["trace_identity"] = rep.trace_identity;
        json wj;
        wj["count"] = rep.witness_count;
        wj["worst"] = rep.worst_witness;
        wj["violations"] = json::array();
        for (const auto& v : rep.witness_violations)
            wj["violations"].push_back(json{{"id", v.id}, {"pairing", v.pairing}});
        j["witnesses"] = wj;
        j["solver"] = solve_report_json(rep.solver);
        if (!output.empty()) write_json(j, output);
        if (!cert_path.empty()) write_matrix_field_csv(rep.certificate, cert_path);
        std::cout << (rep.member ? "member" : "non-member") << '\n';
        if (!rep.solver.converged) return 3;
        return rep.member ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "polar: " << e.what() << '\n';
        return 2;
    }
}

int cmd_oracle(const std::string& input, const std::string& output, double tol,
               const SolverParams& params) {
    if (input.empty()) {
        std::cerr << "oracle: --input is required\n";
        return 2;
    }
    try {
        const Instance inst = read_instance(input);
        json j;
        j["format"] = format_version;
        double oracle_value = 0.0, solver_value = 0.0;
        SolveReport report;
        if (inst.p) {
            if (std::abs(*inst.p - 2.0) > 1e-12) {
                std::cerr << "oracle: no oracle for p != 2\n";
                return 2;
            }
            const NeumannOracle ora = neumann_oracle(inst.measure);
            LqInstance li;
            li.grid = inst.grid;
            li.m = inst.m;
            li.p = 2.0;
            li.q = 2.0;
            li.h = inst.measure;
            li.validate();
            const LqSolution sol = solve_lq(li, params);
            oracle_value = ora.value;
            solver_value = sol.report.primal;
            report = sol.report;
            j["oracle"] = "neumann";
        } else if (inst.grid.dim == 1) {
            const Oracle1d ora = oracle_1d(inst.measure);
            const BeckmannSolution sol = solve_beckmann(inst.measure, params);
            oracle_value = ora.value;
            solver_value = sol.report.primal;
            report = sol.report;
            j["oracle"] = "flux-1d";
        } else {
            std::cerr << "oracle: no closed-form value for this instance\n";
            return 2;
        }
        const double rel = std::abs(solver_value - oracle_value) / std::max(std::abs(oracle_value), 1e-12);
        const bool match = rel <= tol;
        j["oracle_value"] = oracle_value;
        j["solver_value"] = solver_value;
        j["rel_diff"] = rel;
        j["tol"] = tol;
        j["match"] = match;
        j["solver"] = solve_report_json(report);
        if (!output.empty()) write_json(j, output);
        std::cout << (match ? "match" : "mismatch") << '\n';
        return match ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "oracle: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimal flux transport of vector measures on grids"};
    app.require_subcommand(1);
    std::string format_req = format_version;
    app.add_option("--format-version", format_req, "expected file format tag");

    std::string input, output;
    uint64_t seed = 1;
    SolverParams params;
    const auto add_shared = [&](CLI::App* sub) {
        sub->add_option("--input", input, "instance JSON path");
        sub->add_option("--output", output, "output path or prefix");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--tol-gap", params.gap_tol, "relative duality gap target");
        sub->add_option("--tol-feas", params.feas_tol, "relative divergence residual target");
        sub->add_option("--max-iters", params.max_iters, "iteration cap");
        sub->add_option("--theta", params.theta, "extrapolation weight");
        sub->add_option("--check-every", params.check_every, "convergence check stride");
        sub->add_option("--format-version", format_req, "expected file format tag");
    };

    GenArgs ga;
    CLI::App* gen = app.add_subcommand("gen", "generate a problem instance");
    add_shared(gen);
    gen->add_option("kind,--kind", ga.kind,
                    "two-dirac | random-balanced | psd-field | lq-separable");
    gen->add_option("--dim,--n", ga.dim, "grid dimension (1-3)");
    gen->add_option("--m", ga.m, "vector components per cell (default: dim)");
    gen->add_option("--cells", ga.cells, "cells per axis, single value or comma list");
    gen->add_option("--a", ga.a, "first point, comma coordinates");
    gen->add_option("--b", ga.b, "second point, comma coordinates");
    gen->add_option("--v", ga.v, "dirac vector, comma components");
    CLI::Option* gen_p = gen->add_option("--p", ga.p, "density exponent for the instance");
    gen->add_option("--bumps", ga.bumps, "psd-field bump count");
    gen->add_flag("--bump", "psd-field shorthand, keeps the default bump count");
    gen->add_option("--scale", ga.scale, "amplitude factor");

    CLI::App* solve = app.add_subcommand("solve", "solve an instance and write reports");
    add_shared(solve);

    std::string a_path, b_path, polar_mode = "monotone", f_spec, cert_path;
    double cert_p = 2.0, cert_tol = tol_cert, oracle_tol = 1e-3, polar_p = 2.0;
    int witnesses = 16;
    CLI::App* certify = app.add_subcommand("certify", "check a norm equality certificate");
    add_shared(certify);
    certify->add_option("--A", a_path, "matrix CSV, nuclear/p side")->required();
    certify->add_option("--B", b_path, "matrix CSV, dual side")->required();
    CLI::Option* certify_p = certify->add_option("--p", cert_p, "exponent in (1, inf)");
    certify->add_option("--tol", cert_tol, "acceptance tolerance");

    CLI::App* polar = app.add_subcommand("polar", "polar cone membership test");
    add_shared(polar);
    polar->add_option("--mode", polar_mode, "monotone | tangent-c1 | sobolev");
    polar->add_option("--f", f_spec, "base map: identity | neumann | csv:PATH");
    CLI::Option* polar_p_opt = polar->add_option("--p", polar_p, "exponent for sobolev mode");
    polar->add_option("--witnesses", witnesses, "sampled test maps");
    polar->add_option("--certificate", cert_path, "write the flux certificate CSV here");

    CLI::App* oracle = app.add_subcommand("oracle", "compare the solver against a closed form");
    add_shared(oracle);
    oracle->add_option("--tol", oracle_tol, "relative mismatch tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (format_req != format_version) {
        std::cerr << "unsupported --format-version '" << format_req << "'\n";
        return 2;
    }

    try {
        if (app.got_subcommand(gen)) {
            if (ga.kind.empty()) {
                std::cerr << "gen: a kind is required\n";
                return 2;
            }
            ga.output = output;
            ga.seed = seed;
            ga.p_given = gen_p->count() > 0;
            return cmd_gen(ga);
        }
        if (app.got_subcommand(solve)) return cmd_solve(input, output, params);
        if (app.got_subcommand(certify))
            return cmd_certify(a_path, b_path, cert_p, certify_p->count() > 0, cert_tol, output);
        if (app.got_subcommand(polar))
            return cmd_polar(input, output, polar_mode, f_spec, polar_p, polar_p_opt->count() > 0,
                             witnesses, seed, cert_path, params);
        if (app.got_subcommand(oracle)) return cmd_oracle(input, output, oracle_tol, params);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
