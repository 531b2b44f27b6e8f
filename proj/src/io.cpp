#include "vecbeck/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace vecbeck {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok) {
    double v = 0.0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{}) throw std::runtime_error("bad numeric token '" + tok + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string strip(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

// "# matrixfield m=2 n=2 kind=mass dim=2 cells=8,8 spacing=0.125,0.125 origin=0,0"
std::map<std::string, std::string> parse_meta(const std::string& line) {
    std::map<std::string, std::string> meta;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        const size_t eq = tok.find('=');
        if (eq == std::string::npos) continue;
        meta[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return meta;
}

GridSpec grid_from_meta(const std::map<std::string, std::string>& meta) {
    GridSpec g;
    g.dim = static_cast<int>(parse_double(meta.at("dim")));
    const auto cells = split(meta.at("cells"), ',');
    const auto spacing = split(meta.at("spacing"), ',');
    const auto origin = split(meta.at("origin"), ',');
    if (static_cast<int>(cells.size()) != g.dim || static_cast<int>(spacing.size()) != g.dim ||
        static_cast<int>(origin.size()) != g.dim)
        throw std::runtime_error("field metadata axis count mismatch");
    for (int d = 0; d < g.dim; ++d) {
        g.cells[d] = static_cast<int>(parse_double(cells[d]));
        g.spacing[d] = parse_double(spacing[d]);
        g.origin[d] = parse_double(origin[d]);
    }
    g.validate();
    return g;
}

std::string grid_meta(const GridSpec& g) {
    std::string cells, spacing, origin;
    for (int d = 0; d < g.dim; ++d) {
        if (d) {
            cells += ',';
            spacing += ',';
            origin += ',';
        }
        cells += std::to_string(g.cells[d]);
        spacing += fmt_double(g.spacing[d]);
        origin += fmt_double(g.origin[d]);
    }
    return "dim=" + std::to_string(g.dim) + " cells=" + cells + " spacing=" + spacing +
           " origin=" + origin;
}

// Shared row layout: cell index, cell center coordinates, then entries.
void write_rows(std::ofstream& out, const GridSpec& g, int entries,
                const std::vector<double>& val) {
    const int cells = g.cell_count();
    for (int k = 0; k < cells; ++k) {
        out << k;
        const auto x = g.center(k);
        for (int d = 0; d < g.dim; ++d) out << ',' << fmt_double(x[d]);
        for (int e = 0; e < entries; ++e)
            out << ',' << fmt_double(val[static_cast<size_t>(k) * entries + e]);
        out << '\n';
    }
}

void read_rows(std::ifstream& in, const GridSpec& g, int entries, std::vector<double>& val) {
    const int cells = g.cell_count();
    std::string line;
    int k = 0;
    while (std::getline(in, line)) {
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        if (!std::isdigit(static_cast<unsigned char>(line[0])) && line[0] != '-') continue;  // header row
        const auto toks = split(line, ',');
        if (static_cast<int>(toks.size()) != 1 + g.dim + entries)
            throw std::runtime_error("field row has wrong column count");
        if (k >= cells) throw std::runtime_error("field file has too many rows");
        if (static_cast<int>(parse_double(toks[0])) != k)
            throw std::runtime_error("field rows must be in cell order");
        for (int e = 0; e < entries; ++e)
            val[static_cast<size_t>(k) * entries + e] = parse_double(toks[1 + g.dim + e]);
        ++k;
    }
    if (k != cells) throw std::runtime_error("field file has too few rows");
}

}  // namespace

Instance read_instance(const std::string& path) {
    auto in = open_in(path);
    json j;
    in >> j;
    if (!j.is_object() || j.value("format", "") != format_version)
        throw std::runtime_error("'" + path + "' is not a " + std::string(format_version) +
                                 " instance");
    Instance inst;
    const json& jg = j.at("grid");
    const auto dims = jg.at("dims");
    if (!dims.is_array() || dims.empty() || dims.size() > 3)
        throw std::runtime_error("grid dims must list 1 to 3 axes");
    inst.grid.dim = static_cast<int>(dims.size());
    for (int d = 0; d < inst.grid.dim; ++d) {
        inst.grid.cells[d] = dims[d].get<int>();
        inst.grid.spacing[d] = jg.at("spacing")[d].get<double>();
        inst.grid.origin[d] = jg.contains("origin") ? jg.at("origin")[d].get<double>() : 0.0;
    }
    inst.grid.validate();
    inst.m = j.at("m").get<int>();
    if (inst.m < 1 || inst.m > max_cell_dim) throw std::runtime_error("instance m out of range");
    const json& jm = j.at("measure");
    const int cells = inst.grid.cell_count();
    if (!jm.is_array() || static_cast<int>(jm.size()) != cells)
        throw std::runtime_error("measure must list one row per cell");
    inst.measure = VectorMeasure(inst.grid, inst.m);
    for (int k = 0; k < cells; ++k) {
        const json& row = jm[k];
        if (!row.is_array() || static_cast<int>(row.size()) != inst.m)
            throw std::runtime_error("measure row " + std::to_string(k) + " has wrong length");
        for (int c = 0; c < inst.m; ++c) inst.measure.at(k, c) = row[c].get<double>();
    }
    if (j.contains("p") && !j.at("p").is_null()) inst.p = j.at("p").get<double>();
    if (j.contains("kind") && j.at("kind").is_string()) inst.kind = j.at("kind").get<std::string>();
    if (j.contains("seed") && j.at("seed").is_number()) inst.seed = j.at("seed").get<uint64_t>();
    return inst;
}

void write_instance(const Instance& inst, const std::string& path) {
    inst.grid.validate();
    json jg;
    jg["dims"] = json::array();
    jg["spacing"] = json::array();
    jg["origin"] = json::array();
    for (int d = 0; d < inst.grid.dim; ++d) {
        jg["dims"].push_back(inst.grid.cells[d]);
        jg["spacing"].push_back(inst.grid.spacing[d]);
        jg["origin"].push_back(inst.grid.origin[d]);
    }
    json jm = json::array();
    const int cells = inst.grid.cell_count();
    for (int k = 0; k < cells; ++k) {
        json row = json::array();
        for (int c = 0; c < inst.m; ++c) row.push_back(inst.measure.at(k, c));
        jm.push_back(std::move(row));
    }
    json j;
    j["format"] = format_version;
    j["grid"] = std::move(jg);
    j["m"] = inst.m;
    j["measure"] = std::move(jm);
    if (inst.p) j["p"] = *inst.p;
    if (!inst.kind.empty()) j["kind"] = inst.kind;
    if (inst.seed) j["seed"] = *inst.seed;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

Matrix read_matrix_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        const auto toks = split(line, ',');
        std::vector<double> row;
        row.reserve(toks.size());
        for (const auto& t : toks) row.push_back(parse_double(t));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("'" + path + "' has ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("'" + path + "' holds no matrix rows");
    Matrix a(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) a(i, j) = rows[i][j];
    return a;
}

void write_matrix_csv(const Matrix& a, const std::string& path) {
    auto out = open_out(path);
    out << "# matrix " << a.rows << "x" << a.cols << '\n';
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) {
            if (j) out << ',';
            out << fmt_double(a(i, j));
        }
        out << '\n';
    }
}

void write_matrix_field_csv(const MatrixField& f, const std::string& path) {
    auto out = open_out(path);
    out << "# format: " << format_version << '\n';
    out << "# matrixfield m=" << f.m << " n=" << f.n
        << " kind=" << (f.kind == FieldKind::mass ? "mass" : "density") << ' '
        << grid_meta(f.grid) << '\n';
    out << "cell";
    for (int d = 0; d < f.grid.dim; ++d) out << ",x" << d;
    for (int i = 0; i < f.m; ++i)
        for (int j = 0; j < f.n; ++j) out << ",e_" << i << '_' << j;
    out << '\n';
    write_rows(out, f.grid, f.m * f.n, f.val);
}

MatrixField read_matrix_field_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::map<std::string, std::string> meta;
    while (std::getline(in, line)) {
        if (line.rfind("# matrixfield", 0) == 0) {
            meta = parse_meta(line.substr(1));
            break;
        }
        if (!line.empty() && line[0] != '#') break;
    }
    if (meta.empty()) throw std::runtime_error("'" + path + "' lacks a matrixfield header");
    const GridSpec g = grid_from_meta(meta);
    const int m = static_cast<int>(parse_double(meta.at("m")));
    const int n = static_cast<int>(parse_double(meta.at("n")));
    const FieldKind kind = meta.at("kind") == "mass" ? FieldKind::mass : FieldKind::density;
    MatrixField f(g, m, n, kind);
    read_rows(in, g, m * n, f.val);
    return f;
}

void write_vector_field_csv(const VectorField& f, const std::string& path) {
    auto out = open_out(path);
    out << "# format: " << format_version << '\n';
    out << "# vectorfield m=" << f.m << ' ' << grid_meta(f.grid) << '\n';
    out << "cell";
    for (int d = 0; d < f.grid.dim; ++d) out << ",x" << d;
    for (int c = 0; c < f.m; ++c) out << ",e_" << c;
    out << '\n';
    write_rows(out, f.grid, f.m, f.val);
}

VectorField read_vector_field_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::map<std::string, std::string> meta;
    while (std::getline(in, line)) {
        if (line.rfind("# vectorfield", 0) == 0) {
            meta = parse_meta(line.substr(1));
            break;
        }
        if (!line.empty() && line[0] != '#') break;
    }
    if (meta.empty()) throw std::runtime_error("'" + path + "' lacks a vectorfield header");
    const GridSpec g = grid_from_meta(meta);
    const int m = static_cast<int>(parse_double(meta.at("m")));
    VectorField f(g, m);
    read_rows(in, g, m, f.val);
    return f;
}

}  // namespace vecbeck
