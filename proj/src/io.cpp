#include "svfar/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "svfar/errors.hpp"

namespace svfar {

namespace {

using ojson = nlohmann::ordered_json;

ojson provenance_object(const Provenance& prov) {
    ojson o{{"tool", "svfar"}, {"version", prov.version}, {"config_hash", prov.config_hash}};
    if (prov.has_seed) o["seed"] = prov.seed;
    return o;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ojson matrix_rows(const Eigen::MatrixXd& m) {
    ojson rows = ojson::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ojson row = ojson::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

ojson vector_array(const Eigen::VectorXd& v) {
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

template <class T>
T parse_number(std::string_view field, std::size_t line) {
    T value{};
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw DataError("panel csv line " + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
    return value;
}

}  // namespace

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string provenance_header(const Provenance& prov) {
    std::string out = "# tool: svfar " + prov.version + "\n# config_hash: " + prov.config_hash + "\n";
    if (prov.has_seed) out += "# seed: " + std::to_string(prov.seed) + "\n";
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string panel_csv(const CurvePanel& panel, const Provenance& prov) {
    std::string out = provenance_header(prov);
    out += "t,j,s,value\n";
    for (std::size_t t = 0; t < panel.n(); ++t)
        for (std::size_t j = 0; j < panel.p(); ++j)
            for (std::size_t s = 0; s < panel.T(); ++s) {
                out += std::to_string(t + 1) + ',' + std::to_string(j + 1) + ',' + std::to_string(s + 1) + ',';
                out += format_double(panel.variable(j)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)));
                out += '\n';
            }
    return out;
}

std::string grid_json(const Grid& grid, const Provenance& prov) {
    return dump(ojson{{"provenance", provenance_object(prov)}, {"points", vector_array(grid.points())}});
}

Grid parse_grid_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        return Grid(j.at("points").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("grid json: ") + e.what());
    }
}

CurvePanel parse_panel_csv(std::string_view text, const Grid& grid) {
    struct Cell {
        std::size_t t, j, s;
        double v;
    };
    std::vector<Cell> cells;
    std::size_t n = 0, p = 0, line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line != "t,j,s,value") throw DataError("panel csv: expected header 't,j,s,value'");
            continue;
        }
        std::string_view f[4];
        std::size_t start = 0;
        for (int k = 0; k < 4; ++k) {
            const std::size_t comma = k < 3 ? line.find(',', start) : line.size();
            if (comma == std::string_view::npos) throw DataError("panel csv line " + std::to_string(line_no) + ": expected 4 fields");
            f[k] = line.substr(start, comma - start);
            start = comma + 1;
        }
        if (f[3].find(',') != std::string_view::npos)
            throw DataError("panel csv line " + std::to_string(line_no) + ": expected 4 fields");
        const auto t = parse_number<std::size_t>(f[0], line_no);
        const auto j = parse_number<std::size_t>(f[1], line_no);
        const auto s = parse_number<std::size_t>(f[2], line_no);
        if (t == 0 || j == 0 || s == 0) throw DataError("panel csv line " + std::to_string(line_no) + ": indices are 1-based");
        Cell c{t - 1, j - 1, s - 1, parse_number<double>(f[3], line_no)};
        if (c.s >= grid.size()) throw DataError("panel csv line " + std::to_string(line_no) + ": grid index out of range");
        if (!std::isfinite(c.v)) throw DataError("panel csv line " + std::to_string(line_no) + ": non-finite value");
        n = std::max(n, c.t + 1);
        p = std::max(p, c.j + 1);
        cells.push_back(c);
    }
    if (cells.empty()) throw DataError("panel csv: no observations");
    const std::size_t T = grid.size();
    if (cells.size() != n * p * T) throw DataError("panel csv: panel is incomplete or has duplicate cells");
    std::vector<Eigen::MatrixXd> vars(p, Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(T),
                                                                    std::numeric_limits<double>::quiet_NaN()));
    for (const Cell& c : cells) {
        double& slot = vars[c.j](static_cast<Eigen::Index>(c.t), static_cast<Eigen::Index>(c.s));
        if (!std::isnan(slot)) throw DataError("panel csv: duplicate cell");
        slot = c.v;
    }
    return CurvePanel(grid, std::move(vars));
}

std::filesystem::path grid_sidecar(const std::filesystem::path& panel_path) {
    std::filesystem::path out = panel_path;
    out.replace_extension(".grid.json");
    return out;
}

CurvePanel load_panel(const std::filesystem::path& panel_path, const std::filesystem::path& grid_path) {
    const std::string text = read_text(panel_path);
    std::filesystem::path gp = grid_path;
    if (gp.empty() && std::filesystem::exists(grid_sidecar(panel_path))) gp = grid_sidecar(panel_path);
    if (!gp.empty()) return parse_panel_csv(text, parse_grid_json(read_text(gp)));

    // No grid file: uniform grid sized by the largest grid index.
    std::size_t T = 0;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        const auto a = line.find(','), b = line.find(',', a + 1), c = line.find(',', b + 1);
        if (a == std::string::npos || b == std::string::npos || c == std::string::npos) throw DataError("panel csv: expected 4 fields");
        T = std::max(T, parse_number<std::size_t>(std::string_view(line).substr(b + 1, c - b - 1), 0));
    }
    return parse_panel_csv(text, Grid::uniform(T));
}

std::string truth_json(const GroundTruth& truth, const SimSpec& spec, const Provenance& prov) {
    ojson support = ojson::array();
    for (Eigen::Index j = 0; j < truth.support.rows(); ++j) {
        ojson row = ojson::array();
        for (Eigen::Index k = 0; k < truth.support.cols(); ++k) row.push_back(truth.support(j, k) ? 1 : 0);
        support.push_back(std::move(row));
    }
    return dump(ojson{{"provenance", provenance_object(prov)},
                      {"model", std::string(sim_model_name(spec.model))},
                      {"n", spec.n},
                      {"p", spec.p},
                      {"T", spec.T},
                      {"basis_dim", truth.basis_dim},
                      {"noise_sd", spec.noise_sd},
                      {"kappa", truth.kappa},
                      {"support", support},
                      {"B", matrix_rows(truth.B)}});
}

std::string kernels_csv(const std::vector<KernelMatrix>& A, const Provenance& prov) {
    std::string out = provenance_header(prov);
    out += "h,j,k,r,s,value\n";
    for (std::size_t h = 0; h < A.size(); ++h)
        for (std::size_t j = 0; j < A[h].p_rows(); ++j)
            for (std::size_t k = 0; k < A[h].p_cols(); ++k) {
                const auto& K = A[h].block(j, k);
                for (Eigen::Index r = 0; r < K.rows(); ++r)
                    for (Eigen::Index s = 0; s < K.cols(); ++s) {
                        out += std::to_string(h + 1) + ',' + std::to_string(j + 1) + ',' + std::to_string(k + 1) + ',' +
                               std::to_string(r + 1) + ',' + std::to_string(s + 1) + ',' + format_double(K(r, s)) + '\n';
                    }
            }
    return out;
}

std::string fit_json(const VfarFit& fit, const VfarOptions& options, const Provenance& prov) {
    ojson gamma = ojson::array(), df = ojson::array(), q = ojson::array(), eta = ojson::array();
    ojson iters = ojson::array(), restarts = ojson::array(), final_obj = ojson::array(), aic = ojson::array(),
          bic = ojson::array(), rss = ojson::array();
    for (std::size_t j = 0; j < fit.p; ++j) {
        const ResponseFit& r = fit.responses[j];
        gamma.push_back(r.gamma);
        df.push_back(r.ic.df);
        rss.push_back(r.ic.rss);
        aic.push_back(r.ic.aic);
        bic.push_back(r.ic.bic);
        iters.push_back(r.iterations);
        restarts.push_back(r.restarts);
        final_obj.push_back(r.final_objective);
        q.push_back(fit.fpca[j].q);
        eta.push_back(fit.fpca[j].eta);
    }
    ojson edges = ojson::array();
    for (const Edge& e : fit.edges) edges.push_back(ojson::array({e.k + 1, e.j + 1, e.h, e.norm}));
    return dump(ojson{{"provenance", provenance_object(prov)},
                      {"L", fit.L},
                      {"p", fit.p},
                      {"criterion", options.criterion == Criterion::aic ? "aic" : "bic"},
                      {"q", q},
                      {"eta", eta},
                      {"gamma", gamma},
                      {"df", df},
                      {"rss", rss},
                      {"aic", aic},
                      {"bic", bic},
                      {"edges", edges},
                      {"rank_deficient", fit.rank_deficient},
                      {"solver", ojson{{"iters", iters}, {"restarts", restarts}, {"final_obj", final_obj}}}});
}

std::string fpca_json(const std::vector<FpcaResult>& fpca, const Provenance& prov) {
    ojson vars = ojson::array();
    for (std::size_t j = 0; j < fpca.size(); ++j)
        vars.push_back(ojson{{"j", j + 1}, {"q", fpca[j].q}, {"eta", fpca[j].eta}, {"eigenvalues", vector_array(fpca[j].eigenvalues)}});
    return dump(ojson{{"provenance", provenance_object(prov)}, {"variables", vars}});
}

std::string scores_csv(const std::vector<FpcaResult>& fpca, const Provenance& prov) {
    std::string out = provenance_header(prov) + "t,j,l,value\n";
    for (std::size_t j = 0; j < fpca.size(); ++j)
        for (Eigen::Index t = 0; t < fpca[j].scores.rows(); ++t)
            for (Eigen::Index l = 0; l < fpca[j].scores.cols(); ++l)
                out += std::to_string(t + 1) + ',' + std::to_string(j + 1) + ',' + std::to_string(l + 1) + ',' +
                       format_double(fpca[j].scores(t, l)) + '\n';
    return out;
}

std::string eigenfunctions_csv(const std::vector<FpcaResult>& fpca, const Provenance& prov) {
    std::string out = provenance_header(prov) + "j,l,s,value\n";
    for (std::size_t j = 0; j < fpca.size(); ++j)
        for (Eigen::Index l = 0; l < fpca[j].eigenfunctions.cols(); ++l)
            for (Eigen::Index s = 0; s < fpca[j].eigenfunctions.rows(); ++s)
                out += std::to_string(j + 1) + ',' + std::to_string(l + 1) + ',' + std::to_string(s + 1) + ',' +
                       format_double(fpca[j].eigenfunctions(s, l)) + '\n';
    return out;
}

std::string stability_json(const StabilityReport& report, double a, double b, double sigma2, const Provenance& prov) {
    return dump(ojson{{"provenance", provenance_object(prov)},
                      {"a", a},
                      {"b", b},
                      {"sigma2", sigma2},
                      {"m_fx", report.m_fx},
                      {"m1_fx", report.m1_fx},
                      {"op_norm_A", report.op_norm_A},
                      {"spec_radius", report.spec_radius},
                      {"theta_max", report.theta_max},
                      {"theta_grid_size", report.theta_grid_size}});
}

std::string figure1_csv(const std::vector<Figure1Row>& rows, const Provenance& prov) {
    std::string out = provenance_header(prov) + "a,b,opnorm,m\n";
    for (const auto& r : rows)
        out += format_double(r.a) + ',' + format_double(r.b) + ',' + format_double(r.opnorm) + ',' + format_double(r.m) + '\n';
    return out;
}

std::string concentration_json(const std::vector<std::pair<double, ConcentrationReport>>& reports,
                               const ConcentrationSpec& spec, const Provenance& prov) {
    ojson cases = ojson::array();
    for (const auto& [a, r] : reports) {
        ojson med = ojson::array();
        for (double m : r.median_error) med.push_back(m);
        cases.push_back(ojson{{"a", a}, {"ns", r.ns}, {"median_error", med}, {"slope", r.slope}, {"slope_se", r.slope_se},
                              {"intercept", r.intercept}});
    }
    return dump(ojson{{"provenance", provenance_object(prov)},
                      {"p", spec.p},
                      {"replicates", spec.replicates},
                      {"cases", cases}});
}

}  // namespace svfar
