#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "svfar/cli.hpp"
#include "svfar/errors.hpp"
#include "svfar/eval.hpp"
#include "svfar/io.hpp"
#include "svfar/simgen.hpp"
#include "svfar/stability.hpp"
#include "svfar/vfar.hpp"

namespace py = pybind11;
using namespace svfar;

namespace {

std::vector<Eigen::MatrixXd> variables(const CurvePanel& panel) {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t j = 0; j < panel.p(); ++j) out.push_back(panel.variable(j));
    return out;
}

py::dict simulate(const std::string& model, std::size_t n, std::size_t p, std::size_t T, std::size_t basis_dim,
                  double noise_sd, std::uint64_t seed) {
    SimSpec spec;
    spec.model = parse_sim_model(model);
    spec.n = n;
    spec.p = p;
    spec.T = T;
    spec.basis_dim = basis_dim;
    spec.noise_sd = noise_sd;
    spec.seed = seed;
    spec.validate();
    const auto [truth, sim] = simulate_replicate(spec, Rng(seed));
    py::dict d;
    d["grid"] = sim.observed.grid().points();
    d["observed"] = variables(sim.observed);
    d["latent"] = variables(sim.latent);
    d["support"] = Eigen::MatrixXi(truth.support.cast<int>());
    d["B"] = truth.B;
    d["kappa"] = truth.kappa;
    return d;
}

py::dict fit(const std::vector<Eigen::MatrixXd>& vars, const std::optional<std::vector<double>>& grid, std::uint64_t seed,
             std::size_t lag, const std::string& criterion, const std::string& method, std::size_t path_len) {
    if (vars.empty()) throw UsageError("fit: no variables");
    const Grid g = grid ? Grid(*grid) : Grid::uniform(static_cast<std::size_t>(vars.front().cols()));
    const CurvePanel panel(g, vars);
    VfarOptions opts;
    opts.L = lag;
    opts.criterion = parse_criterion(criterion);
    opts.path.length = path_len;
    const VfarFit f = method_variants(panel, parse_method(method), opts, Rng(seed));
    py::list edges;
    for (const Edge& e : f.edges) edges.append(py::make_tuple(e.k, e.j, e.h, e.norm));
    std::vector<double> gamma, df;
    std::vector<std::size_t> q;
    for (std::size_t j = 0; j < f.p; ++j) {
        gamma.push_back(f.responses[j].gamma);
        df.push_back(f.responses[j].ic.df);
        q.push_back(f.fpca[j].q);
    }
    std::vector<Eigen::MatrixXd> norms;
    for (const KernelMatrix& A : f.A) norms.push_back(block_hs_norms(A));
    py::dict d;
    d["edges"] = edges;
    d["gamma"] = gamma;
    d["df"] = df;
    d["q"] = q;
    d["block_norms"] = norms;
    d["rank_deficient"] = f.rank_deficient;
    return d;
}

py::dict stability(double a, double b, double sigma2, std::size_t grid) {
    const StabilityReport r = stability_measure(make_spectral_model(illustrative_transition(a, b), sigma2), grid);
    py::dict d;
    d["m_fx"] = r.m_fx;
    d["m1_fx"] = r.m1_fx;
    d["op_norm_A"] = r.op_norm_A;
    d["spec_radius"] = r.spec_radius;
    d["theta_max"] = r.theta_max;
    d["theta_grid_size"] = r.theta_grid_size;
    return d;
}

Eigen::MatrixXd figure1(const std::vector<double>& a_values, const std::vector<double>& b_values, std::size_t grid) {
    const auto rows = figure1_curves(a_values, b_values, grid);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), 4);
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) << rows[i].a, rows[i].b, rows[i].opnorm, rows[i].m;
    return out;
}

py::tuple cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sparse vector functional autoregression";
    m.attr("__version__") = std::string(kVersion);

    static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
    static py::exception<UsageError> usage(m, "UsageError", base.ptr());
    static py::exception<DimensionError> dimension(m, "DimensionError", base.ptr());
    static py::exception<DataError> data(m, "DataError", base.ptr());
    static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
    static py::exception<NonStationaryError> nonstationary(m, "NonStationaryError", numerical.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const NonStationaryError& e) {
            py::set_error(nonstationary, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical, e.what());
        } catch (const UsageError& e) {
            py::set_error(usage, e.what());
        } catch (const DimensionError& e) {
            py::set_error(dimension, e.what());
        } catch (const DataError& e) {
            py::set_error(data, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    m.def("simulate", &simulate, py::arg("model") = "sparse", py::arg("n") = 100, py::arg("p") = 40, py::arg("T") = 50,
          py::arg("basis_dim") = 5, py::arg("noise_sd") = 0.5, py::arg("seed"),
          "Simulated panel: grid, observed and latent n x T arrays per variable, true support, B and kappa.");
    m.def("fit", &fit, py::arg("variables"), py::arg("grid") = py::none(), py::arg("seed"), py::arg("lag") = 1,
          py::arg("criterion") = "bic", py::arg("method") = "ls_a", py::arg("path_len") = 50,
          "FPCA and sparse VFAR fit of a list of n x T arrays; edges are 0-based (source, target, lag, norm).");
    m.def("stability", &stability, py::arg("a"), py::arg("b"), py::arg("sigma2") = 1.0, py::arg("grid") = 4096,
          "Stability report of the two-variable illustrative model.");
    m.def("figure1", &figure1, py::arg("a_values"), py::arg("b_values"), py::arg("grid") = 4096,
          "Rows (a, b, operator norm, M) over an (a, b) grid.");
    m.def("spectral_radius", &spectral_radius, py::arg("matrix"));
    m.def("stationary_covariance", &stationary_covariance, py::arg("C"), py::arg("sigma2"));
    m.def("run_cli", &cli, py::arg("args"), "Runs the command line tool in-process; returns (exit code, stdout, stderr).");
}
