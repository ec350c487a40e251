#include "svfar/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "svfar/errors.hpp"
#include "svfar/eval.hpp"
#include "svfar/io.hpp"
#include "svfar/parallel.hpp"
#include "svfar/rfpca.hpp"
#include "svfar/simgen.hpp"
#include "svfar/stability.hpp"
#include "svfar/vfar.hpp"

namespace svfar {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Expands a JSON config object into flags placed before the command-line
// arguments; keys already given on the command line are skipped so flags win.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config requires a file argument");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!path) return args;

    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(read_text(*path));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config '" + *path + "': " + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config '" + *path + "' must be a JSON object");

    auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    std::vector<std::string> extra;
    for (const auto& [key, value] : cfg.items()) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        if (flag_given(args, flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) extra.push_back(flag);
        } else if (value.is_array()) {
            extra.push_back(flag);
            for (const auto& v : value) extra.push_back(scalar(v));
        } else if (!value.is_null()) {
            extra.push_back(flag);
            extra.push_back(scalar(value));
        }
    }
    // Insert after the subcommand name so the options bind to it.
    const auto pos = args.empty() || args.front().rfind("-", 0) == 0 ? args.begin() : args.begin() + 1;
    args.insert(pos, extra.begin(), extra.end());
    return args;
}

Provenance make_provenance(const ojson& config, std::optional<std::uint64_t> seed) {
    Provenance prov;
    prov.config_hash = fnv1a_hex(config.dump());
    if (seed) {
        prov.seed = *seed;
        prov.has_seed = true;
    }
    return prov;
}

struct SimulateArgs {
    std::string model = "sparse";
    std::size_t n = 100, p = 40, T = 50, basis_dim = 5;
    double noise_sd = 0.5;
    std::uint64_t seed = 0;
    std::string out, truth, latent;
};

struct FpcaArgs {
    std::string input, grid, out;
    std::size_t folds = 5, qmax = 8, G = 15, degree = 3;
    std::vector<std::size_t> q;
    std::vector<double> eta{0.0, 1e-7, 1e-6, 1e-5, 1e-4};
    std::uint64_t seed = 0;

    FpcaOptions options() const {
        FpcaOptions o;
        o.G = G;
        o.degree = degree;
        o.folds = folds;
        o.eta_grid = eta;
        if (!q.empty()) {
            o.q_grid = q;
        } else {
            o.q_grid.clear();
            for (std::size_t k = 1; k <= qmax; ++k) o.q_grid.push_back(k);
        }
        return o;
    }
    ojson config() const {
        return {{"folds", folds}, {"qmax", qmax}, {"q", q}, {"G", G}, {"degree", degree}, {"eta", eta}};
    }
};

struct FitArgs : FpcaArgs {
    std::size_t lag = 1, path_len = 50, max_iter = 10000;
    double min_ratio = 1e-3, tol = 1e-8, edge_tol = 0.0;
    std::string criterion = "bic", kernels;
    std::string method = "ls_a";
};

struct EvaluateArgs {
    std::string study, out;
    std::uint64_t seed = 0;
};

struct StabilityArgs {
    double a = 0.0, b = 0.0, sigma2 = 1.0;
    std::size_t grid = 4096;
    std::string out;
};

struct Figure1Args {
    std::vector<double> a_values{0.2, 0.5, 0.8};
    std::vector<double> b_values;
    std::size_t grid = 4096;
    std::string out;
};

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_text(path, text);
    }
}

void add_fpca_options(CLI::App* cmd, FpcaArgs& a) {
    cmd->add_option("--input", a.input, "Panel CSV (t,j,s,value)")->required();
    cmd->add_option("--grid", a.grid, "Grid JSON; defaults to the panel's .grid.json sidecar, else a uniform grid");
    cmd->add_option("--folds", a.folds, "Cross-validation folds")->capture_default_str();
    cmd->add_option("--qmax", a.qmax, "Largest number of components tried by CV")->capture_default_str();
    cmd->add_option("--q", a.q, "Explicit component grid (overrides --qmax)");
    cmd->add_option("--G", a.G, "B-spline basis dimension")->capture_default_str();
    cmd->add_option("--degree", a.degree, "B-spline degree")->capture_default_str();
    cmd->add_option("--eta", a.eta, "Roughness penalty grid")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Seed for the CV fold split")->required();
}

int run_simulate(const SimulateArgs& a, std::ostream&) {
    SimSpec spec;
    spec.model = parse_sim_model(a.model);
    spec.n = a.n;
    spec.p = a.p;
    spec.T = a.T;
    spec.basis_dim = a.basis_dim;
    spec.noise_sd = a.noise_sd;
    spec.seed = a.seed;
    spec.validate();
    const ojson config{{"command", "simulate"}, {"model", std::string(sim_model_name(spec.model))}, {"n", a.n},
                       {"p", a.p},          {"T", a.T},                                         {"basis_dim", a.basis_dim},
                       {"noise_sd", a.noise_sd}};
    const Provenance prov = make_provenance(config, a.seed);
    const auto [truth, sim] = simulate_replicate(spec, Rng(a.seed));
    write_text(a.out, panel_csv(sim.observed, prov));
    write_text(grid_sidecar(a.out), grid_json(sim.observed.grid(), prov));
    if (!a.truth.empty()) write_text(a.truth, truth_json(truth, spec, prov));
    if (!a.latent.empty()) {
        write_text(a.latent, panel_csv(sim.latent, prov));
        write_text(grid_sidecar(a.latent), grid_json(sim.latent.grid(), prov));
    }
    return 0;
}

int run_fpca(const FpcaArgs& a, std::ostream&) {
    const CurvePanel panel = load_panel(a.input, a.grid);
    ojson config = a.config();
    config["command"] = "fpca";
    config["grid_hash"] = panel.grid().hash();
    const Provenance prov = make_provenance(config, a.seed);
    const auto fpca = panel_fpca(panel, a.options(), Rng(a.seed));
    const fs::path dir(a.out);
    write_text(dir / "fpca.json", fpca_json(fpca, prov));
    write_text(dir / "scores.csv", scores_csv(fpca, prov));
    write_text(dir / "eigenfunctions.csv", eigenfunctions_csv(fpca, prov));
    return 0;
}

int run_fit(const FitArgs& a, std::ostream& out) {
    const CurvePanel panel = load_panel(a.input, a.grid);
    VfarOptions opts;
    opts.fpca = a.options();
    opts.L = a.lag;
    opts.path.length = a.path_len;
    opts.path.min_ratio = a.min_ratio;
    opts.criterion = parse_criterion(a.criterion);
    opts.solver.max_iter = static_cast<int>(a.max_iter);
    opts.solver.tolerance = a.tol;
    opts.solver.validate();
    opts.edge_tol = a.edge_tol;
    const Method method = parse_method(a.method);
    ojson config = a.config();
    config["command"] = "fit";
    config["grid_hash"] = panel.grid().hash();
    config["lag"] = a.lag;
    config["path_len"] = a.path_len;
    config["min_ratio"] = a.min_ratio;
    config["criterion"] = a.criterion;
    config["method"] = a.method;
    config["max_iter"] = a.max_iter;
    config["tol"] = a.tol;
    config["edge_tol"] = a.edge_tol;
    const Provenance prov = make_provenance(config, a.seed);
    const VfarFit fit = method_variants(panel, method, opts, Rng(a.seed));
    emit(a.out, fit_json(fit, opts, prov), out);
    if (!a.kernels.empty()) write_text(a.kernels, kernels_csv(fit.A, prov));
    return 0;
}

StudyConfig parse_study(const nlohmann::json& j, std::optional<ConcentrationSpec>& conc, std::vector<double>& conc_a) {
    StudyConfig c;
    if (j.contains("models")) {
        c.models.clear();
        for (const auto& m : j.at("models")) c.models.push_back(parse_sim_model(m.get<std::string>()));
    }
    if (j.contains("sizes")) {
        c.sizes.clear();
        for (const auto& s : j.at("sizes")) c.sizes.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
    }
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.replicates = j.value("replicates", c.replicates);
    c.criterion = parse_criterion(j.value("criterion", std::string("bic")));
    c.oracle = j.value("oracle", c.oracle);
    c.base.T = j.value("T", c.base.T);
    c.base.noise_sd = j.value("noise_sd", c.base.noise_sd);
    c.options.path.length = j.value("path_len", c.options.path.length);
    c.options.path.min_ratio = j.value("min_ratio", c.options.path.min_ratio);
    c.options.fpca.folds = j.value("folds", c.options.fpca.folds);
    if (j.contains("qmax")) {
        c.options.fpca.q_grid.clear();
        for (std::size_t k = 1; k <= j.at("qmax").get<std::size_t>(); ++k) c.options.fpca.q_grid.push_back(k);
    }
    if (j.contains("concentration")) {
        const auto& cj = j.at("concentration");
        ConcentrationSpec s;
        s.p = cj.value("p", s.p);
        s.replicates = cj.value("replicates", s.replicates);
        if (cj.contains("ns")) s.ns = cj.at("ns").get<std::vector<std::size_t>>();
        conc_a = cj.contains("a") ? cj.at("a").get<std::vector<double>>() : std::vector<double>{0.0};
        conc = s;
    }
    return c;
}

std::string replicates_csv(const std::vector<ReplicateResult>& results) {
    std::string out = "model,n,p,method,replicate,kappa,auroc,rel_error,rel_error_bic,rel_error_aic,rel_error_oracle\n";
    for (const auto& r : results)
        out += std::string(sim_model_name(r.model)) + ',' + std::to_string(r.n) + ',' + std::to_string(r.p) + ',' +
               std::string(method_name(r.method)) + ',' + std::to_string(r.replicate + 1) + ',' + format_double(r.kappa) + ',' +
               format_double(r.auroc) + ',' + format_double(r.rel_error) + ',' + format_double(r.rel_error_bic) + ',' +
               format_double(r.rel_error_aic) + ',' + (std::isnan(r.rel_error_oracle) ? "" : format_double(r.rel_error_oracle)) +
               '\n';
    return out;
}

int run_evaluate(const EvaluateArgs& a, std::ostream&) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(a.study));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("study '" + a.study + "': " + e.what());
    }
    std::optional<ConcentrationSpec> conc;
    std::vector<double> conc_a;
    StudyConfig study;
    try {
        study = parse_study(j, conc, conc_a);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("study '" + a.study + "': " + e.what());
    }
    ojson config{{"command", "evaluate"}, {"study", ojson::parse(j.dump())}};
    const Provenance prov = make_provenance(config, a.seed);
    const Rng rng(a.seed);
    const fs::path dir(a.out);

    const bool run_tables = !j.contains("concentration") || j.contains("sizes");
    if (run_tables) {
        const auto results = run_study(study, rng.split(0));
        const auto rows = summarize(results);
        write_text(dir / "table.csv", provenance_header(prov) + table_csv(rows));
        write_text(dir / "table.json", table_json(rows));
        write_text(dir / "roc.csv", provenance_header(prov) + roc_csv(results));
        write_text(dir / "replicates.csv", provenance_header(prov) + replicates_csv(results));
    }
    if (conc) {
        std::vector<std::pair<double, ConcentrationReport>> reports;
        for (std::size_t i = 0; i < conc_a.size(); ++i) {
            ConcentrationSpec s = *conc;
            s.a = conc_a[i];
            reports.emplace_back(s.a, concentration_experiment(s, rng.split(1).split(i)));
        }
        write_text(dir / "concentration.json", concentration_json(reports, *conc, prov));
    }
    return 0;
}

int run_stability(const StabilityArgs& a, std::ostream& out) {
    const ojson config{{"command", "stability"}, {"a", a.a}, {"b", a.b}, {"sigma2", a.sigma2}, {"grid", a.grid}};
    const Provenance prov = make_provenance(config, std::nullopt);
    const SpectralModel model = make_spectral_model(illustrative_transition(a.a, a.b), a.sigma2);
    emit(a.out, stability_json(stability_measure(model, a.grid), a.a, a.b, a.sigma2, prov), out);
    return 0;
}

int run_figure1(Figure1Args a, std::ostream& out) {
    if (a.b_values.empty())
        for (int i = -20; i <= 20; ++i) a.b_values.push_back(0.1 * i);
    const ojson config{{"command", "figure1"}, {"a_values", a.a_values}, {"b_values", a.b_values}, {"grid", a.grid}};
    const Provenance prov = make_provenance(config, std::nullopt);
    emit(a.out, figure1_csv(figure1_curves(a.a_values, a.b_values, a.grid), prov), out);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse vector functional autoregression toolkit", "svfar"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::size_t threads = 0;
    bool fast = false;
    std::string config_path;
    app.add_option("--config", config_path, "JSON file of option values; command-line flags take precedence");
    app.add_option("--threads", threads, "Worker threads (default: available parallelism)");
    app.add_flag("--fast", fast, "Allow nondeterministic reduction order (all reductions are currently ordered)");
    app.add_flag_callback("--version", [] { throw CLI::CallForVersion(std::string(kVersion), 0); }, "Print the version");

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Simulate a noisy functional panel and its ground truth");
    cmd_sim->add_option("--model", sim.model, "sparse or banded")->capture_default_str();
    cmd_sim->add_option("--n", sim.n, "Panel length")->capture_default_str();
    cmd_sim->add_option("--p", sim.p, "Number of functional variables")->capture_default_str();
    cmd_sim->add_option("--T", sim.T, "Grid size")->capture_default_str();
    cmd_sim->add_option("--basis-dim", sim.basis_dim, "Fourier basis dimension")->capture_default_str();
    cmd_sim->add_option("--noise-sd", sim.noise_sd, "Measurement noise standard deviation")->capture_default_str();
    cmd_sim->add_option("--seed", sim.seed, "Random seed")->required();
    cmd_sim->add_option("--out", sim.out, "Output panel CSV (grid sidecar written alongside)")->required();
    cmd_sim->add_option("--truth", sim.truth, "Output ground-truth JSON");
    cmd_sim->add_option("--latent", sim.latent, "Output noise-free panel CSV");

    FpcaArgs fpca;
    auto* cmd_fpca = app.add_subcommand("fpca", "Regularised FPCA with cross-validated q and eta per variable");
    add_fpca_options(cmd_fpca, fpca);
    cmd_fpca->add_option("--out", fpca.out, "Output directory")->required();

    FitArgs fit;
    auto* cmd_fit = app.add_subcommand("fit", "Fit a sparse VFAR(L) model and its Granger network");
    add_fpca_options(cmd_fit, fit);
    cmd_fit->add_option("--lag", fit.lag, "Lag order L")->capture_default_str();
    cmd_fit->add_option("--criterion", fit.criterion, "aic or bic")->capture_default_str();
    cmd_fit->add_option("--method", fit.method, "ls_a, ls_2 or ls_1")->capture_default_str();
    cmd_fit->add_option("--path-len", fit.path_len, "Number of gamma values")->capture_default_str();
    cmd_fit->add_option("--min-ratio", fit.min_ratio, "Smallest gamma as a fraction of gamma_max")->capture_default_str();
    cmd_fit->add_option("--max-iter", fit.max_iter, "Solver iteration cap")->capture_default_str();
    cmd_fit->add_option("--tol", fit.tol, "Solver relative objective tolerance")->capture_default_str();
    cmd_fit->add_option("--edge-tol", fit.edge_tol, "Kernel norm threshold for edges")->capture_default_str();
    cmd_fit->add_option("--out", fit.out, "Output fit JSON (- for stdout)")->required();
    cmd_fit->add_option("--kernels", fit.kernels, "Output kernel CSV (h,j,k,r,s,value)");

    EvaluateArgs ev;
    auto* cmd_ev = app.add_subcommand("evaluate", "Run a simulation study and write summary tables");
    cmd_ev->add_option("--study", ev.study, "Study JSON")->required();
    cmd_ev->add_option("--seed", ev.seed, "Master seed")->required();
    cmd_ev->add_option("--out", ev.out, "Output directory")->required();

    StabilityArgs st;
    auto* cmd_st = app.add_subcommand("stability", "Stability measure of the two-component illustrative model");
    cmd_st->add_option("--a", st.a, "Diagonal coefficient, |a| < 1")->capture_default_str();
    cmd_st->add_option("--b", st.b, "Off-diagonal coefficient")->capture_default_str();
    cmd_st->add_option("--sigma2", st.sigma2, "Innovation variance")->capture_default_str();
    cmd_st->add_option("--grid", st.grid, "Frequency grid size")->capture_default_str();
    cmd_st->add_option("--out", st.out, "Output JSON (default stdout)");

    Figure1Args f1;
    auto* cmd_f1 = app.add_subcommand("figure1", "Operator norm and stability measure over (a, b) as CSV");
    cmd_f1->add_option("--a-values", f1.a_values, "Values of a")->capture_default_str()->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    cmd_f1->add_option("--b-values", f1.b_values, "Values of b (default -2..2 step 0.1)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    cmd_f1->add_option("--grid", f1.grid, "Frequency grid size")->capture_default_str();
    cmd_f1->add_option("--out", f1.out, "Output CSV (default stdout)");

    for (auto* c : {cmd_fpca, cmd_fit}) {
        c->get_option("--q")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        c->get_option("--eta")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    }

    try {
        const std::vector<std::string> args = merge_config(raw_args);
        std::vector<const char*> argv{"svfar"};
        for (const auto& a : args) argv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::CallForVersion& v) {
            out << v.what() << "\n";
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << "\n";
            const auto sub = app.get_subcommands();
            err << (sub.empty() ? app.help() : sub.front()->help());
            return 1;
        }
        if (threads > 0) set_thread_count(threads);

        if (cmd_sim->parsed()) return run_simulate(sim, out);
        if (cmd_fpca->parsed()) return run_fpca(fpca, out);
        if (cmd_fit->parsed()) return run_fit(fit, out);
        if (cmd_ev->parsed()) return run_evaluate(ev, out);
        if (cmd_st->parsed()) return run_stability(st, out);
        if (cmd_f1->parsed()) return run_figure1(f1, out);
        throw UsageError("no subcommand given");
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace svfar
