#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "svfar/eval.hpp"
#include "svfar/funcspace.hpp"
#include "svfar/rfpca.hpp"
#include "svfar/simgen.hpp"
#include "svfar/stability.hpp"
#include "svfar/vfar.hpp"

namespace svfar {

inline constexpr std::string_view kVersion = "0.1.0";

/// Tool version, hash of the effective configuration and seed stamped on every output.
struct Provenance {
    std::string version{kVersion};
    std::string config_hash;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

/// %.17g, which round-trips every double.
std::string format_double(double x);

/// "# key: value" header lines for CSV outputs.
std::string provenance_header(const Provenance& prov);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Long-format panel CSV with columns t,j,s,value. All index columns in CSV and JSON outputs are 1-based.
std::string panel_csv(const CurvePanel& panel, const Provenance& prov);
/// Grid sidecar {"points": [...]}.
std::string grid_json(const Grid& grid, const Provenance& prov);
Grid parse_grid_json(std::string_view text);

/// Parses a panel CSV; lines starting with '#' and the header are skipped.
/// Every (t, j, s) cell must appear exactly once and s must index the grid (1-based).
CurvePanel parse_panel_csv(std::string_view text, const Grid& grid);

/// <stem>.grid.json next to a panel CSV.
std::filesystem::path grid_sidecar(const std::filesystem::path& panel_path);

/// Reads a panel with an explicit grid file, else its sidecar, else a uniform grid.
CurvePanel load_panel(const std::filesystem::path& panel_path, const std::filesystem::path& grid_path = {});

std::string truth_json(const GroundTruth& truth, const SimSpec& spec, const Provenance& prov);

/// Kernel values in long format h,j,k,r,s,value (1-based lag) for each lag matrix.
std::string kernels_csv(const std::vector<KernelMatrix>& A, const Provenance& prov);

std::string fit_json(const VfarFit& fit, const VfarOptions& options, const Provenance& prov);

std::string fpca_json(const std::vector<FpcaResult>& fpca, const Provenance& prov);
/// Scores in long format t,j,l,value.
std::string scores_csv(const std::vector<FpcaResult>& fpca, const Provenance& prov);
/// Eigenfunctions in long format j,l,s,value.
std::string eigenfunctions_csv(const std::vector<FpcaResult>& fpca, const Provenance& prov);

std::string stability_json(const StabilityReport& report, double a, double b, double sigma2, const Provenance& prov);
std::string figure1_csv(const std::vector<Figure1Row>& rows, const Provenance& prov);
std::string concentration_json(const std::vector<std::pair<double, ConcentrationReport>>& reports,
                               const ConcentrationSpec& spec, const Provenance& prov);

}  // namespace svfar
