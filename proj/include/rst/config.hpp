#pragma once

#include "rst/capital.hpp"
#include "rst/design_point.hpp"
#include "rst/reference_model.hpp"
#include "rst/scenario_sets.hpp"
#include "rst/sector_view.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace rst {

/// Everything a run needs. Relative paths are resolved against the directory
/// of the configuration file.
struct RunConfig {
    std::filesystem::path base_dir = ".";

    struct Reference {
        std::optional<std::filesystem::path> covariance;
        std::optional<std::filesystem::path> history;
        bool ridge = true;
        Family family = Family::Gaussian;
        double nu = 0.0;
    } reference;

    struct PortfolioFiles {
        std::optional<std::filesystem::path> exposures;
        std::optional<std::filesystem::path> sensitivities;
        std::optional<std::filesystem::path> sectors;
        SoftClip lgd_saturation;
        bool sign_constraints = true;
    } portfolio;

    struct Capital {
        double cet1_0 = 0.0;
        std::optional<double> rwa_0; ///< defaults to the baseline IRB RWA
        double depletion = 0.03;
        std::optional<double> r_star;
        RwaMode rwa_mode = RwaMode::IrbFull;
        bool maturity_adjustment = true;
        LossBasis loss_basis = LossBasis::Incremental;
        double q = 0.999;
        std::optional<std::filesystem::path> alpha_file;
        std::vector<double> pnl_noncredit;
    } capital;

    ConstraintSet constraints;
    SolverConfig solver;

    struct Sets {
        TargetSet target = TargetSet::NearOptimal;
        double epsilon = 1.0;
        double eta = 1.0;
        std::size_t pool_size = 2000;
        std::size_t list_size = 8;
        std::size_t drivers = 3;
        std::optional<std::vector<double>> g_grid;
        int g_grid_points = 8;
    } sets;

    struct Contour {
        std::optional<std::array<double, 2>> g_range;
        std::optional<std::array<double, 2>> x_range;
        int resolution = 101;
        std::size_t x_index = 1;     ///< which scenario coordinate is on the x axis
        std::vector<double> fixed;   ///< values of the remaining coordinates (d > 2)
    } contour;

    struct McCheck {
        std::size_t n_sims = 200000;
        std::vector<double> scenario; ///< empty means s = 0
        std::size_t block_size = 10000;
    } mc;

    std::filesystem::path output_dir = ".";
    std::uint64_t seed = 0;
    unsigned threads = 0;

    std::filesystem::path resolve(const std::filesystem::path& p) const;
    TargetSpec target_spec() const;
};

RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Every effective setting, defaults included, in a fixed key order.
nlohmann::ordered_json effective_config(const RunConfig& config);
/// FNV-1a (64 bit) of the compact effective configuration, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Ingested data and the capital map built from it.
struct LoadedProblem {
    std::unique_ptr<ReferenceModel> model;
    std::optional<Portfolio> portfolio;        ///< exposure-level input
    std::optional<SectorPortfolio> sectors;    ///< sector-level input
    CapitalState state;
    LossQuantileSpec spec;
    std::unique_ptr<CreditCapitalModel> capital;
};

/// Runs ingestion stage by stage; failures name the stage and the cause.
LoadedProblem load_problem(const RunConfig& config);

} // namespace rst
