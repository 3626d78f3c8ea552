#pragma once

#include "rst/sector_view.hpp"
#include "rst/transmission.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rst::io {

/// Comma-separated text with a header row. Blank lines and lines starting with
/// '#' are skipped; fields are trimmed.
struct Table {
    std::filesystem::path path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; ///< source line of each row

    /// Index of a header column, or npos when absent.
    std::size_t column(const std::string& name) const;
    std::size_t require_column(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
    [[noreturn]] void fail(std::size_t row, const std::string& message) const;
};

Table read_table(const std::filesystem::path& path);
Table parse_table(const std::string& text, const std::filesystem::path& path_for_messages = "<memory>");

struct FactorMatrix {
    std::vector<std::string> names;
    Matrix values;
};

/// d x d covariance with a header row of factor names, geopolitical factor first.
FactorMatrix read_covariance(const std::filesystem::path& path);
/// T x d history with a header row of factor names.
FactorMatrix read_history(const std::filesystem::path& path);

/// Columns exposure_id, sector_id, ead, pd0, lgd0, rho, maturity (maturity optional, default 1).
std::vector<ExposureRecord> read_exposures(const std::filesystem::path& path);
/// sector_id, delta, eta, then d-1 beta and d-1 gamma columns in factor order.
std::vector<SectorSensitivities> read_sensitivities(const std::filesystem::path& path, std::size_t dimension);
Portfolio read_portfolio(const std::filesystem::path& exposures, const std::filesystem::path& sensitivities,
                         std::size_t dimension);

/// exposure_id, alpha; returned in portfolio order, every exposure required.
Vector read_alpha(const std::filesystem::path& path, const Portfolio& portfolio);

/// sector_id, ead, pd0, lgd0, rho, optional maturity, delta, eta, then d-1 beta
/// and d-1 gamma columns.
SectorPortfolio read_sector_portfolio(const std::filesystem::path& path, std::size_t dimension);

} // namespace rst::io
