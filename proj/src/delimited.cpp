#include "rst/delimited.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rst::io {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

void require_width(const Table& t, std::size_t width) {
    if (t.header.size() != width) {
        throw InvalidInput(t.path.string() + ": expected " + std::to_string(width) + " columns, found " +
                           std::to_string(t.header.size()));
    }
}

} // namespace

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::string::npos;
}

std::size_t Table::require_column(const std::string& name) const {
    const auto c = column(name);
    if (c == std::string::npos) throw InvalidInput(path.string() + ": missing column '" + name + "'");
    return c;
}

void Table::fail(std::size_t row, const std::string& message) const {
    throw InvalidInput(path.string() + ":" + std::to_string(line_numbers.at(row)) + ": " + message);
}

double Table::number(std::size_t row, std::size_t col) const {
    const std::string& field = rows.at(row).at(col);
    double value = 0.0;
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty())
        fail(row, "column '" + header.at(col) + "' is not a number: '" + field + "'");
    return value;
}

Table parse_table(const std::string& text, const std::filesystem::path& path) {
    Table t;
    t.path = path;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trim(line);
        if (content.empty() || content.front() == '#') continue;
        auto fields = split(content);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    if (t.header.empty()) throw InvalidInput(path.string() + ": file is empty");
    return t;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_table(buffer.str(), path);
}

FactorMatrix read_history(const std::filesystem::path& path) {
    const Table t = read_table(path);
    FactorMatrix out;
    out.names = t.header;
    const auto d = static_cast<Eigen::Index>(t.header.size());
    out.values.resize(static_cast<Eigen::Index>(t.rows.size()), d);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (Eigen::Index c = 0; c < d; ++c) out.values(static_cast<Eigen::Index>(r), c) = t.number(r, static_cast<std::size_t>(c));
    }
    return out;
}

FactorMatrix read_covariance(const std::filesystem::path& path) {
    FactorMatrix out = read_history(path);
    if (out.values.rows() != out.values.cols()) {
        throw InvalidInput(path.string() + ": covariance needs as many rows as factor names (" +
                           std::to_string(out.values.cols()) + "), found " + std::to_string(out.values.rows()));
    }
    return out;
}

std::vector<ExposureRecord> read_exposures(const std::filesystem::path& path) {
    const Table t = read_table(path);
    const auto id = t.require_column("exposure_id");
    const auto sector = t.require_column("sector_id");
    const auto ead = t.require_column("ead");
    const auto pd0 = t.require_column("pd0");
    const auto lgd0 = t.require_column("lgd0");
    const auto rho = t.require_column("rho");
    const auto maturity = t.column("maturity");
    std::vector<ExposureRecord> out;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ExposureRecord e;
        e.exposure_id = t.rows[r][id];
        e.sector_id = t.rows[r][sector];
        if (!seen.insert(e.exposure_id).second) t.fail(r, "duplicate exposure_id '" + e.exposure_id + "'");
        e.ead = t.number(r, ead);
        e.pd0 = t.number(r, pd0);
        e.lgd0 = t.number(r, lgd0);
        e.rho = t.number(r, rho);
        if (maturity != std::string::npos) e.maturity = t.number(r, maturity);
        try {
            validate_exposure(e);
        } catch (const InvalidInput& err) {
            t.fail(r, err.what());
        }
        out.push_back(std::move(e));
    }
    if (out.empty()) throw InvalidInput(path.string() + ": no exposures");
    return out;
}

namespace {

SectorSensitivities read_loadings(const Table& t, std::size_t r, std::size_t delta_col, std::size_t eta_col,
                                  std::size_t first_loading, std::size_t dimension) {
    const auto n = static_cast<Eigen::Index>(dimension) - 1;
    SectorSensitivities sens;
    sens.delta = t.number(r, delta_col);
    sens.eta = t.number(r, eta_col);
    sens.beta.resize(n);
    sens.gamma.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        sens.beta[j] = t.number(r, first_loading + static_cast<std::size_t>(j));
        sens.gamma[j] = t.number(r, first_loading + static_cast<std::size_t>(n + j));
    }
    return sens;
}

} // namespace

std::vector<SectorSensitivities> read_sensitivities(const std::filesystem::path& path, std::size_t dimension) {
    const Table t = read_table(path);
    require_width(t, 3 + 2 * (dimension - 1));
    const auto id = t.require_column("sector_id");
    const auto delta = t.require_column("delta");
    const auto eta = t.require_column("eta");
    if (id != 0 || delta != 1 || eta != 2) throw InvalidInput(path.string() + ": columns must start sector_id, delta, eta");
    std::vector<SectorSensitivities> out;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SectorSensitivities sens = read_loadings(t, r, delta, eta, 3, dimension);
        sens.sector_id = t.rows[r][id];
        if (!seen.insert(sens.sector_id).second) t.fail(r, "duplicate sector_id '" + sens.sector_id + "'");
        out.push_back(std::move(sens));
    }
    return out;
}

Portfolio read_portfolio(const std::filesystem::path& exposures, const std::filesystem::path& sensitivities,
                         std::size_t dimension) {
    Portfolio p;
    p.exposures = read_exposures(exposures);
    for (auto& sens : read_sensitivities(sensitivities, dimension)) {
        const std::string id = sens.sector_id;
        p.sectors.emplace(id, std::move(sens));
    }
    for (const auto& e : p.exposures) {
        if (!p.sectors.count(e.sector_id)) {
            throw InvalidInput(sensitivities.string() + ": no loadings for sector '" + e.sector_id + "' used by " +
                               exposures.string());
        }
    }
    p.validate(dimension);
    return p;
}

Vector read_alpha(const std::filesystem::path& path, const Portfolio& portfolio) {
    const Table t = read_table(path);
    const auto id = t.require_column("exposure_id");
    const auto alpha = t.require_column("alpha");
    std::map<std::string, double> values;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (!values.emplace(t.rows[r][id], t.number(r, alpha)).second)
            t.fail(r, "duplicate exposure_id '" + t.rows[r][id] + "'");
    }
    Vector out(static_cast<Eigen::Index>(portfolio.exposures.size()));
    for (std::size_t i = 0; i < portfolio.exposures.size(); ++i) {
        const auto it = values.find(portfolio.exposures[i].exposure_id);
        if (it == values.end())
            throw InvalidInput(path.string() + ": no alpha for exposure '" + portfolio.exposures[i].exposure_id + "'");
        out[static_cast<Eigen::Index>(i)] = it->second;
    }
    return out;
}

SectorPortfolio read_sector_portfolio(const std::filesystem::path& path, std::size_t dimension) {
    const Table t = read_table(path);
    const auto id = t.require_column("sector_id");
    const auto ead = t.require_column("ead");
    const auto pd0 = t.require_column("pd0");
    const auto lgd0 = t.require_column("lgd0");
    const auto rho = t.require_column("rho");
    const auto maturity = t.column("maturity");
    const auto delta = t.require_column("delta");
    const auto eta = t.require_column("eta");
    if (t.header.size() != eta + 1 + 2 * (dimension - 1)) {
        throw InvalidInput(path.string() + ": expected " + std::to_string(2 * (dimension - 1)) +
                           " loading columns after 'eta'");
    }
    SectorPortfolio out;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SectorRecord k;
        k.sector_id = t.rows[r][id];
        if (!seen.insert(k.sector_id).second) t.fail(r, "duplicate sector_id '" + k.sector_id + "'");
        k.ead = t.number(r, ead);
        k.pd0 = t.number(r, pd0);
        k.lgd0 = t.number(r, lgd0);
        k.rho = t.number(r, rho);
        if (maturity != std::string::npos) k.maturity = t.number(r, maturity);
        k.loadings = read_loadings(t, r, delta, eta, eta + 1, dimension);
        k.loadings.sector_id = k.sector_id;
        out.sectors.push_back(std::move(k));
    }
    if (out.sectors.empty()) throw InvalidInput(path.string() + ": no sectors");
    out.validate(dimension);
    return out;
}

} // namespace rst::io
