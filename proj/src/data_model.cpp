#include "crr/data_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace crr {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_field(const std::string& text, int row, const std::string& column) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw CsvError("row " + std::to_string(row) + ", column '" + column +
                       "': not a number: '" + text + "'");
    }
    if (pos != text.size())
        throw CsvError("row " + std::to_string(row) + ", column '" + column +
                       "': trailing characters in '" + text + "'");
    if (!std::isfinite(value))
        throw CsvError("row " + std::to_string(row) + ", column '" + column + "': non-finite value");
    return value;
}

const std::vector<std::string> kCountsHeader = {"deaths_treated", "py_treated",
                                                "deaths_control", "py_control"};
const std::vector<std::string> kObsHeader = {"eta_obs",     "xi_obs",      "var_eta",
                                             "cov_etaxi1",  "cov_etaxi2",  "var_xi"};

}  // namespace

StudyObservation build_observation(const StudyCounts& counts) {
    if (!(counts.person_years_treated > 0.0) || !(counts.person_years_control > 0.0))
        throw std::invalid_argument("person-years must be positive");
    if (counts.deaths_treated < 0.0 || counts.deaths_control < 0.0)
        throw std::invalid_argument("death counts must be nonnegative");

    double dt = counts.deaths_treated;
    double pt = counts.person_years_treated;
    double dc = counts.deaths_control;
    double pc = counts.person_years_control;
    if (dt == 0.0) { dt = 0.5; pt += 0.5; }
    if (dc == 0.0) { dc = 0.5; pc += 0.5; }

    StudyObservation obs;
    obs.eta_hat = std::log(dt / pt);
    obs.xi_hat = std::log(dc / pc);
    obs.gamma = Mat(2, 2, {1.0 / dt, 0.0, 0.0, 1.0 / dc});
    return obs;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw CsvError("empty file: " + path);
    const auto header = split_csv_line(line);

    const bool counts_schema = (header == kCountsHeader);
    const bool obs_schema = (header == kObsHeader);
    if (!counts_schema && !obs_schema)
        throw CsvError("unrecognized header in " + path +
                       "; expected the counts or observations schema");

    Dataset data;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != static_cast<int>(header.size()))
            throw CsvError("row " + std::to_string(row) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
        if (counts_schema) {
            StudyCounts c;
            c.deaths_treated = parse_field(fields[0], row, header[0]);
            c.person_years_treated = parse_field(fields[1], row, header[1]);
            c.deaths_control = parse_field(fields[2], row, header[2]);
            c.person_years_control = parse_field(fields[3], row, header[3]);
            try {
                data.studies.push_back(build_observation(c));
            } catch (const std::invalid_argument& err) {
                throw CsvError("row " + std::to_string(row) + ": " + err.what());
            }
        } else {
            StudyObservation obs;
            obs.eta_hat = parse_field(fields[0], row, header[0]);
            obs.xi_hat = parse_field(fields[1], row, header[1]);
            const double var_eta = parse_field(fields[2], row, header[2]);
            const double cov1 = parse_field(fields[3], row, header[3]);
            const double cov2 = parse_field(fields[4], row, header[4]);
            const double var_xi = parse_field(fields[5], row, header[5]);
            if (std::fabs(cov1 - cov2) > 1e-12)
                throw CsvError("row " + std::to_string(row) +
                               ": covariance entries differ (gamma must be symmetric)");
            if (var_eta < 0.0 || var_xi < 0.0)
                throw CsvError("row " + std::to_string(row) + ": negative variance entry");
            obs.gamma = Mat(2, 2, {var_eta, cov1, cov2, var_xi});
            data.studies.push_back(obs);
        }
    }
    validate_dataset(data);
    return data;
}

void validate_dataset(const Dataset& data) {
    if (data.size() < 2)
        throw std::invalid_argument("dataset needs at least 2 studies, got " +
                                    std::to_string(data.size()));
    for (int i = 0; i < data.size(); ++i) {
        const Mat& g = data.studies[i].gamma;
        if (std::fabs(g(0, 1) - g(1, 0)) > 1e-12)
            throw std::invalid_argument("study " + std::to_string(i + 1) +
                                        ": gamma is not symmetric");
        if (g(0, 0) < 0.0 || g(1, 1) < 0.0)
            throw std::invalid_argument("study " + std::to_string(i + 1) +
                                        ": gamma has a negative diagonal entry");
    }
}

}  // namespace crr
