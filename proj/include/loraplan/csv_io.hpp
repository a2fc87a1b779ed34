#pragma once

// Plain numeric CSV. Numbers are written in the shortest form that reads
// back to the same double, so every file round-trips exactly.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loraplan/scenario.hpp"
#include "loraplan/simulator.hpp"

namespace loraplan {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    bool operator==(const CsvTable&) const = default;
};

std::string format_number(double v);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
std::string to_csv_string(const CsvTable& table);

/// Throws ParseError with the offending line on malformed input.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text, const std::string& source = "<csv>");

/// Matrix indexed (mcs, group): header "mcs,0,1,...", one row per MCS.
CsvTable matrix_table(const Eigen::MatrixXd& m);
Eigen::MatrixXd table_matrix(const CsvTable& table);

void write_capacity_csv(const std::filesystem::path& path, const Eigen::MatrixXd& nu);
Eigen::MatrixXd read_capacity_csv(const std::filesystem::path& path);

void write_counts_csv(const std::filesystem::path& path, const CountMatrix& counts);
CountMatrix read_counts_csv(const std::filesystem::path& path);

/// Two-column curve, e.g. ("x_m", "plr") or ("plr", "cdf").
CsvTable curve_table(const std::string& x_name, const std::string& y_name,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// mote_id, distance_m, generated, delivered, plr
CsvTable sim_motes_table(const std::vector<MoteStats>& motes);

/// x_bin_center, plr_mean, ci_low, ci_high
CsvTable sim_bins_table(const std::vector<DistanceBin>& bins);

}  // namespace loraplan
