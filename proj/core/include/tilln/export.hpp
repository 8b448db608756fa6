#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tilln/invariant.hpp"
#include "tilln/lln.hpp"
#include "tilln/splitting.hpp"

namespace tilln {

/// Shortest round-trip decimal form; identical output on every run.
std::string format_double(double v);

/// Comma-separated table with a header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& row(std::vector<std::string> cells);
    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void write(std::ostream& out) const;

    static std::string cell(double v) { return format_double(v); }
    static std::string cell(std::int64_t v) { return std::to_string(v); }
    static std::string cell(std::uint64_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(std::string_view v) { return std::string(v); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// (t, state, level, is_regeneration); t is absolute time.
CsvTable trajectory_table(const SplitTrajectory& traj, const FiniteKernelFamily& fam);
/// (k, tau_k, L_k); L_k is empty for the last regeneration.
CsvTable regeneration_table(const RegenerationLog& log);
/// (k, state, mass, depth, residual).
CsvTable invariant_table(const InvariantFamily& family, const FiniteKernelFamily& fam);
/// (n, cesaro, max_abs_gap, regeneration_rate, gap_r0, gap_r1, ...).
CsvTable gap_table(const LLNReport& report);
/// (replication, cycles, length_mean, length_variance, centred_sum_mean, centred_sum_variance).
CsvTable cycle_table(const LLNReport& report);
/// (n, empirical_survival, fitted_bound).
CsvTable tail_table(const TailFit& fit);

}  // namespace tilln
