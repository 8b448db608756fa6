#include "tilln/export.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tilln {

std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) throw std::runtime_error("cannot format number");
    return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw std::invalid_argument("table needs at least one column");
}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) {
        throw std::invalid_argument("row has " + std::to_string(cells.size()) + " cells, header has " +
                                    std::to_string(header_.size()));
    }
    rows_.push_back(std::move(cells));
    return *this;
}

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        const auto& c = cells[i];
        if (c.find_first_of(",\"\n") == std::string::npos) {
            out << c;
            continue;
        }
        out << '"';
        for (char ch : c) {
            if (ch == '"') out << '"';
            out << ch;
        }
        out << '"';
    }
    out << '\n';
}

}  // namespace

void CsvTable::write(std::ostream& out) const {
    write_line(out, header_);
    for (const auto& r : rows_) write_line(out, r);
}

std::string CsvTable::str() const {
    std::ostringstream out;
    write(out);
    return out.str();
}

CsvTable trajectory_table(const SplitTrajectory& traj, const FiniteKernelFamily& fam) {
    CsvTable table({"t", "state", "level", "is_regeneration"});
    for (std::size_t t = 0; t < traj.size(); ++t) {
        const bool bell = traj.levels[t] != 0;
        table.row({CsvTable::cell(traj.start_time + static_cast<std::int64_t>(t)), fam.label(traj.states[t]),
                   CsvTable::cell(bell ? 1 : 0), CsvTable::cell(bell)});
    }
    return table;
}

CsvTable regeneration_table(const RegenerationLog& log) {
    CsvTable table({"k", "tau_k", "L_k"});
    const auto& tau = log.tau();
    for (std::size_t k = 0; k < tau.size(); ++k) {
        table.row({CsvTable::cell(k), CsvTable::cell(tau[k]),
                   k < log.lengths().size() ? CsvTable::cell(log.lengths()[k]) : std::string()});
    }
    return table;
}

CsvTable invariant_table(const InvariantFamily& family, const FiniteKernelFamily& fam) {
    CsvTable table({"k", "state", "mass", "depth", "residual"});
    for (TimeIndex k = family.first(); !family.empty() && k <= family.last(); ++k) {
        const auto col = family.column(k);
        for (std::size_t x = 0; x < fam.state_count(); ++x) {
            table.row({CsvTable::cell(k), fam.label(x), CsvTable::cell(col[static_cast<Eigen::Index>(x)]),
                       CsvTable::cell(family.depth_at(k)), CsvTable::cell(family.residual_at(k))});
        }
    }
    return table;
}

CsvTable gap_table(const LLNReport& report) {
    std::vector<std::string> header{"n", "cesaro", "max_abs_gap", "regeneration_rate"};
    for (std::size_t r = 0; r < report.gaps.size(); ++r) header.push_back("gap_r" + std::to_string(r));
    CsvTable table(std::move(header));
    for (std::size_t i = 0; i < report.n_grid.size(); ++i) {
        std::vector<std::string> cells{CsvTable::cell(report.n_grid[i]), CsvTable::cell(report.cesaro[i]),
                                       CsvTable::cell(report.max_abs_gap[i]),
                                       CsvTable::cell(report.regeneration_rate[i])};
        for (const auto& g : report.gaps) cells.push_back(CsvTable::cell(g[i]));
        table.row(std::move(cells));
    }
    return table;
}

CsvTable cycle_table(const LLNReport& report) {
    CsvTable table({"replication", "cycles", "length_mean", "length_variance", "centred_sum_mean",
                    "centred_sum_variance"});
    for (std::size_t r = 0; r < report.per_replication.size(); ++r) {
        const auto& c = report.per_replication[r];
        table.row({CsvTable::cell(r), CsvTable::cell(c.cycles), CsvTable::cell(c.length_mean),
                   CsvTable::cell(c.length_variance), CsvTable::cell(c.centred_sum_mean),
                   CsvTable::cell(c.centred_sum_variance)});
    }
    return table;
}

CsvTable tail_table(const TailFit& fit) {
    CsvTable table({"n", "empirical_survival", "fitted_bound"});
    for (std::size_t n = 0; n < fit.empirical_survival.size(); ++n) {
        table.row({CsvTable::cell(n), CsvTable::cell(fit.empirical_survival[n]),
                   CsvTable::cell(fit.K * std::pow(fit.zeta, static_cast<double>(n)))});
    }
    return table;
}

}  // namespace tilln
