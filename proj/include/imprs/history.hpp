#pragma once

#include "imprs/inspection.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace imprs {

/// What happened in one year: campaign flag, per-component outcome, repairs.
struct YearRecord {
    int year = 0;
    bool campaign = false;
    std::vector<Outcome> outcomes;
    std::vector<std::uint8_t> repaired;

    YearRecord() = default;
    YearRecord(int year_, std::size_t n) : year(year_), outcomes(n), repaired(n, 0) {}
    int inspections() const;
    int repairs() const;
    bool has_evidence() const;
    bool operator==(const YearRecord&) const = default;
};

/// Consecutive yearly records for years start_year+1, start_year+2, ...
struct ObservationHistory {
    int n_components = 0;
    int start_year = 0;
    std::vector<YearRecord> years;

    int last_year() const { return start_year + static_cast<int>(years.size()); }
    const YearRecord& at(int year) const;
    /// Most recent campaign year, or start_year if none.
    int last_campaign() const;
    /// Throws ConfigError if records are malformed.
    void validate() const;
    bool operator==(const ObservationHistory&) const = default;
};

/// CSV with header year,component,outcome,repair. Components are 1-based; outcome
/// is "no-detection" or a measured depth in mm. A campaign without inspections is
/// written as component "-" with outcome "campaign".
void write_history_csv(std::ostream& out, const ObservationHistory& history);

/// Reads the CSV format above into records for years start_year+1..last_year.
ObservationHistory read_history_csv(std::istream& in, int n_components, int last_year, int start_year = 0);

}  // namespace imprs
