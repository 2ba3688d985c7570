#include "imprs/history.hpp"

#include "imprs/errors.hpp"
#include "imprs/io.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace imprs {

int YearRecord::inspections() const
{
    return static_cast<int>(std::count_if(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return o.inspected(); }));
}

int YearRecord::repairs() const
{
    return static_cast<int>(std::count(repaired.begin(), repaired.end(), std::uint8_t{1}));
}

bool YearRecord::has_evidence() const { return inspections() > 0 || repairs() > 0; }

const YearRecord& ObservationHistory::at(int year) const
{
    const int idx = year - start_year - 1;
    if (idx < 0 || idx >= static_cast<int>(years.size())) {
        std::ostringstream msg;
        msg << "no record for year " << year;
        throw std::out_of_range(msg.str());
    }
    return years[static_cast<std::size_t>(idx)];
}

int ObservationHistory::last_campaign() const
{
    for (auto it = years.rbegin(); it != years.rend(); ++it)
        if (it->campaign) return it->year;
    return start_year;
}

void ObservationHistory::validate() const
{
    for (std::size_t i = 0; i < years.size(); ++i) {
        const auto& rec = years[i];
        std::ostringstream where;
        where << "observation year " << rec.year;
        if (rec.year != start_year + static_cast<int>(i) + 1) throw ConfigError(where.str() + ": years must be consecutive");
        if (rec.outcomes.size() != static_cast<std::size_t>(n_components) ||
            rec.repaired.size() != static_cast<std::size_t>(n_components))
            throw ConfigError(where.str() + ": wrong number of components");
        for (int k = 0; k < n_components; ++k) {
            const auto& o = rec.outcomes[static_cast<std::size_t>(k)];
            if (o.kind == Outcome::Kind::Measured && !(o.value > 0.0))
                throw ConfigError(where.str() + ": measurements must be > 0");
            if (rec.repaired[static_cast<std::size_t>(k)] && !o.inspected())
                throw ConfigError(where.str() + ": repair of an uninspected component " + std::to_string(k + 1));
            if (o.inspected() && !rec.campaign) throw ConfigError(where.str() + ": inspection outside a campaign");
        }
    }
}

void write_history_csv(std::ostream& out, const ObservationHistory& history)
{
    out << "year,component,outcome,repair\n";
    for (const auto& rec : history.years) {
        if (!rec.campaign) continue;
        if (rec.inspections() == 0) {
            out << rec.year << ",-,campaign,0\n";
            continue;
        }
        for (std::size_t k = 0; k < rec.outcomes.size(); ++k) {
            const auto& o = rec.outcomes[k];
            if (!o.inspected()) continue;
            out << rec.year << ',' << k + 1 << ',';
            if (o.kind == Outcome::Kind::NoDetection)
                out << "no-detection";
            else
                out << format_double(o.value);
            out << ',' << static_cast<int>(rec.repaired[k]) << '\n';
        }
    }
}

ObservationHistory read_history_csv(std::istream& in, int n_components, int last_year, int start_year)
{
    ObservationHistory h;
    h.n_components = n_components;
    h.start_year = start_year;
    for (int y = start_year + 1; y <= last_year; ++y) h.years.emplace_back(y, static_cast<std::size_t>(n_components));

    const auto rows = parse_csv(in);
    if (rows.empty() || rows.front() != std::vector<std::string>{"year", "component", "outcome", "repair"})
        throw ConfigError("observations: expected header year,component,outcome,repair");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "observations line " + std::to_string(r + 1);
        if (row.size() != 4) throw ConfigError(where + ": expected 4 fields");
        const int year = parse_int(row[0], where + " year");
        if (year <= start_year || year > last_year)
            throw ConfigError(where + ": year " + row[0] + " outside " + std::to_string(start_year + 1) + ".." +
                              std::to_string(last_year));
        auto& rec = h.years[static_cast<std::size_t>(year - start_year - 1)];
        rec.campaign = true;
        if (row[1] == "-") {
            if (row[2] != "campaign") throw ConfigError(where + ": component '-' requires outcome 'campaign'");
            continue;
        }
        const int comp = parse_int(row[1], where + " component");
        if (comp < 1 || comp > n_components) throw ConfigError(where + ": component " + row[1] + " out of range");
        auto& o = rec.outcomes[static_cast<std::size_t>(comp - 1)];
        if (o.inspected()) throw ConfigError(where + ": duplicate entry for component " + row[1]);
        if (row[2] == "no-detection") {
            o = {Outcome::Kind::NoDetection, 0.0};
        } else {
            const double z = parse_double(row[2], where + " outcome");
            if (!(z > 0.0)) throw ConfigError(where + ": measurement must be > 0");
            o = {Outcome::Kind::Measured, z};
        }
        const int rep = parse_int(row[3], where + " repair");
        if (rep != 0 && rep != 1) throw ConfigError(where + ": repair must be 0 or 1");
        rec.repaired[static_cast<std::size_t>(comp - 1)] = static_cast<std::uint8_t>(rep);
    }
    h.validate();
    return h;
}

}  // namespace imprs
