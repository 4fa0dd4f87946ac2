#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "attrisk/cohort.hpp"
#include "attrisk/detail/text.hpp"
#include "attrisk/errors.hpp"

namespace attrisk {

/// Cohort file layout (comma-separated, LF line endings, header required):
///
///   id,infection_time,exit_time,exit_state,censored[,<covariate>...]
///
/// infection_time blank means never infected; exit_state is `discharge` or
/// `death` and must be blank exactly when censored is 1; covariate cells are
/// required numbers.  Numbers are written as shortest round-trip decimals.
inline constexpr const char* cohort_header_prefix = "id,infection_time,exit_time,exit_state,censored";

inline Cohort ingest_cohort(std::istream& in, const std::string& source = "<stream>") {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(source + ": empty file, expected header '" +
                        std::string(cohort_header_prefix) + "'");
    auto fail = [&source](std::size_t line_no, const std::string& what) -> DataError {
        return DataError(source + ":" + std::to_string(line_no) + ": " + what);
    };

    const auto header = detail::split(detail::trim(line), ',');
    constexpr std::size_t fixed_columns = 5;
    const char* expected[fixed_columns] = {"id", "infection_time", "exit_time", "exit_state",
                                           "censored"};
    if (header.size() < fixed_columns)
        throw fail(1, "header must start with '" + std::string(cohort_header_prefix) + "'");
    for (std::size_t i = 0; i < fixed_columns; ++i)
        if (detail::trim(header[i]) != expected[i])
            throw fail(1, "header column " + std::to_string(i + 1) + " must be '" +
                              expected[i] + "', got '" + std::string(header[i]) + "'");
    std::vector<std::string> covariate_names;
    for (std::size_t i = fixed_columns; i < header.size(); ++i) {
        const auto name = detail::trim(header[i]);
        if (name.empty()) throw fail(1, "empty covariate column name");
        covariate_names.emplace_back(name);
    }

    std::vector<PatientHistory> patients;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto fields = detail::split(trimmed, ',');
        if (fields.size() != fixed_columns + covariate_names.size())
            throw fail(line_no, "expected " + std::to_string(fixed_columns + covariate_names.size()) +
                                    " fields, got " + std::to_string(fields.size()));
        PatientHistory p;
        p.id = std::string(detail::trim(fields[0]));
        if (p.id.empty()) throw fail(line_no, "empty id");
        const auto infection_field = detail::trim(fields[1]);
        if (!infection_field.empty()) {
            const auto t = detail::parse_double(infection_field);
            if (!t) throw fail(line_no, "bad infection_time '" + std::string(infection_field) + "'");
            p.infection_time = *t;
        }
        const auto exit_field = detail::trim(fields[2]);
        const auto exit_time = detail::parse_double(exit_field);
        if (!exit_time) throw fail(line_no, "bad exit_time '" + std::string(exit_field) + "'");
        p.exit_time = *exit_time;
        const auto state_field = detail::trim(fields[3]);
        if (state_field == "discharge")
            p.exit_state = ExitState::discharge;
        else if (state_field == "death")
            p.exit_state = ExitState::death;
        else if (!state_field.empty())
            throw fail(line_no, "bad exit_state '" + std::string(state_field) +
                                    "' (want discharge, death, or blank when censored)");
        const auto censored_field = detail::trim(fields[4]);
        if (censored_field == "0")
            p.censored = false;
        else if (censored_field == "1")
            p.censored = true;
        else
            throw fail(line_no, "bad censored flag '" + std::string(censored_field) + "' (want 0 or 1)");
        for (std::size_t c = 0; c < covariate_names.size(); ++c) {
            const auto cell = detail::trim(fields[fixed_columns + c]);
            const auto value = detail::parse_double(cell);
            if (!value)
                throw fail(line_no, "bad value '" + std::string(cell) + "' for covariate '" +
                                        covariate_names[c] + "'");
            p.covariates[covariate_names[c]] = *value;
        }
        const auto problems = validate(p);
        if (!problems.empty()) throw fail(line_no, "patient '" + p.id + "': " + problems.front());
        patients.push_back(std::move(p));
    }
    try {
        return make_cohort(std::move(patients), std::move(covariate_names));
    } catch (const DataError& e) {
        throw DataError(source + ": " + e.what());
    }
}

inline Cohort ingest_cohort(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
    return ingest_cohort(in, path.string());
}

inline void export_cohort(const Cohort& cohort, std::ostream& out) {
    out << cohort_header_prefix;
    for (const auto& name : cohort.covariate_names) out << ',' << name;
    out << '\n';
    for (const auto& p : cohort.patients) {
        out << p.id << ',';
        if (p.infection_time) out << detail::format_double(*p.infection_time);
        out << ',' << detail::format_double(p.exit_time) << ',';
        if (p.exit_state) out << (*p.exit_state == ExitState::death ? "death" : "discharge");
        out << ',' << (p.censored ? '1' : '0');
        for (const auto& name : cohort.covariate_names)
            out << ',' << detail::format_double(p.covariates.at(name));
        out << '\n';
    }
}

inline void export_cohort(const Cohort& cohort, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    export_cohort(cohort, out);
    out.flush();
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

} // namespace attrisk
