#pragma once

// Custom-scenario file: five `key = value` lines, one per transition, where
// the value is `constant RATE` or `weibull SHAPE SCALE`.  Blank lines and
// `#` comments are ignored.
//
//   infection            = constant 0.05
//   discharge_uninfected = weibull 1.4 0.08
//   death_uninfected     = constant 0.01
//   discharge_infected   = constant 0.02
//   death_infected       = constant 0.02

#include <array>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attrisk/detail/text.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/hazards.hpp"

namespace attrisk {

namespace detail {

inline double parse_hazard_number(const std::string& token, const std::string& what) {
    const auto value = parse_double(token);
    if (!value) throw DataError(what + " '" + token + "' is not a number");
    return *value;
}

inline HazardSpec parse_hazard_value(std::string_view text, const std::string& where) {
    std::vector<std::string> tokens;
    for (const auto piece : split(text, ' '))
        if (!trim(piece).empty()) tokens.emplace_back(trim(piece));
    if (tokens.empty()) throw DataError(where + ": missing hazard family");
    if (tokens[0] == "constant") {
        if (tokens.size() != 2)
            throw DataError(where + ": constant hazard takes exactly one rate");
        return HazardSpec::constant(parse_hazard_number(tokens[1], where + ": rate"));
    }
    if (tokens[0] == "weibull") {
        if (tokens.size() != 3)
            throw DataError(where + ": weibull hazard takes shape then scale");
        return HazardSpec::weibull(parse_hazard_number(tokens[1], where + ": shape"),
                                   parse_hazard_number(tokens[2], where + ": scale"));
    }
    throw DataError(where + ": unknown hazard family '" + tokens[0] +
                    "' (expected constant or weibull)");
}

}  // namespace detail

inline HazardSet ingest_hazard_params(std::istream& in, const std::string& source = "<params>") {
    static const std::array<const char*, 5> keys = {"infection", "discharge_uninfected",
                                                    "death_uninfected", "discharge_infected",
                                                    "death_infected"};
    std::array<std::optional<HazardSpec>, 5> specs;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string where = source + ":" + std::to_string(line_number);
        std::string_view text = detail::trim(line);
        if (const auto hash = text.find('#'); hash != std::string_view::npos)
            text = detail::trim(text.substr(0, hash));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw DataError(where + ": expected 'transition = family parameters'");
        const std::string key{detail::trim(text.substr(0, eq))};
        std::size_t slot = keys.size();
        for (std::size_t k = 0; k < keys.size(); ++k)
            if (key == keys[k]) slot = k;
        if (slot == keys.size())
            throw DataError(where + ": unknown transition '" + key + "'");
        if (specs[slot])
            throw DataError(where + ": transition '" + key + "' given twice");
        try {
            specs[slot] = detail::parse_hazard_value(detail::trim(text.substr(eq + 1)), where);
        } catch (const ArgumentError& err) {
            throw DataError(where + ": " + err.what());
        }
    }
    for (std::size_t k = 0; k < keys.size(); ++k)
        if (!specs[k])
            throw DataError(source + ": missing transition '" + std::string(keys[k]) + "'");
    return HazardSet{*specs[0], *specs[1], *specs[2], *specs[3], *specs[4]};
}

inline HazardSet ingest_hazard_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open params file '" + path + "'");
    return ingest_hazard_params(in, path);
}

}  // namespace attrisk
