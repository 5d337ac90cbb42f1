/// @file config.hpp
/// @brief Run configuration: one JSON document per run, strict keys.
#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "obbq/heat_profiles.hpp"
#include "obbq/initial_data.hpp"
#include "obbq/solver.hpp"
#include "obbq/sweep.hpp"

namespace obbq {

struct DataConfig {
    std::string family = "zero";  ///< zero | swirl | radial | harmonic | tabulated
    double amplitude = 0.0;
    Vec3 axis{0.0, 0.0, 1.0};  ///< swirl
    int degree = 0;             ///< harmonic l
    int order = 0;              ///< harmonic m
    std::string table;          ///< tabulated CSV path
};

struct RunConfig {
    DataConfig data;
    double half_width = 6.0;
    int cells = 32;
    int cutoff_index = 6;
    QuadratureConfig quadrature;
    SolverConfig solver;
    SweepConfig sweep;
    std::filesystem::path output = "run";
    std::filesystem::path cache;  ///< heat-profile cache, empty disables
};

/// Parses and validates. Unknown keys and wrong types throw ConfigError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

/// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when
/// possible and taken as a string otherwise. Throws ConfigError.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Every key with its type, default and meaning.
nlohmann::json config_schema();

HomogeneousData make_data(const DataConfig& d);

}  // namespace obbq
