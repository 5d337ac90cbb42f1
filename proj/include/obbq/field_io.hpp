/// @file field_io.hpp
/// @brief Binary field files.
///
/// Layout (all little-endian):
///   6 bytes   magic "OBBQ1\0"
///   f64       half-width R
///   u32       cells per axis n
///   u8        component count (1 or 3)
///   u8        staggering tag
///   f64[...]  payload, component by component, x-fastest
///
/// Staggering tags: 0 cell centers; 1 MAC faces (component a on faces normal
/// to a); 2, 3, 4 every component on the faces normal to x, y, z.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "obbq/grid.hpp"

namespace obbq {

enum class Staggering : std::uint8_t { Cells = 0, Faces = 1, FaceX = 2, FaceY = 3, FaceZ = 4 };

struct FieldRecord {
    Grid grid;
    Staggering staggering = Staggering::Cells;
    std::vector<std::vector<double>> components;
};

/// Layout of component c of a record with the given staggering.
Layout record_layout(const Grid& g, Staggering s, int component);

/// Atomic write (temporary file, then rename). Throws IoError.
void write_record(const std::filesystem::path& path, const FieldRecord& rec);
/// Throws IoError, FormatError (bad magic, header or size) or VersionError.
FieldRecord read_record(const std::filesystem::path& path);

void write_field(const std::filesystem::path& path, const ScalarField& f);
void write_field(const std::filesystem::path& path, const VectorField& f);
ScalarField read_scalar(const std::filesystem::path& path);
VectorField read_vector(const std::filesystem::path& path);

/// Writes bytes atomically to `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace obbq
