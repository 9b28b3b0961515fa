#pragma once

#include <filesystem>
#include <variant>

#include "defreg/volume.hpp"

namespace defreg {

// DVOL1 / DVEC1 files: six text header lines (magic, dtype, dims, spacing,
// origin, crc32 of the payload) followed by the raw little-endian payload,
// x-fastest. Deformation fields use DVEC1 with three interleaved f32
// components per voxel.
using AnyVolume = std::variant<ScalarVolume, LabelVolume>;

void write_volume(const ScalarVolume& v, const std::filesystem::path& path);
void write_volume(const LabelVolume& v, const std::filesystem::path& path);
void write_deformation(const DenseDeformation& d, const std::filesystem::path& path);

AnyVolume read_volume(const std::filesystem::path& path);
ScalarVolume read_scalar_volume(const std::filesystem::path& path);
LabelVolume read_label_volume(const std::filesystem::path& path);
DenseDeformation read_deformation(const std::filesystem::path& path);

}  // namespace defreg
