#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lesioneval/volume.hpp"

namespace lesioneval {

/// Subset of NIfTI-1 datatypes supported on disk.
enum class NiftiDatatype : std::int16_t { uint8 = 2, int16 = 4, float32 = 16 };

/// Fields of the 348-byte NIfTI-1 header that the reader inspects.
/// Orientation (qform/sform) is parsed and kept for reference only; metrics
/// work purely on grid congruence.
struct NiftiHeader {
  std::array<std::int16_t, 8> dim{};
  std::array<float, 8> pixdim{};
  std::int16_t datatype = 0;
  std::int16_t bitpix = 0;
  float vox_offset = 352.0f;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  std::array<float, 3> quatern{};
  std::array<float, 3> qoffset{};
  std::array<std::array<float, 4>, 3> srow{};
  std::string intent_name;
  std::string descrip;
};

/// Parses and validates the header only. Gzip input is detected by magic bytes.
NiftiHeader read_nifti_header(const std::filesystem::path& path);

/// Reads a NIfTI-1 file (.nii or gzip-compressed .nii.gz) or the raw+JSON
/// sidecar pair (`name.raw` + `name.json`, either path accepted).
///
/// The kind is taken from the header intent_name (or the sidecar "kind")
/// when it names a known kind, else intensity.
Volume read_volume(const std::filesystem::path& path);

/// Writes NIfTI-1 (gzip when the path ends in .gz) or, for a `.raw`/`.json`
/// path, the float32 sidecar pair. Without an explicit datatype, binary masks
/// are stored as uint8, labels as int16 when they fit, everything else as
/// float32.
void write_volume(const Volume& v, const std::filesystem::path& path,
                  std::optional<NiftiDatatype> datatype = std::nullopt);

}  // namespace lesioneval
