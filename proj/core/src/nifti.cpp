#include "lesioneval/nifti.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <zlib.h>

#include "lesioneval/error.hpp"

namespace lesioneval {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

template <typename T>
T load_le(const std::uint8_t* p) {
  std::array<std::uint8_t, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

template <typename T>
void store_le(std::uint8_t* p, T value) {
  std::array<std::uint8_t, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(p, bytes.data(), sizeof(T));
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("{}: cannot open for reading", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in, const fs::path& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw InputError(fmt::format("{}: cannot initialise gzip decoder", path.string()));
  }
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk{};
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  do {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw InputError(fmt::format("{}: corrupt or truncated gzip stream", path.string()));
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw InputError(fmt::format("{}: truncated gzip stream", path.string()));
  }
  return out;
}

std::vector<std::uint8_t> read_maybe_gzip(const fs::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) return gunzip(bytes, path);
  return bytes;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// pixdim is float32 on disk; widen through the shortest decimal form so a
// spacing such as 0.65 comes back as the double 0.65.
double widen_decimal(float f) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), f);
  double d = static_cast<double>(f);
  std::from_chars(buf.data(), res.ptr, d);
  return d;
}

std::string fixed_string(const std::uint8_t* p, std::size_t n) {
  std::size_t len = 0;
  while (len < n && p[len] != 0) ++len;
  return std::string(reinterpret_cast<const char*>(p), len);
}

NiftiHeader parse_header(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  const auto where = path.string();
  if (bytes.size() < kHeaderSize) {
    throw InputError(fmt::format("{}: file shorter than the 348-byte NIfTI-1 header", where));
  }
  const std::uint8_t* h = bytes.data();
  const auto sizeof_hdr = load_le<std::int32_t>(h + 0);
  if (sizeof_hdr != 348) {
    throw InputError(fmt::format("{}: sizeof_hdr = {} (expected 348, little-endian NIfTI-1)",
                                 where, sizeof_hdr));
  }
  if (std::memcmp(h + 344, "n+1\0", 4) != 0) {
    throw InputError(fmt::format("{}: magic is not \"n+1\" (single-file NIfTI-1 required)", where));
  }
  NiftiHeader hdr;
  for (int i = 0; i < 8; ++i) hdr.dim[i] = load_le<std::int16_t>(h + 40 + 2 * i);
  hdr.datatype = load_le<std::int16_t>(h + 70);
  hdr.bitpix = load_le<std::int16_t>(h + 72);
  for (int i = 0; i < 8; ++i) hdr.pixdim[i] = load_le<float>(h + 76 + 4 * i);
  hdr.vox_offset = load_le<float>(h + 108);
  hdr.scl_slope = load_le<float>(h + 112);
  hdr.scl_inter = load_le<float>(h + 116);
  hdr.descrip = fixed_string(h + 148, 80);
  hdr.qform_code = load_le<std::int16_t>(h + 252);
  hdr.sform_code = load_le<std::int16_t>(h + 254);
  for (int i = 0; i < 3; ++i) hdr.quatern[i] = load_le<float>(h + 256 + 4 * i);
  for (int i = 0; i < 3; ++i) hdr.qoffset[i] = load_le<float>(h + 268 + 4 * i);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) hdr.srow[r][c] = load_le<float>(h + 280 + 16 * r + 4 * c);
  }
  hdr.intent_name = fixed_string(h + 328, 16);

  if (hdr.dim[0] != 3) {
    throw InputError(fmt::format("{}: dim[0] = {} (only 3D volumes are supported)", where, hdr.dim[0]));
  }
  for (int i = 1; i <= 3; ++i) {
    if (hdr.dim[i] <= 0) throw InputError(fmt::format("{}: dim[{}] = {} must be positive", where, i, hdr.dim[i]));
    if (!(hdr.pixdim[i] > 0.0f) || !std::isfinite(hdr.pixdim[i])) {
      throw InputError(fmt::format("{}: pixdim[{}] = {} must be positive", where, i, hdr.pixdim[i]));
    }
  }
  switch (hdr.datatype) {
    case static_cast<std::int16_t>(NiftiDatatype::uint8):
    case static_cast<std::int16_t>(NiftiDatatype::int16):
    case static_cast<std::int16_t>(NiftiDatatype::float32):
      break;
    default:
      throw InputError(fmt::format(
          "{}: datatype = {} unsupported (uint8=2, int16=4, float32=16)", where, hdr.datatype));
  }
  if (!(hdr.vox_offset >= static_cast<float>(kHeaderSize))) {
    throw InputError(fmt::format("{}: vox_offset = {} inside the header", where, hdr.vox_offset));
  }
  return hdr;
}

std::size_t bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
    case 2: return 1;
    case 4: return 2;
    default: return 4;
  }
}

VolumeKind kind_from_name(const std::string& name) {
  try {
    return parse_volume_kind(name);
  } catch (const InputError&) {
    return VolumeKind::intensity;
  }
}

Volume make_volume_checked(Grid grid, VolumeKind declared, std::vector<float> data) {
  // A header may claim a kind its payload violates; fall back to intensity.
  try {
    return Volume(grid, declared, data);
  } catch (const InputError&) {
    if (declared == VolumeKind::intensity) throw;
    return Volume(std::move(grid), VolumeKind::intensity, std::move(data));
  }
}

Volume read_nifti(const fs::path& path) {
  const auto bytes = read_maybe_gzip(path);
  const NiftiHeader hdr = parse_header(bytes, path);
  const Grid grid({hdr.dim[1], hdr.dim[2], hdr.dim[3]},
                  {widen_decimal(hdr.pixdim[1]), widen_decimal(hdr.pixdim[2]),
                   widen_decimal(hdr.pixdim[3])});
  const auto offset = static_cast<std::size_t>(hdr.vox_offset);
  const std::size_t bpv = bytes_per_voxel(hdr.datatype);
  const std::size_t need = offset + grid.size() * bpv;
  if (bytes.size() < need) {
    throw InputError(fmt::format("{}: truncated payload ({} bytes, header requires {})",
                                 path.string(), bytes.size(), need));
  }
  std::vector<float> data(grid.size());
  const std::uint8_t* p = bytes.data() + offset;
  for (std::size_t i = 0; i < data.size(); ++i) {
    switch (hdr.datatype) {
      case 2: data[i] = static_cast<float>(p[i]); break;
      case 4: data[i] = static_cast<float>(load_le<std::int16_t>(p + 2 * i)); break;
      default: data[i] = load_le<float>(p + 4 * i); break;
    }
  }
  if (hdr.scl_slope != 0.0f && std::isfinite(hdr.scl_slope) &&
      !(hdr.scl_slope == 1.0f && hdr.scl_inter == 0.0f)) {
    for (auto& v : data) v = v * hdr.scl_slope + hdr.scl_inter;
  }
  return make_volume_checked(grid, kind_from_name(hdr.intent_name), std::move(data));
}

NiftiDatatype default_datatype(const Volume& v) {
  switch (v.kind()) {
    case VolumeKind::binary_mask:
      return NiftiDatatype::uint8;
    case VolumeKind::integer_labels: {
      const auto d = v.data();
      const float mx = d.empty() ? 0.0f : *std::max_element(d.begin(), d.end());
      return mx <= 32767.0f ? NiftiDatatype::int16 : NiftiDatatype::float32;
    }
    default:
      return NiftiDatatype::float32;
  }
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes, bool gzip) {
  const auto where = path.string();
  if (gzip) {
    gzFile f = gzopen(where.c_str(), "wb6");
    if (f == nullptr) throw InputError(fmt::format("{}: cannot open for writing", where));
    std::size_t written = 0;
    while (written < bytes.size()) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - written, 1u << 30));
      if (gzwrite(f, bytes.data() + written, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        throw InputError(fmt::format("{}: write failed", where));
      }
      written += chunk;
    }
    if (gzclose(f) != Z_OK) throw InputError(fmt::format("{}: write failed", where));
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("{}: cannot open for writing", where));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError(fmt::format("{}: write failed", where));
}

void write_nifti(const Volume& v, const fs::path& path, NiftiDatatype dt) {
  const Grid& g = v.grid();
  for (int a = 0; a < 3; ++a) {
    if (g.dims()[a] > std::numeric_limits<std::int16_t>::max()) {
      throw InputError(fmt::format("{}: dim {} = {} exceeds the NIfTI-1 limit", path.string(), a,
                                   g.dims()[a]));
    }
  }
  const std::size_t bpv = bytes_per_voxel(static_cast<std::int16_t>(dt));
  std::vector<std::uint8_t> bytes(kDataOffset + g.size() * bpv, 0);
  std::uint8_t* h = bytes.data();
  store_le<std::int32_t>(h + 0, 348);
  const std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(g.nx()), static_cast<std::int16_t>(g.ny()),
                                        static_cast<std::int16_t>(g.nz()), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) store_le<std::int16_t>(h + 40 + 2 * i, dim[i]);
  store_le<std::int16_t>(h + 70, static_cast<std::int16_t>(dt));
  store_le<std::int16_t>(h + 72, static_cast<std::int16_t>(8 * bpv));
  const std::array<float, 8> pixdim{1.0f, static_cast<float>(g.spacing()[0]), static_cast<float>(g.spacing()[1]),
                                    static_cast<float>(g.spacing()[2]), 0, 0, 0, 0};
  for (int i = 0; i < 8; ++i) store_le<float>(h + 76 + 4 * i, pixdim[i]);
  store_le<float>(h + 108, static_cast<float>(kDataOffset));
  store_le<float>(h + 112, 1.0f);
  store_le<float>(h + 116, 0.0f);
  h[123] = 2;  // xyzt_units: mm
  const char descrip[] = "lesioneval";
  std::memcpy(h + 148, descrip, sizeof(descrip) - 1);
  store_le<std::int16_t>(h + 252, 0);
  store_le<std::int16_t>(h + 254, 1);
  for (int r = 0; r < 3; ++r) store_le<float>(h + 280 + 16 * r + 4 * r, pixdim[r + 1]);
  const auto kind = to_string(v.kind());
  std::memcpy(h + 328, kind.data(), std::min<std::size_t>(kind.size(), 15));
  std::memcpy(h + 344, "n+1\0", 4);

  std::uint8_t* p = bytes.data() + kDataOffset;
  const auto d = v.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const float f = d[i];
    switch (dt) {
      case NiftiDatatype::uint8:
        if (!(f >= 0.0f && f <= 255.0f) || std::floor(f) != f) {
          throw InputError(fmt::format("{}: voxel {} = {} not representable as uint8", path.string(), i, f));
        }
        p[i] = static_cast<std::uint8_t>(f);
        break;
      case NiftiDatatype::int16:
        if (!(f >= -32768.0f && f <= 32767.0f) || std::floor(f) != f) {
          throw InputError(fmt::format("{}: voxel {} = {} not representable as int16", path.string(), i, f));
        }
        store_le<std::int16_t>(p + 2 * i, static_cast<std::int16_t>(f));
        break;
      case NiftiDatatype::float32:
        store_le<float>(p + 4 * i, f);
        break;
    }
  }
  write_file(path, bytes, ends_with(path.string(), ".gz"));
}

struct SidecarPaths {
  fs::path raw;
  fs::path json;
};

SidecarPaths sidecar_paths(const fs::path& path) {
  fs::path stem = path;
  stem.replace_extension();
  return {fs::path(stem).concat(".raw"), fs::path(stem).concat(".json")};
}

bool is_sidecar(const fs::path& path) {
  const auto ext = path.extension().string();
  return ext == ".raw" || ext == ".json";
}

Volume read_sidecar(const fs::path& path) {
  const auto paths = sidecar_paths(path);
  std::ifstream js(paths.json);
  if (!js) throw InputError(fmt::format("{}: cannot open sidecar", paths.json.string()));
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: invalid JSON: {}", paths.json.string(), e.what()));
  }
  std::array<std::int64_t, 3> dims{};
  std::array<double, 3> spacing{};
  VolumeKind kind = VolumeKind::intensity;
  try {
    const auto& jd = meta.at("dims");
    const auto& js2 = meta.at("spacing");
    if (jd.size() != 3) throw InputError(fmt::format("{}: field \"dims\" must have 3 entries", paths.json.string()));
    if (js2.size() != 3) throw InputError(fmt::format("{}: field \"spacing\" must have 3 entries", paths.json.string()));
    for (int a = 0; a < 3; ++a) {
      dims[a] = jd.at(a).get<std::int64_t>();
      spacing[a] = js2.at(a).get<double>();
    }
    if (meta.contains("kind")) kind = parse_volume_kind(meta.at("kind").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: {}", paths.json.string(), e.what()));
  }
  Grid grid = [&] {
    try {
      return Grid(dims, spacing);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: {}", paths.json.string(), e.what()));
    }
  }();
  const auto bytes = read_file_bytes(paths.raw);
  if (bytes.size() != grid.size() * 4) {
    throw InputError(fmt::format("{}: payload has {} bytes, dims require {}", paths.raw.string(),
                                 bytes.size(), grid.size() * 4));
  }
  std::vector<float> data(grid.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = load_le<float>(bytes.data() + 4 * i);
  return Volume(std::move(grid), kind, std::move(data));
}

void write_sidecar(const Volume& v, const fs::path& path) {
  const auto paths = sidecar_paths(path);
  const Grid& g = v.grid();
  nlohmann::ordered_json meta;
  meta["dims"] = {g.nx(), g.ny(), g.nz()};
  meta["spacing"] = {g.spacing()[0], g.spacing()[1], g.spacing()[2]};
  meta["kind"] = std::string(to_string(v.kind()));
  std::ofstream js(paths.json, std::ios::trunc);
  if (!js) throw InputError(fmt::format("{}: cannot open for writing", paths.json.string()));
  js << meta.dump(2) << '\n';
  std::vector<std::uint8_t> bytes(g.size() * 4);
  const auto d = v.data();
  for (std::size_t i = 0; i < d.size(); ++i) store_le<float>(bytes.data() + 4 * i, d[i]);
  write_file(paths.raw, bytes, false);
}

}  // namespace

NiftiHeader read_nifti_header(const fs::path& path) {
  return parse_header(read_maybe_gzip(path), path);
}

Volume read_volume(const fs::path& path) {
  if (is_sidecar(path)) return read_sidecar(path);
  return read_nifti(path);
}

void write_volume(const Volume& v, const fs::path& path, std::optional<NiftiDatatype> datatype) {
  if (v.grid().size() == 0) throw InputError(fmt::format("{}: cannot write a volume with empty dims", path.string()));
  if (is_sidecar(path)) {
    write_sidecar(v, path);
    return;
  }
  write_nifti(v, path, datatype.value_or(default_datatype(v)));
}

}  // namespace lesioneval
