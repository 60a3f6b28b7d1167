#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include <zlib.h>

#include "lesioneval/error.hpp"
#include "lesioneval/nifti.hpp"
#include "tempdir.hpp"

using namespace lesioneval;
using oracle::TempDir;

namespace {

// Minimal hand-built NIfTI-1 file, independent of the library writer.
struct RawNifti {
  std::array<std::int16_t, 8> dim{3, 2, 2, 2, 1, 1, 1, 1};
  std::array<float, 8> pixdim{1, 1, 1, 1, 0, 0, 0, 0};
  std::int16_t datatype = 2;
  std::int16_t bitpix = 8;
  float vox_offset = 352.0f;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::int32_t sizeof_hdr = 348;
  std::string magic = std::string("n+1\0", 4);
  std::string intent;

  std::vector<char> bytes(const std::vector<char>& payload) const {
    std::vector<char> b(352, 0);
    std::memcpy(b.data() + 0, &sizeof_hdr, 4);
    std::memcpy(b.data() + 40, dim.data(), 16);
    std::memcpy(b.data() + 70, &datatype, 2);
    std::memcpy(b.data() + 72, &bitpix, 2);
    std::memcpy(b.data() + 76, pixdim.data(), 32);
    std::memcpy(b.data() + 108, &vox_offset, 4);
    std::memcpy(b.data() + 112, &scl_slope, 4);
    std::memcpy(b.data() + 116, &scl_inter, 4);
    std::memcpy(b.data() + 328, intent.data(), std::min<std::size_t>(intent.size(), 16));
    std::memcpy(b.data() + 344, magic.data(), 4);
    b.insert(b.end(), payload.begin(), payload.end());
    return b;
  }
};

void dump(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
std::vector<char> payload_of(const std::vector<T>& v) {
  std::vector<char> b(v.size() * sizeof(T));
  std::memcpy(b.data(), v.data(), b.size());
  return b;
}

std::string error_of(const std::filesystem::path& p) {
  try {
    read_volume(p);
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

Volume random_volume(VolumeKind kind, const Grid& g, std::mt19937_64& rng) {
  std::vector<float> d(g.size());
  std::uniform_real_distribution<float> u(-1000.0f, 1000.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::uniform_int_distribution<int> lab(0, 40);
  for (auto& v : d) {
    switch (kind) {
      case VolumeKind::intensity: v = u(rng); break;
      case VolumeKind::probability: v = unit(rng); break;
      case VolumeKind::binary_mask: v = unit(rng) < 0.3f ? 1.0f : 0.0f; break;
      case VolumeKind::integer_labels: v = static_cast<float>(lab(rng)); break;
    }
  }
  return Volume(g, kind, std::move(d));
}

}  // namespace

TEST(NiftiRead, ZeroUint8Payload) {
  TempDir dir;
  dump(dir / "z.nii", RawNifti{}.bytes(std::vector<char>(8, 0)));
  const auto v = read_volume(dir / "z.nii");
  EXPECT_EQ(v.grid().dims(), (std::array<std::int64_t, 3>{2, 2, 2}));
  EXPECT_EQ(v.grid().spacing(), (std::array<double, 3>{1, 1, 1}));
  for (float x : v.data()) EXPECT_EQ(x, 0.0f);
}

TEST(NiftiRead, Int16AndScaling) {
  TempDir dir;
  RawNifti h;
  h.datatype = 4;
  h.bitpix = 16;
  h.scl_slope = 2.0f;
  h.scl_inter = -1.0f;
  const std::vector<std::int16_t> raw = {0, 1, 2, 3, -4, 5, 6, 700};
  dump(dir / "s.nii", h.bytes(payload_of(raw)));
  const auto v = read_volume(dir / "s.nii");
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_EQ(v[i], 2.0f * raw[i] - 1.0f);
}

TEST(NiftiRead, ZeroSlopeMeansIdentity) {
  TempDir dir;
  RawNifti h;
  h.datatype = 16;
  h.bitpix = 32;
  h.scl_inter = 5.0f;  // ignored because slope is 0
  const std::vector<float> raw = {0.5f, 1.5f, 2, 3, 4, 5, 6, 7};
  dump(dir / "f.nii", h.bytes(payload_of(raw)));
  const auto v = read_volume(dir / "f.nii");
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_EQ(v[i], raw[i]);
}

TEST(NiftiRead, GzipDetectedByMagicNotName) {
  TempDir dir;
  const auto bytes = RawNifti{}.bytes({1, 0, 1, 0, 1, 0, 1, 0});
  const auto path = dir / "compressed.nii";  // no .gz suffix on purpose
  gzFile f = gzopen(path.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
  const auto v = read_volume(path);
  EXPECT_EQ(v[0], 1.0f);
  EXPECT_EQ(v[1], 0.0f);
}

TEST(NiftiRead, ErrorsNameTheField) {
  TempDir dir;
  {
    RawNifti h;
    h.dim[0] = 4;
    dump(dir / "a.nii", h.bytes(std::vector<char>(8)));
    EXPECT_NE(error_of(dir / "a.nii").find("dim[0]"), std::string::npos);
  }
  {
    RawNifti h;
    h.datatype = 64;
    h.bitpix = 64;
    dump(dir / "b.nii", h.bytes(std::vector<char>(64)));
    EXPECT_NE(error_of(dir / "b.nii").find("datatype"), std::string::npos);
  }
  {
    RawNifti h;
    h.pixdim[2] = 0.0f;
    dump(dir / "c.nii", h.bytes(std::vector<char>(8)));
    EXPECT_NE(error_of(dir / "c.nii").find("pixdim[2]"), std::string::npos);
  }
  {
    RawNifti h;
    h.pixdim[3] = -1.0f;
    dump(dir / "c2.nii", h.bytes(std::vector<char>(8)));
    EXPECT_NE(error_of(dir / "c2.nii").find("pixdim[3]"), std::string::npos);
  }
  {
    dump(dir / "d.nii", RawNifti{}.bytes(std::vector<char>(5)));
    EXPECT_NE(error_of(dir / "d.nii").find("truncated"), std::string::npos);
  }
  {
    RawNifti h;
    h.magic = std::string("ni1\0", 4);
    dump(dir / "e.nii", h.bytes(std::vector<char>(8)));
    EXPECT_NE(error_of(dir / "e.nii").find("magic"), std::string::npos);
  }
  {
    RawNifti h;
    h.sizeof_hdr = 540;
    dump(dir / "f.nii", h.bytes(std::vector<char>(8)));
    EXPECT_NE(error_of(dir / "f.nii").find("sizeof_hdr"), std::string::npos);
  }
  EXPECT_NE(error_of(dir / "missing.nii").find("missing.nii"), std::string::npos);
}

TEST(NiftiRoundTrip, EveryKindAndContainer) {
  std::mt19937_64 rng(2024);
  TempDir dir;
  const Grid grids[] = {Grid({5, 4, 3}, {0.65, 0.65, 1.1}), Grid({1, 1, 1}, {1, 1, 1}),
                        Grid({7, 2, 9}, {2.5, 0.3, 4.0})};
  int n = 0;
  for (const auto& g : grids) {
    for (auto kind : {VolumeKind::intensity, VolumeKind::probability, VolumeKind::binary_mask,
                      VolumeKind::integer_labels}) {
      for (const char* ext : {".nii", ".nii.gz", ".raw"}) {
        const auto v = random_volume(kind, g, rng);
        const auto path = dir / ("v" + std::to_string(n++) + ext);
        write_volume(v, path);
        const auto back = read_volume(path);
        EXPECT_EQ(back.grid(), v.grid()) << path;
        EXPECT_EQ(back.kind(), v.kind()) << path;
        EXPECT_TRUE(std::equal(back.data().begin(), back.data().end(), v.data().begin())) << path;
      }
    }
  }
}

TEST(NiftiRoundTrip, ExplicitDatatypes) {
  std::mt19937_64 rng(5);
  TempDir dir;
  const Grid g({6, 6, 6}, {1, 1, 1});
  const auto mask = random_volume(VolumeKind::binary_mask, g, rng);
  for (auto dt : {NiftiDatatype::uint8, NiftiDatatype::int16, NiftiDatatype::float32}) {
    const auto path = dir / ("m" + std::to_string(static_cast<int>(dt)) + ".nii");
    write_volume(mask, path, dt);
    EXPECT_EQ(read_nifti_header(path).datatype, static_cast<std::int16_t>(dt));
    EXPECT_EQ(read_volume(path), mask);
  }
  const auto labels = random_volume(VolumeKind::integer_labels, g, rng);
  write_volume(labels, dir / "l.nii");
  EXPECT_EQ(read_nifti_header(dir / "l.nii").datatype, static_cast<std::int16_t>(NiftiDatatype::int16));
  EXPECT_THROW(write_volume(random_volume(VolumeKind::intensity, g, rng), dir / "bad.nii", NiftiDatatype::uint8),
               InputError);
}

TEST(NiftiRoundTrip, AnisotropicSpacingSurvives) {
  TempDir dir;
  const Grid g({3, 3, 3}, {0.65, 0.65, 1.1});
  write_volume(Volume::zeros(g, VolumeKind::binary_mask), dir / "s.nii.gz");
  const auto back = read_volume(dir / "s.nii.gz");
  EXPECT_EQ(back.grid().spacing()[0], 0.65);
  EXPECT_EQ(back.grid().spacing()[2], 1.1);
}

TEST(NiftiHeader, WriterFillsStandardFields) {
  TempDir dir;
  const Grid g({4, 3, 2}, {0.5, 0.75, 2.0});
  write_volume(Volume::zeros(g, VolumeKind::probability), dir / "h.nii");
  const auto h = read_nifti_header(dir / "h.nii");
  EXPECT_EQ(h.dim[0], 3);
  EXPECT_EQ(h.dim[1], 4);
  EXPECT_EQ(h.dim[3], 2);
  EXPECT_EQ(h.pixdim[2], 0.75f);
  EXPECT_EQ(h.vox_offset, 352.0f);
  EXPECT_EQ(h.intent_name, "probability");
  EXPECT_EQ(h.sform_code, 1);
  EXPECT_EQ(h.srow[0][0], 0.5f);
  EXPECT_EQ(h.srow[2][2], 2.0f);
}

TEST(RawSidecar, EitherPathReadsThePair) {
  TempDir dir;
  const Grid g({2, 3, 4}, {1, 2, 3});
  std::vector<float> d(g.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(i) * 0.25f;
  const Volume v(g, VolumeKind::intensity, d);
  write_volume(v, dir / "pair.raw");
  EXPECT_TRUE(std::filesystem::exists(dir / "pair.json"));
  EXPECT_EQ(read_volume(dir / "pair.raw"), v);
  EXPECT_EQ(read_volume(dir / "pair.json"), v);
  // The payload is plain little-endian float32, x-fastest.
  std::ifstream in(dir / "pair.raw", std::ios::binary);
  std::vector<float> raw(g.size());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  EXPECT_EQ(raw, d);
}

TEST(RawSidecar, PayloadSizeChecked) {
  TempDir dir;
  {
    std::ofstream j(dir / "bad.json");
    j << R"({"dims":[2,2,2],"spacing":[1,1,1],"kind":"intensity"})";
  }
  {
    std::ofstream r(dir / "bad.raw", std::ios::binary);
    r << "abc";
  }
  EXPECT_NE(error_of(dir / "bad.raw").find("bad.raw"), std::string::npos);
}
