/*
 * svrkit: slice-to-volume reconstruction toolkit
 *
 * Copyright 2026 The svrkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "svrkit/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace svr::io {

namespace {

template <std::size_t N>
struct UnsignedOf;
template <> struct UnsignedOf<1> { using type = std::uint8_t; };
template <> struct UnsignedOf<2> { using type = std::uint16_t; };
template <> struct UnsignedOf<4> { using type = std::uint32_t; };
template <> struct UnsignedOf<8> { using type = std::uint64_t; };

template <typename T>
void put(std::span<std::uint8_t> buf, std::size_t off, T value) {
  using U = typename UnsignedOf<sizeof(T)>::type;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[off + i] = std::uint8_t(bits >> (8 * i));
}

template <typename T>
T get(std::span<const std::uint8_t> buf, std::size_t off, bool big_endian = false) {
  using U = typename UnsignedOf<sizeof(T)>::type;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const std::size_t at = big_endian ? off + sizeof(T) - 1 - i : off + i;
    bits |= U(U(buf[at]) << (8 * i));
  }
  return std::bit_cast<T>(bits);
}

void put_text(std::span<std::uint8_t> buf, std::size_t off, std::size_t cap, const std::string& s) {
  std::memcpy(buf.data() + off, s.data(), std::min(cap - 1, s.size()));
}

std::string get_text(std::span<const std::uint8_t> buf, std::size_t off, std::size_t cap) {
  std::string s(reinterpret_cast<const char*>(buf.data() + off), cap);
  return s.substr(0, s.find('\0'));
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// NIfTI-1 field offsets.
constexpr std::size_t kSizeofHdr = 0, kRegular = 38, kDim = 40, kDatatype = 70, kBitpix = 72,
                      kPixdim = 76, kVoxOffset = 108, kSclSlope = 112, kSclInter = 116,
                      kXyztUnits = 123, kDescrip = 148, kQformCode = 252, kSformCode = 254,
                      kSrowX = 280, kMagic = 344, kHeaderBytes = 348, kDataOffset = 352;

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(bool(out), ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  require(bool(out), ErrorCode::Io, "failed writing '" + path.string() + "'");
}

std::vector<std::uint8_t> encode_nifti(const Volume& vol, const std::string& description,
                                       NiftiType type) {
  require(vol.data.size() == voxel_count(vol.dims), ErrorCode::InvalidArgument,
          "encode_nifti: volume payload does not match its dims");
  const std::size_t bytes_per = type == NiftiType::Float32 ? 4 : 1;
  std::vector<std::uint8_t> buf(kDataOffset + bytes_per * std::size_t(vol.data.size()), 0);
  std::span<std::uint8_t> b(buf);
  put<std::int32_t>(b, kSizeofHdr, 348);
  buf[kRegular] = 'r';
  put<std::int16_t>(b, kDim, 3);
  for (int a = 0; a < 3; ++a) put<std::int16_t>(b, kDim + 2 * (a + 1), std::int16_t(vol.dims[a]));
  for (int a = 4; a < 8; ++a) put<std::int16_t>(b, kDim + 2 * a, 1);
  put<std::int16_t>(b, kDatatype, std::int16_t(type));
  put<std::int16_t>(b, kBitpix, std::int16_t(8 * bytes_per));
  const float mm = float(vol.spacing);
  put<float>(b, kPixdim, 1.0f);  // qfac
  for (int a = 1; a <= 3; ++a) put<float>(b, kPixdim + 4 * a, mm);
  for (int a = 4; a < 8; ++a) put<float>(b, kPixdim + 4 * a, 1.0f);
  put<float>(b, kVoxOffset, float(kDataOffset));
  put<float>(b, kSclSlope, 1.0f);
  put<float>(b, kSclInter, 0.0f);
  buf[kXyztUnits] = 2;  // millimetres
  put_text(b, kDescrip, 80, description);
  put<std::int16_t>(b, kQformCode, 1);
  put<std::int16_t>(b, kSformCode, 1);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 4; ++col)
      put<float>(b, kSrowX + 16 * row + 4 * col, row == col ? mm : 0.0f);
  std::memcpy(buf.data() + kMagic, "n+1\0", 4);

  for (Eigen::Index n = 0; n < vol.data.size(); ++n) {
    const std::size_t off = kDataOffset + bytes_per * std::size_t(n);
    if (type == NiftiType::Float32)
      put<float>(b, off, float(vol.data[n]));
    else
      buf[off] = std::uint8_t(std::clamp(std::lround(vol.data[n]), 0L, 255L));
  }
  return buf;
}

NiftiImage decode_nifti(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kHeaderBytes, ErrorCode::Io, "nifti: file shorter than a header");
  bool big = false;
  if (get<std::int32_t>(bytes, kSizeofHdr) != 348) {
    big = true;
    require(get<std::int32_t>(bytes, kSizeofHdr, true) == 348, ErrorCode::Io,
            "nifti: sizeof_hdr is not 348");
  }
  const std::string magic(reinterpret_cast<const char*>(bytes.data() + kMagic), 3);
  require(magic == "n+1", ErrorCode::Io, "nifti: only single-file n+1 images are supported");
  const int ndim = get<std::int16_t>(bytes, kDim, big);
  require(ndim >= 1 && ndim <= 7, ErrorCode::Io, "nifti: bad dim[0]");
  Dims dims = Dims::Ones();
  for (int a = 0; a < std::min(ndim, 3); ++a) dims[a] = get<std::int16_t>(bytes, kDim + 2 * (a + 1), big);
  for (int a = 3; a < ndim; ++a)
    require(get<std::int16_t>(bytes, kDim + 2 * (a + 1), big) == 1, ErrorCode::Io,
            "nifti: only 3D images are supported");
  require((dims >= 1).all(), ErrorCode::Io, "nifti: non-positive dims");

  const int datatype = get<std::int16_t>(bytes, kDatatype, big);
  std::size_t width = 0;
  switch (datatype) {
    case 2: width = 1; break;    // uint8
    case 4: width = 2; break;    // int16
    case 8: width = 4; break;    // int32
    case 16: width = 4; break;   // float32
    case 64: width = 8; break;   // float64
    case 512: width = 2; break;  // uint16
    default: throw Error(ErrorCode::Io, "nifti: unsupported datatype " + std::to_string(datatype));
  }
  const std::size_t offset = std::size_t(get<float>(bytes, kVoxOffset, big));
  const std::size_t count = std::size_t(voxel_count(dims));
  require(offset >= kHeaderBytes && bytes.size() >= offset + width * count, ErrorCode::Io,
          "nifti: payload truncated");

  NiftiImage img;
  const double mm = get<float>(bytes, kPixdim + 4, big);
  img.volume = Volume(dims, mm > 0 && std::isfinite(mm) ? mm : 1.0);
  img.description = get_text(bytes, kDescrip, 80);
  float slope = get<float>(bytes, kSclSlope, big);
  const float inter = get<float>(bytes, kSclInter, big);
  const bool scaled = slope != 0.0f && std::isfinite(slope) && !(slope == 1.0f && inter == 0.0f);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t at = offset + width * n;
    double v = 0.0;
    switch (datatype) {
      case 2: v = bytes[at]; break;
      case 4: v = get<std::int16_t>(bytes, at, big); break;
      case 8: v = get<std::int32_t>(bytes, at, big); break;
      case 16: v = get<float>(bytes, at, big); break;
      case 64: v = get<double>(bytes, at, big); break;
      case 512: v = get<std::uint16_t>(bytes, at, big); break;
    }
    img.volume.data[Eigen::Index(n)] = scaled ? double(slope) * v + double(inter) : v;
  }
  require(img.volume.data.allFinite(), ErrorCode::Io, "nifti: non-finite intensities");
  return img;
}

void write_nifti(const std::filesystem::path& path, const Volume& vol,
                 const std::string& description, NiftiType type) {
  write_file(path, encode_nifti(vol, description, type));
}

NiftiImage read_nifti(const std::filesystem::path& path) { return decode_nifti(read_file(path)); }

std::string stack_description(const StackGeometry& g) {
  return std::string("svrkit stack axis=") + axis_name(g.axis) + " spacing=" + shortest(g.spacing) +
         " slab=" + std::to_string(g.slab);
}

StackGeometry parse_stack_description(const std::string& description, int K, int H, int W) {
  std::istringstream in(description);
  std::string tag, kind;
  in >> tag >> kind;
  require(tag == "svrkit" && kind == "stack", ErrorCode::Io,
          "stack file has no geometry in its description; pass --axis/--spacing/--slab");
  StackGeometry g;
  g.K = K;
  g.H = H;
  g.W = W;
  bool seen[3] = {false, false, false};
  std::string field;
  while (in >> field) {
    const auto eq = field.find('=');
    require(eq != std::string::npos, ErrorCode::Io, "stack description: malformed '" + field + "'");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    try {
      if (key == "axis") g.axis = parse_axis(value), seen[0] = true;
      else if (key == "spacing") g.spacing = std::stod(value), seen[1] = true;
      else if (key == "slab") g.slab = std::stoi(value), seen[2] = true;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Io, "stack description: bad value in '" + field + "'");
    }
  }
  require(seen[0] && seen[1] && seen[2] && g.valid(), ErrorCode::Io,
          "stack description is missing axis, spacing or slab");
  return g;
}

void write_stack(const std::filesystem::path& path, const SliceStack& stack, double voxel_mm) {
  const StackGeometry& g = stack.geometry;
  Volume vol;
  vol.dims = Dims(g.W, g.H, g.K);
  vol.spacing = voxel_mm;
  vol.data = stack.data;
  write_nifti(path, vol, stack_description(g));
}

namespace {

StackFile stack_from(NiftiImage&& img, const StackGeometry& g) {
  StackFile out;
  out.voxel_mm = img.volume.spacing;
  out.stack.geometry = g;
  out.stack.data = std::move(img.volume.data);
  return out;
}

}  // namespace

StackFile read_stack(const std::filesystem::path& path) {
  NiftiImage img = read_nifti(path);
  const Dims d = img.volume.dims;
  const StackGeometry g = parse_stack_description(img.description, d[2], d[1], d[0]);
  return stack_from(std::move(img), g);
}

StackFile read_stack(const std::filesystem::path& path, Axis axis, double spacing, int slab) {
  NiftiImage img = read_nifti(path);
  const Dims d = img.volume.dims;
  StackGeometry g{d[2], d[1], d[0], spacing, axis, slab};
  require(g.valid(), ErrorCode::InvalidArgument, "invalid stack geometry " + g.describe());
  return stack_from(std::move(img), g);
}

std::vector<std::uint8_t> encode_motion(const MotionStack& motion) {
  const StackGeometry& g = motion.geometry;
  require(motion.data.size() == 3 * g.pixel_count(), ErrorCode::InvalidArgument,
          "encode_motion: payload does not match geometry");
  std::vector<std::uint8_t> buf(kMotionHeaderBytes + 4 * std::size_t(motion.data.size()));
  std::span<std::uint8_t> b(buf);
  std::memcpy(buf.data(), "SVRM", 4);
  put<std::uint32_t>(b, 4, kMotionVersion);
  put<std::uint32_t>(b, 8, std::uint32_t(g.K));
  put<std::uint32_t>(b, 12, std::uint32_t(g.H));
  put<std::uint32_t>(b, 16, std::uint32_t(g.W));
  put<std::uint32_t>(b, 20, std::uint32_t(g.axis));
  put<std::uint32_t>(b, 24, std::uint32_t(g.slab));
  put<float>(b, 28, float(g.spacing));
  for (Eigen::Index n = 0; n < motion.data.size(); ++n)
    put<float>(b, kMotionHeaderBytes + 4 * std::size_t(n), float(motion.data[n]));
  return buf;
}

MotionStack decode_motion(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kMotionHeaderBytes && std::memcmp(bytes.data(), "SVRM", 4) == 0,
          ErrorCode::Io, "svrm: bad magic");
  require(get<std::uint32_t>(bytes, 4) == kMotionVersion, ErrorCode::Io,
          "svrm: unsupported version " + std::to_string(get<std::uint32_t>(bytes, 4)));
  StackGeometry g;
  g.K = int(get<std::uint32_t>(bytes, 8));
  g.H = int(get<std::uint32_t>(bytes, 12));
  g.W = int(get<std::uint32_t>(bytes, 16));
  const std::uint32_t axis = get<std::uint32_t>(bytes, 20);
  require(axis <= 2, ErrorCode::Io, "svrm: axis must be 0, 1 or 2");
  g.axis = Axis(axis);
  g.slab = int(get<std::uint32_t>(bytes, 24));
  g.spacing = get<float>(bytes, 28);
  require(g.valid(), ErrorCode::Io, "svrm: invalid geometry " + g.describe());
  const std::size_t count = 3 * std::size_t(g.pixel_count());
  require(bytes.size() == kMotionHeaderBytes + 4 * count, ErrorCode::Io,
          "svrm: payload size does not match header");
  MotionStack m(g);
  for (std::size_t n = 0; n < count; ++n)
    m.data[Eigen::Index(n)] = get<float>(bytes, kMotionHeaderBytes + 4 * n);
  require(m.data.allFinite(), ErrorCode::Io, "svrm: non-finite displacements");
  return m;
}

void write_motion(const std::filesystem::path& path, const MotionStack& motion) {
  write_file(path, encode_motion(motion));
}

MotionStack read_motion(const std::filesystem::path& path) { return decode_motion(read_file(path)); }

std::string format_reference() {
  return R"(svrkit file formats

Volume (.nii)
  Single-file NIfTI-1, little-endian, uncompressed. 348-byte header, 4-byte
  zero extension flag, voxel data at byte 352. Datatype float32 (16); hole
  masks use uint8 (2). dim = (3, Nx, Ny, Nz, 1, 1, 1, 1), x fastest.
  pixdim[1..3] = voxel size in mm; qform_code = sform_code = 1 with the
  identity affine scaled by the voxel size.

Slice stack (.nii)
  A NIfTI-1 volume of dims (W, H, K): K slices of H rows by W columns, in
  slice-major then row-major order. The 80-byte descrip field holds
  "svrkit stack axis=<x|y|z> spacing=<s> slab=<w>": the slicing axis, the
  slice spacing in reconstruction voxels and the through-plane boxcar PSF
  width in voxels. Slice k is centred at spacing*k + (spacing-1)/2 along the
  axis; columns/rows map to (x, y) for axis z, (x, z) for y, (y, z) for x.

Motion stack (.svrm)
  offset  type     field
  0       char[4]  magic "SVRM"
  4       u32      version = 1
  8       u32      K (slices)
  12      u32      H (rows)
  16      u32      W (columns)
  20      u32      axis (0 = x, 1 = y, 2 = z)
  24      u32      slab
  28      f32      spacing (reconstruction voxels)
  32      f32[K*3*H*W] displacements, little-endian; slice-major, then
          component (x, y, z), then row-major pixels. Units: reconstruction
          voxels. Sample position = nominal pixel position + displacement.

Sidecars / reports (.json)
  simulate writes the resolved configuration, seed, gamma and per-slice rigid
  parameters; reconstruct writes objective traces, CG residuals, hole
  statistics and timings; evaluate prints
  {"mse", "epe", "epe_compensated", "ape", "psnr_slices", "psnr_volume"}.
)";
}

}  // namespace svr::io
