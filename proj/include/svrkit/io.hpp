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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "svrkit/warp.hpp"

namespace svr::io {

// Volumes: single-file NIfTI-1 (.nii), little-endian, 352-byte prefix (348-byte
// header plus an empty extension flag), no compression. Written as float32
// (datatype 16) or uint8 (datatype 2, used for masks); sform and qform are the
// identity scaled by the voxel size. Reading also accepts int16, int32, uint16,
// float64 and big-endian files, applying scl_slope / scl_inter.
enum class NiftiType : std::int16_t { UInt8 = 2, Float32 = 16 };

struct NiftiImage {
  Volume volume;
  std::string description;  // the 80-byte descrip field
};

void write_nifti(const std::filesystem::path& path, const Volume& vol,
                 const std::string& description = "", NiftiType type = NiftiType::Float32);
NiftiImage read_nifti(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_nifti(const Volume& vol, const std::string& description = "",
                                       NiftiType type = NiftiType::Float32);
NiftiImage decode_nifti(std::span<const std::uint8_t> bytes);

// Slice stacks are NIfTI volumes of dims (W, H, K) whose descrip field carries
// the geometry: "svrkit stack axis=<x|y|z> spacing=<s> slab=<w>".
struct StackFile {
  SliceStack stack;
  double voxel_mm = 1.0;
};

std::string stack_description(const StackGeometry& g);
// Throws when the description does not carry stack geometry.
StackGeometry parse_stack_description(const std::string& description, int K, int H, int W);

void write_stack(const std::filesystem::path& path, const SliceStack& stack, double voxel_mm = 1.0);
StackFile read_stack(const std::filesystem::path& path);
// For stacks written by other tools: geometry supplied by the caller.
StackFile read_stack(const std::filesystem::path& path, Axis axis, double spacing, int slab);

// Motion stacks (.svrm): "SVRM", then little-endian u32 version = 1, u32 K, u32 H,
// u32 W, u32 axis (0 = x, 1 = y, 2 = z), u32 slab, f32 spacing; then K x 3 x H x W
// float32 displacements (slice, then component x/y/z, then row-major pixels).
inline constexpr std::uint32_t kMotionVersion = 1;
inline constexpr std::size_t kMotionHeaderBytes = 32;

std::vector<std::uint8_t> encode_motion(const MotionStack& motion);
MotionStack decode_motion(std::span<const std::uint8_t> bytes);
void write_motion(const std::filesystem::path& path, const MotionStack& motion);
MotionStack read_motion(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Human-readable description of every file format, printed by `svrkit formats`.
std::string format_reference();

}  // namespace svr::io
