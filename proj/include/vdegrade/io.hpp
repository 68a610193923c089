#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vdegrade/frame.hpp"

namespace vdegrade {

/// Reads an 8-bit PNG as RGB in [0, 1] (value / 255). Gray is replicated to
/// three channels, alpha is dropped, palettes are expanded. 16-bit input is
/// rejected with IoError.
Frame read_png(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG; samples are clamped and rounded half to even.
void write_png(const std::filesystem::path& path, const Frame& frame);

/// Lexicographically sorted *.png files directly inside `dir`.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

Clip read_frame_dir(const std::filesystem::path& dir);

/// Writes frame i to dir / names[i] (default frame_%06d.png), creating dir.
void write_frame_dir(const std::filesystem::path& dir, const Clip& clip, const std::vector<std::string>& names = {});

/// YUV4MPEG2 with 8-bit 4:2:0 (C420, C420jpeg, C420paldv, C420mpeg2) or 4:4:4
/// chroma. Samples are interpreted as full-range BT.601 YCbCr; 4:2:0 chroma
/// is upsampled by sample replication.
Clip read_y4m(const std::filesystem::path& path);

/// Writes 4:2:0 (2x2 chroma averages, odd edges replicated) full-range
/// BT.601. Frame rate from the clip hint, else 25.
void write_y4m(const std::filesystem::path& path, const Clip& clip);

enum class ClipSourceKind { kFrameDirectory, kY4m };

struct ClipSource {
  std::string name;  // directory name or file stem
  std::filesystem::path path;
  ClipSourceKind kind = ClipSourceKind::kFrameDirectory;
};

/// Clip sources in a dataset root: every subdirectory (a PNG frame sequence)
/// and every *.y4m file, sorted by name.
std::vector<ClipSource> list_clip_sources(const std::filesystem::path& root);

Clip load_clip(const ClipSource& source);
/// Stores a degraded clip under `output_root` with the same relative layout
/// as its source (frame file names are preserved).
void store_clip(const ClipSource& source, const std::filesystem::path& output_root, const Clip& clip);

}  // namespace vdegrade
