#pragma once

// Portable graymap (PGM) reading and writing, and directory-based sequence loading.
// Binary P5 is written; P5 and ASCII P2 are read. 8-bit and 16-bit (big-endian) samples.

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "pcseg/core.hpp"
#include "pcseg/error.hpp"

namespace pcseg {

namespace fs = std::filesystem;

/// Raw decoded PGM: integer samples and their maximum value.
struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> samples;
};

namespace detail {

inline std::string next_pgm_token(const std::string &buf, std::size_t &pos) {
  for (;;) {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  return buf.substr(start, pos - start);
}

inline int parse_header_int(const std::string &tok, const fs::path &path) {
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception &) {
    throw DataError("decode failure: malformed PGM header in " + path.string());
  }
}

} // namespace detail

inline GrayImage read_pgm(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  const std::string magic = detail::next_pgm_token(buf, pos);
  if (magic != "P5" && magic != "P2") throw DataError("decode failure: " + path.string() + " is not a PGM image");
  GrayImage img;
  img.width = detail::parse_header_int(detail::next_pgm_token(buf, pos), path);
  img.height = detail::parse_header_int(detail::next_pgm_token(buf, pos), path);
  img.maxval = detail::parse_header_int(detail::next_pgm_token(buf, pos), path);
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535)
    throw DataError("decode failure: invalid PGM header in " + path.string());

  const std::size_t count = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.samples.resize(count);
  if (magic == "P5") {
    ++pos; // single whitespace byte after maxval
    const std::size_t bytes = img.maxval > 255 ? 2 : 1;
    if (buf.size() < pos + count * bytes) throw DataError("decode failure: truncated pixel data in " + path.string());
    const auto *raw = reinterpret_cast<const unsigned char *>(buf.data() + pos);
    for (std::size_t i = 0; i < count; ++i)
      img.samples[i] = bytes == 2 ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::string tok = detail::next_pgm_token(buf, pos);
      if (tok.empty()) throw DataError("decode failure: truncated pixel data in " + path.string());
      img.samples[i] = static_cast<std::uint16_t>(detail::parse_header_int(tok, path));
    }
  }
  for (auto s : img.samples)
    if (s > img.maxval) throw DataError("decode failure: sample exceeds maxval in " + path.string());
  return img;
}

inline void write_pgm(const fs::path &path, const GrayImage &img) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
  std::vector<unsigned char> bytes;
  const bool wide = img.maxval > 255;
  bytes.reserve(img.samples.size() * (wide ? 2 : 1));
  for (auto s : img.samples) {
    if (wide) bytes.push_back(static_cast<unsigned char>(s >> 8));
    bytes.push_back(static_cast<unsigned char>(s & 0xFF));
  }
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failure on " + path.string());
}

/// Maps integer samples v to v / maxval, i.e. v / (2^d - 1) for d-bit images.
inline Frame load_frame(const fs::path &path) {
  const GrayImage img = read_pgm(path);
  std::vector<double> px(img.samples.size());
  const double scale = 1.0 / img.maxval;
  std::transform(img.samples.begin(), img.samples.end(), px.begin(), [scale](auto s) { return s * scale; });
  return Frame(img.width, img.height, std::move(px));
}

/// Values are clamped to [0, 1] here and nowhere earlier in the pipeline.
inline void save_frame(const Frame &f, const fs::path &path, int bit_depth = 8) {
  if (bit_depth != 8 && bit_depth != 16) throw DataError("bit depth must be 8 or 16");
  GrayImage img;
  img.width = f.width();
  img.height = f.height();
  img.maxval = (1 << bit_depth) - 1;
  img.samples.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = std::isfinite(f[i]) ? std::clamp(f[i], 0.0, 1.0) : 0.0;
    img.samples[i] = static_cast<std::uint16_t>(std::lround(v * img.maxval));
  }
  write_pgm(path, img);
}

inline void save_mask(const Mask &m, const fs::path &path) {
  GrayImage img;
  img.width = m.width();
  img.height = m.height();
  img.maxval = 255;
  img.samples.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) img.samples[i] = m[i] ? 255 : 0;
  write_pgm(path, img);
}

inline Mask load_mask(const fs::path &path) {
  const GrayImage img = read_pgm(path);
  Mask m(img.width, img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) m.set(i, img.samples[i] != 0);
  return m;
}

/// Regular files in dir whose names match the glob, sorted lexicographically by filename.
inline std::vector<fs::path> list_matching(const fs::path &dir, const std::string &pattern) {
  if (!fs::is_directory(dir)) throw DataError("missing directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path &a, const fs::path &b) { return a.filename().string() < b.filename().string(); });
  return files;
}

inline ImageSequence load_sequence(const fs::path &dir, const std::string &pattern = "*.pgm") {
  const auto files = list_matching(dir, pattern);
  if (files.size() < 2)
    throw DataError("insufficient frames: " + std::to_string(files.size()) + " file(s) in " + dir.string() +
                    " match '" + pattern + "', need at least 2");
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto &f : files) {
    Frame fr = load_frame(f);
    if (!frames.empty() && !fr.same_shape(frames.front()))
      throw DataError("dimension mismatch: " + f.string() + " is " + std::to_string(fr.width()) + "x" +
                      std::to_string(fr.height()) + ", expected " + std::to_string(frames.front().width()) + "x" +
                      std::to_string(frames.front().height()));
    frames.push_back(std::move(fr));
  }
  return ImageSequence(std::move(frames));
}

inline std::vector<Mask> load_masks(const fs::path &dir, const std::string &pattern = "*.pgm") {
  const auto files = list_matching(dir, pattern);
  std::vector<Mask> masks;
  masks.reserve(files.size());
  for (const auto &f : files) masks.push_back(load_mask(f));
  return masks;
}

inline std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.pgm", index);
  return buf;
}

inline void save_sequence(const ImageSequence &seq, const fs::path &dir, int bit_depth = 8) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < seq.size(); ++k) save_frame(seq[k], dir / frame_name(k), bit_depth);
}

} // namespace pcseg
