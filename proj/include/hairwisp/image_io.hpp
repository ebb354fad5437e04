#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hairwisp/errors.hpp"
#include "hairwisp/raster.hpp"

namespace hairwisp {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Image decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw ParseError("'" + name + "': " + img.message);
  img.format = PNG_FORMAT_RGBA;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.data().data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw ParseError("'" + name + "': " + msg);
  }
  return out;
}

// Binary PGM (P5) or PPM (P6), maxval <= 255.
inline Image decode_pnm(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 2;
  auto next_int = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
      if (v > (1L << 24)) throw ParseError("'" + name + "': header value too large");
    }
    if (!any) throw ParseError("'" + name + "': malformed PNM header");
    return v;
  };
  const bool color = bytes[1] == '6';
  const long w = next_int(), h = next_int(), maxval = next_int();
  if (maxval <= 0 || maxval > 255) throw ParseError("'" + name + "': only 8-bit PNM supported");
  ++pos;  // single whitespace after maxval
  const std::size_t channels = color ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
  if (bytes.size() < pos + need) throw ParseError("'" + name + "': truncated PNM data");
  Image out(static_cast<int>(w), static_cast<int>(h));
  const unsigned char* p = bytes.data() + pos;
  for (auto& px : out.data()) {
    auto scale = [&](unsigned char v) {
      return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    };
    if (color) {
      px = {scale(p[0]), scale(p[1]), scale(p[2]), 255};
      p += 3;
    } else {
      const auto v = scale(p[0]);
      px = {v, v, v, 255};
      p += 1;
    }
  }
  return out;
}

}  // namespace detail

// Reads PNG, binary PGM (P5) or binary PPM (P6); format is detected from the
// file's magic bytes. Grayscale data is replicated into RGB, missing alpha
// becomes 255.
inline Image read_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  const std::string name = path.string();
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin()))
    return detail::decode_png(bytes, name);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return detail::decode_pnm(bytes, name);
  throw ParseError("'" + name + "': unsupported image format (expected PNG, PGM or PPM)");
}

inline void write_png(const std::filesystem::path& path, const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.data().data(), 0, nullptr))
    throw IoError("cannot write '" + path.string() + "': " + img.message);
}

inline void write_gray_png(const std::filesystem::path& path, const Raster<std::uint8_t>& gray) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(gray.width());
  img.height = static_cast<png_uint_32>(gray.height());
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, gray.data().data(), 0, nullptr))
    throw IoError("cannot write '" + path.string() + "': " + img.message);
}

// Binary PGM writer; handy for tests and tooling that avoid PNG.
inline void write_pgm(const std::filesystem::path& path, const Raster<std::uint8_t>& gray) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "P5\n" << gray.width() << ' ' << gray.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data().data()),
            static_cast<std::streamsize>(gray.size()));
}

inline Raster<std::uint8_t> red_channel(const Image& image) {
  Raster<std::uint8_t> out(image.width(), image.height());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = image.data()[i].r;
  return out;
}

}  // namespace hairwisp
