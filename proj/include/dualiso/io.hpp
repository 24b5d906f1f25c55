#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include <json.hpp>

#include "dualiso/image.hpp"
#include "dualiso/segmentation.hpp"
#include "dualiso/sve_raw.hpp"

namespace dualiso::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// PFM (portable float map). Little-endian on write, rows stored bottom-up.

template <std::size_t C>
void write_pfm(const fs::path& path, const Raster<double, C>& img) {
  static_assert(C == 1 || C == 3);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << (C == 3 ? "PF" : "Pf") << '\n' << img.width() << ' ' << img.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(img.width()) * C);
  for (int r = img.height() - 1; r >= 0; --r) {
    for (int c = 0; c < img.width(); ++c)
      for (std::size_t ch = 0; ch < C; ++ch) row[static_cast<std::size_t>(c) * C + ch] = static_cast<float>(img(r, c, ch));
    if constexpr (std::endian::native == std::endian::big)
      for (auto& f : row) {
        const std::uint32_t b = std::bit_cast<std::uint32_t>(f);
        f = std::bit_cast<float>((b >> 24) | ((b >> 8) & 0xff00u) | ((b << 8) & 0xff0000u) | (b << 24));
      }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

namespace detail {

inline std::string next_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

}  // namespace detail

/// Reads colour (PF) or grayscale (Pf) maps; grayscale is replicated to RGB.
inline RgbImage read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string magic = detail::next_token(in);
  if (magic != "PF" && magic != "Pf") throw FormatError(path.string() + " is not a PFM file");
  const int channels = magic == "PF" ? 3 : 1;
  const int w = std::stoi(detail::next_token(in));
  const int h = std::stoi(detail::next_token(in));
  const double scale = std::stod(detail::next_token(in));
  if (w <= 0 || h <= 0) throw FormatError("bad PFM dimensions in " + path.string());
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!in) throw FormatError("truncated PFM data in " + path.string());
  RgbImage img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const std::size_t idx = (static_cast<std::size_t>(h - 1 - r) * w + c) * channels + (channels == 3 ? ch : 0);
        std::uint32_t bits = raw[idx];
        if (swap) bits = detail::byteswap32(bits);
        img(r, c, static_cast<std::size_t>(ch)) = static_cast<double>(std::bit_cast<float>(bits));
      }
  return img;
}

// ---------------------------------------------------------------------------
// Radiance RGBE (.hdr)

inline HdrImage read_rgbe(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("#?", 0) != 0) throw FormatError(path.string() + " is not a Radiance file");
  bool rgbe_format = true;
  while (std::getline(in, line) && !line.empty()) {
    if (line.rfind("FORMAT=", 0) == 0) rgbe_format = line == "FORMAT=32-bit_rle_rgbe";
  }
  if (!rgbe_format) throw FormatError("unsupported Radiance pixel format in " + path.string());
  std::getline(in, line);
  std::istringstream res(line);
  std::string ya, xa;
  int h = 0, w = 0;
  res >> ya >> h >> xa >> w;
  if (ya != "-Y" || xa != "+X" || w <= 0 || h <= 0)
    throw FormatError("unsupported Radiance orientation: " + line);

  HdrImage img(w, h);
  std::vector<std::array<std::uint8_t, 4>> scan(static_cast<std::size_t>(w));
  auto get = [&]() {
    const int ch = in.get();
    if (ch == EOF) throw FormatError("truncated Radiance data in " + path.string());
    return static_cast<std::uint8_t>(ch);
  };
  for (int r = 0; r < h; ++r) {
    std::array<std::uint8_t, 4> head{get(), get(), get(), get()};
    const bool rle = w >= 8 && w < 32768 && head[0] == 2 && head[1] == 2 && (head[2] & 0x80) == 0;
    if (rle) {
      if (((head[2] << 8) | head[3]) != w) throw FormatError("Radiance scanline width mismatch");
      for (std::size_t comp = 0; comp < 4; ++comp) {
        int x = 0;
        while (x < w) {
          int count = get();
          if (count > 128) {
            count -= 128;
            const std::uint8_t v = get();
            if (x + count > w) throw FormatError("bad Radiance run length");
            for (int i = 0; i < count; ++i) scan[static_cast<std::size_t>(x++)][comp] = v;
          } else {
            if (count == 0 || x + count > w) throw FormatError("bad Radiance run length");
            for (int i = 0; i < count; ++i) scan[static_cast<std::size_t>(x++)][comp] = get();
          }
        }
      }
    } else {
      scan[0] = head;
      for (int x = 1; x < w; ++x) scan[static_cast<std::size_t>(x)] = {get(), get(), get(), get()};
    }
    for (int c = 0; c < w; ++c) {
      const auto& p = scan[static_cast<std::size_t>(c)];
      if (p[3] == 0) continue;
      const double f = std::ldexp(1.0, static_cast<int>(p[3]) - (128 + 8));
      for (std::size_t ch = 0; ch < 3; ++ch) img(r, c, ch) = (p[ch] + 0.5) * f;
    }
  }
  return img;
}

/// RGBE with run-length scanlines (literal runs only) for widths the
/// encoding supports, flat pixels otherwise.
inline void write_rgbe(const fs::path& path, const HdrImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << img.height() << " +X " << img.width() << "\n";
  const int w = img.width();
  const bool rle = w >= 8 && w < 32768;
  std::vector<std::array<std::uint8_t, 4>> scan(static_cast<std::size_t>(w));
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < w; ++c) {
      const double v = std::max({img(r, c, 0), img(r, c, 1), img(r, c, 2)});
      std::array<std::uint8_t, 4> p{0, 0, 0, 0};
      if (v >= 1e-32) {
        int e = 0;
        const double scale = std::frexp(v, &e) * 256.0 / v;
        for (std::size_t ch = 0; ch < 3; ++ch)
          p[ch] = static_cast<std::uint8_t>(std::clamp(std::floor(img(r, c, ch) * scale), 0.0, 255.0));
        p[3] = static_cast<std::uint8_t>(e + 128);
      }
      scan[static_cast<std::size_t>(c)] = p;
    }
    if (!rle) {
      for (const auto& p : scan) out.write(reinterpret_cast<const char*>(p.data()), 4);
      continue;
    }
    const char head[4] = {2, 2, static_cast<char>(w >> 8), static_cast<char>(w & 0xff)};
    out.write(head, 4);
    for (std::size_t comp = 0; comp < 4; ++comp)
      for (int x = 0; x < w;) {
        const int n = std::min(128, w - x);
        out.put(static_cast<char>(n));
        for (int i = 0; i < n; ++i) out.put(static_cast<char>(scan[static_cast<std::size_t>(x + i)][comp]));
        x += n;
      }
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

inline HdrImage read_hdr_any(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".hdr" || ext == ".pic" || ext == ".rgbe") return read_rgbe(path);
  throw FormatError("unsupported HDR extension: " + path.string());
}

// ---------------------------------------------------------------------------
// Binary PGM (P5)

inline void write_pgm16(const fs::path& path, const Raster<std::uint16_t, 1>& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
  for (std::uint16_t v : img.values()) {
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

inline Raster<std::uint16_t, 1> read_pgm(const fs::path& path, int* maxval_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  if (detail::next_token(in) != "P5") throw FormatError(path.string() + " is not a binary PGM");
  const int w = std::stoi(detail::next_token(in));
  const int h = std::stoi(detail::next_token(in));
  const int maxval = std::stoi(detail::next_token(in));
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw FormatError("bad PGM header in " + path.string());
  Raster<std::uint16_t, 1> img(w, h);
  for (auto& v : img.values()) {
    if (maxval > 255) {
      const int hi = in.get();
      const int lo = in.get();
      if (lo == EOF) throw FormatError("truncated PGM data in " + path.string());
      v = static_cast<std::uint16_t>((hi << 8) | lo);
    } else {
      const int b = in.get();
      if (b == EOF) throw FormatError("truncated PGM data in " + path.string());
      v = static_cast<std::uint16_t>(b);
    }
  }
  if (maxval_out) *maxval_out = maxval;
  return img;
}

// ---------------------------------------------------------------------------
// PNG via libpng

namespace detail {

struct PngFile {
  std::FILE* fp = nullptr;
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
};

inline void png_error_fn(png_structp, png_const_charp msg) { throw FormatError(std::string("libpng: ") + msg); }
inline void png_warning_fn(png_structp, png_const_charp) {}

inline void write_png_rows(const fs::path& path, int width, int height, int bit_depth, int color_type,
                           const std::vector<std::uint8_t>& bytes, std::size_t row_bytes,
                           const std::vector<png_color>* palette = nullptr) {
  PngFile file;
  file.fp = std::fopen(path.string().c_str(), "wb");
  if (!file.fp) throw FormatError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (palette) png_set_PLTE(png, info, palette->data(), static_cast<int>(palette->size()));
  png_write_info(png, info);
  for (int r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(r) * row_bytes));
  png_write_end(png, nullptr);
}

inline std::uint16_t quantize(double v, double max) {
  return static_cast<std::uint16_t>(std::nearbyint(std::clamp(v, 0.0, 1.0) * max));
}

}  // namespace detail

/// Display-referred RGB in [0, 1] as an 8- or 16-bit PNG.
inline void write_png(const fs::path& path, const RgbImage& img, int bit_depth = 8) {
  if (bit_depth != 8 && bit_depth != 16) throw FormatError("PNG bit depth must be 8 or 16");
  const std::size_t bpc = static_cast<std::size_t>(bit_depth / 8);
  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * 3 * bpc;
  std::vector<std::uint8_t> bytes(row_bytes * static_cast<std::size_t>(img.height()));
  std::size_t o = 0;
  for (double v : img.values()) {
    const std::uint16_t q = detail::quantize(v, bit_depth == 8 ? 255.0 : 65535.0);
    if (bit_depth == 16) bytes[o++] = static_cast<std::uint8_t>(q >> 8);
    bytes[o++] = static_cast<std::uint8_t>(q & 0xff);
  }
  detail::write_png_rows(path, img.width(), img.height(), bit_depth, PNG_COLOR_TYPE_RGB, bytes, row_bytes);
}

inline void write_png_gray16(const fs::path& path, const Raster<std::uint16_t, 1>& img) {
  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * 2;
  std::vector<std::uint8_t> bytes(row_bytes * static_cast<std::size_t>(img.height()));
  std::size_t o = 0;
  for (std::uint16_t v : img.values()) {
    bytes[o++] = static_cast<std::uint8_t>(v >> 8);
    bytes[o++] = static_cast<std::uint8_t>(v & 0xff);
  }
  detail::write_png_rows(path, img.width(), img.height(), 16, PNG_COLOR_TYPE_GRAY, bytes, row_bytes);
}

inline Raster<std::uint16_t, 1> read_png_gray(const fs::path& path, int* bit_depth_out = nullptr) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
  const bool wide = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  image.format = wide ? PNG_FORMAT_LINEAR_Y : PNG_FORMAT_GRAY;
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  Raster<std::uint16_t, 1> img(static_cast<int>(image.width), static_cast<int>(image.height));
  if (wide) {
    if (!png_image_finish_read(&image, nullptr, img.values().data(), 0, nullptr))
      throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
  } else {
    std::vector<std::uint8_t> buf(n);
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
      throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
    for (std::size_t i = 0; i < n; ++i) img.values()[i] = buf[i];
  }
  if (bit_depth_out) *bit_depth_out = wide ? 16 : 8;
  return img;
}

/// Reads an 8- or 16-bit PNG as RGB in [0, 1] without any transfer-curve conversion.
inline RgbImage read_png_rgb(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
  const bool wide = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  image.format = wide ? PNG_FORMAT_LINEAR_RGB : PNG_FORMAT_RGB;
  RgbImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  const std::size_t n = img.values().size();
  if (wide) {
    std::vector<std::uint16_t> buf(n);
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
      throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
    for (std::size_t i = 0; i < n; ++i) img.values()[i] = buf[i] / 65535.0;
  } else {
    std::vector<std::uint8_t> buf(n);
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
      throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
    for (std::size_t i = 0; i < n; ++i) img.values()[i] = buf[i] / 255.0;
  }
  return img;
}

// Fixed 10-colour palette for segment labels.
inline const std::vector<png_color>& segment_palette() {
  static const std::vector<png_color> palette{
      {0, 0, 0},       {230, 25, 75},  {60, 180, 75},  {255, 225, 25}, {0, 130, 200},
      {245, 130, 48},  {145, 30, 180}, {70, 240, 240}, {240, 50, 230}, {210, 245, 60},
      {250, 190, 212},
  };
  return palette;
}

/// Labels 1..10 map to palette entries 1..10 (entry 0 is unused black).
inline void write_segmentation_png(const fs::path& path, const SegmentationMap& seg) {
  std::vector<std::uint8_t> bytes(seg.labels.pixel_count());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::clamp(seg.labels.values()[i], 0, 10));
  detail::write_png_rows(path, seg.width(), seg.height(), 8, PNG_COLOR_TYPE_PALETTE, bytes,
                         static_cast<std::size_t>(seg.width()), &segment_palette());
}

// ---------------------------------------------------------------------------
// Dual-ISO mosaic + JSON sidecar

struct MosaicMetadata {
  int width = 0;
  int height = 0;
  std::string cfa = "RGGB";
  int line_period = 2;
  double ev_low = -1.0;
  double ev_high = 1.0;
  double white_level = 65535.0;
  bool high_first = true;

  DualIsoLayout layout() const { return {line_period, high_first}; }
};

inline void to_json(nlohmann::json& j, const MosaicMetadata& m) {
  j = nlohmann::json{{"width", m.width},        {"height", m.height}, {"cfa", m.cfa},
                     {"line_period", m.line_period}, {"ev_low", m.ev_low}, {"ev_high", m.ev_high},
                     {"white_level", m.white_level}, {"high_first", m.high_first}};
}

inline void from_json(const nlohmann::json& j, MosaicMetadata& m) {
  j.at("width").get_to(m.width);
  j.at("height").get_to(m.height);
  m.cfa = j.value("cfa", std::string("RGGB"));
  m.line_period = j.value("line_period", 2);
  m.ev_low = j.value("ev_low", -1.0);
  m.ev_high = j.value("ev_high", 1.0);
  m.white_level = j.value("white_level", 65535.0);
  m.high_first = j.value("high_first", true);
  if (!(m.ev_low < m.ev_high)) throw FormatError("sidecar ev_low must be below ev_high");
  if (!(m.white_level > 0.0)) throw FormatError("sidecar white_level must be positive");
}

inline fs::path sidecar_path(const fs::path& image) {
  fs::path p = image;
  p.replace_extension(".json");
  return p;
}

inline Raster<std::uint16_t, 1> quantize_mosaic(const RawMosaic& x, double white_level) {
  Raster<std::uint16_t, 1> q(x.width(), x.height());
  for (std::size_t i = 0; i < q.pixel_count(); ++i)
    q.values()[i] = static_cast<std::uint16_t>(
        std::nearbyint(std::clamp(x.plane.values()[i], 0.0, 1.0) * std::min(white_level, 65535.0)));
  return q;
}

/// Writes `<stem>.pgm` or `<stem>.png` (by extension) plus `<stem>.json`.
inline void write_mosaic(const fs::path& path, const RawMosaic& x, MosaicMetadata meta) {
  meta.width = x.width();
  meta.height = x.height();
  meta.cfa = x.cfa.name();
  const auto q = quantize_mosaic(x, meta.white_level);
  const std::string ext = path.extension().string();
  if (ext == ".png")
    write_png_gray16(path, q);
  else
    write_pgm16(path, q);
  std::ofstream js(sidecar_path(path));
  js << nlohmann::json(meta).dump(2) << '\n';
  if (!js) throw FormatError("failed writing sidecar for " + path.string());
}

struct LoadedMosaic {
  RawMosaic mosaic;
  MosaicMetadata meta;
};

inline LoadedMosaic read_mosaic(const fs::path& path) {
  std::ifstream js(sidecar_path(path));
  if (!js) throw FormatError("missing sidecar " + sidecar_path(path).string());
  MosaicMetadata meta = nlohmann::json::parse(js).get<MosaicMetadata>();
  const Raster<std::uint16_t, 1> raw = path.extension() == ".png" ? read_png_gray(path) : read_pgm(path);
  if (raw.width() != meta.width || raw.height() != meta.height)
    throw FormatError("sidecar dimensions do not match " + path.string());
  RawMosaic x(raw.width(), raw.height(), CfaPattern::parse(meta.cfa));
  for (std::size_t i = 0; i < raw.pixel_count(); ++i) x.plane.values()[i] = raw.values()[i] / meta.white_level;
  return {std::move(x), meta};
}

}  // namespace dualiso::io
