#include "ifr/core/png.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace ifr {
namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  put_u32(out, static_cast<uint32_t>(data.size()));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uint32_t crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, crc);
}

const uint8_t kSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint8_t paeth(uint8_t a, uint8_t b, uint8_t c) {
  int p = int(a) + int(b) - int(c);
  int pa = std::abs(p - int(a));
  int pb = std::abs(p - int(b));
  int pc = std::abs(p - int(c));
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void write_png_gray8(const std::string& path, const Image& img) {
  if (img.h <= 0 || img.w <= 0) throw std::invalid_argument("write_png_gray8: empty image");
  std::vector<uint8_t> px = to_u8(img);

  // Filter type 0 on every scanline; simplicity beats a few bytes here and
  // keeps the output byte-for-byte reproducible.
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(img.h) * (img.w + 1));
  for (int r = 0; r < img.h; ++r) {
    raw.push_back(0);
    raw.insert(raw.end(), px.begin() + static_cast<size_t>(r) * img.w,
               px.begin() + static_cast<size_t>(r + 1) * img.w);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> zdata(bound);
  if (compress2(zdata.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw std::runtime_error("write_png_gray8: deflate failed");
  zdata.resize(bound);

  std::vector<uint8_t> ihdr;
  put_u32(ihdr, static_cast<uint32_t>(img.w));
  put_u32(ihdr, static_cast<uint32_t>(img.h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // greyscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // adaptive filtering
  ihdr.push_back(0);  // no interlace

  std::vector<uint8_t> file(kSig, kSig + 8);
  append_chunk(file, "IHDR", ihdr);
  append_chunk(file, "IDAT", zdata);
  append_chunk(file, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_png_gray8: cannot open " + path);
  f.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
  if (!f) throw std::runtime_error("write_png_gray8: write failed for " + path);
}

Image read_png_gray(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_png_gray: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSig, 8) != 0)
    throw std::runtime_error("read_png_gray: not a PNG: " + path);

  uint32_t width = 0, height = 0;
  int depth = 0, color = 0, interlace = 0;
  std::vector<uint8_t> zdata;
  bool saw_ihdr = false;

  size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    uint32_t len = get_u32(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) throw std::runtime_error("read_png_gray: truncated chunk in " + path);
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const uint8_t* data = &bytes[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw std::runtime_error("read_png_gray: bad IHDR in " + path);
      width = get_u32(data);
      height = get_u32(data + 4);
      depth = data[8];
      color = data[9];
      interlace = data[12];
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      zdata.insert(zdata.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }

  if (!saw_ihdr || width == 0 || height == 0) throw std::runtime_error("read_png_gray: missing IHDR in " + path);
  if (interlace != 0) throw std::runtime_error("read_png_gray: interlaced PNG unsupported: " + path);
  if (depth != 8 && depth != 16) throw std::runtime_error("read_png_gray: unsupported bit depth in " + path);

  int channels;
  switch (color) {
    case 0: channels = 1; break;
    case 2: channels = 3; break;
    case 4: channels = 2; break;
    case 6: channels = 4; break;
    default: throw std::runtime_error("read_png_gray: unsupported color type in " + path);
  }

  int bpp = channels * depth / 8;  // bytes per pixel
  size_t rowbytes = static_cast<size_t>(width) * bpp;
  size_t rawsize = (rowbytes + 1) * height;
  std::vector<uint8_t> raw(rawsize);
  uLongf rawlen = static_cast<uLongf>(rawsize);
  if (uncompress(raw.data(), &rawlen, zdata.data(), static_cast<uLong>(zdata.size())) != Z_OK || rawlen != rawsize)
    throw std::runtime_error("read_png_gray: inflate failed for " + path);

  // Undo per-scanline filters in place.
  std::vector<uint8_t> prev(rowbytes, 0);
  std::vector<uint8_t> px;
  px.reserve(static_cast<size_t>(height) * rowbytes);
  for (uint32_t r = 0; r < height; ++r) {
    uint8_t filter = raw[r * (rowbytes + 1)];
    uint8_t* row = &raw[r * (rowbytes + 1) + 1];
    for (size_t i = 0; i < rowbytes; ++i) {
      uint8_t a = i >= static_cast<size_t>(bpp) ? row[i - bpp] : 0;
      uint8_t b = prev[i];
      uint8_t c = i >= static_cast<size_t>(bpp) ? prev[i - bpp] : 0;
      switch (filter) {
        case 0: break;
        case 1: row[i] = static_cast<uint8_t>(row[i] + a); break;
        case 2: row[i] = static_cast<uint8_t>(row[i] + b); break;
        case 3: row[i] = static_cast<uint8_t>(row[i] + (int(a) + int(b)) / 2); break;
        case 4: row[i] = static_cast<uint8_t>(row[i] + paeth(a, b, c)); break;
        default: throw std::runtime_error("read_png_gray: bad filter byte in " + path);
      }
    }
    std::memcpy(prev.data(), row, rowbytes);
    px.insert(px.end(), row, row + rowbytes);
  }

  Image img(static_cast<int>(height), static_cast<int>(width));
  int step = depth / 8;
  for (uint32_t r = 0; r < height; ++r) {
    for (uint32_t c = 0; c < width; ++c) {
      const uint8_t* p = &px[(static_cast<size_t>(r) * width + c) * bpp];
      double v;
      if (channels >= 3) {
        // 16-bit samples use the high byte only; precision loss is irrelevant
        // for recognition input.
        double rr = p[0 * step] / 255.0;
        double gg = p[1 * step] / 255.0;
        double bb = p[2 * step] / 255.0;
        v = 0.299 * rr + 0.587 * gg + 0.114 * bb;
      } else {
        v = p[0] / 255.0;
      }
      img.at(static_cast<int>(r), static_cast<int>(c)) = v;
    }
  }
  return img;
}

}  // namespace ifr
