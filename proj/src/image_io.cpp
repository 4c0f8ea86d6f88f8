#include "cathseg/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "cathseg/errors.hpp"

namespace fs = std::filesystem;

namespace cathseg {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

fs::path temp_sibling(const fs::path& path) {
  static int counter = 0;
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(++counter);
  return tmp;
}

void commit(const fs::path& tmp, const fs::path& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

RawImage read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  // Decoded rows are kept outside the setjmp frame.
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng: failed to decode " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  RawImage raw;
  raw.max_value = depth == 16 ? 65535 : 255;
  raw.pixels.resize(height, width);
  for (png_uint_32 y = 0; y < height; ++y)
    for (png_uint_32 x = 0; x < width; ++x) {
      if (depth == 16) {
        const png_bytep p = rows[y] + 2 * x;
        raw.pixels(y, x) = static_cast<double>((p[0] << 8) | p[1]);
      } else {
        raw.pixels(y, x) = static_cast<double>(rows[y][x]);
      }
    }
  return raw;
}

RawImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") throw IoError("not a PGM file: " + path.string());

  auto next_int = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw IoError("malformed PGM header in " + path.string());
    return v;
  };
  const long width = next_int(), height = next_int(), maxval = next_int();
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) throw IoError("bad PGM dimensions in " + path.string());

  RawImage raw;
  raw.max_value = static_cast<int>(maxval);
  raw.pixels.resize(height, width);
  if (magic == "P2") {
    for (long y = 0; y < height; ++y)
      for (long x = 0; x < width; ++x) raw.pixels(y, x) = static_cast<double>(next_int());
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> data(static_cast<std::size_t>(width * height * bytes));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!in) throw IoError("truncated PGM data in " + path.string());
    for (long i = 0; i < width * height; ++i) {
      const auto k = static_cast<std::size_t>(i * bytes);
      raw.pixels(i / width, i % width) = bytes == 2 ? (data[k] << 8) | data[k + 1] : data[k];
    }
  }
  return raw;
}

bool has_png_signature(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

void write_png(const fs::path& path, int width, int height, int depth, int color,
               const std::vector<png_byte>& data) {
  const fs::path tmp = temp_sibling(path);
  {
    FilePtr file(std::fopen(tmp.c_str(), "wb"));
    if (!file) throw IoError("cannot create " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      throw IoError("libpng: cannot create info struct");
    }
    const int channels = color == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t rowbytes = static_cast<std::size_t>(width * channels * (depth / 8));
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
      rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(data.data()) + static_cast<std::size_t>(y) * rowbytes;
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw IoError("libpng: failed to encode " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) throw IoError("cannot write " + path.string());
  }
  commit(tmp, path);
}

}  // namespace

RawImage read_raw_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  return has_png_signature(path) ? read_png(path) : read_pgm(path);
}

Image load_image(const fs::path& path) {
  return normalize_percentile(read_raw_image(path).pixels).image;
}

BinaryMask load_mask(const fs::path& path) {
  return BinaryMask((read_raw_image(path).pixels != 0.0).cast<std::uint8_t>());
}

ProbabilityMap load_probability(const fs::path& path) {
  const RawImage raw = read_raw_image(path);
  return ProbabilityMap((raw.pixels / raw.max_value).cast<float>());
}

void write_png_gray8(const fs::path& path, const PixelGrid<std::uint8_t>& pixels) {
  std::vector<png_byte> data(pixels.data(), pixels.data() + pixels.size());
  write_png(path, static_cast<int>(pixels.cols()), static_cast<int>(pixels.rows()), 8, PNG_COLOR_TYPE_GRAY, data);
}

void write_png_gray16(const fs::path& path, const PixelGrid<std::uint16_t>& pixels) {
  std::vector<png_byte> data(static_cast<std::size_t>(pixels.size()) * 2);
  for (Eigen::Index i = 0; i < pixels.size(); ++i) {
    data[static_cast<std::size_t>(2 * i)] = static_cast<png_byte>(pixels.data()[i] >> 8);
    data[static_cast<std::size_t>(2 * i + 1)] = static_cast<png_byte>(pixels.data()[i] & 0xff);
  }
  write_png(path, static_cast<int>(pixels.cols()), static_cast<int>(pixels.rows()), 16, PNG_COLOR_TYPE_GRAY, data);
}

void write_png_rgb8(const fs::path& path, const RgbImage& image) {
  std::vector<png_byte> data(static_cast<std::size_t>(image.r.size()) * 3);
  for (Eigen::Index i = 0; i < image.r.size(); ++i) {
    data[static_cast<std::size_t>(3 * i)] = image.r.data()[i];
    data[static_cast<std::size_t>(3 * i + 1)] = image.g.data()[i];
    data[static_cast<std::size_t>(3 * i + 2)] = image.b.data()[i];
  }
  write_png(path, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, data);
}

void write_pgm(const fs::path& path, const PixelGrid<std::uint16_t>& pixels, int max_value) {
  std::ostringstream out;
  out << "P2\n" << pixels.cols() << ' ' << pixels.rows() << '\n' << max_value << '\n';
  for (Eigen::Index y = 0; y < pixels.rows(); ++y) {
    for (Eigen::Index x = 0; x < pixels.cols(); ++x) out << (x ? " " : "") << pixels(y, x);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_image_png(const fs::path& path, const Image& image) {
  const PixelGrid<std::uint16_t> q =
      (image.pixels.cast<double>().max(0.0).min(1.0) * 65535.0).round().cast<std::uint16_t>();
  write_png_gray16(path, q);
}

void write_mask_png(const fs::path& path, const BinaryMask& mask) {
  write_png_gray8(path, (mask.pixels != 0).select(PixelGrid<std::uint8_t>::Constant(mask.height(), mask.width(), 255),
                                                  PixelGrid<std::uint8_t>::Zero(mask.height(), mask.width())));
}

void write_probability_png(const fs::path& path, const ProbabilityMap& map) {
  const PixelGrid<std::uint16_t> q =
      (map.pixels.cast<double>().max(0.0).min(1.0) * 65535.0).round().cast<std::uint16_t>();
  write_png_gray16(path, q);
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("cannot write " + path.string());
  }
  commit(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cathseg
