#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include "glassbuf/errors.hpp"
#include "glassbuf/image.hpp"

namespace glassbuf {

namespace {

float to_little_endian(float v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bits = std::bit_cast<std::uint32_t>(v);
    bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
    return std::bit_cast<float>(bits);
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using unique_file = std::unique_ptr<std::FILE, FileCloser>;

unique_file open_file(const std::filesystem::path& path, const char* mode) {
  unique_file f(std::fopen(path.string().c_str(), mode));
  if (!f) throw std::runtime_error("cannot open file: " + path.string());
  return f;
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const FloatImage& image) {
  if (image.channels != 1 && image.channels != 3)
    throw std::runtime_error("PFM supports 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << (image.channels == 3 ? "PF" : "Pf") << '\n'
      << image.width << ' ' << image.height << '\n'
      << "-1.0" << '\n';
  auto row_len = std::size_t(image.width) * image.channels;
  std::vector<float> row(row_len);
  for (int y = image.height - 1; y >= 0; y--) {
    for (std::size_t i = 0; i < row_len; i++) row[i] = to_little_endian(image.data[y * row_len + i]);
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row_len * sizeof(float)));
  }
  if (!out) throw std::runtime_error("error writing file: " + path.string());
}

FloatImage read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::string magic;
  FloatImage image;
  double scale = 0;
  in >> magic >> image.width >> image.height >> scale;
  if (!in || (magic != "PF" && magic != "Pf") || image.width <= 0 || image.height <= 0)
    throw ParseError("malformed PFM header: " + path.string());
  in.get();  // single whitespace byte before the raster
  image.channels = magic == "PF" ? 3 : 1;
  auto row_len = std::size_t(image.width) * image.channels;
  image.data.resize(row_len * image.height);
  bool swap = (scale < 0) != (std::endian::native == std::endian::little);
  for (int y = image.height - 1; y >= 0; y--) {
    in.read(reinterpret_cast<char*>(image.data.data() + y * row_len), std::streamsize(row_len * sizeof(float)));
  }
  if (!in) throw ParseError("truncated PFM raster: " + path.string());
  if (swap) {
    for (auto& v : image.data) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
      v = std::bit_cast<float>(bits);
    }
  }
  return image;
}

void write_png(const std::filesystem::path& path, const Png8& image) {
  if (image.channels != 1 && image.channels != 3)
    throw std::runtime_error("PNG writer supports 1 or 3 channels");
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("error writing PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8,
      image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
      PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto stride = std::size_t(image.width) * image.channels;
  for (int y = 0; y < image.height; y++)
    png_write_row(png, const_cast<png_bytep>(image.data.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Png8 read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw ParseError("not a PNG file: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("error reading PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  auto color = png_get_color_type(png, info);
  auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Png8 image;
  image.width    = static_cast<int>(png_get_image_width(png, info));
  image.height   = static_cast<int>(png_get_image_height(png, info));
  image.channels = png_get_channels(png, info);
  auto stride = png_get_rowbytes(png, info);
  image.data.resize(stride * image.height);
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; y++) rows[y] = image.data.data() + y * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

Texture load_texture(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("missing texture file: " + path.string());
  Texture tex;
  auto ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") {
    auto img = read_pfm(path);
    tex.width  = img.width;
    tex.height = img.height;
    tex.texels.resize(std::size_t(img.width) * img.height);
    for (std::size_t i = 0; i < tex.texels.size(); i++) {
      if (img.channels == 3)
        tex.texels[i] = {img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]};
      else
        tex.texels[i] = {img.data[i], img.data[i], img.data[i]};
    }
    return tex;
  }
  auto img = read_png(path);
  tex.width  = img.width;
  tex.height = img.height;
  tex.texels.resize(std::size_t(img.width) * img.height);
  float lut[256];
  for (int i = 0; i < 256; i++) lut[i] = srgb_to_linear(i / 255.0f);
  for (std::size_t i = 0; i < tex.texels.size(); i++) {
    if (img.channels >= 3)
      tex.texels[i] = {lut[img.data[img.channels * i]], lut[img.data[img.channels * i + 1]],
          lut[img.data[img.channels * i + 2]]};
    else
      tex.texels[i] = {lut[img.data[img.channels * i]], lut[img.data[img.channels * i]],
          lut[img.data[img.channels * i]]};
  }
  return tex;
}

void save_radiance_pfm(const std::filesystem::path& path, const RadianceImage& image) {
  write_pfm(path, {image.width, image.height, 3, flatten(image)});
}

RadianceImage load_radiance_pfm(const std::filesystem::path& path) { return to_radiance(read_pfm(path)); }

void save_preview_png(const std::filesystem::path& path, const RadianceImage& image) {
  Png8 png{image.width, image.height, 3, {}};
  png.data.reserve(image.pixels.size() * 3);
  auto encode = [](float v) {
    v = std::pow(std::clamp(v, 0.0f, 1.0f), 1 / 2.2f);
    return static_cast<std::uint8_t>(std::lround(v * 255));
  };
  for (auto& p : image.pixels) {
    png.data.push_back(encode(p.x));
    png.data.push_back(encode(p.y));
    png.data.push_back(encode(p.z));
  }
  write_png(path, png);
}

void save_mask_png(const std::filesystem::path& path, const CoverageMask& mask) {
  Png8 png{mask.width, mask.height, 1, {}};
  png.data.reserve(mask.mask.size());
  for (auto m : mask.mask) png.data.push_back(m ? 255 : 0);
  write_png(path, png);
}

CoverageMask load_mask_png(const std::filesystem::path& path) {
  auto png = read_png(path);
  CoverageMask mask(png.width, png.height);
  for (std::size_t i = 0; i < mask.mask.size(); i++) mask.mask[i] = png.data[i * png.channels] >= 128 ? 1 : 0;
  return mask;
}

}  // namespace glassbuf
