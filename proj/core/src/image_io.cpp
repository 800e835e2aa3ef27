#include "rgan/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "rgan/error.hpp"

namespace rgan::io {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

RawImage decode_png(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  require(f != nullptr, ErrorCategory::io, "cannot open: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png, ErrorCategory::data, "png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorCategory::data, "png init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCategory::data, "undecodable png: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  RawImage img;
  img.height = png_get_image_height(png, info);
  img.width = png_get_image_width(png, info);
  img.channels = png_get_channels(png, info);
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCategory::data, "unsupported channel count in " + path.string());
  }
  img.pixels.resize(static_cast<size_t>(img.height * img.width * img.channels));
  std::vector<png_bytep> rows(img.height);
  for (Index y = 0; y < img.height; ++y)
    rows[y] = img.pixels.data() + y * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  longjmp(err->jump, 1);
}

RawImage decode_jpeg(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  require(f != nullptr, ErrorCategory::io, "cannot open: " + path.string());

  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCategory::data, "undecodable jpeg: " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  RawImage img;
  img.height = cinfo.output_height;
  img.width = cinfo.output_width;
  img.channels = cinfo.output_components;
  img.pixels.resize(static_cast<size_t>(img.height * img.width * img.channels));
  while (cinfo.output_scanline < cinfo.output_height) {
    uint8_t* row = img.pixels.data() +
                   static_cast<size_t>(cinfo.output_scanline) * img.width * img.channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

RawImage decode_image(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  require(f != nullptr, ErrorCategory::io, "cannot open: " + path.string());
  uint8_t magic[4] = {0, 0, 0, 0};
  const size_t got = std::fread(magic, 1, sizeof magic, f.get());
  f.reset();
  require(got >= 3, ErrorCategory::data, "file too short: " + path.string());
  if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
    return decode_png(path);
  if (magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF)
    return decode_jpeg(path);
  fail(ErrorCategory::data, "not a png or jpeg: " + path.string());
}

void write_png(const std::filesystem::path& path, const Tensor& chw) {
  require(chw.rank() == 3 && (chw.dim(0) == 1 || chw.dim(0) == 3),
          ErrorCategory::shape, "write_png expects (C,H,W) with C in {1,3}");
  const Index c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);

  std::vector<uint8_t> rgb(static_cast<size_t>(h * w * 3));
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (Index ch = 0; ch < 3; ++ch) {
        const Index src = c == 3 ? ch : 0;
        rgb[(y * w + x) * 3 + ch] = unit_to_pixel(chw[(src * h + y) * w + x]);
      }

  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    FilePtr f(std::fopen(tmp.c_str(), "wb"));
    require(f != nullptr, ErrorCategory::io, "cannot open for write: " + tmp.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png, ErrorCategory::io, "png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, info ? &info : nullptr);
      fail(ErrorCategory::io, "png write failed: " + tmp.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (Index y = 0; y < h; ++y)
      png_write_row(png, rgb.data() + y * w * 3);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorCategory::io, "rename failed: " + path.string());
}

Tensor raw_to_chw(const RawImage& img) {
  Tensor t({3, img.height, img.width});
  for (Index y = 0; y < img.height; ++y)
    for (Index x = 0; x < img.width; ++x)
      for (Index c = 0; c < 3; ++c) {
        const Index src = img.channels == 3 ? c : 0;
        t[(c * img.height + y) * img.width + x] = pixel_to_unit(img.at(y, x, src));
      }
  return t;
}

Tensor center_crop_resize(const Tensor& chw, Index size) {
  require(chw.rank() == 3, ErrorCategory::shape, "expected (C,H,W)");
  const Index c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  const Index side = std::min(h, w);
  const Index y0 = (h - side) / 2, x0 = (w - side) / 2;

  Tensor out({c, size, size});
  const double scale = static_cast<double>(side) / static_cast<double>(size);
  for (Index ch = 0; ch < c; ++ch) {
    for (Index y = 0; y < size; ++y) {
      // Align pixel centers: sample position of output center y+0.5.
      const double sy = (y + 0.5) * scale - 0.5;
      const Index iy0 = static_cast<Index>(std::floor(sy));
      const double fy = sy - iy0;
      const Index y1 = std::clamp(iy0, Index{0}, side - 1);
      const Index y2 = std::clamp(iy0 + 1, Index{0}, side - 1);
      for (Index x = 0; x < size; ++x) {
        const double sx = (x + 0.5) * scale - 0.5;
        const Index ix0 = static_cast<Index>(std::floor(sx));
        const double fx = sx - ix0;
        const Index x1 = std::clamp(ix0, Index{0}, side - 1);
        const Index x2 = std::clamp(ix0 + 1, Index{0}, side - 1);
        auto px = [&](Index yy, Index xx) {
          return chw[(ch * h + (y0 + yy)) * w + (x0 + xx)];
        };
        const double v = (1 - fy) * ((1 - fx) * px(y1, x1) + fx * px(y1, x2)) +
                         fy * ((1 - fx) * px(y2, x1) + fx * px(y2, x2));
        out[(ch * size + y) * size + x] = v;
      }
    }
  }
  return out;
}

}  // namespace rgan::io
