#include "uct/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <vector>

#ifdef UCT_HAVE_PNG
#include <png.h>
#endif
#ifdef UCT_HAVE_JPEG
#include <jpeglib.h>
#endif

#include "uct/errors.hpp"

namespace uct {

namespace {

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class PnmReader {
 public:
  PnmReader(const std::vector<unsigned char>& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  unsigned long header_value() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail("malformed header");
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1ul << 30)) fail("header value too large");
    }
    return v;
  }

  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned binary_value(bool wide) {
    const std::size_t n = wide ? 2 : 1;
    if (pos_ + n > bytes_.size()) fail("truncated pixel data");
    unsigned v = bytes_[pos_];
    if (wide) v = (v << 8) | bytes_[pos_ + 1];
    pos_ += n;
    return v;
  }

  void skip_one_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing separator before pixel data");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const { throw DataError(path_ + ": " + what); }

  std::size_t pos_ = 2;

 private:
  const std::vector<unsigned char>& bytes_;
  const std::string& path_;
};

DenseMap decode_pnm(const std::vector<unsigned char>& bytes, const std::string& path) {
  const char kind = static_cast<char>(bytes[1]);
  const bool ascii = kind == '2' || kind == '3';
  const std::size_t channels = (kind == '3' || kind == '6') ? 3 : 1;
  PnmReader r(bytes, path);
  const auto w = r.header_value();
  const auto h = r.header_value();
  const auto maxval = r.header_value();
  if (w == 0 || h == 0) r.fail("zero image size");
  if (maxval == 0 || maxval > 65535) r.fail("maxval must lie in 1..65535");
  if (!ascii) r.skip_one_space();
  DenseMap img(channels, h, w);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t c = 0; c < channels; ++c) {
        const unsigned long v = ascii ? r.header_value() : r.binary_value(maxval > 255);
        if (v > maxval) r.fail("sample exceeds maxval");
        img(c, i, j) = static_cast<double>(v) * scale;
      }
    }
  }
  return img;
}

#ifdef UCT_HAVE_PNG
DenseMap decode_png(const std::vector<unsigned char>& bytes, const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DataError(path + ": " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError(path + ": " + msg);
  }
  const std::size_t channels = gray ? 1 : 3;
  DenseMap img(channels, image.height, image.width);
  for (std::size_t i = 0; i < image.height; ++i) {
    for (std::size_t j = 0; j < image.width; ++j) {
      for (std::size_t c = 0; c < channels; ++c) {
        img(c, i, j) = buffer[(i * image.width + j) * channels + c] / 255.0;
      }
    }
  }
  return img;
}
#endif

#ifdef UCT_HAVE_JPEG
struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegError*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

DenseMap decode_jpeg(const std::vector<unsigned char>& bytes, const std::string& path) {
  jpeg_decompress_struct info{};
  JpegError err{};
  info.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = on_jpeg_error;
  std::vector<unsigned char> buffer;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  if (setjmp(err.jump) != 0) {
    jpeg_destroy_decompress(&info);
    throw DataError(path + ": " + err.message);
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&info, TRUE);
  info.out_color_space = info.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&info);
  width = info.output_width;
  height = info.output_height;
  channels = static_cast<std::size_t>(info.output_components);
  buffer.resize(width * height * channels);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = buffer.data() + static_cast<std::size_t>(info.output_scanline) * width * channels;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  DenseMap img(channels, height, width);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      for (std::size_t c = 0; c < channels; ++c) img(c, i, j) = buffer[(i * width + j) * channels + c] / 255.0;
    }
  }
  return img;
}
#endif

}  // namespace

DenseMap read_image(const std::string& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '2' && bytes[1] <= '6' && bytes[1] != '4') {
    return decode_pnm(bytes, path);
  }
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') {
#ifdef UCT_HAVE_PNG
    return decode_png(bytes, path);
#else
    throw DataError(path + ": PNG support was not built");
#endif
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
#ifdef UCT_HAVE_JPEG
    return decode_jpeg(bytes, path);
#else
    throw DataError(path + ": JPEG support was not built");
#endif
  }
  throw DataError(path + ": unrecognized image format (supported: " + supported_image_formats() + ")");
}

void write_pnm(const std::string& path, const DenseMap& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw InvalidArgument("write_pnm: expected 1 or 3 channels, got " + image.shape_string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path);
  out << (image.channels() == 1 ? "P5" : "P6") << '\n' << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<char> row(image.width() * image.channels());
  for (std::size_t i = 0; i < image.height(); ++i) {
    for (std::size_t j = 0; j < image.width(); ++j) {
      for (std::size_t c = 0; c < image.channels(); ++c) {
        const double v = std::clamp(image(c, i, j), 0.0, 1.0);
        row[j * image.channels() + c] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("failed writing image " + path);
}

std::string supported_image_formats() {
  std::string s = "pnm";
#ifdef UCT_HAVE_PNG
  s += " png";
#endif
#ifdef UCT_HAVE_JPEG
  s += " jpeg";
#endif
  return s;
}

DenseMap draw_box(const DenseMap& image, const Box& box, const double rgb[3], int thickness) {
  DenseMap out(3, image.height(), image.width());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < image.height(); ++i) {
      for (std::size_t j = 0; j < image.width(); ++j) out(c, i, j) = image(image.channels() == 3 ? c : 0, i, j);
    }
  }
  const long x0 = std::lround(box.x);
  const long y0 = std::lround(box.y);
  const long x1 = std::lround(box.x + box.w) - 1;
  const long y1 = std::lround(box.y + box.h) - 1;
  const long h = static_cast<long>(image.height());
  const long w = static_cast<long>(image.width());
  auto paint = [&](long i, long j) {
    if (i < 0 || j < 0 || i >= h || j >= w) return;
    for (std::size_t c = 0; c < 3; ++c) out(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = rgb[c];
  };
  for (int t = 0; t < thickness; ++t) {
    for (long j = x0; j <= x1; ++j) {
      paint(y0 + t, j);
      paint(y1 - t, j);
    }
    for (long i = y0; i <= y1; ++i) {
      paint(i, x0 + t);
      paint(i, x1 - t);
    }
  }
  return out;
}

}  // namespace uct
