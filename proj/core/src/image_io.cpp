#include "eamnet/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include "eamnet/errors.hpp"

namespace eamnet {

Tensor read_png(const std::filesystem::path& path, int channels) {
  if (channels != 1 && channels != 3) {
    throw ContractError("read_png: channels must be 1 or 3");
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read image " + path.string() + ": " + image.message);
  }
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode image " + path.string() + ": " + msg);
  }
  const int h = static_cast<int>(image.height), w = static_cast<int>(image.width);
  Tensor out(Shape{1, channels, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        out.at(0, c, y, x) = buffer[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0;
      }
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor& img) {
  if (img.n() != 1 || (img.c() != 1 && img.c() != 3)) {
    throw ContractError("write_png: expected (1,1,H,W) or (1,3,H,W), got " +
                        img.shape().str());
  }
  const int c = img.c(), h = img.h(), w = img.w();
  std::vector<png_byte> buffer(static_cast<std::size_t>(h) * w * c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        const double v = std::clamp(img.at(0, k, y, x), 0.0, 1.0);
        buffer[(static_cast<std::size_t>(y) * w + x) * c + k] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
    }
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write image " + path.string() + ": " + image.message);
  }
}

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace eamnet
