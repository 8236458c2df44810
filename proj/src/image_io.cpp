#include "synthasm/image_io.hpp"

#include <cctype>
#include <fstream>
#include <limits>

#include "synthasm/error.hpp"

namespace synthasm {

namespace {

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

void skip_space_and_comments(std::istream& in) {
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
}

PnmHeader read_header(std::istream& in, const std::string& path) {
  PnmHeader h;
  in >> h.magic;
  skip_space_and_comments(in);
  in >> h.width;
  skip_space_and_comments(in);
  in >> h.height;
  skip_space_and_comments(in);
  in >> h.maxval;
  if (!in || h.width < 1 || h.height < 1) throw DataError("malformed image header in '" + path + "'");
  in.get();  // single whitespace byte before the raster
  return h;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  return in;
}

}  // namespace

void write_ppm(const std::string& path, const RgbImage& image) {
  auto out = open_out(path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

RgbImage read_ppm(const std::string& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P6" || h.maxval != 255) throw DataError("'" + path + "' is not an 8-bit binary PPM");
  RgbImage image{h.width, h.height, {}};
  image.pixels.resize(3 * static_cast<std::size_t>(h.width) * h.height);
  in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!in) throw DataError("truncated raster in '" + path + "'");
  return image;
}

void write_pgm16(const std::string& path, const GrayImage16& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
  std::vector<char> raster;
  raster.reserve(2 * image.pixels.size());
  for (const auto v : image.pixels) {
    raster.push_back(static_cast<char>(v >> 8));
    raster.push_back(static_cast<char>(v & 0xFF));
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

GrayImage16 read_pgm16(const std::string& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P5" || h.maxval != 65535) throw DataError("'" + path + "' is not a 16-bit binary PGM");
  std::vector<unsigned char> raster(2 * static_cast<std::size_t>(h.width) * h.height);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!in) throw DataError("truncated raster in '" + path + "'");
  GrayImage16 image{h.width, h.height, {}};
  image.pixels.resize(raster.size() / 2);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    image.pixels[i] = static_cast<std::uint16_t>((raster[2 * i] << 8) | raster[2 * i + 1]);
  }
  return image;
}

}  // namespace synthasm
