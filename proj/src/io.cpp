#include "bubbleseg/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace bubbleseg::io {

namespace {

using json = nlohmann::json;

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

GrayImage read_png(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CorruptFile, "corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_PACKING, nullptr);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  const int color = png_get_color_type(png, info);
  png_bytepp rows = png_get_rows(png, info);

  const bool has_alpha = (color & PNG_COLOR_MASK_ALPHA) != 0;
  const int color_channels = has_alpha ? channels - 1 : channels;
  const double maxval = depth == 16 ? 65535.0 : 255.0;

  std::vector<float> data(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const png_bytep row = rows[y];
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int c = 0; c < color_channels; ++c) {
        const std::size_t k = static_cast<std::size_t>(x) * channels + c;
        const unsigned v = depth == 16 ? (static_cast<unsigned>(row[2 * k]) << 8) | row[2 * k + 1] : row[k];
        acc += v;
      }
      data[static_cast<std::size_t>(y) * width + x] = static_cast<float>(acc / color_channels / maxval);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return GrayImage(width, height, std::move(data));
}

// Skips whitespace and '#' comments in a PNM header.
int read_pnm_int(std::istream& in) {
  int c;
  while ((c = in.peek()) != EOF) {
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  if (!(in >> v)) throw Error(ErrorCode::CorruptFile, "malformed PGM header");
  return v;
}

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  char magic[2];
  in.read(magic, 2);
  const bool binary = magic[1] == '5';
  const int width = read_pnm_int(in);
  const int height = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    throw Error(ErrorCode::CorruptFile, "malformed PGM header: " + path.string());
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<float> data(n);
  if (binary) {
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw Error(ErrorCode::CorruptFile, "truncated PGM: " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bytes == 2 ? (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
      if (v > static_cast<unsigned>(maxval)) throw Error(ErrorCode::CorruptFile, "PGM sample exceeds maxval");
      data[i] = static_cast<float>(static_cast<double>(v) / maxval);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      int v = -1;
      if (!(in >> v) || v < 0 || v > maxval) throw Error(ErrorCode::CorruptFile, "malformed PGM data: " + path.string());
      data[i] = static_cast<float>(static_cast<double>(v) / maxval);
    }
  }
  return GrayImage(width, height, std::move(data));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint8_t to_u8(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_png_buffer(int width, int height, std::uint32_t format, const void* buffer, const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  const fs::path tmp = path.string() + ".tmp";
  if (!png_image_write_to_file(&image, tmp.c_str(), 0, buffer, 0, nullptr))
    throw Error(ErrorCode::IoError, "PNG write failed: " + path.string() + ": " + image.message);
  fs::rename(tmp, path);
}

}  // namespace

GrayImage read_image(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  const auto got = in.gcount();
  in.close();
  if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  if (got >= 2 && sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) return read_pgm(path);
  if (got >= 4 && std::memcmp(sig, "F32R", 4) == 0) {
    int w = 0, h = 0;
    auto data = read_f32r(path, w, h);
    for (auto& v : data)
      if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorCode::CorruptFile, "F32R image value outside [0,1]");
    return GrayImage(w, h, std::move(data));
  }
  throw Error(ErrorCode::UnsupportedFormat, "unsupported image format: " + path.string());
}

template <typename Tag>
void write_raster(const Raster<Tag>& map, const fs::path& path) {
  std::string out = "F32R";
  out.reserve(12 + map.size() * 4);
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  for (auto v : map.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  write_atomic(path, out);
}

template void write_raster(const Raster<GrayTag>&, const fs::path&);
template void write_raster(const Raster<ProbTag>&, const fs::path&);
template void write_raster(const Raster<MaskTag>&, const fs::path&);

std::vector<float> read_f32r(const fs::path& path, int& width, int& height) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "F32R", 4) != 0)
    throw Error(ErrorCode::CorruptFile, "not an F32R file: " + path.string());
  const std::uint32_t w = get_u32(bytes.data() + 4);
  const std::uint32_t h = get_u32(bytes.data() + 8);
  const std::uint64_t n = static_cast<std::uint64_t>(w) * h;
  if (bytes.size() != 12 + n * 4) throw Error(ErrorCode::CorruptFile, "F32R payload length mismatch: " + path.string());
  std::vector<float> data(n);
  for (std::uint64_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(get_u32(bytes.data() + 12 + 4 * i));
  width = static_cast<int>(w);
  height = static_cast<int>(h);
  return data;
}

ProbMap read_prob_map(const fs::path& path) {
  int w = 0, h = 0;
  auto data = read_f32r(path, w, h);
  return ProbMap(w, h, std::move(data));
}

void write_png(const GrayImage& img, const fs::path& path) {
  std::vector<std::uint8_t> buf(img.size());
  std::transform(img.data().begin(), img.data().end(), buf.begin(), to_u8);
  write_png_buffer(img.width(), img.height(), PNG_FORMAT_GRAY, buf.data(), path);
}

void write_png(const BinaryMask& mask, const fs::path& path) {
  std::vector<std::uint8_t> buf(mask.size());
  std::transform(mask.data().begin(), mask.data().end(), buf.begin(), [](std::uint8_t v) { return v ? 255 : 0; });
  write_png_buffer(mask.width(), mask.height(), PNG_FORMAT_GRAY, buf.data(), path);
}

void write_png(const RgbImage& img, const fs::path& path) {
  std::vector<std::uint8_t> buf;
  buf.reserve(img.pixels.size() * 3);
  for (const auto& p : img.pixels) {
    buf.push_back(p.r);
    buf.push_back(p.g);
    buf.push_back(p.b);
  }
  write_png_buffer(img.width, img.height, PNG_FORMAT_RGB, buf.data(), path);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename failed: " + path.string() + ": " + ec.message());
}

json to_json(const AnnotationSet& set) {
  json instances = json::array();
  for (const auto& inst : set.instances) {
    instances.push_back({{"id", inst.id()},
                         {"source", std::string(to_string(inst.source()))},
                         {"size_class", std::string(to_string(inst.size_class()))},
                         {"rle", inst.rle().counts}});
  }
  return {{"image_id", set.image_id},
          {"width", set.width},
          {"height", set.height},
          {"fully_labeled", set.fully_labeled},
          {"instances", std::move(instances)}};
}

AnnotationSet annotation_from_json(const json& j) {
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      static const std::array<std::string_view, 5> keys = {"image_id", "width", "height", "fully_labeled", "instances"};
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
        throw Error(ErrorCode::ConfigInvalid, "annotation: unknown key '" + it.key() + "'");
    }
    AnnotationSet set;
    set.image_id = j.at("image_id").get<std::string>();
    set.width = j.at("width").get<int>();
    set.height = j.at("height").get<int>();
    set.fully_labeled = j.at("fully_labeled").get<bool>();
    if (set.width <= 0 || set.height <= 0) throw Error(ErrorCode::ConfigInvalid, "annotation: non-positive dimensions");
    for (const auto& ji : j.at("instances")) {
      RunLengthEncoding rle{ji.at("rle").get<std::vector<std::uint32_t>>()};
      set.instances.push_back(Instance::from_rle(ji.at("id").get<int>(), set.width, set.height, rle,
                                                 parse_source(ji.at("source").get<std::string>()),
                                                 parse_size_class(ji.at("size_class").get<std::string>())));
    }
    set.validate();
    return set;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("annotation: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    throw Error(ErrorCode::ConfigInvalid, std::string("annotation: ") + e.what());
  }
}

std::string serialize_annotation(const AnnotationSet& set) { return to_json(set).dump() + "\n"; }

AnnotationSet parse_annotation(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("annotation: malformed JSON: ") + e.what());
  }
  return annotation_from_json(j);
}

AnnotationSet read_annotation(const fs::path& path) { return parse_annotation(read_text(path)); }

void write_annotation(const AnnotationSet& set, const fs::path& path) { write_atomic(path, serialize_annotation(set)); }

}  // namespace bubbleseg::io
