// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/io/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include <png.h>

#include "gsplane/core/errors.hpp"

namespace gsp {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t quantize(double v) {
    double q = std::round(v * 255.0);
    if (q < 0.0)
        q = 0.0;
    if (q > 255.0)
        q = 255.0;
    return static_cast<uint8_t>(q);
}

void write_png_bytes(const std::string& path, int width, int height, int channels,
                     const std::vector<uint8_t>& bytes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw IoError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write error: " + path);
    }
    png_init_io(png, fp.get());
    // Fixed compression settings keep output byte-identical across runs.
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(height));
    const size_t stride = static_cast<size_t>(width) * static_cast<size_t>(channels);
    for (int y = 0; y < height; ++y)
        rows[static_cast<size_t>(y)] =
            const_cast<png_bytep>(bytes.data() + static_cast<size_t>(y) * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<uint8_t> read_png_bytes(const std::string& path, int& width, int& height,
                                    int& channels) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw IoError("cannot open: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png read error: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    const png_byte color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    channels = static_cast<int>(png_get_channels(png, info));
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported channel count in " + path);
    }
    const size_t stride = static_cast<size_t>(width) * static_cast<size_t>(channels);
    std::vector<uint8_t> bytes(stride * static_cast<size_t>(height));
    std::vector<png_bytep> rows(static_cast<size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<size_t>(y)] = bytes.data() + static_cast<size_t>(y) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return bytes;
}

void put_le_float(std::vector<uint8_t>& out, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    out.push_back(static_cast<uint8_t>(u & 0xff));
    out.push_back(static_cast<uint8_t>((u >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((u >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((u >> 24) & 0xff));
}

float get_le_float(const uint8_t* p) {
    const uint32_t u = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                       (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

std::vector<uint8_t> read_file(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw IoError("cannot open: " + path);
    std::fseek(fp.get(), 0, SEEK_END);
    const long sz = std::ftell(fp.get());
    std::fseek(fp.get(), 0, SEEK_SET);
    std::vector<uint8_t> buf(static_cast<size_t>(sz < 0 ? 0 : sz));
    if (!buf.empty() && std::fread(buf.data(), 1, buf.size(), fp.get()) != buf.size())
        throw IoError("short read: " + path);
    return buf;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw IoError("cannot open for writing: " + path);
    if (!bytes.empty() && std::fwrite(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size())
        throw IoError("short write: " + path);
}

struct PfmHeader {
    int width;
    int height;
    int channels;
    size_t data_offset;
};

PfmHeader parse_pfm_header(const std::vector<uint8_t>& buf, const std::string& path) {
    // "Pf\n<w> <h>\n<scale>\n" or "PF" for 3 channels.
    size_t pos = 0;
    auto token = [&]() {
        while (pos < buf.size() && std::isspace(buf[pos]))
            ++pos;
        size_t start = pos;
        while (pos < buf.size() && !std::isspace(buf[pos]))
            ++pos;
        std::string t(buf.begin() + static_cast<long>(start), buf.begin() + static_cast<long>(pos));
        if (pos < buf.size())
            ++pos; // consume one whitespace after the token
        return t;
    };
    const std::string magic = token();
    PfmHeader h{};
    if (magic == "Pf")
        h.channels = 1;
    else if (magic == "PF")
        h.channels = 3;
    else
        throw IoError("not a PFM file: " + path);
    h.width = std::stoi(token());
    h.height = std::stoi(token());
    const double scale = std::stod(token());
    if (scale >= 0.0)
        throw IoError("big-endian PFM not supported: " + path);
    h.data_offset = pos;
    if (h.width <= 0 || h.height <= 0)
        throw IoError("bad PFM dimensions: " + path);
    return h;
}

} // namespace

void write_png(const std::string& path, const ImageBuffer& img) {
    std::vector<uint8_t> bytes;
    bytes.reserve(img.data.size());
    for (double v : img.data)
        bytes.push_back(quantize(v));
    write_png_bytes(path, img.width, img.height, img.channels, bytes);
}

ImageBuffer read_png(const std::string& path) {
    int w, h, c;
    const auto bytes = read_png_bytes(path, w, h, c);
    ImageBuffer img(w, h, c);
    for (size_t i = 0; i < bytes.size(); ++i)
        img.data[i] = static_cast<double>(bytes[i]) / 255.0;
    return img;
}

void write_mask_png(const std::string& path, int width, int height,
                    const std::vector<uint8_t>& mask) {
    if (mask.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
        throw DimensionMismatch("mask size does not match dimensions");
    std::vector<uint8_t> bytes(mask.size());
    for (size_t i = 0; i < mask.size(); ++i)
        bytes[i] = mask[i] ? 255 : 0;
    write_png_bytes(path, width, height, 1, bytes);
}

std::vector<uint8_t> read_mask_png(const std::string& path, int& width, int& height) {
    int c;
    const auto bytes = read_png_bytes(path, width, height, c);
    if (c != 1)
        throw IoError("mask PNG must be grayscale: " + path);
    std::vector<uint8_t> mask(bytes.size());
    for (size_t i = 0; i < bytes.size(); ++i)
        mask[i] = bytes[i] >= 128 ? 1 : 0;
    return mask;
}

void write_pfm(const std::string& path, const DepthMap& depth) {
    std::vector<uint8_t> out;
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "Pf\n%d %d\n-1.0\n", depth.width,
                                depth.height);
    out.insert(out.end(), header, header + n);
    for (int y = depth.height - 1; y >= 0; --y)
        for (int x = 0; x < depth.width; ++x)
            put_le_float(out, depth.valid(x, y) ? static_cast<float>(depth.at(x, y)) : 0.0f);
    write_file(path, out);
}

DepthMap read_pfm(const std::string& path) {
    const auto buf = read_file(path);
    const auto h = parse_pfm_header(buf, path);
    if (h.channels != 1)
        throw IoError("expected single-channel PFM: " + path);
    const size_t need = h.data_offset + static_cast<size_t>(h.width) * static_cast<size_t>(h.height) * 4;
    if (buf.size() < need)
        throw IoError("truncated PFM: " + path);
    DepthMap out(h.width, h.height);
    size_t pos = h.data_offset;
    for (int y = h.height - 1; y >= 0; --y)
        for (int x = 0; x < h.width; ++x) {
            const float v = get_le_float(buf.data() + pos);
            pos += 4;
            out.set(x, y, static_cast<double>(v), v > 0.0f && std::isfinite(v));
        }
    return out;
}

void write_pfm3(const std::string& path, int width, int height, const std::vector<Vec3>& field) {
    if (field.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
        throw DimensionMismatch("field size does not match dimensions");
    std::vector<uint8_t> out;
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "PF\n%d %d\n-1.0\n", width, height);
    out.insert(out.end(), header, header + n);
    for (int y = height - 1; y >= 0; --y)
        for (int x = 0; x < width; ++x) {
            const Vec3& v = field[static_cast<size_t>(y) * static_cast<size_t>(width) +
                                  static_cast<size_t>(x)];
            put_le_float(out, static_cast<float>(v.x()));
            put_le_float(out, static_cast<float>(v.y()));
            put_le_float(out, static_cast<float>(v.z()));
        }
    write_file(path, out);
}

std::vector<Vec3> read_pfm3(const std::string& path, int& width, int& height) {
    const auto buf = read_file(path);
    const auto h = parse_pfm_header(buf, path);
    if (h.channels != 3)
        throw IoError("expected 3-channel PFM: " + path);
    width = h.width;
    height = h.height;
    const size_t need =
        h.data_offset + static_cast<size_t>(h.width) * static_cast<size_t>(h.height) * 12;
    if (buf.size() < need)
        throw IoError("truncated PFM: " + path);
    std::vector<Vec3> field(static_cast<size_t>(width) * static_cast<size_t>(height));
    size_t pos = h.data_offset;
    for (int y = height - 1; y >= 0; --y)
        for (int x = 0; x < width; ++x) {
            Vec3& v = field[static_cast<size_t>(y) * static_cast<size_t>(width) +
                            static_cast<size_t>(x)];
            v.x() = static_cast<double>(get_le_float(buf.data() + pos));
            v.y() = static_cast<double>(get_le_float(buf.data() + pos + 4));
            v.z() = static_cast<double>(get_le_float(buf.data() + pos + 8));
            pos += 12;
        }
    return field;
}

} // namespace gsp
