#include "autoscope/io.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace autoscope::io {

namespace {

void require_stream(const std::ios& s, const std::string& path, const char* what) {
    if (!s) throw std::runtime_error(std::string(what) + ": " + path);
}

std::uint32_t f32_bits(double v) {
    const float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    return u;
}

}  // namespace

void write_pgm(const ScalarField2D& field, const std::string& path) {
    // scale on float32-truncated values; see header comment
    float lo = static_cast<float>(field.values[0]), hi = lo;
    for (double v : field.values) {
        const float f = static_cast<float>(v);
        lo = std::min(lo, f);
        hi = std::max(hi, f);
    }
    const float range = hi - lo;
    std::ofstream os(path, std::ios::binary);
    require_stream(os, path, "cannot open for write");
    os << "P5\n" << field.width << " " << field.height << "\n255\n";
    for (double v : field.values) {
        int g = 0;
        if (range > 0.0f)
            g = static_cast<int>(std::lround((static_cast<float>(v) - lo) / range * 255.0f));
        g = std::clamp(g, 0, 255);
        os.put(static_cast<char>(g));
    }
    require_stream(os, path, "write failed");
}

void write_field(const ScalarField2D& field, const std::string& prefix) {
    nlohmann::ordered_json hdr;
    hdr["width"] = field.width;
    hdr["height"] = field.height;
    hdr["extent_nm"] = {field.extent.x, field.extent.y};
    hdr["dtype"] = "float32le";
    write_text(prefix + ".json", hdr.dump(2) + "\n");

    std::vector<std::uint8_t> raw;
    append_plane_f32(raw, field.values);
    write_bytes(prefix + ".raw", raw);
}

ScalarField2D read_field(const std::string& prefix) {
    const auto hdr = nlohmann::json::parse(read_text(prefix + ".json"));
    ScalarField2D f(hdr.at("width").get<int>(), hdr.at("height").get<int>(),
                    {hdr.at("extent_nm")[0].get<double>(), hdr.at("extent_nm")[1].get<double>()});
    const auto raw = read_bytes(prefix + ".raw");
    if (raw.size() != f.size() * 4)
        throw std::runtime_error("field raw size mismatch: " + prefix + ".raw");
    f.values = read_plane_f32(raw, 0, f.size());
    return f;
}

void append_plane_f32(std::vector<std::uint8_t>& out, const std::vector<double>& values) {
    out.reserve(out.size() + values.size() * 4);
    for (double v : values) {
        const std::uint32_t u = f32_bits(v);
        out.push_back(static_cast<std::uint8_t>(u & 0xFF));
        out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xFF));
        out.push_back(static_cast<std::uint8_t>((u >> 16) & 0xFF));
        out.push_back(static_cast<std::uint8_t>((u >> 24) & 0xFF));
    }
}

std::vector<double> read_plane_f32(const std::vector<std::uint8_t>& in, std::size_t plane,
                                   std::size_t plane_size) {
    const std::size_t base = plane * plane_size * 4;
    if (base + plane_size * 4 > in.size())
        throw std::runtime_error("raw plane out of range");
    std::vector<double> out(plane_size);
    for (std::size_t i = 0; i < plane_size; ++i) {
        const std::size_t o = base + i * 4;
        const std::uint32_t u = static_cast<std::uint32_t>(in[o]) |
                                (static_cast<std::uint32_t>(in[o + 1]) << 8) |
                                (static_cast<std::uint32_t>(in[o + 2]) << 16) |
                                (static_cast<std::uint32_t>(in[o + 3]) << 24);
        float f;
        std::memcpy(&f, &u, 4);
        out[i] = static_cast<double>(f);
    }
    return out;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream os(path, std::ios::binary);
    require_stream(os, path, "cannot open for write");
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    require_stream(os, path, "write failed");
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    require_stream(is, path, "cannot open for read");
    const auto n = is.tellg();
    is.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
    is.read(reinterpret_cast<char*>(bytes.data()), n);
    require_stream(is, path, "read failed");
    return bytes;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    require_stream(os, path, "cannot open for write");
    os << text;
    require_stream(os, path, "write failed");
}

std::string read_text(const std::string& path) {
    const auto bytes = read_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), compact implementation for manifest checksums.
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::uint32_t, 64> kSha256K = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

struct Sha256 {
    std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                      0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::array<std::uint8_t, 64> block{};
    std::size_t block_len = 0;
    std::uint64_t total = 0;

    void compress(const std::uint8_t* p) {
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, hh] = h;
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + s1 + ch + kSha256K[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t mj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + mj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    void update(const std::uint8_t* data, std::size_t len) {
        total += len;
        while (len > 0) {
            const std::size_t take = std::min(len, block.size() - block_len);
            std::memcpy(block.data() + block_len, data, take);
            block_len += take;
            data += take;
            len -= take;
            if (block_len == 64) {
                compress(block.data());
                block_len = 0;
            }
        }
    }

    std::string hex() {
        const std::uint64_t bits = total * 8;
        std::uint8_t pad = 0x80;
        update(&pad, 1);
        const std::uint8_t zero = 0;
        while (block_len != 56) update(&zero, 1);
        std::uint8_t lenb[8];
        for (int i = 0; i < 8; ++i) lenb[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
        update(lenb, 8);
        char out[65];
        for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
        return std::string(out, 64);
    }
};

}  // namespace

std::string sha256_hex(const std::uint8_t* data, std::size_t len) {
    Sha256 s;
    s.update(data, len);
    return s.hex();
}

std::string sha256_hex(const std::string& path) {
    const auto bytes = read_bytes(path);
    return sha256_hex(bytes.data(), bytes.size());
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// SVG line chart
// ---------------------------------------------------------------------------

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::vector<ChartSeries>& series) {
    const double W = 640, H = 400, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (first) { xmin = xmax = x; ymin = ymax = y; first = false; continue; }
            xmin = std::min(xmin, x); xmax = std::max(xmax, x);
            ymin = std::min(ymin, y); ymax = std::max(ymax, y);
        }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::string svg;
    char buf[256];
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">%s</text>\n",
                  title.c_str());
    svg += buf;
    // axes
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, H - mb,
                  W - mr, H - mb);
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, mt, ml,
                  H - mb);
    svg += buf;
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.4g</text>\n", px(fx),
                      H - mb + 16, fx);
        svg += buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.4g</text>\n", ml - 6,
                      py(fy) + 4, fy);
        svg += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n", (ml + W - mr) / 2,
                  H - 12, xlabel.c_str());
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"16\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">%s</text>\n",
                  (mt + H - mb) / 2, (mt + H - mb) / 2, ylabel.c_str());
    svg += buf;

    int ci = 0;
    for (const auto& s : series) {
        const char* color = kColors[ci % 6];
        std::string pts;
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
            pts += buf;
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%g\" y=\"%g\" fill=\"%s\">%s</text>\n", W - mr - 150.0,
                      mt + 16.0 * ci + 4, color, s.name.c_str());
        svg += buf;
        ++ci;
    }
    svg += "</svg>\n";
    write_text(path, svg);
}

}  // namespace autoscope::io
