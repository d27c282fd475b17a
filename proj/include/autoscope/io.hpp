#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoscope/field.hpp"

namespace autoscope::io {

/// 8-bit binary PGM (P5), min-max scaled. The scaling is computed on the
/// float32-truncated values so that a field reloaded from its .raw file
/// re-emits byte-identical PGM bytes.
void write_pgm(const ScalarField2D& field, const std::string& path);

/// Canonical field pair: <prefix>.json header + <prefix>.raw little-endian
/// float32 plane. Raw float32 is the canonical precision for persisted fields.
void write_field(const ScalarField2D& field, const std::string& prefix);
ScalarField2D read_field(const std::string& prefix);

/// Write one or more float32 planes into a single .raw file (used by sample
/// serialization); header bookkeeping is the caller's.
void append_plane_f32(std::vector<std::uint8_t>& out, const std::vector<double>& values);
std::vector<double> read_plane_f32(const std::vector<std::uint8_t>& in, std::size_t plane,
                                   std::size_t plane_size);

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_bytes(const std::string& path);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

std::string sha256_hex(const std::uint8_t* data, std::size_t len);
std::string sha256_hex(const std::string& path);

/// Deterministic double formatting for CSV ("%.17g", round-trip exact).
std::string fmt_double(double v);

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

/// Minimal SVG line chart (axes, polylines, legend). Good enough for the
/// report figures; no external plotting dependency.
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::vector<ChartSeries>& series);

}  // namespace autoscope::io
