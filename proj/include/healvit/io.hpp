#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "healvit/graphs.hpp"
#include "healvit/grid.hpp"
#include "healvit/model.hpp"
#include "healvit/tensor.hpp"

// File codecs. All on-disk integers and floats are little-endian regardless
// of host order. Every writer writes to "<path>.tmp" in the same directory
// and renames, so readers never observe a half-written file. Write-read-write
// round trips are byte-identical for all three binary formats.
namespace healvit::io {

// Grid tensor ("HVGT"): header (magic, u32 version, u32 channels, u32 n_lat,
// u32 n_lon, then per channel u32 length + name bytes), payload 32-bit floats
// channel-major then row-major (latitude descending, longitude ascending).
// Values are doubles in memory and narrowed to f32 on disk.
void write_grid_tensor(const std::string& path, const GridField& f);
GridField read_grid_tensor(const std::string& path);

// Bipartite graph ("HVGR"): header (magic, u32 version, u64 source_count,
// u64 target_count, u64 edge_count), then one (target, source) u32 pair per
// edge in canonical order, sorted by (target, source).
void write_graph(const std::string& path, const graphs::BipartiteGraph& g);
graphs::BipartiteGraph read_graph(const std::string& path);

// Named-array archive ("HVCK"): header (magic, u32 version, u32 records),
// then per record u32 name length + bytes, u32 dtype tag (0 = f64), u32 rank,
// rank u64 extents, and the raw values.
struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};
void write_archive(const std::string& path,
                   const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_archive(const std::string& path);

// Model checkpoint: every parameter of the store as a named array, plus the
// normalization statistics under "norm.*" names.
void save_checkpoint(const std::string& path, const nn::ParamStore& params,
                     const model::NormStats& stats);
// Fills the store's parameters by name (shapes must match) and returns the
// stats. Raises on unknown, missing, or misshapen records.
model::NormStats load_checkpoint(const std::string& path,
                                 nn::ParamStore& params);

// Comma-separated rows, one header row first. Cells must not contain commas
// or newlines.
void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Self-contained SVG with one polyline through (x, y) points on log10-log10
// axes; non-positive values are rejected. Returns the document so callers
// can embed it; write_text stores it.
std::string svg_loglog_polyline(const std::vector<double>& xs,
                                const std::vector<double>& ys,
                                const std::string& x_label,
                                const std::string& y_label);
void write_text(const std::string& path, const std::string& content);

}  // namespace healvit::io
