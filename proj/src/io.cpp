#include "healvit/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace healvit::io {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF64 = 0;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  put_u32(out, bits);
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

// Bounds-checked sequential reader over a loaded file.
class Cursor {
 public:
  Cursor(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    }
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    }
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v = 0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v = 0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void expect_magic(const char* magic) {
    if (bytes(4) != magic) {
      throw std::runtime_error(path_ + ": not a " + magic + " file");
    }
    const std::uint32_t version = u32();
    if (version != kVersion) {
      throw std::runtime_error(path_ + ": unsupported " + magic + " version " +
                               std::to_string(version));
    }
  }

  std::size_t remaining() const { return data_.size() - pos_; }

  void finish() const {
    if (pos_ != data_.size()) {
      throw std::runtime_error(path_ + ": trailing bytes after payload");
    }
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw std::runtime_error(path_ + ": " + why);
  }

 private:
  std::uint8_t byte() { return static_cast<std::uint8_t>(data_[pos_++]); }

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw std::runtime_error(path_ + ": truncated file");
    }
  }

  const std::string& data_;
  const std::string path_;
  std::size_t pos_ = 0;
};

std::string load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) {
    throw std::runtime_error(path + ": read failed");
  }
  return data;
}

// Write-temp-then-rename keeps partially written files invisible.
void store_file(const std::string& path, const std::string& data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out.good()) throw std::runtime_error(tmp + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error(path + ": rename from temporary failed");
  }
}

std::string read_name(Cursor& c, std::size_t cap = 4096) {
  const std::uint32_t len = c.u32();
  if (len == 0 || len > cap) c.fail("bad name length");
  return c.bytes(len);
}

}  // namespace

void write_grid_tensor(const std::string& path, const GridField& f) {
  if (f.channels.empty()) {
    throw std::invalid_argument("write_grid_tensor: field has no channels");
  }
  std::string out;
  out += "HVGT";
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(f.channel_count()));
  put_u32(out, static_cast<std::uint32_t>(f.grid.n_lat));
  put_u32(out, static_cast<std::uint32_t>(f.grid.n_lon));
  for (const std::string& name : f.channels) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
  }
  for (const double v : f.data) put_f32(out, static_cast<float>(v));
  store_file(path, out);
}

GridField read_grid_tensor(const std::string& path) {
  const std::string data = load_file(path);
  Cursor c(data, path);
  c.expect_magic("HVGT");
  const std::uint32_t channels = c.u32();
  const std::uint32_t n_lat = c.u32();
  const std::uint32_t n_lon = c.u32();
  if (channels == 0 || channels > 4096) c.fail("bad channel count");
  if (n_lat < 2 || n_lon < 2 || n_lat > 100000 || n_lon > 100000) {
    c.fail("bad grid shape");
  }
  std::vector<std::string> names;
  names.reserve(channels);
  for (std::uint32_t i = 0; i < channels; ++i) names.push_back(read_name(c));
  for (std::uint32_t i = 0; i < channels; ++i) {
    for (std::uint32_t j = 0; j < i; ++j) {
      if (names[i] == names[j]) c.fail("duplicate channel " + names[i]);
    }
  }
  GridField f(GridSpec(static_cast<int>(n_lat), static_cast<int>(n_lon)),
              std::move(names));
  if (c.remaining() != f.data.size() * 4) c.fail("payload size mismatch");
  for (double& v : f.data) v = static_cast<double>(c.f32());
  c.finish();
  return f;
}

void write_graph(const std::string& path, const graphs::BipartiteGraph& g) {
  std::string out;
  out += "HVGR";
  put_u32(out, kVersion);
  put_u64(out, static_cast<std::uint64_t>(g.source_count));
  put_u64(out, static_cast<std::uint64_t>(g.target_count));
  put_u64(out, g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    put_u32(out, g.targets[e]);
    put_u32(out, g.sources[e]);
  }
  store_file(path, out);
}

graphs::BipartiteGraph read_graph(const std::string& path) {
  const std::string data = load_file(path);
  Cursor c(data, path);
  c.expect_magic("HVGR");
  graphs::BipartiteGraph g;
  g.source_count = static_cast<std::int64_t>(c.u64());
  g.target_count = static_cast<std::int64_t>(c.u64());
  const std::uint64_t edges = c.u64();
  if (g.source_count <= 0 || g.target_count <= 0) c.fail("bad node counts");
  if (c.remaining() != edges * 8) c.fail("payload size mismatch");
  g.targets.reserve(edges);
  g.sources.reserve(edges);
  for (std::uint64_t e = 0; e < edges; ++e) {
    const std::uint32_t t = c.u32();
    const std::uint32_t s = c.u32();
    if (t >= g.target_count || s >= g.source_count) c.fail("edge out of range");
    if (e > 0 && (t < g.targets.back() ||
                  (t == g.targets.back() && s <= g.sources.back()))) {
      c.fail("edges not in canonical (target, source) order");
    }
    g.targets.push_back(t);
    g.sources.push_back(s);
  }
  c.finish();
  return g;
}

void write_archive(const std::string& path,
                   const std::vector<NamedArray>& arrays) {
  std::string out;
  out += "HVCK";
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(arrays.size()));
  for (const NamedArray& a : arrays) {
    if (a.name.empty() || a.name.size() > 4096) {
      throw std::invalid_argument("write_archive: bad array name");
    }
    std::size_t expect = 1;
    for (const std::size_t d : a.shape) expect *= d;
    if (expect != a.values.size()) {
      throw std::invalid_argument("write_archive: " + a.name +
                                  ": shape does not match value count");
    }
    put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_u32(out, kDtypeF64);
    put_u32(out, static_cast<std::uint32_t>(a.shape.size()));
    for (const std::size_t d : a.shape) put_u64(out, d);
    for (const double v : a.values) put_f64(out, v);
  }
  store_file(path, out);
}

std::vector<NamedArray> read_archive(const std::string& path) {
  const std::string data = load_file(path);
  Cursor c(data, path);
  c.expect_magic("HVCK");
  const std::uint32_t records = c.u32();
  std::vector<NamedArray> arrays;
  arrays.reserve(records);
  for (std::uint32_t i = 0; i < records; ++i) {
    NamedArray a;
    a.name = read_name(c);
    if (c.u32() != kDtypeF64) c.fail(a.name + ": unsupported dtype");
    const std::uint32_t rank = c.u32();
    if (rank > 8) c.fail(a.name + ": bad rank");
    std::size_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint64_t d = c.u64();
      if (d == 0 || d > c.remaining()) c.fail(a.name + ": bad extent");
      count *= static_cast<std::size_t>(d);
      a.shape.push_back(static_cast<std::size_t>(d));
    }
    if (count > c.remaining() / 8) c.fail(a.name + ": values truncated");
    a.values.resize(count);
    for (double& v : a.values) v = c.f64();
    arrays.push_back(std::move(a));
  }
  c.finish();
  return arrays;
}

void save_checkpoint(const std::string& path, const nn::ParamStore& params,
                     const model::NormStats& stats) {
  std::vector<NamedArray> arrays;
  arrays.reserve(params.entries().size() + 4);
  for (const auto& p : params.entries()) {
    arrays.push_back({p->name, p->value.shape, p->value.v});
  }
  const auto stat = [&](const char* name, const std::vector<double>& v) {
    arrays.push_back({name, {v.size()}, v});
  };
  stat("norm.mean", stats.mean);
  stat("norm.stddev", stats.stddev);
  stat("norm.static_mean", stats.static_mean);
  stat("norm.static_stddev", stats.static_stddev);
  write_archive(path, arrays);
}

model::NormStats load_checkpoint(const std::string& path,
                                 nn::ParamStore& params) {
  model::NormStats stats;
  std::size_t loaded = 0;
  for (NamedArray& a : read_archive(path)) {
    if (a.name == "norm.mean") {
      stats.mean = std::move(a.values);
    } else if (a.name == "norm.stddev") {
      stats.stddev = std::move(a.values);
    } else if (a.name == "norm.static_mean") {
      stats.static_mean = std::move(a.values);
    } else if (a.name == "norm.static_stddev") {
      stats.static_stddev = std::move(a.values);
    } else if (nn::Parameter* p = params.find(a.name)) {
      if (p->value.shape != a.shape) {
        throw std::runtime_error(path + ": " + a.name +
                                 ": shape does not match the model");
      }
      p->value.v = std::move(a.values);
      ++loaded;
    } else {
      throw std::runtime_error(path + ": unknown record " + a.name);
    }
  }
  if (loaded != params.entries().size()) {
    throw std::runtime_error(path + ": checkpoint is missing parameters");
  }
  if (stats.mean.empty() || stats.stddev.empty() || stats.static_mean.empty() ||
      stats.static_stddev.empty()) {
    throw std::runtime_error(path + ": checkpoint is missing norm statistics");
  }
  return stats;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  const auto append_row = [&](const std::vector<std::string>& row) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("write_csv: row width differs from header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i].find_first_of(",\n") != std::string::npos) {
        throw std::invalid_argument("write_csv: cell contains a delimiter");
      }
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  };
  append_row(header);
  for (const auto& row : rows) append_row(row);
  store_file(path, out);
}

std::string svg_loglog_polyline(const std::vector<double>& xs,
                                const std::vector<double>& ys,
                                const std::string& x_label,
                                const std::string& y_label) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("svg_loglog_polyline: need two or more points");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw std::invalid_argument(
          "svg_loglog_polyline: log axes need positive values");
    }
  }
  const double kW = 640, kH = 480, kPad = 56;
  double x0 = std::log10(xs[0]), x1 = x0, y0 = std::log10(ys[0]), y1 = y0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    x0 = std::min(x0, std::log10(xs[i]));
    x1 = std::max(x1, std::log10(xs[i]));
    y0 = std::min(y0, std::log10(ys[i]));
    y1 = std::max(y1, std::log10(ys[i]));
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  const auto px = [&](double x) {
    return kPad + (std::log10(x) - x0) / (x1 - x0) * (kW - 2 * kPad);
  };
  const auto py = [&](double y) {
    return kH - kPad - (std::log10(y) - y0) / (y1 - y0) * (kH - 2 * kPad);
  };
  char buf[160];
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
         "height=\"480\" viewBox=\"0 0 640 480\">\n";
  svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                "fill=\"none\" stroke=\"black\"/>\n",
                kPad, kPad, kW - 2 * kPad, kH - 2 * kPad);
  svg += buf;
  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
         "points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(xs[i]),
                  py(ys[i]));
    svg += buf;
  }
  svg += "\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" "
                "text-anchor=\"middle\">%s</text>\n",
                kW / 2, kH - 16.0, x_label.c_str());
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%.1f\" font-size=\"13\" "
                "text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">"
                "%s</text>\n",
                kH / 2, kH / 2, y_label.c_str());
  svg += buf;
  const auto tick = [&](double v, bool x_axis) {
    if (x_axis) {
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                    "text-anchor=\"middle\">1e%d</text>\n",
                    px(v), kH - kPad + 16.0,
                    static_cast<int>(std::lround(std::log10(v))));
    } else {
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                    "text-anchor=\"end\">1e%d</text>\n",
                    kPad - 6.0, py(v) + 4.0,
                    static_cast<int>(std::lround(std::log10(v))));
    }
    svg += buf;
  };
  tick(std::pow(10.0, std::ceil(x0)), true);
  tick(std::pow(10.0, std::floor(x1)), true);
  tick(std::pow(10.0, std::ceil(y0)), false);
  tick(std::pow(10.0, std::floor(y1)), false);
  svg += "</svg>\n";
  return svg;
}

void write_text(const std::string& path, const std::string& content) {
  store_file(path, content);
}

}  // namespace healvit::io
