// File codec tests. Round trips are checked byte for byte, reader validation
// is exercised by tampering with valid files, and checkpoint loading is
// checked against a model with different initial weights.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "healvit/graphs.hpp"
#include "healvit/grid.hpp"
#include "healvit/io.hpp"
#include "healvit/model.hpp"
#include "healvit/tensor.hpp"

namespace io = healvit::io;
namespace mdl = healvit::model;
namespace nn = healvit::nn;
using healvit::GridField;
using healvit::GridSpec;
using healvit::graphs::BipartiteGraph;

namespace {

std::string test_path(const std::string& leaf) {
  const auto dir = std::filesystem::temp_directory_path() / "healvit_io_test";
  std::filesystem::create_directories(dir);
  return (dir / leaf).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void spew(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GridField sample_field() {
  GridField f(GridSpec(3, 4), {"t2m", "z500"});
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    // 0.1 steps are not representable in f32, so narrowing is exercised.
    f.data[i] = 0.1 * static_cast<double>(i) - 1.0;
  }
  return f;
}

BipartiteGraph sample_graph() {
  BipartiteGraph g;
  g.source_count = 5;
  g.target_count = 3;
  g.targets = {0, 0, 1, 2, 2};
  g.sources = {1, 3, 0, 2, 4};
  return g;
}

mdl::ModelConfig smoke_config() {
  mdl::ModelConfig cfg;
  cfg.n_lat = 10;
  cfg.n_lon = 20;
  cfg.fine_level = 2;
  cfg.latent_dim = 8;
  cfg.processor_depth = 2;
  cfg.head_dim = 4;
  cfg.fine_window = 1;
  cfg.coarse_window = 1;
  return cfg;
}

mdl::NormStats sample_stats() {
  mdl::NormStats stats = mdl::NormStats::identity(54, 2);
  for (std::size_t i = 0; i < stats.mean.size(); ++i) {
    stats.mean[i] = 0.25 * static_cast<double>(i) - 3.0;
    stats.stddev[i] = 1.0 + 0.01 * static_cast<double>(i);
  }
  stats.static_mean = {0.5, -2.0};
  stats.static_stddev = {2.0, 0.125};
  return stats;
}

}  // namespace

TEST_CASE("grid tensor round trip narrows to f32 and is byte stable") {
  const GridField f = sample_field();
  const std::string p1 = test_path("field_a.hvgt");
  const std::string p2 = test_path("field_b.hvgt");
  io::write_grid_tensor(p1, f);

  const GridField r = io::read_grid_tensor(p1);
  CHECK(r.grid.n_lat == 3);
  CHECK(r.grid.n_lon == 4);
  REQUIRE(r.channels == f.channels);
  REQUIRE(r.data.size() == f.data.size());
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    CHECK(r.data[i] == static_cast<double>(static_cast<float>(f.data[i])));
  }

  // Values already narrowed once survive a second trip unchanged.
  io::write_grid_tensor(p2, r);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(!std::filesystem::exists(p1 + ".tmp"));
}

TEST_CASE("grid tensor reader rejects corrupt files") {
  const std::string good = test_path("field_good.hvgt");
  io::write_grid_tensor(good, sample_field());
  const std::string bytes = slurp(good);

  const std::string bad = test_path("field_bad.hvgt");

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  spew(bad, wrong_magic);
  CHECK_THROWS_WITH_AS(io::read_grid_tensor(bad),
                       doctest::Contains("not a HVGT"), std::runtime_error);

  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  spew(bad, wrong_version);
  CHECK_THROWS_WITH_AS(io::read_grid_tensor(bad),
                       doctest::Contains("version"), std::runtime_error);

  spew(bad, bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_WITH_AS(io::read_grid_tensor(bad),
                       doctest::Contains("payload size"), std::runtime_error);

  spew(bad, bytes.substr(0, 10));
  CHECK_THROWS_WITH_AS(io::read_grid_tensor(bad),
                       doctest::Contains("truncated"), std::runtime_error);

  spew(bad, bytes + "zz");
  CHECK_THROWS_AS(io::read_grid_tensor(bad), std::runtime_error);

  CHECK_THROWS_WITH_AS(io::read_grid_tensor(test_path("absent.hvgt")),
                       doctest::Contains("cannot open"), std::runtime_error);
}

TEST_CASE("graph round trip preserves counts and canonical edge order") {
  const BipartiteGraph g = sample_graph();
  const std::string p1 = test_path("graph_a.hvgr");
  const std::string p2 = test_path("graph_b.hvgr");
  io::write_graph(p1, g);

  const BipartiteGraph r = io::read_graph(p1);
  CHECK(r.source_count == g.source_count);
  CHECK(r.target_count == g.target_count);
  CHECK(r.targets == g.targets);
  CHECK(r.sources == g.sources);

  io::write_graph(p2, r);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("graph reader rejects disorder and out-of-range edges") {
  const std::string good = test_path("graph_good.hvgr");
  io::write_graph(good, sample_graph());
  const std::string bytes = slurp(good);
  // Layout: 4 magic + 4 version + 8 + 8 + 8 header, then 8 bytes per edge.
  const std::size_t edges_at = 32;

  const std::string bad = test_path("graph_bad.hvgr");

  std::string swapped = bytes;
  for (std::size_t i = 0; i < 8; ++i) {
    std::swap(swapped[edges_at + i], swapped[edges_at + 8 + i]);
  }
  spew(bad, swapped);
  CHECK_THROWS_WITH_AS(io::read_graph(bad), doctest::Contains("canonical"),
                       std::runtime_error);

  std::string ranged = bytes;
  // Last edge keeps the sort order but points past source_count.
  ranged[bytes.size() - 4] = 'z';
  spew(bad, ranged);
  CHECK_THROWS_WITH_AS(io::read_graph(bad), doctest::Contains("out of range"),
                       std::runtime_error);

  spew(bad, bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_WITH_AS(io::read_graph(bad),
                       doctest::Contains("payload size"), std::runtime_error);
}

TEST_CASE("archive round trip keeps doubles bit exact") {
  const std::vector<io::NamedArray> arrays = {
      {"a", {2, 3}, {1.0, -0.1, 3e-300, 7.25, 0.0, -0.0}},
      {"b", {4}, {1e300, -1.5, 2.0, 0.3333333333333333}},
  };
  const std::string p1 = test_path("arch_a.hvck");
  const std::string p2 = test_path("arch_b.hvck");
  io::write_archive(p1, arrays);

  const std::vector<io::NamedArray> r = io::read_archive(p1);
  REQUIRE(r.size() == 2);
  CHECK(r[0].name == "a");
  CHECK(r[0].shape == arrays[0].shape);
  CHECK(r[0].values == arrays[0].values);
  CHECK(r[1].name == "b");
  CHECK(r[1].values == arrays[1].values);

  io::write_archive(p2, r);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("archive writer and reader reject malformed records") {
  CHECK_THROWS_WITH_AS(
      io::write_archive(test_path("never.hvck"), {{"bad", {2, 2}, {1.0}}}),
      doctest::Contains("shape does not match"), std::invalid_argument);
  CHECK_THROWS_AS(
      io::write_archive(test_path("never.hvck"), {{"", {1}, {1.0}}}),
      std::invalid_argument);

  const std::string good = test_path("arch_good.hvck");
  io::write_archive(good, {{"a", {2}, {1.0, 2.0}}});
  const std::string bytes = slurp(good);
  const std::string bad = test_path("arch_bad.hvck");

  // Header is 4 magic + 4 version + 4 records; the record starts with the
  // name ("a", 1 byte) and its dtype tag follows at offset 17.
  std::string wrong_dtype = bytes;
  wrong_dtype[17] = 3;
  spew(bad, wrong_dtype);
  CHECK_THROWS_WITH_AS(io::read_archive(bad),
                       doctest::Contains("unsupported dtype"),
                       std::runtime_error);

  spew(bad, bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(io::read_archive(bad), std::runtime_error);
}

TEST_CASE("checkpoint restores parameters and statistics exactly") {
  const auto cfg = smoke_config();
  mdl::HealVit a(cfg, 1);
  a.set_normalization(sample_stats());
  const std::string path = test_path("model.hvck");
  io::save_checkpoint(path, a.params(), a.normalization());

  mdl::HealVit b(cfg, 2);
  bool differed = false;
  for (std::size_t i = 0; i < a.params().entries().size(); ++i) {
    if (a.params().entries()[i]->value.v != b.params().entries()[i]->value.v) {
      differed = true;
    }
  }
  REQUIRE(differed);  // otherwise the load below proves nothing

  const mdl::NormStats stats = io::load_checkpoint(path, b.params());
  for (std::size_t i = 0; i < a.params().entries().size(); ++i) {
    const auto& pa = *a.params().entries()[i];
    const auto& pb = *b.params().entries()[i];
    CHECK(pa.name == pb.name);
    CHECK(pa.value.v == pb.value.v);
  }
  CHECK(stats.mean == a.normalization().mean);
  CHECK(stats.stddev == a.normalization().stddev);
  CHECK(stats.static_mean == a.normalization().static_mean);
  CHECK(stats.static_stddev == a.normalization().static_stddev);
}

TEST_CASE("checkpoint loading rejects unknown, missing, or misshapen records") {
  const auto cfg = smoke_config();
  mdl::HealVit a(cfg, 1);
  a.set_normalization(sample_stats());
  const std::string path = test_path("model_base.hvck");
  io::save_checkpoint(path, a.params(), a.normalization());
  const std::vector<io::NamedArray> records = io::read_archive(path);
  const std::string bad = test_path("model_bad.hvck");

  {
    std::vector<io::NamedArray> extra = records;
    extra.push_back({"mystery", {1}, {0.0}});
    io::write_archive(bad, extra);
    mdl::HealVit b(cfg, 2);
    CHECK_THROWS_WITH_AS(io::load_checkpoint(bad, b.params()),
                         doctest::Contains("unknown record mystery"),
                         std::runtime_error);
  }
  {
    std::vector<io::NamedArray> missing;
    for (const auto& r : records) {
      if (r.name != a.params().entries()[0]->name) missing.push_back(r);
    }
    io::write_archive(bad, missing);
    mdl::HealVit b(cfg, 2);
    CHECK_THROWS_WITH_AS(io::load_checkpoint(bad, b.params()),
                         doctest::Contains("missing parameters"),
                         std::runtime_error);
  }
  {
    std::vector<io::NamedArray> shapes = records;
    bool transposed = false;
    for (auto& r : shapes) {
      if (r.shape.size() == 2 && r.shape[0] != r.shape[1]) {
        std::swap(r.shape[0], r.shape[1]);
        transposed = true;
        break;
      }
    }
    REQUIRE(transposed);
    io::write_archive(bad, shapes);
    mdl::HealVit b(cfg, 2);
    CHECK_THROWS_WITH_AS(io::load_checkpoint(bad, b.params()),
                         doctest::Contains("shape does not match"),
                         std::runtime_error);
  }
  {
    std::vector<io::NamedArray> no_stats;
    for (const auto& r : records) {
      if (r.name != "norm.mean") no_stats.push_back(r);
    }
    io::write_archive(bad, no_stats);
    mdl::HealVit b(cfg, 2);
    CHECK_THROWS_WITH_AS(io::load_checkpoint(bad, b.params()),
                         doctest::Contains("missing norm statistics"),
                         std::runtime_error);
  }
}

TEST_CASE("csv writer emits exact rows and rejects malformed cells") {
  const std::string path = test_path("table.csv");
  io::write_csv(path, {"a", "b"}, {{"1", "2"}, {"3", "x y"}});
  CHECK(slurp(path) == "a,b\n1,2\n3,x y\n");

  CHECK_THROWS_WITH_AS(io::write_csv(path, {"a", "b"}, {{"1"}}),
                       doctest::Contains("row width"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(io::write_csv(path, {"a"}, {{"1,2"}}),
                       doctest::Contains("delimiter"), std::invalid_argument);
}

TEST_CASE("log-log svg plots positive series and rejects bad input") {
  const std::vector<double> xs = {1.0, 10.0, 100.0, 1000.0};
  const std::vector<double> ys = {5.0, 0.5, 0.005, 5e-6};
  const std::string svg =
      io::svg_loglog_polyline(xs, ys, "wavenumber", "power");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("wavenumber") != std::string::npos);
  CHECK(svg.find("power") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  CHECK_THROWS_WITH_AS(io::svg_loglog_polyline({1.0, 2.0}, {1.0, 0.0}, "x", "y"),
                       doctest::Contains("positive"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(io::svg_loglog_polyline({1.0}, {1.0}, "x", "y"),
                       doctest::Contains("two or more"), std::invalid_argument);
}
