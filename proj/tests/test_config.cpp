// Run-config parser tests: full coverage of keys, comment and whitespace
// handling, and the error cases that keep typos from silently defaulting.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "healvit/config.hpp"

namespace cfg = healvit::config;

TEST_CASE("every key parses into its field") {
  const cfg::RunConfig c = cfg::parse_run_config(R"(
# model geometry
n_lat = 46
n_lon = 90            # trailing comment
fine_level = 3
latent_dim = 16
processor_depth = 4
head_dim = 8
fine_window = 3
coarse_window = 2
shared_edge_embeddings = true
threads = 2

beta1 = 0.85
beta2 = 0.97
weight_decay = 0.05
peak_lr = 2.5e-4
fine_tune_lr = 1e-7
epsilon = 1e-9
warmup_fraction = 0.05

phases = 1x500@cosine:2.5e-4,2x50@fixed:1e-7
seed = 2026
batch_size = 4
data_dir = /tmp/frames
out_path = model.hvck
trace_path = loss.csv
)");
  CHECK(c.model.n_lat == 46);
  CHECK(c.model.n_lon == 90);
  CHECK(c.model.fine_level == 3);
  CHECK(c.model.latent_dim == 16);
  CHECK(c.model.processor_depth == 4);
  CHECK(c.model.head_dim == 8);
  CHECK(c.model.fine_window == 3);
  CHECK(c.model.coarse_window == 2);
  CHECK(c.model.shared_edge_embeddings == true);
  CHECK(c.model.threads == 2);
  CHECK(c.optimizer.beta1 == 0.85);
  CHECK(c.optimizer.beta2 == 0.97);
  CHECK(c.optimizer.weight_decay == 0.05);
  CHECK(c.optimizer.peak_lr == 2.5e-4);
  CHECK(c.optimizer.fine_tune_lr == 1e-7);
  CHECK(c.optimizer.epsilon == 1e-9);
  CHECK(c.optimizer.warmup_fraction == 0.05);
  CHECK(c.phases == "1x500@cosine:2.5e-4,2x50@fixed:1e-7");
  CHECK(c.seed == 2026);
  CHECK(c.batch_size == 4);
  CHECK(c.data_dir == "/tmp/frames");
  CHECK(c.out_path == "model.hvck");
  CHECK(c.trace_path == "loss.csv");
}

TEST_CASE("absent keys keep their defaults") {
  const cfg::RunConfig c = cfg::parse_run_config("latent_dim = 32\n");
  CHECK(c.model.latent_dim == 32);
  CHECK(c.model.n_lat == 46);
  CHECK(c.model.shared_edge_embeddings == false);
  CHECK(c.optimizer.beta1 == 0.9);
  CHECK(c.seed == 0);
  CHECK(c.batch_size == 1);
  CHECK(c.phases.empty());
  CHECK(c.data_dir.empty());
}

TEST_CASE("comment-only and blank input parses to defaults") {
  const cfg::RunConfig c = cfg::parse_run_config("# nothing\n\n   \n# more\n");
  CHECK(c.model.n_lat == 46);
}

TEST_CASE("malformed input is rejected with the offending detail") {
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("latent_dim 32\n"),
                       doctest::Contains("line 1"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("n_lat = 10\nwat = 1\n"),
                       doctest::Contains("unknown key wat"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("n_lat = 10\nn_lat = 12\n"),
                       doctest::Contains("duplicate key n_lat"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("n_lat =\n"),
                       doctest::Contains("empty key or value"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("n_lat = ten\n"),
                       doctest::Contains("key n_lat"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("n_lat = 10x\n"),
                       doctest::Contains("expected an integer"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("beta1 = 0.9.9\n"),
                       doctest::Contains("expected a number"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("shared_edge_embeddings = yes\n"),
                       doctest::Contains("true or false"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(cfg::parse_run_config("seed = -3\n"),
                       doctest::Contains("unsigned"), std::invalid_argument);
}

TEST_CASE("load_run_config reads files and names missing ones") {
  const auto dir =
      std::filesystem::temp_directory_path() / "healvit_config_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.cfg").string();
  {
    std::ofstream out(path);
    out << "latent_dim = 24\nseed = 7\n";
  }
  const cfg::RunConfig c = cfg::load_run_config(path);
  CHECK(c.model.latent_dim == 24);
  CHECK(c.seed == 7);

  CHECK_THROWS_WITH_AS(cfg::load_run_config((dir / "absent.cfg").string()),
                       doctest::Contains("cannot open"), std::runtime_error);
}
