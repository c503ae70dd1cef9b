// Command-line entry point: mesh, window, and graph inspection, synthetic
// data generation, curriculum training, autoregressive rollout, forecast
// evaluation, and zonal spectra. Exit codes: 0 success, 1 validation or
// runtime failure, 2 usage error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "healvit/config.hpp"
#include "healvit/evaluation.hpp"
#include "healvit/graphs.hpp"
#include "healvit/grid.hpp"
#include "healvit/healpix.hpp"
#include "healvit/io.hpp"
#include "healvit/model.hpp"
#include "healvit/training.hpp"
#include "healvit/windowing.hpp"

namespace fs = std::filesystem;
namespace cfgns = healvit::config;
namespace ev = healvit::eval;
namespace gr = healvit::graphs;
namespace hpx = healvit::hpx;
namespace io = healvit::io;
namespace mdl = healvit::model;
namespace tr = healvit::train;
namespace win = healvit::windowing;
using healvit::GridField;
using healvit::GridSpec;

namespace {

// Full double precision, so identical runs write identical text.
std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

GridSpec parse_grid(const std::string& s) {
  const std::size_t x = s.find('x');
  std::size_t used_lat = 0, used_lon = 0;
  int lat = 0, lon = 0;
  try {
    lat = std::stoi(s.substr(0, x), &used_lat);
    lon = std::stoi(s.substr(x + 1), &used_lon);
  } catch (const std::exception&) {
    throw std::invalid_argument("--grid expects LATxLON, got \"" + s + "\"");
  }
  if (x == std::string::npos || used_lat != x || used_lon != s.size() - x - 1) {
    throw std::invalid_argument("--grid expects LATxLON, got \"" + s + "\"");
  }
  return GridSpec(lat, lon);
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("HV_SEED");
  if (s == nullptr) return std::nullopt;
  const std::string text(s);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != text.size() || text.empty() || text[0] == '-') {
    throw std::invalid_argument("HV_SEED is not an unsigned integer: \"" +
                                text + "\"");
  }
  return static_cast<std::uint64_t>(v);
}

// Sorted .hvgt files of a directory, read as (filename, field) pairs.
std::vector<std::pair<std::string, GridField>> read_field_dir(
    const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error(dir + ": not a directory");
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() &&
        entry.path().extension() == ".hvgt") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  std::vector<std::pair<std::string, GridField>> fields;
  fields.reserve(names.size());
  for (const std::string& n : names) {
    fields.emplace_back(n, io::read_grid_tensor(dir + "/" + n));
  }
  return fields;
}

tr::Dataset load_dataset(const std::string& dir) {
  tr::Dataset data;
  data.statics = io::read_grid_tensor(dir + "/statics.hvgt");
  bool first = true;
  for (auto& [name, field] : read_field_dir(dir)) {
    if (name.rfind("frame_", 0) != 0) continue;
    if (first) {
      data.grid = field.grid;
      first = false;
    } else if (field.grid.n_lat != data.grid.n_lat ||
               field.grid.n_lon != data.grid.n_lon ||
               field.channels != data.frames.front().channels) {
      throw std::runtime_error(dir + "/" + name +
                               ": grid or channels differ from earlier frames");
    }
    data.frames.push_back(std::move(field));
  }
  if (data.frames.empty()) {
    throw std::runtime_error(dir + ": no frame_*.hvgt files");
  }
  if (data.statics.grid.n_lat != data.grid.n_lat ||
      data.statics.grid.n_lon != data.grid.n_lon) {
    throw std::runtime_error(dir + "/statics.hvgt: grid differs from frames");
  }
  return data;
}

struct MeshArgs {
  int level = 0;
};

void cmd_mesh(const MeshArgs& a) {
  const hpx::MeshLevel level(a.level);
  const double res = std::sqrt(41252.96 / static_cast<double>(level.num_pixels()));
  std::printf("level %d\n", level.n());
  std::printf("pixels %lld\n", static_cast<long long>(level.num_pixels()));
  std::printf("resolution_deg %.3f\n", res);
}

struct WindowsArgs {
  int level = 0;
  int window = 1;
  bool shifted = false;
  long long rect_nodes = 64800;   // 1-degree rectilinear transformer baseline
  long long rect_windows = 900;
};

void cmd_windows(const WindowsArgs& a) {
  const hpx::MeshLevel level(a.level);
  const win::WindowPartition part =
      a.shifted ? win::build_shifted_windows(level, a.window)
                : win::build_windows(level, a.window);
  const long long nodes = level.num_pixels();
  std::size_t covered = 0;
  for (const auto& w : part.windows) covered += w.size();
  std::printf("nodes %lld\n", nodes);
  std::printf("windows %zu\n", part.window_count());
  std::printf("max_window_size %zu\n", part.max_window_size());
  std::printf("covered_pixels %zu\n", covered);
  std::printf("resolution_deg %.3f\n",
              std::sqrt(41252.96 / static_cast<double>(nodes)));
  if (a.shifted) {
    std::size_t three = 0, four = 0;
    for (const auto& q : part.quadrants) {
      if (q.size() == 3) ++three;
      if (q.size() == 4) ++four;
    }
    std::printf("three_quadrant_windows %zu\n", three);
    std::printf("four_quadrant_windows %zu\n", four);
  } else {
    const double fn = 100.0 * static_cast<double>(a.rect_nodes - nodes) /
                      static_cast<double>(a.rect_nodes);
    const double fw =
        100.0 *
        static_cast<double>(a.rect_windows -
                            static_cast<long long>(part.window_count())) /
        static_cast<double>(a.rect_windows);
    std::printf("fewer_nodes_pct %.1f\n", fn);
    std::printf("fewer_windows_pct %.1f\n", fw);
  }
}

struct GraphArgs {
  std::string kind;
  std::string grid = "721x1440";
  int level = 0;
  int threads = 1;
  std::string out;
};

void cmd_graph(const GraphArgs& a) {
  const hpx::MeshLevel level(a.level);
  gr::BipartiteGraph g;
  if (a.kind == "g2m") {
    g = gr::build_grid2mesh(parse_grid(a.grid), level);
  } else if (a.kind == "m2g") {
    g = gr::build_mesh2grid(parse_grid(a.grid), level, a.threads);
  } else if (a.kind == "down") {
    g = gr::build_downsample(level);
  } else if (a.kind == "up") {
    g = gr::build_upsample(level, a.threads);
  } else {
    throw std::invalid_argument("--kind must be g2m, m2g, down, or up");
  }
  std::printf("sources %lld\n", static_cast<long long>(g.source_count));
  std::printf("targets %lld\n", static_cast<long long>(g.target_count));
  std::printf("edges %zu\n", g.edge_count());
  std::vector<std::uint32_t> in_degree(g.target_count, 0);
  for (const std::uint32_t t : g.targets) ++in_degree[t];
  std::uint32_t lo = in_degree.empty() ? 0 : in_degree[0], hi = lo;
  for (const std::uint32_t d : in_degree) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  std::printf("in_degree_min %u\n", lo);
  std::printf("in_degree_max %u\n", hi);
  if (!a.out.empty()) {
    io::write_graph(a.out, g);
    std::printf("out %s\n", a.out.c_str());
  }
}

struct SynthArgs {
  std::string grid = "46x90";
  int length = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_synth(const SynthArgs& a, const CLI::App& sub) {
  std::uint64_t seed = a.seed;
  if (const auto es = env_seed(); es && sub.count("--seed") == 0) seed = *es;
  if (a.length > 9999) {
    throw std::invalid_argument("synth: --length above 9999 breaks frame numbering");
  }
  const tr::Dataset data = tr::synth_dataset(parse_grid(a.grid), a.length, seed);
  fs::create_directories(a.out);
  io::write_grid_tensor(a.out + "/statics.hvgt", data.statics);
  for (std::size_t i = 0; i < data.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.hvgt", i);
    io::write_grid_tensor(a.out + "/" + name, data.frames[i]);
  }
  std::printf("frames %zu\n", data.frames.size());
  std::printf("channels %zu\n", data.frames.front().channel_count());
  std::printf("grid %dx%d\n", data.grid.n_lat, data.grid.n_lon);
  std::printf("out %s\n", a.out.c_str());
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string phases;
  std::string out;
  std::string trace;
  std::uint64_t seed = 0;
  int batch = 1;
  int threads = 1;
};

void cmd_train(const TrainArgs& a, const CLI::App& sub) {
  cfgns::RunConfig rc = cfgns::load_run_config(a.config);
  if (sub.count("--data")) rc.data_dir = a.data;
  if (sub.count("--phases")) rc.phases = a.phases;
  if (sub.count("--out")) rc.out_path = a.out;
  if (sub.count("--trace")) rc.trace_path = a.trace;
  if (sub.count("--batch")) rc.batch_size = a.batch;
  if (sub.count("--threads")) rc.model.threads = a.threads;
  std::uint64_t seed = rc.seed;
  if (const auto es = env_seed()) seed = *es;
  if (sub.count("--seed")) seed = a.seed;
  if (rc.data_dir.empty()) {
    throw std::invalid_argument("train: no data directory (--data or data_dir)");
  }
  if (rc.out_path.empty()) {
    throw std::invalid_argument("train: no checkpoint path (--out or out_path)");
  }
  if (rc.phases.empty()) {
    throw std::invalid_argument("train: no curriculum (--phases or phases)");
  }

  const auto phases = tr::parse_phase_spec(rc.phases);
  const tr::Dataset data = load_dataset(rc.data_dir);
  if (data.grid.n_lat != rc.model.n_lat || data.grid.n_lon != rc.model.n_lon) {
    throw std::runtime_error(
        "train: data grid " + std::to_string(data.grid.n_lat) + "x" +
        std::to_string(data.grid.n_lon) + " does not match the config grid " +
        std::to_string(rc.model.n_lat) + "x" + std::to_string(rc.model.n_lon));
  }

  mdl::HealVit m(rc.model, seed);
  m.set_normalization(tr::compute_norm_stats(data));
  // The trainer's window draws get their own stream, decoupled from init.
  const auto trace =
      tr::train_curriculum(m, data, phases, seed + 1, rc.optimizer, rc.batch_size);

  io::save_checkpoint(rc.out_path, m.params(), m.normalization());
  if (!rc.trace_path.empty()) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(trace.size());
    for (const tr::TraceRow& r : trace) {
      rows.push_back({std::to_string(r.global_step), std::to_string(r.phase),
                      std::to_string(r.ar_steps), fmt(r.lr), fmt(r.loss)});
    }
    io::write_csv(rc.trace_path, {"global_step", "phase", "ar_steps", "lr", "loss"},
                  rows);
    std::printf("trace %s\n", rc.trace_path.c_str());
  }
  std::printf("steps %zu\n", trace.size());
  std::printf("final_loss %s\n", fmt(trace.back().loss).c_str());
  std::printf("out %s\n", rc.out_path.c_str());
}

struct RolloutArgs {
  std::string config;
  std::string checkpoint;
  std::string init;
  std::string init_prev;
  std::string statics;
  int steps = 1;
  int threads = 1;
  std::string out;
};

void cmd_rollout(const RolloutArgs& a, const CLI::App& sub) {
  cfgns::RunConfig rc = cfgns::load_run_config(a.config);
  if (sub.count("--threads")) rc.model.threads = a.threads;
  mdl::HealVit m(rc.model, 0);  // weights come from the checkpoint
  m.set_normalization(io::load_checkpoint(a.checkpoint, m.params()));
  const GridField t0 = io::read_grid_tensor(a.init);
  const GridField tm1 = io::read_grid_tensor(a.init_prev);
  const GridField statics = io::read_grid_tensor(a.statics);
  const std::vector<GridField> forecast = m.rollout(t0, tm1, statics, a.steps);
  fs::create_directories(a.out);
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%02zu.hvgt", i + 1);
    io::write_grid_tensor(a.out + "/" + name, forecast[i]);
  }
  std::printf("steps %zu\n", forecast.size());
  std::printf("out %s\n", a.out.c_str());
}

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string channels;
  std::string out;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto pred = read_field_dir(a.pred);
  const auto truth = read_field_dir(a.truth);
  if (pred.empty()) throw std::runtime_error(a.pred + ": no .hvgt files");
  if (pred.size() != truth.size()) {
    throw std::runtime_error("evaluate: " + std::to_string(pred.size()) +
                             " prediction files vs " +
                             std::to_string(truth.size()) + " truth files");
  }
  const GridField& ref = truth.front().second;
  std::vector<GridField> pred_fields, truth_fields;
  for (const auto& [name, field] : pred) {
    if (field.grid.n_lat != ref.grid.n_lat ||
        field.grid.n_lon != ref.grid.n_lon || field.channels != ref.channels) {
      throw std::runtime_error(a.pred + "/" + name +
                               ": grid or channels differ from the truth");
    }
    pred_fields.push_back(field);
  }
  for (const auto& [name, field] : truth) {
    if (field.grid.n_lat != ref.grid.n_lat ||
        field.grid.n_lon != ref.grid.n_lon || field.channels != ref.channels) {
      throw std::runtime_error(a.truth + "/" + name +
                               ": grid or channels differ from the first");
    }
    truth_fields.push_back(field);
  }

  std::vector<std::string> channels;
  if (a.channels.empty()) {
    channels = ref.channels;
  } else {
    std::size_t start = 0;
    while (start <= a.channels.size()) {
      const std::size_t comma = a.channels.find(',', start);
      const std::string name =
          a.channels.substr(start, comma == std::string::npos ? comma
                                                              : comma - start);
      if (name.empty()) {
        throw std::invalid_argument("evaluate: empty entry in --channels");
      }
      channels.push_back(name);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }

  const GridField clim = ev::compute_climatology(truth_fields);
  const std::vector<double> w = ev::latitude_weights(ref.grid);
  std::vector<std::vector<std::string>> rows;
  for (const std::string& name : channels) {
    const std::size_t c = ref.channel_index(name);
    for (std::size_t lead = 0; lead < pred_fields.size(); ++lead) {
      const std::vector<GridField> p1 = {pred_fields[lead]};
      const std::vector<GridField> t1 = {truth_fields[lead]};
      rows.push_back({name, std::to_string(lead + 1), fmt(ev::rmse(p1, t1, w, c)),
                      fmt(ev::acc(p1, t1, clim, w, c)),
                      fmt(ev::bias(p1, t1, w, c))});
    }
  }
  io::write_csv(a.out, {"channel", "lead_step", "rmse", "acc", "bias"}, rows);
  std::printf("rows %zu\n", rows.size());
  std::printf("out %s\n", a.out.c_str());
}

struct SpectraArgs {
  std::string field;
  std::string channel;
  std::string out;
  std::string svg;
};

void cmd_spectra(const SpectraArgs& a) {
  const GridField f = io::read_grid_tensor(a.field);
  const std::vector<double> power =
      ev::zonal_spectrum(f, f.channel_index(a.channel));
  std::vector<std::vector<std::string>> rows;
  rows.reserve(power.size());
  for (std::size_t k = 0; k < power.size(); ++k) {
    rows.push_back({std::to_string(k), fmt(power[k])});
  }
  io::write_csv(a.out, {"wavenumber", "power"}, rows);
  std::printf("rows %zu\n", rows.size());
  std::printf("out %s\n", a.out.c_str());
  if (!a.svg.empty()) {
    std::vector<double> xs, ys;
    for (std::size_t k = 1; k < power.size(); ++k) {
      if (power[k] > 0.0) {
        xs.push_back(static_cast<double>(k));
        ys.push_back(power[k]);
      }
    }
    if (xs.size() < 2) {
      throw std::runtime_error("spectra: too few positive-power wavenumbers "
                               "for a log-log plot");
    }
    io::write_text(a.svg, io::svg_loglog_polyline(xs, ys, "zonal wavenumber",
                                                  "power"));
    std::printf("svg %s\n", a.svg.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HEALPix windowed-transformer forecasting toolkit"};
  app.require_subcommand(1);

  auto mesh_args = std::make_shared<MeshArgs>();
  CLI::App* mesh = app.add_subcommand("mesh", "Pixel count and resolution of a mesh level");
  mesh->add_option("--level", mesh_args->level, "refinement level n")->required();
  mesh->callback([mesh_args] { cmd_mesh(*mesh_args); });

  auto win_args = std::make_shared<WindowsArgs>();
  CLI::App* windows = app.add_subcommand("windows", "Attention-window accounting at a mesh level");
  windows->add_option("--level", win_args->level, "refinement level n")->required();
  windows->add_option("--window", win_args->window, "window parameter w")->required();
  windows->add_flag("--shifted", win_args->shifted, "report the shifted partition");
  windows->add_option("--rect-nodes", win_args->rect_nodes,
                      "rectilinear baseline node count (default 180x360)");
  windows->add_option("--rect-windows", win_args->rect_windows,
                      "rectilinear baseline window count");
  windows->callback([win_args] { cmd_windows(*win_args); });

  auto graph_args = std::make_shared<GraphArgs>();
  CLI::App* graph = app.add_subcommand("graph", "Build a grid/mesh graph and print its cardinalities");
  graph->add_option("--kind", graph_args->kind, "g2m, m2g, down, or up")->required();
  graph->add_option("--grid", graph_args->grid, "LATxLON for g2m/m2g (default 721x1440)");
  graph->add_option("--level", graph_args->level, "mesh refinement level")->required();
  graph->add_option("--threads", graph_args->threads, "construction threads");
  graph->add_option("--out", graph_args->out, "write the graph to this path");
  graph->callback([graph_args] { cmd_graph(*graph_args); });

  auto synth_args = std::make_shared<SynthArgs>();
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic advection dataset");
  synth->add_option("--grid", synth_args->grid, "LATxLON (default 46x90)");
  synth->add_option("--length", synth_args->length, "number of frames")->required();
  synth->add_option("--seed", synth_args->seed, "generator seed (HV_SEED overrides the default)");
  synth->add_option("--out", synth_args->out, "output directory")->required();
  synth->callback([synth_args, synth] { cmd_synth(*synth_args, *synth); });

  auto train_args = std::make_shared<TrainArgs>();
  CLI::App* train = app.add_subcommand("train", "Train on a frame directory with a phase curriculum");
  train->add_option("--config", train_args->config, "run config file")->required();
  train->add_option("--data", train_args->data, "frame directory (overrides data_dir)");
  train->add_option("--phases", train_args->phases,
                    "curriculum, e.g. 1x500@cosine:2.5e-4,2x50@fixed:1e-7");
  train->add_option("--out", train_args->out, "checkpoint path (overrides out_path)");
  train->add_option("--trace", train_args->trace, "loss trace CSV (overrides trace_path)");
  train->add_option("--seed", train_args->seed,
                    "run seed: model init draws from it, the trainer from seed+1 "
                    "(overrides HV_SEED, which overrides the config)");
  train->add_option("--batch", train_args->batch, "windows per optimizer step");
  train->add_option("--threads", train_args->threads, "graph construction threads");
  train->callback([train_args, train] { cmd_train(*train_args, *train); });

  auto roll_args = std::make_shared<RolloutArgs>();
  CLI::App* rollout = app.add_subcommand("rollout", "Autoregressive forecast from a checkpoint");
  rollout->add_option("--config", roll_args->config, "run config file")->required();
  rollout->add_option("--checkpoint", roll_args->checkpoint, "trained checkpoint")->required();
  rollout->add_option("--init", roll_args->init, "state at t0")->required();
  rollout->add_option("--init-prev", roll_args->init_prev, "state at t0 - 1")->required();
  rollout->add_option("--statics", roll_args->statics, "static inputs file")->required();
  rollout->add_option("--steps", roll_args->steps, "forecast steps, at most 40")->required();
  rollout->add_option("--threads", roll_args->threads, "graph construction threads");
  rollout->add_option("--out", roll_args->out, "output directory")->required();
  rollout->callback([roll_args, rollout] { cmd_rollout(*roll_args, *rollout); });

  auto eval_args = std::make_shared<EvaluateArgs>();
  CLI::App* evaluate = app.add_subcommand("evaluate", "Metrics of a forecast against truth");
  evaluate->add_option("--pred", eval_args->pred, "forecast directory")->required();
  evaluate->add_option("--truth", eval_args->truth, "truth directory")->required();
  evaluate->add_option("--channels", eval_args->channels,
                       "comma-separated channel names (default: all)");
  evaluate->add_option("--out", eval_args->out, "metrics CSV path")->required();
  evaluate->callback([eval_args] { cmd_evaluate(*eval_args); });

  auto spec_args = std::make_shared<SpectraArgs>();
  CLI::App* spectra = app.add_subcommand("spectra", "Zonal power spectrum of one channel");
  spectra->add_option("--field", spec_args->field, "grid tensor file")->required();
  spectra->add_option("--channel", spec_args->channel, "channel name")->required();
  spectra->add_option("--out", spec_args->out, "spectrum CSV path")->required();
  spectra->add_option("--svg", spec_args->svg, "also write a log-log plot");
  spectra->callback([spec_args] { cmd_spectra(*spec_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "healvit: %s\n", e.what());
    return 1;
  }
  return 0;
}
