#include "healvit/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "healvit/evaluation.hpp"
#include "healvit/rng.hpp"
#include "healvit/tape.hpp"

namespace healvit::train {
namespace {

constexpr double kPi = 3.14159265358979323846;

double rad(double deg) { return deg * (kPi / 180.0); }

// splitmix64 of the pair; decorrelates derived RNG streams.
std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// P_l(x) by the three-term recurrence; l small here (profiles use l <= 3).
double legendre(int l, double x) {
  double p0 = 1.0, p1 = x;
  if (l == 0) return p0;
  for (int i = 1; i < l; ++i) {
    const double p2 = ((2 * i + 1) * x * p1 - i * p0) / (i + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

GridField make_statics(const GridSpec& grid) {
  GridField f(grid, static_channel_manifest());
  for (int r = 0; r < grid.n_lat; ++r) {
    const double lat = rad(grid.latitude_deg(r));
    const double s = std::sin(lat);
    const double c = std::cos(lat);
    for (int col = 0; col < grid.n_lon; ++col) {
      const double lon = rad(grid.longitude_deg(col));
      // Longitude structure fades toward the poles, keeping the field smooth.
      const double zs = 700.0 + 500.0 * legendre(2, s) +
                        c * (600.0 * std::cos(2.0 * lon) +
                             300.0 * std::sin(3.0 * lon));
      f.at(1, r, col) = zs;
      f.at(0, r, col) = zs > 900.0 ? 1.0 : 0.0;
    }
  }
  return f;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(beta1 > 0.0 && beta1 < beta2 && beta2 < 1.0)) {
    throw std::invalid_argument(
        "OptimizerConfig: requires 0 < beta1 < beta2 < 1");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw std::invalid_argument("OptimizerConfig: weight_decay must be >= 0");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("OptimizerConfig: epsilon must be positive");
  }
  if (!(peak_lr > 0.0) || !(fine_tune_lr > 0.0)) {
    throw std::invalid_argument(
        "OptimizerConfig: learning rates must be positive");
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw std::invalid_argument(
        "OptimizerConfig: warmup_fraction must be in [0, 1)");
  }
}

AdamW::AdamW(nn::ParamStore& store, const OptimizerConfig& cfg)
    : store_(store), cfg_(cfg) {
  cfg_.validate();
  m_.reserve(store.entries().size());
  v_.reserve(store.entries().size());
  for (const auto& p : store.entries()) {
    m_.push_back(nn::TensorData::zeros(p->value.shape));
    v_.push_back(nn::TensorData::zeros(p->value.shape));
  }
}

void AdamW::step(double lr) {
  if (!std::isfinite(lr) || lr < 0.0) {
    throw std::invalid_argument("AdamW: learning rate must be finite and >= 0");
  }
  if (store_.entries().size() != m_.size()) {
    throw std::logic_error("AdamW: parameter set changed after construction");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < m_.size(); ++pi) {
    nn::Parameter& p = *store_.entries()[pi];
    if (!p.trainable) continue;
    const double wd = p.decay_exempt ? 0.0 : cfg_.weight_decay;
    double* mv = m_[pi].v.data();
    double* vv = v_[pi].v.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.v[i];
      if (!std::isfinite(g)) {
        throw std::runtime_error("AdamW: non-finite gradient in " + p.name);
      }
      mv[i] = cfg_.beta1 * mv[i] + (1.0 - cfg_.beta1) * g;
      vv[i] = cfg_.beta2 * vv[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = mv[i] / bc1;
      const double vhat = vv[i] / bc2;
      p.value.v[i] -=
          lr * (mhat / (std::sqrt(vhat) + cfg_.epsilon) + wd * p.value.v[i]);
    }
  }
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double peak,
                 double warmup_fraction) {
  if (total_steps <= 0) {
    throw std::invalid_argument("cosine_lr: total_steps must be positive");
  }
  if (step < 0 || step > total_steps) {
    throw std::invalid_argument("cosine_lr: step outside [0, total_steps]");
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw std::invalid_argument("cosine_lr: warmup_fraction must be in [0, 1)");
  }
  const auto warm = static_cast<std::int64_t>(
      warmup_fraction * static_cast<double>(total_steps));
  if (step < warm) {
    return peak * static_cast<double>(step) / static_cast<double>(warm);
  }
  const double u = static_cast<double>(step - warm) /
                   static_cast<double>(total_steps - warm);
  return peak * 0.5 * (1.0 + std::cos(kPi * u));
}

void CurriculumPhase::validate() const {
  if (ar_steps < 1) {
    throw std::invalid_argument("CurriculumPhase: ar_steps must be >= 1");
  }
  if (train_steps < 1) {
    throw std::invalid_argument("CurriculumPhase: train_steps must be >= 1");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw std::invalid_argument("CurriculumPhase: lr must be positive");
  }
}

namespace {

[[noreturn]] void bad_token(const std::string& tok, const char* why) {
  throw std::invalid_argument("parse_phase_spec: bad token '" + tok + "' (" +
                              why + ")");
}

bool parse_int(const std::string& s, int& out) {
  try {
    std::size_t used = 0;
    out = std::stoi(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

CurriculumPhase parse_token(const std::string& tok) {
  const std::size_t x = tok.find('x');
  const std::size_t at = tok.find('@', x == std::string::npos ? 0 : x);
  const std::size_t colon = tok.find(':', at == std::string::npos ? 0 : at);
  if (x == std::string::npos || at == std::string::npos ||
      colon == std::string::npos || !(x < at && at < colon)) {
    bad_token(tok, "expected <ar>x<steps>@<policy>:<lr>");
  }
  CurriculumPhase ph;
  if (!parse_int(tok.substr(0, x), ph.ar_steps)) {
    bad_token(tok, "ar_steps is not an integer");
  }
  if (!parse_int(tok.substr(x + 1, at - x - 1), ph.train_steps)) {
    bad_token(tok, "train_steps is not an integer");
  }
  if (!parse_double(tok.substr(colon + 1), ph.lr)) {
    bad_token(tok, "lr is not a number");
  }
  const std::string policy = tok.substr(at + 1, colon - at - 1);
  if (policy == "cosine") {
    ph.policy = LrPolicy::kCosine;
  } else if (policy == "fixed") {
    ph.policy = LrPolicy::kFixed;
  } else {
    bad_token(tok, "policy must be cosine or fixed");
  }
  ph.validate();
  return ph;
}

}  // namespace

std::vector<CurriculumPhase> parse_phase_spec(const std::string& spec) {
  if (spec.empty()) {
    throw std::invalid_argument("parse_phase_spec: empty spec");
  }
  std::vector<CurriculumPhase> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = spec.find(',', pos);
    const std::size_t end = comma == std::string::npos ? spec.size() : comma;
    out.push_back(parse_token(spec.substr(pos, end - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

Dataset synth_dataset(const GridSpec& grid, int length, std::uint64_t seed) {
  if (length < 3) {
    throw std::invalid_argument("synth_dataset: length must be >= 3");
  }
  if (grid.n_lat < 2 || grid.n_lon < 2) {
    throw std::invalid_argument("synth_dataset: grid too small");
  }
  Dataset d;
  d.grid = grid;
  d.statics = make_statics(grid);

  const std::vector<std::string>& names = forecast_channel_manifest();
  const std::size_t nc = names.size();
  constexpr std::size_t kBlocks = 4;
  constexpr std::size_t kWaves = 2;
  struct Wave {
    int l = 1;
    int k = 1;
    double phase = 0.0;
  };
  struct Block {
    std::array<Wave, kWaves> waves;
    double omega = 0.0;  // eastward degrees per step, shared by the block
  };
  struct ChannelParams {
    std::array<double, kWaves> w{};  // mixing weights onto the block's waves
    double scale = 1.0;
    double offset = 0.0;
  };
  // Shapes, drift speeds, and units are fixed by the seed alone; frames then
  // depend only on (seed, t), so a longer dataset extends a shorter one.
  std::array<Block, kBlocks> blocks;
  Rng prng(mix(seed, 0x5EEDC0DEULL));
  for (Block& b : blocks) {
    for (Wave& wv : b.waves) {
      wv.l = 1 + static_cast<int>(prng.uniform_index(3));
      wv.k = 1 + static_cast<int>(prng.uniform_index(2));
      wv.phase = prng.uniform(0.0, 2.0 * kPi);
    }
    b.omega = prng.uniform(3.0, 8.0);
  }
  std::vector<ChannelParams> cp(nc);
  for (ChannelParams& c : cp) {
    for (double& w : c.w) {
      w = prng.uniform(0.5, 1.5) * (prng.uniform() < 0.5 ? -1.0 : 1.0);
    }
    c.scale = prng.uniform(0.5, 20.0);
    c.offset = prng.uniform(-10.0, 50.0);
  }

  std::vector<std::array<double, 4>> pleg(grid.n_lat);
  for (int r = 0; r < grid.n_lat; ++r) {
    const double s = std::sin(rad(grid.latitude_deg(r)));
    for (int l = 0; l <= 3; ++l) pleg[r][l] = legendre(l, s);
  }

  const std::size_t cells = static_cast<std::size_t>(grid.node_count());
  d.frames.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    // Wave fields are shared by every channel in a block; evaluate them once.
    // The k-th longitude harmonic is tapered by cos^k(lat) so the field stays
    // single-valued at the poles, as associated Legendre functions are.
    std::array<std::array<std::vector<double>, kWaves>, kBlocks> wf;
    for (std::size_t b = 0; b < kBlocks; ++b) {
      for (std::size_t i = 0; i < kWaves; ++i) {
        const Wave& wv = blocks[b].waves[i];
        wf[b][i].resize(cells);
        for (int r = 0; r < grid.n_lat; ++r) {
          const double taper =
              std::pow(std::cos(rad(grid.latitude_deg(r))), wv.k);
          for (int col = 0; col < grid.n_lon; ++col) {
            const double lon = grid.longitude_deg(col);
            wf[b][i][static_cast<std::size_t>(r) * grid.n_lon + col] =
                pleg[r][wv.l] * taper *
                std::cos(rad(wv.k * (lon - blocks[b].omega * t)) + wv.phase);
          }
        }
      }
    }
    GridField f(grid, names);
    Rng noise(mix(seed, 0xF7A3E5ULL + static_cast<std::uint64_t>(t)));
    for (std::size_t c = 0; c < nc; ++c) {
      const ChannelParams& p = cp[c];
      const std::size_t b = c * kBlocks / nc;
      double* out = f.channel_data(c);
      for (std::size_t i = 0; i < cells; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < kWaves; ++j) s += p.w[j] * wf[b][j][i];
        out[i] = p.offset + p.scale * (s + 0.01 * noise.normal());
      }
    }
    d.frames.push_back(std::move(f));
  }
  return d;
}

model::NormStats compute_norm_stats(const Dataset& data) {
  if (data.frames.empty()) {
    throw std::invalid_argument("compute_norm_stats: dataset has no frames");
  }
  for (const GridField& f : data.frames) {
    if (!(f.grid == data.grid) ||
        f.channels != data.frames[0].channels) {
      throw std::invalid_argument("compute_norm_stats: frame shape mismatch");
    }
  }
  const std::size_t nodes = static_cast<std::size_t>(data.grid.node_count());

  // Streaming mean/variance per channel; population spread, matching the
  // normalization's "unit variance over the data" reading.
  auto welford = [&](const std::vector<const double*>& series,
                     const std::string& name, double& mean_out,
                     double& std_out) {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (const double* block : series) {
      for (std::size_t i = 0; i < nodes; ++i) {
        ++n;
        const double delta = block[i] - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (block[i] - mean);
      }
    }
    const double stddev = std::sqrt(m2 / static_cast<double>(n));
    if (!(stddev > 0.0)) {
      throw std::invalid_argument("compute_norm_stats: channel '" + name +
                                  "' has zero variance");
    }
    mean_out = mean;
    std_out = stddev;
  };

  model::NormStats st;
  const std::size_t nc = data.frames[0].channel_count();
  st.mean.resize(nc);
  st.stddev.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<const double*> series;
    series.reserve(data.frames.size());
    for (const GridField& f : data.frames) series.push_back(f.channel_data(c));
    welford(series, data.frames[0].channels[c], st.mean[c], st.stddev[c]);
  }
  if (!(data.statics.grid == data.grid)) {
    throw std::invalid_argument("compute_norm_stats: statics grid mismatch");
  }
  const std::size_t ns = data.statics.channel_count();
  st.static_mean.resize(ns);
  st.static_stddev.resize(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    welford({data.statics.channel_data(s)}, data.statics.channels[s],
            st.static_mean[s], st.static_stddev[s]);
  }
  return st;
}

double weighted_l1(const GridField& pred, const GridField& target,
                   const std::vector<double>& lat_weights) {
  if (!(pred.grid == target.grid) || pred.channels != target.channels) {
    throw std::invalid_argument("weighted_l1: shape mismatch");
  }
  if (lat_weights.size() != static_cast<std::size_t>(pred.grid.n_lat)) {
    throw std::invalid_argument(
        "weighted_l1: need one weight per latitude row");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < pred.channel_count(); ++c) {
    const double* p = pred.channel_data(c);
    const double* t = target.channel_data(c);
    for (int r = 0; r < pred.grid.n_lat; ++r) {
      for (int col = 0; col < pred.grid.n_lon; ++col) {
        const std::size_t i =
            static_cast<std::size_t>(r) * pred.grid.n_lon + col;
        sum += lat_weights[r] * std::abs(p[i] - t[i]);
      }
    }
  }
  return sum / static_cast<double>(pred.data.size());
}

double weighted_l1(const nn::TensorData& pred, const nn::TensorData& target,
                   const std::vector<double>& node_w) {
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("weighted_l1: shape mismatch");
  }
  if (node_w.size() != pred.rows()) {
    throw std::invalid_argument("weighted_l1: need one weight per row");
  }
  const std::size_t cols = pred.cols();
  double sum = 0.0;
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      sum += node_w[r] * std::abs(pred.v[r * cols + c] - target.v[r * cols + c]);
    }
  }
  return sum / static_cast<double>(pred.v.size());
}

std::vector<TraceRow> train_curriculum(model::HealVit& m, const Dataset& data,
                                       const std::vector<CurriculumPhase>& phases,
                                       std::uint64_t seed,
                                       const OptimizerConfig& opt,
                                       int batch_size) {
  opt.validate();
  if (batch_size < 1) {
    throw std::invalid_argument("train_curriculum: batch_size must be >= 1");
  }
  if (phases.empty()) {
    throw std::invalid_argument("train_curriculum: no phases");
  }
  int max_k = 0;
  for (const CurriculumPhase& ph : phases) {
    ph.validate();
    max_k = std::max(max_k, ph.ar_steps);
  }
  if (!(data.grid == m.grid())) {
    throw std::invalid_argument(
        "train_curriculum: dataset grid does not match the model");
  }
  // A window is (x_{i-1}, x_i) plus k targets, so i ranges over [1, F-1-k].
  if (static_cast<int>(data.frames.size()) < max_k + 2) {
    throw std::invalid_argument(
        "train_curriculum: dataset shorter than the longest window (need " +
        std::to_string(max_k + 2) + " frames, have " +
        std::to_string(data.frames.size()) + ")");
  }

  const std::vector<double> node_w = eval::node_weights(data.grid);
  const nn::TensorData statics_n = m.normalized_statics(data.statics);

  AdamW optimizer(m.params(), opt);
  Rng rng(seed);
  std::vector<TraceRow> trace;
  std::int64_t global = 0;

  for (std::size_t pi = 0; pi < phases.size(); ++pi) {
    const CurriculumPhase& ph = phases[pi];
    const int k = ph.ar_steps;
    const auto max_start =
        static_cast<std::uint64_t>(data.frames.size()) - 1 - k;
    for (int s = 0; s < ph.train_steps; ++s) {
      nn::Tape tape;
      const nn::Var st = tape.leaf(statics_n);
      std::vector<nn::Var> window_losses;
      window_losses.reserve(batch_size);
      for (int b = 0; b < batch_size; ++b) {
        const auto i = static_cast<std::size_t>(
            1 + rng.uniform_index(max_start));  // window start
        nn::Var prev = tape.leaf(m.normalized_state(data.frames[i - 1]));
        nn::Var cur = tape.leaf(m.normalized_state(data.frames[i]));
        std::vector<nn::Var> losses;
        losses.reserve(k);
        for (int j = 1; j <= k; ++j) {
          const nn::Var inp = tape.concat_cols(tape.concat_cols(prev, cur), st);
          const nn::Var pred = m.forward_normalized(tape, inp);
          losses.push_back(tape.weighted_l1(
              pred, m.normalized_state(data.frames[i + j]), node_w));
          prev = cur;
          cur = pred;
        }
        window_losses.push_back(tape.mean_of(losses));
      }
      const nn::Var loss = tape.mean_of(window_losses);
      m.params().zero_grads();
      tape.backward(loss);
      const double lr =
          ph.policy == LrPolicy::kCosine
              ? cosine_lr(s, ph.train_steps, ph.lr, opt.warmup_fraction)
              : ph.lr;
      optimizer.step(lr);
      ++global;
      trace.push_back({global, static_cast<int>(pi) + 1, k, lr,
                       tape.value(loss).v[0]});
    }
  }
  return trace;
}

double one_step_validation_loss(const model::HealVit& m, const Dataset& data,
                                int begin_frame, int end_frame) {
  if (begin_frame < 2 || begin_frame >= end_frame ||
      end_frame > static_cast<int>(data.frames.size())) {
    throw std::invalid_argument(
        "one_step_validation_loss: need 2 <= begin < end <= frame count");
  }
  if (!(data.grid == m.grid())) {
    throw std::invalid_argument(
        "one_step_validation_loss: dataset grid does not match the model");
  }
  const std::vector<double> node_w = eval::node_weights(data.grid);
  const nn::TensorData statics_n = m.normalized_statics(data.statics);
  double sum = 0.0;
  for (int t = begin_frame; t < end_frame; ++t) {
    nn::Tape tape;
    const nn::Var prev = tape.leaf(m.normalized_state(data.frames[t - 2]));
    const nn::Var cur = tape.leaf(m.normalized_state(data.frames[t - 1]));
    const nn::Var inp =
        tape.concat_cols(tape.concat_cols(prev, cur), tape.leaf(statics_n));
    const nn::Var pred = m.forward_normalized(tape, inp);
    sum += weighted_l1(tape.value(pred), m.normalized_state(data.frames[t]),
                       node_w);
  }
  return sum / static_cast<double>(end_frame - begin_frame);
}

}  // namespace healvit::train
