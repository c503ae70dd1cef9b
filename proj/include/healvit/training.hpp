#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "healvit/grid.hpp"
#include "healvit/model.hpp"
#include "healvit/tensor.hpp"

namespace healvit::train {

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double weight_decay = 0.1;
  double peak_lr = 2.5e-4;
  double fine_tune_lr = 1e-7;
  double epsilon = 1e-8;
  // Fraction of a phase spent ramping linearly from 0 to the peak before the
  // cosine decay starts; 0 disables warmup.
  double warmup_fraction = 0.0;

  void validate() const;  // requires 0 < beta1 < beta2 < 1, positive lrs
};

// Decoupled weight-decay Adam over a parameter store. Moment buffers follow
// the store's registration order, so update sweeps are deterministic.
// Parameters flagged decay_exempt skip the decay term; non-trainable entries
// are left untouched.
class AdamW {
 public:
  AdamW(nn::ParamStore& store, const OptimizerConfig& cfg);

  // One update from the gradients currently held in the store. Raises on any
  // non-finite gradient, naming the parameter.
  void step(double lr);

  std::int64_t step_count() const { return t_; }

 private:
  nn::ParamStore& store_;
  OptimizerConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<nn::TensorData> m_;
  std::vector<nn::TensorData> v_;
};

// Half-cosine decay from peak at step 0 to 0 at total_steps, with an optional
// linear warmup over the leading warmup_fraction of the schedule.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double peak,
                 double warmup_fraction = 0.0);

enum class LrPolicy { kCosine, kFixed };

struct CurriculumPhase {
  int ar_steps = 1;      // unrolled forecast steps per optimizer step
  int train_steps = 0;   // optimizer steps in this phase
  LrPolicy policy = LrPolicy::kCosine;
  double lr = 0.0;       // peak for cosine, constant for fixed

  void validate() const;
};

// Parses "1x500@cosine:2.5e-4,2x50@fixed:1e-7,..." into phases. Each token is
// <ar_steps>x<train_steps>@<cosine|fixed>:<lr>; malformed tokens raise with
// the offending text.
std::vector<CurriculumPhase> parse_phase_spec(const std::string& spec);

// Chronological forecast states plus the time-invariant inputs.
struct Dataset {
  GridSpec grid;
  std::vector<GridField> frames;
  GridField statics;
};

// Smooth band-limited fields advected eastward: sinusoids in longitude shaped
// by low-order Legendre profiles in sin(latitude). Channels form contiguous
// blocks that share a block's waves through channel-specific mixing weights,
// the way variables across pressure levels share dynamical modes, so every
// channel drifts at its block's constant angular velocity and the joint state
// stays low-rank. 1% seeded noise on top. Statics are a fixed smooth elevation
// field and a land mask thresholded from it. Every frame is a pure function of
// (seed, t), so a longer dataset extends a shorter one.
Dataset synth_dataset(const GridSpec& grid, int length, std::uint64_t seed);

// Per-channel mean and standard deviation over all frames and cells, plus the
// same for the static channels. Raises if any channel has zero variance,
// naming it.
model::NormStats compute_norm_stats(const Dataset& data);

// Mean over channels and cells of latitude_weight * |pred - target|. Weights
// have one entry per latitude row. With unit-mean weights a unit error field
// scores exactly 1.
double weighted_l1(const GridField& pred, const GridField& target,
                   const std::vector<double>& lat_weights);
// Same, on [nodes, channels] tensors with one weight per node row.
double weighted_l1(const nn::TensorData& pred, const nn::TensorData& target,
                   const std::vector<double>& node_w);

struct TraceRow {
  std::int64_t global_step = 0;  // 1-based across all phases
  int phase = 0;                 // 1-based
  int ar_steps = 0;
  double lr = 0.0;
  double loss = 0.0;
};

// Runs the curriculum: each optimizer step draws batch_size windows of
// consecutive frames, unrolls the model ar_steps times per window feeding its
// own predictions back, and minimizes the mean over windows of the mean of
// the per-step weighted L1 losses in normalized units. Gradients flow through
// the whole unrolled chain. Uses the model's current normalization stats; the
// trace has one row per optimizer step.
std::vector<TraceRow> train_curriculum(model::HealVit& m, const Dataset& data,
                                       const std::vector<CurriculumPhase>& phases,
                                       std::uint64_t seed,
                                       const OptimizerConfig& opt = {},
                                       int batch_size = 1);

// Mean 1-step forecast loss (weighted L1, normalized units) over every window
// whose target index lies in [begin_frame, end_frame).
double one_step_validation_loss(const model::HealVit& m, const Dataset& data,
                                int begin_frame, int end_frame);

}  // namespace healvit::train
