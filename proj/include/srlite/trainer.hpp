#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srlite/data.hpp"
#include "srlite/tensor.hpp"
#include "srlite/ugswinsr.hpp"

namespace srlite {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;  // added to sqrt(v_hat)
};

// Bias-corrected Adam bound to one parameter store. Moments are stored in
// float alongside the parameters; per-coordinate arithmetic runs in double.
class Adam {
 public:
  Adam() = default;
  Adam(ParamStore<float>* params, AdamConfig cfg);

  // One update from the accumulated gradients. Parameters without an
  // allocated gradient count as zero-gradient. Throws ValueError naming the
  // parameter when a gradient is non-finite.
  void step();

  std::uint64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  // Largest |parameter update| applied by any step so far.
  double max_step_magnitude() const { return max_step_; }

  struct State {
    std::uint64_t t = 0;
    std::vector<std::vector<float>> m, v;  // parallel to the store entries
  };
  State state() const;
  void set_state(const State& s);

 private:
  ParamStore<float>* params_ = nullptr;
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
  double max_step_ = 0;
};

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  std::string regime = "l1";  // "l1" or "gan"
  std::size_t eval_every = 0;  // steps between PSNR evaluations; 0 = never
  AdamConfig adam;
  GanLossConfig gan;  // used by the gan regime

  void validate() const;
};

struct StepRecord {
  std::uint64_t step = 0;  // 1-based optimizer step
  double loss = 0;         // pixel loss, or the generator loss under gan
  double loss_d = 0;
  bool has_loss_d = false;
  double psnr = 0;
  bool has_psnr = false;
};

// "step,loss[,psnr]" lines (no header).
std::string history_csv(const std::vector<StepRecord>& history);
// Same, but the third column is the discriminator loss.
std::string history_csv_d(const std::vector<StepRecord>& history);
void write_text_file(const std::string& path, const std::string& text);

using ForwardFn = std::function<Tensor(const Tensor&)>;

// Mid-run position of the batch loop; checkpointing this resumes a run
// bit-exactly. perm is the current epoch's sample order.
struct LoopCursor {
  std::array<std::uint64_t, 4> rng_state{};
  std::uint64_t pos = 0;
  std::vector<std::uint64_t> perm;
  std::uint64_t step = 0;
};

// ---- checkpoint file --------------------------------------------------------
// Sectioned little-endian binary: magic "SRLC", version, an opaque config
// string, the trainer kind, the loop cursor, then per-network named float
// tensors followed by optimizer moments. Save -> load -> save is
// byte-identical.

struct CheckpointNet {
  std::string name;
  std::vector<std::pair<std::string, Tensor>> params;
  bool has_optim = false;
  Adam::State optim;
};

struct CheckpointData {
  std::uint32_t version = 1;
  std::string config_json;
  std::string kind;  // "l1" or "gan"
  LoopCursor cursor;
  std::vector<CheckpointNet> nets;
};

std::vector<unsigned char> encode_checkpoint(const CheckpointData& data);
CheckpointData decode_checkpoint(const std::vector<unsigned char>& bytes);
void write_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::string& path);

// Copies the named tensors of a checkpoint section into a live store.
// Throws CheckpointError (missing_param) on absent names or shape
// mismatches in either direction.
void install_params(ParamStore<float>& store, const CheckpointNet& net);

// ---- training loops ---------------------------------------------------------

// Pixel-loss loop: shuffled full batches, L1 objective, one Adam step per
// batch. Partial trailing batches are dropped. Deterministic for a fixed
// (seed, config, dataset).
class Trainer {
 public:
  Trainer(ForwardFn forward, ParamStore<float>* params, TrainConfig cfg);

  // Runs until cfg.epochs epochs are complete, or until max_steps more
  // optimizer steps were taken this call (0 = no cap). Resumable: repeated
  // calls continue where the previous one stopped.
  void train(const std::vector<PairedSample>& data, std::size_t max_steps = 0);

  const std::vector<StepRecord>& history() const { return history_; }
  Adam& optim() { return adam_; }
  const LoopCursor& cursor() const { return cursor_; }
  std::uint64_t step() const { return cursor_.step; }

  void save(const std::string& path, const std::string& config_json = "") const;
  void load(const std::string& path);

 private:
  double eval_psnr(const std::vector<PairedSample>& data) const;

  ForwardFn forward_;
  ParamStore<float>* params_;
  TrainConfig cfg_;
  Adam adam_;
  LoopCursor cursor_;
  std::vector<StepRecord> history_;
};

// Adversarial loop: per batch, one discriminator update on (real, detached
// fake), then one generator update through a fresh discriminator pass.
class GanTrainer {
 public:
  GanTrainer(ForwardFn gen, ParamStore<float>* gen_params, ForwardFn disc,
             ParamStore<float>* disc_params, TrainConfig cfg);

  void train(const std::vector<PairedSample>& data, std::size_t max_steps = 0);

  const std::vector<StepRecord>& history() const { return history_; }
  Adam& optim_g() { return adam_g_; }
  Adam& optim_d() { return adam_d_; }
  const LoopCursor& cursor() const { return cursor_; }
  std::uint64_t step() const { return cursor_.step; }

  void save(const std::string& path, const std::string& config_json = "") const;
  void load(const std::string& path);

 private:
  ForwardFn gen_, disc_;
  ParamStore<float>* gen_params_;
  ParamStore<float>* disc_params_;
  TrainConfig cfg_;
  Adam adam_g_, adam_d_;
  LoopCursor cursor_;
  std::vector<StepRecord> history_;
};

}  // namespace srlite
