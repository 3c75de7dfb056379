#include "srlite/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "srlite/ops.hpp"
#include "srlite/rng.hpp"

namespace srlite {

// ---- Adam -------------------------------------------------------------------

Adam::Adam(ParamStore<float>* params, AdamConfig cfg)
    : params_(params), cfg_(cfg) {
  m_.resize(params_->entries().size());
  v_.resize(params_->entries().size());
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const std::size_t n = params_->entries()[i].tensor.size();
    m_[i].assign(n, 0.0f);
    v_[i].assign(n, 0.0f);
  }
}

void Adam::step() {
  if (!params_) throw ValueError("adam: no parameter store bound");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_->entries().size(); ++i) {
    TensorT<float> t = params_->entries()[i].tensor;
    std::span<float> p = t.mutable_data();
    const bool has_g = t.has_grad();
    std::span<const float> g = t.grad();
    std::vector<float>& m = m_[i];
    std::vector<float>& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = has_g ? static_cast<double>(g[j]) : 0.0;
      if (!std::isfinite(gj)) {
        throw ValueError("adam: non-finite gradient in parameter '" +
                         params_->entries()[i].name + "'");
      }
      const double mj = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      const double vj = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double update =
          cfg_.lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg_.eps);
      p[j] = static_cast<float>(p[j] - update);
      const double mag = std::fabs(update);
      if (mag > max_step_) max_step_ = mag;
    }
  }
}

Adam::State Adam::state() const { return State{t_, m_, v_}; }

void Adam::set_state(const State& s) {
  if (!params_) throw ValueError("adam: no parameter store bound");
  if (s.m.size() != m_.size() || s.v.size() != v_.size()) {
    throw ValueError("adam: optimizer state has wrong parameter count");
  }
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (s.m[i].size() != m_[i].size() || s.v[i].size() != v_[i].size()) {
      throw ValueError("adam: optimizer state shape mismatch at parameter '" +
                       params_->entries()[i].name + "'");
    }
  }
  t_ = s.t;
  m_ = s.m;
  v_ = s.v;
}

// ---- config / history ---------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (regime != "l1" && regime != "gan") {
    throw ConfigError("regime must be 'l1' or 'gan', got '" + regime + "'");
  }
  if (!(adam.lr >= 0) || !std::isfinite(adam.lr)) {
    throw ConfigError("lr must be finite and non-negative");
  }
  if (adam.beta1 < 0 || adam.beta1 >= 1 || adam.beta2 < 0 || adam.beta2 >= 1) {
    throw ConfigError("beta1 and beta2 must lie in [0,1)");
  }
  if (adam.eps <= 0) throw ConfigError("eps must be positive");
  if (regime == "gan") gan.validate();
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string history_csv(const std::vector<StepRecord>& history) {
  std::string out;
  for (const StepRecord& r : history) {
    out += std::to_string(r.step);
    out += ',';
    out += fmt_double(r.loss);
    if (r.has_psnr) {
      out += ',';
      out += fmt_double(r.psnr);
    }
    out += '\n';
  }
  return out;
}

std::string history_csv_d(const std::vector<StepRecord>& history) {
  std::string out;
  for (const StepRecord& r : history) {
    if (!r.has_loss_d) continue;
    out += std::to_string(r.step);
    out += ',';
    out += fmt_double(r.loss_d);
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(path + ": write failed");
}

// ---- checkpoint serialization -------------------------------------------------

namespace {

void put_u8(std::vector<unsigned char>& b, std::uint8_t v) { b.push_back(v); }

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f32(std::vector<unsigned char>& b, float v) {
  put_u32(b, std::bit_cast<std::uint32_t>(v));
}

void put_str(std::vector<unsigned char>& b, const std::string& s) {
  put_u64(b, s.size());
  b.insert(b.end(), s.begin(), s.end());
}

struct Reader {
  const std::vector<unsigned char>& b;
  std::size_t i = 0;

  void need(std::size_t n) const {
    if (i + n > b.size()) {
      throw CheckpointError(CheckpointError::Kind::truncated,
                            "checkpoint: unexpected end of file");
    }
  }
  std::uint8_t u8() {
    need(1);
    return b[i++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[i++]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[i++]) << (8 * k);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(b.begin() + static_cast<std::ptrdiff_t>(i),
                  b.begin() + static_cast<std::ptrdiff_t>(i + n));
    i += n;
    return s;
  }
};

constexpr unsigned char kMagic[4] = {'S', 'R', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::vector<unsigned char> encode_checkpoint(const CheckpointData& data) {
  std::vector<unsigned char> b;
  b.insert(b.end(), kMagic, kMagic + 4);
  put_u32(b, data.version);
  put_str(b, data.config_json);
  put_str(b, data.kind);
  for (std::uint64_t s : data.cursor.rng_state) put_u64(b, s);
  put_u64(b, data.cursor.pos);
  put_u64(b, data.cursor.step);
  put_u64(b, data.cursor.perm.size());
  for (std::uint64_t p : data.cursor.perm) put_u64(b, p);
  put_u32(b, static_cast<std::uint32_t>(data.nets.size()));
  for (const CheckpointNet& net : data.nets) {
    put_str(b, net.name);
    put_u64(b, net.params.size());
    for (const auto& [name, tensor] : net.params) {
      put_str(b, name);
      put_u8(b, 0);  // dtype: f32
      put_u64(b, tensor.ndim());
      for (std::size_t d = 0; d < tensor.ndim(); ++d) put_u64(b, tensor.extent(d));
      for (float v : tensor.data()) put_f32(b, v);
    }
    put_u8(b, net.has_optim ? 1 : 0);
    if (net.has_optim) {
      if (net.optim.m.size() != net.params.size() ||
          net.optim.v.size() != net.params.size()) {
        throw ValueError("checkpoint: optimizer state does not match the "
                         "parameter list of net '" + net.name + "'");
      }
      put_u64(b, net.optim.t);
      for (std::size_t i = 0; i < net.params.size(); ++i) {
        for (float v : net.optim.m[i]) put_f32(b, v);
        for (float v : net.optim.v[i]) put_f32(b, v);
      }
    }
  }
  return b;
}

CheckpointData decode_checkpoint(const std::vector<unsigned char>& bytes) {
  Reader r{bytes};
  r.need(4);
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw CheckpointError(CheckpointError::Kind::bad_magic,
                          "checkpoint: bad magic bytes");
  }
  r.i = 4;
  CheckpointData data;
  data.version = r.u32();
  if (data.version != kVersion) {
    throw CheckpointError(CheckpointError::Kind::bad_version,
                          "checkpoint: unsupported version " +
                              std::to_string(data.version));
  }
  data.config_json = r.str();
  data.kind = r.str();
  for (std::uint64_t& s : data.cursor.rng_state) s = r.u64();
  data.cursor.pos = r.u64();
  data.cursor.step = r.u64();
  data.cursor.perm.resize(r.u64());
  for (std::uint64_t& p : data.cursor.perm) p = r.u64();
  data.nets.resize(r.u32());
  for (CheckpointNet& net : data.nets) {
    net.name = r.str();
    const std::uint64_t np = r.u64();
    net.params.reserve(np);
    for (std::uint64_t i = 0; i < np; ++i) {
      std::string name = r.str();
      const std::uint8_t dtype = r.u8();
      if (dtype != 0) {
        throw CheckpointError(CheckpointError::Kind::other,
                              "checkpoint: unsupported dtype for '" + name + "'");
      }
      Shape shape(r.u64());
      for (std::size_t& d : shape) d = r.u64();
      std::vector<float> vals(shape_numel(shape));
      for (float& v : vals) v = r.f32();
      net.params.emplace_back(std::move(name),
                              Tensor::from_vector(std::move(shape), std::move(vals)));
    }
    net.has_optim = r.u8() != 0;
    if (net.has_optim) {
      net.optim.t = r.u64();
      net.optim.m.resize(net.params.size());
      net.optim.v.resize(net.params.size());
      for (std::size_t i = 0; i < net.params.size(); ++i) {
        const std::size_t n = net.params[i].second.size();
        net.optim.m[i].resize(n);
        for (float& v : net.optim.m[i]) v = r.f32();
        net.optim.v[i].resize(n);
        for (float& v : net.optim.v[i]) v = r.f32();
      }
    }
  }
  if (r.i != bytes.size()) {
    throw CheckpointError(CheckpointError::Kind::other,
                          "checkpoint: trailing bytes after the last section");
  }
  return data;
}

void write_checkpoint(const std::string& path, const CheckpointData& data) {
  const std::vector<unsigned char> bytes = encode_checkpoint(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path + ": write failed");
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void install_params(ParamStore<float>& store, const CheckpointNet& net) {
  std::size_t matched = 0;
  for (const auto& entry : store.entries()) {
    const std::pair<std::string, Tensor>* found = nullptr;
    for (const auto& p : net.params) {
      if (p.first == entry.name) {
        found = &p;
        break;
      }
    }
    if (!found) {
      throw CheckpointError(CheckpointError::Kind::missing_param,
                            "checkpoint: parameter '" + entry.name +
                                "' missing from net '" + net.name + "'");
    }
    if (found->second.shape() != entry.tensor.shape()) {
      throw CheckpointError(CheckpointError::Kind::missing_param,
                            "checkpoint: parameter '" + entry.name +
                                "' has shape " + shape_str(found->second.shape()) +
                                ", expected " + shape_str(entry.tensor.shape()));
    }
    TensorT<float> t = entry.tensor;
    std::span<float> dst = t.mutable_data();
    std::span<const float> src = found->second.data();
    std::copy(src.begin(), src.end(), dst.begin());
    ++matched;
  }
  if (matched != net.params.size()) {
    for (const auto& p : net.params) {
      const bool known =
          std::any_of(store.entries().begin(), store.entries().end(),
                      [&](const auto& e) { return e.name == p.first; });
      if (!known) {
        throw CheckpointError(CheckpointError::Kind::missing_param,
                              "checkpoint: unexpected parameter '" + p.first +
                                  "' in net '" + net.name + "'");
      }
    }
  }
}

// ---- batch loop -----------------------------------------------------------

namespace {

std::vector<std::size_t> next_batch(LoopCursor& cur, Rng& rng, std::size_t n,
                                    std::size_t batch) {
  if (cur.perm.size() != n || cur.pos + batch > n) {
    cur.perm.resize(n);
    std::iota(cur.perm.begin(), cur.perm.end(), std::uint64_t{0});
    shuffle(cur.perm, rng);
    cur.pos = 0;
    cur.rng_state = rng.state();
  }
  std::vector<std::size_t> idx(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    idx[i] = static_cast<std::size_t>(cur.perm[cur.pos + i]);
  }
  cur.pos += batch;
  return idx;
}

CheckpointNet snapshot_net(const std::string& name,
                           const ParamStore<float>& params, const Adam& adam) {
  CheckpointNet net;
  net.name = name;
  for (const auto& e : params.entries()) net.params.emplace_back(e.name, e.tensor);
  net.has_optim = true;
  net.optim = adam.state();
  return net;
}

}  // namespace

// ---- Trainer (pixel loss) ---------------------------------------------------

Trainer::Trainer(ForwardFn forward, ParamStore<float>* params, TrainConfig cfg)
    : forward_(std::move(forward)), params_(params), cfg_(std::move(cfg)) {
  cfg_.validate();
  adam_ = Adam(params_, cfg_.adam);
  cursor_.rng_state = Rng::stream(cfg_.seed, "shuffle").state();
}

double Trainer::eval_psnr(const std::vector<PairedSample>& data) const {
  NoGradGuard ng;
  const std::size_t n = std::min<std::size_t>(data.size(), 8);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Batch b = stack_batch(data, {i});
    Tensor pred = forward_(b.lr);
    total += psnr(pred.detach(), b.hr);
  }
  return total / static_cast<double>(n);
}

void Trainer::train(const std::vector<PairedSample>& data,
                    std::size_t max_steps) {
  if (data.size() < cfg_.batch_size) {
    throw ConfigError("batch_size " + std::to_string(cfg_.batch_size) +
                      " exceeds the dataset size " + std::to_string(data.size()));
  }
  const std::size_t steps_per_epoch = data.size() / cfg_.batch_size;
  const std::uint64_t target = cfg_.epochs * steps_per_epoch;
  Rng rng(cursor_.rng_state);
  std::size_t taken = 0;
  while (cursor_.step < target && (max_steps == 0 || taken < max_steps)) {
    const std::vector<std::size_t> idx =
        next_batch(cursor_, rng, data.size(), cfg_.batch_size);
    Batch b = stack_batch(data, idx);
    Tensor pred = forward_(b.lr);
    Tensor loss = l1_loss(pred, b.hr);
    const double lv = loss.item();
    if (!std::isfinite(lv)) {
      throw ValueError("step " + std::to_string(cursor_.step + 1) +
                       ": non-finite loss");
    }
    params_->zero_grads();
    backward(loss);
    adam_.step();
    ++cursor_.step;
    ++taken;
    StepRecord rec;
    rec.step = cursor_.step;
    rec.loss = lv;
    if (cfg_.eval_every > 0 && cursor_.step % cfg_.eval_every == 0) {
      rec.psnr = eval_psnr(data);
      rec.has_psnr = true;
    }
    history_.push_back(rec);
  }
}

void Trainer::save(const std::string& path, const std::string& config_json) const {
  CheckpointData d;
  d.config_json = config_json;
  d.kind = "l1";
  d.cursor = cursor_;
  d.nets.push_back(snapshot_net("model", *params_, adam_));
  write_checkpoint(path, d);
}

void Trainer::load(const std::string& path) {
  CheckpointData d = read_checkpoint(path);
  if (d.kind != "l1" || d.nets.size() != 1 || d.nets[0].name != "model") {
    throw CheckpointError(CheckpointError::Kind::other,
                          "checkpoint: expected a single-net pixel-loss "
                          "checkpoint, found kind '" + d.kind + "'");
  }
  install_params(*params_, d.nets[0]);
  if (d.nets[0].has_optim) adam_.set_state(d.nets[0].optim);
  cursor_ = d.cursor;
  history_.clear();
}

// ---- GanTrainer -------------------------------------------------------------

GanTrainer::GanTrainer(ForwardFn gen, ParamStore<float>* gen_params,
                       ForwardFn disc, ParamStore<float>* disc_params,
                       TrainConfig cfg)
    : gen_(std::move(gen)),
      disc_(std::move(disc)),
      gen_params_(gen_params),
      disc_params_(disc_params),
      cfg_(std::move(cfg)) {
  cfg_.validate();
  cfg_.gan.validate();
  adam_g_ = Adam(gen_params_, cfg_.adam);
  adam_d_ = Adam(disc_params_, cfg_.adam);
  cursor_.rng_state = Rng::stream(cfg_.seed, "shuffle").state();
}

void GanTrainer::train(const std::vector<PairedSample>& data,
                       std::size_t max_steps) {
  if (data.size() < cfg_.batch_size) {
    throw ConfigError("batch_size " + std::to_string(cfg_.batch_size) +
                      " exceeds the dataset size " + std::to_string(data.size()));
  }
  const std::size_t steps_per_epoch = data.size() / cfg_.batch_size;
  const std::uint64_t target = cfg_.epochs * steps_per_epoch;
  Rng rng(cursor_.rng_state);
  std::size_t taken = 0;
  const float lp = static_cast<float>(cfg_.gan.lambda_pixel);
  const float la = static_cast<float>(cfg_.gan.lambda_adv);
  while (cursor_.step < target && (max_steps == 0 || taken < max_steps)) {
    const std::vector<std::size_t> idx =
        next_batch(cursor_, rng, data.size(), cfg_.batch_size);
    Batch b = stack_batch(data, idx);

    Tensor pred = gen_(b.lr);
    Tensor d_real = disc_(b.hr);
    Tensor d_fake = disc_(pred.detach());
    Tensor ones = Tensor::full(Shape(d_real.shape()), 1.0f);
    Tensor zeros = Tensor::zeros(Shape(d_fake.shape()));
    Tensor loss_d = add(bce_with_logits_mean(d_real, ones),
                        bce_with_logits_mean(d_fake, zeros));
    const double ld = loss_d.item();
    if (!std::isfinite(ld)) {
      throw ValueError("gan step " + std::to_string(cursor_.step + 1) +
                       ": non-finite discriminator loss");
    }
    disc_params_->zero_grads();
    backward(loss_d);
    adam_d_.step();

    Tensor loss_g;
    if (la > 0) {
      // Fresh discriminator pass: the one above was consumed by the D step
      // and predates the D update.
      Tensor adv = scale(bce_with_logits_mean(disc_(pred), ones), la);
      loss_g = lp > 0 ? add(scale(l1_loss(pred, b.hr), lp), adv) : adv;
    } else {
      loss_g = scale(l1_loss(pred, b.hr), lp);
    }
    const double lg = loss_g.item();
    if (!std::isfinite(lg)) {
      throw ValueError("gan step " + std::to_string(cursor_.step + 1) +
                       ": non-finite generator loss");
    }
    gen_params_->zero_grads();
    disc_params_->zero_grads();
    backward(loss_g);
    adam_g_.step();

    ++cursor_.step;
    ++taken;
    StepRecord rec;
    rec.step = cursor_.step;
    rec.loss = lg;
    rec.loss_d = ld;
    rec.has_loss_d = true;
    history_.push_back(rec);
  }
}

void GanTrainer::save(const std::string& path,
                      const std::string& config_json) const {
  CheckpointData d;
  d.config_json = config_json;
  d.kind = "gan";
  d.cursor = cursor_;
  d.nets.push_back(snapshot_net("gen", *gen_params_, adam_g_));
  d.nets.push_back(snapshot_net("disc", *disc_params_, adam_d_));
  write_checkpoint(path, d);
}

void GanTrainer::load(const std::string& path) {
  CheckpointData d = read_checkpoint(path);
  if (d.kind != "gan" || d.nets.size() != 2 || d.nets[0].name != "gen" ||
      d.nets[1].name != "disc") {
    throw CheckpointError(CheckpointError::Kind::other,
                          "checkpoint: expected a gen+disc adversarial "
                          "checkpoint, found kind '" + d.kind + "'");
  }
  install_params(*gen_params_, d.nets[0]);
  install_params(*disc_params_, d.nets[1]);
  if (d.nets[0].has_optim) adam_g_.set_state(d.nets[0].optim);
  if (d.nets[1].has_optim) adam_d_.set_state(d.nets[1].optim);
  cursor_ = d.cursor;
  history_.clear();
}

}  // namespace srlite
