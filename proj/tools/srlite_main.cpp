#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "srlite/complexity.hpp"
#include "srlite/config.hpp"
#include "srlite/image.hpp"
#include "srlite/ops.hpp"
#include "srlite/trainer.hpp"

namespace fs = std::filesystem;

namespace {

using namespace srlite;

std::pair<std::size_t, std::size_t> parse_wh(const std::string& s) {
  const std::size_t pos = s.find('x');
  if (pos == std::string::npos || pos == 0 || pos + 1 == s.size()) {
    throw ConfigError("--input must look like WxH, e.g. 64x64");
  }
  try {
    std::size_t used = 0;
    const std::size_t w = std::stoull(s.substr(0, pos), &used);
    if (used != pos) throw std::invalid_argument("");
    const std::string rest = s.substr(pos + 1);
    const std::size_t h = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("");
    if (w == 0 || h == 0) throw std::invalid_argument("");
    return {w, h};
  } catch (const std::exception&) {
    throw ConfigError("--input must look like WxH, e.g. 64x64");
  }
}

std::vector<std::string> list_ppm(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir + ": not a directory");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") {
      names.push_back(e.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

// A constructed model behind a uniform forward interface.
struct LoadedNet {
  RunConfig cfg;
  std::shared_ptr<Mswinsr> msr;
  std::shared_ptr<UgswinGenerator> gen;
  ForwardFn forward;
  ParamStore<float>* params = nullptr;
  std::size_t scale = 0;
};

LoadedNet build_net(const RunConfig& cfg) {
  LoadedNet net;
  net.cfg = cfg;
  if (cfg.uses_ugswin()) {
    net.gen = std::make_shared<UgswinGenerator>(
        UgswinGenerator::create(cfg.ugswin, cfg.train.seed));
    net.forward = [g = net.gen](const Tensor& x) { return g->forward(x); };
    net.params = &net.gen->params();
    net.scale = cfg.ugswin.scale;
  } else {
    net.msr = std::make_shared<Mswinsr>(Mswinsr::create(cfg.mswin, cfg.train.seed));
    net.forward = [m = net.msr](const Tensor& x) { return m->forward(x); };
    net.params = &net.msr->params();
    net.scale = cfg.mswin.scale;
  }
  return net;
}

LoadedNet load_net(const std::string& ckpt_path) {
  CheckpointData d = read_checkpoint(ckpt_path);
  if (d.config_json.empty()) {
    throw CheckpointError(CheckpointError::Kind::other,
                          ckpt_path + ": checkpoint has no embedded config");
  }
  LoadedNet net = build_net(parse_config(d.config_json));
  const std::string want = d.kind == "gan" ? "gen" : "model";
  const CheckpointNet* src = nullptr;
  for (const CheckpointNet& n : d.nets) {
    if (n.name == want) src = &n;
  }
  if (!src) {
    throw CheckpointError(CheckpointError::Kind::other,
                          ckpt_path + ": no '" + want + "' net in checkpoint");
  }
  install_params(*net.params, *src);
  return net;
}

std::vector<PairedSample> build_dataset(const RunConfig& cfg) {
  const std::size_t scale = cfg.uses_ugswin() ? cfg.ugswin.scale : cfg.mswin.scale;
  if (cfg.data.source == "synthetic") {
    return synth_dataset(cfg.train.seed, cfg.data.n, cfg.data.hr_size, scale);
  }
  const std::vector<std::string> names = list_ppm(cfg.data.path);
  if (names.empty()) throw IoError(cfg.data.path + ": no .ppm images found");
  std::vector<PairedSample> out;
  out.reserve(names.size());
  for (const std::string& name : names) {
    out.push_back(degrade_pair(read_ppm(cfg.data.path + "/" + name),
                               cfg.data.hr_size, scale));
  }
  return out;
}

Tensor upscale_image(const LoadedNet& net, const Tensor& img) {
  NoGradGuard ng;
  const std::size_t h = img.extent(0), w = img.extent(1), c = img.extent(2);
  Tensor batch = reshape(img, {1, h, w, c});
  Tensor out = net.forward(batch);
  return reshape(out.detach(),
                 {out.extent(1), out.extent(2), out.extent(3)});
}

int run_train(const std::string& config_path, const std::string& resume,
              bool seed_set, std::uint64_t seed, const std::string& out_dir) {
  RunConfig cfg = load_config(config_path);
  if (seed_set) cfg.train.seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  const std::vector<PairedSample> data = build_dataset(cfg);
  const std::string cfg_json = serialize_config(cfg);
  const std::string ckpt_out =
      cfg.checkpoint.empty() ? cfg.out_dir + "/model.ckpt" : cfg.checkpoint;

  if (cfg.train.regime == "gan") {
    auto gen = std::make_shared<UgswinGenerator>(
        UgswinGenerator::create(cfg.ugswin, cfg.train.seed));
    auto disc = std::make_shared<UgswinDiscriminator>(
        UgswinDiscriminator::create(cfg.ugswin, cfg.train.seed + 1));
    GanTrainer tr([gen](const Tensor& x) { return gen->forward(x); },
                  &gen->params(),
                  [disc](const Tensor& x) { return disc->forward(x); },
                  &disc->params(), cfg.train);
    if (!resume.empty()) tr.load(resume);
    tr.train(data);
    write_text_file(cfg.out_dir + "/loss.csv", history_csv(tr.history()));
    write_text_file(cfg.out_dir + "/loss_d.csv", history_csv_d(tr.history()));
    tr.save(ckpt_out, cfg_json);
    std::printf("trained %llu steps (regime gan)\n",
                static_cast<unsigned long long>(tr.step()));
    if (!tr.history().empty()) {
      std::printf("final loss_g %.6f  loss_d %.6f\n", tr.history().back().loss,
                  tr.history().back().loss_d);
    }
    std::printf("wrote %s/loss.csv\nwrote %s/loss_d.csv\nwrote %s\n",
                cfg.out_dir.c_str(), cfg.out_dir.c_str(), ckpt_out.c_str());
    return 0;
  }

  LoadedNet net = build_net(cfg);
  Trainer tr(net.forward, net.params, cfg.train);
  if (!resume.empty()) tr.load(resume);
  tr.train(data);
  write_text_file(cfg.out_dir + "/loss.csv", history_csv(tr.history()));
  tr.save(ckpt_out, cfg_json);
  std::printf("trained %llu steps (regime l1)\n",
              static_cast<unsigned long long>(tr.step()));
  if (!tr.history().empty()) {
    std::printf("final loss %.6f\n", tr.history().back().loss);
  }
  std::printf("wrote %s/loss.csv\nwrote %s\n", cfg.out_dir.c_str(),
              ckpt_out.c_str());
  return 0;
}

int run_sr(const std::string& ckpt, const std::string& in_path,
           const std::string& out_path) {
  LoadedNet net = load_net(ckpt);
  Tensor img = read_ppm(in_path);
  Tensor out = upscale_image(net, img);
  write_ppm(out_path, out);
  std::printf("wrote %s (%zux%zu -> %zux%zu)\n", out_path.c_str(),
              img.extent(1), img.extent(0), out.extent(1), out.extent(0));
  return 0;
}

int run_eval(const std::string& dir, const std::string& ckpt) {
  const std::string lr_dir = dir + "/lr", hr_dir = dir + "/hr";
  const std::vector<std::string> names = list_ppm(lr_dir);
  if (names.empty()) throw IoError(lr_dir + ": no .ppm images found");
  std::unique_ptr<LoadedNet> net;
  if (!ckpt.empty()) net = std::make_unique<LoadedNet>(load_net(ckpt));

  std::printf("%-24s %13s %13s", "image", "bicubic PSNR", "bicubic SSIM");
  if (net) std::printf(" %13s %13s", "model PSNR", "model SSIM");
  std::printf("\n");
  double bp = 0, bs = 0, mp = 0, ms = 0;
  for (const std::string& name : names) {
    Tensor lr = read_ppm(lr_dir + "/" + name);
    Tensor hr = read_ppm(hr_dir + "/" + name);
    Tensor up = bicubic_resize(lr, hr.extent(0), hr.extent(1));
    const double p0 = psnr(up, hr), s0 = ssim(up, hr);
    bp += p0;
    bs += s0;
    std::printf("%-24s %13.3f %13.4f", name.c_str(), p0, s0);
    if (net) {
      Tensor pred = upscale_image(*net, lr);
      const double p1 = psnr(pred, hr), s1 = ssim(pred, hr);
      mp += p1;
      ms += s1;
      std::printf(" %13.3f %13.4f", p1, s1);
    }
    std::printf("\n");
  }
  const double n = static_cast<double>(names.size());
  std::printf("%-24s %13.3f %13.4f", "mean", bp / n, bs / n);
  if (net) std::printf(" %13.3f %13.4f", mp / n, ms / n);
  std::printf("\n");
  return 0;
}

int run_analyze(const std::string& config_path, const std::string& input,
                const std::string& out_path) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  const auto [w, h] = parse_wh(input);
  std::string json_out;
  if (cfg.uses_ugswin()) {
    const ComplexityReport g = analyze_ugswin_generator(cfg.ugswin, h, w);
    const ComplexityReport d = analyze_ugswin_discriminator(cfg.ugswin, h, w);
    std::fputs(report_text(g).c_str(), stdout);
    std::fputs(report_text(d).c_str(), stdout);
    json_out = "[" + report_json(g) + ",\n " + report_json(d) + "]\n";
    std::printf("cost formulas at %zux%zu, C=%zu, M=%zu:\n", h, w,
                cfg.ugswin.channels, cfg.ugswin.window);
    const std::size_t C = cfg.ugswin.channels, M = cfg.ugswin.window;
    std::printf("  window attention  %llu\n",
                static_cast<unsigned long long>(
                    eval_formula(CostFormula::wmsa, h, w, C, M)));
    std::printf("  residual group    %llu\n",
                static_cast<unsigned long long>(
                    eval_formula(CostFormula::rstb, h, w, C, M)));
    std::printf("  merge stage       %llu\n",
                static_cast<unsigned long long>(
                    eval_formula(CostFormula::swin_stage, h, w, C, M)));
  } else {
    const ComplexityReport r = analyze_mswinsr(cfg.mswin, h, w);
    std::fputs(report_text(r).c_str(), stdout);
    json_out = report_json(r) + "\n";
    const std::size_t C = cfg.mswin.channels, M = cfg.mswin.window;
    std::printf("cost formulas at %zux%zu, C=%zu, M=%zu:\n", h, w, C, M);
    std::printf("  window attention  %llu\n",
                static_cast<unsigned long long>(
                    eval_formula(CostFormula::wmsa, h, w, C, M)));
    std::printf("  residual group    %llu\n",
                static_cast<unsigned long long>(
                    eval_formula(CostFormula::rstb, h, w, C, M)));
    std::printf("  merge stage       %llu\n",
                static_cast<unsigned long long>(
                    eval_formula(CostFormula::swin_stage, h, w, C, M)));
  }
  if (!out_path.empty()) {
    write_text_file(out_path, json_out);
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}

int run_degrade(const std::string& in_dir, const std::string& out_dir,
                const std::string& config_path) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  const std::size_t scale = cfg.uses_ugswin() ? cfg.ugswin.scale : cfg.mswin.scale;
  const std::vector<std::string> names = list_ppm(in_dir);
  if (names.empty()) throw IoError(in_dir + ": no .ppm images found");
  fs::create_directories(out_dir + "/lr");
  fs::create_directories(out_dir + "/hr");
  for (const std::string& name : names) {
    const PairedSample p =
        degrade_pair(read_ppm(in_dir + "/" + name), cfg.data.hr_size, scale);
    write_ppm(out_dir + "/lr/" + name, p.lr);
    write_ppm(out_dir + "/hr/" + name, p.hr);
  }
  std::printf("wrote %zu pairs to %s/lr and %s/hr\n", names.size(),
              out_dir.c_str(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srlite: lightweight window-attention super-resolution"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, in_path, out_path, input = "64x64";
  std::uint64_t seed = 0;

  CLI::App* train = app.add_subcommand("train", "train a model per config");
  train->add_option("--config", config_path, "run config (JSON)")->required();
  CLI::Option* train_ckpt = train->add_option(
      "--checkpoint", ckpt_path, "resume from this checkpoint");
  CLI::Option* train_seed =
      train->add_option("--seed", seed, "override the config seed");
  train->add_option("--out", out_path, "override the output directory");

  CLI::App* sr = app.add_subcommand("sr", "upscale one PPM image");
  sr->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  sr->add_option("--in", in_path, "input image (PPM)")->required();
  sr->add_option("--out", out_path, "output image (PPM)")->required();

  CLI::App* eval = app.add_subcommand(
      "eval", "PSNR/SSIM table over a paired directory (lr/ and hr/)");
  eval->add_option("--in", in_path, "directory with lr/ and hr/ subdirs")
      ->required();
  eval->add_option("--checkpoint", ckpt_path,
                   "also evaluate this trained model");

  CLI::App* analyze = app.add_subcommand(
      "analyze", "parameter and multiply-add report for a config");
  analyze->add_option("--config", config_path, "run config (JSON)");
  analyze->add_option("--input", input, "input size as WxH")
      ->capture_default_str();
  analyze->add_option("--out", out_path, "write the report as JSON here");

  CLI::App* degrade = app.add_subcommand(
      "degrade", "build LR/HR training pairs from a directory of images");
  degrade->add_option("--in", in_path, "directory of .ppm images")->required();
  degrade->add_option("--out", out_path, "output directory")->required();
  degrade->add_option("--config", config_path,
                      "run config controlling hr_size and scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(train)) {
      return run_train(config_path, train_ckpt->count() ? ckpt_path : "",
                       train_seed->count() > 0, seed, out_path);
    }
    if (app.got_subcommand(sr)) return run_sr(ckpt_path, in_path, out_path);
    if (app.got_subcommand(eval)) return run_eval(in_path, ckpt_path);
    if (app.got_subcommand(analyze)) {
      return run_analyze(config_path, input, out_path);
    }
    if (app.got_subcommand(degrade)) {
      return run_degrade(in_path, out_path, config_path);
    }
  } catch (const srlite::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
