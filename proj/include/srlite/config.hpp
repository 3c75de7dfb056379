#pragma once

#include <string>

#include "srlite/mswinsr.hpp"
#include "srlite/trainer.hpp"
#include "srlite/ugswinsr.hpp"

namespace srlite {

// Where training pairs come from. "synthetic" renders n procedural images;
// "directory" degrades every .ppm found under path. Either way images are
// center-cropped, resized to hr_size, and downscaled by the model's scale.
struct DatasetSpec {
  std::string source = "synthetic";
  std::string path;
  std::size_t n = 16;
  std::size_t hr_size = 256;
};

// One run description, read from a JSON file. model selects the
// architecture: "mswinsr" (multi-size window model), "uswinsr" (the U-shaped
// generator trained on pixel loss alone), or "ugswinsr" (the same generator
// with a discriminator and adversarial loss).
struct RunConfig {
  std::string model = "mswinsr";
  MswinConfig mswin;
  UgswinConfig ugswin;
  TrainConfig train;
  DatasetSpec data;
  std::string out_dir = "out";
  std::string checkpoint;

  bool uses_ugswin() const { return model != "mswinsr"; }
  void validate() const;
};

// Strict parse: JSON syntax errors report line and column, duplicate and
// unknown keys are rejected by key path, and every constraint violation
// names the offending key. Absent keys take the documented defaults.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Emits JSON that parses back to an identical RunConfig.
std::string serialize_config(const RunConfig& cfg);

}  // namespace srlite
