#include "srlite/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace srlite {

namespace {

using nlohmann::json;

json dom_parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t byte = e.byte;  // 1-based position of the offending byte
    if (byte == 0) byte = 1;
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("syntax error at line " + std::to_string(line) +
                      ", column " + std::to_string(col));
  }
}

// SAX pass that only checks for duplicate object keys, which the DOM parser
// would silently collapse. Tracks the key path for the error message.
struct DupScan : json::json_sax_t {
  struct Frame {
    bool object;
    std::string prefix;
    std::set<std::string> seen;
    std::string pending;
    std::size_t index = 0;
  };
  std::vector<Frame> stack;
  std::string dup;

  bool value() {
    if (!stack.empty() && !stack.back().object) ++stack.back().index;
    return true;
  }
  std::string child_prefix() {
    if (stack.empty()) return "";
    Frame& f = stack.back();
    if (f.object) {
      return f.prefix.empty() ? f.pending : f.prefix + "." + f.pending;
    }
    std::string p = f.prefix + "[" + std::to_string(f.index) + "]";
    ++f.index;
    return p;
  }

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(json::number_integer_t) override { return value(); }
  bool number_unsigned(json::number_unsigned_t) override { return value(); }
  bool number_float(json::number_float_t, const std::string&) override {
    return value();
  }
  bool string(json::string_t&) override { return value(); }
  bool binary(json::binary_t&) override { return value(); }
  bool start_object(std::size_t) override {
    stack.push_back(Frame{true, child_prefix(), {}, "", 0});
    return true;
  }
  bool key(json::string_t& k) override {
    Frame& f = stack.back();
    if (!f.seen.insert(k).second) {
      dup = "duplicate key '" + (f.prefix.empty() ? k : f.prefix + "." + k) + "'";
      return false;
    }
    f.pending = k;
    return true;
  }
  bool end_object() override {
    stack.pop_back();
    return true;
  }
  bool start_array(std::size_t) override {
    stack.push_back(Frame{false, child_prefix(), {}, "", 0});
    return true;
  }
  bool end_array() override {
    stack.pop_back();
    return true;
  }
  bool parse_error(std::size_t, const std::string&,
                   const nlohmann::detail::exception&) override {
    return false;
  }
};

// Tracks which keys of an object were consumed so leftovers can be rejected.
class ObjView {
 public:
  ObjView(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) {
      throw ConfigError(path_.empty() ? "config root must be a JSON object"
                                      : "key '" + path_ + "' must be an object");
    }
  }
  const json* find(const std::string& name) {
    seen_.insert(name);
    auto it = j_.find(name);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string sub(const std::string& k) const {
    return path_.empty() ? k : path_ + "." + k;
  }
  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError("unknown key '" + sub(item.key()) + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError("key '" + path + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t get_uint(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) {
    throw ConfigError("key '" + path + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::size_t get_count(const json& v, const std::string& path, bool positive) {
  if (!v.is_number_unsigned() || (positive && v.get<std::uint64_t>() == 0)) {
    throw ConfigError("key '" + path + "' must be a " +
                      std::string(positive ? "positive" : "non-negative") +
                      " integer");
  }
  return static_cast<std::size_t>(v.get<std::uint64_t>());
}

double get_num(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError("key '" + path + "' must be a number");
  return v.get<double>();
}

void parse_arch(const json& j, RunConfig& cfg) {
  ObjView a(j, "arch");
  if (cfg.uses_ugswin()) {
    UgswinConfig& u = cfg.ugswin;
    if (auto* v = a.find("channels")) u.channels = get_count(*v, a.sub("channels"), true);
    if (auto* v = a.find("depth")) u.depth = get_count(*v, a.sub("depth"), true);
    if (auto* v = a.find("window")) u.window = get_count(*v, a.sub("window"), true);
    if (auto* v = a.find("scale")) u.scale = get_count(*v, a.sub("scale"), true);
    if (auto* v = a.find("in_channels")) u.in_channels = get_count(*v, a.sub("in_channels"), true);
    if (auto* v = a.find("num_heads")) u.num_heads = get_count(*v, a.sub("num_heads"), true);
    if (auto* v = a.find("blocks_per_level")) u.blocks_per_level = get_count(*v, a.sub("blocks_per_level"), true);
    if (auto* v = a.find("lr_size")) u.lr_size = get_count(*v, a.sub("lr_size"), true);
  } else {
    MswinConfig& m = cfg.mswin;
    if (auto* v = a.find("channels")) m.channels = get_count(*v, a.sub("channels"), true);
    if (auto* v = a.find("depth")) {
      if (!v->is_array() || v->empty()) {
        throw ConfigError("key 'arch.depth' must be a non-empty array of "
                          "positive integers");
      }
      m.depth.clear();
      for (const json& e : *v) {
        if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0) {
          throw ConfigError("key 'arch.depth' must be a non-empty array of "
                            "positive integers");
        }
        m.depth.push_back(static_cast<std::size_t>(e.get<std::uint64_t>()));
      }
    }
    if (auto* v = a.find("window")) m.window = get_count(*v, a.sub("window"), true);
    if (auto* v = a.find("scale")) m.scale = get_count(*v, a.sub("scale"), true);
    if (auto* v = a.find("in_channels")) m.in_channels = get_count(*v, a.sub("in_channels"), true);
    if (auto* v = a.find("num_heads")) m.num_heads = get_count(*v, a.sub("num_heads"), true);
  }
  a.finish();
}

void parse_train(const json& j, TrainConfig& t) {
  ObjView o(j, "train");
  if (auto* v = o.find("epochs")) t.epochs = get_count(*v, o.sub("epochs"), true);
  if (auto* v = o.find("batch_size")) t.batch_size = get_count(*v, o.sub("batch_size"), true);
  if (auto* v = o.find("seed")) t.seed = get_uint(*v, o.sub("seed"));
  if (auto* v = o.find("regime")) {
    t.regime = get_string(*v, o.sub("regime"));
    if (t.regime != "l1" && t.regime != "gan") {
      throw ConfigError("key 'train.regime' must be 'l1' or 'gan'");
    }
  }
  if (auto* v = o.find("eval_every")) t.eval_every = get_count(*v, o.sub("eval_every"), false);
  if (auto* v = o.find("lr")) t.adam.lr = get_num(*v, o.sub("lr"));
  if (auto* v = o.find("beta1")) t.adam.beta1 = get_num(*v, o.sub("beta1"));
  if (auto* v = o.find("beta2")) t.adam.beta2 = get_num(*v, o.sub("beta2"));
  if (auto* v = o.find("eps")) t.adam.eps = get_num(*v, o.sub("eps"));
  if (auto* v = o.find("lambda_pixel")) t.gan.lambda_pixel = get_num(*v, o.sub("lambda_pixel"));
  if (auto* v = o.find("lambda_adv")) t.gan.lambda_adv = get_num(*v, o.sub("lambda_adv"));
  o.finish();
}

void parse_data(const json& j, DatasetSpec& d) {
  ObjView o(j, "data");
  if (auto* v = o.find("source")) {
    d.source = get_string(*v, o.sub("source"));
    if (d.source != "synthetic" && d.source != "directory") {
      throw ConfigError("key 'data.source' must be 'synthetic' or 'directory'");
    }
  }
  if (auto* v = o.find("path")) d.path = get_string(*v, o.sub("path"));
  if (auto* v = o.find("n")) d.n = get_count(*v, o.sub("n"), true);
  if (auto* v = o.find("hr_size")) d.hr_size = get_count(*v, o.sub("hr_size"), true);
  o.finish();
}

}  // namespace

void RunConfig::validate() const {
  if (model != "mswinsr" && model != "uswinsr" && model != "ugswinsr") {
    throw ConfigError(
        "key 'model' must be one of 'mswinsr', 'uswinsr', 'ugswinsr'");
  }
  if (uses_ugswin()) {
    ugswin.validate();
  } else {
    mswin.validate();
  }
  train.validate();
  const std::string want = model == "ugswinsr" ? "gan" : "l1";
  if (train.regime != want) {
    throw ConfigError("key 'train.regime' must be '" + want + "' for model '" +
                      model + "'");
  }
  if (data.source != "synthetic" && data.source != "directory") {
    throw ConfigError("key 'data.source' must be 'synthetic' or 'directory'");
  }
  if (data.source == "directory" && data.path.empty()) {
    throw ConfigError("key 'data.path' is required when data.source is "
                      "'directory'");
  }
  if (data.source == "synthetic" && data.n == 0) {
    throw ConfigError("key 'data.n' must be a positive integer");
  }
  const std::size_t scale = uses_ugswin() ? ugswin.scale : mswin.scale;
  if (data.hr_size < 2) {
    throw ConfigError("key 'data.hr_size' must be at least 2");
  }
  if (data.hr_size % scale != 0) {
    throw ConfigError("key 'data.hr_size' must be divisible by the scale " +
                      std::to_string(scale));
  }
  const std::size_t lr = data.hr_size / scale;
  if (uses_ugswin()) {
    if (ugswin.lr_size != lr) {
      throw ConfigError("key 'arch.lr_size' (" + std::to_string(ugswin.lr_size) +
                        ") must equal data.hr_size / scale (" +
                        std::to_string(lr) + ")");
    }
  } else if (lr % mswin.window != 0) {
    throw ConfigError("key 'data.hr_size': the derived input size " +
                      std::to_string(lr) + " is not divisible by the window " +
                      std::to_string(mswin.window));
  }
}

RunConfig parse_config(const std::string& text) {
  const json j = dom_parse(text);
  DupScan scan;
  json::sax_parse(text, &scan);
  if (!scan.dup.empty()) throw ConfigError(scan.dup);

  RunConfig cfg;
  ObjView root(j, "");
  if (auto* v = root.find("model")) {
    cfg.model = get_string(*v, "model");
    if (cfg.model != "mswinsr" && cfg.model != "uswinsr" &&
        cfg.model != "ugswinsr") {
      throw ConfigError(
          "key 'model' must be one of 'mswinsr', 'uswinsr', 'ugswinsr'");
    }
  }
  cfg.train.regime = cfg.model == "ugswinsr" ? "gan" : "l1";
  if (auto* v = root.find("arch")) parse_arch(*v, cfg);
  if (auto* v = root.find("train")) parse_train(*v, cfg.train);
  if (auto* v = root.find("data")) parse_data(*v, cfg.data);
  if (auto* v = root.find("out_dir")) cfg.out_dir = get_string(*v, "out_dir");
  if (auto* v = root.find("checkpoint")) cfg.checkpoint = get_string(*v, "checkpoint");
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  json a;
  if (cfg.uses_ugswin()) {
    const UgswinConfig& u = cfg.ugswin;
    a["channels"] = u.channels;
    a["depth"] = u.depth;
    a["window"] = u.window;
    a["scale"] = u.scale;
    a["in_channels"] = u.in_channels;
    a["num_heads"] = u.num_heads;
    a["blocks_per_level"] = u.blocks_per_level;
    a["lr_size"] = u.lr_size;
  } else {
    const MswinConfig& m = cfg.mswin;
    a["channels"] = m.channels;
    a["depth"] = m.depth;
    a["window"] = m.window;
    a["scale"] = m.scale;
    a["in_channels"] = m.in_channels;
    a["num_heads"] = m.num_heads;
  }
  json t;
  t["epochs"] = cfg.train.epochs;
  t["batch_size"] = cfg.train.batch_size;
  t["seed"] = cfg.train.seed;
  t["regime"] = cfg.train.regime;
  t["eval_every"] = cfg.train.eval_every;
  t["lr"] = cfg.train.adam.lr;
  t["beta1"] = cfg.train.adam.beta1;
  t["beta2"] = cfg.train.adam.beta2;
  t["eps"] = cfg.train.adam.eps;
  t["lambda_pixel"] = cfg.train.gan.lambda_pixel;
  t["lambda_adv"] = cfg.train.gan.lambda_adv;
  json d;
  d["source"] = cfg.data.source;
  if (!cfg.data.path.empty()) d["path"] = cfg.data.path;
  d["n"] = cfg.data.n;
  d["hr_size"] = cfg.data.hr_size;
  json j;
  j["model"] = cfg.model;
  j["arch"] = a;
  j["train"] = t;
  j["data"] = d;
  j["out_dir"] = cfg.out_dir;
  if (!cfg.checkpoint.empty()) j["checkpoint"] = cfg.checkpoint;
  return j.dump(2) + "\n";
}

}  // namespace srlite
