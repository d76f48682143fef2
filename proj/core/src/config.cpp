#include "secl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "secl/error.hpp"
#include "secl/format.hpp"

namespace secl {

std::string to_string(EvalMode m) {
  switch (m) {
    case EvalMode::aee: return "aee";
    case EvalMode::se: return "se";
    case EvalMode::noe: return "noe";
    case EvalMode::misaligned: return "misaligned";
    case EvalMode::naive_base: return "naive_base";
  }
  return "?";
}

EvalMode eval_mode_from_string(const std::string& s) {
  for (EvalMode m : {EvalMode::aee, EvalMode::se, EvalMode::noe, EvalMode::misaligned, EvalMode::naive_base}) {
    if (to_string(m) == s) return m;
  }
  throw Error("unknown ensemble mode '" + s + "' (expected aee, se, noe, misaligned or naive_base)");
}

std::string to_string(StreamKind k) { return k == StreamKind::synthetic ? "synthetic" : "idx"; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error("config: bad value '" + v + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: bad boolean '" + v + "' for " + key);
}

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define SECL_SIZE_FIELD(name, expr)                                                        \
  Field {                                                                                  \
    name, [](const ExperimentConfig& c) { return std::to_string(c.expr); },                \
        [](ExperimentConfig& c, const std::string& v) { c.expr = parse_number<std::size_t>(name, v); } \
  }
#define SECL_U64_FIELD(name, expr)                                                         \
  Field {                                                                                  \
    name, [](const ExperimentConfig& c) { return std::to_string(c.expr); },                \
        [](ExperimentConfig& c, const std::string& v) { c.expr = parse_number<std::uint64_t>(name, v); } \
  }
#define SECL_REAL_FIELD(name, expr)                                                        \
  Field {                                                                                  \
    name, [](const ExperimentConfig& c) { return format_double(c.expr); },                 \
        [](ExperimentConfig& c, const std::string& v) { c.expr = parse_number<double>(name, v); } \
  }
#define SECL_BOOL_FIELD(name, expr)                                                        \
  Field {                                                                                  \
    name, [](const ExperimentConfig& c) { return std::string(c.expr ? "true" : "false"); }, \
        [](ExperimentConfig& c, const std::string& v) { c.expr = parse_bool(name, v); }    \
  }
#define SECL_PATH_FIELD(name, expr)                                                        \
  Field {                                                                                  \
    name, [](const ExperimentConfig& c) { return c.expr.string(); },                       \
        [](ExperimentConfig& c, const std::string& v) { c.expr = v; }                      \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"stream.kind", [](const ExperimentConfig& c) { return to_string(c.stream_kind); },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "synthetic") c.stream_kind = StreamKind::synthetic;
         else if (v == "idx") c.stream_kind = StreamKind::idx;
         else throw Error("config: stream.kind must be synthetic or idx");
       }},
      SECL_SIZE_FIELD("stream.tasks", layout.tasks),
      SECL_SIZE_FIELD("stream.first_task_classes", layout.first_task_classes),
      SECL_U64_FIELD("stream.shuffle_seed", shuffle_seed),
      SECL_SIZE_FIELD("synthetic.classes_per_task", synthetic.classes_per_task),
      SECL_SIZE_FIELD("synthetic.input_dim", synthetic.input_dim),
      SECL_SIZE_FIELD("synthetic.block_dims", synthetic.block_dims),
      SECL_REAL_FIELD("synthetic.noise", synthetic.noise),
      SECL_SIZE_FIELD("synthetic.samples_per_class", synthetic.samples_per_class),
      SECL_SIZE_FIELD("synthetic.pretrain_classes", synthetic.pretrain_classes),
      SECL_PATH_FIELD("idx.train_images", train_images),
      SECL_PATH_FIELD("idx.train_labels", train_labels),
      SECL_PATH_FIELD("idx.test_images", test_images),
      SECL_PATH_FIELD("idx.test_labels", test_labels),
      SECL_SIZE_FIELD("idx.pretrain_holdout_classes", layout.pretrain_holdout_classes),
      SECL_REAL_FIELD("idx.pretrain_fraction", layout.pretrain_sample_fraction),
      {"backbone.kind", [](const ExperimentConfig& c) { return to_string(c.backbone.kind); },
       [](ExperimentConfig& c, const std::string& v) { c.backbone.kind = backbone_kind_from_string(v); }},
      SECL_SIZE_FIELD("backbone.dim", backbone.output_dim),
      SECL_SIZE_FIELD("backbone.hidden", backbone.hidden_dim),
      SECL_REAL_FIELD("backbone.gain", backbone.gain),
      SECL_SIZE_FIELD("backbone.pretrain_epochs", backbone.pretrain_epochs),
      SECL_REAL_FIELD("backbone.pretrain_lr", backbone.pretrain_lr),
      SECL_SIZE_FIELD("backbone.pretrain_batch", backbone.pretrain_batch),
      {"peft.kind", [](const ExperimentConfig& c) { return to_string(c.peft.kind); },
       [](ExperimentConfig& c, const std::string& v) { c.peft.kind = peft_kind_from_string(v); }},
      SECL_SIZE_FIELD("peft.rank", peft.rank),
      {"peft.optimizer", [](const ExperimentConfig& c) { return std::string(c.peft.optimizer == OptimKind::adam ? "adam" : "sgd"); },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "adam") c.peft.optimizer = OptimKind::adam;
         else if (v == "sgd") c.peft.optimizer = OptimKind::sgd;
         else throw Error("config: peft.optimizer must be adam or sgd");
       }},
      SECL_REAL_FIELD("peft.lr", peft.lr),
      SECL_SIZE_FIELD("peft.epochs", peft.epochs),
      SECL_SIZE_FIELD("peft.batch", peft.batch),
      SECL_REAL_FIELD("peft.alpha", peft.alpha),
      SECL_REAL_FIELD("peft.weight_decay", peft.weight_decay),
      SECL_REAL_FIELD("classifier.lr", classifier.lr),
      SECL_SIZE_FIELD("classifier.epochs", classifier.epochs),
      SECL_SIZE_FIELD("classifier.batch", classifier.batch),
      {"classifier.score", [](const ExperimentConfig& c) { return to_string(c.score_kind); },
       [](ExperimentConfig& c, const std::string& v) { c.score_kind = score_kind_from_string(v); }},
      {"eval.mode", [](const ExperimentConfig& c) { return to_string(c.mode); },
       [](ExperimentConfig& c, const std::string& v) { c.mode = eval_mode_from_string(v); }},
      SECL_BOOL_FIELD("eval.expertise", expertise),
      SECL_BOOL_FIELD("eval.probe", probe),
      SECL_BOOL_FIELD("run.save_state", save_state),
      SECL_U64_FIELD("run.seed", seed),
      {"sweep.seeds",
       [](const ExperimentConfig& c) {
         return join<std::uint64_t>(c.sweep_seeds, [](const std::uint64_t& s) { return std::to_string(s); });
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.sweep_seeds.clear();
         for (const auto& s : split_list(v)) c.sweep_seeds.push_back(parse_number<std::uint64_t>("sweep.seeds", s));
       }},
      {"sweep.alphas",
       [](const ExperimentConfig& c) {
         return join<double>(c.sweep_alphas, [](const double& a) { return format_double(a); });
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.sweep_alphas.clear();
         for (const auto& s : split_list(v)) c.sweep_alphas.push_back(parse_number<double>("sweep.alphas", s));
       }},
      {"sweep.modes",
       [](const ExperimentConfig& c) {
         return join<EvalMode>(c.sweep_modes, [](const EvalMode& m) { return to_string(m); });
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.sweep_modes.clear();
         for (const auto& s : split_list(v)) c.sweep_modes.push_back(eval_mode_from_string(s));
       }},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(layout.tasks >= 1, "config: stream.tasks must be at least 1");
  if (stream_kind == StreamKind::idx) {
    require(!train_images.empty() && !train_labels.empty() && !test_images.empty() && !test_labels.empty(),
            "config: idx streams need idx.train_images, idx.train_labels, idx.test_images, idx.test_labels");
  } else {
    require(synthetic.input_dim >= layout.tasks * synthetic.block_dims,
            "config: synthetic.input_dim must be at least stream.tasks * synthetic.block_dims");
    require(peft.alpha == 0.0, "config: peft.alpha > 0 needs image inputs (SSL requires image inputs)");
    if (backbone.kind == BackboneKind::frozen_pretrained_mlp) {
      require(synthetic.pretrain_classes > 0,
              "config: frozen_pretrained_mlp on synthetic data needs synthetic.pretrain_classes > 0");
    }
  }
  if (backbone.kind == BackboneKind::frozen_pretrained_mlp && stream_kind == StreamKind::idx) {
    require(layout.pretrain_holdout_classes > 0 || layout.pretrain_sample_fraction > 0.0,
            "config: frozen_pretrained_mlp needs idx.pretrain_holdout_classes or idx.pretrain_fraction");
  }
  require(peft.alpha >= 0.0, "config: peft.alpha must be non-negative");
  require(peft.rank >= 1 && peft.rank <= backbone.output_dim, "config: peft.rank must be in [1, backbone.dim]");
  require(peft.lr > 0.0 && classifier.lr > 0.0, "config: learning rates must be positive");
  require(peft.epochs > 0 && classifier.epochs > 0, "config: epochs must be positive");
  require(peft.batch > 0 && classifier.batch > 0, "config: batch sizes must be positive");
  require(peft.alpha >= 0.0 && peft.weight_decay >= 0.0, "config: peft.alpha and peft.weight_decay must be >= 0");
  for (double a : sweep_alphas) require(a >= 0.0, "config: sweep.alphas must be >= 0");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::map<std::string, const Field*> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;

  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = by_key.find(key);
    if (it == by_key.end()) throw Error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    try {
      it->second->set(cfg, value);
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(line_no) + ": " + key + ": " + e.what());
    }
  }
  if (!base_dir.empty()) {
    for (auto* p : {&cfg.train_images, &cfg.train_labels, &cfg.test_images, &cfg.test_labels}) {
      if (!p->empty() && p->is_relative()) *p = base_dir / *p;
    }
  }
  cfg.synthetic.tasks = cfg.layout.tasks;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

}  // namespace secl
