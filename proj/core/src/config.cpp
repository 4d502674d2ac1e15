#include "semeq/config.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semeq/errors.hpp"

namespace semeq {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- TOML subset
// Sections, dotted keys, scalars (string/int/float/bool) and single-line
// arrays — the slice of TOML experiment configs actually use. Everything is
// lowered into the same JSON document the JSON path produces.

struct TomlParser {
  std::string origin;
  int lineno = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(origin + ":" + std::to_string(lineno), "TOML parse error: " + what);
  }

  static void trim(std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  // strips a trailing comment that is not inside a string literal
  static void strip_comment(std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
      if (s[i] == '#' && !in_str) {
        s.resize(i);
        return;
      }
    }
  }

  json parse_scalar(std::string v) const {
    trim(v);
    if (v.empty()) fail("empty value");
    if (v.front() == '"') {
      if (v.size() < 2 || v.back() != '"') fail("unterminated string");
      std::string out;
      for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] == '\\' && i + 2 < v.size()) {
          ++i;
          switch (v[i]) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            default: fail("unsupported escape");
          }
        } else {
          out += v[i];
        }
      }
      return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    // number: integer when it looks integral, float otherwise
    try {
      std::size_t used = 0;
      if (v.find_first_of(".eE") == std::string::npos ||
          (v.size() > 1 && (v.substr(0, 2) == "0x"))) {
        const long long i = std::stoll(v, &used);
        if (used == v.size()) return i;
      }
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + v + "'");
  }

  json parse_value(std::string v) const {
    trim(v);
    if (v.empty()) fail("empty value");
    if (v.front() != '[') return parse_scalar(v);
    if (v.back() != ']') fail("unterminated array");
    json arr = json::array();
    std::string body = v.substr(1, v.size() - 2);
    trim(body);
    if (body.empty()) return arr;
    std::string cur;
    bool in_str = false;
    for (char ch : body) {
      if (ch == '"') in_str = !in_str;
      if (ch == ',' && !in_str) {
        arr.push_back(parse_scalar(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    arr.push_back(parse_scalar(cur));
    return arr;
  }

  static std::vector<std::string> split_key(const std::string& key) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : key) {
      if (ch == '.') {
        parts.push_back(cur);
        cur.clear();
      } else if (!std::isspace(static_cast<unsigned char>(ch))) {
        cur += ch;
      }
    }
    parts.push_back(cur);
    for (const auto& p : parts)
      if (p.empty()) return {};
    return parts;
  }

  json parse(const std::string& text) {
    json doc = json::object();
    json* table = &doc;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      ++lineno;
      strip_comment(line);
      trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail("unterminated section header");
        const auto parts = split_key(line.substr(1, line.size() - 2));
        if (parts.empty()) fail("bad section name");
        table = &doc;
        for (const auto& p : parts) table = &(*table)[p];
        if (!table->is_object() && !table->is_null()) fail("section clashes with a value");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected key = value");
      const auto parts = split_key(line.substr(0, eq));
      if (parts.empty()) fail("bad key");
      json* slot = table;
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) slot = &(*slot)[parts[i]];
      (*slot)[parts.back()] = parse_value(line.substr(eq + 1));
    }
    return doc;
  }
};

// ------------------------------------------------------------- strict lowering

// Tracks which keys a section consumed so leftovers can be reported by path.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected a table/object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) { return j_.at(key); }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double num(const std::string& key, double dflt) {
    if (!has(key)) return dflt;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int dflt) {
    if (!has(key)) return dflt;
    const json& v = j_.at(key);
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == static_cast<double>(static_cast<long long>(d)))
        return static_cast<int>(d);
    }
    throw ConfigError(key_path(key), "expected an integer");
  }

  std::uint64_t seed(const std::string& key, std::uint64_t dflt) {
    if (!has(key)) return dflt;
    const json& v = j_.at(key);
    if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::uint64_t>();
    throw ConfigError(key_path(key), "expected an integer seed");
  }

  std::string str(const std::string& key, const std::string& dflt) {
    if (!has(key)) return dflt;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<int> int_list(const std::string& key) {
    std::vector<int> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(key_path(key), "expected an array");
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError(key_path(key), "expected integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  std::vector<double> num_list(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(key_path(key), "expected an array");
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key_path(key), "expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(key_path(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

TaskConfig lower_task(const json& j) {
  TaskConfig t;
  Section s(j, "task");
  const std::string kind = s.str("kind", "synthetic");
  if (kind == "synthetic") {
    t.synthetic = true;
  } else if (kind == "files") {
    t.synthetic = false;
  } else {
    throw ConfigError("task.kind", "expected 'synthetic' or 'files'");
  }
  t.spec.concept_dim = s.integer("concept_dim", t.spec.concept_dim);
  t.spec.n_classes = s.integer("n_classes", t.spec.n_classes);
  t.spec.n_theta = s.integer("n_theta", t.spec.n_theta);
  t.spec.n_gamma = s.integer("n_gamma", t.spec.n_gamma);
  const std::string mm = s.str("mismatch", "linear");
  if (mm == "linear") {
    t.spec.mismatch = MismatchKind::Linear;
  } else if (mm == "nonlinear") {
    t.spec.mismatch = MismatchKind::Nonlinear;
  } else {
    throw ConfigError("task.mismatch", "expected 'linear' or 'nonlinear'");
  }
  t.spec.class_separation = s.num("class_separation", t.spec.class_separation);
  t.spec.latent_noise = s.num("latent_noise", t.spec.latent_noise);
  t.spec.within_var = s.num("within_var", t.spec.within_var);
  t.spec.nuisance_var = s.num("nuisance_var", t.spec.nuisance_var);
  t.spec.n_total = s.integer("n_total", t.spec.n_total);
  t.spec.n_train = s.integer("n_train", t.spec.n_train);
  t.spec.n_val = s.integer("n_val", t.spec.n_val);
  t.spec.seed = s.seed("seed", t.spec.seed);
  t.theta_path = s.str("theta_path", "");
  t.gamma_path = s.str("gamma_path", "");
  t.labels_path = s.str("labels_path", "");
  if (!t.synthetic) {
    if (t.theta_path.empty()) throw ConfigError("task.theta_path", "required in files mode");
    if (t.gamma_path.empty()) throw ConfigError("task.gamma_path", "required in files mode");
  }
  s.finish();
  return t;
}

ChannelParams lower_channel(const json& j) {
  ChannelParams c;
  Section s(j, "channel");
  c.n_t = s.integer("n_t", c.n_t);
  c.n_r = s.integer("n_r", c.n_r);
  c.n_phi = s.integer("n_phi", c.n_phi);
  c.k_uses = s.integer("k_uses", c.k_uses);
  c.alpha_d = s.num("alpha_d", c.alpha_d);
  c.alpha_1 = s.num("alpha_1", c.alpha_1);
  c.alpha_2 = s.num("alpha_2", c.alpha_2);
  c.snr_db = s.num("snr_db", c.snr_db);
  c.power = s.num("power", c.power);
  if (c.n_t < 1) throw ConfigError("channel.n_t", "must be >= 1");
  if (c.n_r < 1) throw ConfigError("channel.n_r", "must be >= 1");
  if (c.n_phi < 0) throw ConfigError("channel.n_phi", "must be >= 0");
  if (c.k_uses < 1) throw ConfigError("channel.k_uses", "must be >= 1");
  if (!(c.power > 0)) throw ConfigError("channel.power", "must be > 0");
  if (!(c.alpha_d > 0) || !(c.alpha_1 > 0) || !(c.alpha_2 > 0))
    throw ConfigError("channel.alpha_d", "attenuations must be > 0");
  s.finish();
  return c;
}

ExperimentConfig lower(const json& doc) {
  ExperimentConfig cfg;
  Section root(doc, "");
  if (root.has("task")) cfg.task = lower_task(root.raw("task"));
  if (root.has("channel")) cfg.channel = lower_channel(root.raw("channel"));
  cfg.method = method_from_name(root.str("method", "linear"));
  if (root.has("admm")) {
    Section s(root.raw("admm"), "admm");
    cfg.admm.rho = s.num("rho", cfg.admm.rho);
    cfg.admm.max_iters = s.integer("max_iters", cfg.admm.max_iters);
    cfg.admm.tol_rel = s.num("tol_rel", cfg.admm.tol_rel);
    if (cfg.admm.max_iters < 1) throw ConfigError("admm.max_iters", "must be >= 1");
    if (!(cfg.admm.rho > 0)) throw ConfigError("admm.rho", "must be > 0");
    s.finish();
  }
  if (root.has("train")) {
    Section s(root.raw("train"), "train");
    cfg.train.tau = s.num("tau", cfg.train.tau);
    cfg.train.batch = s.integer("batch", cfg.train.batch);
    cfg.train.max_epochs = s.integer("max_epochs", cfg.train.max_epochs);
    cfg.train.patience = s.integer("patience", cfg.train.patience);
    cfg.train.beta = s.num("beta", cfg.train.beta);
    cfg.train.beta1 = s.num("beta1", cfg.train.beta1);
    cfg.train.beta2 = s.num("beta2", cfg.train.beta2);
    cfg.train.eps = s.num("eps", cfg.train.eps);
    cfg.train.ema_momentum = s.num("ema_momentum", cfg.train.ema_momentum);
    if (cfg.train.batch < 1) throw ConfigError("train.batch", "must be >= 1");
    if (cfg.train.max_epochs < 1) throw ConfigError("train.max_epochs", "must be >= 1");
    if (cfg.train.patience < 1) throw ConfigError("train.patience", "must be >= 1");
    if (cfg.train.beta < 0) throw ConfigError("train.beta", "must be >= 0");
    if (!(cfg.train.tau > 0)) throw ConfigError("train.tau", "must be > 0");
    s.finish();
  }
  cfg.phy_iters = root.integer("phy_iters", cfg.phy_iters);
  if (cfg.phy_iters < 1) throw ConfigError("phy_iters", "must be >= 1");
  if (root.has("sweep")) {
    Section s(root.raw("sweep"), "sweep");
    cfg.sweep.k_uses = s.int_list("k_uses");
    cfg.sweep.n_t = s.int_list("n_t");
    cfg.sweep.n_phi = s.int_list("n_phi");
    cfg.sweep.n_train = s.int_list("n_train");
    cfg.sweep.snr_db = s.num_list("snr_db");
    cfg.sweep.beta = s.num_list("beta");
    for (int v : cfg.sweep.k_uses)
      if (v < 1) throw ConfigError("sweep.k_uses", "values must be >= 1");
    for (int v : cfg.sweep.n_t)
      if (v < 1) throw ConfigError("sweep.n_t", "values must be >= 1");
    for (int v : cfg.sweep.n_phi)
      if (v < 0) throw ConfigError("sweep.n_phi", "values must be >= 0");
    for (int v : cfg.sweep.n_train)
      if (v < 2) throw ConfigError("sweep.n_train", "values must be >= 2");
    for (double v : cfg.sweep.beta)
      if (v < 0) throw ConfigError("sweep.beta", "values must be >= 0");
    s.finish();
  }
  cfg.n_seeds = root.integer("n_seeds", cfg.n_seeds);
  if (cfg.n_seeds < 1) throw ConfigError("n_seeds", "must be >= 1");
  cfg.n_noise_draws = root.integer("n_noise_draws", cfg.n_noise_draws);
  if (cfg.n_noise_draws < 1) throw ConfigError("n_noise_draws", "must be >= 1");
  if (root.has("adapt")) {
    Section s(root.raw("adapt"), "adapt");
    cfg.adapt.design_alpha_d = s.num("design_alpha_d", cfg.adapt.design_alpha_d);
    cfg.adapt.blocked_alpha_d = s.num("blocked_alpha_d", cfg.adapt.blocked_alpha_d);
    cfg.adapt.n_steps = s.integer("n_steps", cfg.adapt.n_steps);
    cfg.adapt.step = s.num("step", cfg.adapt.step);
    if (cfg.adapt.n_steps < 0) throw ConfigError("adapt.n_steps", "must be >= 0");
    if (!(cfg.adapt.step > 0)) throw ConfigError("adapt.step", "must be > 0");
    s.finish();
  }
  root.finish();
  return cfg;
}

void apply_override(json& doc, const std::string& key, const std::string& value) {
  const auto parts = TomlParser::split_key(key);
  if (parts.empty()) throw ConfigError(key, "bad override key");
  TomlParser tp;
  tp.origin = "--set " + key;
  json* slot = &doc;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) slot = &(*slot)[parts[i]];
  (*slot)[parts.back()] = tp.parse_value(value);
}

ExperimentConfig from_doc(json doc,
                          const std::vector<std::pair<std::string, std::string>>& ov) {
  for (const auto& [k, v] : ov) apply_override(doc, k, v);
  return lower(doc);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Linear: return "linear";
    case Method::Neural: return "neural";
    case Method::FirstK: return "first_k";
    case Method::TopK: return "top_k";
    case Method::EigenK: return "eigen_k";
  }
  return "linear";
}

Method method_from_name(const std::string& name) {
  if (name == "linear") return Method::Linear;
  if (name == "neural") return Method::Neural;
  if (name == "first_k") return Method::FirstK;
  if (name == "top_k") return Method::TopK;
  if (name == "eigen_k") return Method::EigenK;
  throw ConfigError("method", "unknown method '" + name + "'");
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>&
                                 overrides) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  const bool toml = !(path.size() >= 5 && path.substr(path.size() - 5) == ".json");
  return parse_config_text(buf.str(), toml, overrides);
}

ExperimentConfig parse_config_text(const std::string& text, bool toml,
                                   const std::vector<std::pair<std::string, std::string>>&
                                       overrides) {
  if (toml) {
    TomlParser tp;
    tp.origin = "config";
    return from_doc(tp.parse(text), overrides);
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("JSON parse error: ") + e.what());
  }
  return from_doc(std::move(doc), overrides);
}

}  // namespace semeq
