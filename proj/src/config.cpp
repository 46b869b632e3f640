#include "edgesim/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace edgesim {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Walks a parsed document and raises ConfigError with the source line of
/// the offending key. Keys are located by scanning the raw text for the
/// path components in order, which is exact for documents without repeated
/// key names along one path.
class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& problem) const {
    throw ConfigError(fmt::format("{}:{}: {}: {}", source_, line_of(path), path, problem));
  }

  int line_of(const std::string& path) const {
    std::size_t pos = 0;
    std::size_t start = 0;
    bool found_any = false;
    while (start < path.size()) {
      std::size_t dot = path.find('.', start);
      std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      start = dot == std::string::npos ? path.size() : dot + 1;
      auto bracket = key.find('[');
      if (bracket != std::string::npos) key.resize(bracket);
      if (key.empty()) continue;
      std::size_t hit = text_.find("\"" + key + "\"", pos);
      if (hit == std::string::npos) break;
      pos = hit;
      found_any = true;
    }
    if (!found_any) return 1;
    int line = 1;
    for (std::size_t i = 0; i < pos; ++i) line += text_[i] == '\n';
    return line;
  }

  double number(const json& node, const std::string& path, bool allow_inf = false) const {
    if (node.is_number()) return node.get<double>();
    if (allow_inf && node.is_string()) {
      auto s = node.get<std::string>();
      if (s == "inf" || s == "infinity" || s == "Infinity") return kInf;
    }
    fail(path, allow_inf ? "expected a number or \"inf\"" : "expected a number");
  }

  std::uint64_t unsigned_int(const json& node, const std::string& path) const {
    if (node.is_number_unsigned()) return node.get<std::uint64_t>();
    if (node.is_number_integer() && node.get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(node.get<std::int64_t>());
    }
    if (node.is_number_float()) {
      double v = node.get<double>();
      if (v >= 0 && std::floor(v) == v && v < 1.8e19) return static_cast<std::uint64_t>(v);
    }
    fail(path, "expected a nonnegative integer");
  }

  bool boolean(const json& node, const std::string& path) const {
    if (!node.is_boolean()) fail(path, "expected true or false");
    return node.get<bool>();
  }

  std::string string(const json& node, const std::string& path) const {
    if (!node.is_string()) fail(path, "expected a string");
    return node.get<std::string>();
  }

  std::pair<double, double> range(const json& node, const std::string& path) const {
    if (!node.is_array() || node.size() != 2) fail(path, "expected [lo, hi]");
    double lo = number(node[0], path), hi = number(node[1], path);
    if (!(lo > 0.0) || !(hi >= lo)) fail(path, "range must satisfy 0 < lo <= hi");
    return {lo, hi};
  }

  std::vector<double> numbers(const json& node, const std::string& path) const {
    if (!node.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < node.size(); ++k) {
      out.push_back(number(node[k], fmt::format("{}[{}]", path, k)));
    }
    return out;
  }

  void only_keys(const json& node, const std::string& path,
                 std::initializer_list<std::string_view> allowed) const {
    if (!node.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    for (auto it = node.begin(); it != node.end(); ++it) {
      bool ok = false;
      for (auto a : allowed) ok = ok || it.key() == a;
      if (!ok) fail(join(path, it.key()), "unknown key");
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  const std::string& text_;
  std::string source_;
};

json parse_document(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(fmt::format("{}:{}:{}: invalid JSON", source, line, col));
  }
}

/// Per-link means: a number (all links), an array (one per link), or
/// {"uniform": [lo, hi]} drawn once per link.
void read_link_means(const Reader& r, const json& node, const std::string& path,
                     std::vector<double>& means,
                     std::optional<std::pair<double, double>>& range) {
  range.reset();
  if (node.is_number()) {
    means.assign(1, r.number(node, path));
  } else if (node.is_array()) {
    means = r.numbers(node, path);
  } else if (node.is_object()) {
    r.only_keys(node, path, {"uniform"});
    if (!node.contains("uniform")) r.fail(path, "expected {\"uniform\": [lo, hi]}");
    range = r.range(node["uniform"], Reader::join(path, "uniform"));
  } else {
    r.fail(path, "expected a number, an array, or {\"uniform\": [lo, hi]}");
  }
}

struct FadingDraft {
  FadingSpec spec;
  std::size_t n_links = 0;
  bool has_n_links = false;
  std::optional<std::pair<double, double>> direct_range, interference_range;
};

FadingDraft read_fading(const Reader& r, const json& f, const std::string& path,
                        std::uint64_t network_seed) {
  r.only_keys(f, path, {"n_links", "direct_mean", "interference_mean", "n_external",
                        "external_means", "external_power", "noise_power"});
  FadingDraft d;
  d.spec.direct_mean = {1.0};
  d.spec.interference_mean = {1.0};
  auto key = [&](const char* k) { return Reader::join(path, k); };
  if (f.contains("n_links")) {
    d.n_links = r.unsigned_int(f["n_links"], key("n_links"));
    if (d.n_links < 1) r.fail(key("n_links"), "must be >= 1");
    d.has_n_links = true;
  }
  if (f.contains("direct_mean")) {
    read_link_means(r, f["direct_mean"], key("direct_mean"), d.spec.direct_mean, d.direct_range);
  }
  if (f.contains("interference_mean")) {
    read_link_means(r, f["interference_mean"], key("interference_mean"),
                    d.spec.interference_mean, d.interference_range);
  }
  if (f.contains("external_power")) {
    d.spec.external_power = r.number(f["external_power"], key("external_power"));
  }
  if (f.contains("noise_power")) d.spec.noise_power = r.number(f["noise_power"], key("noise_power"));

  std::optional<std::size_t> n_external;
  if (f.contains("n_external")) n_external = r.unsigned_int(f["n_external"], key("n_external"));
  if (f.contains("external_means")) {
    const json& e = f["external_means"];
    if (e.is_object()) {
      r.only_keys(e, key("external_means"), {"uniform"});
      if (!e.contains("uniform")) r.fail(key("external_means"), "expected {\"uniform\": [lo, hi]}");
      if (!n_external) r.fail(key("external_means"), "a uniform range needs n_external");
      auto rg = r.range(e["uniform"], key("external_means.uniform"));
      d.spec.external_means = draw_link_means(network_seed, StreamTag::ExternalSetup, *n_external, rg);
    } else {
      d.spec.external_means = r.numbers(e, key("external_means"));
      if (n_external && *n_external != d.spec.external_means.size()) {
        r.fail(key("external_means"), fmt::format("has {} entries but n_external is {}",
                                                  d.spec.external_means.size(), *n_external));
      }
    }
  } else if (n_external && *n_external > 0) {
    r.fail(key("n_external"), "external_means is required when n_external > 0");
  }

  // Resolve the link count from explicit arrays when not given.
  std::size_t n = d.has_n_links ? d.n_links : 0;
  auto adopt = [&](const std::vector<double>& v, const std::optional<std::pair<double, double>>& rg,
                   const char* name) {
    if (rg || v.size() <= 1) return;
    if (n == 0) n = v.size();
    if (v.size() != n) {
      r.fail(key(name), fmt::format("has {} entries but n_links is {}", v.size(), n));
    }
  };
  adopt(d.spec.direct_mean, d.direct_range, "direct_mean");
  adopt(d.spec.interference_mean, d.interference_range, "interference_mean");
  if (n == 0) n = 1;
  d.n_links = n;
  return d;
}

void read_policy(const Reader& r, const json& p, const std::string& path, PolicyConfig& out) {
  r.only_keys(p, path, {"kind", "m_slots", "tau", "nu", "w_max", "reservoir_size", "refit_interval"});
  auto key = [&](const char* k) { return Reader::join(path, k); };
  if (p.contains("kind")) {
    try {
      out.kind = parse_policy_kind(r.string(p["kind"], key("kind")));
    } catch (const std::invalid_argument& e) {
      r.fail(key("kind"), e.what());
    }
  }
  if (p.contains("m_slots")) {
    auto m = r.unsigned_int(p["m_slots"], key("m_slots"));
    if (m < 1 || m > 1000000) r.fail(key("m_slots"), "must be in 1..1000000");
    out.m_slots = static_cast<int>(m);
  }
  if (p.contains("tau")) out.tau = r.number(p["tau"], key("tau"));
  if (p.contains("nu")) out.nu = r.number(p["nu"], key("nu"), true);
  if (p.contains("w_max")) out.w_max = r.number(p["w_max"], key("w_max"));
  if (p.contains("reservoir_size")) {
    out.reservoir_size = r.unsigned_int(p["reservoir_size"], key("reservoir_size"));
  }
  if (p.contains("refit_interval")) {
    out.refit_interval = r.unsigned_int(p["refit_interval"], key("refit_interval"));
  }
}

void read_flow(const Reader& r, const json& f, const std::string& path, FlowParams& out) {
  r.only_keys(f, path, {"v", "a_max", "utility"});
  auto key = [&](const char* k) { return Reader::join(path, k); };
  if (f.contains("v")) out.v = r.number(f["v"], key("v"));
  if (f.contains("a_max")) out.a_max = r.number(f["a_max"], key("a_max"));
  if (f.contains("utility")) {
    const json& u = f["utility"];
    const std::string upath = key("utility");
    if (u.is_string()) {
      std::string name = u.get<std::string>();
      if (name == "log1p") {
        out.utility = Utility::log1p();
      } else {
        r.fail(upath, "unknown utility '" + name + "' (log1p or {\"kind\": \"alpha_fair\", ...})");
      }
    } else if (u.is_object()) {
      r.only_keys(u, upath, {"kind", "alpha", "weight"});
      std::string kind = u.contains("kind") ? r.string(u["kind"], upath + ".kind") : "log1p";
      if (kind == "log1p") {
        if (u.contains("alpha")) r.fail(upath + ".alpha", "not used by log1p");
        out.utility = Utility::log1p(u.contains("weight") ? r.number(u["weight"], upath + ".weight") : 1.0);
      } else if (kind == "alpha_fair") {
        if (!u.contains("alpha")) r.fail(upath, "alpha_fair needs alpha");
        if (u.contains("weight")) r.fail(upath + ".weight", "not used by alpha_fair");
        out.utility = Utility::alpha_fair(r.number(u["alpha"], upath + ".alpha"));
      } else {
        r.fail(upath + ".kind", "unknown utility kind '" + kind + "'");
      }
    } else {
      r.fail(upath, "expected a string or an object");
    }
  }
}

/// Turns std::invalid_argument from validate() into a located ConfigError.
template <typename F>
void checked(const Reader& r, const std::string& path, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    r.fail(path, e.what());
  }
}

std::uint64_t read_network_seed(const Reader& r, const json& doc) {
  return doc.contains("network_seed") ? r.unsigned_int(doc["network_seed"], "network_seed") : 1;
}

RunConfig run_config_from(const Reader& r, const json& doc) {
  r.only_keys(doc, "", {"seed", "network_seed", "horizon", "warmup", "gamma", "tx_power",
                        "fading", "policy", "flow"});
  RunConfig c;
  c.network_seed = read_network_seed(r, doc);
  if (doc.contains("seed")) c.seed = r.unsigned_int(doc["seed"], "seed");
  if (doc.contains("horizon")) c.horizon = r.unsigned_int(doc["horizon"], "horizon");
  if (doc.contains("warmup") && !doc["warmup"].is_null()) {
    c.warmup = r.unsigned_int(doc["warmup"], "warmup");
  }
  if (doc.contains("gamma")) c.gamma = r.number(doc["gamma"], "gamma", true);
  if (doc.contains("tx_power")) c.tx_power = r.number(doc["tx_power"], "tx_power");

  if (doc.contains("fading")) {
    FadingDraft d = read_fading(r, doc["fading"], "fading", c.network_seed);
    c.fading = d.spec;
    c.direct_range = d.direct_range;
    c.interference_range = d.interference_range;
    checked(r, "fading", [&] { c.resize_links(d.n_links); });
  } else {
    c.fading.direct_mean = {1.0};
    c.fading.interference_mean = {1.0};
    c.resize_links(1);
  }
  if (doc.contains("policy")) read_policy(r, doc["policy"], "policy", c.policy);
  if (doc.contains("flow")) read_flow(r, doc["flow"], "flow", c.flow);

  checked(r, "fading", [&] { c.fading.validate(); });
  checked(r, "policy", [&] { c.policy.validate(); });
  checked(r, "flow", [&] { c.flow.validate(); });
  checked(r, "horizon", [&] { c.validate(); });
  return c;
}

std::vector<double> read_grid(const Reader& r, const json& g, const std::string& path) {
  if (g.is_array()) return r.numbers(g, path);
  if (g.is_object()) {
    r.only_keys(g, path, {"from", "to", "points"});
    if (!g.contains("from") || !g.contains("to") || !g.contains("points")) {
      r.fail(path, "expected {\"from\": a, \"to\": b, \"points\": k}");
    }
    double a = r.number(g["from"], path + ".from"), b = r.number(g["to"], path + ".to");
    auto k = r.unsigned_int(g["points"], path + ".points");
    std::vector<double> out;
    for (std::uint64_t i = 0; i < k; ++i) {
      out.push_back(k == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(k - 1));
    }
    return out;
  }
  r.fail(path, "expected an array or {\"from\", \"to\", \"points\"}");
}

BoundaryConfig boundary_config_from(const Reader& r, const json& doc) {
  r.only_keys(doc, "", {"network_seed", "fading", "boundary"});
  BoundaryConfig c;
  const std::uint64_t network_seed = read_network_seed(r, doc);
  if (!doc.contains("fading")) r.fail("fading", "missing");
  FadingDraft d = read_fading(r, doc["fading"], "fading", network_seed);
  RunConfig holder;
  holder.network_seed = network_seed;
  holder.fading = d.spec;
  holder.direct_range = d.direct_range;
  holder.interference_range = d.interference_range;
  checked(r, "fading", [&] {
    holder.resize_links(d.n_links);
    holder.fading.validate();
  });
  c.fading = holder.fading;
  if (c.fading.n_links < 2) r.fail("fading.n_links", "a boundary needs at least 2 links");

  if (doc.contains("boundary")) {
    const json& b = doc["boundary"];
    r.only_keys(b, "boundary", {"pivot", "varied", "grid", "gamma", "nu", "unconstrained", "solver"});
    auto device = [&](const char* k, std::size_t& out) {
      if (!b.contains(k)) return;
      auto v = r.unsigned_int(b[k], std::string("boundary.") + k);
      if (v < 1 || v > c.fading.n_links) {
        r.fail(std::string("boundary.") + k, fmt::format("must be a device number in 1..{}", c.fading.n_links));
      }
      out = static_cast<std::size_t>(v - 1);
    };
    device("pivot", c.pivot);
    device("varied", c.varied);
    if (b.contains("grid")) c.grid = read_grid(r, b["grid"], "boundary.grid");
    if (b.contains("gamma")) c.gamma = r.number(b["gamma"], "boundary.gamma", true);
    if (b.contains("nu")) c.nu = r.number(b["nu"], "boundary.nu", true);
    if (b.contains("unconstrained")) c.unconstrained = r.boolean(b["unconstrained"], "boundary.unconstrained");
    if (b.contains("solver")) {
      const json& s = b["solver"];
      const std::string sp = "boundary.solver";
      r.only_keys(s, sp, {"batch", "step0", "tol", "patience", "lambda_cap", "max_iters",
                          "check_every", "power", "seed"});
      auto& o = c.solver;
      if (s.contains("batch")) o.batch = r.unsigned_int(s["batch"], sp + ".batch");
      if (s.contains("step0")) o.step0 = r.number(s["step0"], sp + ".step0");
      if (s.contains("tol")) o.tol = r.number(s["tol"], sp + ".tol");
      if (s.contains("patience")) o.patience = static_cast<int>(r.unsigned_int(s["patience"], sp + ".patience"));
      if (s.contains("lambda_cap")) o.lambda_cap = r.number(s["lambda_cap"], sp + ".lambda_cap");
      if (s.contains("max_iters")) o.max_iters = static_cast<int>(r.unsigned_int(s["max_iters"], sp + ".max_iters"));
      if (s.contains("check_every")) {
        o.check_every = static_cast<int>(r.unsigned_int(s["check_every"], sp + ".check_every"));
      }
      if (s.contains("power")) o.power = r.number(s["power"], sp + ".power");
      if (s.contains("seed")) o.seed = r.unsigned_int(s["seed"], sp + ".seed");
      if (o.batch < 1) r.fail(sp + ".batch", "must be >= 1");
      if (!(o.step0 > 0.0)) r.fail(sp + ".step0", "must be > 0");
      if (!(o.tol > 0.0)) r.fail(sp + ".tol", "must be > 0");
      if (o.check_every < 1) r.fail(sp + ".check_every", "must be >= 1");
      if (!(o.power > 0.0)) r.fail(sp + ".power", "must be > 0");
    }
  }
  if (c.pivot == c.varied) r.fail("boundary.varied", "must differ from pivot");
  if (!(c.gamma > 0.0)) r.fail("boundary.gamma", "must be > 0");
  if (!(c.nu > 0.0)) r.fail("boundary.nu", "must be > 0");
  for (std::size_t k = 0; k < c.grid.size(); ++k) {
    if (!(c.grid[k] >= 0.0) || (k > 0 && c.grid[k] < c.grid[k - 1])) {
      r.fail("boundary.grid", "values must be nonnegative and increasing");
    }
  }
  return c;
}

ordered_json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("{}: cannot open file", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json doc = parse_document(text, source);
  return run_config_from(Reader(text, source), doc);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path), path.string());
}

BoundaryConfig parse_boundary_config(const std::string& text, const std::string& source) {
  json doc = parse_document(text, source);
  return boundary_config_from(Reader(text, source), doc);
}

BoundaryConfig load_boundary_config(const std::filesystem::path& path) {
  return parse_boundary_config(read_text_file(path), path.string());
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["network_seed"] = c.network_seed;
  j["horizon"] = c.horizon;
  j["warmup"] = c.effective_warmup();
  j["gamma"] = number_or_inf(c.gamma);
  j["tx_power"] = c.tx_power;

  ordered_json f;
  f["n_links"] = c.fading.n_links;
  f["direct_mean"] = c.fading.direct_mean;
  f["interference_mean"] = c.fading.interference_mean;
  f["n_external"] = c.fading.n_external();
  f["external_means"] = c.fading.external_means;
  f["external_power"] = c.fading.external_power;
  f["noise_power"] = c.fading.noise_power;
  j["fading"] = f;

  ordered_json p;
  p["kind"] = std::string(to_string(c.policy.kind));
  p["m_slots"] = c.policy.m_slots;
  p["tau"] = c.policy.tau;
  p["nu"] = number_or_inf(c.policy.nu);
  p["w_max"] = c.policy.w_max;
  p["reservoir_size"] = c.policy.reservoir_size;
  p["refit_interval"] = c.policy.refit_interval;
  j["policy"] = p;

  ordered_json fl;
  fl["v"] = c.flow.v;
  fl["a_max"] = c.flow.a_max;
  ordered_json u;
  if (c.flow.utility.kind == Utility::Kind::Log1p) {
    u["kind"] = "log1p";
    u["weight"] = c.flow.utility.param;
  } else {
    u["kind"] = "alpha_fair";
    u["alpha"] = c.flow.utility.param;
  }
  fl["utility"] = u;
  j["flow"] = fl;
  return j;
}

ordered_json to_json(const RunSummary& s) {
  ordered_json j;
  j["policy"] = s.policy;
  j["n_links"] = s.n_links;
  j["horizon"] = s.horizon;
  j["warmup"] = s.warmup;
  j["seed"] = s.seed;
  j["sum_rate"] = s.sum_rate;
  j["sum_utility"] = s.sum_utility;
  j["avg_queue"] = s.avg_queue;
  j["avg_interference"] = s.avg_interference;
  j["avg_service"] = s.avg_service;
  j["idle_frac"] = s.idle_frac;
  j["collision_frac"] = s.collision_frac;
  j["success_frac"] = s.success_frac;
  j["avg_scheduled_weight"] = s.avg_scheduled_weight;
  j["avg_max_weight"] = s.avg_max_weight;
  j["beta"] = s.beta ? ordered_json(*s.beta) : ordered_json(nullptr);
  j["beta_ci_low"] = s.beta_ci_low ? ordered_json(*s.beta_ci_low) : ordered_json(nullptr);
  j["beta_ci_high"] = s.beta_ci_high ? ordered_json(*s.beta_ci_high) : ordered_json(nullptr);
  j["final_z"] = s.final_z;
  j["max_z"] = s.max_z;
  j["nu_violations"] = s.nu_violations;
  j["queue_slope"] = s.queue_slope;
  j["avg_admitted"] = s.avg_admitted;
  return j;
}

RunConfig default_run_config() {
  RunConfig c;
  c.fading.direct_mean = {2.0};
  c.fading.interference_mean = {1.0};
  c.fading.external_means =
      draw_link_means(c.network_seed, StreamTag::ExternalSetup, 20, {0.1, 0.3});
  c.resize_links(100);
  c.policy.kind = PolicyKind::Centralized;
  c.policy.m_slots = 200;
  c.policy.tau = 1e-4;
  c.gamma = 0.1;
  c.flow.v = 100.0;
  return c;
}

}  // namespace edgesim
