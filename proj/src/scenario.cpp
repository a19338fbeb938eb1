#include "avatarsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace avatarsim {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  return j;
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<std::string_view> known) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(join(path, key), "unknown field");
  }
}

std::int64_t get_int(const json& j, const std::string& path) {
  if (j.is_number_integer()) {
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      throw ConfigError(path, "integer out of range");
    }
    return j.get<std::int64_t>();
  }
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (std::isfinite(d) && std::trunc(d) == d && std::fabs(d) < 0x1.0p62) return static_cast<std::int64_t>(d);
  }
  throw ConfigError(path, "expected an integer");
}

double get_real(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double d = j.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

Distribution parse_distribution(const json& j, const std::string& path) {
  if (j.is_number()) return Distribution::constant(get_real(j, path));
  if (!j.is_object() || j.size() != 1) {
    throw ConfigError(path, "expected a number or a single-key distribution object");
  }
  const auto& [kind, args] = *j.items().begin();
  const std::string p = join(path, kind);
  auto arg = [&](std::size_t i) { return get_real(args[i], index(p, i)); };
  if (kind == "constant") {
    if (args.is_number()) return Distribution::constant(get_real(args, p));
    if (!args.is_array() || args.size() != 1) throw ConfigError(p, "expected one argument");
    return Distribution::constant(arg(0));
  }
  if (!args.is_array() || args.size() != 2) throw ConfigError(p, "expected two arguments");
  if (kind == "uniform") return Distribution::uniform(arg(0), arg(1));
  if (kind == "uniform_int") return {Distribution::Kind::UniformInt, arg(0), arg(1)};
  if (kind == "normal") return Distribution::normal(arg(0), arg(1));
  if (kind == "lognormal") return Distribution::lognormal(arg(0), arg(1));
  throw ConfigError(join(path, kind), "unknown distribution");
}

json distribution_to_json(const Distribution& d) {
  if (d.kind == Distribution::Kind::Constant) return json{{"constant", d.a}};
  return json{{std::string(to_string(d.kind)), json::array({d.a, d.b})}};
}

std::string read_file(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(field, "cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

FamilyConfig parse_family(const json& j, const std::string& path, const std::filesystem::path& base_dir) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"name", "archetype", "avatar_source", "avatar_path", "params", "n_agents", "initial_cash",
                  "initial_shares"});
  FamilyConfig f;
  if (!j.contains("name")) throw ConfigError(join(path, "name"), "required");
  f.name = get_string(j["name"], join(path, "name"));

  const int sources = int(j.contains("archetype")) + int(j.contains("avatar_source")) + int(j.contains("avatar_path"));
  if (sources != 1) throw ConfigError(path, "exactly one of archetype, avatar_source, avatar_path is required");
  if (j.contains("archetype")) {
    const std::string a = get_string(j["archetype"], join(path, "archetype"));
    f.archetype = strategies::archetype_from_name(a);
    if (!f.archetype) throw ConfigError(join(path, "archetype"), "unknown archetype '" + a + "'");
  } else if (j.contains("avatar_source")) {
    f.avatar_source = get_string(j["avatar_source"], join(path, "avatar_source"));
  } else {
    std::filesystem::path p = get_string(j["avatar_path"], join(path, "avatar_path"));
    if (p.is_relative()) p = base_dir / p;
    f.avatar_source = read_file(p, join(path, "avatar_path"));
  }

  if (j.contains("params")) {
    const std::string pp = join(path, "params");
    require_object(j["params"], pp);
    for (const auto& [name, value] : j["params"].items()) {
      f.params.push_back({name, parse_distribution(value, join(pp, name))});
    }
  }
  if (j.contains("n_agents")) f.n_agents = get_int(j["n_agents"], join(path, "n_agents"));
  if (j.contains("initial_cash")) f.initial_cash = get_int(j["initial_cash"], join(path, "initial_cash"));
  if (j.contains("initial_shares")) f.initial_shares = get_int(j["initial_shares"], join(path, "initial_shares"));
  return f;
}

}  // namespace

void validate(const ScenarioConfig& c) {
  if (c.families.empty()) throw ConfigError("families", "at least one family is required");
  std::set<std::string> names;
  std::int64_t total_agents = 0;
  for (std::size_t i = 0; i < c.families.size(); ++i) {
    const auto& f = c.families[i];
    const std::string p = index("families", i);
    if (f.name.empty()) throw ConfigError(join(p, "name"), "must not be empty");
    if (!names.insert(f.name).second) throw ConfigError(join(p, "name"), "duplicate family name '" + f.name + "'");
    if (f.archetype.has_value() == f.avatar_source.has_value()) {
      throw ConfigError(p, "exactly one of archetype, avatar_source is required");
    }
    if (f.n_agents < 1) throw ConfigError(join(p, "n_agents"), "must be >= 1");
    if (f.n_agents > 10'000'000) throw ConfigError(join(p, "n_agents"), "too large");
    if (f.initial_cash < 0) throw ConfigError(join(p, "initial_cash"), "must be >= 0");
    if (f.initial_shares < 0) throw ConfigError(join(p, "initial_shares"), "must be >= 0");
    total_agents += f.n_agents;
  }
  if (total_agents > INT32_MAX) throw ConfigError("families", "too many agents");
  if (c.initial_reference_price < 1) throw ConfigError("initial_reference_price", "must be >= 1");
  if (!(c.news_rate >= 0.0) || !std::isfinite(c.news_rate)) throw ConfigError("news_rate", "must be >= 0");
  if (!(c.news_sigma >= 0.0) || !std::isfinite(c.news_sigma)) throw ConfigError("news_sigma", "must be >= 0");
  if (c.message_latency < 0) throw ConfigError("message_latency", "must be >= 0");
  if (c.run_length.value < 1) throw ConfigError("run_length", "must be positive");
  if (c.snapshot_interval < 1) throw ConfigError("snapshot_interval", "must be >= 1");
  if (c.max_sim_time < 1) throw ConfigError("max_sim_time", "must be positive");
}

ScenarioConfig scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  require_object(j, "");
  reject_unknown(j, "",
                 {"families", "initial_reference_price", "news_rate", "news_sigma", "message_latency", "run_length",
                  "master_seed", "snapshot_interval", "orders_good_till_wake", "max_sim_time", "run_info"});
  ScenarioConfig c;
  if (!j.contains("families") || !j["families"].is_array()) throw ConfigError("families", "expected an array");
  for (std::size_t i = 0; i < j["families"].size(); ++i) {
    c.families.push_back(parse_family(j["families"][i], index("families", i), base_dir));
  }
  if (j.contains("initial_reference_price")) {
    c.initial_reference_price = get_int(j["initial_reference_price"], "initial_reference_price");
  }
  if (j.contains("news_rate")) c.news_rate = get_real(j["news_rate"], "news_rate");
  if (j.contains("news_sigma")) c.news_sigma = get_real(j["news_sigma"], "news_sigma");
  if (j.contains("message_latency")) c.message_latency = get_int(j["message_latency"], "message_latency");
  if (j.contains("run_length")) {
    const json& rl = require_object(j["run_length"], "run_length");
    if (rl.size() != 1) throw ConfigError("run_length", "expected exactly one of transactions, sim_time");
    if (rl.contains("transactions")) {
      c.run_length = {RunLength::Kind::Transactions, get_int(rl["transactions"], "run_length.transactions")};
    } else if (rl.contains("sim_time")) {
      c.run_length = {RunLength::Kind::SimTime, get_int(rl["sim_time"], "run_length.sim_time")};
    } else {
      throw ConfigError("run_length", "expected exactly one of transactions, sim_time");
    }
  }
  if (j.contains("master_seed")) {
    const json& s = j["master_seed"];
    if (s.is_number_unsigned()) {
      c.master_seed = s.get<std::uint64_t>();
    } else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) {
      c.master_seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    } else {
      throw ConfigError("master_seed", "expected a non-negative 64-bit integer");
    }
  }
  if (j.contains("snapshot_interval")) c.snapshot_interval = get_int(j["snapshot_interval"], "snapshot_interval");
  if (j.contains("orders_good_till_wake")) {
    if (!j["orders_good_till_wake"].is_boolean()) throw ConfigError("orders_good_till_wake", "expected a boolean");
    c.orders_good_till_wake = j["orders_good_till_wake"].get<bool>();
  }
  if (j.contains("max_sim_time")) c.max_sim_time = get_int(j["max_sim_time"], "max_sim_time");
  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path, "");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "invalid JSON in '" + path.string() + "': " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

json scenario_to_json(const ScenarioConfig& c) {
  json families = json::array();
  for (const auto& f : c.families) {
    json fj;
    fj["name"] = f.name;
    if (f.archetype) {
      fj["archetype"] = std::string(strategies::name(*f.archetype));
    } else {
      fj["avatar_source"] = *f.avatar_source;
    }
    json params = json::object();
    for (const auto& p : f.params) params[p.name] = distribution_to_json(p.dist);
    fj["params"] = params;
    fj["n_agents"] = f.n_agents;
    fj["initial_cash"] = f.initial_cash;
    fj["initial_shares"] = f.initial_shares;
    families.push_back(std::move(fj));
  }
  json j;
  j["families"] = std::move(families);
  j["initial_reference_price"] = c.initial_reference_price;
  j["news_rate"] = c.news_rate;
  j["news_sigma"] = c.news_sigma;
  j["message_latency"] = c.message_latency;
  j["run_length"] = c.run_length.kind == RunLength::Kind::Transactions
                        ? json{{"transactions", c.run_length.value}}
                        : json{{"sim_time", c.run_length.value}};
  j["master_seed"] = c.master_seed;
  j["snapshot_interval"] = c.snapshot_interval;
  j["orders_good_till_wake"] = c.orders_good_till_wake;
  j["max_sim_time"] = c.max_sim_time;
  return j;
}

std::vector<ParamDecl> resolve_params(const FamilyConfig& family, std::size_t family_index,
                                      const std::vector<ParamDecl>& declared) {
  std::vector<ParamDecl> out = declared;
  const std::string base = join(index("families", family_index), "params");
  for (const auto& o : family.params) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ParamDecl& d) { return d.name == o.name; });
    if (it == out.end()) {
      if (o.name != kWakeRateParam && o.name != kNewsSensParam) {
        throw ConfigError(join(base, o.name), "unknown parameter");
      }
      out.push_back({o.name, ValueType::Real, o.dist});
      it = out.end() - 1;
    } else {
      it->dist = o.dist;
    }
    try {
      validate(*it);
    } catch (const DistributionError& e) {
      throw ConfigError(join(base, o.name), e.what());
    }
  }
  return out;
}

}  // namespace avatarsim
