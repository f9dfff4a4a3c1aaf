#include "dmh/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dmh/version.hpp"

namespace dmh::io {

namespace {

using nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(line, "expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(line, "expected an integer, got '" + v + "'");
  }
}

std::string hex_bits(double v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
  return buf;
}

double from_hex_bits(const std::string& s) {
  if (s.size() != 16) throw LutSchemaError("malformed double bit pattern '" + s + "'");
  std::uint64_t bits = 0;
  for (char c : s) {
    bits <<= 4;
    if (c >= '0' && c <= '9') bits |= c - '0';
    else if (c >= 'a' && c <= 'f') bits |= c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') bits |= c - 'A' + 10;
    else throw LutSchemaError("malformed double bit pattern '" + s + "'");
  }
  return std::bit_cast<double>(bits);
}

std::string hex_u64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t from_hex_u64(const std::string& s) {
  return std::bit_cast<std::uint64_t>(from_hex_bits(s));
}

ordered_json double_record(double v) {
  ordered_json rec;
  rec["bits"] = hex_bits(v);
  rec["value"] = v;
  return rec;
}

double read_double_record(const ordered_json& rec) {
  if (rec.is_object()) return from_hex_bits(rec.at("bits").get<std::string>());
  return rec.get<double>();
}

ordered_json config_to_json(const fbl::LinkConfig& c) {
  ordered_json j;
  j["f_s_hz"] = double_record(c.symbol_rate_hz);
  j["M"] = c.modulation_order;
  j["P_w"] = double_record(c.tx_power_w);
  j["N_w"] = double_record(c.noise_power_w);
  j["d_bits"] = c.payload_bits;
  j["eps_max"] = double_record(c.per_cap);
  j["T_l_s"] = double_record(c.feedback_delay_s);
  j["T_max_s"] = double_record(c.frame_length_s);
  j["g_bar_linear"] = double_record(c.mean_gain_linear);
  return j;
}

fbl::LinkConfig config_from_json(const ordered_json& j) {
  fbl::LinkConfig c;
  c.symbol_rate_hz = read_double_record(j.at("f_s_hz"));
  c.modulation_order = j.at("M").get<int>();
  c.tx_power_w = read_double_record(j.at("P_w"));
  c.noise_power_w = read_double_record(j.at("N_w"));
  c.payload_bits = j.at("d_bits").get<int>();
  c.per_cap = read_double_record(j.at("eps_max"));
  c.feedback_delay_s = read_double_record(j.at("T_l_s"));
  c.frame_length_s = read_double_record(j.at("T_max_s"));
  c.mean_gain_linear = read_double_record(j.at("g_bar_linear"));
  return c;
}

ordered_json fading_to_json(const fbl::FadingDistribution& f) {
  ordered_json j;
  j["rice_nu"] = double_record(f.noncentrality);
  j["rice_sigma"] = double_record(f.scale);
  j["quadrature_nodes"] = f.quadrature_nodes;
  if (!f.atoms.empty()) {
    ordered_json atoms = ordered_json::array();
    for (const auto& [v, p] : f.atoms) {
      ordered_json a;
      a["value"] = double_record(v);
      a["weight"] = double_record(p);
      atoms.push_back(std::move(a));
    }
    j["atoms"] = std::move(atoms);
  }
  return j;
}

fbl::FadingDistribution fading_from_json(const ordered_json& j) {
  fbl::FadingDistribution f;
  f.noncentrality = read_double_record(j.at("rice_nu"));
  f.scale = read_double_record(j.at("rice_sigma"));
  f.quadrature_nodes = j.at("quadrature_nodes").get<int>();
  if (j.contains("atoms"))
    for (const auto& a : j.at("atoms"))
      f.atoms.emplace_back(read_double_record(a.at("value")), read_double_record(a.at("weight")));
  return f;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig rc;
  bool have_gain = false;
  std::vector<std::string> required = {"f_s_hz", "M",     "P_w",     "N_w",      "d_bits",
                                       "eps_max", "T_max_s", "I", "T_l_s", "rice_nu",
                                       "rice_sigma"};
  std::vector<std::string> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (val.empty()) throw ConfigError(line, "empty value for '" + key + "'");
    seen.push_back(key);

    if (key == "f_s_hz") rc.link.symbol_rate_hz = parse_double(val, line);
    else if (key == "M") rc.link.modulation_order = static_cast<int>(parse_int(val, line));
    else if (key == "P_w") rc.link.tx_power_w = parse_double(val, line);
    else if (key == "N_w") rc.link.noise_power_w = parse_double(val, line);
    else if (key == "d_bits") rc.link.payload_bits = static_cast<int>(parse_int(val, line));
    else if (key == "eps_max") rc.link.per_cap = parse_double(val, line);
    else if (key == "T_max_s") rc.link.frame_length_s = parse_double(val, line);
    else if (key == "T_l_s") rc.link.feedback_delay_s = parse_double(val, line);
    else if (key == "I") rc.hop_count = static_cast<int>(parse_int(val, line));
    else if (key == "g_bar_db") {
      rc.link.mean_gain_linear = std::pow(10.0, parse_double(val, line) / 10.0);
      have_gain = true;
    } else if (key == "g_bar_linear") {
      rc.link.mean_gain_linear = parse_double(val, line);
      have_gain = true;
    } else if (key == "rice_nu") rc.fading.noncentrality = parse_double(val, line);
    else if (key == "rice_sigma") rc.fading.scale = parse_double(val, line);
    else if (key == "rice_nodes") rc.fading.quadrature_nodes = static_cast<int>(parse_int(val, line));
    else if (key == "n_mc") rc.mc_runs = static_cast<int>(parse_int(val, line));
    else if (key == "seed") rc.seed = static_cast<std::uint64_t>(parse_int(val, line));
    else if (key == "mode") {
      try {
        rc.mode = sim::mode_from_name(val);
      } catch (const ConfigError& e) {
        throw ConfigError(line, e.what());
      }
    } else if (key == "axis") {
      try {
        rc.axis = sim::axis_from_name(val);
      } catch (const ConfigError& e) {
        throw ConfigError(line, e.what());
      }
    } else if (key == "axis_values") {
      rc.axis_values.clear();
      for (const std::string& item : split(val, ','))
        rc.axis_values.push_back(parse_double(item, line));
    } else if (key == "methods") {
      rc.methods.clear();
      for (const std::string& item : split(val, ',')) {
        try {
          rc.methods.push_back(sim::method_from_name(item));
        } catch (const ConfigError& e) {
          throw ConfigError(line, e.what());
        }
      }
    } else {
      throw ConfigError(line, "unknown key '" + key + "'");
    }
  }
  for (const std::string& key : required)
    if (std::find(seen.begin(), seen.end(), key) == seen.end())
      throw ConfigError("missing required key '" + key + "'");
  if (!have_gain) throw ConfigError("missing required key 'g_bar_db' (or 'g_bar_linear')");
  rc.link.validate();
  rc.fading.validate();
  if (rc.hop_count < 1) throw ConfigError("I must be >= 1");
  if (rc.mc_runs < 1) throw ConfigError("n_mc must be >= 1");
  if (rc.axis && rc.axis_values.empty())
    throw ConfigError("axis given without axis_values");
  return rc;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string campaign_csv(const sim::CampaignResult& result) {
  std::ostringstream out;
  out << "axis_name,axis_value,method,mean_loss,stderr,runs,mode,seed\n";
  for (std::size_t ai = 0; ai < result.axis_values.size(); ++ai) {
    for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
      const sim::PointStats& cell = result.cells[ai][mi];
      out << result.axis << ',' << format_g12(result.axis_values[ai]) << ','
          << sim::method_name(result.methods[mi]) << ',' << format_g12(cell.mean_loss) << ','
          << format_g12(cell.stderr_loss) << ',' << cell.runs << ','
          << sim::mode_name(result.mode) << ',' << result.seed << '\n';
    }
  }
  return out.str();
}

std::string campaign_svg(const sim::CampaignResult& result, const std::string& title) {
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
  const double w = 760, h = 480, ml = 80, mr = 180, mt = 48, mb = 56;
  const double px = w - ml - mr, py = h - mt - mb;

  double xmin = result.axis_values.front(), xmax = result.axis_values.back();
  if (xmax == xmin) xmax = xmin + 1.0;
  double floor_loss = 1e-16;
  double ymin = 1.0, ymax = 1e-16;
  for (const auto& row : result.cells)
    for (const auto& cell : row) {
      const double v = std::max(cell.mean_loss, floor_loss);
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  const double lo = std::floor(std::log10(ymin)), hi = std::ceil(std::log10(std::max(ymax, ymin * 10)));
  const auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * px; };
  const auto Y = [&](double loss) {
    const double l = std::log10(std::max(loss, floor_loss));
    return mt + (hi - l) / (hi - lo) * py;
  };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << ml << "' y='24' font-family='sans-serif' font-size='15'>" << title
      << "</text>\n";
  // axes
  svg << "<line x1='" << ml << "' y1='" << mt + py << "' x2='" << ml + px << "' y2='" << mt + py
      << "' stroke='black'/>\n"
      << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + py
      << "' stroke='black'/>\n";
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double y = Y(std::pow(10.0, e));
    svg << "<line x1='" << ml - 4 << "' y1='" << y << "' x2='" << ml + px << "' y2='" << y
        << "' stroke='#dddddd'/>\n"
        << "<text x='" << ml - 8 << "' y='" << y + 4
        << "' text-anchor='end' font-family='sans-serif' font-size='11'>1e" << e << "</text>\n";
  }
  for (double x : result.axis_values) {
    svg << "<line x1='" << X(x) << "' y1='" << mt + py << "' x2='" << X(x) << "' y2='"
        << mt + py + 4 << "' stroke='black'/>\n"
        << "<text x='" << X(x) << "' y='" << mt + py + 18
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>" << format_g12(x)
        << "</text>\n";
  }
  svg << "<text x='" << ml + px / 2 << "' y='" << h - 12
      << "' text-anchor='middle' font-family='sans-serif' font-size='13'>" << result.axis
      << "</text>\n"
      << "<text x='20' y='" << mt + py / 2
      << "' transform='rotate(-90 20 " << mt + py / 2
      << ")' text-anchor='middle' font-family='sans-serif' font-size='13'>mean E2E loss</text>\n";
  for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
    const char* color = kColors[mi % 4];
    std::ostringstream pts;
    for (std::size_t ai = 0; ai < result.axis_values.size(); ++ai) {
      pts << (ai ? " " : "") << X(result.axis_values[ai]) << ','
          << Y(result.cells[ai][mi].mean_loss);
    }
    svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.6' points='"
        << pts.str() << "'/>\n";
    for (std::size_t ai = 0; ai < result.axis_values.size(); ++ai)
      svg << "<circle cx='" << X(result.axis_values[ai]) << "' cy='"
          << Y(result.cells[ai][mi].mean_loss) << "' r='2.6' fill='" << color << "'/>\n";
    const double ly = mt + 16 + 18 * mi;
    svg << "<line x1='" << ml + px + 12 << "' y1='" << ly << "' x2='" << ml + px + 34 << "' y2='"
        << ly << "' stroke='" << color << "' stroke-width='2'/>\n"
        << "<text x='" << ml + px + 40 << "' y='" << ly + 4
        << "' font-family='sans-serif' font-size='12'>" << sim::method_name(result.methods[mi])
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string run_manifest_json(const RunConfig& cfg, const std::vector<std::string>& outputs,
                              const std::string& command) {
  ordered_json j;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["rng_algorithm"] = channel::kRngAlgorithm;
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["timestamp_utc"] = stamp;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config"] = config_to_json(cfg.link);
  j["config"]["I"] = cfg.hop_count;
  j["config"]["n_mc"] = cfg.mc_runs;
  j["config"]["mode"] = sim::mode_name(cfg.mode);
  j["fading"] = fading_to_json(cfg.fading);
  if (cfg.axis) {
    j["axis"] = sim::axis_name(*cfg.axis);
    j["axis_values"] = cfg.axis_values;
  }
  ordered_json methods = ordered_json::array();
  for (sim::Method m : cfg.methods) methods.push_back(sim::method_name(m));
  j["methods"] = std::move(methods);
  j["outputs"] = outputs;
  return j.dump(2);
}

namespace {

ordered_json table_to_json(const dp::PolicyTable& t) {
  ordered_json j;
  j["kind"] = t.kind == dp::TableKind::local ? "local" : "successor";
  j["first_hop"] = t.first_hop;
  j["last_hop"] = t.last_hop;
  j["max_ticks"] = t.max_ticks;
  j["tl_ticks"] = t.tl_ticks;
  j["min_attempt_blocklength"] = t.min_attempt_blocklength;
  j["fingerprint"] = hex_u64(t.fingerprint);
  ordered_json layers = ordered_json::array();
  for (int hop = t.first_hop; hop <= t.last_hop; ++hop) {
    const auto& layer = t.layers[hop - t.first_hop];
    ordered_json lj;
    lj["hop"] = hop;
    ordered_json ns = ordered_json::array();
    ordered_json losses = ordered_json::array();
    for (const dp::PolicyEntry& e : layer) {
      ns.push_back(e.blocklength);
      losses.push_back(hex_bits(e.loss));
    }
    lj["n"] = std::move(ns);
    lj["loss_bits"] = std::move(losses);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

dp::PolicyTable table_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "local" && kind != "successor")
    throw LutSchemaError("unknown table kind '" + kind + "'");
  dp::PolicyTable t(kind == "local" ? dp::TableKind::local : dp::TableKind::successor,
                    j.at("first_hop").get<int>(), j.at("last_hop").get<int>(),
                    j.at("max_ticks").get<int>(), j.at("tl_ticks").get<int>(),
                    from_hex_u64(j.at("fingerprint").get<std::string>()));
  t.min_attempt_blocklength = j.at("min_attempt_blocklength").get<int>();
  for (const auto& lj : j.at("layers")) {
    const int hop = lj.at("hop").get<int>();
    if (hop < t.first_hop || hop > t.last_hop) throw LutSchemaError("layer hop out of range");
    auto& layer = t.layers[hop - t.first_hop];
    const auto& ns = lj.at("n");
    const auto& losses = lj.at("loss_bits");
    if (ns.size() != losses.size() || static_cast<int>(ns.size()) != t.max_ticks + 1)
      throw LutSchemaError("layer length does not match max_ticks");
    layer.resize(ns.size());
    for (std::size_t i = 0; i < layer.size(); ++i) {
      layer[i].blocklength = ns[i].get<std::int32_t>();
      layer[i].loss = from_hex_bits(losses[i].get<std::string>());
    }
  }
  return t;
}

}  // namespace

std::string lut_to_json(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                        const channel::ChainRealization& chain,
                        const dp::ChainPolicies& policies) {
  ordered_json j;
  j["schema_version"] = kLutSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["rng_algorithm"] = channel::kRngAlgorithm;
  j["config"] = config_to_json(cfg);
  j["fading"] = fading_to_json(fading);
  ordered_json cj;
  cj["seed"] = chain.seed;
  cj["draw_index"] = chain.draw_index;
  cj["hop_count"] = chain.hop_count();
  ordered_json losses = ordered_json::array();
  for (double lf : chain.fading_losses) losses.push_back(hex_bits(lf));
  cj["fading_losses_bits"] = std::move(losses);
  j["chain"] = std::move(cj);
  ordered_json tables = ordered_json::array();
  if (policies.succ) tables.push_back(table_to_json(*policies.succ));
  for (const dp::PolicyTable& t : policies.node_local) tables.push_back(table_to_json(t));
  j["tables"] = std::move(tables);
  return j.dump();
}

LutFile lut_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw LutSchemaError(std::string("not a policy-table file: ") + e.what());
  }
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer())
    throw LutSchemaError("missing schema_version");
  if (j.at("schema_version").get<int>() != kLutSchemaVersion)
    throw LutSchemaError("unsupported schema_version " +
                         std::to_string(j.at("schema_version").get<int>()));
  LutFile f;
  try {
    f.link = config_from_json(j.at("config"));
    f.fading = fading_from_json(j.at("fading"));
    const auto& cj = j.at("chain");
    std::vector<double> losses;
    for (const auto& b : cj.at("fading_losses_bits"))
      losses.push_back(from_hex_bits(b.get<std::string>()));
    f.chain = channel::chain_from_losses(f.link, std::move(losses));
    f.chain.seed = cj.at("seed").get<std::uint64_t>();
    f.chain.draw_index = cj.at("draw_index").get<std::uint64_t>();
    if (f.chain.hop_count() != cj.at("hop_count").get<int>())
      throw LutSchemaError("chain hop count mismatch");

    f.policies.frame_ticks = f.link.frame_ticks();
    f.policies.tl_ticks = f.link.feedback_delay_ticks();
    const int hops = f.chain.hop_count();
    std::vector<dp::PolicyTable> locals;
    for (const auto& tj : j.at("tables")) {
      dp::PolicyTable t = table_from_json(tj);
      if (t.kind == dp::TableKind::successor) {
        if (t.fingerprint != dp::fingerprint(f.link, f.fading))
          throw LutSchemaError("successor-table fingerprint does not match the config");
        f.policies.succ = std::make_shared<dp::PolicyTable>(std::move(t));
      } else {
        locals.push_back(std::move(t));
      }
    }
    if (static_cast<int>(locals.size()) != hops)
      throw LutSchemaError("expected one local table per hop");
    for (int h = 0; h < hops; ++h) {
      const int layer = hops - h;
      auto it = std::find_if(locals.begin(), locals.end(), [layer](const dp::PolicyTable& t) {
        return t.first_hop == layer;
      });
      if (it == locals.end())
        throw LutSchemaError("missing local table for layer " + std::to_string(layer));
      if (it->fingerprint != dp::fingerprint(f.link, f.fading, f.chain.hops[h].gain_linear))
        throw LutSchemaError("local-table fingerprint does not match the chain");
      f.policies.node_local.push_back(std::move(*it));
      locals.erase(it);
      // True per-attempt error profile, rebuilt from the exact stored gains.
      f.policies.node_profile.push_back(
          dp::make_local_profile(f.chain.hops[h], f.link, f.policies.frame_ticks));
    }
  } catch (const LutSchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw LutSchemaError(std::string("malformed policy-table file: ") + e.what());
  }
  return f;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dmh::io
