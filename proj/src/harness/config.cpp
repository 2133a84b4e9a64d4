#include "dkmpc/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace dkmpc::harness {

namespace pt = boost::property_tree;

const Scenario& HarnessConfig::scenario(const std::string& name) const
{
  const auto it = scenarios.find(name);
  if (it == scenarios.end())
    throw ConfigError("unknown scenario '" + name + "'");
  return it->second;
}

HarnessConfig default_config()
{
  HarnessConfig c;
  for (Scenario s : {dlc_high_mu(), dlc_low_mu()})
    c.scenarios.emplace(s.name, s);
  return c;
}

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& where, const std::string& text)
{
  const std::string v = trim(text);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
    throw ConfigError(where + ": expected a number, got '" + text + "'");
  return d;
}

int to_int(const std::string& where, const std::string& text)
{
  const double d = to_double(where, text);
  if (d != std::floor(d) || std::abs(d) > 1e9)
    throw ConfigError(where + ": expected an integer, got '" + text + "'");
  return static_cast<int>(d);
}

bool to_bool(const std::string& where, const std::string& text)
{
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  throw ConfigError(where + ": expected a boolean, got '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    out.push_back(trim(item));
  return out;
}

using Setter = std::function<void(const std::string& where, const std::string& value)>;
using Table = std::map<std::string, Setter>;

void apply(const std::string& section, const pt::ptree& tree, const Table& table)
{
  for (const auto& [key, node] : tree) {
    const std::string where = "[" + section + "] " + key;
    if (!node.empty())
      throw ConfigError(where + ": nested keys are not supported");
    const auto it = table.find(key);
    if (it == table.end())
      throw ConfigError(where + ": unknown key");
    it->second(where, node.data());
  }
}

Setter num(double& target)
{
  return [&target](const std::string& w, const std::string& v) { target = to_double(w, v); };
}

Setter integer(int& target)
{
  return [&target](const std::string& w, const std::string& v) { target = to_int(w, v); };
}

Setter kmh(double& target)
{
  return [&target](const std::string& w, const std::string& v) { target = to_double(w, v) / 3.6; };
}

SpeedProfile parse_profile(const std::string& where, const std::string& text)
{
  SpeedProfile p;
  p.knots.clear();
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2)
      throw ConfigError(where + ": expected t:kmh pairs, got '" + item + "'");
    p.knots.emplace_back(to_double(where, parts[0]), to_double(where, parts[1]) / 3.6);
  }
  return p;
}

void parse_scenario(const std::string& name, const pt::ptree& tree, Scenario& s)
{
  s.name = name;
  DlcGeometry& g = s.path;
  Table t{
      {"mu", num(s.mu)},
      {"mass", [&](const std::string& w, const std::string& v) { s.mass = to_double(w, v); }},
      {"speed_kmh", [&](const std::string& w, const std::string& v) { s.speed = SpeedProfile::constant(to_double(w, v) / 3.6); }},
      {"speed_profile", [&](const std::string& w, const std::string& v) { s.speed = parse_profile(w, v); }},
      {"duration", num(s.duration)},
      {"offset", num(g.offset)},
      {"entry", num(g.entry)},
      {"change_out", num(g.change_out)},
      {"plateau", num(g.plateau)},
      {"change_back", num(g.change_back)},
      {"exit", num(g.exit)},
      {"trailing", num(g.trailing)},
      {"spacing", num(g.spacing)},
      {"mirror", [&](const std::string& w, const std::string& v) { g.mirror = to_bool(w, v); }},
      {"lateral_force", num(s.lateral_force)},
      {"noise_vx", num(s.noise_std(0))},
      {"noise_vy", num(s.noise_std(1))},
      {"noise_wr", num(s.noise_std(2))},
      {"max_lateral_error", num(s.max_lateral_error)},
  };
  apply("scenario." + name, tree, t);
}

}  // namespace

HarnessConfig parse_config(std::istream& is)
{
  pt::ptree root;
  try {
    pt::read_ini(is, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  HarnessConfig c = default_config();
  vehicle::VehicleParams& v = c.vehicle;
  koopman::TrainingConfig& tr = c.training;
  control::MpcConfig& m = c.mpc;
  ExcitationSpec& ex = c.collect;

  const std::map<std::string, Table> tables{
      {"vehicle",
       {{"mass", num(v.mass)},
        {"yaw_inertia", num(v.yaw_inertia)},
        {"lf", num(v.lf)},
        {"lr", num(v.lr)},
        {"track", num(v.track)},
        {"wheel_radius", num(v.wheel_radius)},
        {"max_torque", num(v.max_torque)}}},
      {"tire", {{"B", num(v.mf_b)}, {"C", num(v.mf_c)}, {"D", num(v.mf_d)}, {"E", num(v.mf_e)}}},
      {"training",
       {{"phi", integer(tr.phi)},
        {"seq_len", integer(tr.seq_len)},
        {"epochs", integer(tr.epochs)},
        {"batch_size", integer(tr.batch_size)},
        {"learning_rate", num(tr.learning_rate)},
        {"momentum", num(tr.momentum)},
        {"plateau_patience", integer(tr.plateau_patience)},
        {"seed", [&](const std::string& w, const std::string& s) {
           const int x = to_int(w, s);
           if (x < 0)
             throw ConfigError(w + ": seed must be non-negative");
           tr.seed = static_cast<std::uint64_t>(x);
         }},
        {"validation_fraction", num(tr.validation_fraction)},
        {"hidden", [&](const std::string& w, const std::string& s) {
           tr.hidden.clear();
           for (const auto& item : split(s, ','))
             tr.hidden.push_back(to_int(w, item));
         }}}},
      {"eso",
       {{"target_rho", num(c.eso.target_rho)},
        {"beta1", [&](const std::string& w, const std::string& s) { c.eso.beta1 = to_double(w, s); }},
        {"beta2", [&](const std::string& w, const std::string& s) { c.eso.beta2 = to_double(w, s); }}}},
      {"mpc",
       {{"np", integer(m.np)},
        {"nc", integer(m.nc)},
        {"q_x", num(m.q(0, 0))},
        {"q_y", num(m.q(1, 1))},
        {"q_theta", num(m.q(2, 2))},
        {"r", num(m.r)},
        {"p", num(m.p)},
        {"vx_min", num(m.x_min(0))},
        {"vx_max", num(m.x_max(0))},
        {"vy_min", num(m.x_min(1))},
        {"vy_max", num(m.x_max(1))},
        {"wr_min", num(m.x_min(2))},
        {"wr_max", num(m.x_max(2))},
        {"steer_min", num(m.steer_min)},
        {"steer_max", num(m.steer_max)},
        {"sqp_iterations", integer(m.sqp_iterations)},
        {"sqp_tolerance", num(m.sqp_tolerance)},
        {"kp", num(c.kp)},
        {"lmpc_mu", num(c.lmpc_mu)}}},
      {"collect",
       {{"trajectories", integer(ex.trajectories)},
        {"duration", num(ex.duration)},
        {"mu", num(ex.mu)},
        {"v_min_kmh", kmh(ex.v_min)},
        {"v_max_kmh", kmh(ex.v_max)},
        {"steer_max", num(ex.steer_max)},
        {"chirp_f_min", num(ex.chirp_f_min)},
        {"chirp_f_max", num(ex.chirp_f_max)},
        {"kp", num(ex.kp)}}},
  };

  const std::string prefix = "scenario.";
  for (const auto& [section, tree] : root) {
    if (tree.empty() && !tree.data().empty())
      throw ConfigError("key '" + section + "' outside any section");
    if (section.rfind(prefix, 0) == 0) {
      const std::string name = section.substr(prefix.size());
      if (name.empty())
        throw ConfigError("scenario section needs a name");
      Scenario s = c.scenarios.count(name) ? c.scenarios.at(name) : Scenario{};
      parse_scenario(name, tree, s);
      c.scenarios[name] = s;
      continue;
    }
    const auto it = tables.find(section);
    if (it == tables.end())
      throw ConfigError("unknown section [" + section + "]");
    apply(section, tree, it->second);
  }

  try {
    c.vehicle.validate();
    c.training.validate();
    c.mpc.validate();
    c.collect.validate();
    for (const auto& [name, s] : c.scenarios)
      s.validate();
    if (!(c.kp > 0.0))
      throw std::invalid_argument("kp must be positive");
    if (!(c.lmpc_mu > 0.0 && c.lmpc_mu <= 1.2))
      throw std::invalid_argument("lmpc_mu must lie in (0, 1.2]");
    if (c.eso.beta1.has_value() != c.eso.beta2.has_value())
      throw std::invalid_argument("beta1 and beta2 must be given together");
    if (!(c.eso.target_rho > 0.0 && c.eso.target_rho < 1.0))
      throw std::invalid_argument("target_rho must lie in (0, 1)");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

HarnessConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

eso::EsoGains observer_gains(const EsoConfig& cfg, const koopman::KoopmanModel& model)
{
  if (cfg.beta1 && cfg.beta2)
    return eso::EsoGains(model.A(), *cfg.beta1, *cfg.beta2);
  return eso::design_gains(model.A(), cfg.target_rho);
}

ControllerSetup make_setup(const HarnessConfig& cfg, ControllerKind kind, const koopman::KoopmanModel* model)
{
  ControllerSetup s;
  s.kind = kind;
  s.model = model;
  s.mpc = cfg.mpc;
  s.params = cfg.vehicle;
  s.kp = cfg.kp;
  s.lmpc_mu = cfg.lmpc_mu;
  if (kind == ControllerKind::EsoDkmpc && model)
    s.gains = observer_gains(cfg.eso, *model);
  validate(s);
  return s;
}

}  // namespace dkmpc::harness
