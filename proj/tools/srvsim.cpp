// srvsim: reproducible experiment runner for shared-random-variable
// protocol simulations. Subcommands: correlate | chsh | svozil-curve |
// attack. Artifacts are CSV or JSON, embed their resolved config, and are
// byte-identical for identical command lines (any --workers value included).

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "srvsim/attack.hpp"
#include "srvsim/estimators.hpp"
#include "srvsim/transcript_io.hpp"

namespace {

using nlohmann::json;
using namespace srvsim;

struct ExperimentConfig {
  std::string subcommand;
  std::string protocol = "tb";
  std::optional<double> omega;
  std::uint64_t n_samples = 1000000;
  std::size_t n_sweep = 360;
  std::string seed_text = "0";
  std::uint64_t seed = 0;
  std::vector<double> settings = {0.0, kHalfPi, kPi / 4.0, 3.0 * kPi / 4.0};
  std::string format = "csv";
  std::string out = "-";
  unsigned workers = 0;  // 0 = hardware concurrency
  std::vector<double> alice;  // attack only: x,y,z on the sphere, angle on the circle
};

[[noreturn]] void config_error(const std::string& message) {
  std::cerr << "srvsim: " << message << "\n";
  std::exit(2);
}

Protocol parse_protocol(const std::string& name) {
  static const std::map<std::string, Protocol> table = {{"tb", Protocol::TB},
                                                        {"svozil", Protocol::Svozil},
                                                        {"ntb", Protocol::NTB},
                                                        {"ns", Protocol::NS}};
  const auto it = table.find(name);
  if (it == table.end()) config_error("unknown protocol '" + name + "' (tb | svozil | ntb | ns)");
  return it->second;
}

void resolve_config(ExperimentConfig& cfg) {
  if (cfg.seed_text == "random") {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  } else {
    try {
      std::size_t pos = 0;
      cfg.seed = std::stoull(cfg.seed_text, &pos);
      if (pos != cfg.seed_text.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      config_error("--seed must be a 64-bit integer or 'random'");
    }
  }
  const Protocol proto = parse_protocol(cfg.protocol);
  if (on_circle(proto) && !cfg.omega) {
    config_error("--omega is required for protocols svozil and ns");
  }
  if (!on_circle(proto) && cfg.omega) {
    config_error("--omega applies only to protocols svozil and ns");
  }
  if (cfg.omega && !(*cfg.omega >= 0.0 && *cfg.omega <= kHalfPi)) {
    config_error("--omega must lie in [0, pi/2]");
  }
  if (cfg.format != "csv" && cfg.format != "json") config_error("--format must be csv or json");
  if (cfg.n_samples == 0) config_error("--n-samples must be >= 1");
  if (cfg.subcommand == "attack" && cfg.n_sweep < 8) config_error("--n-sweep must be >= 8");
  if (!cfg.alice.empty()) {
    const std::size_t want = on_circle(proto) ? 1 : 3;
    if (cfg.alice.size() != want) {
      config_error("--alice takes " + std::to_string(want) + " value(s) for protocol " +
                   cfg.protocol);
    }
  }
}

// The embedded config deliberately omits --workers: the worker count is an
// execution detail and artifacts must not vary with it.
json config_json(const ExperimentConfig& cfg) {
  json j;
  j["subcommand"] = cfg.subcommand;
  j["protocol"] = cfg.protocol;
  if (cfg.omega) j["omega"] = *cfg.omega;
  j["n_samples"] = cfg.n_samples;
  j["n_sweep"] = cfg.n_sweep;
  j["seed"] = cfg.seed;
  j["settings"] = cfg.settings;
  j["format"] = cfg.format;
  j["out"] = cfg.out;
  if (!cfg.alice.empty()) j["alice"] = cfg.alice;
  return j;
}

std::string fmt9(double v) { return srvsim::detail::format_g9(v); }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;  // CSV view
  std::vector<json> rows;                       // JSON view, same fields
};

void emit(std::ostream& os, const ExperimentConfig& cfg, const Table& table) {
  if (cfg.format == "json") {
    json j;
    j["config"] = config_json(cfg);
    j["rows"] = table.rows;
    os << j.dump(2) << "\n";
    return;
  }
  os << "# config: " << config_json(cfg).dump() << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    os << (i ? "," : "") << table.header[i];
  }
  os << "\n";
  for (const auto& row : table.cells) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

int write_artifact(const ExperimentConfig& cfg, const Table& table) {
  if (cfg.out == "-") {
    emit(std::cout, cfg, table);
    return 0;
  }
  std::ofstream f(cfg.out);
  if (!f) {
    std::cerr << "srvsim: cannot open output file " << cfg.out << "\n";
    return 1;
  }
  emit(f, cfg, table);
  return 0;
}

std::vector<double> default_theta_grid() {
  std::vector<double> grid;
  grid.reserve(17);
  for (int i = 0; i <= 16; ++i) grid.push_back(std::min(kPi, static_cast<double>(i) * kPi / 16.0));
  return grid;
}

int cmd_correlate(const ExperimentConfig& cfg) {
  const Protocol proto = parse_protocol(cfg.protocol);
  const std::vector<double> grid = default_theta_grid();
  const std::vector<ScanRow> rows =
      scan_curve(proto, cfg.omega.value_or(0.0), grid, cfg.n_samples, cfg.seed, cfg.workers);
  Table t;
  t.header = {"theta", "empirical", "analytic", "stderr", "n", "seed"};
  for (const ScanRow& r : rows) {
    t.cells.push_back({fmt9(r.theta), fmt9(r.empirical), fmt9(r.analytic), fmt9(r.std_error),
                       std::to_string(r.n), std::to_string(r.seed)});
    t.rows.push_back(json{{"theta", r.theta},
                          {"empirical", r.empirical},
                          {"analytic", r.analytic},
                          {"stderr", r.std_error},
                          {"n", r.n},
                          {"seed", r.seed}});
  }
  return write_artifact(cfg, t);
}

void append_chsh_row(Table& t, const std::string& source, const CHSHReport& r) {
  t.cells.push_back({source, fmt9(r.correlations[0]), fmt9(r.correlations[1]),
                     fmt9(r.correlations[2]), fmt9(r.correlations[3]), fmt9(r.s_values[0]),
                     fmt9(r.s_values[1]), fmt9(r.s_values[2]), fmt9(r.s_values[3]), fmt9(r.s_max),
                     fmt9(r.two_term)});
  t.rows.push_back(json{{"source", source},
                        {"e_ab", r.correlations[0]},
                        {"e_abp", r.correlations[1]},
                        {"e_apb", r.correlations[2]},
                        {"e_apbp", r.correlations[3]},
                        {"s_minus_ab", r.s_values[0]},
                        {"s_minus_abp", r.s_values[1]},
                        {"s_minus_apb", r.s_values[2]},
                        {"s_minus_apbp", r.s_values[3]},
                        {"s_max", r.s_max},
                        {"two_term", r.two_term}});
}

int cmd_chsh(const ExperimentConfig& cfg) {
  const Protocol proto = parse_protocol(cfg.protocol);
  const double a = cfg.settings[0], ap = cfg.settings[1], b = cfg.settings[2],
               bp = cfg.settings[3];
  const std::array<std::pair<double, double>, 4> pairs = {
      {{a, b}, {a, bp}, {ap, b}, {ap, bp}}};

  std::array<double, 4> mc{};
  std::array<double, 4> analytic{};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [sa, sb] = pairs[i];
    if (on_circle(proto)) {
      const PlaneAngle omega(*cfg.omega);
      mc[i] = estimate_correlation(proto, PlaneAngle(sa), PlaneAngle(sb), omega, cfg.n_samples,
                                   cfg.seed, cfg.workers, i)
                  .mean;
      analytic[i] = svozil_E_analytic(folded_distance(PlaneAngle(sa), PlaneAngle(sb)), *cfg.omega);
    } else {
      mc[i] = estimate_correlation(proto, coplanar_setting(sa), coplanar_setting(sb),
                                   cfg.n_samples, cfg.seed, cfg.workers, i)
                  .mean;
      analytic[i] = -std::cos(sa - sb);
    }
  }
  CHSHReport mc_report = chsh(mc[0], mc[1], mc[2], mc[3]);
  CHSHReport an_report = chsh(analytic[0], analytic[1], analytic[2], analytic[3]);
  mc_report.settings = {a, ap, b, bp};
  an_report.settings = {a, ap, b, bp};

  Table t;
  t.header = {"source", "e_ab",        "e_abp",       "e_apb",       "e_apbp", "s_minus_ab",
              "s_minus_abp", "s_minus_apb", "s_minus_apbp", "s_max",  "two_term"};
  append_chsh_row(t, "monte_carlo", mc_report);
  append_chsh_row(t, "analytic", an_report);
  return write_artifact(cfg, t);
}

int cmd_svozil_curve(const ExperimentConfig& cfg) {
  const Protocol proto = parse_protocol(cfg.protocol);
  if (!on_circle(proto)) config_error("svozil-curve requires --protocol svozil or ns");
  Table t;
  t.header = {"theta", "analytic", "omega"};
  for (double theta : default_theta_grid()) {
    const double e = svozil_E_analytic(theta, *cfg.omega);
    t.cells.push_back({fmt9(theta), fmt9(e), fmt9(*cfg.omega)});
    t.rows.push_back(json{{"theta", theta}, {"analytic", e}, {"omega", *cfg.omega}});
  }
  return write_artifact(cfg, t);
}

const char* geometry_name(SweepGeometry g) {
  switch (g) {
    case SweepGeometry::XYPlane: return "xy";
    case SweepGeometry::XZPlane: return "xz";
    case SweepGeometry::YZPlane: return "yz";
    case SweepGeometry::Circle: return "circle";
  }
  return "?";
}

std::string transcript_path(const std::string& out, std::size_t k) {
  std::string base = out;
  const std::size_t dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > base.find_last_of('/') + 1) base = base.substr(0, dot);
  return base + "-transcript-" + std::to_string(k) + ".csv";
}

int cmd_attack(const ExperimentConfig& cfg) {
  const Protocol proto = parse_protocol(cfg.protocol);
  RandomStream root(cfg.seed);

  AttackOutcome outcome;
  Table t;
  if (on_circle(proto)) {
    const PlaneAngle alice =
        cfg.alice.empty() ? sample_plane_angle(root) : PlaneAngle(cfg.alice[0]);
    outcome = attack_pipeline(proto, alice, PlaneAngle(*cfg.omega), cfg.n_sweep);
    const PlaneAngle axis = outcome.estimate.circle_axis();
    const PlaneAngle dir = outcome.estimate.circle_direction();
    const double err = folded_distance(dir, alice);
    t.header = {"protocol", "channel", "n_sweep", "delta", "seed", "alice_angle", "axis_angle",
                "signed_angle", "uncertainty", "angular_error", "sign_resolved", "rounds", "cbits",
                "cbits_per_round", "grid_scoring"};
    t.cells.push_back({cfg.protocol, outcome.transcripts.front().channel == ChannelModel::ClassicalBit ? "cbit" : "box",
                       std::to_string(cfg.n_sweep), fmt9(kPi / static_cast<double>(cfg.n_sweep)),
                       std::to_string(cfg.seed), fmt9(alice.radians()), fmt9(axis.radians()),
                       fmt9(dir.radians()), fmt9(outcome.estimate.uncertainty), fmt9(err),
                       outcome.estimate.sign_resolved ? "true" : "false",
                       std::to_string(outcome.rounds), std::to_string(outcome.cbits),
                       std::to_string(outcome.transcripts.front().cbits_per_round()),
                       outcome.used_grid_scoring ? "true" : "false"});
    t.rows.push_back(json{{"protocol", cfg.protocol},
                          {"channel", outcome.transcripts.front().channel == ChannelModel::ClassicalBit ? "cbit" : "box"},
                          {"n_sweep", cfg.n_sweep},
                          {"delta", kPi / static_cast<double>(cfg.n_sweep)},
                          {"seed", cfg.seed},
                          {"alice_angle", alice.radians()},
                          {"axis_angle", axis.radians()},
                          {"signed_angle", dir.radians()},
                          {"uncertainty", outcome.estimate.uncertainty},
                          {"angular_error", err},
                          {"sign_resolved", outcome.estimate.sign_resolved},
                          {"rounds", outcome.rounds},
                          {"cbits", outcome.cbits},
                          {"cbits_per_round", outcome.transcripts.front().cbits_per_round()},
                          {"grid_scoring", outcome.used_grid_scoring}});
  } else {
    const UnitVec3 alice = cfg.alice.empty() ? sample_unit_sphere(root)
                                             : UnitVec3(cfg.alice[0], cfg.alice[1], cfg.alice[2]);
    outcome = attack_pipeline(proto, alice, cfg.n_sweep);
    const UnitVec3& axis = outcome.estimate.sphere_axis();
    const UnitVec3& dir = outcome.estimate.sphere_direction();
    const double err = dir.angle_to(alice);
    t.header = {"protocol", "channel", "n_sweep", "delta", "seed", "alice_x", "alice_y", "alice_z",
                "axis_x", "axis_y", "axis_z", "signed_x", "signed_y", "signed_z", "uncertainty",
                "angular_error", "sign_resolved", "rounds", "cbits", "cbits_per_round",
                "grid_scoring"};
    t.cells.push_back({cfg.protocol, outcome.transcripts.front().channel == ChannelModel::ClassicalBit ? "cbit" : "box",
                       std::to_string(cfg.n_sweep), fmt9(kPi / static_cast<double>(cfg.n_sweep)),
                       std::to_string(cfg.seed), fmt9(alice.x()), fmt9(alice.y()), fmt9(alice.z()),
                       fmt9(axis.x()), fmt9(axis.y()), fmt9(axis.z()), fmt9(dir.x()), fmt9(dir.y()),
                       fmt9(dir.z()), fmt9(outcome.estimate.uncertainty), fmt9(err),
                       outcome.estimate.sign_resolved ? "true" : "false",
                       std::to_string(outcome.rounds), std::to_string(outcome.cbits),
                       std::to_string(outcome.transcripts.front().cbits_per_round()),
                       outcome.used_grid_scoring ? "true" : "false"});
    t.rows.push_back(json{{"protocol", cfg.protocol},
                          {"channel", outcome.transcripts.front().channel == ChannelModel::ClassicalBit ? "cbit" : "box"},
                          {"n_sweep", cfg.n_sweep},
                          {"delta", kPi / static_cast<double>(cfg.n_sweep)},
                          {"seed", cfg.seed},
                          {"alice_x", alice.x()},
                          {"alice_y", alice.y()},
                          {"alice_z", alice.z()},
                          {"axis_x", axis.x()},
                          {"axis_y", axis.y()},
                          {"axis_z", axis.z()},
                          {"signed_x", dir.x()},
                          {"signed_y", dir.y()},
                          {"signed_z", dir.z()},
                          {"uncertainty", outcome.estimate.uncertainty},
                          {"angular_error", err},
                          {"sign_resolved", outcome.estimate.sign_resolved},
                          {"rounds", outcome.rounds},
                          {"cbits", outcome.cbits},
                          {"cbits_per_round", outcome.transcripts.front().cbits_per_round()},
                          {"grid_scoring", outcome.used_grid_scoring}});
  }

  const int status = write_artifact(cfg, t);
  if (status != 0) return status;

  for (std::size_t k = 0; k < outcome.transcripts.size(); ++k) {
    const Transcript& tr = outcome.transcripts[k];
    if (cfg.out == "-") {
      std::cout << "# transcript " << k << " sweep=" << geometry_name(tr.schedule.geometry)
                << " strategy=" << tr.strategy.describe() << "\n";
      write_transcript(std::cout, tr);
    } else {
      const std::string path = transcript_path(cfg.out, k);
      std::ofstream f(path);
      if (!f) {
        std::cerr << "srvsim: cannot open transcript file " << path << "\n";
        return 1;
      }
      f << "# config: " << config_json(cfg).dump() << "\n";
      f << "# transcript " << k << " sweep=" << geometry_name(tr.schedule.geometry)
        << " strategy=" << tr.strategy.describe() << "\n";
      write_transcript(f, tr);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shared-random-variable singlet simulator and sweep-attack toolkit"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  auto add_common = [&cfg](CLI::App* sub) {
    sub->add_option("--protocol", cfg.protocol, "tb | svozil | ntb | ns")->capture_default_str();
    sub->add_option("--omega", cfg.omega, "Svozil shift in radians (svozil | ns only)");
    sub->add_option("--n-samples", cfg.n_samples, "Monte Carlo rounds per estimate")
        ->capture_default_str();
    sub->add_option("--n-sweep", cfg.n_sweep, "sweep resolution N (delta = pi/N)")
        ->capture_default_str();
    sub->add_option("--seed", cfg.seed_text, "64-bit seed, or 'random'")->capture_default_str();
    sub->add_option("--settings", cfg.settings, "a,a',b,b' in radians")
        ->delimiter(',')
        ->expected(4);
    sub->add_option("--format", cfg.format, "csv | json")->capture_default_str();
    sub->add_option("--out", cfg.out, "output path, or - for stdout")->capture_default_str();
    sub->add_option("--workers", cfg.workers, "worker threads, 0 = hardware")
        ->capture_default_str();
    sub->add_option("--alice", cfg.alice, "true Alice setting: x,y,z (sphere) or angle (circle)")
        ->delimiter(',');
  };
  CLI::App* correlate = app.add_subcommand("correlate", "empirical vs analytic correlation table");
  CLI::App* chsh_cmd = app.add_subcommand("chsh", "CHSH score at four settings");
  CLI::App* curve = app.add_subcommand("svozil-curve", "analytic Svozil correlation curve");
  CLI::App* attack = app.add_subcommand("attack", "sweep attack demonstration");
  for (CLI::App* sub : {correlate, chsh_cmd, curve, attack}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cfg.subcommand = correlate->parsed()  ? "correlate"
                   : chsh_cmd->parsed() ? "chsh"
                   : curve->parsed()    ? "svozil-curve"
                                        : "attack";
  resolve_config(cfg);

  try {
    if (cfg.subcommand == "correlate") return cmd_correlate(cfg);
    if (cfg.subcommand == "chsh") return cmd_chsh(cfg);
    if (cfg.subcommand == "svozil-curve") return cmd_svozil_curve(cfg);
    return cmd_attack(cfg);
  } catch (const Unlocatable& e) {
    std::cerr << "srvsim: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "srvsim: " << e.what() << "\n";
    return 2;
  } catch (const OutOfRange& e) {
    std::cerr << "srvsim: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "srvsim: " << e.what() << "\n";
    return 1;
  }
}
