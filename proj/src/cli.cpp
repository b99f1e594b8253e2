#include "relaysim/cli.hpp"

#include "relaysim/config.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

namespace relaysim {

using nlohmann::ordered_json;

namespace {

constexpr int kFringePoints = 16;
constexpr double kHomSpanUm = 300.0;
constexpr double kHomStepUm = 20.0;
constexpr int kSweepTheta = 10;
constexpr int kSweepAlpha = 10;

std::string num(double x) { return fmt::format("{:.12g}", x); }

std::vector<double> fringe_axis() {
  std::vector<double> out;
  for (int k = 0; k < kFringePoints; ++k) out.push_back(2 * std::numbers::pi * k / kFringePoints);
  return out;
}

std::vector<double> hom_axis() {
  std::vector<double> out;
  const int half = static_cast<int>(std::lround(kHomSpanUm / kHomStepUm));
  for (int k = -half; k <= half; ++k) out.push_back(k * kHomStepUm);
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const RunManifest& m, const ExperimentConfig& cfg) {
    comment(fmt::format("relaysim {}", kVersion));
    comment(fmt::format("schema {}", kCsvSchema));
    comment(fmt::format("experiment {}", m.subcommand));
    comment(fmt::format("mode {}", to_string(m.mode)));
    comment(fmt::format("seed {}", cfg.seed));
    comment(fmt::format("pulses {}", cfg.pulses));
    comment(fmt::format("config {}", config_to_json(cfg, -1)));
  }

  void comment(const std::string& line) { text_ += "# " + line + "\n"; }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

ordered_json summary_json(const ScanSummary& s) {
  ordered_json j;
  j["visibility"] = s.visibility.value;
  j["visibility_error"] = s.visibility.error;
  if (s.fidelity) {
    j["fidelity"] = s.fidelity->value;
    j["fidelity_error"] = s.fidelity->error;
  }
  for (const auto& [k, v] : s.extra) j[k] = v;
  return j;
}

void fit_footer(CsvWriter& csv, const char* which, const std::optional<ScanSummary>& s) {
  if (!s) return;
  std::string line = fmt::format("fit {} visibility={} visibility_error={}", which, num(s->visibility.value),
                                 num(s->visibility.error));
  if (s->fidelity) line += fmt::format(" fidelity={} fidelity_error={}", num(s->fidelity->value), num(s->fidelity->error));
  for (const auto& [k, v] : s->extra) line += fmt::format(" {}={}", k, num(v));
  csv.comment(line);
}

void write_scan(CsvWriter& csv, const ScanResult& r, RunMode mode) {
  std::vector<std::string> header{r.axis_name};
  for (const auto& c : r.columns) {
    if (wants_analytic(mode)) header.push_back("p_" + c);
  }
  for (const auto& c : r.columns) {
    if (wants_sampled(mode)) {
      header.push_back("n_" + c);
      header.push_back("sigma_" + c);
    }
  }
  csv.row(header);
  for (const auto& p : r.points) {
    std::vector<std::string> cells{num(p.axis)};
    if (wants_analytic(mode)) {
      for (double v : p.analytic) cells.push_back(num(v));
    }
    if (wants_sampled(mode)) {
      for (const auto& c : p.sampled) {
        cells.push_back(std::to_string(c.count));
        cells.push_back(num(std::sqrt(static_cast<double>(c.count))));
      }
    }
    csv.row(cells);
  }
  fit_footer(csv, "analytic", r.analytic_summary);
  fit_footer(csv, "sampled", r.sampled_summary);
  for (const auto& n : r.notes) csv.comment("note " + n);
}

ordered_json summary_header(const RunManifest& m, const ExperimentConfig& cfg) {
  ordered_json j;
  j["version"] = kVersion;
  j["schema"] = kSummarySchema;
  j["experiment"] = m.subcommand;
  j["mode"] = to_string(m.mode);
  j["seed"] = cfg.seed;
  j["pulses"] = cfg.pulses;
  j["config"] = ordered_json::parse(config_to_json(cfg, -1));
  return j;
}

void relay_output(CsvWriter& csv, ordered_json& summary, const ExperimentConfig& cfg) {
  const auto curves = relay_fidelity_curve(cfg.relay, relay_grid(cfg.relay_grid));
  csv.row({"l_km", "F_n1", "F_n2", "F_n3", "F_n4"});
  for (std::size_t k = 0; k < curves.lengths_km.size(); ++k) {
    std::vector<std::string> cells{num(curves.lengths_km[k])};
    for (const auto& c : curves.curves) cells.push_back(num(c[k]));
    csv.row(cells);
  }
  ordered_json thresholds, effective;
  for (int n = 1; n <= 4; ++n) {
    auto p = cfg.relay;
    p.segments = n;
    const double d = relay_threshold_distance(p, 0.9);
    const std::string key = fmt::format("n{}", n);
    thresholds[key] = d;
    effective[key] = curves.effective_distance_km[static_cast<std::size_t>(n - 1)];
    csv.comment(fmt::format("threshold n={} F=0.9 l_km={}", n, num(d)));
  }
  summary["analytic"] = {{"distance_below_0.9_km", thresholds}, {"effective_distance_km", effective}};
}

void sweep_output(CsvWriter& csv, ordered_json& summary, const ExperimentConfig& cfg) {
  const auto points = teleportation_sweep(cfg, kSweepTheta, kSweepAlpha);
  csv.row({"theta", "alpha", "bsm_probability", "fidelity"});
  double f_min = 1.0, f_sum = 0.0, p_sum = 0.0;
  for (const auto& p : points) {
    csv.row({num(p.theta), num(p.alpha), num(p.bsm_probability), num(p.fidelity)});
    f_min = std::min(f_min, p.fidelity);
    f_sum += p.fidelity;
    p_sum += p.bsm_probability;
  }
  const double n = static_cast<double>(points.size());
  csv.comment(fmt::format("fit analytic fidelity_mean={} fidelity_min={}", num(f_sum / n), num(f_min)));
  summary["analytic"] = {{"fidelity_mean", f_sum / n}, {"fidelity_min", f_min}, {"bsm_probability_mean", p_sum / n}};
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"teleport-equator", "teleport-poles", "hom",
                                              "franson",          "relay-curve",    "sweep"};
  return names;
}

std::optional<RunMode> parse_mode(const std::string& text) {
  if (text == "analytic") return RunMode::analytic;
  if (text == "montecarlo") return RunMode::montecarlo;
  if (text == "both") return RunMode::both;
  return std::nullopt;
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::analytic: return "analytic";
    case RunMode::montecarlo: return "montecarlo";
    case RunMode::both: return "both";
  }
  return "both";
}

std::filesystem::path summary_path(const std::filesystem::path& out) {
  if (out.extension() == ".json") return std::filesystem::path(out.string() + ".summary.json");
  auto p = out;
  return p.replace_extension(".json");
}

RunOutput render(const RunManifest& m, const ExperimentConfig& cfg) {
  CsvWriter csv(m, cfg);
  auto summary = summary_header(m, cfg);
  const RunOptions opt{m.mode, cfg.pulses, cfg.seed};

  std::optional<ScanResult> scan;
  if (m.subcommand == "teleport-equator") {
    scan = run_teleportation_equator(cfg, fringe_axis(), opt);
  } else if (m.subcommand == "teleport-poles") {
    scan = run_teleportation_poles(cfg, opt);
  } else if (m.subcommand == "hom") {
    scan = run_hom_scan(cfg, hom_axis(), opt);
  } else if (m.subcommand == "franson") {
    scan = run_franson_scan(cfg, fringe_axis(), opt);
  } else if (m.subcommand == "relay-curve") {
    relay_output(csv, summary, cfg);
  } else if (m.subcommand == "sweep") {
    sweep_output(csv, summary, cfg);
  } else {
    throw std::invalid_argument("unknown subcommand " + m.subcommand);
  }

  if (scan) {
    write_scan(csv, *scan, m.mode);
    if (scan->analytic_summary) summary["analytic"] = summary_json(*scan->analytic_summary);
    if (scan->sampled_summary) summary["sampled"] = summary_json(*scan->sampled_summary);
    if (!scan->notes.empty()) summary["notes"] = scan->notes;
  }
  return {csv.text(), summary.dump(2) + "\n"};
}

int run(const RunManifest& m, std::ostream& diag) {
  try {
    auto cfg = m.config ? load_config(*m.config) : parse_config("{}");
    if (m.seed) cfg.seed = *m.seed;
    if (m.pulses) cfg.pulses = *m.pulses;
    validate(cfg);

    const auto out = render(m, cfg);
    for (const auto& [path, text] : {std::pair{m.out, &out.csv}, std::pair{summary_path(m.out), &out.summary}}) {
      std::ofstream f(path, std::ios::binary);
      if (!(f << *text)) {
        diag << "error: cannot write " << path.string() << '\n';
        return kExitExperiment;
      }
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    diag << "config error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const ExperimentError& e) {
    diag << "experiment error: " << e.what() << '\n';
    return kExitExperiment;
  } catch (const std::invalid_argument& e) {
    diag << "invalid parameter: " << e.what() << '\n';
    return kExitConstraint;
  } catch (const std::exception& e) {
    diag << "experiment error: " << e.what() << '\n';
    return kExitExperiment;
  }
}

}  // namespace relaysim
