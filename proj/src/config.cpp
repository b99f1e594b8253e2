#include "relaysim/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace relaysim {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& what) { throw ConfigError(ConfigErrorCode::constraint, what); }

/// Reads the keys of one JSON object, rejecting anything it was not asked for.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) violation(where() + " must be an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.count(key)) violation("unknown key " + path_ + "." + key);
    }
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  void read(const char* key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) violation(where(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void read(const char* key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) violation(where(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }

  void read(const char* key, int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) violation(where(key) + " must be an integer");
      out = v->get<int>();
    }
  }

  void read(const char* key, std::uint64_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) violation(where(key) + " must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read(const char* key, std::vector<double>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array()) violation(where(key) + " must be an array");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number()) violation(where(key) + " must hold numbers");
        out.push_back(x.get<double>());
      }
    }
  }

  template <typename Fn>
  void child(const char* key, Fn&& fn) {
    if (const auto* v = find(key)) {
      Section s(*v, path_ + "." + key);
      fn(s);
    }
  }

  /// Marks a key as known without reading it.
  void skip(const char* key) { seen_.insert(key); }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string where(const char* key = nullptr) const { return key ? path_ + "." + key : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_fiber(Section& s, FiberSpec& f) {
  s.read("length_km", f.length_km);
  s.read("attenuation_db_per_km", f.attenuation_db_per_km);
  s.read("dispersion_ps_per_nm_km", f.dispersion_ps_per_nm_km);
  s.read("thermal_coeff_mm_per_K_per_km", f.thermal_coeff_mm_per_K_per_km);
}

void read_detector(Section& s, DetectorSpec& d) {
  s.read("efficiency", d.efficiency);
  s.read("dark_prob_per_ns", d.dark_prob_per_ns);
  s.read("gated", d.gated);
  s.read("gate_width_ns", d.gate_width_ns);
}

json fiber_json(const FiberSpec& f) {
  return {{"length_km", f.length_km},
          {"attenuation_db_per_km", f.attenuation_db_per_km},
          {"dispersion_ps_per_nm_km", f.dispersion_ps_per_nm_km},
          {"thermal_coeff_mm_per_K_per_km", f.thermal_coeff_mm_per_K_per_km}};
}

json detector_json(const DetectorSpec& d) {
  return {{"efficiency", d.efficiency},
          {"dark_prob_per_ns", d.dark_prob_per_ns},
          {"gated", d.gated},
          {"gate_width_ns", d.gate_width_ns}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigErrorCode::parse_error, e.what());
  }

  ExperimentConfig cfg;
  {
    Section root(doc, "config");
    root.skip("derived");
    root.child("sources", [&](Section& s) {
      s.read("qubit_pair_probability", cfg.qubit_pair_probability);
      s.read("pump_ratio", cfg.pump_ratio);
      s.read("pump_phase", cfg.pump_phase);
      s.read("first_order_only", cfg.first_order_only);
      s.read("hom_pump_ratio", cfg.hom_pump_ratio);
    });
    root.child("interferometers", [&](Section& s) {
      s.read("alpha", cfg.alpha);
      s.read("beta", cfg.beta);
      s.read("visibility", cfg.interferometer_visibility);
      s.read("insertion_loss", cfg.insertion_loss);
    });
    root.child("links", [&](Section& s) {
      s.child("alice", [&](Section& f) { read_fiber(f, cfg.alice_link); });
      s.child("charlie", [&](Section& f) { read_fiber(f, cfg.charlie_link); });
      s.child("bob", [&](Section& f) { read_fiber(f, cfg.bob_link); });
      s.child("filter", [&](Section& f) {
        f.read("center_wavelength_nm", cfg.filter.center_wavelength_nm);
        f.read("bandwidth_fwhm_nm", cfg.filter.bandwidth_fwhm_nm);
      });
      s.read("delay_um", cfg.delay_um);
      s.read("mode_overlap", cfg.mode_overlap);
      s.read("dispersion_overlap", cfg.dispersion_overlap);
    });
    root.child("detectors", [&](Section& s) {
      s.child("c1", [&](Section& d) { read_detector(d, cfg.c1); });
      s.child("c2", [&](Section& d) { read_detector(d, cfg.c2); });
      s.child("b", [&](Section& d) { read_detector(d, cfg.b); });
      s.read("slot_ns", cfg.slot_ns);
      s.read("window_ns", cfg.window_ns);
    });
    root.child("relay", [&](Section& s) {
      s.read("segments", cfg.relay.segments);
      s.read("dark_prob_per_ns", cfg.relay.dark_prob_per_ns);
      s.read("gate_ns", cfg.relay.gate_ns);
      s.read("attenuation_db_per_km", cfg.relay.attenuation_db_per_km);
      s.read("efficiency", cfg.relay.efficiency);
      s.read("station_efficiencies", cfg.relay.station_efficiencies);
      s.read("interference_visibility", cfg.relay.interference_visibility);
      s.child("grid", [&](Section& g) {
        g.read("max_km", cfg.relay_grid.max_km);
        g.read("step_km", cfg.relay_grid.step_km);
      });
    });
    root.child("run", [&](Section& s) {
      s.read("pulses", cfg.pulses);
      s.read("seed", cfg.seed);
      s.read("max_photons", cfg.max_photons);
    });
  }

  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    violation(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigErrorCode::missing_file, "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  json doc;
  doc["sources"] = {{"qubit_pair_probability", cfg.qubit_pair_probability},
                    {"pump_ratio", cfg.pump_ratio},
                    {"pump_phase", cfg.pump_phase},
                    {"first_order_only", cfg.first_order_only},
                    {"hom_pump_ratio", cfg.hom_pump_ratio}};
  doc["interferometers"] = {{"alpha", cfg.alpha},
                            {"beta", cfg.beta},
                            {"visibility", cfg.interferometer_visibility},
                            {"insertion_loss", cfg.insertion_loss}};
  doc["links"] = {{"alice", fiber_json(cfg.alice_link)},
                  {"charlie", fiber_json(cfg.charlie_link)},
                  {"bob", fiber_json(cfg.bob_link)},
                  {"filter",
                   {{"center_wavelength_nm", cfg.filter.center_wavelength_nm},
                    {"bandwidth_fwhm_nm", cfg.filter.bandwidth_fwhm_nm}}},
                  {"delay_um", cfg.delay_um},
                  {"mode_overlap", cfg.mode_overlap},
                  {"dispersion_overlap", cfg.dispersion_overlap}};
  doc["detectors"] = {{"c1", detector_json(cfg.c1)},
                      {"c2", detector_json(cfg.c2)},
                      {"b", detector_json(cfg.b)},
                      {"slot_ns", cfg.slot_ns},
                      {"window_ns", cfg.window_ns}};
  doc["relay"] = {{"segments", cfg.relay.segments},
                  {"dark_prob_per_ns", cfg.relay.dark_prob_per_ns},
                  {"gate_ns", cfg.relay.gate_ns},
                  {"attenuation_db_per_km", cfg.relay.attenuation_db_per_km},
                  {"efficiency", cfg.relay.efficiency},
                  {"station_efficiencies", cfg.relay.station_efficiencies},
                  {"interference_visibility", cfg.relay.interference_visibility},
                  {"grid", {{"max_km", cfg.relay_grid.max_km}, {"step_km", cfg.relay_grid.step_km}}}};
  doc["run"] = {{"pulses", cfg.pulses}, {"seed", cfg.seed}, {"max_photons", cfg.max_photons}};
  doc["derived"] = {{"epr_pair_probability", epr_pair_probability(cfg)}};
  return doc.dump(indent);
}

}  // namespace relaysim
