#include "rankflow/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rankflow/errors.hpp"

namespace rankflow {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct Cursor {
  const std::string& label;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& message) const {
    raise(Errc::bad_config,
          label + ":" + std::to_string(line) + ": " + message);
  }
};

double parse_double(const Cursor& at, const std::string& key,
                    const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) {
    at.fail("invalid number for '" + key + "'");
  }
  return out;
}

std::uint64_t parse_u64(const Cursor& at, const std::string& key,
                        const std::string& value) {
  std::uint64_t out = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) {
    at.fail("invalid unsigned integer for '" + key + "'");
  }
  return out;
}

std::size_t parse_size(const Cursor& at, const std::string& key,
                       const std::string& value) {
  return static_cast<std::size_t>(parse_u64(at, key, value));
}

bool parse_bool(const Cursor& at, const std::string& key,
                const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  at.fail("'" + key + "' must be true or false");
}

std::vector<std::string> split_list(const Cursor& at, const std::string& key,
                                    const std::string& value) {
  std::vector<std::string> items;
  std::string token;
  std::stringstream stream(value);
  while (std::getline(stream, token, ',')) {
    token = trim(token);
    if (token.empty()) at.fail("empty element in list '" + key + "'");
    items.push_back(token);
  }
  if (items.empty()) at.fail("empty list for '" + key + "'");
  return items;
}

std::vector<double> parse_double_list(const Cursor& at, const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(at, key, value)) {
    out.push_back(parse_double(at, key, item));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    raise(Errc::bad_config, path + ": cannot open config file");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& path_label) {
  ExperimentConfig cfg;
  cfg.source_path = path_label;

  Cursor at{path_label, 0};
  std::string section;
  std::set<std::string> seen;
  std::istringstream stream(text);
  std::string raw;

  while (std::getline(stream, raw)) {
    ++at.line;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') at.fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "system" && section != "simulation" && section != "mc" &&
          section != "output" && section != "validate") {
        at.fail("unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) at.fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) at.fail("empty key");
    if (value.empty()) at.fail("empty value for '" + key + "'");
    if (section.empty()) at.fail("key '" + key + "' outside any section");
    if (!seen.insert(section + "." + key).second) {
      at.fail("duplicate key '" + key + "' in [" + section + "]");
    }

    if (section == "system") {
      auto& s = cfg.system;
      if (key == "infinite") {
        s.infinite = parse_bool(at, key, value);
      } else if (key == "n") {
        s.n = parse_size(at, key, value);
      } else if (key == "drifts") {
        s.drifts = parse_double_list(at, key, value);
      } else if (key == "sigmas") {
        s.sigmas = parse_double_list(at, key, value);
      } else if (key == "sigmas2") {
        s.sigmas2 = parse_double_list(at, key, value);
      } else if (key == "initial") {
        s.initial = parse_double_list(at, key, value);
      } else if (key == "M") {
        s.M = parse_size(at, key, value);
      } else if (key == "gamma1") {
        s.gamma1 = parse_double(at, key, value);
      } else if (key == "gamma2") {
        s.gamma2 = parse_double(at, key, value);
      } else if (key == "initial_slope") {
        s.initial_slope = parse_double(at, key, value);
      } else if (key == "initial_offset") {
        s.initial_offset = parse_double(at, key, value);
      } else {
        at.fail("unknown key '" + key + "' in [system]");
      }
    } else if (section == "simulation") {
      auto& s = cfg.simulation;
      if (key == "T") {
        s.T = parse_double(at, key, value);
      } else if (key == "dt") {
        s.dt = parse_double(at, key, value);
      } else if (key == "scheme") {
        if (value != "euler" && value != "event") {
          at.fail("'scheme' must be euler or event");
        }
        s.scheme = value;
      } else if (key == "epsilon_triple") {
        s.epsilon_triple = parse_double(at, key, value);
      } else if (key == "decimation") {
        s.decimation = parse_size(at, key, value);
        if (s.decimation == 0) at.fail("'decimation' must be >= 1");
      } else if (key == "safety_margin") {
        s.safety_margin = parse_double(at, key, value);
      } else if (key == "max_steps") {
        s.max_steps = parse_size(at, key, value);
        if (s.max_steps == 0) at.fail("'max_steps' must be >= 1");
      } else {
        at.fail("unknown key '" + key + "' in [simulation]");
      }
    } else if (section == "mc") {
      auto& s = cfg.mc;
      if (key == "n_paths") {
        s.n_paths = parse_size(at, key, value);
      } else if (key == "seed") {
        s.seed = parse_u64(at, key, value);
      } else if (key == "epsilons") {
        s.epsilons = parse_double_list(at, key, value);
      } else {
        at.fail("unknown key '" + key + "' in [mc]");
      }
    } else if (section == "output") {
      auto& s = cfg.output;
      if (key == "trajectory") {
        s.trajectory = value;
      } else if (key == "activations") {
        s.activations = value;
      } else if (key == "report") {
        s.report = value;
      } else if (key == "curve") {
        s.curve = value;
      } else if (key == "check") {
        s.check = value;
      } else {
        at.fail("unknown key '" + key + "' in [output]");
      }
    } else {  // validate
      auto& s = cfg.validate;
      if (key == "checks") {
        s.checks = split_list(at, key, value);
      } else {
        at.fail("unknown key '" + key + "' in [validate]");
      }
    }
  }

  // Section-internal consistency; command-specific requirements are
  // enforced at dispatch so `check` does not demand simulation keys.
  const auto& sys = cfg.system;
  if (!sys.sigmas.empty() && !sys.sigmas2.empty()) {
    raise(Errc::bad_config,
          path_label + ": specify exactly one of 'sigmas' and 'sigmas2'");
  }
  const auto check_n = [&](const std::vector<double>& v, const char* key) {
    if (!v.empty() && sys.n && v.size() != *sys.n) {
      raise(Errc::bad_config, path_label + ": length of '" +
                                  std::string(key) +
                                  "' does not match 'n'");
    }
  };
  check_n(sys.drifts, "drifts");
  check_n(sys.sigmas, "sigmas");
  check_n(sys.sigmas2, "sigmas2");
  check_n(sys.initial, "initial");
  if (sys.infinite && sys.M) {
    const auto check_m = [&](const std::vector<double>& v, const char* key) {
      if (!v.empty() && v.size() != *sys.M) {
        raise(Errc::bad_config, path_label + ": length of '" +
                                    std::string(key) +
                                    "' does not match 'M'");
      }
    };
    check_m(sys.drifts, "drifts");
    check_m(sys.sigmas, "sigmas");
    check_m(sys.sigmas2, "sigmas2");
  }
  return cfg;
}

std::vector<double> resolved_variances(const SystemSection& system) {
  if (!system.sigmas2.empty()) return system.sigmas2;
  std::vector<double> vars;
  vars.reserve(system.sigmas.size());
  for (double s : system.sigmas) vars.push_back(s * s);
  return vars;
}

std::vector<double> resolved_sigmas(const SystemSection& system) {
  if (!system.sigmas.empty()) return system.sigmas;
  std::vector<double> sigmas;
  sigmas.reserve(system.sigmas2.size());
  for (double v : system.sigmas2) sigmas.push_back(std::sqrt(v));
  return sigmas;
}

}  // namespace rankflow
