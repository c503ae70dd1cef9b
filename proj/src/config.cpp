#include "healvit/config.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace healvit::config {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* want) {
  throw std::invalid_argument("config: key " + key + ": expected " + want +
                              ", got \"" + value + "\"");
}

int to_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "an integer");
  }
  if (used != value.size()) bad_value(key, value, "an integer");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "an unsigned integer");
  }
  if (used != value.size() || value[0] == '-') {
    bad_value(key, value, "an unsigned integer");
  }
  return static_cast<std::uint64_t>(v);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
  if (used != value.size()) bad_value(key, value, "a number");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key or value");
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument("config: duplicate key " + key);
    }

    if (key == "n_lat") {
      cfg.model.n_lat = to_int(key, value);
    } else if (key == "n_lon") {
      cfg.model.n_lon = to_int(key, value);
    } else if (key == "fine_level") {
      cfg.model.fine_level = to_int(key, value);
    } else if (key == "latent_dim") {
      cfg.model.latent_dim = to_int(key, value);
    } else if (key == "processor_depth") {
      cfg.model.processor_depth = to_int(key, value);
    } else if (key == "head_dim") {
      cfg.model.head_dim = to_int(key, value);
    } else if (key == "fine_window") {
      cfg.model.fine_window = to_int(key, value);
    } else if (key == "coarse_window") {
      cfg.model.coarse_window = to_int(key, value);
    } else if (key == "shared_edge_embeddings") {
      cfg.model.shared_edge_embeddings = to_bool(key, value);
    } else if (key == "threads") {
      cfg.model.threads = to_int(key, value);
    } else if (key == "beta1") {
      cfg.optimizer.beta1 = to_double(key, value);
    } else if (key == "beta2") {
      cfg.optimizer.beta2 = to_double(key, value);
    } else if (key == "weight_decay") {
      cfg.optimizer.weight_decay = to_double(key, value);
    } else if (key == "peak_lr") {
      cfg.optimizer.peak_lr = to_double(key, value);
    } else if (key == "fine_tune_lr") {
      cfg.optimizer.fine_tune_lr = to_double(key, value);
    } else if (key == "epsilon") {
      cfg.optimizer.epsilon = to_double(key, value);
    } else if (key == "warmup_fraction") {
      cfg.optimizer.warmup_fraction = to_double(key, value);
    } else if (key == "phases") {
      cfg.phases = value;
    } else if (key == "seed") {
      cfg.seed = to_u64(key, value);
    } else if (key == "batch_size") {
      cfg.batch_size = to_int(key, value);
    } else if (key == "data_dir") {
      cfg.data_dir = value;
    } else if (key == "out_path") {
      cfg.out_path = value;
    } else if (key == "trace_path") {
      cfg.trace_path = value;
    } else {
      throw std::invalid_argument("config: unknown key " + key);
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace healvit::config
