#include "convexinit/train_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "convexinit/checkpoint.hpp"
#include "convexinit/errors.hpp"

namespace convexinit {

namespace {

namespace pt = boost::property_tree;

const std::set<std::string>& allowed_keys(const std::string& section) {
  static const std::set<std::string> network{"widths", "alpha",    "variant", "skip",
                                             "init",   "rho_star", "var_star", "beta"};
  static const std::set<std::string> train{"learning_rate", "l2",   "batch_size",
                                           "epochs",        "seed", "record_timing",
                                           "check_invariants"};
  static const std::set<std::string> data{"kind",      "images", "labels",      "subset",
                                          "normalize", "n_classes", "dim", "n_per_class",
                                          "separation"};
  static const std::set<std::string> none;
  if (section == "network") return network;
  if (section == "train") return train;
  if (section == "data") return data;
  return none;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t to_size(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size() || v < 0) throw std::invalid_argument(value);
    return std::size_t(v);
  } catch (const std::exception&) {
    throw FormatError("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const FormatError&) {
    throw FormatError("config: '" + key + "' expects a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw FormatError("config: '" + key + "' expects a boolean, got '" + value + "'");
}

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base_dir) {
  std::filesystem::path p(value);
  if (p.is_absolute()) return p;
  if (const char* env = std::getenv("CONVEXINIT_DATA_DIR"); env && *env) {
    const std::filesystem::path candidate = std::filesystem::path(env) / p;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return base_dir / p;
}

}  // namespace

TrainConfig parse_train_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(std::string("config: ") + e.message() + " at line " +
                      std::to_string(e.line()));
  }

  TrainConfig config;
  config.network.layer_widths.clear();
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw FormatError("config: key '" + section + "' must live inside a section");
    }
    const auto& keys = allowed_keys(section);
    if (keys.empty()) throw FormatError("config: unknown section [" + section + "]");
    for (const auto& [key, node] : entries) {
      if (!keys.contains(key)) {
        throw FormatError("config: unknown key '" + key + "' in section [" + section + "]");
      }
      const std::string value = trim(node.data());
      const std::string name = section + "." + key;
      try {
        if (section == "network") {
          if (key == "widths") {
            std::stringstream ss(value);
            for (std::string w; std::getline(ss, w, ',');) {
              config.network.layer_widths.push_back(to_size(name, trim(w)));
            }
          } else if (key == "alpha") {
            config.network.alpha = to_double(name, value);
          } else if (key == "variant") {
            config.network.variant = parse_variant(value);
          } else if (key == "skip") {
            config.network.skip_connections = to_bool(name, value);
          } else if (key == "init") {
            config.network.init.kind = parse_init_kind(value);
          } else if (key == "rho_star") {
            config.network.init.rho_star = to_double(name, value);
          } else if (key == "var_star") {
            config.network.init.var_star = to_double(name, value);
          } else if (key == "beta") {
            config.network.init.beta = to_double(name, value);
          }
        } else if (section == "train") {
          if (key == "learning_rate") config.learning_rate = to_double(name, value);
          else if (key == "l2") config.l2 = to_double(name, value);
          else if (key == "batch_size") config.batch_size = to_size(name, value);
          else if (key == "epochs") config.epochs = to_size(name, value);
          else if (key == "seed") config.seed = to_size(name, value);
          else if (key == "record_timing") config.record_timing = to_bool(name, value);
          else if (key == "check_invariants") config.check_invariants = to_bool(name, value);
        } else if (section == "data") {
          DatasetSpec& d = config.dataset;
          if (key == "kind") {
            if (value == "idx") d.kind = DatasetSpec::Kind::idx;
            else if (value == "synthetic") d.kind = DatasetSpec::Kind::synthetic;
            else throw FormatError("config: data.kind must be 'idx' or 'synthetic'");
          } else if (key == "images") {
            d.images = resolve(value, base_dir);
          } else if (key == "labels") {
            d.labels = resolve(value, base_dir);
          } else if (key == "subset") {
            d.subset = to_size(name, value);
          } else if (key == "normalize") {
            d.normalization = parse_normalization(value);
          } else if (key == "n_classes") {
            d.n_classes = to_size(name, value);
          } else if (key == "dim") {
            d.dim = to_size(name, value);
          } else if (key == "n_per_class") {
            d.n_per_class = to_size(name, value);
          } else if (key == "separation") {
            d.separation = to_double(name, value);
          }
        }
      } catch (const ParameterError& e) {
        throw FormatError(std::string("config: ") + e.what());
      }
    }
  }

  if (config.network.layer_widths.empty()) throw FormatError("config: network.widths is required");
  if (config.dataset.kind == DatasetSpec::Kind::idx &&
      (config.dataset.images.empty() || config.dataset.labels.empty())) {
    throw FormatError("config: idx data needs data.images and data.labels");
  }
  try {
    config.network.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return config;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path.string() + "'");
  return parse_train_config(in, path.parent_path());
}

}  // namespace convexinit
