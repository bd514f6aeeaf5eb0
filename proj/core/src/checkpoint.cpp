#include "convexinit/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <system_error>

#include "convexinit/errors.hpp"

namespace convexinit {

namespace {

void write_tensor(std::ostream& out, const std::string& name, std::size_t rows, std::size_t cols,
                  std::span<const double> values) {
  out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ' ';
      out << format_double(values[r * cols + c]);
    }
    out << '\n';
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> parts;
  for (std::string p; ss >> p;) parts.push_back(p);
  return parts;
}

std::size_t parse_size(std::string_view text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("checkpoint: expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(std::string("checkpoint truncated before ") + what);
  return line;
}

std::vector<double> read_tensor(std::istream& in, const std::string& name, std::size_t rows,
                                std::size_t cols) {
  const auto header = split_ws(next_line(in, name.c_str()));
  if (header.size() != 4 || header[0] != "tensor" || header[1] != name) {
    throw FormatError("checkpoint: expected tensor '" + name + "'");
  }
  if (parse_size(header[2]) != rows || parse_size(header[3]) != cols) {
    throw FormatError("checkpoint: tensor '" + name + "' has shape " + header[2] + "x" +
                      header[3] + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto fields = split_ws(next_line(in, name.c_str()));
    if (fields.size() != cols) {
      throw FormatError("checkpoint: tensor '" + name + "' row " + std::to_string(r) + " has " +
                        std::to_string(fields.size()) + " values, expected " +
                        std::to_string(cols));
    }
    for (const auto& f : fields) values.push_back(parse_double(f));
  }
  return values;
}

std::string join_widths(const std::vector<std::size_t>& widths) {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(widths[i]);
  }
  return s;
}

NetworkConfig parse_config_line(const std::string& line) {
  const auto fields = split_ws(line);
  if (fields.empty() || fields[0] != "config") throw FormatError("checkpoint: missing config line");
  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint: bad config field '" + fields[i] + "'");
    kv[fields[i].substr(0, eq)] = fields[i].substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("checkpoint: config lacks '") + key + "'");
    return it->second;
  };

  NetworkConfig config;
  std::stringstream widths(get("widths"));
  for (std::string w; std::getline(widths, w, ',');) config.layer_widths.push_back(parse_size(w));
  config.alpha = parse_double(get("alpha"));
  try {
    config.variant = parse_variant(get("variant"));
    config.init.kind = parse_init_kind(get("init"));
  } catch (const ParameterError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  config.skip_connections = get("skip") == "1";
  config.init.rho_star = parse_double(get("rho_star"));
  config.init.var_star = parse_double(get("var_star"));
  config.init.beta = parse_double(get("beta"));
  return config;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw FormatError("cannot format value");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

void save_checkpoint(const Network& net, std::ostream& out) {
  const NetworkConfig& c = net.config();
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "config widths=" << join_widths(c.layer_widths) << " alpha=" << format_double(c.alpha)
      << " variant=" << to_string(c.variant) << " skip=" << (c.skip_connections ? 1 : 0)
      << " init=" << to_string(c.init.kind) << " rho_star=" << format_double(c.init.rho_star)
      << " var_star=" << format_double(c.init.var_star)
      << " beta=" << format_double(c.init.beta) << '\n';
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Layer& layer = net.layer(l);
    const std::string prefix = "layer" + std::to_string(l);
    write_tensor(out, prefix + ".weight", layer.weight.rows(), layer.weight.cols(),
                 layer.weight.values());
    write_tensor(out, prefix + ".bias", 1, layer.bias.size(), layer.bias);
    if (layer.skip) {
      write_tensor(out, prefix + ".skip", layer.skip->rows(), layer.skip->cols(),
                   layer.skip->values());
    }
  }
}

std::string checkpoint_string(const Network& net) {
  std::ostringstream ss;
  save_checkpoint(net, ss);
  return ss.str();
}

Network load_checkpoint(std::istream& in) {
  const auto magic = split_ws(next_line(in, "header"));
  if (magic.size() != 2 || magic[0] != kCheckpointMagic) {
    throw FormatError("not an ICNN checkpoint (missing 'ICNN-CKPT' header)");
  }
  if (magic[1] != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version '" + magic[1] + "'");
  }
  NetworkConfig config = parse_config_line(next_line(in, "config"));
  try {
    config.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }

  std::vector<Layer> layers;
  for (std::size_t l = 0; l < config.num_layers(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    const std::size_t in_w = config.layer_widths[l];
    const std::size_t out_w = config.layer_widths[l + 1];
    Layer layer;
    layer.constrained = is_icnn(config.variant) && l > 0;
    layer.weight = Matrix(out_w, in_w, read_tensor(in, prefix + ".weight", out_w, in_w));
    layer.bias = read_tensor(in, prefix + ".bias", 1, out_w);
    if (config.skip_connections && l > 0) {
      layer.skip = Matrix(out_w, config.input_width(),
                          read_tensor(in, prefix + ".skip", out_w, config.input_width()));
    }
    layers.push_back(std::move(layer));
  }
  return Network(std::move(config), std::move(layers));
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  return load_checkpoint(in);
}

}  // namespace convexinit
