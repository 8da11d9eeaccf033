#include "lvl/fusion/checkpoint.hpp"

#include "lvl/json_util.hpp"

namespace lvl::fusion {
namespace {

using jsonu::ordered_json;
using nlohmann::json;

ordered_json array_json(const Tensor2D& t) {
  ordered_json j;
  j["rows"] = t.rows();
  j["cols"] = t.cols();
  j["data"] = std::vector<double>(t.data(), t.data() + t.size());
  return j;
}

void read_array(const json& arrays, const std::string& name, Tensor2D& t, const std::string& src) {
  const std::string path = "arrays." + name;
  const json& a = jsonu::require(arrays, name, "arrays", src);
  const auto rows = jsonu::get_int(a, "rows", path, src);
  const auto cols = jsonu::get_int(a, "cols", path, src);
  if (rows != t.rows() || cols != t.cols()) {
    throw ParseError(src, path + ": shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                              " does not match the configuration");
  }
  const json& data = jsonu::get_array(a, "data", path, src, static_cast<std::size_t>(t.size()));
  for (Index i = 0; i < t.size(); ++i) {
    const json& v = data[static_cast<std::size_t>(i)];
    if (!v.is_number()) throw ParseError(src, path + ".data[" + std::to_string(i) + "] is not a number");
    t.data()[i] = v.get<double>();
  }
}

}  // namespace

std::string checkpoint_to_string(const ModelParams& p) {
  const auto& c = p.config;
  ordered_json j;
  j["schema_version"] = kCheckpointSchema;
  ordered_json cfg;
  cfg["channels"] = c.channels;
  cfg["heads"] = c.heads;
  cfg["blocks"] = c.blocks;
  cfg["n_carrier"] = c.n_carrier;
  cfg["n_instance"] = c.n_instance;
  cfg["seed"] = c.seed;
  ordered_json pe;
  pe["bands"] = c.pe.bands;
  pe["temperature"] = c.pe.temperature;
  pe["extent"] = c.pe.extent;
  pe["depth_bins"] = c.pe.depth_bins;
  pe["depth_min"] = c.pe.depth_min;
  pe["depth_max"] = c.pe.depth_max;
  cfg["pe"] = std::move(pe);
  j["config"] = std::move(cfg);
  ordered_json arrays;
  arrays["tokens.reference_points"] = array_json(p.tokens.reference_points);
  for (const auto& [name, t] : p.parameters()) arrays[name] = array_json(*t);
  j["arrays"] = std::move(arrays);
  return j.dump(1) + "\n";
}

ModelParams checkpoint_from_string(const std::string& text, const std::string& src) {
  const json doc = jsonu::parse_document(text, src);
  if (!doc.is_object()) throw ParseError(src, "checkpoint must be a JSON object");
  const std::string version = jsonu::get_string(doc, "schema_version", "", src);
  if (version != kCheckpointSchema) {
    throw VersionError(src + ": unsupported checkpoint schema '" + version + "' (expected '" +
                       kCheckpointSchema + "')");
  }
  const json& cfg = jsonu::require(doc, "config", "", src);
  ModelConfig c;
  c.channels = static_cast<int>(jsonu::get_int(cfg, "channels", "config", src));
  c.heads = static_cast<int>(jsonu::get_int(cfg, "heads", "config", src));
  c.blocks = static_cast<int>(jsonu::get_int(cfg, "blocks", "config", src));
  c.n_carrier = static_cast<int>(jsonu::get_int(cfg, "n_carrier", "config", src));
  c.n_instance = static_cast<int>(jsonu::get_int(cfg, "n_instance", "config", src));
  c.seed = static_cast<std::uint64_t>(jsonu::get_int(cfg, "seed", "config", src));
  const json& pe = jsonu::require(cfg, "pe", "config", src);
  c.pe.bands = static_cast<int>(jsonu::get_int(pe, "bands", "config.pe", src));
  c.pe.temperature = jsonu::get_number(pe, "temperature", "config.pe", src);
  c.pe.extent = jsonu::get_number(pe, "extent", "config.pe", src);
  c.pe.depth_bins = static_cast<int>(jsonu::get_int(pe, "depth_bins", "config.pe", src));
  c.pe.depth_min = jsonu::get_number(pe, "depth_min", "config.pe", src);
  c.pe.depth_max = jsonu::get_number(pe, "depth_max", "config.pe", src);

  ModelParams p = ModelParams::init(c);
  const json& arrays = jsonu::require(doc, "arrays", "", src);
  read_array(arrays, "tokens.reference_points", p.tokens.reference_points, src);
  for (auto& [name, t] : p.parameters()) read_array(arrays, name, *t, src);
  p.tokens.validate(c.channels, c.pe);
  return p;
}

}  // namespace lvl::fusion
