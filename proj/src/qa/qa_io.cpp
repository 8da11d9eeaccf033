#include <sstream>

#include "lvl/json_util.hpp"
#include "lvl/qa.hpp"

namespace lvl::qa {

using nlohmann::json;
using nlohmann::ordered_json;

GenConfig config_from_string(const std::string& text, const std::string& src) {
  const json doc = jsonu::parse_document(text, src);
  if (!doc.is_object()) throw ParseError(src, "qa config must be a JSON object");
  GenConfig cfg;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ParseError(src, "field 'seed' must be a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("counts")) {
    const auto& counts = doc["counts"];
    if (!counts.is_object()) throw ParseError(src, "field 'counts' must be an object");
    for (const auto& [name, value] : counts.items()) {
      Task t;
      try {
        t = task_from_name(name);
      } catch (const ParseError&) {
        throw ParseError(src, "field 'counts." + name + "': unknown task");
      }
      cfg.count(t) = static_cast<int>(jsonu::get_int(counts, name, "counts", src));
    }
  }
  if (doc.contains("sp01_region")) {
    const auto& r = doc["sp01_region"];
    cfg.sp01_x_min = jsonu::get_number(r, "x_min", "sp01_region", src);
    cfg.sp01_x_max = jsonu::get_number(r, "x_max", "sp01_region", src);
    cfg.sp01_y_min = jsonu::get_number(r, "y_min", "sp01_region", src);
    cfg.sp01_y_max = jsonu::get_number(r, "y_max", "sp01_region", src);
  }
  if (doc.contains("drivable_margin")) cfg.drivable_margin = jsonu::get_number(doc, "drivable_margin", "", src);
  if (doc.contains("visibility")) {
    const auto& v = doc["visibility"];
    cfg.visibility.min_visible_fraction = jsonu::get_number(v, "min_visible_fraction", "visibility", src);
    cfg.visibility.min_area = jsonu::get_number(v, "min_area", "visibility", src);
    cfg.visibility.min_side = jsonu::get_number(v, "min_side", "visibility", src);
  }
  if (doc.contains("sr04_intervals")) {
    cfg.sr04_intervals.clear();
    for (const auto& t : jsonu::get_array(doc, "sr04_intervals", "", src)) {
      if (!t.is_number()) throw ParseError(src, "field 'sr04_intervals' must contain numbers");
      cfg.sr04_intervals.push_back(t.get<double>());
    }
  }
  if (doc.contains("max_attempts")) cfg.max_attempts = static_cast<int>(jsonu::get_int(doc, "max_attempts", "", src));
  if (doc.contains("grounding_benchmark")) {
    if (!doc["grounding_benchmark"].is_boolean()) throw ParseError(src, "field 'grounding_benchmark' must be a boolean");
    cfg.grounding_benchmark = doc["grounding_benchmark"].get<bool>();
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ParseError(src, e.what());
  }
  return cfg;
}

std::string config_to_string(const GenConfig& cfg) {
  ordered_json o;
  o["seed"] = cfg.seed;
  ordered_json counts;
  for (Task t : kAllTasks) counts[task_name(t)] = cfg.count(t);
  o["counts"] = counts;
  o["sp01_region"] = {{"x_min", cfg.sp01_x_min}, {"x_max", cfg.sp01_x_max},
                      {"y_min", cfg.sp01_y_min}, {"y_max", cfg.sp01_y_max}};
  o["drivable_margin"] = cfg.drivable_margin;
  o["visibility"] = {{"min_visible_fraction", cfg.visibility.min_visible_fraction},
                     {"min_area", cfg.visibility.min_area},
                     {"min_side", cfg.visibility.min_side}};
  o["sr04_intervals"] = cfg.sr04_intervals;
  o["max_attempts"] = cfg.max_attempts;
  o["grounding_benchmark"] = cfg.grounding_benchmark;
  return o.dump(2) + "\n";
}

ordered_json record_to_json(const QARecord& r) {
  ordered_json o;
  o["id"] = r.id;
  o["scene_id"] = r.scene_id;
  o["frame_index"] = r.frame_index;
  o["task"] = task_name(r.task);
  o["question"] = r.question;
  o["answer"] = r.answer;
  ordered_json ops = ordered_json::array();
  for (const auto& op : r.overlays) {
    ordered_json j;
    if (op.kind == OverlayOp::Kind::kArrow) {
      j["kind"] = "arrow";
      j["camera"] = op.camera;
      j["tail"] = {op.tail.x(), op.tail.y()};
      j["head"] = {op.head.x(), op.head.y()};
    } else {
      j["kind"] = "mask";
      j["camera"] = op.camera;
      j["rect"] = {op.rect.x_min, op.rect.y_min, op.rect.x_max, op.rect.y_max};
    }
    ops.push_back(std::move(j));
  }
  o["overlays"] = std::move(ops);
  o["meta"] = r.meta;
  return o;
}

std::string to_jsonl(const std::vector<QARecord>& records, const std::string& header) {
  std::string out = "# " + header + "\n";
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  return out;
}

std::vector<QARecord> from_jsonl(const std::string& text, const std::string& src) {
  std::vector<QARecord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = src + ":" + std::to_string(lineno);
    const ordered_json j = [&] {
      try {
        return ordered_json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        throw ParseError(where, "malformed JSON line");
      }
    }();
    QARecord r;
    const json plain = json::parse(line);
    if (!plain.is_object()) throw ParseError(where, "record must be a JSON object");
    r.id = jsonu::get_string(plain, "id", "", where);
    r.scene_id = jsonu::get_string(plain, "scene_id", "", where);
    r.frame_index = static_cast<std::size_t>(jsonu::get_int(plain, "frame_index", "", where));
    try {
      r.task = task_from_name(jsonu::get_string(plain, "task", "", where));
    } catch (const ParseError& e) {
      throw ParseError(where, e.what());
    }
    r.question = jsonu::get_string(plain, "question", "", where);
    r.answer = jsonu::get_string(plain, "answer", "", where);
    const auto& ops = jsonu::get_array(plain, "overlays", "", where);
    for (const auto& op : ops) {
      const std::string kind = jsonu::get_string(op, "kind", "overlays", where);
      const std::string cam = jsonu::get_string(op, "camera", "overlays", where);
      if (kind == "arrow") {
        const auto& t = jsonu::get_array(op, "tail", "overlays", where, 2);
        const auto& h = jsonu::get_array(op, "head", "overlays", where, 2);
        r.overlays.push_back(OverlayOp::arrow(cam, Vec2(t[0].get<double>(), t[1].get<double>()),
                                              Vec2(h[0].get<double>(), h[1].get<double>())));
      } else if (kind == "mask") {
        const auto& a = jsonu::get_array(op, "rect", "overlays", where, 4);
        r.overlays.push_back(OverlayOp::mask(
            cam, Rect2D{a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>()}));
      } else {
        throw ParseError(where, "unknown overlay kind '" + kind + "'");
      }
    }
    if (!j.is_object() || !j.contains("meta")) throw ParseError(where, "missing field 'meta'");
    r.meta = j.at("meta");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lvl::qa
