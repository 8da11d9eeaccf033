#include "lvl/answer_codec.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <regex>
#include <unordered_map>

namespace lvl::codec {
namespace {

constexpr const char* kNum = R"([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)";

bool to_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

const std::regex& re(const std::string& pattern) {
  // Patterns are fixed per call site; node-based map keeps references stable.
  thread_local std::unordered_map<std::string, std::regex> cache;
  auto it = cache.find(pattern);
  if (it == cache.end()) {
    it = cache.emplace(pattern, std::regex(pattern, std::regex::ECMAScript | std::regex::icase)).first;
  }
  return it->second;
}

std::optional<double> find_number_after(const std::string& text, const std::string& keyword) {
  std::smatch m;
  if (!std::regex_search(text, m, re(keyword + R"(\s*:?\s*()" + kNum + ")"))) return std::nullopt;
  double v = 0.0;
  if (!to_double(m[1].str(), v)) return std::nullopt;
  return v;
}

Parsed<ParsedObject> parse_one_object(const std::string& text) {
  ParsedObject obj;
  std::vector<std::string> missing;
  std::smatch m;

  std::size_t after_category = 0;
  if (std::regex_search(text, m,
                        re(R"(object\s+is\s+an?\s+([A-Za-z][\w\-\. ]*?)\s*(?:\s+in\s+the\s+|,))"))) {
    obj.category = m[1].str();
    for (auto& ch : obj.category) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    after_category = static_cast<std::size_t>(m.position(1) + m.length(1));
  } else {
    missing.push_back("category");
  }
  {
    const std::string rest = text.substr(after_category);
    std::smatch cm;
    if (after_category > 0 &&
        std::regex_search(rest, cm, re(R"(^\s*in\s+the\s+([A-Za-z0-9_]+)\s*,)"))) {
      obj.camera = cm[1].str();
      for (auto& ch : obj.camera) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
  }
  if (std::regex_search(text, m,
                        re(std::string(R"(location\s*:?\s*\(\s*()") + kNum + R"()\s*,\s*()" +
                           kNum + R"()\s*\))"))) {
    if (!to_double(m[1].str(), obj.x) || !to_double(m[2].str(), obj.y)) missing.push_back("location");
  } else {
    missing.push_back("location");
  }
  const struct {
    const char* name;
    const char* pattern;
    double* slot;
  } fields[] = {{"length", R"(\blength)", &obj.length},
                {"width", R"(\bwidth)", &obj.width},
                {"height", R"(\bheight)", &obj.height},
                {"yaw", R"(\bangles?\s+in\s+degrees?)", &obj.yaw_deg}};
  for (const auto& f : fields) {
    if (auto v = find_number_after(text, f.pattern)) {
      *f.slot = *v;
    } else {
      missing.push_back(f.name);
    }
  }
  if (!missing.empty()) {
    ParseFailure failure{ParseFailure::Kind::kMissingFields, missing, {}};
    return failure;
  }
  if (!(obj.length > 0.0 && obj.width > 0.0 && obj.height > 0.0)) {
    return ParseFailure{ParseFailure::Kind::kInvalidField, {}, "non-positive box dimension"};
  }
  return obj;
}

// Minimal cursor for the bracketed waypoint grammar.
class Cursor {
 public:
  explicit Cursor(std::string_view s, std::size_t pos) : s_(s), pos_(pos) {}
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  std::string_view token() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           std::string_view(",()[]").find(s_[pos_]) == std::string_view::npos) {
      ++pos_;
    }
    return s_.substr(start, pos_ - start);
  }
  bool at_end() const { return pos_ >= s_.size(); }

 private:
  std::string_view s_;
  std::size_t pos_;
};

}  // namespace

std::string format_tenths(double value) {
  const long long tenths = std::llround(value * 10.0);
  const unsigned long long mag = static_cast<unsigned long long>(tenths < 0 ? -tenths : tenths);
  std::string out = tenths < 0 ? "-" : "";
  out += std::to_string(mag / 10);
  out += '.';
  out += static_cast<char>('0' + mag % 10);
  return out;
}

double round_tenths(double value) {
  return static_cast<double>(std::llround(value * 10.0)) / 10.0;
}

std::string format_yaw_degrees(double yaw_radians) {
  const double deg = normalize_angle(yaw_radians) * 180.0 / std::numbers::pi;
  long long tenths = std::llround(deg * 10.0);
  if (tenths <= -1800) tenths += 3600;
  return format_tenths(static_cast<double>(tenths) / 10.0);
}

std::string ParseFailure::message() const {
  switch (kind) {
    case Kind::kMissingFields: {
      std::string s = "missing fields:";
      for (const auto& m : missing) s += " " + m;
      return s;
    }
    case Kind::kInvalidField: return "invalid field: " + detail;
    case Kind::kCount: return "wrong waypoint count: " + detail;
    case Kind::kToken: return "non-numeric token '" + detail + "'";
    case Kind::kSyntax: return "syntax error: " + detail;
    case Kind::kNotFound: return "no value found";
  }
  return "parse failure";
}

BevBox ParsedObject::to_bev() const {
  return {x, y, length, width, yaw_deg * std::numbers::pi / 180.0};
}

std::string format_object_answer(const Box3D& box, const std::string& category,
                                 const std::string& camera) {
  std::string s = "The object is a " + category;
  if (!camera.empty()) s += " in the " + camera;
  s += ", location: (" + format_tenths(box.center.x()) + ", " + format_tenths(box.center.y()) +
       "), length: " + format_tenths(box.length) + ", width: " + format_tenths(box.width) +
       ", height: " + format_tenths(box.height) +
       ", angles in degree: " + format_yaw_degrees(box.yaw) + ".";
  return s;
}

Parsed<ParsedObject> parse_object_answer(std::string_view text) {
  return parse_one_object(std::string(text));
}

std::vector<Parsed<ParsedObject>> parse_object_list(std::string_view text) {
  const std::string s(text);
  std::vector<std::size_t> starts;
  const std::regex& marker = re(R"(\bthe\s+object\s+is\b)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator();
       ++it) {
    starts.push_back(static_cast<std::size_t>(it->position()));
  }
  std::vector<Parsed<ParsedObject>> out;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::size_t end = i + 1 < starts.size() ? starts[i + 1] : s.size();
    out.push_back(parse_one_object(s.substr(starts[i], end - starts[i])));
  }
  return out;
}

std::string format_waypoints(const WaypointList& w) {
  std::string s = "[";
  for (std::size_t i = 0; i < w.points.size(); ++i) {
    if (i > 0) s += ", ";
    s += "(" + format_tenths(w.points[i].x()) + ", " + format_tenths(w.points[i].y()) + ")";
  }
  return s + "]";
}

Parsed<WaypointList> parse_waypoints(std::string_view text) {
  const std::size_t open = text.find('[');
  if (open == std::string_view::npos) {
    return ParseFailure{ParseFailure::Kind::kSyntax, {}, "expected '['"};
  }
  Cursor cur(text, open + 1);
  std::vector<Vec2> pairs;
  if (!cur.peek(']')) {
    while (true) {
      if (!cur.eat('(')) return ParseFailure{ParseFailure::Kind::kSyntax, {}, "expected '('"};
      double xy[2];
      for (int k = 0; k < 2; ++k) {
        const auto tok = cur.token();
        if (tok.empty()) return ParseFailure{ParseFailure::Kind::kSyntax, {}, "expected a number"};
        if (!to_double(tok, xy[k])) {
          return ParseFailure{ParseFailure::Kind::kToken, {}, std::string(tok)};
        }
        if (k == 0 && !cur.eat(',')) return ParseFailure{ParseFailure::Kind::kSyntax, {}, "expected ','"};
      }
      if (!cur.eat(')')) return ParseFailure{ParseFailure::Kind::kSyntax, {}, "expected ')'"};
      pairs.emplace_back(xy[0], xy[1]);
      if (cur.eat(',')) continue;
      break;
    }
  }
  if (!cur.eat(']')) return ParseFailure{ParseFailure::Kind::kSyntax, {}, "expected ']'"};
  if (pairs.size() != 6) {
    return ParseFailure{ParseFailure::Kind::kCount, {}, std::to_string(pairs.size()) + " pairs"};
  }
  WaypointList out;
  std::copy(pairs.begin(), pairs.end(), out.points.begin());
  return out;
}

std::string format_scalar_answer(double value) { return format_tenths(value) + "."; }

std::string format_coordinate_answer(const Vec2& p) {
  return "(" + format_tenths(p.x()) + ", " + format_tenths(p.y()) + ").";
}

Parsed<double> parse_scalar(std::string_view text) {
  const std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, re(kNum))) return ParseFailure{};
  double v = 0.0;
  if (!to_double(m[0].str(), v)) return ParseFailure{};
  return v;
}

Parsed<Vec2> parse_coordinate(std::string_view text) {
  const std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, re(std::string(R"(\(\s*()") + kNum + R"()\s*,\s*()" + kNum +
                                  R"()\s*\))"))) {
    return ParseFailure{};
  }
  double x = 0.0, y = 0.0;
  if (!to_double(m[1].str(), x) || !to_double(m[2].str(), y)) return ParseFailure{};
  return Vec2(x, y);
}

}  // namespace lvl::codec
