#pragma once

#include <array>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lvl/geometry.hpp"

namespace lvl::codec {

// One decimal digit, half away from zero, locale independent. Never "-0.0".
std::string format_tenths(double value);
// The value format_tenths prints, as a double.
double round_tenths(double value);
// Yaw in radians -> degrees in (-180, 180], rounded to 0.1.
std::string format_yaw_degrees(double yaw_radians);

// Parse failures are values: evaluation scores them as zero-IoU samples.
struct ParseFailure {
  enum class Kind { kMissingFields, kInvalidField, kCount, kToken, kSyntax, kNotFound };
  Kind kind = Kind::kNotFound;
  std::vector<std::string> missing;  // for kMissingFields
  std::string detail;

  std::string message() const;
};

template <typename T>
class Parsed {
 public:
  Parsed(T value) : v_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Parsed(ParseFailure failure) : v_(std::move(failure)) {}  // NOLINT

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }
  const T& value() const { return std::get<T>(v_); }
  const T& operator*() const { return value(); }
  const T* operator->() const { return &value(); }
  const ParseFailure& failure() const { return std::get<ParseFailure>(v_); }

 private:
  std::variant<T, ParseFailure> v_;
};

struct ParsedObject {
  std::string category;
  std::string camera;  // empty when the answer has no "in the <CAM>" clause
  double x = 0.0;
  double y = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double yaw_deg = 0.0;

  BevBox to_bev() const;
};

// "The object is a <category> in the <CAM>, location: (x, y), length: l,
// width: w, height: h, angles in degree: yaw." An empty camera drops the
// "in the <CAM>" clause (lane listing form).
std::string format_object_answer(const Box3D& box, const std::string& category,
                                 const std::string& camera);

// Case-insensitive, whitespace tolerant, "degree"/"degrees", optional
// trailing period, surrounding text ignored. Missing category, location,
// length, width, height or yaw yields kMissingFields listing them.
Parsed<ParsedObject> parse_object_answer(std::string_view text);

// Every "The object is ..." description in a multi-object answer.
std::vector<Parsed<ParsedObject>> parse_object_list(std::string_view text);

struct WaypointList {
  std::array<Vec2, 6> points{};
};

// "[(x1, y1), (x2, y2), ..., (x6, y6)]" with one decimal digit.
std::string format_waypoints(const WaypointList& waypoints);
Parsed<WaypointList> parse_waypoints(std::string_view text);

std::string format_scalar_answer(double value);        // "5.0."
std::string format_coordinate_answer(const Vec2& p);   // "(3.4, -1.2)."
Parsed<double> parse_scalar(std::string_view text);
Parsed<Vec2> parse_coordinate(std::string_view text);

}  // namespace lvl::codec
