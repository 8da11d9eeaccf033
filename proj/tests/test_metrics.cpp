#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lvl/errors.hpp"
#include "lvl/log.hpp"
#include "lvl/metrics.hpp"
#include "lvl/rng.hpp"

namespace lvl::metrics {
namespace {

using codec::WaypointList;

WaypointList straight(double step = 2.0, double y = 0.0) {
  WaypointList w;
  for (int k = 0; k < kSteps; ++k) w.points[k] = Vec2(step * (k + 1), y);
  return w;
}

Polyline2D x_axis_lane() {
  Polyline2D l;
  l.frame = FrameTag::kEgo;
  l.points = {{-10, 0}, {100, 0}};
  return l;
}

PlanningSample sample(const WaypointList& pred, const WaypointList& gt) {
  PlanningSample s;
  s.id = "s";
  s.pred = pred;
  s.gt = gt;
  s.lanes = {x_axis_lane()};
  return s;
}

WaypointList shifted(WaypointList w, const Vec2& d) {
  for (auto& p : w.points) p += d;
  return w;
}

TEST(L2, PredEqualsGt) {
  const std::vector<PlanningSample> v = {sample(straight(), straight())};
  const auto h = l2_displacement(v);
  for (double x : h.per_step) EXPECT_EQ(x, 0.0);
}

TEST(L2, UnitOffset) {
  const std::vector<PlanningSample> v = {sample(shifted(straight(), {0, 1}), straight())};
  const auto h = l2_displacement(v);
  EXPECT_DOUBLE_EQ(h.at_1s(), 1.0);
  EXPECT_DOUBLE_EQ(h.at_2s(), 1.0);
  EXPECT_DOUBLE_EQ(h.at_3s(), 1.0);
  EXPECT_DOUBLE_EQ(h.avg(), 1.0);
}

TEST(L2, ArithmeticMean) {
  WaypointList a = straight(), b = straight();
  a.points[1] += Vec2(0, 1.0);
  b.points[1] += Vec2(3.0, 0);
  const std::vector<PlanningSample> v = {sample(a, straight()), sample(b, straight())};
  EXPECT_DOUBLE_EQ(l2_displacement(v).at_1s(), 2.0);
}

TEST(L2, HorizonsUseWaypoints246) {
  WaypointList p = straight();
  for (int k = 0; k < kSteps; ++k) p.points[k] += Vec2(0, k + 1);
  const std::vector<PlanningSample> v = {sample(p, straight())};
  const auto h = l2_displacement(v);
  EXPECT_DOUBLE_EQ(h.at_1s(), 2.0);
  EXPECT_DOUBLE_EQ(h.at_2s(), 4.0);
  EXPECT_DOUBLE_EQ(h.at_3s(), 6.0);
  EXPECT_DOUBLE_EQ(h.avg(), 3.5);
}

TEST(L2, UnparseableExcludedAndTallied) {
  PlanningSample bad = sample(straight(), straight());
  bad.pred.reset();
  const std::vector<PlanningSample> v = {sample(shifted(straight(), {0, 1}), straight()), bad};
  std::size_t excluded = 0;
  EXPECT_DOUBLE_EQ(l2_displacement(v, &excluded).avg(), 1.0);
  EXPECT_EQ(excluded, 1u);
  const auto m = evaluate_planning(v);
  EXPECT_EQ(m.unparseable, 1u);
  for (int k = 0; k < kSteps; ++k) {
    EXPECT_DOUBLE_EQ(m.collision_rate.per_step[k], 50.0);
    EXPECT_DOUBLE_EQ(m.intersection_rate.per_step[k], 50.0);
  }
}

TEST(L2, AllUnparseableIsNaN) {
  PlanningSample bad = sample(straight(), straight());
  bad.pred.reset();
  const std::vector<PlanningSample> v = {bad};
  EXPECT_TRUE(std::isnan(evaluate_planning(v).l2.avg()));
}

TEST(Collision, NoAgents) {
  const std::vector<PlanningSample> v = {sample(straight(), straight())};
  for (double x : collision_rate(v).per_step) EXPECT_EQ(x, 0.0);
}

TEST(Collision, FirstOverlapAtStepThreePropagates) {
  PlanningSample s = sample(straight(), straight());
  for (int k = 0; k < kSteps; ++k) s.agents_per_step[k].push_back({0, 30, 4, 2, 0});
  s.agents_per_step[2] = {BevBox{6, 0.5, 4, 2, 0.3}};
  const auto f = collision_flags(s);
  EXPECT_EQ(f, (std::array<bool, kSteps>{false, false, true, true, true, true}));
  const std::vector<PlanningSample> v = {s};
  const auto r = collision_rate(v);
  EXPECT_EQ(r.per_step[1], 0.0);
  EXPECT_EQ(r.per_step[2], 100.0);
  EXPECT_DOUBLE_EQ(r.avg(), 400.0 / 6.0);
}

TEST(Collision, FootprintUsesTrajectoryHeading) {
  // Turning left: ego at step 1 faces +y, so a box beside it along x misses.
  WaypointList w;
  for (int k = 0; k < kSteps; ++k) w.points[k] = Vec2(0, 3.0 * (k + 1));
  PlanningSample s = sample(w, w);
  s.agents_per_step[0] = {BevBox{2.2, 3.0, 1, 1, 0}};
  EXPECT_FALSE(collision_flags(s)[0]);
  s.agents_per_step[0] = {BevBox{0, 5.3, 1, 1, 0}};
  EXPECT_TRUE(collision_flags(s)[0]);
}

TEST(Headings, ZeroDisplacementKeepsPrevious) {
  WaypointList w;
  w.points = {Vec2(0, 1), Vec2(0, 1), Vec2(1, 1), Vec2(1, 1), Vec2(1, 0), Vec2(1, 0)};
  const auto h = waypoint_headings(w);
  EXPECT_DOUBLE_EQ(h[0], M_PI / 2);
  EXPECT_DOUBLE_EQ(h[1], M_PI / 2);
  EXPECT_DOUBLE_EQ(h[2], 0.0);
  EXPECT_DOUBLE_EQ(h[3], 0.0);
  EXPECT_DOUBLE_EQ(h[4], -M_PI / 2);
  EXPECT_DOUBLE_EQ(h[5], -M_PI / 2);
}

TEST(Intersection, AlongCenterline) {
  const std::vector<PlanningSample> v = {sample(straight(), straight())};
  for (double x : intersection_rate(v).per_step) EXPECT_EQ(x, 0.0);
}

TEST(Intersection, ThreeMetersOffFlagsFromThatStep) {
  WaypointList p = straight();
  p.points[3].y() = 3.0;  // back on the lane afterwards; the flag stays
  const PlanningSample s = sample(p, straight());
  EXPECT_EQ(intersection_flags(s, kDefaultDrivableMargin),
            (std::array<bool, kSteps>{false, false, false, true, true, true}));
}

TEST(Intersection, EmptyLaneSetIsAllOffRoad) {
  PlanningSample s = sample(straight(), straight());
  s.lanes.clear();
  const std::vector<PlanningSample> v = {s};
  for (double x : intersection_rate(v).per_step) EXPECT_EQ(x, 100.0);
}

TEST(Flags, MonotoneOnRandomSamples) {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    WaypointList p;
    for (int k = 0; k < kSteps; ++k) p.points[k] = Vec2(rng.uniform(-5, 20), rng.uniform(-4, 4));
    PlanningSample s = sample(p, straight());
    for (int k = 0; k < kSteps; ++k) {
      for (int a = 0; a < 3; ++a) {
        s.agents_per_step[k].push_back(
            {rng.uniform(-5, 20), rng.uniform(-5, 5), rng.uniform(0.5, 5), rng.uniform(0.5, 2), rng.uniform(-3, 3)});
      }
    }
    const auto c = collision_flags(s);
    const auto r = intersection_flags(s, 1.75);
    for (int k = 1; k < kSteps; ++k) {
      EXPECT_LE(c[k - 1], c[k]);
      EXPECT_LE(r[k - 1], r[k]);
    }
  }
}

TEST(Planning, AvgIsMeanOfPerStepMeans) {
  Rng rng(5);
  std::vector<PlanningSample> v;
  for (int i = 0; i < 50; ++i) {
    WaypointList p;
    for (int k = 0; k < kSteps; ++k) p.points[k] = Vec2(rng.uniform(0, 20), rng.uniform(-3, 3));
    v.push_back(sample(p, straight()));
  }
  const auto m = evaluate_planning(v);
  double sum = 0.0;
  for (int k = 0; k < kSteps; ++k) {
    double col = 0.0;
    for (const auto& s : v) col += (s.pred->points[k] - s.gt.points[k]).norm();
    EXPECT_NEAR(m.l2.per_step[k], col / 50.0, 1e-12);
    sum += col / 50.0;
  }
  EXPECT_NEAR(m.l2.avg(), sum / kSteps, 1e-12);
}

TEST(Planning, RejectsEmptyAndDegenerate) {
  EXPECT_THROW(evaluate_planning({}), DomainError);
  PlanningSample s = sample(straight(), straight());
  s.ego_length = 0;
  const std::vector<PlanningSample> v = {s};
  EXPECT_THROW(evaluate_planning(v), DomainError);
}

TEST(Planning, SamplesFromSceneFollowTheEgo) {
  SceneSpec spec;
  spec.seed = 4;
  const Scene scene = generate_scene(spec);
  const auto samples = planning_samples_from_scene(scene);
  ASSERT_EQ(samples.size(), scene.frames.size() - kSteps);
  // oracle predictions never collide and never leave the road
  std::vector<PlanningSample> v = samples;
  for (auto& s : v) s.pred = s.gt;
  const auto m = evaluate_planning(v);
  EXPECT_EQ(m.l2.avg(), 0.0);
  EXPECT_EQ(m.collision_rate.avg(), 0.0);
  EXPECT_EQ(m.intersection_rate.avg(), 0.0);
  SceneSpec odd = spec;
  odd.timestep = 0.3;
  EXPECT_THROW(planning_samples_from_scene(generate_scene(odd)), DomainError);
}

// ---- grounding ----

GroundingSample gsample(const std::string& text, double distance) {
  return {"g", text, BevBox{10, 2, 4, 2, 0.5}, distance};
}

std::string exact_text() {
  Box3D b;
  b.center = Vec3(10, 2, 0);
  b.length = 4;
  b.width = 2;
  b.height = 1.5;
  b.yaw = 0.5;
  return codec::format_object_answer(b, "car", "CAM_FRONT");
}

TEST(Grounding, ExactPredictions) {
  std::vector<GroundingSample> v;
  for (double d : {3.0, 20.0, 35.0, 70.0}) v.push_back(gsample(exact_text(), d));
  // yaw 0.5 rad prints as 28.6 degrees: IoU is just below 1
  const auto m = grounding_miou(v);
  EXPECT_GT(m.miou, 0.99);
  std::vector<GroundingSample> w = v;
  for (auto& s : w) s.gt = codec::parse_object_answer(s.predicted_text)->to_bev();
  EXPECT_EQ(grounding_miou(w).miou, 1.0);
}

TEST(Grounding, AllUnparseableIsZero) {
  std::vector<GroundingSample> v;
  for (double d : {3.0, 20.0, 35.0, 70.0}) v.push_back(gsample("", d));
  const auto m = grounding_miou(v);
  EXPECT_EQ(m.miou, 0.0);
  EXPECT_EQ(m.parse_failures, 4u);
}

TEST(Grounding, BinMeansToMiou) {
  // bin b holds b+1 exact hits out of five: means 0.2, 0.4, 0.6, 0.8
  std::vector<GroundingSample> v;
  const double dist[4] = {5, 20, 40, 60};
  for (int b = 0; b < 4; ++b) {
    for (int i = 0; i < 5; ++i) {
      GroundingSample s = gsample(i <= b ? exact_text() : "unknown", dist[b]);
      s.gt = codec::parse_object_answer(exact_text())->to_bev();
      v.push_back(s);
    }
  }
  const auto m = grounding_miou(v);
  EXPECT_NEAR(*m.bin_iou[0], 0.2, 1e-15);
  EXPECT_NEAR(*m.bin_iou[3], 0.8, 1e-15);
  EXPECT_NEAR(m.miou, 0.5, 1e-15);
  // order invariance
  std::mt19937 g(1);
  std::shuffle(v.begin(), v.end(), g);
  EXPECT_EQ(grounding_miou(v).miou, m.miou);
}

TEST(Grounding, EmptyBinExcludedWithWarning) {
  std::vector<GroundingSample> v = {gsample("", 3.0), gsample(exact_text(), 20.0)};
  v[1].gt = codec::parse_object_answer(exact_text())->to_bev();
  const long before = log::warning_count();
  const auto m = grounding_miou(v);
  EXPECT_EQ(log::warning_count() - before, 2);
  EXPECT_FALSE(m.bin_iou[2].has_value());
  EXPECT_DOUBLE_EQ(m.miou, 0.5);
}

TEST(Grounding, DistanceBins) {
  EXPECT_EQ(distance_bin(0.0), 0u);
  EXPECT_EQ(distance_bin(14.999), 0u);
  EXPECT_EQ(distance_bin(15.0), 1u);
  EXPECT_EQ(distance_bin(44.9), 2u);
  EXPECT_EQ(distance_bin(45.0), 3u);
  EXPECT_EQ(distance_bin(1e6), 3u);
  EXPECT_STREQ(distance_bin_label(3), "45m-inf");
}

TEST(Grounding, RejectsBadInput) {
  EXPECT_THROW(grounding_miou({}), DomainError);
  const std::vector<GroundingSample> v = {gsample("", -1.0)};
  EXPECT_THROW(grounding_miou(v), DomainError);
}

// ---- report ----

TEST(Report, JsonAndTable) {
  MetricsReport r;
  PlanningSample bad = sample(straight(), straight());
  bad.pred.reset();
  const std::vector<PlanningSample> pv = {bad};
  r.planning = evaluate_planning(pv);
  const std::vector<GroundingSample> gv = {gsample("", 3.0)};
  r.grounding = grounding_miou(gv);
  r.text = TextMetrics{1.0, 1.0, 7.5, 1};
  const auto j = report_to_json(r);
  EXPECT_TRUE(j["planning"]["l2_m"]["avg"].is_null());
  EXPECT_EQ(j["planning"]["collision_pct"]["3s"], 100.0);
  EXPECT_TRUE(j["grounding"]["bins"]["15-30m"]["iou"].is_null());
  EXPECT_EQ(j["grounding"]["bins"]["0-15m"]["count"], 1);
  EXPECT_EQ(j["text"]["cider"], 7.5);
  const std::string t = report_to_table(r);
  EXPECT_NE(t.find("n/a"), std::string::npos);
  EXPECT_NE(t.find("BLEU-4"), std::string::npos);
  EXPECT_NE(t.find("mIoU"), std::string::npos);
  EXPECT_EQ(report_to_json(r).dump(), j.dump());
}

}  // namespace
}  // namespace lvl::metrics
