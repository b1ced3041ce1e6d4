#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "pointbench/arm.hpp"
#include "pointbench/error.hpp"
#include "pointbench/mocap.hpp"
#include "pointbench/synth.hpp"

using namespace pointbench;

namespace {

const char* kArmBvh = R"(HIERARCHY
ROOT root
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT RightForeArm
  {
    OFFSET 0 -0.3 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    JOINT RightHand
    {
      OFFSET 0 -0.28 0
      CHANNELS 3 Zrotation Xrotation Yrotation
      End Site
      {
        OFFSET 0 -0.1 0
      }
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.0083333333
0 1 0 0 0 0  0 0 0  0 0 0
0.1 1 0 90 0 0  0 -90 0  0 0 0
)";

std::string two_joint_bvh(const std::string& channels, const std::string& row) {
  return "HIERARCHY\nROOT root\n{\n OFFSET 0 0 0\n CHANNELS 3 Xposition Yposition Zposition\n"
         " JOINT child\n {\n  OFFSET 0 -0.28 0\n  CHANNELS 2 " +
         channels + "\n  End Site\n  {\n   OFFSET 0 -0.1 0\n  }\n }\n}\nMOTION\nFrames: 2\nFrame Time: 0.01\n" +
         "0 0 0 0 0\n" + row + "\n";
}

bool near(const Vec3& a, const Vec3& b, double tol = 1e-9) { return distance(a, b) < tol; }

// Root-translated standard skeleton: every joint, including both hands, follows `path`.
Clip translated_clip(const std::vector<Vec3>& path, double fps) {
  Clip c;
  c.skeleton = standard_skeleton();
  c.fps = fps;
  for (const Vec3& p : path) c.frames.push_back(rest_pose(c.skeleton, standard_root() + p));
  return c;
}

}  // namespace

TEST_CASE("BVH fixture parses with known geometry") {
  const Clip c = parse_bvh(kArmBvh, 1.0, "fixture");
  CHECK(c.skeleton.size() == 3);
  CHECK(c.frame_count() == 2);
  CHECK(c.fps == doctest::Approx(120.0).epsilon(1e-6));
  CHECK(c.skeleton.joint(1).channels.size() == 3);
  CHECK(c.skeleton.joint(0).channels[3] == Channel::Zrotation);
  REQUIRE(c.skeleton.joint(2).end_site.has_value());
  CHECK(c.skeleton.arm(Side::Right) == ArmJoints{0, 1, 2});

  for (const Quat& q : c.frames[0].rotations) CHECK(q == Quat::identity());
  const auto p0 = c.positions(0);
  CHECK(near(p0[2], {0, 1 - 0.58, 0}));

  const auto p1 = c.positions(1);
  CHECK(near(p1[0], {0.1, 1, 0}));
  CHECK(near(p1[1], {0.4, 1, 0}));
  CHECK(near(p1[2], {0.4, 1, 0.28}));
}

TEST_CASE("BVH honours the declared Euler order") {
  const Clip xy = parse_bvh(two_joint_bvh("Xrotation Yrotation", "0 0 0 90 90"));
  const Clip yx = parse_bvh(two_joint_bvh("Yrotation Xrotation", "0 0 0 90 90"));
  const Vec3 end_xy = xy.frames[1].rotations[1].rotate({0, -0.28, 0});
  const Vec3 end_yx = yx.frames[1].rotations[1].rotate({0, -0.28, 0});
  CHECK(near(end_xy, {0, 0, -0.28}));
  CHECK(near(end_yx, {-0.28, 0, 0}));
}

TEST_CASE("BVH length scale converts units") {
  const Clip c = parse_bvh(two_joint_bvh("Xrotation Yrotation", "10 20 30 0 0"), 0.01);
  CHECK(near(c.frames[1].root, {0.1, 0.2, 0.3}));
  CHECK(near(c.skeleton.joint(1).offset, {0, -0.0028, 0}));
}

TEST_CASE("BVH errors") {
  SUBCASE("missing rows") {
    std::string text = kArmBvh;
    text.replace(text.find("Frames: 2"), 9, "Frames: 3");
    CHECK_THROWS_AS(parse_bvh(text), ParseError);
  }
  SUBCASE("ten frames declared, nine supplied") {
    std::string text = two_joint_bvh("Xrotation Yrotation", "0 0 0 0 0");
    text.replace(text.find("Frames: 2"), 9, "Frames: 10");
    for (int i = 0; i < 7; ++i) text += "0 0 0 0 0\n";
    try {
      parse_bvh(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() > 0);
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
  }
  SUBCASE("row arity") {
    CHECK_THROWS_AS(parse_bvh(two_joint_bvh("Xrotation Yrotation", "0 0 0 0")), ParseError);
  }
  SUBCASE("non-numeric motion data") {
    try {
      parse_bvh(two_joint_bvh("Xrotation Yrotation", "0 0 0 abc 0"));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 20);
    }
  }
  SUBCASE("unsupported channel") {
    CHECK_THROWS_AS(parse_bvh(two_joint_bvh("Xrotation Wrotation", "0 0 0 0 0")), UnsupportedChannel);
  }
  SUBCASE("unbalanced braces") {
    std::string text = kArmBvh;
    text.erase(text.rfind("}\nMOTION"), 1);
    CHECK_THROWS_AS(parse_bvh(text), ParseError);
    std::string extra = kArmBvh;
    extra.insert(extra.find("MOTION"), "}\n");
    CHECK_THROWS_AS(parse_bvh(extra), ParseError);
  }
  SUBCASE("all-zero rotations are identity") {
    const Clip c = parse_bvh(two_joint_bvh("Xrotation Yrotation", "0.5 0 0 0 0"));
    for (const auto& f : c.frames) {
      for (const auto& q : f.rotations) CHECK(q == Quat::identity());
    }
  }
}

TEST_CASE("clip JSON round trip and schema") {
  SynthParams p;
  p.target = {-0.5, 1.6, 0.7};
  p.noise_amplitude = 0.01;
  p.seed = 3;
  Clip c = generate_pointing_clip(standard_skeleton(), p);
  c.source = "roundtrip";
  const std::string text = write_clip_json(c);
  const Clip back = parse_clip_json(text);
  CHECK(back == c);
  CHECK(write_clip_json(back) == text);

  SUBCASE("missing fps") {
    auto doc = nlohmann::json::parse(text);
    doc.erase("fps");
    try {
      parse_clip_json(doc.dump());
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.field() == "fps");
    }
  }
  SUBCASE("millimetre units") {
    auto doc = nlohmann::json::parse(text);
    doc["units"] = "mm";
    doc["targets"][0]["position"] = {-500.0, 1600.0, 700.0};
    const Clip mm = parse_clip_json(doc.dump());
    CHECK(near(mm.targets[0].position, {-0.5, 1.6, 0.7}, 1e-12));
    CHECK(near(mm.skeleton.joint(4).offset, {0, -0.3e-3, 0}, 1e-15));
  }
  SUBCASE("bad frame") {
    auto doc = nlohmann::json::parse(text);
    doc["frames"][3]["rotations"].erase(0);
    CHECK_THROWS_AS(parse_clip_json(doc.dump()), SchemaError);
  }
}

TEST_CASE("sagittal displacement") {
  const int n = 50;
  std::vector<Vec3> still(n), lateral(n), raised(n);
  for (int i = 0; i < n; ++i) {
    lateral[static_cast<std::size_t>(i)] = {0.01 * i, 0, 0};
    raised[static_cast<std::size_t>(i)] = {0, 0.4 * i / (n - 1), 0};
  }
  for (double d : sagittal_displacement(translated_clip(still, 100), Side::Right)) CHECK(d == 0.0);
  for (double d : sagittal_displacement(translated_clip(lateral, 100), Side::Right)) CHECK(d == 0.0);
  CHECK(sagittal_displacement(translated_clip(raised, 100), Side::Right).back() == doctest::Approx(0.4));
}

TEST_CASE("kinematic statistics") {
  SUBCASE("constant speed") {
    const double fps = 100;
    std::vector<Vec3> path;
    for (int i = 0; i <= 100; ++i) {
      const int t = i < 10 ? 0 : i < 40 ? i - 10 : i < 70 ? 70 - i : 0;
      path.push_back({0, 0, t / fps});
    }
    Segment seg{"c", Side::Right, 10, 20, 40, 70, 40, 0};
    const auto s = kinematic_stats(translated_clip(path, fps), seg);
    CHECK(s.peak_velocity == doctest::Approx(1000.0));
    CHECK(s.mean_velocity == doctest::Approx(1000.0));
    CHECK(s.duration == doctest::Approx(0.6));
    CHECK(s.rise_time == doctest::Approx(0.3));
  }
  SUBCASE("minimum-jerk rise") {
    const double fps = 120, D = 0.6, T = 0.7;
    std::vector<Vec3> path;
    const int rise = static_cast<int>(std::ceil(T * fps));
    for (int i = 0; i <= rise + 20; ++i) path.push_back({0, D * min_jerk(i / (T * fps)), 0});
    Segment seg{"c", Side::Right, 0, rise / 2, rise, rise + 20, rise + 10, 0};
    const auto s = kinematic_stats(translated_clip(path, fps), seg);
    CHECK(std::abs(s.peak_velocity - 1.875 * D / T * 1000.0) / (1.875 * D / T * 1000.0) < 0.01);
    CHECK(s.mean_velocity <= s.peak_velocity);
  }
}

TEST_CASE("precision profile") {
  // Hand path of the right arm with the forearm along +Z at the hold.
  Clip c;
  c.skeleton = standard_skeleton();
  c.fps = 30;
  const ArmModel arm(c.skeleton, Side::Right, rest_pose(c.skeleton, standard_root()));
  const ArmAngles fwd{-std::numbers::pi / 2, 0, 0, 0};
  for (int i = 0; i < 5; ++i) c.frames.push_back(arm.pose(fwd));
  const auto pts = arm.points(fwd);
  c.targets.push_back({"ahead", pts.hand + Vec3{0, 0, 1}});
  c.targets.push_back({"side", pts.hand + Vec3{1, 0, 0}});
  c.targets.push_back({"on hand", pts.hand});
  Segment seg{"c", Side::Right, 0, 1, 2, 4, 2, 0};
  for (auto v : precision_profile(c, seg)) CHECK(v.value() == doctest::Approx(1.0));
  seg.target = 1;
  for (auto v : precision_profile(c, seg)) CHECK(v.value() == doctest::Approx(0.5));
  seg.target = 2;
  for (auto v : precision_profile(c, seg)) CHECK_FALSE(v.has_value());
}

TEST_CASE("octant classification") {
  const Skeleton skel = standard_skeleton();
  const BodyFrame body = body_frame(skel, rest_pose(skel, standard_root()));
  CHECK(body.shoulder_height == doctest::Approx(0.45));
  const Octant a = classify_octant(from_body(body, {0.3, body.shoulder_height + 0.2, 0.5}), body);
  CHECK(a.name() == "Front-Top-Left");
  const Octant b = classify_octant(from_body(body, {-0.3, body.shoulder_height - 0.2, -0.5}), body);
  CHECK(b.name() == "Back-Bottom-Right");
  const Octant tie = classify_octant(from_body(body, {0.0, body.shoulder_height, 0.0}), body);
  CHECK(tie.name() == "Front-Bottom-Right");

  for (int cell = 0; cell < 8; ++cell) CHECK(Octant::from_cell(cell).cell() == cell);
  const std::vector<Octant> list{a, a, b, tie};
  const auto table = count_octants(list);
  int sum = 0;
  for (int v : table) sum += v;
  CHECK(sum == 4);
  CHECK(table[static_cast<std::size_t>(a.cell())] == 2);
}

TEST_CASE("velocity profile and resampling") {
  CHECK(resample(std::vector<double>{0, 1, 2}, 5) == std::vector<double>{0, 0.5, 1, 1.5, 2});

  const double fps = 100;
  std::vector<Vec3> slow, fast;
  for (int i = 0; i <= 60; ++i) {
    slow.push_back({0, 0, 0.5 * i / fps});
    fast.push_back({0, 0, 1.5 * i / fps});
  }
  const Clip cs = translated_clip(slow, fps), cf = translated_clip(fast, fps);
  const Segment seg{"c", Side::Right, 5, 10, 30, 55, 30, 0};
  const std::vector<ClipSegment> one{{&cs, seg}};
  const auto p1 = velocity_profile(one, 20);
  for (double s : p1.sd) CHECK(s == 0.0);
  const std::vector<ClipSegment> same{{&cs, seg}, {&cs, seg}};
  const auto p2 = velocity_profile(same, 20);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(p2.mean[i] == doctest::Approx(p1.mean[i]));
    CHECK(p2.sd[i] == doctest::Approx(0.0));
  }
  const std::vector<ClipSegment> both{{&cs, seg}, {&cf, seg}};
  for (double m : velocity_profile(both, 20).mean) CHECK(m == doctest::Approx(1.0));
  CHECK_THROWS_AS(velocity_profile(std::vector<ClipSegment>{}, 20), EmptyInput);
}

TEST_CASE("find_peaks handles plateaus and prominence") {
  const std::vector<double> x{0, 1, 1, 1, 0, 0.5, 0.4, 2, 0};
  const auto all = find_peaks(x, 0.0, 0.0);
  CHECK(all == std::vector<int>{2, 5, 7});
  CHECK(peak_prominence(x, 5) == doctest::Approx(0.1));
  CHECK(peak_prominence(x, 7) == doctest::Approx(2.0));
  CHECK(find_peaks(x, 0.0, 0.2) == std::vector<int>{2, 7});
  CHECK(find_peaks(x, 1.5, 0.0) == std::vector<int>{7});
}
