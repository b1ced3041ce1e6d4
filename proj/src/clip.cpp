#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pointbench/error.hpp"
#include "pointbench/mocap.hpp"

namespace pointbench {

using nlohmann::json;

std::vector<Vec3> Clip::positions(int frame) const {
  return forward_kinematics(skeleton, frames.at(static_cast<std::size_t>(frame)));
}

void validate_clip(const Clip& clip) {
  if (!(clip.fps > 0.0) || !std::isfinite(clip.fps)) throw SchemaError("fps", "must be positive");
  if (clip.frames.size() < 2) throw SchemaError("frames", "need at least 2 frames");
  for (const Pose& p : clip.frames) {
    if (p.rotations.size() != clip.skeleton.size()) {
      throw SchemaError("frames", "rotation count does not match skeleton");
    }
  }
  for (const Annotation& a : clip.annotations) {
    if (a.target >= static_cast<int>(clip.targets.size())) {
      throw SchemaError("annotations", "target index out of range");
    }
  }
}

namespace {

const json& require(const json& obj, const char* field, const std::string& path) {
  const std::string name = path.empty() ? field : path + "." + field;
  if (!obj.is_object() || !obj.contains(field)) throw SchemaError(name, "missing");
  return obj.at(field);
}

double number(const json& v, const std::string& name) {
  if (!v.is_number()) throw SchemaError(name, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(name, "not finite");
  return d;
}

int integer(const json& v, const std::string& name) {
  if (!v.is_number_integer()) throw SchemaError(name, "expected an integer");
  return v.get<int>();
}

Vec3 vec3(const json& v, const std::string& name, double scale) {
  if (!v.is_array() || v.size() != 3) throw SchemaError(name, "expected [x, y, z]");
  return Vec3{number(v[0], name), number(v[1], name), number(v[2], name)} * scale;
}

Quat quat(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 4) throw SchemaError(name, "expected [w, x, y, z]");
  const Quat q{number(v[0], name), number(v[1], name), number(v[2], name), number(v[3], name)};
  if (std::abs(q.norm() - 1.0) > 1e-6) throw SchemaError(name, "quaternion is not unit length");
  return q;
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json to_json(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }

}  // namespace

Clip parse_clip_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("document", e.what());
  }
  if (!doc.is_object()) throw SchemaError("document", "expected an object");

  Clip clip;
  clip.fps = number(require(doc, "fps", ""), "fps");
  if (!(clip.fps > 0.0)) throw SchemaError("fps", "must be positive");

  double scale = 1.0;
  if (doc.contains("units")) {
    const json& u = doc["units"];
    if (u == "m") {
      scale = 1.0;
    } else if (u == "mm") {
      scale = 1e-3;
    } else {
      throw SchemaError("units", "expected \"m\" or \"mm\"");
    }
  }
  if (doc.contains("source")) {
    if (!doc["source"].is_string()) throw SchemaError("source", "expected a string");
    clip.source = doc["source"].get<std::string>();
  }

  const json& skel = require(doc, "skeleton", "");
  const json& jj = require(skel, "joints", "skeleton");
  if (!jj.is_array() || jj.empty()) throw SchemaError("skeleton.joints", "expected a non-empty array");
  std::vector<Joint> joints;
  for (std::size_t i = 0; i < jj.size(); ++i) {
    const std::string path = "skeleton.joints[" + std::to_string(i) + "]";
    Joint j;
    const json& name = require(jj[i], "name", path);
    if (!name.is_string()) throw SchemaError(path + ".name", "expected a string");
    j.name = name.get<std::string>();
    j.parent = integer(require(jj[i], "parent", path), path + ".parent");
    j.offset = vec3(require(jj[i], "offset", path), path + ".offset", scale);
    if (jj[i].contains("channels")) {
      for (const json& c : jj[i]["channels"]) {
        const auto ch = c.is_string() ? parse_channel(c.get<std::string>()) : std::nullopt;
        if (!ch) throw SchemaError(path + ".channels", "unknown channel");
        j.channels.push_back(*ch);
      }
    }
    if (jj[i].contains("end_site")) j.end_site = vec3(jj[i]["end_site"], path + ".end_site", scale);
    joints.push_back(std::move(j));
  }
  try {
    clip.skeleton = Skeleton(std::move(joints));
  } catch (const Error& e) {
    throw SchemaError("skeleton", e.what());
  }
  if (skel.contains("arms")) {
    for (const auto& [key, arm] : skel["arms"].items()) {
      const std::string path = "skeleton.arms." + key;
      Side side;
      try {
        side = parse_side(key);
      } catch (const Error&) {
        throw SchemaError(path, "expected left or right");
      }
      ArmJoints a{integer(require(arm, "shoulder", path), path), integer(require(arm, "elbow", path), path),
                  integer(require(arm, "hand", path), path)};
      try {
        clip.skeleton.set_arm(side, a);
      } catch (const Error& e) {
        throw SchemaError(path, e.what());
      }
    }
  }

  const json& frames = require(doc, "frames", "");
  if (!frames.is_array()) throw SchemaError("frames", "expected an array");
  clip.frames.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string path = "frames[" + std::to_string(f) + "]";
    Pose pose;
    pose.root = vec3(require(frames[f], "root", path), path + ".root", scale);
    const json& rots = require(frames[f], "rotations", path);
    if (!rots.is_array() || rots.size() != clip.skeleton.size()) {
      throw SchemaError(path + ".rotations", "expected one quaternion per joint");
    }
    pose.rotations.reserve(rots.size());
    for (const json& q : rots) pose.rotations.push_back(quat(q, path + ".rotations"));
    clip.frames.push_back(std::move(pose));
  }

  if (doc.contains("targets")) {
    const json& targets = doc["targets"];
    if (!targets.is_array()) throw SchemaError("targets", "expected an array");
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const std::string path = "targets[" + std::to_string(i) + "]";
      Target t;
      if (targets[i].contains("label")) t.label = targets[i]["label"].get<std::string>();
      t.position = vec3(require(targets[i], "position", path), path + ".position", scale);
      clip.targets.push_back(std::move(t));
    }
  }

  if (doc.contains("annotations")) {
    const json& anns = doc["annotations"];
    if (!anns.is_array()) throw SchemaError("annotations", "expected an array");
    for (std::size_t i = 0; i < anns.size(); ++i) {
      const std::string path = "annotations[" + std::to_string(i) + "]";
      Annotation a;
      const json& hand = require(anns[i], "hand", path);
      try {
        a.hand = parse_side(hand.get<std::string>());
      } catch (const std::exception&) {
        throw SchemaError(path + ".hand", "expected left or right");
      }
      a.onset = integer(require(anns[i], "onset", path), path + ".onset");
      a.peak_velocity = integer(require(anns[i], "peak_velocity", path), path + ".peak_velocity");
      a.hold_start = integer(require(anns[i], "hold_start", path), path + ".hold_start");
      a.offset = integer(require(anns[i], "offset", path), path + ".offset");
      a.target = integer(require(anns[i], "target", path), path + ".target");
      clip.annotations.push_back(a);
    }
  }

  validate_clip(clip);
  return clip;
}

std::string write_clip_json(const Clip& clip) {
  json doc;
  doc["source"] = clip.source;
  doc["fps"] = clip.fps;
  doc["units"] = "m";

  json joints = json::array();
  for (const Joint& j : clip.skeleton.joints()) {
    json o{{"name", j.name}, {"parent", j.parent}, {"offset", to_json(j.offset)}};
    if (!j.channels.empty()) {
      json ch = json::array();
      for (Channel c : j.channels) ch.push_back(std::string(channel_name(c)));
      o["channels"] = ch;
    }
    if (j.end_site) o["end_site"] = to_json(*j.end_site);
    joints.push_back(std::move(o));
  }
  json arms = json::object();
  for (Side s : {Side::Left, Side::Right}) {
    if (!clip.skeleton.has_arm(s)) continue;
    const ArmJoints& a = clip.skeleton.arm(s);
    arms[std::string(side_name(s))] = {{"shoulder", a.shoulder}, {"elbow", a.elbow}, {"hand", a.hand}};
  }
  doc["skeleton"] = {{"joints", joints}, {"arms", arms}};

  json frames = json::array();
  for (const Pose& p : clip.frames) {
    json rots = json::array();
    for (const Quat& q : p.rotations) rots.push_back(to_json(q));
    frames.push_back({{"root", to_json(p.root)}, {"rotations", rots}});
  }
  doc["frames"] = std::move(frames);

  json targets = json::array();
  for (const Target& t : clip.targets) targets.push_back({{"label", t.label}, {"position", to_json(t.position)}});
  doc["targets"] = std::move(targets);

  json anns = json::array();
  for (const Annotation& a : clip.annotations) {
    anns.push_back({{"hand", std::string(side_name(a.hand))},
                    {"onset", a.onset},
                    {"peak_velocity", a.peak_velocity},
                    {"hold_start", a.hold_start},
                    {"offset", a.offset},
                    {"target", a.target}});
  }
  doc["annotations"] = std::move(anns);
  return doc.dump(1);
}

Clip read_clip_file(const std::filesystem::path& path, double bvh_length_scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  Clip clip = ext == ".bvh" ? parse_bvh(ss.str(), bvh_length_scale, path.stem().string())
                            : parse_clip_json(ss.str());
  if (clip.source.empty()) clip.source = path.stem().string();
  return clip;
}

}  // namespace pointbench
