#include <charconv>
#include <numbers>

#include "pointbench/error.hpp"
#include "pointbench/mocap.hpp"

namespace pointbench {

namespace {

struct Token {
  std::string_view text;
  int line;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' && text[i] != '\n') ++i;
      out.push_back({text.substr(start, i - start), line});
    }
  }
  return out;
}

class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  const Token& peek() const {
    if (done()) throw ParseError("unexpected end of file", last_line());
    return tokens_[pos_];
  }
  const Token& next() {
    const Token& t = peek();
    ++pos_;
    return t;
  }
  void expect(std::string_view word) {
    const Token& t = next();
    if (t.text != word) {
      throw ParseError("expected '" + std::string(word) + "', found '" + std::string(t.text) + "'", t.line);
    }
  }
  double number() {
    const Token& t = next();
    return parse_number(t);
  }
  int last_line() const { return tokens_.empty() ? 0 : tokens_.back().line; }
  std::size_t position() const { return pos_; }

  static double parse_number(const Token& t) {
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      throw ParseError("non-numeric value '" + std::string(t.text) + "'", t.line);
    }
    return v;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

void parse_joint(TokenStream& ts, int parent, std::string name, double scale, std::vector<Joint>& joints) {
  ts.expect("{");
  Joint joint;
  joint.name = std::move(name);
  joint.parent = parent;
  const int self = static_cast<int>(joints.size());
  joints.push_back(joint);

  bool have_offset = false;
  while (true) {
    const Token& t = ts.next();
    if (t.text == "}") break;
    if (t.text == "OFFSET") {
      const double x = ts.number(), y = ts.number(), z = ts.number();
      joints[static_cast<std::size_t>(self)].offset = Vec3{x, y, z} * scale;
      have_offset = true;
    } else if (t.text == "CHANNELS") {
      const Token& nt = ts.next();
      const double n = TokenStream::parse_number(nt);
      if (n < 0 || n > 6 || n != std::floor(n)) throw ParseError("invalid channel count", nt.line);
      for (int k = 0; k < static_cast<int>(n); ++k) {
        const Token& ct = ts.next();
        const auto ch = parse_channel(ct.text);
        if (!ch) throw UnsupportedChannel("unsupported channel '" + std::string(ct.text) + "'", ct.line);
        joints[static_cast<std::size_t>(self)].channels.push_back(*ch);
      }
    } else if (t.text == "JOINT") {
      const Token& nt = ts.next();
      parse_joint(ts, self, std::string(nt.text), scale, joints);
    } else if (t.text == "End") {
      ts.expect("Site");
      ts.expect("{");
      ts.expect("OFFSET");
      const double x = ts.number(), y = ts.number(), z = ts.number();
      joints[static_cast<std::size_t>(self)].end_site = Vec3{x, y, z} * scale;
      ts.expect("}");
    } else if (t.text == "MOTION" || t.text == "ROOT") {
      throw ParseError("unbalanced braces before '" + std::string(t.text) + "'", t.line);
    } else {
      throw ParseError("unexpected token '" + std::string(t.text) + "'", t.line);
    }
  }
  if (!have_offset) throw ParseError("joint '" + joints[static_cast<std::size_t>(self)].name + "' has no OFFSET", 0);
}

Quat axis_rotation(Channel c, double degrees) {
  const double r = degrees * std::numbers::pi / 180.0;
  switch (c) {
    case Channel::Xrotation: return Quat::from_axis_angle({1, 0, 0}, r);
    case Channel::Yrotation: return Quat::from_axis_angle({0, 1, 0}, r);
    default: return Quat::from_axis_angle({0, 0, 1}, r);
  }
}

}  // namespace

Clip parse_bvh(std::string_view text, double length_scale, std::string source) {
  // The hierarchy is token based; motion rows are checked line by line.
  const std::size_t motion_at = text.find("MOTION");
  if (motion_at == std::string_view::npos) throw ParseError("missing MOTION section", 0);
  const std::string_view head = text.substr(0, motion_at);
  int motion_line = 1;
  for (char c : head) motion_line += c == '\n';

  TokenStream ts(tokenize(head));
  ts.expect("HIERARCHY");
  ts.expect("ROOT");
  std::vector<Joint> joints;
  const Token& root_name = ts.next();
  parse_joint(ts, -1, std::string(root_name.text), length_scale, joints);
  if (!ts.done()) {
    const Token& t = ts.peek();
    throw ParseError(t.text == "}" ? "unbalanced braces" : "unexpected token '" + std::string(t.text) + "'", t.line);
  }

  Clip clip;
  clip.source = std::move(source);
  clip.skeleton = Skeleton(joints);

  std::size_t channel_count = 0;
  for (const Joint& j : joints) channel_count += j.channels.size();

  // MOTION header.
  std::vector<std::pair<std::string_view, int>> lines;
  {
    std::string_view rest = text.substr(motion_at);
    int line = motion_line;
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      std::string_view l = rest.substr(0, nl);
      if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
      lines.emplace_back(l, line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
      ++line;
    }
  }
  std::size_t li = 1;  // lines[0] is "MOTION"
  auto next_nonblank = [&]() -> std::pair<std::string_view, int> {
    while (li < lines.size()) {
      auto [l, n] = lines[li++];
      if (l.find_first_not_of(" \t") != std::string_view::npos) return {l, n};
    }
    return {std::string_view{}, lines.empty() ? 0 : lines.back().second};
  };

  auto [frames_line, frames_ln] = next_nonblank();
  auto frame_tokens = tokenize(frames_line);
  if (frame_tokens.size() != 2 || frame_tokens[0].text != "Frames:") {
    throw ParseError("expected 'Frames: <n>'", frames_ln);
  }
  for (auto& t : frame_tokens) t.line = frames_ln;
  const double nf = TokenStream::parse_number(frame_tokens[1]);
  if (nf < 0 || nf != std::floor(nf)) throw ParseError("invalid frame count", frames_ln);
  const auto frame_count = static_cast<std::size_t>(nf);

  auto [time_line, time_ln] = next_nonblank();
  auto time_tokens = tokenize(time_line);
  if (time_tokens.size() != 3 || time_tokens[0].text != "Frame" || time_tokens[1].text != "Time:") {
    throw ParseError("expected 'Frame Time: <seconds>'", time_ln);
  }
  time_tokens[2].line = time_ln;
  const double frame_time = TokenStream::parse_number(time_tokens[2]);
  if (!(frame_time > 0.0)) throw ParseError("frame time must be positive", time_ln);
  clip.fps = 1.0 / frame_time;

  clip.frames.reserve(frame_count);
  for (std::size_t f = 0; f < frame_count; ++f) {
    auto [row, row_ln] = next_nonblank();
    if (row.empty()) {
      throw ParseError("MOTION declares " + std::to_string(frame_count) + " frames but only " +
                           std::to_string(f) + " rows are present",
                       row_ln);
    }
    auto values = tokenize(row);
    if (values.size() != channel_count) {
      throw ParseError("row has " + std::to_string(values.size()) + " values, expected " +
                           std::to_string(channel_count),
                       row_ln);
    }
    Pose pose = rest_pose(clip.skeleton, joints[0].offset);
    std::size_t k = 0;
    for (std::size_t j = 0; j < joints.size(); ++j) {
      Quat rot;
      Vec3 translation;
      for (Channel c : joints[j].channels) {
        auto& tok = values[k++];
        tok.line = row_ln;
        const double v = TokenStream::parse_number(tok);
        switch (c) {
          case Channel::Xposition: translation.x = v; break;
          case Channel::Yposition: translation.y = v; break;
          case Channel::Zposition: translation.z = v; break;
          default: rot = rot * axis_rotation(c, v); break;
        }
      }
      pose.rotations[j] = rot.normalized().canonical();
      // Non-root translation channels are ignored; joints keep their fixed offsets.
      if (j == 0) pose.root = joints[0].offset + translation * length_scale;
    }
    clip.frames.push_back(std::move(pose));
  }
  auto [extra, extra_ln] = next_nonblank();
  if (!extra.empty()) {
    throw ParseError("more motion rows than the declared " + std::to_string(frame_count) + " frames", extra_ln);
  }
  if (clip.frames.size() < 2) throw ParseError("clip needs at least 2 frames", frames_ln);
  return clip;
}

}  // namespace pointbench
