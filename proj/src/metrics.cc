// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "uisrnn/assignment.h"
#include "uisrnn/error.h"

namespace uisrnn {

namespace {

using Micros = std::int64_t;

Micros to_micros(double seconds) { return std::llround(seconds * 1e6); }
double to_seconds(Micros t) { return static_cast<double>(t) * 1e-6; }

enum class Track { kRef, kHyp, kZone };

struct Event {
  Micros time;
  Track track;
  int id;
  int delta;
};

// Active state on one elementary interval of a sweep.
struct Piece {
  Micros start, end;
  std::vector<int> ref, hyp;  // distinct active speaker ids
  int zone_depth;
};

class SpeakerIndex {
 public:
  int id(const std::string &name) {
    auto [it, inserted] = index_.emplace(name, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }
  const std::string &name(int id) const { return names_[id]; }
  int size() const { return static_cast<int>(names_.size()); }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> names_;
};

void add_timeline(std::vector<Event> &events, const Timeline &tl, Track track,
                  SpeakerIndex &speakers) {
  tl.validate();
  for (const auto &seg : tl.segments) {
    const Micros s = to_micros(seg.start), e = to_micros(seg.end);
    if (e <= s) continue;
    const int id = speakers.id(seg.speaker);
    events.push_back({s, track, id, +1});
    events.push_back({e, track, id, -1});
  }
}

void add_zones(std::vector<Event> &events, const std::vector<std::pair<Micros, Micros>> &zones) {
  for (const auto &[s, e] : zones) {
    if (e <= s) continue;
    events.push_back({s, Track::kZone, 0, +1});
    events.push_back({e, Track::kZone, 0, -1});
  }
}

// Splits the time axis at every event and reports each nonempty piece.
template <typename F>
void sweep(std::vector<Event> events, int num_ref, int num_hyp, F &&on_piece) {
  std::sort(events.begin(), events.end(),
            [](const Event &a, const Event &b) { return a.time < b.time; });
  std::vector<int> ref_count(num_ref, 0), hyp_count(num_hyp, 0);
  int zone = 0;
  size_t i = 0;
  while (i < events.size()) {
    const Micros t = events[i].time;
    for (; i < events.size() && events[i].time == t; ++i) {
      const Event &ev = events[i];
      if (ev.track == Track::kRef) ref_count[ev.id] += ev.delta;
      else if (ev.track == Track::kHyp) hyp_count[ev.id] += ev.delta;
      else zone += ev.delta;
    }
    if (i == events.size()) break;
    Piece piece{t, events[i].time, {}, {}, zone};
    for (int k = 0; k < num_ref; ++k)
      if (ref_count[k] > 0) piece.ref.push_back(k);
    for (int k = 0; k < num_hyp; ++k)
      if (hyp_count[k] > 0) piece.hyp.push_back(k);
    on_piece(piece);
  }
}

std::vector<std::pair<Micros, Micros>> scored_micros(const Timeline &ref, double collar,
                                                     bool exclude_overlap) {
  if (!(collar >= 0.0)) throw std::invalid_argument("collar must be >= 0");
  SpeakerIndex speakers;
  std::vector<Event> events;
  add_timeline(events, ref, Track::kRef, speakers);
  const Micros c = to_micros(collar);
  if (c > 0) {
    std::vector<std::pair<Micros, Micros>> zones;
    for (const auto &seg : ref.segments)
      for (Micros b : {to_micros(seg.start), to_micros(seg.end)}) zones.emplace_back(b - c, b + c);
    add_zones(events, zones);
  }
  std::vector<std::pair<Micros, Micros>> out;
  sweep(std::move(events), speakers.size(), 0, [&](const Piece &p) {
    const size_t active = p.ref.size();
    if (active == 0 || p.zone_depth > 0 || (exclude_overlap && active > 1)) return;
    if (!out.empty() && out.back().second == p.start) out.back().second = p.end;
    else out.emplace_back(p.start, p.end);
  });
  return out;
}

struct ScoredPieces {
  SpeakerIndex ref_speakers, hyp_speakers;
  std::vector<Piece> pieces;
};

ScoredPieces scored_pieces(const Timeline &ref, const Timeline &hyp,
                           const std::vector<std::pair<Micros, Micros>> &regions) {
  ScoredPieces out;
  std::vector<Event> events;
  add_timeline(events, ref, Track::kRef, out.ref_speakers);
  add_timeline(events, hyp, Track::kHyp, out.hyp_speakers);
  add_zones(events, regions);
  sweep(std::move(events), out.ref_speakers.size(), out.hyp_speakers.size(),
        [&](const Piece &p) {
          if (p.zone_depth > 0) out.pieces.push_back(p);
        });
  return out;
}

std::vector<int> map_speakers(const ScoredPieces &sp) {
  Eigen::MatrixXd overlap =
      Eigen::MatrixXd::Zero(sp.hyp_speakers.size(), sp.ref_speakers.size());
  for (const auto &p : sp.pieces)
    for (int h : p.hyp)
      for (int r : p.ref) overlap(h, r) += static_cast<double>(p.end - p.start);
  std::vector<int> mapping = max_weight_assignment(overlap);
  for (size_t h = 0; h < mapping.size(); ++h)
    if (mapping[h] >= 0 && overlap(static_cast<int>(h), mapping[h]) <= 0.0) mapping[h] = -1;
  return mapping;
}

std::map<std::string, std::string> named_mapping(const ScoredPieces &sp,
                                                 const std::vector<int> &mapping) {
  std::map<std::string, std::string> out;
  for (size_t h = 0; h < mapping.size(); ++h)
    if (mapping[h] >= 0)
      out[sp.hyp_speakers.name(static_cast<int>(h))] = sp.ref_speakers.name(mapping[h]);
  return out;
}

std::vector<std::pair<Micros, Micros>> to_micros(const std::vector<Interval> &regions) {
  std::vector<std::pair<Micros, Micros>> out;
  out.reserve(regions.size());
  for (const auto &r : regions) out.emplace_back(to_micros(r.start), to_micros(r.end));
  return out;
}

template <typename T>
T parse_number(const std::string &token, const std::string &file, long line,
               const char *field) {
  T value{};
  const char *first = token.data();
  const char *last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw FormatError(file, line, std::string("invalid ") + field + " '" + token + "'");
  return value;
}

}  // namespace

void Timeline::validate() const {
  for (const auto &seg : segments) {
    if (!std::isfinite(seg.start) || !std::isfinite(seg.end))
      throw std::invalid_argument("timeline segment has non-finite time");
    if (seg.start < 0.0) throw std::invalid_argument("timeline segment starts before 0");
    if (!(seg.end > seg.start)) throw std::invalid_argument("timeline segment has end <= start");
  }
}

Timeline labels_to_timeline(const LabelSequence &labels, double segment_duration,
                            std::string utt) {
  if (!(segment_duration > 0.0)) throw std::invalid_argument("segment duration must be positive");
  Timeline tl{std::move(utt), {}};
  int run_start = 0;
  for (int t = 1; t <= labels.length(); ++t) {
    if (t == labels.length() || labels[t] != labels[run_start]) {
      tl.segments.push_back({run_start * segment_duration, t * segment_duration,
                             std::to_string(labels[run_start])});
      run_start = t;
    }
  }
  return tl;
}

std::vector<Interval> scored_regions(const Timeline &ref, double collar,
                                     bool exclude_overlap) {
  std::vector<Interval> out;
  for (const auto &[s, e] : scored_micros(ref, collar, exclude_overlap))
    out.push_back({to_seconds(s), to_seconds(e)});
  return out;
}

std::map<std::string, std::string> optimal_mapping(const Timeline &ref, const Timeline &hyp,
                                                   const std::vector<Interval> &regions) {
  const ScoredPieces sp = scored_pieces(ref, hyp, to_micros(regions));
  return named_mapping(sp, map_speakers(sp));
}

DerResult der(const Timeline &ref, const Timeline &hyp, double collar,
              bool exclude_overlap) {
  const ScoredPieces sp = scored_pieces(ref, hyp, scored_micros(ref, collar, exclude_overlap));
  const std::vector<int> mapping = map_speakers(sp);

  Micros confusion = 0, scored = 0, missed = 0, false_alarm = 0;
  for (const auto &p : sp.pieces) {
    const Micros dur = p.end - p.start;
    const Micros n_ref = static_cast<Micros>(p.ref.size());
    const Micros n_hyp = static_cast<Micros>(p.hyp.size());
    Micros correct = 0;
    for (int h : p.hyp)
      if (mapping[h] >= 0 && std::find(p.ref.begin(), p.ref.end(), mapping[h]) != p.ref.end())
        ++correct;
    scored += dur * n_ref;
    confusion += dur * (std::min(n_ref, n_hyp) - correct);
    missed += dur * std::max<Micros>(0, n_ref - n_hyp);
    false_alarm += dur * std::max<Micros>(0, n_hyp - n_ref);
  }
  if (scored == 0) throw std::invalid_argument("nothing to score");

  DerResult out;
  out.confusion_time = to_seconds(confusion);
  out.scored_time = to_seconds(scored);
  out.missed_time = to_seconds(missed);
  out.false_alarm_time = to_seconds(false_alarm);
  out.der = static_cast<double>(confusion) / static_cast<double>(scored);
  out.mapping = named_mapping(sp, mapping);
  return out;
}

double label_error_rate(const LabelSequence &ref, const LabelSequence &hyp) {
  if (ref.length() != hyp.length())
    throw std::invalid_argument("label sequences differ in length");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(hyp.num_speakers(), ref.num_speakers());
  for (int t = 0; t < ref.length(); ++t) counts(hyp[t] - 1, ref[t] - 1) += 1.0;
  const std::vector<int> mapping = max_weight_assignment(counts);
  double matched = 0.0;
  for (size_t h = 0; h < mapping.size(); ++h)
    if (mapping[h] >= 0) matched += counts(static_cast<int>(h), mapping[h]);
  return 1.0 - matched / static_cast<double>(ref.length());
}

std::vector<Timeline> read_rttm(std::istream &in, const std::string &source_name) {
  std::vector<Timeline> out;
  std::unordered_map<std::string, size_t> index;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string f; fields >> f;) tok.push_back(std::move(f));
    if (tok.empty() || tok[0].starts_with(";")) continue;
    if (tok[0] != "SPEAKER")
      throw FormatError(source_name, line_no, "expected SPEAKER record, got '" + tok[0] + "'");
    if (tok.size() < 8)
      throw FormatError(source_name, line_no, "SPEAKER record needs at least 8 fields");
    const double start = parse_number<double>(tok[3], source_name, line_no, "tbeg");
    const double dur = parse_number<double>(tok[4], source_name, line_no, "tdur");
    if (!std::isfinite(start) || start < 0.0 || !std::isfinite(dur) || !(dur > 0.0))
      throw FormatError(source_name, line_no, "segment times out of range");
    auto [it, inserted] = index.emplace(tok[1], out.size());
    if (inserted) out.push_back({tok[1], {}});
    out[it->second].segments.push_back({start, start + dur, tok[7]});
  }
  return out;
}

std::vector<Timeline> read_rttm_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, 0, "cannot open file");
  return read_rttm(in, path);
}

void write_rttm(std::ostream &out, const Timeline &timeline) {
  char buf[64];
  for (const auto &seg : timeline.segments) {
    out << "SPEAKER " << timeline.utt << " 1 ";
    std::snprintf(buf, sizeof(buf), "%.6f %.6f", seg.start, seg.end - seg.start);
    out << buf << " <NA> <NA> " << seg.speaker << " <NA> <NA>\n";
  }
}

}  // namespace uisrnn
