// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.h
 * @brief  Confusion-only diarization error rate, RTTM timelines and frame
 *         label error after optimal speaker mapping.
 *
 * Scoring conventions:
 *  - a collar of c seconds removes [b - c, b + c] around every reference
 *    segment boundary b;
 *  - with overlap exclusion, instants where two or more reference speakers
 *    are active are not scored;
 *  - hypothesis speakers are mapped one-to-one onto reference speakers to
 *    maximize overlap inside the scored regions; DER is confusion time over
 *    scored reference time.
 * All times are rounded to whole microseconds on ingestion and intervals are
 * half-open.
 */
#ifndef UISRNN_METRICS_H_
#define UISRNN_METRICS_H_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "uisrnn/labels.h"

namespace uisrnn {

struct Segment {
  double start = 0.0;
  double end = 0.0;
  std::string speaker;

  bool operator==(const Segment &) const = default;
};

struct Timeline {
  std::string utt;
  std::vector<Segment> segments;

  /// Throws std::invalid_argument for non-finite, negative or empty segments.
  void validate() const;
  bool operator==(const Timeline &) const = default;
};

struct Interval {
  double start = 0.0;
  double end = 0.0;

  double duration() const { return end - start; }
  bool operator==(const Interval &) const = default;
};

/// Segment t (0-based) covers [t * dur, (t + 1) * dur); runs of the same
/// speaker are merged. Speaker names are the decimal label ids.
Timeline labels_to_timeline(const LabelSequence &labels, double segment_duration,
                            std::string utt = {});

/// Disjoint, sorted intervals of reference speech that are scored.
std::vector<Interval> scored_regions(const Timeline &ref, double collar,
                                     bool exclude_overlap);

/// hyp speaker -> ref speaker, restricted to pairs with positive overlap in
/// `regions`.
std::map<std::string, std::string> optimal_mapping(const Timeline &ref, const Timeline &hyp,
                                                   const std::vector<Interval> &regions);

struct DerResult {
  double confusion_time = 0.0;
  double scored_time = 0.0;
  double der = 0.0;
  double missed_time = 0.0;       ///< diagnostics only
  double false_alarm_time = 0.0;  ///< diagnostics only
  std::map<std::string, std::string> mapping;
};

/// Throws std::invalid_argument("nothing to score") if no reference time
/// survives the collar and overlap rules.
DerResult der(const Timeline &ref, const Timeline &hyp, double collar = 0.25,
              bool exclude_overlap = true);

/// Fraction of positions whose label disagrees with the reference after the
/// best one-to-one relabeling of hypothesis speakers.
double label_error_rate(const LabelSequence &ref, const LabelSequence &hyp);

/// Reads `SPEAKER <utt> <chan> <tbeg> <tdur> <ortho> <stype> <name> ...`
/// lines, grouping by utterance in order of first appearance. Blank lines and
/// lines starting with ';' are skipped. Throws FormatError naming
/// `source_name` and the line number.
std::vector<Timeline> read_rttm(std::istream &in, const std::string &source_name);
std::vector<Timeline> read_rttm_file(const std::string &path);

/// Writes one SPEAKER line per segment with 6-decimal times.
void write_rttm(std::ostream &out, const Timeline &timeline);

}  // namespace uisrnn

#endif  // UISRNN_METRICS_H_
