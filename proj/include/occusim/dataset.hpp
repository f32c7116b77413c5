#pragma once

// From raw concentration logs to model-ready samples: per-minute mean
// aggregation, binary presence labels, and fixed-length sliding windows that
// never straddle a day boundary or a gap in the log.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "occusim/co2_sim.hpp"
#include "occusim/occupancy_sim.hpp"

namespace occusim {

/// Timestamped samples with occupant counts, as read from a sensor log or a
/// simulator export. Timestamps are seconds (UTC epoch for sensor logs).
struct LabeledLog {
  std::vector<double> timestamps;
  std::vector<double> co2;
  std::vector<int> occupants;
};

/// Per-minute concentrations and labels split into contiguous segments.
struct LabeledMinuteSeries {
  std::vector<double> co2;
  std::vector<std::uint8_t> label;
  std::vector<std::size_t> segment_starts;  // first index of each segment
  std::vector<int> segment_day;             // day id of each segment

  std::size_t segment_end(std::size_t s) const {
    return s + 1 < segment_starts.size() ? segment_starts[s + 1] : co2.size();
  }
  std::vector<int> days() const;  // distinct day ids in order of appearance
  void validate() const;
};

struct WindowSample {
  std::vector<double> inputs;
  std::uint8_t label = 0;
};

/// Contiguous storage for many windows of equal length.
class WindowSet {
 public:
  explicit WindowSet(std::size_t length = 15) : length_(length) {}

  std::size_t length() const { return length_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  std::span<const double> inputs(std::size_t i) const {
    return {values_.data() + i * length_, length_};
  }
  std::uint8_t label(std::size_t i) const { return labels_[i]; }
  int day(std::size_t i) const { return days_[i]; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  const std::vector<double>& values() const { return values_; }
  WindowSample sample(std::size_t i) const;

  void push_back(std::span<const double> inputs, std::uint8_t label, int day = 0);
  void append(const WindowSet& other);
  WindowSet subset(std::span<const std::size_t> indices) const;
  /// Windows whose day id is in `days`, in stored order.
  WindowSet select_days(std::span<const int> days) const;
  WindowSet slice(std::size_t begin, std::size_t end) const;

  bool operator==(const WindowSet&) const = default;

 private:
  std::size_t length_;
  std::vector<double> values_;
  std::vector<std::uint8_t> labels_;
  std::vector<int> days_;
};

/// Mean of each complete minute of a constant-step series.
std::vector<double> downsample_mean(const Co2Series& series);

std::vector<std::uint8_t> binarize_labels(std::span<const int> occupant_counts);

/// Groups samples by minute; minutes with fewer samples than a full minute at
/// the log's step are dropped and split the series into segments. Labels are
/// 1 if any sample of the minute reports an occupant.
LabeledMinuteSeries aggregate_minutes(const LabeledLog& log);

/// Per-minute series of a simulation, one segment per day.
LabeledMinuteSeries minute_series(const std::vector<OccupancyTrace>& traces,
                                  const std::vector<double>& minute_co2);

/// Sliding windows labelled by their final minute.
WindowSet make_windows(const LabeledMinuteSeries& series, std::size_t length = 15,
                       std::size_t stride = 1);

/// Chronological split: the trailing `fraction` becomes the validation set.
std::pair<WindowSet, WindowSet> split(const WindowSet& samples, double fraction = 0.2);

double parse_iso8601(const std::string& text);
std::string format_iso8601(double epoch_seconds);

/// Sensor log: header `timestamp,co2_ppm,occupant_count`, ISO-8601 times.
LabeledLog read_sensor_csv(const std::filesystem::path& path);
void write_sensor_csv(const std::filesystem::path& path, const LabeledLog& log);

/// Simulator export: header `timestamp_s,co2_ppm,occ,window`.
LabeledLog read_series_csv(const std::filesystem::path& path);
void write_series_csv(const std::filesystem::path& path, const Co2Series& series,
                      const std::vector<OccupancyTrace>& traces);

/// Reads either CSV flavour, dispatching on the header.
LabeledLog read_any_csv(const std::filesystem::path& path);

/// Header `day,minute,occ,window,vm`.
void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<OccupancyTrace>& traces);

/// Header `v1,...,vN,label`.
void write_samples(const std::filesystem::path& path, const WindowSet& samples);
WindowSet read_samples(const std::filesystem::path& path);

}  // namespace occusim
