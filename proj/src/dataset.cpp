#include "occusim/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "occusim/error.hpp"

namespace occusim {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(line, std::string("non-finite ") + what);
  }
  return value;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// Reads the header and every data row; blank lines are skipped.
template <typename RowFn>
void for_each_row(std::istream& in, const std::string& expected_header, std::size_t fields,
                  RowFn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw ParseError(1, "expected header '" + expected_header + "', got '" + line + "'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_fields(line);
    if (f.size() != fields) {
      throw ParseError(line_no, "expected " + std::to_string(fields) + " fields, got " +
                                    std::to_string(f.size()));
    }
    fn(f, line_no);
  }
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
}

}  // namespace

// ---------------------------------------------------------------------------
// LabeledMinuteSeries / WindowSet

std::vector<int> LabeledMinuteSeries::days() const {
  std::vector<int> out;
  for (int d : segment_day) {
    if (out.empty() || out.back() != d) out.push_back(d);
  }
  return out;
}

void LabeledMinuteSeries::validate() const {
  if (co2.size() != label.size()) throw DomainError("co2 and label lengths differ");
  if (segment_starts.size() != segment_day.size()) throw DomainError("segment tables differ");
  for (auto v : label) {
    if (v > 1) throw DomainError("labels must be binary");
  }
  if (!co2.empty() && (segment_starts.empty() || segment_starts.front() != 0)) {
    throw DomainError("first segment must start at index 0");
  }
}

WindowSample WindowSet::sample(std::size_t i) const {
  auto in = inputs(i);
  return {std::vector<double>(in.begin(), in.end()), labels_[i]};
}

void WindowSet::push_back(std::span<const double> inputs, std::uint8_t label, int day) {
  if (inputs.size() != length_) throw DomainError("window length mismatch");
  values_.insert(values_.end(), inputs.begin(), inputs.end());
  labels_.push_back(label);
  days_.push_back(day);
}

void WindowSet::append(const WindowSet& other) {
  if (other.length_ != length_) throw DomainError("window length mismatch");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  days_.insert(days_.end(), other.days_.begin(), other.days_.end());
}

WindowSet WindowSet::subset(std::span<const std::size_t> indices) const {
  WindowSet out(length_);
  out.values_.reserve(indices.size() * length_);
  for (std::size_t i : indices) out.push_back(inputs(i), labels_[i], days_[i]);
  return out;
}

WindowSet WindowSet::select_days(std::span<const int> days) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < size(); ++i) {
    if (std::find(days.begin(), days.end(), days_[i]) != days.end()) idx.push_back(i);
  }
  return subset(idx);
}

WindowSet WindowSet::slice(std::size_t begin, std::size_t end) const {
  WindowSet out(length_);
  out.values_.assign(values_.begin() + begin * length_, values_.begin() + end * length_);
  out.labels_.assign(labels_.begin() + begin, labels_.begin() + end);
  out.days_.assign(days_.begin() + begin, days_.begin() + end);
  return out;
}

// ---------------------------------------------------------------------------
// Transformations

std::vector<double> downsample_mean(const Co2Series& series) {
  if (series.values.empty()) return {};
  const double per_minute = 60.0 / series.step;
  const auto n = static_cast<std::size_t>(std::llround(per_minute));
  if (n == 0 || std::abs(per_minute - static_cast<double>(n)) > 1e-9) {
    throw DomainError("series step must divide 60 s");
  }
  std::vector<double> out(series.values.size() / n);
  for (std::size_t m = 0; m < out.size(); ++m) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += series.values[m * n + k];
    out[m] = sum / static_cast<double>(n);
  }
  return out;
}

std::vector<std::uint8_t> binarize_labels(std::span<const int> occupant_counts) {
  std::vector<std::uint8_t> out;
  out.reserve(occupant_counts.size());
  for (int c : occupant_counts) {
    if (c < 0) throw DomainError("occupant count must be non-negative");
    out.push_back(c >= 1 ? 1 : 0);
  }
  return out;
}

LabeledMinuteSeries aggregate_minutes(const LabeledLog& log) {
  const std::size_t n = log.timestamps.size();
  if (log.co2.size() != n || log.occupants.size() != n) {
    throw DomainError("log columns have different lengths");
  }
  LabeledMinuteSeries out;
  if (n == 0) return out;

  double step = INFINITY;
  for (std::size_t i = 1; i < n; ++i) {
    const double dt = log.timestamps[i] - log.timestamps[i - 1];
    if (!(dt > 0.0)) throw DomainError("timestamps must be strictly increasing");
    step = std::min(step, dt);
  }
  if (n == 1) step = 60.0;
  const auto per_minute = std::max<long long>(1, std::llround(60.0 / step));

  std::int64_t prev_minute = 0;
  int prev_day = 0;
  bool have_prev = false;
  std::size_t i = 0;
  while (i < n) {
    const auto minute = floor_div(static_cast<std::int64_t>(std::floor(log.timestamps[i])), 60);
    double sum = 0.0;
    int count = 0;
    int max_occ = 0;
    std::size_t j = i;
    for (; j < n && floor_div(static_cast<std::int64_t>(std::floor(log.timestamps[j])), 60) == minute;
         ++j) {
      sum += log.co2[j];
      max_occ = std::max(max_occ, log.occupants[j]);
      if (log.occupants[j] < 0) throw DomainError("occupant count must be non-negative");
      ++count;
    }
    i = j;
    if (count < per_minute) continue;  // incomplete minute
    const int day = static_cast<int>(floor_div(minute, 1440));
    if (!have_prev || minute != prev_minute + 1 || day != prev_day) {
      out.segment_starts.push_back(out.co2.size());
      out.segment_day.push_back(day);
    }
    out.co2.push_back(sum / count);
    out.label.push_back(max_occ >= 1 ? 1 : 0);
    prev_minute = minute;
    prev_day = day;
    have_prev = true;
  }
  return out;
}

LabeledMinuteSeries minute_series(const std::vector<OccupancyTrace>& traces,
                                  const std::vector<double>& minute_co2) {
  if (minute_co2.size() != traces.size() * kMinutesPerDay) {
    throw DomainError("minute series does not match the traces");
  }
  LabeledMinuteSeries out;
  out.co2 = minute_co2;
  out.label.reserve(minute_co2.size());
  for (const auto& tr : traces) {
    out.segment_starts.push_back(out.label.size());
    out.segment_day.push_back(tr.day_index);
    out.label.insert(out.label.end(), tr.occ.begin(), tr.occ.end());
  }
  return out;
}

WindowSet make_windows(const LabeledMinuteSeries& series, std::size_t length,
                       std::size_t stride) {
  if (length == 0 || stride == 0) throw DomainError("window length and stride must be positive");
  series.validate();
  WindowSet out(length);
  for (std::size_t s = 0; s < series.segment_starts.size(); ++s) {
    const std::size_t begin = series.segment_starts[s];
    const std::size_t end = series.segment_end(s);
    if (end - begin < length) continue;
    for (std::size_t start = begin; start + length <= end; start += stride) {
      out.push_back(std::span<const double>(series.co2).subspan(start, length),
                    series.label[start + length - 1], series.segment_day[s]);
    }
  }
  return out;
}

std::pair<WindowSet, WindowSet> split(const WindowSet& samples, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("split fraction must be in (0, 1)");
  const auto n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(samples.size()) * fraction + 1e-9));
  const std::size_t n_train = samples.size() - n_val;
  return {samples.slice(0, n_train), samples.slice(n_train, samples.size())};
}

// ---------------------------------------------------------------------------
// Timestamps

double parse_iso8601(const std::string& text) {
  int y, mo, d, h = 0, mi = 0;
  double s = 0.0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3 || consumed != 10) {
    throw DomainError("not an ISO-8601 timestamp: '" + text + "'");
  }
  std::string_view rest(text);
  rest.remove_prefix(10);
  if (!rest.empty() && (rest.front() == 'T' || rest.front() == ' ')) {
    int used = 0;
    std::string tail(rest.substr(1));
    if (std::sscanf(tail.c_str(), "%2d:%2d:%lf%n", &h, &mi, &s, &used) != 3) {
      throw DomainError("not an ISO-8601 timestamp: '" + text + "'");
    }
    rest.remove_prefix(1 + used);
  }
  double offset = 0.0;
  if (!rest.empty()) {
    if (rest == "Z") {
    } else if ((rest.front() == '+' || rest.front() == '-') && rest.size() == 6 && rest[3] == ':') {
      const int oh = (rest[1] - '0') * 10 + (rest[2] - '0');
      const int om = (rest[4] - '0') * 10 + (rest[5] - '0');
      offset = (rest.front() == '+' ? 1 : -1) * (oh * 3600.0 + om * 60.0);
    } else {
      throw DomainError("not an ISO-8601 timestamp: '" + text + "'");
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s >= 61.0) {
    throw DomainError("invalid calendar time: '" + text + "'");
  }
  const auto days = sys_days(ymd).time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + s - offset;
}

std::string format_iso8601(double epoch_seconds) {
  using namespace std::chrono;
  const auto whole = static_cast<std::int64_t>(std::floor(epoch_seconds));
  const auto day_count = floor_div(whole, 86400);
  const auto sec_of_day = whole - day_count * 86400;
  const year_month_day ymd{sys_days{days{day_count}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(sec_of_day / 3600), static_cast<int>(sec_of_day / 60 % 60),
                static_cast<int>(sec_of_day % 60));
  return buf;
}

// ---------------------------------------------------------------------------
// Files

namespace {
constexpr const char* kSensorHeader = "timestamp,co2_ppm,occupant_count";
constexpr const char* kSeriesHeader = "timestamp_s,co2_ppm,occ,window";
constexpr const char* kTraceHeader = "day,minute,occ,window,vm";
}  // namespace

LabeledLog read_sensor_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  LabeledLog log;
  for_each_row(in, kSensorHeader, 3, [&](const auto& f, std::size_t line) {
    double ts;
    try {
      ts = parse_iso8601(std::string(f[0]));
    } catch (const DomainError& e) {
      throw ParseError(line, e.what());
    }
    const double co2 = parse_number<double>(f[1], line, "co2_ppm");
    const int count = parse_number<int>(f[2], line, "occupant_count");
    if (co2 < 0.0) throw ParseError(line, "negative co2_ppm");
    if (count < 0) throw ParseError(line, "negative occupant_count");
    if (!log.timestamps.empty() && ts <= log.timestamps.back()) {
      throw ParseError(line, "timestamps must be strictly increasing");
    }
    log.timestamps.push_back(ts);
    log.co2.push_back(co2);
    log.occupants.push_back(count);
  });
  return log;
}

void write_sensor_csv(const std::filesystem::path& path, const LabeledLog& log) {
  auto out = open_output(path);
  out << kSensorHeader << '\n';
  for (std::size_t i = 0; i < log.timestamps.size(); ++i) {
    out << format_iso8601(log.timestamps[i]) << ',' << format_double(log.co2[i]) << ','
        << log.occupants[i] << '\n';
  }
}

LabeledLog read_series_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  LabeledLog log;
  for_each_row(in, kSeriesHeader, 4, [&](const auto& f, std::size_t line) {
    const double ts = parse_number<double>(f[0], line, "timestamp_s");
    const double co2 = parse_number<double>(f[1], line, "co2_ppm");
    const int occ = parse_number<int>(f[2], line, "occ");
    parse_number<int>(f[3], line, "window");
    if (co2 < 0.0) throw ParseError(line, "negative co2_ppm");
    if (!log.timestamps.empty() && ts <= log.timestamps.back()) {
      throw ParseError(line, "timestamps must be strictly increasing");
    }
    log.timestamps.push_back(ts);
    log.co2.push_back(co2);
    log.occupants.push_back(occ);
  });
  return log;
}

void write_series_csv(const std::filesystem::path& path, const Co2Series& series,
                      const std::vector<OccupancyTrace>& traces) {
  auto out = open_output(path);
  out << kSeriesHeader << '\n';
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    const double t = series.time_at(i);
    const auto minute = static_cast<std::size_t>(std::floor(t / 60.0));
    const auto& tr = traces.at(minute / kMinutesPerDay);
    const std::size_t m = minute % kMinutesPerDay;
    out << format_double(t) << ',' << format_double(series.values[i]) << ','
        << static_cast<int>(tr.occ[m]) << ',' << static_cast<int>(tr.window[m]) << '\n';
  }
}

LabeledLog read_any_csv(const std::filesystem::path& path) {
  std::string header;
  {
    auto in = open_input(path);
    std::getline(in, header);
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header == kSensorHeader) return read_sensor_csv(path);
  if (header == kSeriesHeader) return read_series_csv(path);
  throw ParseError(1, "unrecognized header '" + header + "'");
}

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<OccupancyTrace>& traces) {
  auto out = open_output(path);
  out << kTraceHeader << '\n';
  for (const auto& tr : traces) {
    for (int m = 0; m < kMinutesPerDay; ++m) {
      out << tr.day_index << ',' << m << ',' << static_cast<int>(tr.occ[m]) << ','
          << static_cast<int>(tr.window[m]) << ',' << format_double(tr.vent_multiplier[m])
          << '\n';
    }
  }
}

void write_samples(const std::filesystem::path& path, const WindowSet& samples) {
  auto out = open_output(path);
  for (std::size_t k = 1; k <= samples.length(); ++k) out << 'v' << k << ',';
  out << "label\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (double v : samples.inputs(i)) out << format_double(v) << ',';
    out << static_cast<int>(samples.label(i)) << '\n';
  }
}

WindowSet read_samples(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(1, "missing header");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto cols = split_fields(header);
  if (cols.size() < 2 || cols.back() != "label") throw ParseError(1, "expected v1..vN,label header");
  const std::size_t length = cols.size() - 1;
  std::ostringstream expected;
  for (std::size_t k = 1; k <= length; ++k) expected << 'v' << k << ',';
  expected << "label";
  if (header != expected.str()) throw ParseError(1, "expected header '" + expected.str() + "'");

  WindowSet out(length);
  std::vector<double> row(length);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_fields(line);
    if (f.size() != length + 1) {
      throw ParseError(line_no, "expected " + std::to_string(length + 1) + " fields");
    }
    for (std::size_t k = 0; k < length; ++k) row[k] = parse_number<double>(f[k], line_no, "value");
    const int label = parse_number<int>(f[length], line_no, "label");
    if (label != 0 && label != 1) throw ParseError(line_no, "label must be 0 or 1");
    out.push_back(row, static_cast<std::uint8_t>(label));
  }
  return out;
}

}  // namespace occusim
