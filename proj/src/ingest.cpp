#include "trajmode/ingest.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "trajmode/errors.hpp"
#include "trajmode/table_io.hpp"

namespace trajmode {

namespace {

constexpr std::array<std::string_view, 12> kModeNames = {
    "walk", "bike", "bus", "car", "taxi", "subway", "train", "driving", "airplane", "boat", "run", "motorcycle",
};

// Days between 1899-12-30 (the spreadsheet serial epoch used by PLT files) and 1970-01-01.
constexpr double kSerialEpochOffsetDays = 25569.0;

std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::optional<unsigned> parse_unsigned(std::string_view s) {
  const auto v = parse_int(s);
  if (!v || *v < 0) return std::nullopt;
  return static_cast<unsigned>(*v);
}

// Parses "yyyy<sep>mm<sep>dd" and "hh:mm:ss".
std::optional<Timestamp> parse_date_time(std::string_view date, char date_sep, std::string_view time) {
  const auto d = split(trim(date), date_sep);
  const auto t = split(trim(time), ':');
  if (d.size() != 3 || t.size() != 3) return std::nullopt;
  const auto year = parse_int(d[0]);
  const auto month = parse_unsigned(d[1]);
  const auto day = parse_unsigned(d[2]);
  const auto hour = parse_unsigned(t[0]);
  const auto minute = parse_unsigned(t[1]);
  const auto second = parse_unsigned(t[2]);
  if (!year || !month || !day || !hour || !minute || !second) return std::nullopt;
  return make_timestamp(static_cast<int>(*year), *month, *day, *hour, *minute, *second);
}

std::vector<std::string_view> lines_of(std::string_view content) {
  std::vector<std::string_view> lines;
  if (content.empty()) return lines;
  for (auto line : split(content, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
  }
  // A trailing newline produces one empty tail element.
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(TransportMode mode) noexcept {
  return kModeNames[static_cast<std::size_t>(mode)];
}

std::optional<TransportMode> parse_transport_mode(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == text) return static_cast<TransportMode>(i);
  }
  return std::nullopt;
}

std::optional<Timestamp> make_timestamp(int year, unsigned month, unsigned day, unsigned hour,
                                        unsigned minute, unsigned second) noexcept {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * kSecondsPerDay + hour * 3600 + minute * 60 + second;
}

std::int64_t day_of(Timestamp t) noexcept { return floor_div(t, kSecondsPerDay); }

std::string format_day(std::int64_t day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(Timestamp t, char date_sep, char joiner) {
  using namespace std::chrono;
  const std::int64_t day = day_of(t);
  const std::int64_t secs = t - day * kSecondsPerDay;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04d%c%02u%c%02u%c%02lld:%02lld:%02lld", static_cast<int>(ymd.year()),
                date_sep, static_cast<unsigned>(ymd.month()), date_sep, static_cast<unsigned>(ymd.day()),
                joiner, static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

// --- PLT ---------------------------------------------------------------------

PltParseResult parse_plt(std::string_view content) {
  constexpr std::size_t kHeaderLines = 6;
  const auto lines = lines_of(content);
  if (lines.size() < kHeaderLines) {
    throw DataError("plt: expected 6 header lines, found " + std::to_string(lines.size()));
  }
  PltParseResult result;
  for (std::size_t i = kHeaderLines; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    auto reject = [&](std::string_view why) {
      ++result.malformed_lines;
      result.diagnostics.push_back("line " + std::to_string(i + 1) + ": " + std::string(why));
    };
    if (fields.size() != 7) {
      reject("expected 7 fields");
      continue;
    }
    const auto lat = parse_double(fields[0]);
    const auto lon = parse_double(fields[1]);
    if (!lat || !lon) {
      reject("unparseable coordinate");
      continue;
    }
    if (!GeoCoordinate::is_valid(*lon, *lat)) {
      reject("coordinate out of range");
      continue;
    }
    const auto ts = parse_date_time(fields[5], '-', fields[6]);
    if (!ts) {
      reject("unparseable date/time");
      continue;
    }
    result.points.push_back({GeoCoordinate{*lon, *lat}, *ts});
  }
  return result;
}

std::string serialize_plt(std::span<const TrajectoryPoint> points) {
  std::string out =
      "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n"
      "0,2,255,My Track,0,0,2,8421376\n0\n";
  for (const auto& p : points) {
    const double serial = kSerialEpochOffsetDays + static_cast<double>(p.timestamp) / kSecondsPerDay;
    const std::string stamp = format_timestamp(p.timestamp, '-', ',');
    out += format_double(p.coordinate.latitude());
    out += ',';
    out += format_double(p.coordinate.longitude());
    out += ",0,-777,";
    out += format_double(serial);
    out += ',';
    out += stamp;
    out += '\n';
  }
  return out;
}

// --- labels ------------------------------------------------------------------

LabelParseResult parse_labels(std::string_view content) {
  LabelParseResult result;
  const auto lines = lines_of(content);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    auto reject = [&](std::string_view why) {
      ++result.rejected_rows;
      result.diagnostics.push_back("line " + std::to_string(i + 1) + ": " + std::string(why));
    };
    if (fields.size() != 3) {
      reject("expected 3 tab-separated fields");
      continue;
    }
    auto parse_instant = [](std::string_view s) -> std::optional<Timestamp> {
      const auto parts = split(trim(s), ' ');
      if (parts.size() != 2) return std::nullopt;
      return parse_date_time(parts[0], '/', parts[1]);
    };
    const auto start = parse_instant(fields[0]);
    const auto end = parse_instant(fields[1]);
    if (!start || !end) {
      reject("unparseable instant");
      continue;
    }
    if (*start >= *end) {
      reject("start is not before end");
      continue;
    }
    LabelInterval interval{*start, *end, std::string(trim(fields[2]))};
    if (!interval.mode()) {
      ++result.unknown_modes;
      result.diagnostics.push_back("line " + std::to_string(i + 1) + ": unknown mode '" +
                                   interval.mode_tag + "' kept as raw tag");
    }
    result.intervals.push_back(std::move(interval));
  }
  return result;
}

std::string serialize_labels(std::span<const LabelInterval> intervals) {
  std::string out = "Start Time\tEnd Time\tTransportation Mode\n";
  for (const auto& iv : intervals) {
    out += format_timestamp(iv.start, '/', ' ');
    out += '\t';
    out += format_timestamp(iv.end, '/', ' ');
    out += '\t';
    out += iv.mode_tag;
    out += '\n';
  }
  return out;
}

// --- cleaning, joining, segmentation ----------------------------------------

std::vector<TrajectoryPoint> clean_timestamps(std::span<const TrajectoryPoint> points) {
  std::vector<TrajectoryPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (out.empty() || p.timestamp > out.back().timestamp) out.push_back(p);
  }
  return out;
}

std::vector<LabeledPoint> join_labels(std::span<const TrajectoryPoint> points,
                                      std::span<const LabelInterval> intervals) {
  std::vector<std::size_t> by_start(intervals.size());
  for (std::size_t i = 0; i < by_start.size(); ++i) by_start[i] = i;
  std::ranges::stable_sort(by_start, {}, [&](std::size_t i) { return intervals[i].start; });

  // Sweep in time order; `active` holds intervals whose start has passed, keyed
  // by file index so the earliest-listed containing interval wins.
  std::set<std::pair<Timestamp, std::size_t>> active_by_end;
  std::set<std::size_t> active;
  std::size_t next = 0;
  std::vector<LabeledPoint> out;
  Timestamp prev = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    if (k > 0 && p.timestamp <= prev) {
      throw DomainError("join_labels: points must be strictly increasing in time");
    }
    prev = p.timestamp;
    while (next < by_start.size() && intervals[by_start[next]].start <= p.timestamp) {
      const std::size_t idx = by_start[next++];
      active_by_end.emplace(intervals[idx].end, idx);
      active.insert(idx);
    }
    while (!active_by_end.empty() && active_by_end.begin()->first < p.timestamp) {
      active.erase(active_by_end.begin()->second);
      active_by_end.erase(active_by_end.begin());
    }
    if (!active.empty()) out.push_back({p, intervals[*active.begin()].mode_tag});
  }
  return out;
}

double Segment::length_m() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    total += haversine_distance(points[i - 1].coordinate, points[i].coordinate);
  }
  return total;
}

SegmentationResult segment(std::span<const LabeledPoint> points, const std::string& user_id) {
  SegmentationResult result;
  std::size_t begin = 0;
  auto flush = [&](std::size_t end) {
    const std::size_t count = end - begin;
    if (count == 0) return;
    if (count < kMinSegmentPoints) {
      ++result.discarded_runs;
      result.discarded_points += count;
      return;
    }
    Segment seg;
    seg.user_id = user_id;
    seg.label = points[begin].label;
    seg.day = day_of(points[begin].point.timestamp);
    seg.points.reserve(count);
    for (std::size_t i = begin; i < end; ++i) seg.points.push_back(points[i].point);
    result.segments.push_back(std::move(seg));
  };
  for (std::size_t i = 1; i <= points.size(); ++i) {
    const bool boundary = i == points.size() || points[i].label != points[begin].label ||
                          day_of(points[i].point.timestamp) != day_of(points[begin].point.timestamp);
    if (boundary) {
      flush(i);
      begin = i;
    }
  }
  return result;
}

// --- label schemes -----------------------------------------------------------

LabelScheme parse_label_scheme(std::string_view name) {
  if (name == "identity") return LabelScheme::identity;
  if (name == "dabiri5") return LabelScheme::dabiri5;
  if (name == "endo7") return LabelScheme::endo7;
  throw ConfigError("unknown label scheme '" + std::string(name) + "' (expected identity, dabiri5, endo7)");
}

std::string_view to_string(LabelScheme scheme) noexcept {
  switch (scheme) {
    case LabelScheme::identity: return "identity";
    case LabelScheme::dabiri5: return "dabiri5";
    case LabelScheme::endo7: return "endo7";
  }
  return "identity";
}

std::optional<std::string> map_label(std::string_view label, LabelScheme scheme) {
  const auto mode = parse_transport_mode(label);
  if (!mode) return std::nullopt;
  switch (scheme) {
    case LabelScheme::identity:
      return std::string(label);
    case LabelScheme::dabiri5:
      switch (*mode) {
        case TransportMode::walk: return "walk";
        case TransportMode::bike: return "bike";
        case TransportMode::bus: return "bus";
        case TransportMode::car:
        case TransportMode::taxi:
        case TransportMode::driving: return "driving";
        case TransportMode::subway:
        case TransportMode::train: return "train";
        default: return std::nullopt;
      }
    case LabelScheme::endo7:
      switch (*mode) {
        case TransportMode::walk: return "walking";
        case TransportMode::bus: return "bus";
        case TransportMode::car: return "car";
        case TransportMode::bike: return "bike";
        case TransportMode::taxi: return "taxi";
        case TransportMode::subway: return "subway";
        case TransportMode::train: return "train";
        default: return std::nullopt;
      }
  }
  return std::nullopt;
}

std::vector<Segment> merge_labels(std::vector<Segment> segments, LabelScheme scheme) {
  std::vector<Segment> out;
  out.reserve(segments.size());
  for (auto& seg : segments) {
    if (auto mapped = map_label(seg.label, scheme)) {
      seg.label = std::move(*mapped);
      out.push_back(std::move(seg));
    }
  }
  return out;
}

// --- segment store -----------------------------------------------------------

void write_segment_store(std::ostream& out, std::span<const Segment> segments) {
  for (const auto& seg : segments) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : seg.points) {
      pts.push_back({p.coordinate.longitude(), p.coordinate.latitude(), p.timestamp});
    }
    const nlohmann::json record = {
        {"user_id", seg.user_id}, {"label", seg.label}, {"day", format_day(seg.day)}, {"points", std::move(pts)}};
    out << record.dump() << '\n';
  }
}

std::vector<Segment> read_segment_store(std::istream& in) {
  std::vector<Segment> segments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      Segment seg;
      seg.user_id = record.at("user_id").get<std::string>();
      seg.label = record.at("label").get<std::string>();
      for (const auto& p : record.at("points")) {
        if (p.size() != 3) throw DataError("point must be [lon,lat,epoch_seconds]");
        seg.points.push_back({GeoCoordinate{p[0].get<double>(), p[1].get<double>()}, p[2].get<Timestamp>()});
      }
      if (seg.points.empty()) throw DataError("segment has no points");
      seg.day = day_of(seg.points.front().timestamp);
      if (record.at("day").get<std::string>() != format_day(seg.day)) {
        throw DataError("day field does not match first point");
      }
      segments.push_back(std::move(seg));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("segment store line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DataError("segment store line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("segment store line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return segments;
}

// --- dataset walk ------------------------------------------------------------

DatasetIngest ingest_user(const std::string& user_id, std::span<const std::string> plt_contents,
                          std::string_view labels_content) {
  DatasetIngest report;
  report.users = 1;
  std::vector<TrajectoryPoint> raw;
  for (const auto& content : plt_contents) {
    auto parsed = parse_plt(content);
    ++report.plt_files;
    report.malformed_lines += parsed.malformed_lines;
    raw.insert(raw.end(), parsed.points.begin(), parsed.points.end());
  }
  const auto labels = parse_labels(labels_content);
  report.rejected_label_rows = labels.rejected_rows;
  report.unknown_label_modes = labels.unknown_modes;

  const auto cleaned = clean_timestamps(raw);
  report.dropped_timestamps = raw.size() - cleaned.size();
  const auto labeled = join_labels(cleaned, labels.intervals);
  report.unlabeled_points = cleaned.size() - labeled.size();
  auto seg = segment(labeled, user_id);
  report.discarded_runs = seg.discarded_runs;
  report.segments = std::move(seg.segments);
  return report;
}

DatasetIngest ingest_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("dataset root not found: " + root.string());
  fs::path base = root;
  if (fs::is_directory(root / "Data")) base = root / "Data";

  std::vector<fs::path> users;
  for (const auto& entry : fs::directory_iterator(base)) {
    if (entry.is_directory()) users.push_back(entry.path());
  }
  std::ranges::sort(users);

  DatasetIngest total;
  for (const auto& dir : users) {
    const std::string user_id = dir.filename().string();
    if (!fs::exists(dir / "labels.txt") || !fs::is_directory(dir / "Trajectory")) {
      ++total.users_without_labels;
      continue;
    }
    std::vector<fs::path> plts;
    for (const auto& entry : fs::directory_iterator(dir / "Trajectory")) {
      if (entry.is_regular_file() && entry.path().extension() == ".plt") plts.push_back(entry.path());
    }
    std::ranges::sort(plts);
    std::vector<std::string> contents;
    contents.reserve(plts.size());
    for (const auto& p : plts) contents.push_back(read_file(p));

    auto one = ingest_user(user_id, contents, read_file(dir / "labels.txt"));
    total.users += one.users;
    total.plt_files += one.plt_files;
    total.malformed_lines += one.malformed_lines;
    total.rejected_label_rows += one.rejected_label_rows;
    total.unknown_label_modes += one.unknown_label_modes;
    total.dropped_timestamps += one.dropped_timestamps;
    total.unlabeled_points += one.unlabeled_points;
    total.discarded_runs += one.discarded_runs;
    std::ranges::move(one.segments, std::back_inserter(total.segments));
  }
  return total;
}

}  // namespace trajmode
