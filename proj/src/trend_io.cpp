// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/trend_io.hpp"

#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>

namespace plantbus::rtdb {

void TrendMemoryStream::appendLines(const std::vector<std::string>& lines) {
    std::lock_guard lock(mutex_);
    lines_.insert(lines_.end(), lines.begin(), lines.end());
}

std::vector<std::string> TrendMemoryStream::readLines() const {
    std::lock_guard lock(mutex_);
    return lines_;
}

TrendFileStream::TrendFileStream(std::filesystem::path path) : path_(std::move(path)) {}

void TrendFileStream::appendLines(const std::vector<std::string>& lines) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw SinkWriteError("cannot open trend file for append: " + path_.string());
    for (const auto& line : lines) out << line << '\n';
    out.flush();
    if (!out) throw SinkWriteError("write failed on trend file: " + path_.string());
}

std::vector<std::string> TrendFileStream::readLines() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> lines;
    std::ifstream in(path_, std::ios::binary);
    if (!in) return lines;  // absent file reads as empty
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string formatTrendRecord(const TrendPoint& point) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%" PRId64 ",%" PRId64 ",%.17g,%.17g,%.17g,%" PRIu64,
                  point.variable.name.c_str(), point.interval_start_ms, point.interval_len_ms,
                  point.min, point.max, point.mean, point.count);
    return buf;
}

namespace {

bool parseI64(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

bool parseU64(const std::string& s, std::uint64_t& out) {
    if (s.empty() || s[0] == '-') return false;
    errno = 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

bool parseF64(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (errno == ERANGE || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

}  // namespace

TrendPoint parseTrendRecord(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    if (fields.size() != 7)
        throw MalformedTrendRecordError(line_no, "expected 7 comma-separated fields, got " +
                                                     std::to_string(fields.size()));
    TrendPoint p;
    if (!isValidVariableName(fields[0]))
        throw MalformedTrendRecordError(line_no, "invalid variable name");
    p.variable = VariableId{fields[0], VarKind::raw};
    if (!parseI64(fields[1], p.interval_start_ms))
        throw MalformedTrendRecordError(line_no, "bad interval_start_ms");
    if (!parseI64(fields[2], p.interval_len_ms) || p.interval_len_ms <= 0)
        throw MalformedTrendRecordError(line_no, "bad interval_len_ms");
    if (!parseF64(fields[3], p.min)) throw MalformedTrendRecordError(line_no, "bad min");
    if (!parseF64(fields[4], p.max)) throw MalformedTrendRecordError(line_no, "bad max");
    if (!parseF64(fields[5], p.mean)) throw MalformedTrendRecordError(line_no, "bad mean");
    if (!parseU64(fields[6], p.count) || p.count == 0)
        throw MalformedTrendRecordError(line_no, "bad count");
    return p;
}

std::vector<TrendPoint> readTrendRecords(const TrendRecordStream& source) {
    std::vector<TrendPoint> points;
    std::size_t line_no = 0;
    for (const auto& line : source.readLines()) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        points.push_back(parseTrendRecord(line, line_no));
    }
    return points;
}

TrendWriter::TrendWriter(TrendRecordStream& sink) : sink_(sink) {
    for (const auto& p : readTrendRecords(sink))
        keys_.emplace(p.variable.name, p.interval_start_ms);
}

std::size_t TrendWriter::persist(const std::vector<TrendPoint>& points) {
    // Validate the whole batch before writing anything.
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i - 1];
        const auto& b = points[i];
        if (std::tie(a.variable.name, a.interval_start_ms) >
            std::tie(b.variable.name, b.interval_start_ms))
            throw std::invalid_argument("persistTrends: points not sorted by (variable, interval_start)");
    }
    std::vector<std::string> lines;
    std::set<std::pair<std::string, std::int64_t>> batch;
    for (const auto& p : points) {
        auto key = std::make_pair(p.variable.name, p.interval_start_ms);
        if (keys_.count(key) || !batch.insert(key).second)
            throw DuplicateTrendKeyError("duplicate trend key: " + p.variable.name + "@" +
                                         std::to_string(p.interval_start_ms));
        lines.push_back(formatTrendRecord(p));
    }
    if (lines.empty()) return 0;
    sink_.appendLines(lines);
    keys_.insert(batch.begin(), batch.end());
    return lines.size();
}

std::size_t persistTrends(const std::vector<TrendPoint>& points, TrendRecordStream& sink) {
    TrendWriter writer(sink);
    return writer.persist(points);
}

std::vector<TrendPoint> queryTrend(const Store& store, const std::string& variable, std::int64_t t0,
                                   std::int64_t t1, const TrendRecordStream& source) {
    if (t0 > t1) throw InvalidRangeError("queryTrend: t0 > t1");
    auto id = store.find(variable);
    if (!id) throw UnknownVariableError("unknown variable: " + variable);

    std::map<std::int64_t, TrendPoint> merged;
    for (auto& p : readTrendRecords(source)) {
        if (p.variable.name != variable) continue;
        if (p.interval_start_ms >= t1 || p.interval_start_ms + p.interval_len_ms <= t0) continue;
        p.variable = *id;
        merged.insert_or_assign(p.interval_start_ms, std::move(p));
    }
    for (auto& p : store.rollup(variable, t0, t1, store.trendIntervalMs()))
        merged.insert_or_assign(p.interval_start_ms, std::move(p));  // in-memory wins

    std::vector<TrendPoint> out;
    out.reserve(merged.size());
    for (auto& [start, p] : merged) out.push_back(std::move(p));
    return out;
}

}  // namespace plantbus::rtdb
