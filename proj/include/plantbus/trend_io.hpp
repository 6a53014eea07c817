// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "plantbus/rtdb.hpp"

// Append-only trend persistence. One text record per line:
//   variable,interval_start_ms,interval_len_ms,min,max,mean,count
// Reals carry 17 significant digits so a text round-trip is exact. Lines
// beginning with '#' are comments. A malformed line is a hard error carrying
// its 1-based line number.

namespace plantbus::rtdb {

class DuplicateTrendKeyError : public Error {
public:
    using Error::Error;
};

class SinkWriteError : public Error {
public:
    using Error::Error;
};

class MalformedTrendRecordError : public Error {
public:
    MalformedTrendRecordError(std::size_t line_no, const std::string& what)
        : Error("line " + std::to_string(line_no) + ": " + what), line_no_(line_no) {}
    std::size_t lineNumber() const { return line_no_; }

private:
    std::size_t line_no_;
};

/// Append-only stream of line records backing trend persistence.
class TrendRecordStream {
public:
    virtual ~TrendRecordStream() = default;
    virtual void appendLines(const std::vector<std::string>& lines) = 0;
    virtual std::vector<std::string> readLines() const = 0;
};

class TrendMemoryStream final : public TrendRecordStream {
public:
    void appendLines(const std::vector<std::string>& lines) override;
    std::vector<std::string> readLines() const override;

private:
    mutable std::mutex mutex_;
    std::vector<std::string> lines_;
};

class TrendFileStream final : public TrendRecordStream {
public:
    explicit TrendFileStream(std::filesystem::path path);
    void appendLines(const std::vector<std::string>& lines) override;
    std::vector<std::string> readLines() const override;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
};

std::string formatTrendRecord(const TrendPoint& point);
TrendPoint parseTrendRecord(const std::string& line, std::size_t line_no);

/// All records of the stream, in order. Comment lines are skipped; a
/// malformed line raises MalformedTrendRecordError with its line number.
std::vector<TrendPoint> readTrendRecords(const TrendRecordStream& source);

/// Appends each point as one record. Points must arrive sorted ascending by
/// (variable, interval_start); re-appending an existing key is an error and
/// nothing is written. Returns the number of records written.
std::size_t persistTrends(const std::vector<TrendPoint>& points, TrendRecordStream& sink);

/// Stateful variant of persistTrends that loads the sink's keys once and
/// remembers them across calls.
class TrendWriter {
public:
    explicit TrendWriter(TrendRecordStream& sink);
    std::size_t persist(const std::vector<TrendPoint>& points);

private:
    TrendRecordStream& sink_;
    std::set<std::pair<std::string, std::int64_t>> keys_;
};

/// Union of persisted points and the store's in-memory rollup (at the store's
/// trend interval) over [t0, t1), deduplicated by (variable, interval_start)
/// with in-memory winning, ascending by interval_start.
std::vector<TrendPoint> queryTrend(const Store& store, const std::string& variable, std::int64_t t0,
                                   std::int64_t t1, const TrendRecordStream& source);

}  // namespace plantbus::rtdb
