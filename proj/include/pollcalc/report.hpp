#pragma once

// CSV tables (RFC 4180 quoting, '.' decimal point) and run provenance.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace pollcalc {

inline std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Shortest round-trip-safe text is not needed for plotting; 12 significant
/// digits keep files small and locale-independent.
inline std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    class Row {
    public:
        Row& operator<<(const std::string& s)
        {
            cells_.push_back(s);
            return *this;
        }
        Row& operator<<(const char* s) { return *this << std::string(s); }
        Row& operator<<(double v) { return *this << format_number(v); }
        Row& operator<<(int v) { return *this << std::to_string(v); }
        Row& operator<<(long v) { return *this << std::to_string(v); }
        Row& operator<<(std::size_t v) { return *this << std::to_string(v); }
        Row& operator<<(bool v) { return *this << std::string(v ? "pass" : "fail"); }

    private:
        friend class CsvTable;
        std::vector<std::string> cells_;
    };

    Row& row()
    {
        rows_.emplace_back();
        return rows_.back();
    }

    std::size_t size() const noexcept { return rows_.size(); }

    static std::string quote(const std::string& cell)
    {
        if (cell.find_first_of(",\"\r\n") == std::string::npos)
            return cell;
        std::string out = "\"";
        for (char c : cell) {
            if (c == '"')
                out += '"';
            out += c;
        }
        return out + "\"";
    }

    void write(std::ostream& os) const
    {
        write_line(os, header_);
        for (const auto& r : rows_)
            write_line(os, r.cells_);
    }

    std::string str() const
    {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (c)
                    out += ',';
                out += quote(cells[c]);
            }
            out += "\r\n";
        };
        line(header_);
        for (const auto& r : rows_)
            line(r.cells_);
        return out;
    }

private:
    static void write_line(std::ostream& os, const std::vector<std::string>& cells)
    {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c)
                os << ',';
            os << quote(cells[c]);
        }
        os << "\r\n";
    }

    std::vector<std::string> header_;
    std::vector<Row> rows_;
};

#ifndef POLLCALC_VERSION
#define POLLCALC_VERSION "0.0.0"
#endif

inline constexpr std::string_view tool_version = POLLCALC_VERSION;

} // namespace pollcalc
