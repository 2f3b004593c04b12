#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../errors.hpp"

namespace mbscc {

inline constexpr const char* csv_header = "x,m0,m1,approx,m_contraction,error_bps,approx_se_bps,invariant_pdf";
inline constexpr const char* timestamp_prefix = "# timestamp: ";

/// Output file cannot be written or read.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReportRow {
    double x = 0.0;
    double m0 = NAN;
    double m1 = NAN;
    double approx = NAN;
    double m_contraction = NAN;
    double error_bps = NAN;
    double approx_se_bps = NAN;
    double invariant_pdf = NAN;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Rows sorted by x, plus comment metadata (config echo, seed, version, run notes).
struct ComparisonReport {
    std::vector<std::string> comments;  ///< without the leading "# "
    std::string timestamp;              ///< written on its own comment line; empty to omit
    std::vector<ReportRow> rows;
};

/// One value with ten significant digits.
inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const ComparisonReport& report) {
    for (const auto& c : report.comments) out << "# " << c << '\n';
    if (!report.timestamp.empty()) out << timestamp_prefix << report.timestamp << '\n';
    out << csv_header << '\n';
    for (const auto& r : report.rows) {
        out << format_value(r.x) << ',' << format_value(r.m0) << ',' << format_value(r.m1) << ','
            << format_value(r.approx) << ',' << format_value(r.m_contraction) << ',' << format_value(r.error_bps)
            << ',' << format_value(r.approx_se_bps) << ',' << format_value(r.invariant_pdf) << '\n';
    }
}

inline std::string to_csv(const ComparisonReport& report) {
    std::ostringstream s;
    write_csv(s, report);
    return s.str();
}

inline void emit_csv(const ComparisonReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_csv(out, report);
    out.flush();
    if (!out) throw IoError("write to " + path + " failed");
}

/// Reads what write_csv produces. Values come back exactly as printed.
inline ComparisonReport parse_csv(std::istream& in) {
    ComparisonReport report;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind(timestamp_prefix, 0) == 0) {
                report.timestamp = line.substr(std::string(timestamp_prefix).size());
            } else {
                report.comments.push_back(line.size() > 1 && line[1] == ' ' ? line.substr(2) : line.substr(1));
            }
            continue;
        }
        if (!header_seen) {
            if (line != csv_header) throw IoError("unexpected CSV header: " + line);
            header_seen = true;
            continue;
        }
        double v[8];
        std::size_t pos = 0;
        for (int k = 0; k < 8; ++k) {
            const std::size_t end = line.find(',', pos);
            if ((k < 7) == (end == std::string::npos)) throw IoError("malformed CSV row: " + line);
            const std::string field = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
            char* stop = nullptr;
            v[k] = std::strtod(field.c_str(), &stop);
            if (field.empty() || *stop != '\0') throw IoError("malformed CSV value \"" + field + "\"");
            pos = end + 1;
        }
        report.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
    }
    if (!header_seen) throw IoError("CSV header missing");
    return report;
}

inline ComparisonReport read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    return parse_csv(in);
}

}  // namespace mbscc
