#pragma once

#include <string>
#include <vector>

namespace lrlab {

/// One row of the canonical scan CSV ("t,r_or_k,value").
struct CsvRow {
    double t;
    double r_or_k;
    double value;
};

/// Writes rows with a fixed header and repeatable %.17g formatting, so equal
/// results give byte-identical files.
void write_scan_csv(const std::string& path, const std::string& header,
                    const std::vector<CsvRow>& rows);

/// Minimal static line plot; y against x, one polyline per series.
struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

void write_svg_lineplot(const std::string& path, const std::string& title,
                        const std::string& x_label, const std::string& y_label,
                        const std::vector<PlotSeries>& series);

/// FNV-1a 64-bit over the file bytes, hex-encoded.
std::string file_checksum(const std::string& path);

std::string format_double(double v);

}  // namespace lrlab
