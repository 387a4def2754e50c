// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <unistd.h>

namespace nk::io {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(uint64_t v) { return std::to_string(v); }

Csv::Csv(std::vector<std::string> header) : width_(header.size()) {
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) text_ += ',';
        text_ += header[i];
    }
    text_ += '\n';
}

void Csv::row(std::vector<std::string> cells) {
    require(cells.size() == width_, "Csv: row width mismatch");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        text_ += cells[i];
    }
    text_ += '\n';
}

void Csv::write(const std::string& path) const { write_file(path, text_); }

namespace {

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series) {
    const double w = 720, h = 440;
    const double ml = 70, mr = 150, mt = 40, mb = 50;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool any = false;
    for (const Series& s : series) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!any) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                any = true;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    ymin = std::min(ymin, 0.0);

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

    std::string out;
    char buf[256];
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" "
           "viewBox=\"0 0 720 440\">\n";
    out += "<rect width=\"720\" height=\"440\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
                  "text-anchor=\"middle\">%s</text>\n",
                  (ml + w - mr) / 2, svg_escape(title).c_str());
    out += buf;

    // axes
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", ml,
                  h - mb, w - mr, h - mb);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", ml,
                  mt, ml, h - mb);
    out += buf;

    // ticks
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
                      "text-anchor=\"middle\">%.4g</text>\n",
                      px(xv), h - mb + 16, xv);
        out += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
                      "text-anchor=\"end\">%.4g</text>\n",
                      ml - 6, py(yv) + 4, yv);
        out += buf;
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\"/>\n",
                      ml, py(yv), w - mr, py(yv));
        out += buf;
    }

    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
                  "text-anchor=\"middle\">%s</text>\n",
                  (ml + w - mr) / 2, h - 12, svg_escape(x_label).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"16\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
                  "text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
                  (mt + h - mb) / 2, (mt + h - mb) / 2, svg_escape(y_label).c_str());
    out += buf;

    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string pts;
        for (size_t i = 0; i < series[si].x.size(); ++i) {
            if (!std::isfinite(series[si].y[i])) continue;
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(series[si].x[i]), py(series[si].y[i]));
            pts += buf;
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.6\" points=\"" + pts + "\"/>\n";
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                      "stroke-width=\"2\"/>\n",
                      w - mr + 10, mt + 14 + 18.0 * si, w - mr + 34, mt + 14 + 18.0 * si, color);
        out += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                      "font-size=\"11\">%s</text>\n",
                      w - mr + 40, mt + 18 + 18.0 * si, svg_escape(series[si].name).c_str());
        out += buf;
    }
    out += "</svg>\n";
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw NumericalError("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw NumericalError("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NumericalError("cannot open: " + path);
    std::string out((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return out;
}

void write_manifest(const std::string& out_dir, const std::string& config_hash,
                    const std::vector<std::string>& artifacts) {
    std::string text = "config_hash=" + config_hash + "\n";
    std::vector<std::string> sorted = artifacts;
    std::sort(sorted.begin(), sorted.end());
    for (const std::string& a : sorted) text += "artifact=" + a + "\n";
    write_file(out_dir + "/manifest.txt", text);
}

DirLock::DirLock(const std::string& dir) {
    std::filesystem::create_directories(dir);
    path_ = dir + "/.neurokalman.lock";
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        path_.clear();
        throw NumericalError("output directory is locked by another run: " + dir);
    }
    ::close(fd);
}

DirLock::~DirLock() {
    if (!path_.empty()) ::unlink(path_.c_str());
}

}  // namespace nk::io
