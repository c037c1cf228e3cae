#include "stdpp/pattern.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "stdpp/error.hpp"

namespace stdpp {
namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

bool parse_number(std::string_view field, double& out) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    if (field.empty()) return false;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
    return res.ec == std::errc() && res.ptr == field.data() + field.size() && std::isfinite(out);
}

}  // namespace

void Box::validate() const {
    for (double e : {x_extent, y_extent, t_extent}) {
        if (!std::isfinite(e) || e <= 0.0) {
            throw InvalidParameter("window extents must be finite and strictly positive");
        }
    }
}

void PointPattern::validate() const {
    window.validate();
    for (const auto& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.t)) {
            throw InvalidParameter("pattern contains a non-finite coordinate");
        }
        if (!window.contains(p)) throw InvalidParameter("pattern point lies outside the window");
    }
    std::vector<SpaceTimePoint> sorted = points;
    const auto key = [](const SpaceTimePoint& p) { return std::tie(p.x, p.y, p.t); };
    std::sort(sorted.begin(), sorted.end(),
              [&](const auto& a, const auto& b) { return key(a) < key(b); });
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidParameter("pattern contains duplicated points");
    }
}

void write_pattern_csv(std::ostream& os, const PointPattern& pattern) {
    std::string out = "x,y,t\n";
    out.reserve(out.size() + pattern.points.size() * 64);
    for (const auto& p : pattern.points) {
        append_number(out, p.x);
        out += ',';
        append_number(out, p.y);
        out += ',';
        append_number(out, p.t);
        out += '\n';
    }
    os << out;
}

PointPattern read_pattern_csv(std::istream& is, const Box& window) {
    PointPattern pattern;
    pattern.window = window;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            std::string compact;
            for (char c : line) {
                if (c != ' ') compact += c;
            }
            if (compact != "x,y,t") {
                throw ParseError("pattern CSV line " + std::to_string(line_no) +
                                     ": expected header 'x,y,t'",
                                 line_no);
            }
            header_seen = true;
            continue;
        }
        std::string_view rest(line);
        double v[3];
        for (int k = 0; k < 3; ++k) {
            const auto comma = rest.find(',');
            const bool last = k == 2;
            if (last != (comma == std::string_view::npos) ||
                !parse_number(rest.substr(0, comma), v[k])) {
                throw ParseError("pattern CSV line " + std::to_string(line_no) +
                                     ": expected three finite numbers",
                                 line_no);
            }
            if (!last) rest.remove_prefix(comma + 1);
        }
        SpaceTimePoint p{v[0], v[1], v[2]};
        if (!window.contains(p)) {
            throw ParseError("pattern CSV line " + std::to_string(line_no) +
                                 ": point lies outside the window",
                             line_no);
        }
        pattern.points.push_back(p);
    }
    if (!header_seen) throw ParseError("pattern CSV: missing header", line_no);
    return pattern;
}

nlohmann::json to_json(const Box& box) {
    return {{"x_extent", box.x_extent}, {"y_extent", box.y_extent}, {"t_extent", box.t_extent}};
}

Box box_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidParameter("window: expected a JSON object");
    Box b;
    try {
        b.x_extent = j.at("x_extent").get<double>();
        b.y_extent = j.at("y_extent").get<double>();
        b.t_extent = j.at("t_extent").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("window: ") + e.what());
    }
    b.validate();
    return b;
}

}  // namespace stdpp
