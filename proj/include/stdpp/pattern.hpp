#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace stdpp {

struct SpaceTimePoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;

    friend bool operator==(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

/// Observation window [0, x_extent] x [0, y_extent] x [0, t_extent].
struct Box {
    double x_extent = 1.0;
    double y_extent = 1.0;
    double t_extent = 1.0;

    [[nodiscard]] double volume() const { return x_extent * y_extent * t_extent; }
    [[nodiscard]] bool contains(const SpaceTimePoint& p) const {
        return p.x >= 0.0 && p.x <= x_extent && p.y >= 0.0 && p.y <= y_extent && p.t >= 0.0 &&
               p.t <= t_extent;
    }
    /// Throws InvalidParameter unless every extent is finite and positive.
    void validate() const;

    friend bool operator==(const Box&, const Box&) = default;
};

struct PointPattern {
    std::vector<SpaceTimePoint> points;
    Box window;
    std::string seed_provenance;

    /// Throws InvalidParameter if a point is outside the window, non-finite,
    /// or duplicated.
    void validate() const;
};

/// "x,y,t" header, one point per row, shortest round-trip decimal form.
void write_pattern_csv(std::ostream& os, const PointPattern& pattern);
/// Throws ParseError (with the 1-based line number) on malformed rows.
PointPattern read_pattern_csv(std::istream& is, const Box& window);

nlohmann::json to_json(const Box& box);
Box box_from_json(const nlohmann::json& j);

}  // namespace stdpp
