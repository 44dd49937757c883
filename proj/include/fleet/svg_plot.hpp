#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fleet/simulator.hpp"
#include "fleet/trajectory_csv.hpp"

namespace fleet {

enum class PlotMode { Trajectories, DistanceToDest, InterAgentDistances };

inline std::optional<PlotMode> parse_plot_mode(const std::string& s) {
    if (s == "trajectories") return PlotMode::Trajectories;
    if (s == "distance_to_dest") return PlotMode::DistanceToDest;
    if (s == "inter_agent_distances") return PlotMode::InterAgentDistances;
    return std::nullopt;
}

/// Scenario facts the plots need beyond the recorded rows.
struct PlotContext {
    WorldConfig world{};
    std::map<int, Vec2> destinations;
    std::map<int, AgentKind> kinds;
    double convergence_radius{0.1};
};

inline PlotContext plot_context(const Scenario& sc) {
    PlotContext ctx;
    ctx.world = sc.world;
    ctx.convergence_radius = sc.convergence_radius;
    for (const auto& a : sc.agents) {
        ctx.kinds[a.id] = a.kind;
        if (a.destination) ctx.destinations[a.id] = *a.destination;
    }
    return ctx;
}

namespace svg_detail {

inline constexpr double kWidth = 720.0;
inline constexpr double kHeight = 720.0;
inline constexpr double kChartHeight = 480.0;
inline constexpr double kMargin = 60.0;

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    if (s == "-0.000") s = "0.000";
    return s;
}

inline const char* color(int id) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
    const int n = static_cast<int>(sizeof palette / sizeof palette[0]);
    return palette[((id % n) + n) % n];
}

inline std::string header(double w, double h) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n"
           "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"" +
           anchor + "\">" + s + "</text>\n";
}

// rows grouped per agent, in time order
inline std::map<int, std::vector<const TrajectoryRow*>> by_agent(const std::vector<TrajectoryRow>& rows) {
    std::map<int, std::vector<const TrajectoryRow*>> out;
    for (const auto& r : rows) out[r.agent_id].push_back(&r);
    return out;
}

inline std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke,
                            const char* extra = "") {
    if (pts.empty()) return {};
    std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1.5\"" + extra +
                    " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) s += ' ';
        s += num(pts[i].first) + "," + num(pts[i].second);
    }
    return s + "\"/>\n";
}

struct Series {
    int id;
    std::vector<std::pair<double, double>> points;  // (t, value)
};

inline std::string line_chart(const std::vector<Series>& series, const std::string& title,
                              const std::string& ylabel, std::optional<double> reference) {
    double tmax = 0.0, ymax = reference.value_or(0.0);
    for (const auto& s : series)
        for (const auto& [t, v] : s.points) {
            tmax = std::max(tmax, t);
            ymax = std::max(ymax, v);
        }
    if (tmax <= 0.0) tmax = 1.0;
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.05;

    const double x0 = kMargin, x1 = kWidth - 20.0, y0 = kChartHeight - kMargin, y1 = 30.0;
    auto px = [&](double t) { return x0 + (x1 - x0) * t / tmax; };
    auto py = [&](double v) { return y0 - (y0 - y1) * v / ymax; };

    std::string svg = header(kWidth, kChartHeight);
    svg += text(kWidth / 2.0, 18.0, title);
    svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) +
           "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double t = tmax * k / 5.0, v = ymax * k / 5.0;
        svg += text(px(t), y0 + 16.0, num(t));
        svg += text(x0 - 6.0, py(v) + 4.0, num(v), "end");
    }
    svg += text((x0 + x1) / 2.0, y0 + 36.0, "time [s]");
    svg += "<text x=\"16\" y=\"" + num((y0 + y1) / 2.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           num((y0 + y1) / 2.0) + ")\">" + ylabel + "</text>\n";
    if (reference) {
        svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(py(*reference)) + "\" x2=\"" + num(x1) + "\" y2=\"" +
               num(py(*reference)) + "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
    }
    for (const auto& s : series) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [t, v] : s.points) pts.emplace_back(px(t), py(v));
        svg += "<g id=\"agent-" + std::to_string(s.id) + "\">\n" + polyline(pts, color(s.id)) + "</g>\n";
    }
    return svg + "</svg>\n";
}

}  // namespace svg_detail

/// Renders recorded rows as an SVG 1.1 document.
///
/// trajectories: connectivity circle, one path per agent, destination dots
/// and, for each entry of `times`, a marker at every agent's position in the
/// closest recorded row. distance_to_dest: |r_i - r_d| over time for agents
/// with a destination. inter_agent_distances: each agent's nearest-neighbor
/// distance over time, with d_s as a dashed line.
inline std::string plot_svg(const std::vector<TrajectoryRow>& rows, const PlotContext& ctx, PlotMode mode,
                            const std::vector<double>& times = {}) {
    using namespace svg_detail;
    const auto agents = by_agent(rows);

    if (mode == PlotMode::DistanceToDest) {
        std::vector<Series> series;
        for (const auto& [id, rs] : agents) {
            const auto it = ctx.destinations.find(id);
            if (it == ctx.destinations.end()) continue;
            Series s{id, {}};
            for (const auto* r : rs) s.points.emplace_back(r->t, distance(Vec2{r->x, r->y}, it->second));
            series.push_back(std::move(s));
        }
        return line_chart(series, "distance to destination", "|r - r_d| [m]", ctx.convergence_radius);
    }
    if (mode == PlotMode::InterAgentDistances) {
        std::vector<Series> series;
        for (const auto& [id, rs] : agents) {
            Series s{id, {}};
            for (const auto* r : rs)
                if (std::isfinite(r->min_dij)) s.points.emplace_back(r->t, r->min_dij);
            series.push_back(std::move(s));
        }
        return line_chart(series, "nearest inter-agent distance", "min_j |r_i - r_j| [m]",
                          ctx.world.min_separation);
    }

    // trajectories
    const double R = ctx.world.outer_radius;
    const double span = 2.0 * R * 1.05;
    const double scale = (kWidth - 2.0 * 20.0) / span;
    auto px = [&](double x) { return kWidth / 2.0 + (x - ctx.world.center.x) * scale; };
    auto py = [&](double y) { return kHeight / 2.0 - (y - ctx.world.center.y) * scale; };

    std::string svg = header(kWidth, kHeight);
    svg += "<circle cx=\"" + num(px(ctx.world.center.x)) + "\" cy=\"" + num(py(ctx.world.center.y)) + "\" r=\"" +
           num(R * scale) + "\" fill=\"none\" stroke=\"black\"/>\n";
    svg += "<circle cx=\"" + num(px(ctx.world.center.x)) + "\" cy=\"" + num(py(ctx.world.center.y)) + "\" r=\"" +
           num(ctx.world.effective_radius() * scale) + "\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    for (const auto& [id, rs] : agents) {
        std::vector<std::pair<double, double>> pts;
        for (const auto* r : rs) pts.emplace_back(px(r->x), py(r->y));
        const auto kind = ctx.kinds.find(id);
        const bool rogue = kind != ctx.kinds.end() && kind->second == AgentKind::Misbehaving;
        svg += "<g id=\"agent-" + std::to_string(id) + "\">\n" +
               polyline(pts, color(id), rogue ? " stroke-dasharray=\"4,3\"" : "");
        if (const auto d = ctx.destinations.find(id); d != ctx.destinations.end())
            svg += "<circle cx=\"" + num(px(d->second.x)) + "\" cy=\"" + num(py(d->second.y)) +
                   "\" r=\"3\" fill=\"" + color(id) + "\"/>\n";
        svg += "</g>\n";
    }
    for (double tq : times) {
        svg += "<g class=\"snapshot\" data-t=\"" + num(tq) + "\">\n";
        for (const auto& [id, rs] : agents) {
            if (rs.empty()) continue;
            const auto* best = *std::min_element(rs.begin(), rs.end(), [&](auto* a, auto* b) {
                return std::abs(a->t - tq) < std::abs(b->t - tq);
            });
            svg += "<circle cx=\"" + num(px(best->x)) + "\" cy=\"" + num(py(best->y)) + "\" r=\"" +
                   num(ctx.world.body_radius * scale) + "\" fill=\"none\" stroke=\"" + color(id) + "\"/>\n";
        }
        svg += "</g>\n";
    }
    return svg + "</svg>\n";
}

inline std::string plot_svg(const RunOutcome& outcome, const Scenario& sc, PlotMode mode,
                            const std::vector<double>& times = {}) {
    return plot_svg(trajectory_rows(outcome, 1), plot_context(sc), mode, times);
}

}  // namespace fleet
