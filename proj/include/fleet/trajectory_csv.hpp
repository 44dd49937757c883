#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fleet/errors.hpp"
#include "fleet/simulator.hpp"

namespace fleet {

inline constexpr const char* kTrajectoryHeader = "t,agent_id,x,y,theta,gamma,u,omega,V,min_dij,di0";

/// One CSV row: an agent at one recorded step.
struct TrajectoryRow {
    double t{0.0};
    int agent_id{0};
    double x{0.0}, y{0.0}, theta{0.0}, gamma{0.0};
    double u{0.0}, omega{0.0};
    double V{0.0};
    double min_dij{0.0};
    double di0{0.0};
};

/// Shortest decimal text that parses back to exactly `v`.
inline void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

/// Records 0, stride, 2 stride, ... flattened to rows ordered by (t, agent_id).
inline std::vector<TrajectoryRow> trajectory_rows(const RunOutcome& outcome, std::size_t stride = 10) {
    if (stride == 0) stride = 1;
    std::vector<TrajectoryRow> rows;
    for (std::size_t n = 0; n < outcome.trajectory.size(); n += stride) {
        const StepRecord& rec = outcome.trajectory[n];
        std::vector<const AgentSample*> order;
        for (const auto& s : rec.agents) order.push_back(&s);
        std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });
        for (const AgentSample* s : order)
            rows.push_back({rec.t, s->id, s->state.x, s->state.y, s->state.theta, s->state.gamma,
                            s->command.u, s->command.omega, s->V, s->min_dij, s->di0});
    }
    return rows;
}

inline std::string write_trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    std::string out = kTrajectoryHeader;
    out += '\n';
    for (const auto& r : rows) {
        append_number(out, r.t);
        out += ',';
        out += std::to_string(r.agent_id);
        for (double v : {r.x, r.y, r.theta, r.gamma, r.u, r.omega, r.V, r.min_dij, r.di0}) {
            out += ',';
            append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

inline std::string emit_trajectory(const RunOutcome& outcome, std::size_t stride = 10) {
    return write_trajectory_csv(trajectory_rows(outcome, stride));
}

namespace csv_detail {

inline double parse_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line), "bad number '" + std::string(field) + "'");
    return v;
}

}  // namespace csv_detail

/// Inverse of write_trajectory_csv.
inline std::vector<TrajectoryRow> parse_trajectory_csv(std::string_view text) {
    std::vector<TrajectoryRow> rows;
    std::size_t pos = 0, line = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view ln = text.substr(pos, end - pos);
        if (!ln.empty() && ln.back() == '\r') ln.remove_suffix(1);
        pos = end + 1;
        ++line;
        if (line == 1) {
            if (ln != kTrajectoryHeader) throw ParseError("line 1", "unexpected header");
            continue;
        }
        if (ln.empty()) continue;

        std::vector<std::string_view> f;
        std::size_t s = 0;
        while (true) {
            const std::size_t c = ln.find(',', s);
            f.push_back(ln.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
            if (c == std::string_view::npos) break;
            s = c + 1;
        }
        if (f.size() != 11)
            throw ParseError("line " + std::to_string(line), "expected 11 fields, got " + std::to_string(f.size()));
        TrajectoryRow r;
        r.t = csv_detail::parse_double(f[0], line);
        int id = 0;
        const auto res = std::from_chars(f[1].data(), f[1].data() + f[1].size(), id);
        if (res.ec != std::errc{} || res.ptr != f[1].data() + f[1].size())
            throw ParseError("line " + std::to_string(line), "bad agent_id");
        r.agent_id = id;
        double* dst[] = {&r.x, &r.y, &r.theta, &r.gamma, &r.u, &r.omega, &r.V, &r.min_dij, &r.di0};
        for (int k = 0; k < 9; ++k) *dst[k] = csv_detail::parse_double(f[k + 2], line);
        rows.push_back(r);
    }
    if (line == 0) throw ParseError("line 1", "empty file");
    return rows;
}

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot rename into " + path.string());
    }
}

}  // namespace fleet
