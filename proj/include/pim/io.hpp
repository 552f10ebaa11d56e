#pragma once

#include "pim/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pim {

namespace detail {

/// Line-oriented reader: skips blank lines and '#' comments, splits on
/// whitespace, and remembers line numbers for error messages.
class LineReader {
public:
    explicit LineReader(std::istream& in) {
        std::string line;
        int number = 0;
        while (std::getline(in, line)) {
            ++number;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            std::vector<std::string> tokens;
            for (std::string tok; ss >> tok;) tokens.push_back(tok);
            if (!tokens.empty()) lines_.push_back({number, std::move(tokens)});
        }
        last_line_ = number;
    }

    bool done() const { return pos_ >= lines_.size(); }

    const std::vector<std::string>& next(const std::string& section) {
        if (done()) throw ParseError("unexpected end of file, missing " + section, last_line_ + 1);
        current_ = lines_[pos_].number;
        return lines_[pos_++].tokens;
    }

    const std::vector<std::string>& peek() const { return lines_[pos_].tokens; }
    int line() const { return current_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, current_); }

    double real(const std::string& tok) const {
        double v = 0.0;
        const auto* end = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(tok.data(), end, v);
        if (ec != std::errc() || ptr != end) fail("expected a real number, got '" + tok + "'");
        if (!std::isfinite(v)) fail("non-finite coordinate '" + tok + "'");
        return v;
    }

    long integer(const std::string& tok) const {
        long v = 0;
        const auto* end = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(tok.data(), end, v);
        if (ec != std::errc() || ptr != end) fail("expected an integer, got '" + tok + "'");
        return v;
    }

    Index index(const std::string& tok, Index bound) const {
        const long v = integer(tok);
        if (v < 0 || v >= bound) fail("index " + tok + " out of range [0, " + std::to_string(bound) + ")");
        return static_cast<Index>(v);
    }

    long count(const std::string& tok) const {
        const long v = integer(tok);
        if (v < 0) fail("negative count '" + tok + "'");
        return v;
    }

private:
    struct Line {
        int number;
        std::vector<std::string> tokens;
    };
    std::vector<Line> lines_;
    std::size_t pos_ = 0;
    int current_ = 0;
    int last_line_ = 0;
};

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

inline void expect_tokens(const LineReader& r, const std::vector<std::string>& toks, std::size_t n,
                          const std::string& what) {
    if (toks.size() != n)
        r.fail(what + " expects " + std::to_string(n) + " values, got " + std::to_string(toks.size()));
}

inline void write_point(std::ostream& out, const Point& p, int dims) {
    for (int c = 0; c < dims; ++c) out << (c ? " " : "") << fmt_real(p[c]);
    out << '\n';
}

} // namespace detail

// ---- OFF (triangle meshes) ------------------------------------------------

inline SimplicialMesh read_off(std::istream& in) {
    detail::LineReader r(in);
    auto header = r.next("OFF header");
    if (header[0] != "OFF") r.fail("expected 'OFF' header");
    std::vector<std::string> counts(header.begin() + 1, header.end());
    if (counts.empty()) counts = r.next("OFF counts");
    if (counts.size() < 2) r.fail("OFF counts line needs vertex and face counts");
    const long nv = r.count(counts[0]);
    const long nf = r.count(counts[1]);

    SimplicialMesh mesh;
    mesh.intrinsic_dim = 2;
    bool planar = true;
    for (long i = 0; i < nv; ++i) {
        const auto& t = r.next("vertex section");
        if (t.size() < 3) r.fail("vertex line needs 3 coordinates");
        Point p(r.real(t[0]), r.real(t[1]), r.real(t[2]));
        planar = planar && p.z() == 0.0;
        mesh.vertices.push_back(p);
    }
    for (long f = 0; f < nf; ++f) {
        const auto& t = r.next("face section");
        if (r.integer(t[0]) != 3) r.fail("only triangular faces are supported");
        if (t.size() < 4) r.fail("face line needs 3 indices");
        const Index bound = static_cast<Index>(nv);
        mesh.cells.push_back({r.index(t[1], bound), r.index(t[2], bound), r.index(t[3], bound), -1});
    }
    if (!r.done()) {
        r.next("");
        r.fail("trailing data after face section");
    }
    mesh.ambient_dim = planar ? 2 : 3;
    mesh.boundary_cells = exterior_facets(mesh);
    return mesh;
}

inline void write_off(std::ostream& out, const SimplicialMesh& mesh) {
    if (mesh.intrinsic_dim != 2) throw ConfigError("OFF stores triangle meshes only");
    out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.cells.size() << " 0\n";
    for (const auto& p : mesh.vertices) detail::write_point(out, p, 3);
    for (const auto& c : mesh.cells) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
}

// ---- TET (tetrahedral meshes) ---------------------------------------------

inline SimplicialMesh read_tet(std::istream& in) {
    detail::LineReader r(in);
    const auto& header = r.next("TET header");
    if (header[0] != "TET") r.fail("expected 'TET' header");
    detail::expect_tokens(r, header, 4, "TET header");
    const long nv = r.count(header[1]);
    const long nc = r.count(header[2]);
    const long nb = r.count(header[3]);
    SimplicialMesh mesh;
    mesh.ambient_dim = 3;
    mesh.intrinsic_dim = 3;
    const Index bound = static_cast<Index>(nv);
    for (long i = 0; i < nv; ++i) {
        const auto& t = r.next("vertex section");
        detail::expect_tokens(r, t, 3, "vertex line");
        mesh.vertices.emplace_back(r.real(t[0]), r.real(t[1]), r.real(t[2]));
    }
    for (long c = 0; c < nc; ++c) {
        const auto& t = r.next("cell section");
        detail::expect_tokens(r, t, 4, "cell line");
        mesh.cells.push_back({r.index(t[0], bound), r.index(t[1], bound), r.index(t[2], bound), r.index(t[3], bound)});
    }
    for (long b = 0; b < nb; ++b) {
        const auto& t = r.next("boundary face section");
        detail::expect_tokens(r, t, 3, "boundary face line");
        mesh.boundary_cells.push_back({r.index(t[0], bound), r.index(t[1], bound), r.index(t[2], bound)});
    }
    if (!r.done()) {
        r.next("");
        r.fail("trailing data after boundary face section");
    }
    return mesh;
}

inline void write_tet(std::ostream& out, const SimplicialMesh& mesh) {
    if (mesh.intrinsic_dim != 3) throw ConfigError("TET stores tetrahedral meshes only");
    out << "TET " << mesh.vertices.size() << ' ' << mesh.cells.size() << ' ' << mesh.boundary_cells.size() << '\n';
    for (const auto& p : mesh.vertices) detail::write_point(out, p, 3);
    for (const auto& c : mesh.cells) out << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
    for (const auto& b : mesh.boundary_cells) out << b[0] << ' ' << b[1] << ' ' << b[2] << '\n';
}

/// Dispatches on file extension: .off or .tet.
inline SimplicialMesh load_mesh(const std::string& path) {
    auto in = detail::open_in(path);
    if (path.ends_with(".tet")) return read_tet(in);
    if (path.ends_with(".off")) return read_off(in);
    throw ConfigError("unknown mesh extension for '" + path + "' (expected .off or .tet)");
}

inline void save_mesh(const SimplicialMesh& mesh, const std::string& path) {
    auto out = detail::open_out(path);
    if (mesh.intrinsic_dim == 3) write_tet(out, mesh);
    else write_off(out, mesh);
}

// ---- PTS (weighted point clouds) ------------------------------------------

inline PointCloudDomain read_pts(std::istream& in) {
    detail::LineReader r(in);
    const auto& header = r.next("PTS header");
    if (header[0] != "PTS") r.fail("expected 'PTS' header");
    detail::expect_tokens(r, header, 5, "PTS header");
    PointCloudDomain cloud;
    cloud.ambient_dim = static_cast<int>(r.integer(header[1]));
    cloud.intrinsic_dim = static_cast<int>(r.integer(header[2]));
    const long n = r.count(header[3]);
    const long m = r.count(header[4]);
    if (cloud.ambient_dim < 1 || cloud.ambient_dim > 3 || cloud.intrinsic_dim < 1 ||
        cloud.intrinsic_dim > cloud.ambient_dim)
        r.fail("PTS header needs 1 <= k <= d <= 3");
    if (m > n) r.fail("more boundary points than points");
    const std::size_t d = static_cast<std::size_t>(cloud.ambient_dim);
    for (long i = 0; i < n; ++i) {
        const auto& t = r.next("coordinate section");
        detail::expect_tokens(r, t, d, "coordinate line");
        Point p = Point::Zero();
        for (std::size_t c = 0; c < d; ++c) p[static_cast<Index>(c)] = r.real(t[c]);
        cloud.points.push_back(p);
    }
    for (long j = 0; j < m; ++j) {
        const auto& t = r.next("boundary index section");
        detail::expect_tokens(r, t, 1, "boundary index line");
        cloud.boundary_idx.push_back(r.index(t[0], static_cast<Index>(n)));
    }
    auto read_block = [&](long count, const std::string& name) {
        Vector w(count);
        for (long i = 0; i < count; ++i) {
            const auto& t = r.next(name + " block");
            detail::expect_tokens(r, t, 1, name + " entry");
            w[i] = r.real(t[0]);
            if (w[i] < 0.0) r.fail("negative weight in " + name + " block");
        }
        return w;
    };
    while (!r.done()) {
        const auto& t = r.next("weight block");
        if (t.size() == 1 && t[0] == "V" && !cloud.volume_weights) cloud.volume_weights = read_block(n, "V");
        else if (t.size() == 1 && t[0] == "A" && !cloud.boundary_weights) cloud.boundary_weights = read_block(m, "A");
        else r.fail("unexpected line, expected 'V' or 'A' block");
    }
    std::vector<Index> sorted = cloud.boundary_idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ParseError("duplicate boundary index", r.line());
    return cloud;
}

inline void write_pts(std::ostream& out, const PointCloudDomain& cloud) {
    out << "PTS " << cloud.ambient_dim << ' ' << cloud.intrinsic_dim << ' ' << cloud.points.size() << ' '
        << cloud.boundary_idx.size() << '\n';
    for (const auto& p : cloud.points) detail::write_point(out, p, cloud.ambient_dim);
    for (Index s : cloud.boundary_idx) out << s << '\n';
    if (cloud.volume_weights) {
        out << "V\n";
        for (double v : *cloud.volume_weights) out << detail::fmt_real(v) << '\n';
    }
    if (cloud.boundary_weights) {
        out << "A\n";
        for (double a : *cloud.boundary_weights) out << detail::fmt_real(a) << '\n';
    }
}

inline PointCloudDomain load_cloud(const std::string& path) {
    auto in = detail::open_in(path);
    return read_pts(in);
}

inline void save_cloud(const PointCloudDomain& cloud, const std::string& path) {
    auto out = detail::open_out(path);
    write_pts(out, cloud);
}

} // namespace pim
