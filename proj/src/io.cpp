#include "poco/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace poco {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

}  // namespace

PointCloud read_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    PointCloud cloud;
    std::string line;
    std::size_t line_no = 0;
    int arity = 0;  // 3 or 6 once fixed by the first data line
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (vals.size() != 3 && vals.size() != 6)
            fail(path, "line " + std::to_string(line_no) + ": expected 3 or 6 columns");
        if (arity == 0) arity = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != arity)
            fail(path, "line " + std::to_string(line_no) + ": mixed column count");
        cloud.points.push_back({vals[0], vals[1], vals[2]});
        if (arity == 6) {
            Point3 n{vals[3], vals[4], vals[5]};
            const double len = n.norm();
            if (std::abs(len - 1.0) > 1e-3)
                fail(path, "line " + std::to_string(line_no) + ": normal is not unit");
            cloud.normals.push_back(n * (1.0 / len));
        }
    }
    if (cloud.points.empty()) fail(path, "no points");
    return cloud;
}

void write_xyz(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    out.precision(9);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point3& p = cloud.points[i];
        out << p.x << ' ' << p.y << ' ' << p.z;
        if (cloud.has_normals()) {
            const Point3& n = cloud.normals[i];
            out << ' ' << n.x << ' ' << n.y << ' ' << n.z;
        }
        out << '\n';
    }
}

Mesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    Mesh mesh;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Point3 p;
            if (!(ss >> p.x >> p.y >> p.z))
                fail(path, "line " + std::to_string(line_no) + ": bad vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<long> idx;
            std::string tok;
            while (ss >> tok) {
                // Accept "i", "i/..", "i//.." forms; only the vertex index is used.
                idx.push_back(std::stol(tok.substr(0, tok.find('/'))));
            }
            if (idx.size() != 3)
                fail(path, "line " + std::to_string(line_no) + ": only triangles supported");
            std::array<std::uint32_t, 3> tri;
            for (int c = 0; c < 3; ++c) {
                long v = idx[c];
                if (v < 0) v = static_cast<long>(mesh.vertices.size()) + v + 1;
                if (v < 1 || v > static_cast<long>(mesh.vertices.size()))
                    fail(path, "line " + std::to_string(line_no) + ": index out of range");
                tri[c] = static_cast<std::uint32_t>(v - 1);
            }
            mesh.triangles.push_back(tri);
        }
    }
    return mesh;
}

void write_obj(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    out << "# triangle mesh, " << mesh.vertices.size() << " vertices, "
        << mesh.triangles.size() << " faces\n";
    out.precision(9);
    for (const Point3& v : mesh.vertices)
        out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

namespace {

constexpr char kMagic[4] = {'P', 'O', 'C', 'O'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) fail(path, "truncated model file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(std::istream& in, const std::string& path) {
    const std::uint32_t bits = get_u32(in, path);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_model(const PocoModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const PocoConfig& cfg = model.config();
    for (std::size_t v : {cfg.n, cfg.k, cfg.h, cfg.L, cfg.k_enc, cfg.hidden})
        put_u32(out, static_cast<std::uint32_t>(v));
    out.put(cfg.use_normals ? 1 : 0);
    const ParamStore& ps = model.params();
    for (std::size_t i = 0; i < ps.count(); ++i) {
        const Matrix& m = ps.value(i);
        put_u32(out, static_cast<std::uint32_t>(m.rows()));
        put_u32(out, static_cast<std::uint32_t>(m.cols()));
        for (std::size_t j = 0; j < m.size(); ++j)
            put_f32(out, static_cast<float>(m.data()[j]));
    }
}

PocoModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        fail(path, "bad magic (not a POCO model file)");
    const std::uint32_t version = get_u32(in, path);
    if (version != kVersion)
        fail(path, "unsupported model version " + std::to_string(version));
    PocoConfig cfg;
    cfg.n = get_u32(in, path);
    cfg.k = get_u32(in, path);
    cfg.h = get_u32(in, path);
    cfg.L = get_u32(in, path);
    cfg.k_enc = get_u32(in, path);
    cfg.hidden = get_u32(in, path);
    const int flag = in.get();
    if (flag == EOF) fail(path, "truncated model file");
    cfg.use_normals = flag != 0;

    PocoModel model(cfg, 0);
    ParamStore& ps = model.params();
    for (std::size_t i = 0; i < ps.count(); ++i) {
        Matrix& m = ps.value(i);
        const std::uint32_t rows = get_u32(in, path);
        const std::uint32_t cols = get_u32(in, path);
        if (rows != m.rows() || cols != m.cols())
            fail(path, "parameter " + ps.name(i) + " has unexpected shape " +
                           std::to_string(rows) + "x" + std::to_string(cols));
        for (std::size_t j = 0; j < m.size(); ++j)
            m.data()[j] = static_cast<double>(get_f32(in, path));
    }
    char extra;
    if (in.read(&extra, 1)) fail(path, "trailing bytes after parameters");
    return model;
}

std::map<std::string, std::string> read_config(const std::string& path) {
    static const std::set<std::string> allowed = {
        "grid_res",   "grid_step", "tta_views",  "chunk_size", "seed",
        "noise_sigma", "threshold", "rescale_nn", "fs_threshold", "samples",
        "steps",      "points",    "queries",    "lr",          "shape"};
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    std::map<std::string, std::string> config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(path, "line " + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (!allowed.count(key))
            fail(path, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        config[key] = trim(line.substr(eq + 1));
    }
    return config;
}

}  // namespace poco
