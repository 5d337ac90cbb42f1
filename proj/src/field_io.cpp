#include "obbq/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "obbq/errors.hpp"

namespace obbq {

static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");

namespace {

constexpr char kMagic[6] = {'O', 'B', 'B', 'Q', '1', '\0'};
constexpr std::size_t kHeader = 6 + 8 + 4 + 1 + 1;

template <class T>
void put(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

std::filesystem::path temp_path(const std::filesystem::path& p) {
    return p.string() + ".tmp" + std::to_string(::getpid());
}

}  // namespace

Layout record_layout(const Grid& g, Staggering s, int component) {
    switch (s) {
        case Staggering::Cells: return Layout::cells(g);
        case Staggering::Faces: return Layout::faces(g, component);
        case Staggering::FaceX: return Layout::faces(g, 0);
        case Staggering::FaceY: return Layout::faces(g, 1);
        case Staggering::FaceZ: return Layout::faces(g, 2);
    }
    throw Error(ErrorCode::FormatError, "unknown staggering tag");
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = temp_path(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot rename onto " + path.string());
    }
}

void write_record(const std::filesystem::path& path, const FieldRecord& rec) {
    const int nc = static_cast<int>(rec.components.size());
    if (nc != 1 && nc != 3) throw Error(ErrorCode::InvalidArgument, "field records hold 1 or 3 components");
    std::string out;
    out.append(kMagic, sizeof kMagic);
    put<double>(out, rec.grid.half_width);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.grid.cells));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(nc));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(rec.staggering));
    for (int c = 0; c < nc; ++c) {
        if (rec.components[c].size() != record_layout(rec.grid, rec.staggering, c).size())
            throw Error(ErrorCode::InvalidArgument, "field record component has the wrong size");
        out.append(reinterpret_cast<const char*>(rec.components[c].data()), rec.components[c].size() * sizeof(double));
    }
    write_text_atomic(path, out);
}

FieldRecord read_record(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    if (data.size() < kHeader) throw Error(ErrorCode::FormatError, path.string() + ": truncated header");
    if (std::memcmp(data.data(), kMagic, 4) != 0 || data[5] != '\0')
        throw Error(ErrorCode::FormatError, path.string() + ": bad magic");
    if (data[4] != '1')
        throw Error(ErrorCode::VersionError, path.string() + ": unsupported version '" + std::string(1, data[4]) + "'");
    std::size_t pos = 6;
    const double R = get<double>(data, pos);
    const auto n = get<std::uint32_t>(data, pos);
    const auto nc = get<std::uint8_t>(data, pos);
    const auto tag = get<std::uint8_t>(data, pos);
    if ((nc != 1 && nc != 3) || tag > 4) throw Error(ErrorCode::FormatError, path.string() + ": bad header");
    FieldRecord rec;
    try {
        rec.grid = make_grid(R, static_cast<int>(n));
    } catch (const Error&) {
        throw Error(ErrorCode::FormatError, path.string() + ": invalid grid in header");
    }
    rec.staggering = static_cast<Staggering>(tag);
    std::size_t expected = kHeader;
    for (int c = 0; c < nc; ++c) expected += record_layout(rec.grid, rec.staggering, c).size() * sizeof(double);
    if (data.size() != expected)
        throw Error(ErrorCode::FormatError, path.string() + ": payload size " + std::to_string(data.size()) +
                                                " does not match header (" + std::to_string(expected) + ")");
    for (int c = 0; c < nc; ++c) {
        std::vector<double> v(record_layout(rec.grid, rec.staggering, c).size());
        std::memcpy(v.data(), data.data() + pos, v.size() * sizeof(double));
        pos += v.size() * sizeof(double);
        rec.components.push_back(std::move(v));
    }
    return rec;
}

void write_field(const std::filesystem::path& path, const ScalarField& f) {
    write_record(path, {f.grid, Staggering::Cells, {f.values}});
}

void write_field(const std::filesystem::path& path, const VectorField& f) {
    write_record(path, {f.grid, Staggering::Faces, {f.comp[0], f.comp[1], f.comp[2]}});
}

ScalarField read_scalar(const std::filesystem::path& path) {
    FieldRecord rec = read_record(path);
    if (rec.staggering != Staggering::Cells || rec.components.size() != 1)
        throw Error(ErrorCode::FormatError, path.string() + ": not a cell-centred scalar field");
    ScalarField f(rec.grid);
    f.values = std::move(rec.components[0]);
    return f;
}

VectorField read_vector(const std::filesystem::path& path) {
    FieldRecord rec = read_record(path);
    if (rec.staggering != Staggering::Faces || rec.components.size() != 3)
        throw Error(ErrorCode::FormatError, path.string() + ": not a staggered vector field");
    VectorField f(rec.grid);
    for (int a = 0; a < 3; ++a) f.comp[a] = std::move(rec.components[a]);
    return f;
}

}  // namespace obbq
