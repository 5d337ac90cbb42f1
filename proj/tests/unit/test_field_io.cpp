#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "obbq/errors.hpp"
#include "obbq/field_io.hpp"

using namespace obbq;

namespace {

std::filesystem::path temp_file(const char* name) { return std::filesystem::temp_directory_path() / name; }

ErrorCode read_code(const std::filesystem::path& p) {
    try {
        read_record(p);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("scalar and vector fields round trip bit for bit") {
    const Grid g = make_grid(3.0, 8);
    const auto s = make_scalar(g, [](const auto& x) { return x[0] - 2.0 * x[1] * x[2] + 1e-300; });
    const auto v = make_vector(g, [](int a, const auto& x) { return a + x[a] * x[(a + 1) % 3]; });
    const auto ps = temp_file("obbq_s.obbq"), pv = temp_file("obbq_v.obbq");
    write_field(ps, s);
    write_field(pv, v);
    const auto s2 = read_scalar(ps);
    const auto v2 = read_vector(pv);
    CHECK(s2.grid == g);
    CHECK(s2.values == s.values);
    for (int a = 0; a < 3; ++a) CHECK(v2.comp[a] == v.comp[a]);
    CHECK_THROWS_AS(read_vector(ps), Error);
    std::filesystem::remove(ps);
    std::filesystem::remove(pv);
}

TEST_CASE("corrupt files are rejected with distinct codes") {
    const Grid g = make_grid(3.0, 8);
    const auto p = temp_file("obbq_bad.obbq");
    write_field(p, ScalarField(g, 1.0));
    std::string bytes;
    {
        std::ifstream in(p, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    auto put = [&](const std::string& b) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out << b;
    };

    std::string v = bytes;
    v[4] = '2';
    put(v);
    CHECK(read_code(p) == ErrorCode::VersionError);

    std::string m = bytes;
    m[0] = 'X';
    put(m);
    CHECK(read_code(p) == ErrorCode::FormatError);

    put(bytes.substr(0, bytes.size() - 8));
    CHECK(read_code(p) == ErrorCode::FormatError);

    std::filesystem::remove(p);
    CHECK(read_code(p) == ErrorCode::IoError);
}
