#include "qfluct/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace qf {

std::string format_real(Real x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != header.size()) throw Error(ErrorKind::Contract, "CsvTable: row width differs from header");
    rows.push_back(std::move(row));
}

std::string csv_escape(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string q = "\"";
    for (char c : f) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::string render_csv(const CsvTable& t, const std::string& hash) {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
        for (size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_escape(r[i]);
        out += "\r\n";
    };
    line(t.header);
    for (auto& r : t.rows) line(r);
    out += "# config_hash=" + hash + "\r\n";
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Validation, "cannot write '" + path + "'");
    f << text;
    if (!f) throw Error(ErrorKind::Numeric, "write failed for '" + path + "'");
}

void write_csv(const std::string& path, const CsvTable& t, const std::string& hash) {
    write_text(path, render_csv(t, hash));
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

namespace {

void put_le(std::string& out, Real x) {
    static_assert(sizeof(Real) == 8);
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    out.append(reinterpret_cast<const char*>(&u), 8);
}

Real get_le(const char* p) {
    std::uint64_t u;
    std::memcpy(&u, p, 8);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    Real x;
    std::memcpy(&x, &u, 8);
    return x;
}

void write_raw(const std::string& base, const std::string& bytes, const std::string& dtype, long rows, long cols,
               nlohmann::ordered_json meta) {
    write_text(base + ".bin", bytes);
    nlohmann::ordered_json j;
    j["dtype"] = dtype;
    j["byte_order"] = "little";
    j["order"] = "row-major";
    j["shape"] = {rows, cols};
    j["file"] = std::filesystem::path(base + ".bin").filename().string();
    if (!meta.is_null()) j["meta"] = meta;
    write_json(base + ".json", j);
}

}  // namespace

void write_array(const std::string& base, const RMat& a, nlohmann::ordered_json meta) {
    std::string b;
    b.reserve(a.size() * 8);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) put_le(b, a(i, j));
    write_raw(base, b, "float64", a.rows(), a.cols(), std::move(meta));
}

void write_array(const std::string& base, const CMat& a, nlohmann::ordered_json meta) {
    std::string b;
    b.reserve(a.size() * 16);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            put_le(b, a(i, j).real());
            put_le(b, a(i, j).imag());
        }
    write_raw(base, b, "complex128", a.rows(), a.cols(), std::move(meta));
}

RawArray read_array(const std::string& base) {
    std::ifstream js(base + ".json");
    if (!js) throw Error(ErrorKind::Validation, "cannot read '" + base + ".json'");
    auto j = nlohmann::json::parse(js);
    RawArray r;
    r.dtype = j.at("dtype").get<std::string>();
    r.shape = j.at("shape").get<std::vector<long>>();
    std::ifstream bin(base + ".bin", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    long count = 1;
    for (long s : r.shape) count *= s;
    if (r.dtype == "complex128") count *= 2;
    if (static_cast<long>(bytes.size()) != 8 * count) throw Error(ErrorKind::Validation, "raw array size mismatch");
    r.data.resize(count);
    for (long i = 0; i < count; ++i) r.data[i] = get_le(bytes.data() + 8 * i);
    return r;
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Validation, "cannot create output directory '" + dir + "': " + ec.message());
}

}  // namespace qf
