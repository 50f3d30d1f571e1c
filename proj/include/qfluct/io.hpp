#ifndef QFLUCT_IO_HPP
#define QFLUCT_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "qfluct/types.hpp"

namespace qf {

// Shortest round-trip decimal form, locale independent.
std::string format_real(Real x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
};

std::string csv_escape(const std::string& field);
// RFC 4180 body followed by "# config_hash=<hash>".
std::string render_csv(const CsvTable& t, const std::string& hash);
void write_csv(const std::string& path, const CsvTable& t, const std::string& hash);

void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const nlohmann::ordered_json& j);

// Raw little-endian float64 / interleaved complex128, row-major, with a JSON
// sidecar describing dtype and shape.  `base` gets .bin and .json appended.
void write_array(const std::string& base, const RMat& a, nlohmann::ordered_json meta = {});
void write_array(const std::string& base, const CMat& a, nlohmann::ordered_json meta = {});

struct RawArray {
    std::string dtype;
    std::vector<long> shape;
    std::vector<Real> data;  // complex stored as (re, im) pairs
};
RawArray read_array(const std::string& base);

void ensure_directory(const std::string& dir);

}  // namespace qf

#endif  // QFLUCT_IO_HPP
