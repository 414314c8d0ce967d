#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gdpw/common.hpp"

namespace gdpw::container {

// Versioned binary container of named sections. Section order is the write
// order, so identical content written in the same order is byte-identical.
//
// Layout (little endian):
//   magic "GDPWBOX1"
//   u32 schema length, schema bytes        e.g. "gdpw.dataset/v1"
//   u32 section count
//   per section: u32 name length, name, u8 type, u64 payload length, payload

enum class SectionType : uint8_t {
    Bytes = 0,
    F64Matrix = 1,   // u64 rows, u64 cols, row-major doubles
    I64Vector = 2,   // u64 n, n int64
    StringList = 3,  // u64 n, n * (u32 len, bytes)
    SparseF64 = 4,   // u64 rows, u64 cols, u64 nnz, nnz * (u64 row, u64 col, f64)
    F64Vector = 5,   // u64 n, n doubles
};

class Writer {
public:
    explicit Writer(std::string schema) : schema_(std::move(schema)) {}

    void add_bytes(const std::string& name, const std::string& bytes);
    void add_matrix(const std::string& name, const Mat& m);
    void add_i64(const std::string& name, const std::vector<int64_t>& v);
    void add_strings(const std::string& name, const std::vector<std::string>& v);
    void add_sparse(const std::string& name, const SpMat& m);
    void add_f64(const std::string& name, const std::vector<double>& v);

    void save(const std::string& path) const;
    std::string to_bytes() const;

private:
    struct Section {
        std::string name;
        SectionType type;
        std::string payload;
    };
    void add(const std::string& name, SectionType type, std::string payload);
    std::string schema_;
    std::vector<Section> sections_;
};

class Reader {
public:
    static Reader load(const std::string& path);
    static Reader from_bytes(std::string bytes);

    const std::string& schema() const { return schema_; }
    bool has(const std::string& name) const;
    std::vector<std::string> names() const;

    std::string bytes(const std::string& name) const;
    Mat matrix(const std::string& name) const;
    std::vector<int64_t> i64(const std::string& name) const;
    std::vector<std::string> strings(const std::string& name) const;
    SpMat sparse(const std::string& name) const;
    std::vector<double> f64(const std::string& name) const;

private:
    struct Section {
        SectionType type;
        std::string payload;
    };
    const Section& find(const std::string& name, SectionType expected) const;
    std::string schema_;
    std::vector<std::string> order_;  // file order, so callers can rebuild it
    std::map<std::string, Section> sections_;
};

}  // namespace gdpw::container
