#include "gdpw/container.hpp"

#include <cstring>
#include <fstream>

namespace gdpw::container {

namespace {

constexpr char kMagic[8] = {'G', 'D', 'P', 'W', 'B', 'O', 'X', '1'};

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

struct Cursor {
    const std::string& data;
    size_t pos = 0;

    template <typename T>
    T get() {
        if (pos + sizeof(T) > data.size()) throw FatalError("container: truncated file");
        T v;
        std::memcpy(&v, data.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string get_bytes(size_t n) {
        if (pos + n > data.size()) throw FatalError("container: truncated file");
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void Writer::add(const std::string& name, SectionType type, std::string payload) {
    for (const auto& s : sections_)
        require(s.name != name, "container: duplicate section " + name);
    sections_.push_back({name, type, std::move(payload)});
}

void Writer::add_bytes(const std::string& name, const std::string& bytes) {
    add(name, SectionType::Bytes, bytes);
}

void Writer::add_matrix(const std::string& name, const Mat& m) {
    std::string p;
    put<uint64_t>(p, m.rows());
    put<uint64_t>(p, m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(p, m(i, j));
    add(name, SectionType::F64Matrix, std::move(p));
}

void Writer::add_i64(const std::string& name, const std::vector<int64_t>& v) {
    std::string p;
    put<uint64_t>(p, v.size());
    for (int64_t x : v) put<int64_t>(p, x);
    add(name, SectionType::I64Vector, std::move(p));
}

void Writer::add_strings(const std::string& name, const std::vector<std::string>& v) {
    std::string p;
    put<uint64_t>(p, v.size());
    for (const auto& s : v) {
        put<uint32_t>(p, static_cast<uint32_t>(s.size()));
        p += s;
    }
    add(name, SectionType::StringList, std::move(p));
}

void Writer::add_sparse(const std::string& name, const SpMat& m) {
    std::string p;
    put<uint64_t>(p, m.rows());
    put<uint64_t>(p, m.cols());
    put<uint64_t>(p, static_cast<uint64_t>(m.nonZeros()));
    for (int i = 0; i < m.outerSize(); ++i)
        for (SpMat::InnerIterator it(m, i); it; ++it) {
            put<uint64_t>(p, static_cast<uint64_t>(it.row()));
            put<uint64_t>(p, static_cast<uint64_t>(it.col()));
            put<double>(p, it.value());
        }
    add(name, SectionType::SparseF64, std::move(p));
}

void Writer::add_f64(const std::string& name, const std::vector<double>& v) {
    std::string p;
    put<uint64_t>(p, v.size());
    for (double x : v) put<double>(p, x);
    add(name, SectionType::F64Vector, std::move(p));
}

std::string Writer::to_bytes() const {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put<uint32_t>(out, static_cast<uint32_t>(schema_.size()));
    out += schema_;
    put<uint32_t>(out, static_cast<uint32_t>(sections_.size()));
    for (const auto& s : sections_) {
        put<uint32_t>(out, static_cast<uint32_t>(s.name.size()));
        out += s.name;
        put<uint8_t>(out, static_cast<uint8_t>(s.type));
        put<uint64_t>(out, s.payload.size());
        out += s.payload;
    }
    return out;
}

void Writer::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write file: " + path);
    std::string bytes = to_bytes();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FatalError("short write: " + path);
}

Reader Reader::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_bytes(std::move(bytes));
}

Reader Reader::from_bytes(std::string bytes) {
    Reader r;
    Cursor c{bytes};
    std::string magic = c.get_bytes(sizeof(kMagic));
    require(std::memcmp(magic.data(), kMagic, sizeof(kMagic)) == 0,
            "container: bad magic (not a GDPW container)");
    r.schema_ = c.get_bytes(c.get<uint32_t>());
    uint32_t n = c.get<uint32_t>();
    for (uint32_t i = 0; i < n; ++i) {
        std::string name = c.get_bytes(c.get<uint32_t>());
        auto type = static_cast<SectionType>(c.get<uint8_t>());
        uint64_t len = c.get<uint64_t>();
        require(r.sections_.count(name) == 0, "container: duplicate section " + name);
        r.order_.push_back(name);
        r.sections_[name] = {type, c.get_bytes(len)};
    }
    return r;
}

bool Reader::has(const std::string& name) const { return sections_.count(name) > 0; }

std::vector<std::string> Reader::names() const { return order_; }

const Reader::Section& Reader::find(const std::string& name, SectionType expected) const {
    auto it = sections_.find(name);
    require(it != sections_.end(), "container: missing section " + name);
    require(it->second.type == expected, "container: wrong type for section " + name);
    return it->second;
}

std::string Reader::bytes(const std::string& name) const {
    return find(name, SectionType::Bytes).payload;
}

Mat Reader::matrix(const std::string& name) const {
    const auto& s = find(name, SectionType::F64Matrix);
    Cursor c{s.payload};
    uint64_t rows = c.get<uint64_t>(), cols = c.get<uint64_t>();
    Mat m(rows, cols);
    for (uint64_t i = 0; i < rows; ++i)
        for (uint64_t j = 0; j < cols; ++j) m(i, j) = c.get<double>();
    return m;
}

std::vector<int64_t> Reader::i64(const std::string& name) const {
    const auto& s = find(name, SectionType::I64Vector);
    Cursor c{s.payload};
    uint64_t n = c.get<uint64_t>();
    std::vector<int64_t> v(n);
    for (auto& x : v) x = c.get<int64_t>();
    return v;
}

std::vector<std::string> Reader::strings(const std::string& name) const {
    const auto& s = find(name, SectionType::StringList);
    Cursor c{s.payload};
    uint64_t n = c.get<uint64_t>();
    std::vector<std::string> v(n);
    for (auto& x : v) x = c.get_bytes(c.get<uint32_t>());
    return v;
}

SpMat Reader::sparse(const std::string& name) const {
    const auto& s = find(name, SectionType::SparseF64);
    Cursor c{s.payload};
    uint64_t rows = c.get<uint64_t>(), cols = c.get<uint64_t>(), nnz = c.get<uint64_t>();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nnz);
    for (uint64_t t = 0; t < nnz; ++t) {
        auto i = c.get<uint64_t>();
        auto j = c.get<uint64_t>();
        double v = c.get<double>();
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
    SpMat m(static_cast<int>(rows), static_cast<int>(cols));
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

std::vector<double> Reader::f64(const std::string& name) const {
    const auto& s = find(name, SectionType::F64Vector);
    Cursor c{s.payload};
    uint64_t n = c.get<uint64_t>();
    std::vector<double> v(n);
    for (auto& x : v) x = c.get<double>();
    return v;
}

}  // namespace gdpw::container
