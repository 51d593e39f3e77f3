#include "imr/serialization.hpp"

#include "imr/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace imr {

namespace {

constexpr const char* kTensorFormat = "imr-canonical-tensor";
constexpr int kTensorVersion = 1;

nlohmann::json matrix_rows(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_rows(const nlohmann::json& rows, Index n, Index r) {
    if (!rows.is_array() || static_cast<Index>(rows.size()) != n) throw ConfigError("matrix: wrong row count");
    Matrix m(n, r);
    for (Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != r) throw ConfigError("matrix: wrong column count");
        for (Index j = 0; j < r; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

void put_le(std::ostream& os, double x) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
}

double get_le(std::istream& is) {
    char buf[8];
    if (!is.read(buf, 8)) throw ConfigError("tensor: truncated binary payload");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    return std::bit_cast<double>(bits);
}

nlohmann::json tensor_header(const CanonicalTensor& t, const char* encoding) {
    return {{"format", kTensorFormat}, {"version", kTensorVersion}, {"order", t.order()},
            {"dims", t.dims()},        {"rank", t.rank()},          {"encoding", encoding},
            {"layout", "row-major"}};
}

struct Header {
    std::vector<Index> dims;
    Index rank = 0;
    std::string encoding;
};

Header parse_header(const nlohmann::json& h) {
    if (h.value("format", "") != kTensorFormat) throw ConfigError("tensor: unknown format");
    if (h.value("version", 0) != kTensorVersion) throw ConfigError("tensor: unsupported version");
    if (h.value("layout", "") != "row-major") throw ConfigError("tensor: unsupported layout");
    Header out;
    out.dims = h.at("dims").get<std::vector<Index>>();
    out.rank = h.at("rank").get<Index>();
    out.encoding = h.at("encoding").get<std::string>();
    if (h.at("order").get<Index>() != static_cast<Index>(out.dims.size())) throw ConfigError("tensor: order/dims mismatch");
    if (out.dims.size() < 2 || out.rank < 0) throw ConfigError("tensor: invalid header");
    for (Index n : out.dims)
        if (n < 1) throw ConfigError("tensor: dims must be positive");
    return out;
}

}  // namespace

nlohmann::json tensor_to_json(const CanonicalTensor& t) {
    auto j = tensor_header(t, "json");
    auto factors = nlohmann::json::array();
    for (const auto& f : t.factors()) factors.push_back(matrix_rows(f));
    j["factors"] = std::move(factors);
    return j;
}

CanonicalTensor tensor_from_json(const nlohmann::json& j) {
    const Header h = parse_header(j);
    const auto& factors = j.at("factors");
    if (factors.size() != h.dims.size()) throw ConfigError("tensor: factor count does not match order");
    std::vector<Matrix> f;
    for (std::size_t mu = 0; mu < h.dims.size(); ++mu) f.push_back(matrix_from_rows(factors[mu], h.dims[mu], h.rank));
    return CanonicalTensor(std::move(f));
}

void write_tensor(std::ostream& os, const CanonicalTensor& t, TensorEncoding enc) {
    if (enc == TensorEncoding::json) {
        os << tensor_to_json(t).dump() << '\n';
        return;
    }
    os << tensor_header(t, "binary").dump() << '\n';
    for (const auto& f : t.factors())
        for (Index i = 0; i < f.rows(); ++i)
            for (Index j = 0; j < f.cols(); ++j) put_le(os, f(i, j));
}

CanonicalTensor read_tensor(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("tensor: missing header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tensor: malformed header: ") + e.what());
    }
    const Header h = parse_header(header);
    if (h.encoding == "json") return tensor_from_json(header);
    if (h.encoding != "binary") throw ConfigError("tensor: unknown encoding");
    std::vector<Matrix> f;
    for (Index n : h.dims) {
        Matrix m(n, h.rank);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < h.rank; ++j) m(i, j) = get_le(is);
        f.push_back(std::move(m));
    }
    return CanonicalTensor(std::move(f));
}

void save_tensor(const std::filesystem::path& path, const CanonicalTensor& t, TensorEncoding enc) {
    std::ostringstream os(std::ios::binary);
    write_tensor(os, t, enc);
    atomic_write(path, os.str());
}

CanonicalTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open tensor file " + path.string());
    return read_tensor(is);
}

nlohmann::json factor_to_json(const FactorMatrix& f) {
    if (const SparseMatrix* s = f.sparse_ptr()) {
        auto triplets = nlohmann::json::array();
        for (Index k = 0; k < s->outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(*s, k); it; ++it) triplets.push_back({it.row(), it.col(), it.value()});
        return {{"storage", "sparse"}, {"rows", f.rows()}, {"cols", f.cols()}, {"triplets", std::move(triplets)}};
    }
    return {{"storage", "dense"}, {"rows", f.rows()}, {"cols", f.cols()}, {"data", matrix_rows(*f.dense_ptr())}};
}

FactorMatrix factor_from_json(const nlohmann::json& j) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto storage = j.at("storage").get<std::string>();
    if (storage == "dense") return FactorMatrix::from_dense(matrix_from_rows(j.at("data"), rows, cols));
    if (storage != "sparse") throw ConfigError("factor: unknown storage " + storage);
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& t : j.at("triplets")) {
        const Index r = t.at(0).get<Index>();
        const Index c = t.at(1).get<Index>();
        if (r < 0 || r >= rows || c < 0 || c >= cols) throw ConfigError("factor: triplet out of range");
        trip.emplace_back(r, c, t.at(2).get<double>());
    }
    SparseMatrix s(rows, cols);
    s.setFromTriplets(trip.begin(), trip.end());
    return FactorMatrix::from_sparse(std::move(s));
}

nlohmann::json operator_to_json(const LowRankOperator& a) {
    auto terms = nlohmann::json::array();
    for (const auto& t : a.terms()) {
        auto term = nlohmann::json::array();
        for (const auto& f : t) term.push_back(factor_to_json(f));
        terms.push_back(std::move(term));
    }
    return {{"format", "imr-lowrank-operator"}, {"version", 1}, {"terms", std::move(terms)}};
}

LowRankOperator operator_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "imr-lowrank-operator") throw ConfigError("operator: unknown format");
    std::vector<LowRankOperator::Term> terms;
    for (const auto& t : j.at("terms")) {
        LowRankOperator::Term term;
        for (const auto& f : t) term.push_back(factor_from_json(f));
        terms.push_back(std::move(term));
    }
    return LowRankOperator(std::move(terms));
}

nlohmann::json metric_to_json(const RankOneMetric& m) {
    auto factors = nlohmann::json::array();
    for (Index mu = 0; mu < m.order(); ++mu) {
        const auto& f = m.factor(mu);
        switch (f.kind()) {
            case MetricKind::identity: factors.push_back({{"kind", "identity"}, {"n", f.size()}}); break;
            case MetricKind::diagonal:
                factors.push_back({{"kind", "diagonal"}, {"diagonal", vector_json(f.diagonal_entries())}});
                break;
            case MetricKind::general:
                factors.push_back({{"kind", "general"}, {"gram", matrix_rows(f.gram())}});
                break;
        }
    }
    return {{"factors", std::move(factors)}};
}

RankOneMetric metric_from_json(const nlohmann::json& j) {
    std::vector<MetricFactor> f;
    for (const auto& e : j.at("factors")) {
        const auto kind = e.at("kind").get<std::string>();
        if (kind == "identity") {
            f.push_back(MetricFactor::identity(e.at("n").get<Index>()));
        } else if (kind == "diagonal") {
            f.push_back(MetricFactor::diagonal(vector_from_json(e.at("diagonal"))));
        } else if (kind == "general") {
            const Index n = static_cast<Index>(e.at("gram").size());
            f.push_back(MetricFactor::general(matrix_from_rows(e.at("gram"), n, n)));
        } else {
            throw ConfigError("metric: unknown factor kind " + kind);
        }
    }
    return RankOneMetric(std::move(f));
}

nlohmann::json problem_to_json(const Problem& p) {
    nlohmann::json j = {{"format", "imr-problem"},
                        {"version", 1},
                        {"meta", p.meta},
                        {"operator", operator_to_json(p.a)},
                        {"rhs", tensor_to_json(p.b)},
                        {"metric", metric_to_json(p.rx)},
                        {"node_x", vector_json(p.node_x)},
                        {"node_y", vector_json(p.node_y)}};
    if (p.qoi) {
        auto means = nlohmann::json::array();
        for (const auto& m : p.qoi->stochastic_means) means.push_back(vector_json(m));
        const Box& r = p.qoi->region;
        j["qoi"] = {{"region", {r.x0, r.x1, r.y0, r.y1}},
                    {"qx", vector_json(p.qoi->qx)},
                    {"stochastic_means", std::move(means)},
                    {"orthonormal", p.qoi->orthonormal}};
    }
    return j;
}

Problem problem_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "imr-problem") throw ConfigError("problem: unknown format");
    Problem p;
    p.meta = j.value("meta", nlohmann::json::object());
    p.a = operator_from_json(j.at("operator"));
    p.b = tensor_from_json(j.at("rhs"));
    p.rx = metric_from_json(j.at("metric"));
    if (j.contains("node_x")) p.node_x = vector_from_json(j.at("node_x"));
    if (j.contains("node_y")) p.node_y = vector_from_json(j.at("node_y"));
    if (j.contains("qoi")) {
        const auto& q = j.at("qoi");
        const auto r = q.at("region").get<std::vector<double>>();
        if (r.size() != 4) throw ConfigError("problem: qoi region needs four numbers");
        QoiSpec spec;
        spec.region = Box{r[0], r[1], r[2], r[3]};
        spec.qx = vector_from_json(q.at("qx"));
        for (const auto& m : q.at("stochastic_means")) spec.stochastic_means.push_back(vector_from_json(m));
        spec.orthonormal = q.value("orthonormal", true);
        p.qoi = spec;
    }
    p.validate();
    return p;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("cannot write " + tmp.string());
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw ConfigError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace imr
